"""Run each report-producing command and validate its JSON against schemas/."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

RUNS = {
    "canard": ["canard", "--t-max", "2.2"],
    "horseshoe": ["horseshoe", "--samples", "100"],
    "foldedeq": ["foldedeq"],
    "slowflow": ["slowflow", "--canard", "--saddle-start", "0.05", "--arc-length", "0.1", "--exits", "dip,slice"],
    "period": ["period", "--eps", "0.01"],
    "detect": ["detect"],
    "sweep": ["sweep", "--na", "2", "--nw", "2", "--starts", "1"],
}
# Exit 4 is a valid outcome for horseshoe and detect; the report is still written.
ALLOWED = {0, 4}


def main():
    fvdp, schemas = Path(sys.argv[1]), Path(sys.argv[2])
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, args in RUNS.items():
            out = Path(tmp) / name
            proc = subprocess.run([str(fvdp), *args, "--out", str(out)], capture_output=True, text=True)
            report = out / f"{name}.json"
            if proc.returncode not in ALLOWED or not report.exists():
                print(f"FAIL {name}: exit {proc.returncode} {proc.stderr.strip()}")
                failed += 1
                continue
            schema = json.loads((schemas / f"{name}.schema.json").read_text())
            doc = json.loads(report.read_text())
            try:
                jsonschema.validate(doc, schema)
            except jsonschema.ValidationError as e:
                print(f"FAIL {name}: {e.message} at {list(e.absolute_path)}")
                failed += 1
                continue
            # A schema that accepts a report missing a key checks nothing.
            doc.pop(next(reversed(doc)))
            if jsonschema.Draft202012Validator(schema).is_valid(doc):
                print(f"FAIL {name}: schema accepts a truncated report")
                failed += 1
                continue
            print(f"ok   {name}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
