#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fvdp::cli {

inline constexpr const char* kSchemaVersion = "1.0";

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kInconclusive = 4 };

// args excludes the program name. Output files go to --out, else $FVDP_OUT_DIR,
// else ./fvdp-out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fvdp::cli
