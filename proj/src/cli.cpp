#include "fvdp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <memory>
#include <ostream>
#include <sstream>

#include "fvdp/chaos.hpp"
#include "fvdp/integrator.hpp"
#include "fvdp/output.hpp"
#include "fvdp/returnmap.hpp"
#include "fvdp/slowflow.hpp"
#include "fvdp/survey.hpp"

namespace fvdp::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string text_of(double v) { return out::num(v); }
std::string text_of(const std::string& v) { return v; }
std::string text_of(bool v) { return v ? "true" : "false"; }
std::string text_of(long v) { return std::to_string(v); }
std::string text_of(int v) { return std::to_string(v); }
std::string text_of(unsigned v) { return std::to_string(v); }
std::string text_of(std::uint64_t v) { return std::to_string(v); }
std::string text_of(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + out::num(v[i]);
  return s;
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json to_json_value(double v) { return num_json(v); }
template <class T>
json to_json_value(const T& v) {
  return json(v);
}

// Options of one subcommand, remembered so the effective configuration can
// be echoed into reports and written back as a key=value file.
class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& key, T& v, const std::string& help) {
    items_.push_back({key, [&v] { return to_json_value(v); }, [&v] { return text_of(v); }});
    return app_->add_option("--" + key, v, help)->capture_default_str();
  }

  CLI::Option* flag(const std::string& key, bool& v, const std::string& help) {
    items_.push_back({key, [&v] { return json(v); }, [&v] { return text_of(v); }});
    return app_->add_flag("--" + key, v, help);
  }

  json echo() const {
    json j = json::object();
    for (const auto& it : items_) j[it.key] = it.as_json();
    return j;
  }

  std::string dump(const std::string& command) const {
    std::string s = "# fvdp " + command + "\n";
    for (const auto& it : items_) s += it.key + "=" + it.as_text() + "\n";
    return s;
  }

 private:
  struct Item {
    std::string key;
    std::function<json()> as_json;
    std::function<std::string()> as_text;
  };
  CLI::App* app_;
  std::vector<Item> items_;
};

struct Model {
  double a = 1.1;
  double omega = 1.505;
  double eps = 0.001;
  Params params() const { return {a, omega, eps}; }
};

// Flag defaults come from the library preset the command would use anyway.
struct Solver {
  IntegratorConfig base;
  double rtol = base.rtol;
  double atol = base.atol.empty() ? 1e-12 : base.atol[0];
  double h_max = base.h_max;
  long max_steps = base.max_steps;
  std::string method = base.method == Method::dopri5 ? "dopri5" : "rodas4";

  explicit Solver(IntegratorConfig preset) : base(std::move(preset)) {}

  IntegratorConfig make() const {
    IntegratorConfig c = base;
    c.rtol = rtol;
    c.atol = {atol};
    c.h_max = h_max;
    c.max_steps = max_steps;
    c.method = method == "dopri5" ? Method::dopri5 : Method::rodas4;
    return c;
  }
};

void add_model(Options& o, Model& m, bool with_a = true, bool with_omega = true) {
  if (with_a) o.add("a", m.a, "forcing amplitude");
  if (with_omega) o.add("omega", m.omega, "forcing frequency");
  o.add("eps", m.eps, "time-scale ratio (> 0)");
}

void add_solver(Options& o, Solver& s) {
  o.add("rtol", s.rtol, "relative tolerance");
  o.add("atol", s.atol, "absolute tolerance");
  o.add("h-max", s.h_max, "largest step");
  o.add("max-steps", s.max_steps, "step budget per integration");
  o.add("method", s.method, "rodas4 or dopri5")->check(CLI::IsMember({"rodas4", "dopri5"}));
}

json state_json(const State& s) { return {{"x", num_json(s.x)}, {"y", num_json(s.y)}, {"theta", num_json(s.theta)}}; }
json point_json(const SectionPoint& p) { return {{"theta", num_json(p.theta)}, {"y", num_json(p.y)}}; }

json header(const std::string& command, const Options& o) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", o.echo()}};
}

std::string dumps(const json& j) { return j.dump(2) + "\n"; }

struct Context {
  fs::path dir;
  std::ostream& out;
  std::ostream& err;
};

// 3D view of (theta, y, x) flattened by an oblique projection.
out::Point project(const State& s) { return {s.theta + 0.3 * s.y, s.x + 0.35 * s.y}; }

std::vector<out::Point> projected_path(const std::vector<Sample>& samples) {
  std::vector<out::Point> pts;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && std::abs(samples[i].s.theta - samples[i - 1].s.theta) > 0.5) pts.push_back({nan, nan});
    pts.push_back(project(samples[i].s));
  }
  return pts;
}

std::string event_label(const EventRecord& e) {
  if (e.label == events::kBand) return e.sign > 0 ? "band_in" : "band_out";
  return e.label;
}

// ---------------------------------------------------------------- integrate

struct IntegrateArgs {
  Model m;
  Solver s{IntegratorConfig::precise()};
  double x0 = 0.0, y0 = -0.6752, theta0 = 0.41732694;
  double t_max = 3.0;
  double output_dt = 0.0;
};

int cmd_integrate(Context& c, const IntegrateArgs& a, const Options& o) {
  const Params p = a.m.params();
  p.validate();
  if (!(a.t_max >= 0.0)) throw Error(ErrorKind::precondition, "--t-max must be >= 0");
  IntegratorConfig cfg = a.s.make();
  cfg.output_dt = a.output_dt;
  const auto evs = transit_events(p, false);
  Trajectory tr;
  int code = kOk;
  try {
    tr = integrate_with_events(fvdp_vector_field(p), State::make(a.x0, a.y0, a.theta0), 0.0, a.t_max, evs, cfg);
  } catch (const IntegrationError& e) {
    c.err << "integration failed: " << e.what() << " (partial output written)\n";
    tr = e.partial();
    code = kNumeric;
  }

  std::string traj = "t,x,y,theta\n";
  for (const auto& s : tr.samples) {
    traj += out::num(s.t) + "," + out::num(s.s.x) + "," + out::num(s.s.y) + "," + out::num(s.s.theta) + "\n";
  }
  std::string evcsv = "t,label,x,y,theta\n";
  for (const auto& e : tr.events) {
    evcsv += out::num(e.t) + "," + event_label(e) + "," + out::num(e.s.x) + "," + out::num(e.s.y) + "," +
             out::num(e.s.theta) + "\n";
  }
  out::SvgPlot plot("trajectory", "theta + 0.3 y", "x + 0.35 y");
  plot.polyline(projected_path(tr.samples), "#1f4e9c", 1.0);
  std::vector<out::Point> folds, jumps, sections;
  for (const auto& e : tr.events) {
    if (e.label == events::kFoldPlus || e.label == events::kFoldMinus) folds.push_back(project(e.s));
    if (e.label == events::kJump) jumps.push_back(project(e.s));
    if (e.label == events::kSection) sections.push_back(project(e.s));
  }
  plot.markers(folds, "#d62728", 3.0);
  plot.markers(jumps, "#2ca02c", 3.0);
  plot.markers(sections, "#ff7f0e", 3.0);
  plot.legend("#d62728", "fold crossing");
  plot.legend("#2ca02c", "jump onset");
  plot.legend("#ff7f0e", "section x=0");

  out::write_file(c.dir / "trajectory.csv", traj);
  out::write_file(c.dir / "events.csv", evcsv);
  out::write_file(c.dir / "trajectory.svg", plot.str());
  out::write_file(c.dir / "run.cfg", o.dump("integrate"));
  c.out << "integrate: " << tr.samples.size() << " samples, " << tr.events.size() << " events -> "
        << c.dir.string() << "\n";
  return code;
}

// ---------------------------------------------------------------- canard

struct CanardArgs {
  Model m;
  Solver s{CanardConfig{}.integrator};
  double x0 = 0.0, y0 = -0.6752, theta0 = 0.41732694;
  double dtheta = 1e-8;
  double t_max = 3.0;
  double band = 0.0;
  double min_duration = 0.05;
  double dt = 1e-3;
};

json outcome_json(const State& s0, const CanardOutcome& c) {
  return {{"initial", state_json(s0)},
          {"kind", to_string(c.kind)},
          {"canard_start", num_json(c.canard_start)},
          {"canard_end", num_json(c.canard_end)},
          {"canard_duration", num_json(c.canard_duration)},
          {"exit_state", state_json(c.exit_state)},
          {"origin_side", c.origin_side},
          {"exit_side", c.exit_side},
          {"labels", c.labels}};
}

int cmd_canard(Context& c, const CanardArgs& a, const Options& o) {
  const Params p = a.m.params();
  p.validate();
  CanardConfig cc;
  cc.integrator = a.s.make();
  cc.t_max = a.t_max;
  cc.band = a.band;
  cc.min_duration = a.min_duration;
  const State s1 = State::make(a.x0, a.y0, a.theta0);
  const State s2 = State::make(a.x0, a.y0, a.theta0 + a.dtheta);
  const CanardOutcome c1 = classify_canard(s1, p, cc);
  const CanardOutcome c2 = classify_canard(s2, p, cc);
  DivergenceConfig dc;
  dc.integrator = cc.integrator;
  dc.t_max = a.t_max;
  dc.dt = a.dt;
  dc.canard = cc;
  const DivergenceProfile d = divergence_profile(s1, s2, p, dc);

  json j = header("canard", o);
  j["outcomes"] = json::array({outcome_json(s1, c1), outcome_json(s2, c2)});
  std::size_t common = 0;
  while (common < c1.labels.size() && common < c2.labels.size() && c1.labels[common] == c2.labels[common]) ++common;
  j["common_prefix"] = common;
  j["divergence"] = {{"t_exceed", d.t_exceed ? num_json(*d.t_exceed) : json(nullptr)},
                     {"canard_exit", d.canard_exit ? num_json(*d.canard_exit) : json(nullptr)},
                     {"separation_at_exit", num_json(d.separation_at_exit)},
                     {"max_before_canard", num_json(d.max_before_canard)}};

  std::string csv = "t,separation\n";
  for (std::size_t i = 0; i < d.t.size(); ++i) csv += out::num(d.t[i]) + "," + out::num(d.separation[i]) + "\n";

  out::SvgPlot plot("canard pair", "t", "x");
  for (const auto* oc : {&c1, &c2}) {
    std::vector<out::Point> pts;
    for (const auto& s : oc->trajectory.samples) pts.push_back({s.t, s.s.x});
    plot.polyline(pts, oc == &c1 ? "#1f4e9c" : "#d62728", 1.0);
  }
  plot.legend("#1f4e9c", std::string("theta0: ") + to_string(c1.kind));
  plot.legend("#d62728", std::string("theta0 + dtheta: ") + to_string(c2.kind));

  out::write_file(c.dir / "canard.json", dumps(j));
  out::write_file(c.dir / "divergence.csv", csv);
  out::write_file(c.dir / "canard.svg", plot.str());
  out::write_file(c.dir / "run.cfg", o.dump("canard"));
  c.out << "canard: " << to_string(c1.kind) << " / " << to_string(c2.kind) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- horseshoe

struct HorseshoeArgs {
  Model m;
  Solver s{HorseshoeConfig{}.ret.integrator};
  std::vector<double> vertices;
  int samples = 200;
  unsigned jobs = 0;
  double refine_gap = 1e-3;
};

json edge_json(const EdgeImage& e) {
  return {{"samples", e.s.size()},
          {"covers", e.covers},
          {"fold_theta", num_json(e.fold_theta)},
          {"monotone_segments", e.monotone_segments},
          {"theta_extent", num_json(e.theta_extent)},
          {"y_extent", num_json(e.y_extent)},
          {"transverse_extent", num_json(e.transverse_extent)},
          {"failures", e.failures}};
}

int cmd_horseshoe(Context& c, const HorseshoeArgs& a, const Options& o) {
  const Params p = a.m.params();
  p.validate();
  if (a.vertices.size() != 8) throw Error(ErrorKind::precondition, "--vertices takes 8 numbers");
  Quadrilateral q;
  for (std::size_t i = 0; i < 4; ++i) q.v[i] = {a.vertices[2 * i], a.vertices[2 * i + 1]};
  HorseshoeConfig hc;
  hc.ret.integrator = a.s.make();
  hc.jobs = a.jobs;
  hc.refine_gap = a.refine_gap;
  const HorseshoeReport r = horseshoe_check(q, p, a.samples, hc);

  json j = header("horseshoe", o);
  json verts = json::array();
  for (const auto& v : q.v) verts.push_back(point_json(v));
  j["quadrilateral"] = verts;
  j["top"] = edge_json(r.top);
  j["bottom"] = edge_json(r.bottom);
  j["slope"] = num_json(r.slope);
  j["aspect_raw"] = num_json(r.aspect_raw);
  j["aspect_transverse"] = num_json(r.aspect_transverse);
  j["fold_left"] = r.fold_left;
  j["complete"] = r.complete;
  j["evidence"] = r.evidence;

  std::string csv = "edge,s,theta,y,image_theta,image_y\n";
  for (const auto* e : {&r.top, &r.bottom}) {
    const char* name = e == &r.top ? "top" : "bottom";
    for (std::size_t i = 0; i < e->s.size(); ++i) {
      csv += std::string(name) + "," + out::num(e->s[i]) + "," + out::num(e->preimage[i].theta) + "," +
             out::num(e->preimage[i].y) + "," + out::num(e->image[i].theta) + "," + out::num(e->image[i].y) + "\n";
    }
  }
  out::SvgPlot plot("horseshoe: edge images", "theta", "y - slope * theta");
  auto tr = [&](const SectionPoint& s) { return out::Point{s.theta, s.y - r.slope * s.theta}; };
  std::vector<out::Point> quad;
  for (int k : {0, 1, 3, 2, 0}) quad.push_back(tr(q.v[static_cast<std::size_t>(k)]));
  plot.polyline(quad, "#444", 1.5);
  for (const auto* e : {&r.top, &r.bottom}) {
    std::vector<out::Point> pts;
    for (const auto& s : e->image) pts.push_back(tr(s));
    plot.polyline(pts, e == &r.top ? "#1f4e9c" : "#d62728", 1.0);
  }
  plot.legend("#444", "quadrilateral");
  plot.legend("#1f4e9c", "top edge image");
  plot.legend("#d62728", "bottom edge image");

  out::write_file(c.dir / "horseshoe.json", dumps(j));
  out::write_file(c.dir / "horseshoe_edges.csv", csv);
  out::write_file(c.dir / "horseshoe.svg", plot.str());
  out::write_file(c.dir / "run.cfg", o.dump("horseshoe"));
  c.out << "horseshoe: evidence=" << (r.evidence ? "true" : "false") << "\n";
  if (!r.complete) return kNumeric;
  return r.evidence ? kOk : kInconclusive;
}

// ---------------------------------------------------------------- foldedeq

struct FoldedArgs {
  Model m;
};

int cmd_foldedeq(Context& c, const FoldedArgs& a, const Options& o) {
  const Params p{a.m.a, a.m.omega, 0.0};
  p.validate(true);
  const auto eqs = folded_equilibria(p);
  json j = header("foldedeq", o);
  json list = json::array();
  for (const auto& e : eqs) {
    json ev = json::array();
    for (const auto& l : e.eigenvalues) ev.push_back({{"re", num_json(l.real())}, {"im", num_json(l.imag())}});
    list.push_back({{"x", e.x},
                    {"theta", num_json(e.theta)},
                    {"kind", to_string(e.kind)},
                    {"eigenvalues", ev},
                    {"det", num_json(e.det)},
                    {"trace", num_json(e.trace)},
                    {"residual", num_json(p.a * std::sin(kTwoPi * e.theta) - e.x)}});
  }
  j["count"] = eqs.size();
  j["equilibria"] = list;
  out::write_file(c.dir / "foldedeq.json", dumps(j));
  out::write_file(c.dir / "run.cfg", o.dump("foldedeq"));
  c.out << "foldedeq: " << eqs.size() << " equilibria\n";
  return kOk;
}

// ---------------------------------------------------------------- slowflow

struct SlowflowArgs {
  Model m;
  double x0 = 2.0, y0 = 2.0 / 3.0, theta0 = 0.0;
  double t_max = 5.0;
  bool singular = false;
  bool canard = false;
  double capture_radius = 1e-6;
  double arc_length = 0.5;
  std::string exits = "slice";
  double saddle_start = 0.0;
};

int cmd_slowflow(Context& c, const SlowflowArgs& a, const Options& o) {
  HybridTrajectory h;
  double period = std::numeric_limits<double>::quiet_NaN();
  if (a.singular) {
    const SingularOrbit so = singular_orbit_unforced();
    h = so.orbit;
    period = so.period;
  } else {
    const Params p{a.m.a, a.m.omega, 0.0};
    p.validate(true);
    std::optional<CanardPolicy> pol;
    if (a.canard) {
      CanardPolicy cp;
      cp.capture_radius = a.capture_radius;
      cp.max_arc_length = a.arc_length;
      cp.exits.clear();
      std::stringstream ss(a.exits);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (tok == "dip") cp.exits.push_back(CanardExit::dip);
        else if (tok == "slice") cp.exits.push_back(CanardExit::slice);
        else throw Error(ErrorKind::precondition, "--exits takes dip/slice items");
      }
      pol = cp;
    }
    State s0 = State::make(a.x0, a.y0, a.theta0);
    if (a.saddle_start > 0.0) {
      const auto eqs = folded_equilibria(p);
      const auto it = std::find_if(eqs.begin(), eqs.end(),
                                   [](const FoldedEquilibrium& e) { return e.kind == FoldedKind::saddle; });
      if (it == eqs.end()) throw Error(ErrorKind::precondition, "--saddle-start needs a folded saddle (|a| > 1)");
      s0 = folded_saddle_approach(*it, p, a.saddle_start);
    }
    h = hybrid_flow_forced(s0, p, a.t_max, pol);
  }

  json j = header("slowflow", o);
  json arcs = json::array();
  std::string csv = "arc,sheet,t,x,y,theta\n";
  out::SvgPlot plot("singular flow", "theta", "x");
  for (std::size_t i = 0; i < h.arcs.size(); ++i) {
    const auto& arc = h.arcs[i];
    arcs.push_back({{"sheet", to_string(arc.sheet)},
                    {"t_start", num_json(arc.t.front())},
                    {"t_end", num_json(arc.t.back())},
                    {"start", state_json(arc.points.front())},
                    {"end", state_json(arc.points.back())},
                    {"points", arc.points.size()}});
    std::vector<out::Point> pts;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < arc.points.size(); ++k) {
      const auto& s = arc.points[k];
      csv += std::to_string(i) + "," + to_string(arc.sheet) + "," + out::num(arc.t[k]) + "," + out::num(s.x) + "," +
             out::num(s.y) + "," + out::num(s.theta) + "\n";
      if (k > 0 && std::abs(s.theta - arc.points[k - 1].theta) > 0.5) pts.push_back({nan, nan});
      pts.push_back({s.theta, s.x});
    }
    plot.polyline(pts, arc.sheet == Sheet::repelling ? "#d62728" : "#1f4e9c", 1.5);
  }
  json jumps = json::array();
  for (const auto& jr : h.jumps) {
    jumps.push_back({{"t", num_json(jr.t)},
                     {"from", state_json(jr.from)},
                     {"to", state_json(jr.to)},
                     {"passage", jr.passage}});
    plot.polyline({{jr.from.theta, jr.from.x}, {jr.to.theta, jr.to.x}}, "#999", 0.8);
  }
  plot.legend("#1f4e9c", "attracting sheet");
  plot.legend("#d62728", "repelling sheet (canard)");
  plot.legend("#999", "jump");
  j["arcs"] = arcs;
  j["jumps"] = jumps;
  j["t_end"] = num_json(h.t_end);
  j["closed"] = h.stop == HybridStop::closed_orbit;
  j["period"] = num_json(period);

  out::write_file(c.dir / "slowflow.json", dumps(j));
  out::write_file(c.dir / "slowflow.csv", csv);
  out::write_file(c.dir / "slowflow.svg", plot.str());
  out::write_file(c.dir / "run.cfg", o.dump("slowflow"));
  c.out << "slowflow: " << h.arcs.size() << " arcs, " << h.jumps.size() << " jumps\n";
  return kOk;
}

// ---------------------------------------------------------------- period

struct PeriodArgs {
  double eps = 0.01;
  Solver s{VdpPeriodConfig{}.integrator};
  int transient = 5;
  int periods = 3;
  double t_max = 60.0;
};

int cmd_period(Context& c, const PeriodArgs& a, const Options& o) {
  VdpPeriodConfig cfg;
  cfg.integrator = a.s.make();
  cfg.integrator.store_samples = false;
  cfg.transient_crossings = a.transient;
  cfg.periods = a.periods;
  cfg.t_max = a.t_max;
  const PeriodResult r = vdp_period(a.eps, cfg);
  VdpPeriodConfig fine = cfg;
  fine.integrator.rtol /= 10.0;
  fine.integrator.atol = {cfg.integrator.atol.front() / 10.0};
  const PeriodResult rf = vdp_period(a.eps, fine);

  json j = header("period", o);
  j["eps"] = a.eps;
  j["period"] = num_json(r.period);
  j["reference"] = num_json(r.singular);
  j["gap"] = num_json(r.gap);
  j["periods"] = r.periods;
  j["half_asymmetry"] = num_json(r.half_asymmetry);
  j["refined_period"] = num_json(rf.period);
  j["refinement_change"] = num_json(std::abs(rf.period - r.period));
  j["config_digest"] = r.config_digest;
  out::write_file(c.dir / "period.json", dumps(j));
  out::write_file(c.dir / "run.cfg", o.dump("period"));
  c.out << "period: T = " << out::num(r.period) << ", T0 = " << out::num(r.singular) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  Model m;
  Solver s{ReturnConfig{}.integrator};
  double theta0 = 0.0, y0 = -0.6752;
  int n_transient = 20;
  int n_detect = 16;
  double tol = 1e-6;
  double max_transit = 50.0;
};

json verdict_json(const PeriodVerdict& v) {
  json orbit = json::array();
  for (const auto& pt : v.orbit) orbit.push_back(point_json(pt));
  return {{"kind", to_string(v.kind)},     {"map_period", v.map_period}, {"subharmonic", v.subharmonic},
          {"phase_wraps", v.phase_wraps},  {"orbit_time", num_json(v.orbit_time)},
          {"deviation", num_json(v.deviation)}, {"orbit", orbit}, {"last", point_json(v.last)},
          {"error", v.error}};
}

int cmd_detect(Context& c, const DetectArgs& a, const Options& o) {
  const Params p = a.m.params();
  p.validate();
  ReturnConfig rc;
  rc.integrator = a.s.make();
  rc.max_transit_time = a.max_transit;
  const PeriodVerdict v = detect_period({a.theta0, a.y0}, p, rc, {a.n_transient, a.n_detect, a.tol});
  json j = header("detect", o);
  j["start"] = point_json({a.theta0, a.y0});
  j["verdict"] = verdict_json(v);
  out::write_file(c.dir / "detect.json", dumps(j));
  out::write_file(c.dir / "run.cfg", o.dump("detect"));
  c.out << "detect: " << to_string(v.kind);
  if (v.kind == PeriodKind::periodic) c.out << " p=" << v.map_period << " n=" << v.subharmonic;
  c.out << "\n";
  if (v.kind == PeriodKind::failed) {
    c.err << "detect failed: " << v.error << "\n";
    return kNumeric;
  }
  return v.kind == PeriodKind::inconclusive ? kInconclusive : kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  double a_min = 3.5, a_max = 5.0, omega_min = 2.0, omega_max = 2.8;
  long na = 12, nw = 12;
  double eps = 0.01;
  Solver s{SweepConfig{}.ret.integrator};
  int starts = 8;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  int n_transient = 20;
  int n_detect = 16;
  double tol = 1e-6;
};

int cmd_sweep(Context& c, const SweepArgs& a, const Options& o) {
  if (a.na < 1 || a.nw < 1) throw Error(ErrorKind::precondition, "grid dimensions must be >= 1");
  SweepConfig sc;
  sc.ret.integrator = a.s.make();
  sc.extra_starts = a.starts;
  sc.seed = a.seed;
  sc.jobs = a.jobs;
  sc.period = {a.n_transient, a.n_detect, a.tol};
  const SweepGrid g = sweep({a.a_min, a.a_max}, {a.omega_min, a.omega_max}, a.eps, static_cast<std::size_t>(a.na),
                            static_cast<std::size_t>(a.nw), sc);
  const SweepSummary sum = summarize(g);

  json j = header("sweep", o);
  j["grid"] = {{"a", {{"lo", a.a_min}, {"hi", a.a_max}, {"n", a.na}}},
               {"omega", {{"lo", a.omega_min}, {"hi", a.omega_max}, {"n", a.nw}}},
               {"eps", a.eps}};
  json cells = json::array();
  std::string csv = "ia,iw,a,omega,verdict,subharmonic,attractors,aperiodic,inconclusive,failed,interior\n";
  out::SvgPlot plot("sweep: subharmonic of the standard start", "omega", "a");
  const double da = g.na > 1 ? (a.a_max - a.a_min) / static_cast<double>(g.na - 1) : 1.0;
  const double dw = g.nw > 1 ? (a.omega_max - a.omega_min) / static_cast<double>(g.nw - 1) : 1.0;
  static const char* palette[] = {"#c6dbef", "#6baed6", "#2171b5", "#08306b", "#fdae6b", "#e6550d", "#a63603"};
  for (const auto& cell : g.cells) {
    json atts = json::array();
    std::string subs;
    for (const auto& at : cell.attractors) {
      atts.push_back({{"map_period", at.map_period},
                      {"subharmonic", at.subharmonic},
                      {"orbit_time", num_json(at.orbit_time)},
                      {"point", point_json(at.point)},
                      {"hits", at.hits}});
      subs += (subs.empty() ? "" : ";") + std::to_string(at.subharmonic);
    }
    const bool interior = strip_interior(g, cell.ia, cell.iw);
    cells.push_back({{"ia", cell.ia},
                     {"iw", cell.iw},
                     {"a", num_json(cell.a)},
                     {"omega", num_json(cell.omega)},
                     {"verdict", to_string(cell.verdict)},
                     {"subharmonic", cell.subharmonic},
                     {"attractors", atts},
                     {"aperiodic", cell.aperiodic},
                     {"inconclusive", cell.inconclusive},
                     {"failed", cell.failed},
                     {"errors", cell.errors},
                     {"strip_interior", interior}});
    csv += std::to_string(cell.ia) + "," + std::to_string(cell.iw) + "," + out::num(cell.a) + "," +
           out::num(cell.omega) + "," + to_string(cell.verdict) + "," + std::to_string(cell.subharmonic) + "," + subs +
           "," + std::to_string(cell.aperiodic) + "," + std::to_string(cell.inconclusive) + "," +
           std::to_string(cell.failed) + "," + (interior ? "1" : "0") + "\n";
    const char* fill = "#eeeeee";
    if (cell.verdict == PeriodKind::periodic && cell.subharmonic > 0) fill = palette[(cell.subharmonic - 1) % 7];
    if (cell.attractors.size() > 1) fill = "#31a354";
    plot.rect(cell.omega - dw / 2, cell.a - da / 2, cell.omega + dw / 2, cell.a + da / 2, fill);
  }
  plot.set_bounds(a.omega_min - dw / 2, a.omega_max + dw / 2, a.a_min - da / 2, a.a_max + da / 2);
  plot.legend("#31a354", "coexisting attractors");
  plot.legend("#eeeeee", "no periodic verdict");
  j["cells"] = cells;
  j["summary"] = {{"interior_cells", sum.interior_cells},
                  {"interior_subharmonics", sum.interior_subharmonics},
                  {"even_interior", sum.even_interior},
                  {"overlaps", sum.overlaps}};

  out::write_file(c.dir / "sweep.json", dumps(j));
  out::write_file(c.dir / "sweep.csv", csv);
  out::write_file(c.dir / "sweep.svg", plot.str());
  out::write_file(c.dir / "run.cfg", o.dump("sweep"));
  c.out << "sweep: " << g.cells.size() << " cells, " << sum.interior_cells << " strip-interior, "
        << sum.overlaps.size() << " overlap cells\n";
  if (!sum.even_interior.empty()) c.err << "warning: even subharmonic in " << sum.even_interior.size() << " cells\n";
  return kOk;
}

// ---------------------------------------------------------------- driver

// Reads key=value lines; '#' and ';' start comments.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CLI::FileError::Missing(path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ConversionError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

// Appends config-file entries that the command line does not already set.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const auto kv = read_config(path);
  std::vector<std::string> extra;
  for (const auto& [key, value] : kv) {
    const std::string opt = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& t) {
      return t == opt || t.rfind(opt + "=", 0) == 0;
    });
    if (!given) extra.push_back(opt + "=" + value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("FVDP_OUT_DIR"); env && *env) return env;
  return "fvdp-out";
}

int exit_for(const Error& e) {
  return e.kind() == ErrorKind::invalid_state || e.kind() == ErrorKind::precondition ? kUsage : kNumeric;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forced van der Pol: trajectories, canards, horseshoe evidence, slow flow and parameter sweeps",
               "fvdp"};
  app.require_subcommand(1);
  std::string out_dir;
  std::string config_path;

  std::vector<std::function<int(Context&)>> runners;
  std::vector<CLI::App*> subs;
  std::vector<std::unique_ptr<Options>> opts;
  auto command = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--out", out_dir, "output directory (default $FVDP_OUT_DIR or ./fvdp-out)");
    sub->add_option("--config", config_path, "key=value file; command-line flags override it");
    subs.push_back(sub);
    opts.push_back(std::make_unique<Options>(sub));
    return std::pair<CLI::App*, Options*>{sub, opts.back().get()};
  };

  IntegrateArgs ia;
  {
    auto [sub, o] = command("integrate", "integrate one trajectory with the labelled event log");
    add_model(*o, ia.m);
    o->add("x0", ia.x0, "initial x");
    o->add("y0", ia.y0, "initial y");
    o->add("theta0", ia.theta0, "initial phase");
    o->add("t-max", ia.t_max, "final time (>= 0)");
    o->add("output-dt", ia.output_dt, "uniform sample spacing (0: every step)");
    add_solver(*o, ia.s);
    runners.push_back([&, o = o](Context& c) { return cmd_integrate(c, ia, *o); });
  }
  CanardArgs ca;
  {
    auto [sub, o] = command("canard", "dip/slice classification and divergence of a nearby pair");
    add_model(*o, ca.m);
    o->add("x0", ca.x0, "initial x");
    o->add("y0", ca.y0, "initial y");
    o->add("theta0", ca.theta0, "initial phase of the first trajectory");
    o->add("dtheta", ca.dtheta, "phase offset of the second trajectory");
    o->add("t-max", ca.t_max, "integration horizon");
    o->add("band", ca.band, "repelling-sheet band width (<= 0: 10 sqrt(eps))");
    o->add("min-duration", ca.min_duration, "slow-time residence that counts as a canard");
    o->add("dt", ca.dt, "divergence sampling interval");
    add_solver(*o, ca.s);
    runners.push_back([&, o = o](Context& c) { return cmd_canard(c, ca, *o); });
  }
  HorseshoeArgs ha;
  {
    const auto q = Quadrilateral::canard_wedge();
    for (const auto& v : q.v) ha.vertices.insert(ha.vertices.end(), {v.theta, v.y});
    auto [sub, o] = command("horseshoe", "map the quadrilateral's top and bottom edges through the return map");
    add_model(*o, ha.m);
    o->add("vertices", ha.vertices, "theta,y of v0..v3 (top edge v0-v1, bottom edge v2-v3)")
        ->expected(8)
        ->delimiter(',');
    o->add("samples", ha.samples, "samples per edge (>= 100)");
    o->add("refine-gap", ha.refine_gap, "theta gap that triggers midpoint refinement");
    o->add("jobs", ha.jobs, "worker threads (0: all cores)");
    add_solver(*o, ha.s);
    runners.push_back([&, o = o](Context& c) { return cmd_horseshoe(c, ha, *o); });
  }
  FoldedArgs fa;
  {
    auto [sub, o] = command("foldedeq", "folded equilibria of the desingularized slow flow");
    o->add("a", fa.m.a, "forcing amplitude");
    o->add("omega", fa.m.omega, "forcing frequency");
    runners.push_back([&, o = o](Context& c) { return cmd_foldedeq(c, fa, *o); });
  }
  SlowflowArgs sa;
  {
    auto [sub, o] = command("slowflow", "singular hybrid flow: slow arcs, fold jumps, optional canards");
    o->add("a", sa.m.a, "forcing amplitude");
    o->add("omega", sa.m.omega, "forcing frequency");
    o->add("x0", sa.x0, "initial x (selects the sheet, |x0| >= 1)");
    o->add("y0", sa.y0, "initial y");
    o->add("theta0", sa.theta0, "initial phase");
    o->add("t-max", sa.t_max, "slow-time horizon");
    o->flag("singular", sa.singular, "closed singular orbit of the unforced oscillator");
    o->flag("canard", sa.canard, "continue through folded saddles onto the repelling sheet");
    o->add("capture-radius", sa.capture_radius, "distance to a folded saddle that starts a canard");
    o->add("arc-length", sa.arc_length, "canard arc length before the exit jump");
    o->add("exits", sa.exits, "comma list of dip/slice, used cyclically");
    o->add("saddle-start", sa.saddle_start,
           "> 0: start on the first folded saddle's stable manifold at this distance (overrides x0, y0, theta0)");
    runners.push_back([&, o = o](Context& c) { return cmd_slowflow(c, sa, *o); });
  }
  PeriodArgs pa;
  {
    auto [sub, o] = command("period", "unforced relaxation period against its singular limit");
    o->add("eps", pa.eps, "time-scale ratio in [1e-4, 1]");
    o->add("transient", pa.transient, "rising x=0 crossings discarded");
    o->add("periods", pa.periods, "periods averaged");
    o->add("t-max", pa.t_max, "integration horizon");
    add_solver(*o, pa.s);
    runners.push_back([&, o = o](Context& c) { return cmd_period(c, pa, *o); });
  }
  DetectArgs da;
  {
    auto [sub, o] = command("detect", "return-map period detection from one section point");
    add_model(*o, da.m);
    o->add("theta0", da.theta0, "section phase");
    o->add("y0", da.y0, "section y (< 0)");
    o->add("n-transient", da.n_transient, "returns discarded");
    o->add("n-detect", da.n_detect, "returns examined");
    o->add("tol", da.tol, "periodicity tolerance");
    o->add("max-transit", da.max_transit, "longest allowed transit time");
    add_solver(*o, da.s);
    runners.push_back([&, o = o](Context& c) { return cmd_detect(c, da, *o); });
  }
  SweepArgs wa;
  {
    auto [sub, o] = command("sweep", "(a, omega) grid of period verdicts with multi-start attractor search");
    o->add("a-min", wa.a_min, "lowest a");
    o->add("a-max", wa.a_max, "highest a");
    o->add("omega-min", wa.omega_min, "lowest omega");
    o->add("omega-max", wa.omega_max, "highest omega");
    o->add("na", wa.na, "grid points in a");
    o->add("nw", wa.nw, "grid points in omega");
    o->add("eps", wa.eps, "time-scale ratio");
    o->add("starts", wa.starts, "seeded random starts per cell besides the standard one");
    o->add("seed", wa.seed, "random seed");
    o->add("jobs", wa.jobs, "worker threads (0: all cores)");
    o->add("n-transient", wa.n_transient, "returns discarded");
    o->add("n-detect", wa.n_detect, "returns examined");
    o->add("tol", wa.tol, "periodicity tolerance");
    add_solver(*o, wa.s);
    runners.push_back([&, o = o](Context& c) { return cmd_sweep(c, wa, *o); });
  }

  std::vector<std::string> args;
  try {
    args = merge_config(raw_args);
  } catch (const CLI::Error& e) {
    err << "fvdp: " << e.what() << "\n";
    return kUsage;
  }
  std::vector<const char*> argv{"fvdp"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  Context ctx{out_dir.empty() ? default_out_dir() : fs::path(out_dir), out, err};
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return runners[i](ctx);
    } catch (const Error& e) {
      err << "fvdp " << subs[i]->get_name() << ": " << to_string(e.kind()) << ": " << e.what() << "\n";
      return exit_for(e);
    } catch (const fs::filesystem_error& e) {
      err << "fvdp " << subs[i]->get_name() << ": " << e.what() << "\n";
      return kNumeric;
    }
  }
  return kUsage;
}

}  // namespace fvdp::cli
