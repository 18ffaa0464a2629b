#include "fvdp/slowflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fvdp {

std::array<double, 2> desing_field(double x, double theta, const Params& p) noexcept {
  return {-x + p.a * std::sin(kTwoPi * theta), p.omega * (x * x - 1.0)};
}

std::array<double, 2> slow_field_xtheta(double x, double theta, const Params& p) {
  const double g = x * x - 1.0;
  if (g == 0.0) throw Error(ErrorKind::precondition, "slow flow is singular on the fold");
  const auto d = desing_field(x, theta, p);
  return {d[0] / g, d[1] / g};
}

std::array<std::array<double, 2>, 2> desing_jacobian(double x, double theta, const Params& p) noexcept {
  return {{{-1.0, kTwoPi * p.a * std::cos(kTwoPi * theta)}, {2.0 * p.omega * x, 0.0}}};
}

const char* to_string(FoldedKind kind) noexcept {
  switch (kind) {
    case FoldedKind::saddle: return "saddle";
    case FoldedKind::node: return "node";
    case FoldedKind::focus: return "focus";
    case FoldedKind::degenerate: return "degenerate";
  }
  return "unknown";
}

const char* to_string(Sheet sheet) noexcept {
  switch (sheet) {
    case Sheet::positive: return "positive";
    case Sheet::negative: return "negative";
    case Sheet::repelling: return "repelling";
  }
  return "unknown";
}

FoldedEquilibrium classify_folded(double x, double theta, const Params& p) {
  p.validate(true);
  const auto j = desing_jacobian(x, theta, p);
  FoldedEquilibrium eq;
  eq.x = x;
  eq.theta = reduce_phase(theta);
  eq.trace = j[0][0] + j[1][1];
  eq.det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
  const double disc = eq.trace * eq.trace - 4.0 * eq.det;
  const std::complex<double> root = std::sqrt(std::complex<double>(disc, 0.0));
  eq.eigenvalues = {(eq.trace + root) / 2.0, (eq.trace - root) / 2.0};
  const double scale = 1.0 + 2.0 * kTwoPi * p.omega * std::abs(p.a);
  if (std::abs(eq.det) <= 1e-12 * scale) {
    eq.kind = FoldedKind::degenerate;
  } else if (eq.det < 0.0) {
    eq.kind = FoldedKind::saddle;
  } else {
    eq.kind = disc >= 0.0 ? FoldedKind::node : FoldedKind::focus;
  }
  return eq;
}

std::vector<FoldedEquilibrium> folded_equilibria(const Params& p) {
  p.validate(true);
  std::vector<FoldedEquilibrium> out;
  const double aa = std::abs(p.a);
  if (aa < 1.0) return out;
  for (double x : {1.0, -1.0}) {
    const double base = std::asin(x / p.a) / kTwoPi;
    if (aa == 1.0) {
      FoldedEquilibrium eq = classify_folded(x, base, p);
      eq.kind = FoldedKind::degenerate;
      out.push_back(eq);
      continue;
    }
    std::array<double, 2> th{reduce_phase(base), reduce_phase(0.5 - base)};
    std::sort(th.begin(), th.end());
    for (double t : th) out.push_back(classify_folded(x, t, p));
  }
  return out;
}

namespace {

using V4 = ode::Vec<4>;  // (x, t, unwrapped theta, arc length) against desingularized time

// Folds (|x| = 1) and jump landings (|x| = 2) share |y| = kFoldY exactly, so
// jumps between them preserve y bitwise.
State on_sheet(double x, double theta) {
  const double ax = std::abs(x);
  double y = x * x * x / 3.0 - x;
  if (ax == 1.0) y = x > 0 ? -kFoldY : kFoldY;
  if (ax == 2.0) y = x > 0 ? kFoldY : -kFoldY;
  return State{x, y, reduce_phase(theta)};
}

ode::System<4> sheet_system(const Params& p, double sigma) {
  return {[p, sigma](const V4& u) {
            const auto d = desing_field(u[0], u[2], p);
            const double g = u[0] * u[0] - 1.0;
            return V4{sigma * d[0], sigma * g, sigma * d[1], std::hypot(d[0], d[1])};
          },
          {}};
}

ode::EventFn<4> level4(std::size_t c, double value, ode::Direction dir, const std::string& label) {
  return {[c, value](double, const V4& u) { return u[c] - value; }, dir, true, label, {}};
}

ode::EventFn<4> near_point(double xe, double the, double r, const std::string& label) {
  return {[xe, the, r](double, const V4& u) {
            const double dx = u[0] - xe;
            const double dth = phase_difference(the, u[2]);
            return dx * dx + dth * dth - r * r;
          },
          ode::Direction::falling, true, label, {}};
}

struct ArcResult {
  SlowArc arc;
  V4 end{};
  std::string reason;
  std::size_t which = 0;  // index into the equilibria for "near" stops
};

ArcResult run_arc(const ode::System<4>& sys, Sheet sheet, const V4& u0, double t_max,
                  std::vector<ode::EventFn<4>> evs, const HybridConfig& cfg) {
  evs.push_back(level4(1, t_max, ode::Direction::rising, "time"));
  ode::IntegratorConfig icfg = cfg.integrator;
  const double tau_end = 1e3 * (1.0 + t_max);
  const auto raw = ode::solve<4>(sys, 0.0, u0, tau_end, icfg, evs);
  ArcResult res;
  res.arc.sheet = sheet;
  for (std::size_t i = 0; i < raw.t.size(); ++i) {
    res.arc.t.push_back(raw.u[i][1]);
    res.arc.points.push_back(on_sheet(raw.u[i][0], raw.u[i][2]));
  }
  res.end = raw.u_final;
  if (res.arc.t.empty() || res.arc.t.back() < raw.u_final[1]) {
    res.arc.t.push_back(raw.u_final[1]);
    res.arc.points.push_back(on_sheet(raw.u_final[0], raw.u_final[2]));
  }
  if (raw.termination == ode::Termination::terminal_event) {
    const auto& label = evs[raw.events.back().index].label;
    res.reason = label;
    if (label.rfind("near", 0) == 0) res.which = std::stoul(label.substr(4));
  } else {
    res.reason = "stalled";
  }
  return res;
}

}  // namespace

State folded_saddle_approach(const FoldedEquilibrium& eq, const Params& p, double distance) {
  if (eq.kind != FoldedKind::saddle) throw Error(ErrorKind::precondition, "equilibrium is not a folded saddle");
  if (!(distance > 0.0 && distance < 0.5)) throw Error(ErrorKind::precondition, "distance must lie in (0, 0.5)");
  const double lam = std::min(eq.eigenvalues[0].real(), eq.eigenvalues[1].real());
  double vx = lam, vth = 2.0 * p.omega * eq.x;
  if (vx * eq.x < 0.0) {
    vx = -vx;
    vth = -vth;
  }
  const double nv = std::hypot(vx, vth);
  const double d0 = 1e-9;
  // Reversed desingularized flow expands the stable direction away from the saddle.
  const ode::System<2> sys{[p](const ode::Vec<2>& u) {
                             const auto d = desing_field(u[0], u[1], p);
                             return ode::Vec<2>{-d[0], -d[1]};
                           },
                           {}};
  const double xe = eq.x, the = eq.theta;
  std::vector<ode::EventFn<2>> evs{{[xe, the, distance](double, const ode::Vec<2>& u) {
                                      return std::hypot(u[0] - xe, u[1] - the) - distance;
                                    },
                                    ode::Direction::rising, true, "reach", {}}};
  ode::IntegratorConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = {1e-14};
  cfg.fold_step_cap = false;
  cfg.store_samples = false;
  const auto raw = ode::solve<2>(sys, 0.0, {xe + d0 * vx / nv, the + d0 * vth / nv}, 100.0, cfg, evs);
  if (raw.termination != ode::Termination::terminal_event) {
    throw Error(ErrorKind::no_convergence, "stable manifold did not reach the requested distance");
  }
  return on_sheet(raw.u_final[0], raw.u_final[1]);
}

HybridTrajectory hybrid_flow_forced(const State& s0, const Params& p, double t_max,
                                    const std::optional<CanardPolicy>& policy, const HybridConfig& cfg) {
  p.validate(true);
  if (!s0.finite()) throw Error(ErrorKind::invalid_state, "initial state has nonfinite components");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorKind::precondition, "t_max must be positive");
  if (std::abs(s0.x) < 1.0) throw Error(ErrorKind::precondition, "start must lie on an attracting sheet (|x| >= 1)");
  if (policy) {
    if (!(policy->capture_radius > 0.0) || !(policy->max_arc_length > 0.0) || policy->exits.empty()) {
      throw Error(ErrorKind::precondition, "canard policy needs positive radius, arc length and an exit list");
    }
  }

  const auto eqs = folded_equilibria(p);
  const double radius = policy ? std::max(policy->capture_radius, cfg.singular_tolerance) : cfg.singular_tolerance;

  HybridTrajectory out;
  Side side = s0.x > 0.0 ? Side::positive : Side::negative;
  const BranchRoot start = stable_branch_solve(s0.y, side);
  if (start.at_fold) throw Error(ErrorKind::precondition, "start lies on a fold");
  double x = start.x;
  double t = 0.0;
  double theta = s0.theta;  // unwrapped along the run
  std::size_t canards = 0;

  while (true) {
    if (static_cast<int>(out.jumps.size()) > cfg.max_jumps) {
      throw Error(ErrorKind::step_budget, "hybrid flow exceeded the jump budget");
    }
    const double xf = side == Side::positive ? 1.0 : -1.0;
    std::vector<ode::EventFn<4>> evs;
    evs.push_back(level4(0, xf, side == Side::positive ? ode::Direction::falling : ode::Direction::rising, "fold"));
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      if (eqs[i].x == xf) evs.push_back(near_point(eqs[i].x, eqs[i].theta, radius, "near" + std::to_string(i)));
    }
    // Real time runs forward on the attracting sheets with the desingularized orientation.
    auto arc = run_arc(sheet_system(p, 1.0), side == Side::positive ? Sheet::positive : Sheet::negative,
                       V4{x, t, theta, 0.0}, t_max, evs, cfg);
    t = arc.end[1];
    theta = arc.end[2];
    x = arc.end[0];
    const std::string reason = arc.reason;
    if (!out.jumps.empty()) arc.arc.points.front() = out.jumps.back().to;
    out.arcs.push_back(std::move(arc.arc));

    if (reason == "time") break;
    if (reason == "stalled") {
      throw Error(ErrorKind::no_convergence, "slow arc stalled before reaching a fold");
    }
    if (reason == "fold") {
      for (const auto& eq : eqs) {
        if (eq.x == xf && std::abs(phase_difference(eq.theta, theta)) < cfg.singular_tolerance) {
          throw Error(ErrorKind::nondeterminism, "fold reached at a folded singularity");
        }
      }
      const Fold fold = side == Side::positive ? Fold::plus : Fold::minus;
      const State to = jump_target(fold, reduce_phase(theta));
      out.arcs.back().points.back() = on_sheet(xf, theta);
      out.jumps.push_back({t, on_sheet(xf, theta), to});
      x = to.x;
      side = side == Side::positive ? Side::negative : Side::positive;
      continue;
    }

    // Arrival at a folded singularity.
    const FoldedEquilibrium& eq = eqs[arc.which];
    if (!policy || !(eq.kind == FoldedKind::saddle || eq.kind == FoldedKind::node)) {
      throw Error(ErrorKind::nondeterminism, std::string("trajectory reached a folded ") + to_string(eq.kind));
    }
    // Leave along the stable (saddle) or weak (node) eigendirection into |x| < 1.
    const double lam = eq.kind == FoldedKind::saddle ? std::min(eq.eigenvalues[0].real(), eq.eigenvalues[1].real())
                                                     : std::max(eq.eigenvalues[0].real(), eq.eigenvalues[1].real());
    double vx = lam, vth = 2.0 * p.omega * eq.x;
    const double nv = std::hypot(vx, vth);
    vx /= nv;
    vth /= nv;
    if (vx * eq.x > 0.0) {
      vx = -vx;
      vth = -vth;
    }
    const double th_eq = theta + phase_difference(theta, eq.theta);
    const State at_eq = on_sheet(eq.x, th_eq);
    out.arcs.back().points.back() = at_eq;
    out.jumps.push_back({t, at_eq, at_eq, true});
    x = eq.x + cfg.canard_offset * vx;
    theta = th_eq + cfg.canard_offset * vth;

    std::vector<ode::EventFn<4>> revs;
    revs.push_back(level4(0, 1.0, ode::Direction::rising, "end+"));
    revs.push_back(level4(0, -1.0, ode::Direction::falling, "end-"));
    revs.push_back(level4(3, policy->max_arc_length, ode::Direction::rising, "length"));
    auto rarc = run_arc(sheet_system(p, -1.0), Sheet::repelling, V4{x, t, theta, 0.0}, t_max, revs, cfg);
    t = rarc.end[1];
    theta = rarc.end[2];
    x = rarc.end[0];
    const std::string rreason = rarc.reason;
    rarc.arc.points.front() = at_eq;
    out.arcs.push_back(std::move(rarc.arc));
    if (rreason == "time") break;
    if (rreason == "stalled") throw Error(ErrorKind::no_convergence, "canard arc stalled");

    if (rreason == "end+" || rreason == "end-") {
      // Reaching a fold from the middle sheet is a regular fold arrival.
      const Fold fold = rreason == "end+" ? Fold::plus : Fold::minus;
      const double xe = rreason == "end+" ? 1.0 : -1.0;
      const State to = jump_target(fold, reduce_phase(theta));
      out.arcs.back().points.back() = on_sheet(xe, theta);
      out.jumps.push_back({t, on_sheet(xe, theta), to});
      x = to.x;
      side = fold == Fold::plus ? Side::negative : Side::positive;
      ++canards;
      continue;
    }
    const CanardExit exit = policy->exits[canards % policy->exits.size()];
    ++canards;
    const Side origin = eq.x > 0.0 ? Side::positive : Side::negative;
    side = exit == CanardExit::dip ? origin : (origin == Side::positive ? Side::negative : Side::positive);
    const State leave = out.arcs.back().points.back();
    const BranchRoot land = stable_branch_solve(leave.y, side);
    out.jumps.push_back({t, leave, State{land.x, leave.y, leave.theta}});
    x = land.x;
    if (land.at_fold) throw Error(ErrorKind::nondeterminism, "canard exit landed on a fold");
  }
  out.t_end = t;
  out.stop = HybridStop::time_limit;
  return out;
}

SingularOrbit singular_orbit_unforced(int samples_per_arc) {
  if (samples_per_arc < 2) throw Error(ErrorKind::precondition, "need at least two samples per arc");
  SingularOrbit res;
  res.period = 3.0 - 2.0 * std::log(2.0);
  const double half = res.period / 2.0;
  // On x >= 1 the slow flow x' = -x / (x^2 - 1) gives t(x) = (2 - ln 2) - (x^2/2 - ln x).
  auto time_to = [](double x) { return (2.0 - std::log(2.0)) - (x * x / 2.0 - std::log(x)); };
  for (int k = 0; k < 2; ++k) {
    const double sgn = k == 0 ? 1.0 : -1.0;
    SlowArc arc;
    arc.sheet = k == 0 ? Sheet::positive : Sheet::negative;
    for (int i = 0; i < samples_per_arc; ++i) {
      const double ax = 2.0 - static_cast<double>(i) / (samples_per_arc - 1);
      arc.t.push_back(k * half + time_to(ax));
      arc.points.push_back(on_sheet(sgn * ax, 0.0));
    }
    arc.t.back() = (k + 1) * half;
    res.orbit.arcs.push_back(std::move(arc));
    const Fold fold = k == 0 ? Fold::plus : Fold::minus;
    res.orbit.jumps.push_back({(k + 1) * half, on_sheet(sgn, 0.0), jump_target(fold, 0.0)});
  }
  res.orbit.t_end = res.period;
  res.orbit.stop = HybridStop::closed_orbit;
  return res;
}

}  // namespace fvdp
