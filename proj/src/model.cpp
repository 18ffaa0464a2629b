#include "fvdp/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace fvdp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::no_branch: return "no_branch";
    case ErrorKind::step_budget: return "step_budget";
    case ErrorKind::step_underflow: return "step_underflow";
    case ErrorKind::nonfinite_state: return "nonfinite_state";
    case ErrorKind::root_refinement: return "root_refinement";
    case ErrorKind::tangency: return "tangency";
    case ErrorKind::nondeterminism: return "nondeterminism";
    case ErrorKind::no_convergence: return "no_convergence";
  }
  return "unknown";
}

void Params::validate(bool allow_singular) const {
  if (!std::isfinite(a) || !std::isfinite(omega) || !std::isfinite(eps)) {
    throw Error(ErrorKind::invalid_state, "parameters must be finite");
  }
  if (!(omega > 0.0)) throw Error(ErrorKind::invalid_state, "omega must be positive");
  if (allow_singular ? !(eps >= 0.0) : !(eps > 0.0)) {
    throw Error(ErrorKind::invalid_state, "eps must be positive");
  }
}

double reduce_phase(double theta) noexcept {
  double r = theta - std::floor(theta);
  // theta slightly below an integer can round up to exactly 1.
  if (r >= 1.0) r = 0.0;
  return r + 0.0;  // folds -0.0 into +0.0
}

double phase_difference(double a, double b) noexcept {
  const double d = b - a;
  return d - std::floor(d + 0.5);
}

bool State::finite() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
}

SlowFastSpec fvdp_slow_fast(const Params& p) {
  SlowFastSpec spec;
  spec.k = 1;
  spec.m = 2;
  spec.fast = [](std::span<const double> u, std::span<const double> v) {
    return std::vector<double>{critical_residual(u[0], v[0])};
  };
  spec.slow = [p](std::span<const double> u, std::span<const double> v) {
    return std::vector<double>{-u[0] + p.a * std::sin(kTwoPi * v[1]), p.omega};
  };
  return spec;
}

Vec3 fvdp_rhs(const Vec3& u, const Params& p) noexcept {
  return {critical_residual(u[0], u[1]) / p.eps, -u[0] + p.a * std::sin(kTwoPi * u[2]), p.omega};
}

Vec3 fvdp_field(const State& s, const Params& p) {
  p.validate();
  if (!s.finite()) throw Error(ErrorKind::invalid_state, "state has nonfinite components");
  return fvdp_rhs(s.as_vec(), p);
}

Mat3 fvdp_jacobian_raw(const Vec3& u, const Params& p) noexcept {
  const double x = u[0];
  return {{{(1.0 - x * x) / p.eps, 1.0 / p.eps, 0.0},
           {-1.0, 0.0, kTwoPi * p.a * std::cos(kTwoPi * u[2])},
           {0.0, 0.0, 0.0}}};
}

Mat3 jacobian_fvdp(const State& s, const Params& p) {
  p.validate();
  if (!s.finite()) throw Error(ErrorKind::invalid_state, "state has nonfinite components");
  return fvdp_jacobian_raw(s.as_vec(), p);
}

std::array<double, 2> unforced_field(double x, double y, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::invalid_state, "eps must be positive");
  if (!std::isfinite(x) || !std::isfinite(y)) throw Error(ErrorKind::invalid_state, "state has nonfinite components");
  return {critical_residual(x, y) / eps, -x};
}

double critical_residual(double x, double y) noexcept { return y + x - x * x * x / 3.0; }

namespace {

// One-sided safeguarded Newton polish on p(x) = x^3 - 3x - 3y, keeping the
// iterate on the requested side of the fold and only accepting steps that
// reduce the residual.
double polish_root(double x, double y, double lo, double hi) noexcept {
  auto residual = [y](double z) { return std::abs(critical_residual(z, y)); };
  double best = residual(x);
  for (int it = 0; it < 8 && best > 0.0; ++it) {
    const double dp = 3.0 * x * x - 3.0;
    if (std::abs(dp) < 1e-12) break;
    const double pval = x * x * x - 3.0 * x - 3.0 * y;
    double next = x - pval / dp;
    if (next < lo) next = lo;
    if (next > hi) next = hi;
    const double r = residual(next);
    if (!(r < best)) break;
    x = next;
    best = r;
  }
  return x;
}

}  // namespace

std::optional<BranchRoot> try_stable_branch_solve(double y, Side side) noexcept {
  if (!std::isfinite(y)) return std::nullopt;
  // Work with the positive branch; the negative branch is its mirror image
  // under (x, y) -> (-x, -y).
  const double ys = side == Side::positive ? y : -y;
  if (ys < -kFoldY) return std::nullopt;
  if (ys == -kFoldY) {
    return BranchRoot{side == Side::positive ? 1.0 : -1.0, true};
  }
  // Depressed cubic x^3 - 3x - 3ys = 0 with x = 2 cos(phi) (three real roots)
  // or x = 2 cosh(psi) (one real root).
  const double c = 1.5 * ys;
  double x;
  if (c <= 1.0) {
    x = 2.0 * std::cos(std::acos(c) / 3.0);
  } else {
    x = 2.0 * std::cosh(std::acosh(c) / 3.0);
  }
  x = polish_root(x, ys, 1.0, std::numeric_limits<double>::infinity());
  if (side == Side::negative) x = -x;
  return BranchRoot{x, false};
}

BranchRoot stable_branch_solve(double y, Side side) {
  if (auto r = try_stable_branch_solve(y, side)) return *r;
  throw Error(ErrorKind::no_branch, std::string("no attracting ") + (side == Side::positive ? "positive" : "negative") +
                                        " branch at y = " + std::to_string(y));
}

std::optional<double> repelling_branch_solve(double y) noexcept {
  if (!std::isfinite(y) || !(std::abs(y) < kFoldY)) return std::nullopt;
  // Middle root of x^3 - 3x - 3y: 2 cos(phi0 + 4 pi / 3) with phi0 = acos(1.5 y)/3.
  const double phi0 = std::acos(1.5 * y) / 3.0;
  double x = 2.0 * std::cos(phi0 + 4.0 * std::numbers::pi / 3.0);
  return polish_root(x, y, -1.0, 1.0);
}

std::array<FoldCurve, 2> fold_curves() noexcept {
  return {FoldCurve{Fold::plus, 1.0, -kFoldY}, FoldCurve{Fold::minus, -1.0, kFoldY}};
}

State jump_target(Fold fold, double theta) noexcept {
  // x^3 - 3x -+ 2 = (x -+ 1)^2 (x +- 2): the simple root is exactly -+2.
  if (fold == Fold::plus) return State{-2.0, -kFoldY, reduce_phase(theta)};
  return State{2.0, kFoldY, reduce_phase(theta)};
}

}  // namespace fvdp
