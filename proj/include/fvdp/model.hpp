#pragma once

// Forced van der Pol (FVDP) vector field on R^2 x S^1 and the geometry of
// its critical manifold C = { y + x - x^3/3 = 0 }.
//
//   eps * x' = y + x - x^3/3
//         y' = -x + a sin(2 pi theta)
//     theta' = omega
//
// theta lives on the circle R/Z and is always stored reduced to [0, 1).

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fvdp/errors.hpp"

namespace fvdp {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kFoldY = 2.0 / 3.0;

struct Params {
  double a = 1.1;
  double omega = 1.505;
  double eps = 0.001;

  // Throws Error(invalid_state) unless omega > 0 and eps > 0 (eps == 0 only
  // when allow_singular is set) and all fields are finite.
  void validate(bool allow_singular = false) const;
};

// Canonical reduction of a phase to [0, 1). Every stored theta goes through
// this function so that event logs are bitwise reproducible.
double reduce_phase(double theta) noexcept;

// Signed shortest difference b - a on the circle, in [-1/2, 1/2).
double phase_difference(double a, double b) noexcept;

struct State {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  static State make(double x, double y, double theta) noexcept { return {x, y, reduce_phase(theta)}; }
  Vec3 as_vec() const noexcept { return {x, y, theta}; }
  bool finite() const noexcept;
};

// Generic slow-fast form eps u' = f(u, v), v' = g(u, v) with u in R^k, v in R^m.
struct SlowFastSpec {
  using Evaluator = std::function<std::vector<double>(std::span<const double> u, std::span<const double> v)>;

  std::size_t k = 0;
  std::size_t m = 0;
  Evaluator fast;
  Evaluator slow;
};

// FVDP as a slow-fast system: u = (x), v = (y, theta).
SlowFastSpec fvdp_slow_fast(const Params& p);

Vec3 fvdp_field(const State& s, const Params& p);

// Same field evaluated on a raw vector (third component may be an unwrapped
// phase). No validation; used on the integrator's hot path.
Vec3 fvdp_rhs(const Vec3& u, const Params& p) noexcept;

// Analytic Jacobian of fvdp_rhs.
Mat3 jacobian_fvdp(const State& s, const Params& p);
Mat3 fvdp_jacobian_raw(const Vec3& u, const Params& p) noexcept;

std::array<double, 2> unforced_field(double x, double y, double eps);

double critical_residual(double x, double y) noexcept;

enum class Side { negative, positive };

struct BranchRoot {
  double x = 0.0;
  bool at_fold = false;  // y sits exactly on the fold value; x = +-1 is a double root
};

// Root of critical_residual(., y) on the attracting sheet x >= 1 (positive) or
// x <= -1 (negative). Throws Error(no_branch) past the fold value.
BranchRoot stable_branch_solve(double y, Side side);
std::optional<BranchRoot> try_stable_branch_solve(double y, Side side) noexcept;

// Root on the repelling middle sheet |x| < 1, defined for |y| < 2/3.
std::optional<double> repelling_branch_solve(double y) noexcept;

enum class Fold { plus, minus };  // S+ : x = +1, y = -2/3 ; S- : x = -1, y = +2/3

struct FoldCurve {
  Fold fold;
  double x;
  double y;
};

std::array<FoldCurve, 2> fold_curves() noexcept;

// Landing point of the fast fiber leaving a fold point: S+ lands on x = -2,
// S- on x = +2. y and theta are preserved bitwise.
State jump_target(Fold fold, double theta) noexcept;

}  // namespace fvdp
