#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fvdp/model.hpp"

using namespace fvdp;

namespace {

// Plain bisection on y + x - x^3/3 over [lo, hi]; independent of the
// trigonometric seed + Newton polish used by stable_branch_solve.
double bisect_branch(double y, double lo, double hi) {
  auto f = [y](double x) { return y + x - x * x * x / 3.0; };
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("field at the origin and on the fold") {
  const Params p{1.1, 1.505, 0.001};
  const Vec3 f0 = fvdp_field(State{0, 0, 0}, p);
  CHECK(f0[0] == 0.0);
  CHECK(f0[1] == 0.0);
  CHECK(f0[2] == p.omega);

  const Vec3 f1 = fvdp_field(State{1.0, -kFoldY, 0.25}, p);
  CHECK(std::abs(f1[0]) < 1e-12);  // one rounding of -2/3 + 1 - 1/3, scaled by 1/eps
  CHECK(f1[1] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(f1[2] == p.omega);
}

TEST_CASE("reference parameters validate") {
  CHECK_NOTHROW(Params{1.1, 1.505, 0.001}.validate());
  CHECK_THROWS_AS(Params(1.1, 1.505, 0.0).validate(), Error);
  CHECK_NOTHROW(Params(1.1, 1.505, 0.0).validate(true));
  CHECK_THROWS_AS(Params(1.1, -1.0, 0.01).validate(), Error);
}

TEST_CASE("nonfinite state is rejected") {
  const Params p;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    fvdp_field(State{nan, 0, 0}, p);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_state);
  }
  CHECK_THROWS_AS(unforced_field(0.0, std::numeric_limits<double>::infinity(), 0.01), Error);
}

TEST_CASE("unforced field") {
  auto f = unforced_field(0, 0, 0.01);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  f = unforced_field(2.0, 2.0 / 3.0, 0.01);
  CHECK(std::abs(f[0]) < 1e-12);
  CHECK(f[1] == -2.0);
  const auto a = unforced_field(1.3, 0.2, 0.01);
  const auto b = unforced_field(-1.3, -0.2, 0.01);
  CHECK(a[0] == -b[0]);
  CHECK(a[1] == -b[1]);
}

TEST_CASE("critical residual") {
  CHECK(critical_residual(-2.0, -2.0 / 3.0) == doctest::Approx(0.0).scale(1e-15));
  CHECK(critical_residual(0, 0) == 0.0);
  CHECK(critical_residual(2.0, -2.0 / 3.0) == doctest::Approx(-4.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("fast component times eps equals the residual") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const Params p{u(rng), 1.0 + std::abs(u(rng)), 1e-3};
    const State s{u(rng), u(rng), reduce_phase(u(rng))};
    const Vec3 f = fvdp_field(s, p);
    CHECK(f[0] * p.eps == doctest::Approx(critical_residual(s.x, s.y)).epsilon(1e-13).scale(1e-13));
    CHECK(f[2] == p.omega);
  }
}

TEST_CASE("stable branch roots") {
  CHECK(stable_branch_solve(-2.0 / 3.0, Side::negative).x == -2.0);
  CHECK(stable_branch_solve(2.0 / 3.0, Side::positive).x == 2.0);
  const double r = stable_branch_solve(0.0, Side::positive).x;
  CHECK(r == doctest::Approx(bisect_branch(0.0, 1.0, 3.0)).epsilon(1e-14));
  CHECK(r == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));

  const BranchRoot f = stable_branch_solve(-kFoldY, Side::positive);
  CHECK(f.at_fold);
  CHECK(f.x == 1.0);

  CHECK_THROWS_AS(stable_branch_solve(-0.7, Side::positive), Error);
  CHECK_THROWS_AS(stable_branch_solve(0.7, Side::negative), Error);
  CHECK_FALSE(try_stable_branch_solve(std::nan(""), Side::positive).has_value());
}

TEST_CASE("branch residuals over random admissible y") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0 / 3.0, 6.0);
  for (int i = 0; i < 10000; ++i) {
    const double y = u(rng);
    const double xp = stable_branch_solve(y, Side::positive).x;
    const double xn = stable_branch_solve(-y, Side::negative).x;
    REQUIRE(xp >= 1.0);
    REQUIRE(xn <= -1.0);
    REQUIRE(std::abs(critical_residual(xp, y)) < 1e-12);
    REQUIRE(std::abs(critical_residual(xn, -y)) < 1e-12);
  }
  for (int i = 0; i < 1000; ++i) {
    const double y = std::uniform_real_distribution<double>(-0.66, 0.66)(rng);
    const auto x = repelling_branch_solve(y);
    REQUIRE(x.has_value());
    REQUIRE(std::abs(*x) < 1.0);
    REQUIRE(std::abs(critical_residual(*x, y)) < 1e-12);
  }
}

TEST_CASE("fold curves") {
  const auto folds = fold_curves();
  CHECK(folds[0].x == 1.0);
  CHECK(folds[0].y == -kFoldY);
  CHECK(folds[1].x == -1.0);
  CHECK(folds[1].y == kFoldY);
  for (const auto& f : folds) CHECK(std::abs(critical_residual(f.x, f.y)) < 1e-15);
}

TEST_CASE("jump targets preserve y and theta and land on C") {
  const State a = jump_target(Fold::plus, 0.3);
  CHECK(a.x == -2.0);
  CHECK(a.y == -kFoldY);
  CHECK(a.theta == 0.3);
  const State b = jump_target(Fold::minus, 0.0);
  CHECK(b.x == 2.0);
  CHECK(b.y == kFoldY);
  CHECK(b.theta == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double th = u(rng);
    for (Fold f : {Fold::plus, Fold::minus}) {
      const State s = jump_target(f, th);
      const double fy = f == Fold::plus ? -kFoldY : kFoldY;
      REQUIRE(s.y == fy);
      REQUIRE(s.theta == reduce_phase(th));
      REQUIRE(std::abs(critical_residual(s.x, s.y)) < 1e-12);
    }
  }
}

TEST_CASE("phase reduction") {
  CHECK(reduce_phase(1.0) == 0.0);
  CHECK(reduce_phase(-0.25) == 0.75);
  CHECK(reduce_phase(-1e-18) == 0.0);
  CHECK(std::signbit(reduce_phase(-0.0)) == false);
  CHECK(phase_difference(0.95, 0.05) == doctest::Approx(0.1));
  CHECK(phase_difference(0.05, 0.95) == doctest::Approx(-0.1));
}

TEST_CASE("slow-fast form") {
  const Params p{1.1, 1.505, 0.01};
  const SlowFastSpec spec = fvdp_slow_fast(p);
  CHECK(spec.k == 1);
  CHECK(spec.m == 2);
  const double u[1] = {0.5};
  const double v[2] = {0.2, 0.1};
  CHECK(spec.fast(u, v)[0] == critical_residual(0.5, 0.2));
  CHECK(spec.slow(u, v)[1] == p.omega);
}

}
