#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include "doctest.h"
#include "fvdp/slowflow.hpp"

using namespace fvdp;

namespace {

const Params kRef{1.1, 1.505, 0.001};

double bisect(const std::function<double(double)>& f, double lo, double hi) {
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

// Adaptive Simpson quadrature.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm), right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), 1e-15, 60);
}

// Eigenvalues of a central-difference Jacobian of desing_field.
EigenPair fd_eigenvalues(double x, double theta, const Params& p) {
  const double h = 1e-6;
  const auto fxp = desing_field(x + h, theta, p), fxm = desing_field(x - h, theta, p);
  const auto ftp = desing_field(x, theta + h, p), ftm = desing_field(x, theta - h, p);
  const double a = (fxp[0] - fxm[0]) / (2 * h), b = (ftp[0] - ftm[0]) / (2 * h);
  const double c = (fxp[1] - fxm[1]) / (2 * h), d = (ftp[1] - ftm[1]) / (2 * h);
  const double tr = a + d, det = a * d - b * c;
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4 * det));
  return {(tr - disc) / 2.0, (tr + disc) / 2.0};
}

void check_jumps(const HybridTrajectory& h) {
  REQUIRE(h.arcs.size() == h.jumps.size() + 1);
  for (std::size_t i = 0; i < h.jumps.size(); ++i) {
    const JumpRecord& j = h.jumps[i];
    CHECK(j.from.y == j.to.y);
    CHECK(j.from.theta == j.to.theta);
    CHECK(std::abs(critical_residual(j.from.x, j.from.y)) < 1e-12);
    CHECK(std::abs(critical_residual(j.to.x, j.to.y)) < 1e-12);
    CHECK(h.arcs[i].points.back().y == j.from.y);
    CHECK(h.arcs[i].points.back().theta == j.from.theta);
    CHECK(h.arcs[i + 1].points.front().x == j.to.x);
    CHECK(h.arcs[i + 1].points.front().y == j.to.y);
  }
  for (const SlowArc& arc : h.arcs) {
    for (std::size_t k = 1; k + 1 < arc.points.size(); ++k) {
      const double ax = std::abs(arc.points[k].x);
      if (arc.sheet == Sheet::repelling) {
        REQUIRE(ax < 1.0);
      } else {
        REQUIRE(ax > 1.0);
      }
    }
  }
}

}  // namespace

TEST_SUITE("slowflow") {

TEST_CASE("desingularized field") {
  const Params p{1.1, 1.505, 0.0};
  const auto f = desing_field(0, 0, p);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == -p.omega);
  for (double th : {0.0, 0.1, 0.37, 0.9}) {
    CHECK(desing_field(1.0, th, p)[1] == 0.0);
    CHECK(desing_field(-1.0, th, p)[1] == 0.0);
  }
  for (const auto& eq : folded_equilibria(p)) {
    const auto g = desing_field(eq.x, eq.theta, p);
    CHECK(std::abs(g[0]) < 1e-12);
    CHECK(g[1] == 0.0);
  }
}

TEST_CASE("folded equilibria at a = 1.1") {
  const auto eqs = folded_equilibria(kRef);
  REQUIRE(eqs.size() == 4);
  auto g = [](double th) { return 1.1 * std::sin(kTwoPi * th) - 1.0; };
  const double th1 = bisect(g, 0.0, 0.25), th2 = bisect(g, 0.25, 0.5);
  CHECK(eqs[0].x == 1.0);
  CHECK(eqs[1].x == 1.0);
  CHECK(eqs[0].theta == doctest::Approx(th1).epsilon(1e-13));
  CHECK(eqs[1].theta == doctest::Approx(th2).epsilon(1e-13));
  CHECK(eqs[0].theta == doctest::Approx(0.181611).epsilon(1e-6));
  CHECK(eqs[1].theta == doctest::Approx(0.318389).epsilon(1e-6));
  for (const auto& eq : eqs) CHECK(std::abs(kRef.a * std::sin(kTwoPi * eq.theta) - eq.x) < 1e-12);
  // x = -1 pair is the x = +1 pair shifted by half a period.
  CHECK(eqs[2].x == -1.0);
  CHECK(eqs[3].x == -1.0);
  CHECK(eqs[2].theta == doctest::Approx(eqs[0].theta + 0.5).epsilon(1e-14));
  CHECK(eqs[3].theta == doctest::Approx(eqs[1].theta + 0.5).epsilon(1e-14));
}

TEST_CASE("classification") {
  const auto eqs = folded_equilibria(kRef);
  REQUIRE(eqs.size() == 4);
  CHECK(eqs[0].kind == FoldedKind::saddle);
  CHECK(eqs[1].kind == FoldedKind::focus);
  CHECK(eqs[2].kind == FoldedKind::saddle);
  CHECK(eqs[3].kind == FoldedKind::focus);
  for (const auto& eq : eqs) {
    // Characteristic polynomial l^2 + l - 4 pi a omega x cos(2 pi theta).
    const double det = -2.0 * kTwoPi * kRef.a * kRef.omega * eq.x * std::cos(kTwoPi * eq.theta);
    CHECK(eq.det == doctest::Approx(det).epsilon(1e-12));
    CHECK(eq.trace == -1.0);
    const EigenPair fd = fd_eigenvalues(eq.x, eq.theta, kRef);
    auto key = [](std::complex<double> z) { return std::pair(z.real(), z.imag()); };
    auto ours = eq.eigenvalues;
    auto ref = fd;
    if (key(ours[0]) > key(ours[1])) std::swap(ours[0], ours[1]);
    if (key(ref[0]) > key(ref[1])) std::swap(ref[0], ref[1]);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(ours[k] - ref[k]) < 1e-6);
    for (const auto& l : eq.eigenvalues) {
      CHECK(std::abs(l * l + l + det) < 1e-10 * (1 + std::abs(det)));
    }
  }
  CHECK(eqs[0].eigenvalues[0].imag() == 0.0);
  CHECK(eqs[0].eigenvalues[0].real() * eqs[0].eigenvalues[1].real() < 0.0);
  CHECK(eqs[1].eigenvalues[0].imag() != 0.0);
}

TEST_CASE("node and degenerate kinds") {
  // Small omega keeps the discriminant 1 - 4 det nonnegative at the second point.
  const auto eqs = folded_equilibria(Params{1.1, 0.01, 0.0});
  REQUIRE(eqs.size() == 4);
  CHECK(eqs[0].kind == FoldedKind::saddle);
  CHECK(eqs[1].kind == FoldedKind::node);
  const auto deg = folded_equilibria(Params{1.0, 1.505, 0.0});
  REQUIRE(deg.size() == 2);
  for (const auto& eq : deg) CHECK(eq.kind == FoldedKind::degenerate);
}

TEST_CASE("equilibrium count over a") {
  for (double a = -3.0; a <= 3.0; a += 0.0625) {
    if (std::abs(a) == 1.0) continue;
    const auto eqs = folded_equilibria(Params{a, 1.505, 0.0});
    CHECK(eqs.size() == (std::abs(a) > 1.0 ? 4u : 0u));
  }
  CHECK(folded_equilibria(Params{0.5, 1.505, 0.001}).empty());
}

TEST_CASE("slow flow times x^2 - 1 is the desingularized flow") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ux(-3, 3), ut(0, 1);
  const Params p{1.1, 1.505, 0.0};
  int inside = 0;
  for (int n = 0; n < 1000; ++n) {
    double x = ux(rng);
    if (std::abs(std::abs(x) - 1.0) < 1e-3) x += 0.01;
    const double th = ut(rng);
    const auto s = slow_field_xtheta(x, th, p);
    const auto d = desing_field(x, th, p);
    const double k = x * x - 1.0;
    REQUIRE(k * s[0] == doctest::Approx(d[0]).epsilon(1e-12));
    REQUIRE(k * s[1] == doctest::Approx(d[1]).epsilon(1e-12));
    // The slow flow always advances theta; the desingularized one runs backwards inside the strip.
    REQUIRE(s[1] == doctest::Approx(p.omega).epsilon(1e-12));
    if (std::abs(x) < 1.0) {
      ++inside;
      REQUIRE(d[1] < 0.0);
    }
  }
  CHECK(inside > 100);
  CHECK_THROWS_AS(slow_field_xtheta(1.0, 0.2, p), Error);
}

TEST_CASE("unforced singular orbit") {
  const SingularOrbit so = singular_orbit_unforced();
  const double t0 = 2.0 * integrate([](double x) { return (x * x - 1) / x; }, 1.0, 2.0);
  CHECK(so.period == doctest::Approx(3.0 - 2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(so.period - t0) < 1e-12);
  CHECK(so.period == doctest::Approx(1.613706).epsilon(1e-6));
  CHECK(so.orbit.stop == HybridStop::closed_orbit);
  REQUIRE(so.orbit.jumps.size() == 2);
  const JumpRecord& j0 = so.orbit.jumps[0];
  const JumpRecord& j1 = so.orbit.jumps[1];
  CHECK(j0.from.x == 1.0);
  CHECK(j0.from.y == -kFoldY);
  CHECK(j0.to.x == -2.0);
  CHECK(j0.to.y == -kFoldY);
  CHECK(j1.from.x == -1.0);
  CHECK(j1.from.y == kFoldY);
  CHECK(j1.to.x == 2.0);
  CHECK(j1.to.y == kFoldY);
  REQUIRE(so.orbit.arcs.size() >= 2);
  const auto& a0 = so.orbit.arcs[0];
  const auto& a1 = so.orbit.arcs[1];
  CHECK(a0.t.back() - a0.t.front() == doctest::Approx(a1.t.back() - a1.t.front()).epsilon(1e-14));
  CHECK(a0.points.front().x == 2.0);
  CHECK(a0.points.back().x == 1.0);
}

TEST_CASE("hybrid flow without forcing follows the singular orbit") {
  const Params p{0.0, 1.505, 0.0};
  const double delta = 1e-6;
  const HybridTrajectory h = hybrid_flow_forced(State{2.0, kFoldY - delta, 0.0}, p, 2.5);
  check_jumps(h);
  REQUIRE(h.jumps.size() >= 2);
  const double T0 = 3.0 - 2.0 * std::log(2.0);
  CHECK(h.jumps[0].from.x == 1.0);
  CHECK(h.jumps[0].to.x == -2.0);
  CHECK(h.jumps[0].to.y == -kFoldY);
  CHECK(h.jumps[1].to.x == 2.0);
  CHECK(h.jumps[0].t == doctest::Approx(T0 / 2).epsilon(1e-5));
  CHECK(h.jumps[1].t - h.jumps[0].t == doctest::Approx(T0 / 2).epsilon(1e-8));
  CHECK(h.arcs[0].sheet == Sheet::positive);
  CHECK(h.arcs[1].sheet == Sheet::negative);
  CHECK(h.t_end == 2.5);
}

TEST_CASE("forced hybrid flow jumps at generic fold points") {
  const HybridTrajectory h = hybrid_flow_forced(State{2.0, 0.5, 0.6}, kRef, 4.0);
  check_jumps(h);
  REQUIRE(!h.jumps.empty());
  for (const JumpRecord& j : h.jumps) {
    CHECK_FALSE(j.passage);
    if (j.from.x == 1.0) {
      CHECK(j.to.x == -2.0);
      CHECK(j.to.y == -kFoldY);
    } else {
      CHECK(j.from.x == -1.0);
      CHECK(j.to.x == 2.0);
      CHECK(j.to.y == kFoldY);
    }
  }
  CHECK_THROWS_AS(hybrid_flow_forced(State{0.5, 0.0, 0.0}, kRef, 1.0), Error);
}

TEST_CASE("folded saddle without a canard policy is an error") {
  const auto eqs = folded_equilibria(kRef);
  // Close enough that the approach error stays inside the 1e-8 proximity tolerance.
  const State s0 = folded_saddle_approach(eqs[0], kRef, 0.01);
  CHECK(s0.x > 1.0);
  try {
    hybrid_flow_forced(s0, kRef, 1.0);
    FAIL("expected a nondeterminism error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::nondeterminism);
  }
}

TEST_CASE("canard policy continues through the folded saddle") {
  const auto eqs = folded_equilibria(kRef);
  const State s0 = folded_saddle_approach(eqs[0], kRef, 0.05);
  for (CanardExit exit : {CanardExit::dip, CanardExit::slice}) {
    CanardPolicy policy;
    policy.max_arc_length = 0.1;
    policy.exits = {exit};
    const HybridTrajectory h = hybrid_flow_forced(s0, kRef, 1.0, policy);
    check_jumps(h);
    REQUIRE(h.arcs.size() >= 3);
    CHECK(h.arcs[1].sheet == Sheet::repelling);
    CHECK(h.jumps[0].passage);
    CHECK(h.jumps[0].from.x == 1.0);
    CHECK(h.jumps[0].from.theta == doctest::Approx(eqs[0].theta).epsilon(1e-9));
    CHECK(h.arcs[2].sheet == (exit == CanardExit::dip ? Sheet::positive : Sheet::negative));
    // Real time still advances theta on the repelling sheet, against the desingularized direction.
    const SlowArc& c = h.arcs[1];
    for (std::size_t k = 1; k + 1 < c.points.size(); ++k) {
      REQUIRE(c.t[k] > c.t[k - 1]);
      REQUIRE(phase_difference(c.points[k - 1].theta, c.points[k].theta) >= 0.0);
      REQUIRE(desing_field(c.points[k].x, c.points[k].theta, kRef)[1] < 0.0);
    }
  }
}

}
