#include <cmath>

#include "doctest.h"
#include "fvdp/survey.hpp"

using namespace fvdp;

namespace {

double bisect_free_quadrature() {
  // Composite Gauss-Legendre (5 points) of 2 * (x^2 - 1) / x over [1, 2].
  const double xs[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  const double ws[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                        0.2369268850561891};
  const int n = 64;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = 1.0 + double(k) / n, b = 1.0 + double(k + 1) / n;
    for (int i = 0; i < 5; ++i) {
      const double x = 0.5 * (a + b) + 0.5 * (b - a) * xs[i];
      sum += 0.5 * (b - a) * ws[i] * (x * x - 1.0) / x;
    }
  }
  return 2.0 * sum;
}

SweepConfig small_cfg() {
  SweepConfig c;
  c.extra_starts = 2;
  c.seed = 99;
  return c;
}

}  // namespace

TEST_SUITE("survey") {

TEST_CASE("singular period") {
  CHECK(singular_period() == 3.0 - 2.0 * std::log(2.0));
  CHECK(std::abs(singular_period() - bisect_free_quadrature()) < 1e-12);
  CHECK(singular_period() == doctest::Approx(1.613706).epsilon(1e-6));
}

TEST_CASE("period approaches the singular limit") {
  const PeriodResult r2 = vdp_period(1e-2);
  const PeriodResult r3 = vdp_period(1e-3);
  const PeriodResult r4 = vdp_period(1e-4);
  CHECK(r2.period > 0.0);
  CHECK(std::abs(r2.gap) > std::abs(r3.gap));
  CHECK(std::abs(r3.gap) > std::abs(r4.gap));
  CHECK(r2.singular == singular_period());
  CHECK(r2.gap == r2.period - r2.singular);
  CHECK(r2.periods.size() == 3);
  for (const PeriodResult* r : {&r2, &r3, &r4}) CHECK(r->half_asymmetry < 1e-8);
  CHECK(r2.period == doctest::Approx(1.9078369567).epsilon(1e-9));
  CHECK(r3.period == doctest::Approx(1.6800714905).epsilon(1e-9));
  CHECK(r4.period == doctest::Approx(1.6283707109).epsilon(1e-9));
  CHECK_FALSE(r2.config_digest.empty());
}

TEST_CASE("period is stable under tolerance refinement") {
  VdpPeriodConfig fine;
  fine.integrator.rtol = 1e-11;
  fine.integrator.atol = {1e-13};
  for (double eps : {1e-2, 1e-3}) {
    CHECK(std::abs(vdp_period(eps).period - vdp_period(eps, fine).period) < 1e-6);
  }
}

TEST_CASE("period preconditions") {
  CHECK_THROWS_AS(vdp_period(1e-5), Error);
  CHECK_THROWS_AS(vdp_period(2.0), Error);
}

TEST_CASE("range nodes") {
  const Range r{3.5, 5.0};
  CHECK(r.at(0, 4) == 3.5);
  CHECK(r.at(3, 4) == 5.0);
  CHECK(r.at(1, 4) == doctest::Approx(4.0));
  CHECK(r.at(0, 1) == 4.25);  // a single node sits mid-range
}

TEST_CASE("single cell sweep is one detect_period call") {
  SweepConfig cfg = small_cfg();
  cfg.extra_starts = 0;
  const SweepGrid g = sweep({4.0, 4.0}, {2.0, 2.0}, 1e-2, 1, 1, cfg);
  REQUIRE(g.cells.size() == 1);
  const PeriodVerdict v = detect_period(cfg.standard, Params{4.0, 2.0, 1e-2}, cfg.ret, cfg.period);
  CHECK(g.cells[0].verdict == v.kind);
  CHECK(g.cells[0].subharmonic == v.subharmonic);
  CHECK(v.subharmonic == 3);
  REQUIRE(g.cells[0].attractors.size() == 1);
  CHECK(g.cells[0].attractors[0].point == v.orbit.front());
}

TEST_CASE("pinned cells at two eps") {
  const SweepConfig cfg = small_cfg();
  for (double eps : {1e-2, 1e-3}) {
    CHECK(sweep_cell(3.5, 2.0, eps, 0, cfg).subharmonic == 3);
    CHECK(sweep_cell(3.5, 2.8, eps, 0, cfg).subharmonic == 5);
  }
}

TEST_CASE("sweep is deterministic and independent of the worker count") {
  SweepConfig a = small_cfg();
  a.jobs = 1;
  SweepConfig b = small_cfg();
  b.jobs = 3;
  const SweepGrid g1 = sweep({3.5, 5.0}, {2.0, 2.8}, 1e-2, 2, 2, a);
  const SweepGrid g2 = sweep({3.5, 5.0}, {2.0, 2.8}, 1e-2, 2, 2, b);
  REQUIRE(g1.cells.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g1.cells[i].verdict == g2.cells[i].verdict);
    CHECK(g1.cells[i].subharmonic == g2.cells[i].subharmonic);
    REQUIRE(g1.cells[i].attractors.size() == g2.cells[i].attractors.size());
    for (std::size_t k = 0; k < g1.cells[i].attractors.size(); ++k) {
      CHECK(g1.cells[i].attractors[k].point == g2.cells[i].attractors[k].point);
      CHECK(g1.cells[i].attractors[k].hits == g2.cells[i].attractors[k].hits);
    }
  }
}

TEST_CASE("cell errors are recorded, not thrown") {
  SweepConfig cfg = small_cfg();
  cfg.standard = SectionPoint{0.2, 0.3};  // x increasing: every return from it is rejected
  cfg.extra_starts = 0;
  SweepCell c;
  CHECK_NOTHROW(c = sweep_cell(4.0, 2.0, 1e-2, 0, cfg));
  CHECK(c.verdict == PeriodKind::failed);
  CHECK(c.failed == 1);
  CHECK_FALSE(c.errors.empty());
}

TEST_CASE("strip interiors and overlaps on a synthetic grid") {
  SweepGrid g;
  g.na = 3;
  g.nw = 3;
  g.cells.resize(9);
  for (std::size_t i = 0; i < 9; ++i) {
    SweepCell& c = g.cells[i];
    c.ia = i / 3;
    c.iw = i % 3;
    c.verdict = PeriodKind::periodic;
    c.subharmonic = 3;
    c.attractors = {Attractor{1, 3, 2.0, {0.1, -0.5}, 9}};
  }
  CHECK(strip_interior(g, 1, 1));
  // A coexisting attractor in one cell: it and its neighbours stop being interior.
  g.cells[1 * 3 + 2].attractors.push_back(Attractor{1, 5, 3.3, {0.4, -0.6}, 2});
  CHECK_FALSE(strip_interior(g, 1, 2));
  CHECK_FALSE(strip_interior(g, 1, 1));
  const SweepSummary s = summarize(g);
  CHECK(s.overlaps == std::vector<std::size_t>{5});
  CHECK(s.even_interior.empty());
  CHECK(s.interior_subharmonics == std::vector<int>{3});

  g.cells[0].subharmonic = 4;
  g.cells[0].attractors[0].subharmonic = 4;
  g.cells[1].subharmonic = 4;
  g.cells[1].attractors[0].subharmonic = 4;
  g.cells[3].subharmonic = 4;
  g.cells[3].attractors[0].subharmonic = 4;
  CHECK(summarize(g).even_interior == std::vector<std::size_t>{0});
}

}
