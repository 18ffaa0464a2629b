#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fvdp/chaos.hpp"

using namespace fvdp;

namespace {

const Params kRef{1.1, 1.505, 0.001};
const State kSlice{0.0, -0.6752, 0.41732694};
const State kDip{0.0, -0.6752, 0.41732695};

std::vector<std::string> through_first(const std::vector<std::string>& labels, const std::string& stop) {
  auto it = std::find(labels.begin(), labels.end(), stop);
  return {labels.begin(), it == labels.end() ? it : it + 1};
}

}  // namespace

TEST_SUITE("chaos") {

TEST_CASE("reference pair splits into a dip and a slice") {
  const CanardOutcome a = classify_canard(kSlice, kRef);
  const CanardOutcome b = classify_canard(kDip, kRef);
  CHECK(std::set{a.kind, b.kind} == std::set{CanardKind::dip, CanardKind::slice});
  // Regression assignment from the integration itself.
  CHECK(a.kind == CanardKind::slice);
  CHECK(b.kind == CanardKind::dip);
  CHECK(a.origin_side == 1);
  CHECK(b.origin_side == 1);
  CHECK(a.exit_side == -1);
  CHECK(b.exit_side == 1);
  CHECK(a.canard_duration > 0.05);
  CHECK(b.canard_duration > 0.05);
  CHECK(a.canard_start == doctest::Approx(b.canard_start).epsilon(1e-6));

  const auto pa = through_first(a.labels, "fold+");
  const auto pb = through_first(b.labels, "fold+");
  CHECK(pa.size() < a.labels.size());
  CHECK(pa == pb);
  CHECK(std::count(b.labels.begin(), b.labels.end(), "fold+") == 3);
}

TEST_CASE("dip and slice are stable under tolerance refinement") {
  for (double rtol : {1e-10, 1e-11}) {
    CanardConfig cfg;
    cfg.integrator.rtol = rtol;
    cfg.integrator.atol = {rtol * 1e-2};
    CHECK(classify_canard(kSlice, kRef, cfg).kind == CanardKind::slice);
    CHECK(classify_canard(kDip, kRef, cfg).kind == CanardKind::dip);
  }
}

TEST_CASE("point away from the canard wedge is regular") {
  const CanardOutcome r = classify_canard(State{0.0, -0.5752, 0.41732694}, kRef);
  CHECK(r.kind == CanardKind::regular);
  CHECK(r.canard_duration < 0.05);
}

TEST_CASE("divergence of the reference pair") {
  for (double rtol : {1e-10, 1e-11}) {
    DivergenceConfig cfg;
    cfg.integrator.rtol = rtol;
    cfg.integrator.atol = {rtol * 1e-2};
    const DivergenceProfile d = divergence_profile(kSlice, kDip, kRef, cfg);
    CHECK(d.max_before_canard < 1e-3);
    REQUIRE(d.t_exceed.has_value());
    REQUIRE(d.canard_exit.has_value());
    CHECK(*d.t_exceed == doctest::Approx(1.951).epsilon(1e-3));
    CHECK(d.separation.front() == doctest::Approx(1e-8).epsilon(1e-3));
    CHECK(d.separation.back() > 1.0);
  }
}

TEST_CASE("identical starts do not separate") {
  const DivergenceProfile d = divergence_profile(kSlice, kSlice, kRef);
  CHECK(std::all_of(d.separation.begin(), d.separation.end(), [](double s) { return s == 0.0; }));
  CHECK_FALSE(d.t_exceed.has_value());
}

TEST_CASE("divergence is symmetric") {
  DivergenceConfig cfg;
  cfg.t_max = 2.2;
  const DivergenceProfile ab = divergence_profile(kSlice, kDip, kRef, cfg);
  const DivergenceProfile ba = divergence_profile(kDip, kSlice, kRef, cfg);
  CHECK(ab.t == ba.t);
  CHECK(ab.separation == ba.separation);
  CHECK(ab.t_exceed == ba.t_exceed);
}

TEST_CASE("quadrilateral geometry") {
  const Quadrilateral q = Quadrilateral::canard_wedge();
  CHECK(q.v[0].theta == 0.4174);
  CHECK(q.v[3].y == -0.676621708);
  CHECK(q.theta_min() == 0.41737);
  CHECK(q.theta_max() == 0.4274);
  CHECK(q.area() > 0.0);
  CHECK_NOTHROW(q.validate());

  Quadrilateral flat;
  flat.v = {SectionPoint{0.1, -0.5}, SectionPoint{0.2, -0.5}, SectionPoint{0.1, -0.5}, SectionPoint{0.2, -0.5}};
  CHECK(flat.area() == 0.0);
  try {
    horseshoe_check(flat, kRef, 100);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::precondition);
  }
  CHECK_THROWS_AS(horseshoe_check(q, kRef, 50), Error);
}

TEST_CASE("monotone segments") {
  auto pts = [](std::initializer_list<double> th) {
    std::vector<SectionPoint> v;
    for (double t : th) v.push_back({t, -0.5});
    return v;
  };
  CHECK(monotone_segments(pts({0.1, 0.2, 0.3}), 1e-9) == 1);
  CHECK(monotone_segments(pts({0.3, 0.2, 0.1, 0.2, 0.3}), 1e-9) == 2);
  CHECK(monotone_segments(pts({0.1, 0.2, 0.1, 0.2}), 1e-9) == 3);
  // Wiggles below the noise floor do not break a run.
  CHECK(monotone_segments(pts({0.1, 0.2, 0.2 - 1e-12, 0.3}), 1e-9) == 1);
}

TEST_CASE("wedge quadrilateral folds its edges over itself") {
  const Quadrilateral q = Quadrilateral::canard_wedge();
  const HorseshoeReport r100 = horseshoe_check(q, kRef, 100);
  const HorseshoeReport r200 = horseshoe_check(q, kRef, 200);
  for (const HorseshoeReport* r : {&r100, &r200}) {
    CHECK(r->complete);
    CHECK(r->evidence);
    CHECK(r->fold_left);
    for (const EdgeImage* e : {&r->top, &r->bottom}) {
      CHECK(e->covers);
      CHECK(e->fold_theta < q.theta_min());
      CHECK(e->monotone_segments == 2);
      CHECK(e->failures.empty());
    }
    CHECK(r->aspect_transverse > 1e2);
  }
  CHECK(r100.top.monotone_segments == r200.top.monotone_segments);
  CHECK(r100.bottom.monotone_segments == r200.bottom.monotone_segments);
  CHECK(r200.top.fold_theta == doctest::Approx(0.413167).epsilon(1e-5));
}

TEST_CASE("shifted quadrilateral shows no horseshoe") {
  Quadrilateral q = Quadrilateral::canard_wedge();
  for (auto& v : q.v) v.theta += 0.3;
  const HorseshoeReport r = horseshoe_check(q, kRef, 100);
  CHECK_FALSE(r.evidence);
  CHECK((r.top.monotone_segments != 2 || !r.top.covers));
  CHECK((r.bottom.monotone_segments != 2 || !r.bottom.covers));
}

}
