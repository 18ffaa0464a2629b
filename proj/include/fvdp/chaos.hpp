#pragma once

// Canard experiments: dip/slice classification, divergence of nearby
// trajectories, and horseshoe evidence for a quadrilateral on the section.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fvdp/integrator.hpp"
#include "fvdp/model.hpp"
#include "fvdp/returnmap.hpp"

namespace fvdp {

enum class CanardKind { dip, slice, regular };
const char* to_string(CanardKind kind) noexcept;

struct CanardConfig {
  IntegratorConfig integrator = IntegratorConfig::precise();
  double t_max = 10.0;
  double band = 0.0;            // repelling-sheet distance; <= 0 selects band_width(eps)
  double min_duration = 0.05;   // slow-time residence that counts as a canard
  bool stop_at_section = true;  // stop at the first section crossing after t0
};

struct CanardOutcome {
  CanardKind kind = CanardKind::regular;
  double canard_start = 0.0;
  double canard_end = 0.0;
  double canard_duration = 0.0;
  State exit_state;     // state where the trajectory leaves the band
  int origin_side = 0;  // +1 / -1: sheet the canard came from
  int exit_side = 0;    // +1 / -1: sheet the fast fiber heads to
  std::vector<std::string> labels;
  std::vector<EventRecord> events;
  Trajectory trajectory;
};

CanardOutcome classify_canard(const State& s0, const Params& p, const CanardConfig& cfg = {});

struct DivergenceConfig {
  IntegratorConfig integrator = IntegratorConfig::precise();
  double t_max = 3.0;
  double dt = 1e-3;
  CanardConfig canard{};
};

struct DivergenceProfile {
  std::vector<double> t;
  std::vector<double> separation;  // |(dx, dy, dtheta)| with dtheta on the circle
  std::optional<double> t_exceed;  // first time the separation exceeds 1
  std::optional<double> canard_exit;
  double separation_at_exit = 0.0;
  double max_before_canard = 0.0;  // largest separation before the earlier canard start
};

double state_distance(const State& a, const State& b) noexcept;

DivergenceProfile divergence_profile(const State& a, const State& b, const Params& p,
                                     const DivergenceConfig& cfg = {});

// Vertices in (theta, y). Edge v0 -> v1 is the top edge, v2 -> v3 the bottom
// edge; the boundary runs v0, v1, v3, v2.
struct Quadrilateral {
  std::array<SectionPoint, 4> v{};

  double area() const noexcept;
  double theta_min() const noexcept;
  double theta_max() const noexcept;
  double y_min() const noexcept;
  double y_max() const noexcept;
  // Throws Error(precondition) on a degenerate (zero-area or non-finite) shape.
  void validate() const;

  // Thin quadrilateral in the canard wedge whose return image folds back over it.
  static Quadrilateral canard_wedge();
};

struct EdgeImage {
  std::vector<double> s;               // edge parameter in [0, 1]
  std::vector<SectionPoint> preimage;  // sampled points on the edge
  std::vector<SectionPoint> image;     // return-map images (failed samples hold NaN)
  std::vector<std::size_t> failures;   // indices of samples whose return failed
  bool covers = false;                 // image theta range contains the quadrilateral's
  double fold_theta = 0.0;             // leftmost image theta
  int monotone_segments = 0;
  double theta_extent = 0.0;
  double y_extent = 0.0;
  double transverse_extent = 0.0;  // spread of y - slope * theta
};

struct HorseshoeConfig {
  ReturnConfig ret = [] {
    ReturnConfig r;
    r.integrator.rtol = 1e-12;
    r.integrator.atol = {1e-14};
    r.record_events = false;
    return r;
  }();
  double refine_gap = 1e-3;   // insert midpoints while consecutive images differ more in theta
  int max_refine = 4000;      // cap on inserted samples per edge
  double monotone_noise = 1e-9;  // theta increments below this do not break a monotone run
  unsigned jobs = 0;
};

struct HorseshoeReport {
  Quadrilateral quad;
  EdgeImage top;
  EdgeImage bottom;
  double slope = 0.0;  // mean dy/dtheta of the two edges, used for the transverse coordinate
  double aspect_raw = 0.0;         // theta extent / y extent of the joint image
  double aspect_transverse = 0.0;  // theta extent / transverse extent
  bool fold_left = false;
  bool evidence = false;
  bool complete = false;
};

HorseshoeReport horseshoe_check(const Quadrilateral& q, const Params& p, int n_samples,
                                const HorseshoeConfig& cfg = {});

// Number of maximal theta-monotone runs of a polyline.
int monotone_segments(const std::vector<SectionPoint>& pts, double noise);

}  // namespace fvdp
