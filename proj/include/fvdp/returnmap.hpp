#pragma once

// Poincare return map on the section {x = 0, x decreasing}, parameterised
// by (theta, y). Points on the section need y < 0 so that dx/dt = y/eps < 0.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fvdp/integrator.hpp"
#include "fvdp/model.hpp"

namespace fvdp {

struct SectionPoint {
  double theta = 0.0;
  double y = 0.0;

  friend bool operator==(const SectionPoint&, const SectionPoint&) = default;
};

// Euclidean distance in (theta, y) with theta measured on the circle.
double circle_distance(const SectionPoint& a, const SectionPoint& b) noexcept;

struct TransitRecord {
  double transit_time = 0.0;
  std::vector<std::string> labels;  // summarized event labels in time order
  std::vector<EventRecord> events;  // raw event log (empty when not recorded)
  int phase_wraps = 0;
  bool canard = false;
  double canard_duration = 0.0;  // longest repelling-sheet residence, slow time
};

struct ReturnConfig {
  IntegratorConfig integrator = IntegratorConfig::precise();
  double max_transit_time = 50.0;
  double tangency_tol = 1e-8;  // minimum |dx/dt| at an accepted crossing
  // Canard recognition: residence within band_width(eps) of the repelling
  // sheet for longer than canard_min_duration.
  double canard_min_duration = 0.05;
  // Full event log (fold, C, jump, band, wraps). When false only the section
  // crossing is tracked and labels stay empty; used by long iterations.
  bool record_events = true;
};

// A repelling-sheet residence interval [t_enter, t_exit].
struct BandResidence {
  double t_enter;
  double t_exit;
  std::size_t enter_index;  // indices into the raw event list
  std::size_t exit_index;   // == events.size() if still inside at the end
};

// Pairs band entry/exit events. A leading exit opens at t_start; residences
// still open at the end close at t_end.
std::vector<BandResidence> band_residences(const std::vector<EventRecord>& events, double t_start, double t_end);

// Collapses a raw event log into labels: band events become a single
// "canard" label when the residence exceeds min_duration and vanish otherwise.
// fast_start prepends "jump" for transits that begin on a fast fiber, where no
// onset event can fire.
std::vector<std::string> summarize_labels(const std::vector<EventRecord>& events, double t_start, double t_end,
                                          double min_duration, bool fast_start = false);

// Event set used for labelled transits; band <= 0 selects band_width(eps).
std::vector<EventSpec> transit_events(const Params& p, bool terminal_section, double band = 0.0);

std::pair<SectionPoint, TransitRecord> return_map(const SectionPoint& pt, const Params& p, const ReturnConfig& cfg);

struct IterationResult {
  std::vector<SectionPoint> points;  // points[i] is the image after i+1 returns
  std::vector<TransitRecord> records;
  std::optional<Error> error;  // set when iteration stopped early
  int completed() const noexcept { return static_cast<int>(points.size()); }
};

IterationResult iterate_map(const SectionPoint& pt, int n, const Params& p, const ReturnConfig& cfg);

enum class PeriodKind { periodic, aperiodic, inconclusive, failed };
const char* to_string(PeriodKind kind) noexcept;

struct PeriodVerdict {
  PeriodKind kind = PeriodKind::failed;
  int map_period = 0;   // section returns per orbit
  int subharmonic = 0;  // forcing periods per orbit: round(omega * orbit time)
  int phase_wraps = 0;  // theta wraps counted along one orbit
  double orbit_time = 0.0;
  double deviation = 0.0;  // max return distance at the accepted period
  std::vector<SectionPoint> orbit;  // one period of section points
  SectionPoint last;                // final iterate
  std::string error;                // populated for failed verdicts
};

struct PeriodOptions {
  int n_transient = 20;
  int n_detect = 16;
  double tol = 1e-6;
};

PeriodVerdict detect_period(const SectionPoint& pt, const Params& p, const ReturnConfig& cfg, const PeriodOptions& opt);

}  // namespace fvdp
