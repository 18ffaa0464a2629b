#include "fvdp/returnmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fvdp {

double circle_distance(const SectionPoint& a, const SectionPoint& b) noexcept {
  const double dth = phase_difference(a.theta, b.theta);
  const double dy = b.y - a.y;
  return std::sqrt(dth * dth + dy * dy);
}

const char* to_string(PeriodKind kind) noexcept {
  switch (kind) {
    case PeriodKind::periodic: return "periodic";
    case PeriodKind::aperiodic: return "aperiodic";
    case PeriodKind::inconclusive: return "inconclusive";
    case PeriodKind::failed: return "failed";
  }
  return "unknown";
}

std::vector<BandResidence> band_residences(const std::vector<EventRecord>& events, double t_start, double t_end) {
  std::vector<BandResidence> out;
  const std::size_t none = events.size();
  bool inside = false;
  bool seen = false;
  BandResidence cur{t_start, t_end, none, none};
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.label != events::kBand) continue;
    if (e.sign > 0) {
      inside = true;
      cur = {e.t, t_end, i, none};
    } else if (inside || !seen) {
      // An exit with no recorded entry means the transit started in the band.
      if (!inside) cur = {t_start, t_end, none, none};
      cur.t_exit = e.t;
      cur.exit_index = i;
      out.push_back(cur);
      inside = false;
    }
    seen = true;
  }
  if (inside) out.push_back(cur);
  return out;
}

std::vector<std::string> summarize_labels(const std::vector<EventRecord>& events, double t_start, double t_end,
                                          double min_duration, bool fast_start) {
  const auto residences = band_residences(events, t_start, t_end);
  std::vector<std::string> labels;
  if (fast_start) labels.emplace_back(events::kJump);
  auto canard_at = [&](std::size_t index) {
    return std::any_of(residences.begin(), residences.end(), [&](const BandResidence& r) {
      return r.enter_index == index && r.t_exit - r.t_enter > min_duration;
    });
  };
  // A residence open from t_start is reported before the first event.
  for (const auto& r : residences) {
    if (r.enter_index == events.size() && r.t_exit - r.t_enter > min_duration) labels.emplace_back(events::kCanard);
  }
  // Entering the band across x = +-1 is the fold crossing itself; the two
  // roots coincide and their order is rounding noise. The fold goes first.
  constexpr double kTie = 1e-9;
  auto is_fold = [](const EventRecord& e) { return e.label == events::kFoldPlus || e.label == events::kFoldMinus; };
  std::vector<bool> taken(events.size(), false);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (taken[i]) continue;
    if (e.label == events::kBand) {
      if (e.sign > 0 && canard_at(i)) {
        for (std::size_t j = i + 1; j < events.size() && events[j].t - e.t <= kTie; ++j) {
          if (is_fold(events[j])) {
            labels.push_back(events[j].label);
            taken[j] = true;
          }
        }
        labels.emplace_back(events::kCanard);
      }
      continue;
    }
    labels.push_back(e.label);
  }
  return labels;
}

std::vector<EventSpec> transit_events(const Params& p, bool terminal_section, double band) {
  if (!(band > 0.0)) band = band_width(p.eps);
  return {events::section(terminal_section), events::fold(Fold::plus, band), events::fold(Fold::minus, band),
          events::phase_wrap(),                events::critical_crossing(),      events::jump_onset(band),
          events::repelling_band(band)};
}

std::pair<SectionPoint, TransitRecord> return_map(const SectionPoint& pt, const Params& p, const ReturnConfig& cfg) {
  p.validate();
  if (!std::isfinite(pt.theta) || !std::isfinite(pt.y)) throw Error(ErrorKind::invalid_state, "nonfinite section point");
  const double xdot0 = pt.y / p.eps;
  if (std::abs(xdot0) <= cfg.tangency_tol) {
    throw Error(ErrorKind::tangency, "section point is tangential (y ~ 0)");
  }
  if (xdot0 > 0.0) throw Error(ErrorKind::precondition, "section point must have y < 0 (x decreasing)");

  const auto field = fvdp_vector_field(p);
  const auto evs = cfg.record_events ? transit_events(p, true) : std::vector<EventSpec>{events::section(true)};
  IntegratorConfig icfg = cfg.integrator;
  icfg.store_samples = false;
  const State s0{0.0, pt.y, reduce_phase(pt.theta)};
  Trajectory tr = integrate_with_events(field, s0, 0.0, cfg.max_transit_time, evs, icfg);
  if (tr.termination != Termination::terminal_event) {
    throw IntegrationError(ErrorKind::step_budget, "no return to the section within the transit horizon", std::move(tr));
  }
  const EventRecord& hit = tr.events.back();
  const double xdot = critical_residual(hit.s.x, hit.s.y) / p.eps;
  if (!(std::abs(xdot) > cfg.tangency_tol)) {
    throw Error(ErrorKind::tangency, "tangential section crossing");
  }

  TransitRecord rec;
  rec.transit_time = tr.t_final;
  rec.phase_wraps = static_cast<int>(std::floor(s0.theta + p.omega * tr.t_final));
  if (cfg.record_events) {
    const bool fast = std::abs(critical_residual(s0.x, s0.y)) > band_width(p.eps);
    rec.labels = summarize_labels(tr.events, 0.0, tr.t_final, cfg.canard_min_duration, fast);
    for (const auto& r : band_residences(tr.events, 0.0, tr.t_final)) {
      rec.canard_duration = std::max(rec.canard_duration, r.t_exit - r.t_enter);
    }
    rec.canard = rec.canard_duration > cfg.canard_min_duration;
    rec.events = std::move(tr.events);
  }
  return {SectionPoint{hit.s.theta, hit.s.y}, std::move(rec)};
}

IterationResult iterate_map(const SectionPoint& pt, int n, const Params& p, const ReturnConfig& cfg) {
  if (n < 1) throw Error(ErrorKind::precondition, "iterate_map needs n >= 1");
  IterationResult res;
  res.points.reserve(static_cast<std::size_t>(n));
  res.records.reserve(static_cast<std::size_t>(n));
  SectionPoint cur = pt;
  for (int i = 0; i < n; ++i) {
    try {
      auto [next, rec] = return_map(cur, p, cfg);
      res.points.push_back(next);
      res.records.push_back(std::move(rec));
      cur = next;
    } catch (const Error& e) {
      res.error = Error(e.kind(), e.what());
      break;
    }
  }
  return res;
}

PeriodVerdict detect_period(const SectionPoint& pt, const Params& p, const ReturnConfig& cfg,
                            const PeriodOptions& opt) {
  if (opt.n_transient < 0 || opt.n_detect < 2 || !(opt.tol > 0.0)) {
    throw Error(ErrorKind::precondition, "detect_period needs n_transient >= 0, n_detect >= 2, tol > 0");
  }
  ReturnConfig quiet = cfg;
  quiet.record_events = false;

  PeriodVerdict v;
  const int total = opt.n_transient + opt.n_detect;
  const IterationResult it = iterate_map(pt, total, p, quiet);
  if (it.error) {
    v.kind = PeriodKind::failed;
    v.error = it.error->what();
    if (!it.points.empty()) v.last = it.points.back();
    return v;
  }
  v.last = it.points.back();
  const auto first = static_cast<std::size_t>(opt.n_transient);
  const auto count = static_cast<std::size_t>(opt.n_detect);
  auto pt_at = [&](std::size_t j) { return it.points[first + j]; };

  const int max_period = opt.n_detect / 2;
  std::vector<double> dev(static_cast<std::size_t>(max_period) + 1, std::numeric_limits<double>::infinity());
  for (int per = 1; per <= max_period; ++per) {
    double d = 0.0;
    for (std::size_t j = 0; j + static_cast<std::size_t>(per) < count; ++j) {
      d = std::max(d, circle_distance(pt_at(j), pt_at(j + static_cast<std::size_t>(per))));
    }
    dev[static_cast<std::size_t>(per)] = d;
  }

  int accepted = 0;
  for (int per = 1; per <= max_period; ++per) {
    if (dev[static_cast<std::size_t>(per)] < opt.tol) {
      accepted = per;
      break;
    }
  }
  // Ambiguity: a different candidate within a factor 2 of the tolerance.
  bool ambiguous = false;
  for (int per = 1; per <= max_period; ++per) {
    const double d = dev[static_cast<std::size_t>(per)];
    if (accepted == 0 && d < 2.0 * opt.tol) ambiguous = true;
    if (accepted != 0 && per < accepted && d < 2.0 * opt.tol) ambiguous = true;
  }

  if (accepted == 0) {
    v.kind = ambiguous ? PeriodKind::inconclusive : PeriodKind::aperiodic;
    v.deviation = *std::min_element(dev.begin() + 1, dev.end());
    return v;
  }
  v.kind = ambiguous ? PeriodKind::inconclusive : PeriodKind::periodic;
  v.map_period = accepted;
  v.deviation = dev[static_cast<std::size_t>(accepted)];
  const std::size_t start = it.points.size() - static_cast<std::size_t>(accepted);
  double orbit_time = 0.0;
  int wraps = 0;
  for (std::size_t j = start; j < it.points.size(); ++j) {
    v.orbit.push_back(it.points[j]);
    orbit_time += it.records[j].transit_time;
    wraps += it.records[j].phase_wraps;
  }
  v.orbit_time = orbit_time;
  v.phase_wraps = wraps;
  v.subharmonic = static_cast<int>(std::lround(p.omega * orbit_time));
  return v;
}

}  // namespace fvdp
