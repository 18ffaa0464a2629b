#include "fvdp/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fvdp/parallel.hpp"

namespace fvdp {

const char* to_string(CanardKind kind) noexcept {
  switch (kind) {
    case CanardKind::dip: return "dip";
    case CanardKind::slice: return "slice";
    case CanardKind::regular: return "regular";
  }
  return "unknown";
}

CanardOutcome classify_canard(const State& s0, const Params& p, const CanardConfig& cfg) {
  p.validate();
  if (!(cfg.t_max > 0.0)) throw Error(ErrorKind::precondition, "t_max must be positive");
  const double band = cfg.band > 0.0 ? cfg.band : band_width(p.eps);
  const auto evs = transit_events(p, cfg.stop_at_section, band);

  CanardOutcome out;
  out.trajectory = integrate_with_events(fvdp_vector_field(p), s0, 0.0, cfg.t_max, evs, cfg.integrator);
  const Trajectory& tr = out.trajectory;
  out.events = tr.events;
  out.labels = summarize_labels(tr.events, 0.0, tr.t_final, cfg.min_duration,
                                std::abs(critical_residual(s0.x, s0.y)) > band);

  const auto residences = band_residences(tr.events, 0.0, tr.t_final);
  const BandResidence* best = nullptr;
  for (const auto& r : residences) {
    if (!best || r.t_exit - r.t_enter > best->t_exit - best->t_enter) best = &r;
  }
  if (!best || !(best->t_exit - best->t_enter > cfg.min_duration)) return out;

  out.canard_start = best->t_enter;
  out.canard_end = best->t_exit;
  out.canard_duration = best->t_exit - best->t_enter;
  const State enter = best->enter_index < tr.events.size() ? tr.events[best->enter_index].s : s0;
  out.exit_state = best->exit_index < tr.events.size() ? tr.events[best->exit_index].s : tr.final_state;
  out.origin_side = enter.x >= 0.0 ? 1 : -1;
  const double r = critical_residual(out.exit_state.x, out.exit_state.y);
  if (std::abs(r) >= 0.5 * band) {
    out.exit_side = r > 0.0 ? 1 : -1;  // sign of dx/dt on the fast fiber
  } else {
    out.exit_side = out.exit_state.x >= 0.0 ? 1 : -1;
  }
  out.kind = out.exit_side == out.origin_side ? CanardKind::dip : CanardKind::slice;
  return out;
}

double state_distance(const State& a, const State& b) noexcept {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double dth = phase_difference(a.theta, b.theta);
  return std::sqrt(dx * dx + dy * dy + dth * dth);
}

DivergenceProfile divergence_profile(const State& a, const State& b, const Params& p, const DivergenceConfig& cfg) {
  p.validate();
  if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0)) throw Error(ErrorKind::precondition, "dt and t_max must be positive");
  IntegratorConfig icfg = cfg.integrator;
  icfg.output_dt = cfg.dt;
  icfg.store_samples = true;
  const auto field = fvdp_vector_field(p);
  const Trajectory ta = integrate(field, a, 0.0, cfg.t_max, icfg);
  const Trajectory tb = integrate(field, b, 0.0, cfg.t_max, icfg);

  DivergenceProfile out;
  const std::size_t n = std::min(ta.samples.size(), tb.samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double d = state_distance(ta.samples[i].s, tb.samples[i].s);
    out.t.push_back(ta.samples[i].t);
    out.separation.push_back(d);
    if (!out.t_exceed && d > 1.0) out.t_exceed = ta.samples[i].t;
  }

  CanardConfig ccfg = cfg.canard;
  ccfg.integrator = cfg.integrator;
  ccfg.t_max = cfg.t_max;
  const CanardOutcome ca = classify_canard(a, p, ccfg);
  const CanardOutcome cb = classify_canard(b, p, ccfg);
  std::optional<double> start;
  for (const CanardOutcome* c : {&ca, &cb}) {
    if (c->kind == CanardKind::regular) continue;
    out.canard_exit = out.canard_exit ? std::min(*out.canard_exit, c->canard_end) : c->canard_end;
    start = start ? std::min(*start, c->canard_start) : c->canard_start;
  }
  if (out.canard_exit && !out.t.empty()) {
    const auto it = std::lower_bound(out.t.begin(), out.t.end(), *out.canard_exit);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - out.t.begin()), out.t.size() - 1);
    out.separation_at_exit = out.separation[k];
  }
  const double limit = start ? *start : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.t.size() && out.t[i] < limit; ++i) {
    out.max_before_canard = std::max(out.max_before_canard, out.separation[i]);
  }
  return out;
}

double Quadrilateral::area() const noexcept {
  const std::array<SectionPoint, 4> ring{v[0], v[1], v[3], v[2]};
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % 4];
    s += a.theta * b.y - b.theta * a.y;
  }
  return 0.5 * std::abs(s);
}

double Quadrilateral::theta_min() const noexcept {
  return std::min({v[0].theta, v[1].theta, v[2].theta, v[3].theta});
}
double Quadrilateral::theta_max() const noexcept {
  return std::max({v[0].theta, v[1].theta, v[2].theta, v[3].theta});
}
double Quadrilateral::y_min() const noexcept { return std::min({v[0].y, v[1].y, v[2].y, v[3].y}); }
double Quadrilateral::y_max() const noexcept { return std::max({v[0].y, v[1].y, v[2].y, v[3].y}); }

void Quadrilateral::validate() const {
  double diam2 = 0.0;
  for (const auto& a : v) {
    if (!std::isfinite(a.theta) || !std::isfinite(a.y)) throw Error(ErrorKind::precondition, "nonfinite vertex");
    for (const auto& b : v) {
      diam2 = std::max(diam2, (a.theta - b.theta) * (a.theta - b.theta) + (a.y - b.y) * (a.y - b.y));
    }
  }
  if (!(area() > 1e-12 * diam2)) throw Error(ErrorKind::precondition, "quadrilateral has zero area");
}

Quadrilateral Quadrilateral::canard_wedge() {
  return {{{{0.4174, -0.67509216}, {0.4274, -0.67657616}, {0.41737, -0.675137708}, {0.42737, -0.676621708}}}};
}

int monotone_segments(const std::vector<SectionPoint>& pts, double noise) {
  int segments = 0;
  int dir = 0;
  std::size_t anchor = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = pts[i].theta - pts[anchor].theta;
    if (std::abs(d) <= noise) continue;
    const int sd = d > 0.0 ? 1 : -1;
    if (sd != dir) {
      ++segments;
      dir = sd;
    }
    anchor = i;
  }
  return std::max(segments, pts.empty() ? 0 : 1);
}

namespace {

SectionPoint lerp(const SectionPoint& a, const SectionPoint& b, double s) {
  return {a.theta + s * (b.theta - a.theta), a.y + s * (b.y - a.y)};
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void map_points(const std::vector<SectionPoint>& in, std::vector<SectionPoint>& out, std::vector<char>& ok,
                const Params& p, const HorseshoeConfig& cfg) {
  out.assign(in.size(), SectionPoint{kNaN, kNaN});
  ok.assign(in.size(), 0);
  parallel_for(in.size(), cfg.jobs, [&](std::size_t i) {
    try {
      out[i] = return_map(in[i], p, cfg.ret).first;
      ok[i] = 1;
    } catch (const Error&) {
    }
  });
}

EdgeImage map_edge(const SectionPoint& a, const SectionPoint& b, const Quadrilateral& q, double slope,
                   const Params& p, int n, const HorseshoeConfig& cfg) {
  // Keyed by edge parameter so refinement keeps sample order.
  std::map<double, std::pair<SectionPoint, bool>> samples;
  std::vector<double> params;
  for (int i = 0; i < n; ++i) params.push_back(static_cast<double>(i) / (n - 1));
  int inserted = 0;
  while (!params.empty()) {
    std::vector<SectionPoint> pre;
    for (double s : params) pre.push_back(lerp(a, b, s));
    std::vector<SectionPoint> img;
    std::vector<char> ok;
    map_points(pre, img, ok, p, cfg);
    for (std::size_t i = 0; i < params.size(); ++i) samples[params[i]] = {img[i], ok[i] != 0};
    params.clear();
    for (auto it = samples.begin(); std::next(it) != samples.end(); ++it) {
      const auto nx = std::next(it);
      if (!it->second.second || !nx->second.second) continue;
      if (std::abs(nx->second.first.theta - it->second.first.theta) <= cfg.refine_gap) continue;
      if (nx->first - it->first < 1e-12) continue;
      if (inserted >= cfg.max_refine) break;
      params.push_back(0.5 * (it->first + nx->first));
      ++inserted;
    }
  }

  EdgeImage e;
  for (const auto& [s, v] : samples) {
    e.s.push_back(s);
    e.preimage.push_back(lerp(a, b, s));
    e.image.push_back(v.first);
    if (!v.second) e.failures.push_back(e.s.size() - 1);
  }
  std::vector<SectionPoint> good;
  for (std::size_t i = 0; i < e.image.size(); ++i)
    if (std::isfinite(e.image[i].theta)) good.push_back(e.image[i]);
  if (good.empty()) return e;
  double tmin = good[0].theta, tmax = tmin, ymin = good[0].y, ymax = ymin;
  double wmin = good[0].y - slope * good[0].theta, wmax = wmin;
  for (const auto& g : good) {
    tmin = std::min(tmin, g.theta);
    tmax = std::max(tmax, g.theta);
    ymin = std::min(ymin, g.y);
    ymax = std::max(ymax, g.y);
    const double w = g.y - slope * g.theta;
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  e.fold_theta = tmin;
  e.theta_extent = tmax - tmin;
  e.y_extent = ymax - ymin;
  e.transverse_extent = wmax - wmin;
  e.covers = tmin <= q.theta_min() && tmax >= q.theta_max();
  e.monotone_segments = monotone_segments(good, cfg.monotone_noise);
  return e;
}

}  // namespace

HorseshoeReport horseshoe_check(const Quadrilateral& q, const Params& p, int n_samples, const HorseshoeConfig& cfg) {
  p.validate();
  q.validate();
  if (n_samples < 100) throw Error(ErrorKind::precondition, "horseshoe_check needs n_samples >= 100");
  HorseshoeReport rep;
  rep.quad = q;
  const double s_top = (q.v[1].y - q.v[0].y) / (q.v[1].theta - q.v[0].theta);
  const double s_bot = (q.v[3].y - q.v[2].y) / (q.v[3].theta - q.v[2].theta);
  rep.slope = 0.5 * (s_top + s_bot);
  rep.top = map_edge(q.v[0], q.v[1], q, rep.slope, p, n_samples, cfg);
  rep.bottom = map_edge(q.v[2], q.v[3], q, rep.slope, p, n_samples, cfg);
  rep.complete = rep.top.failures.empty() && rep.bottom.failures.empty();

  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin, ymin = tmin, ymax = -tmin, wmin = tmin,
         wmax = -tmin;
  for (const EdgeImage* e : {&rep.top, &rep.bottom}) {
    for (const auto& g : e->image) {
      if (!std::isfinite(g.theta)) continue;
      tmin = std::min(tmin, g.theta);
      tmax = std::max(tmax, g.theta);
      ymin = std::min(ymin, g.y);
      ymax = std::max(ymax, g.y);
      const double w = g.y - rep.slope * g.theta;
      wmin = std::min(wmin, w);
      wmax = std::max(wmax, w);
    }
  }
  if (tmax > tmin) {
    rep.aspect_raw = (tmax - tmin) / (ymax - ymin);
    rep.aspect_transverse = (tmax - tmin) / (wmax - wmin);
  }
  rep.fold_left = rep.top.fold_theta < q.theta_min() && rep.bottom.fold_theta < q.theta_min();
  rep.evidence = rep.complete && rep.top.covers && rep.bottom.covers && rep.fold_left &&
                 rep.top.monotone_segments == 2 && rep.bottom.monotone_segments == 2;
  return rep;
}

}  // namespace fvdp
