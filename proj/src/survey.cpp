#include "fvdp/survey.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "fvdp/parallel.hpp"

namespace fvdp {

double singular_period() noexcept { return 3.0 - 2.0 * std::log(2.0); }

PeriodResult vdp_period(double eps, const VdpPeriodConfig& cfg) {
  if (!(eps >= 1e-4 && eps <= 1.0)) throw Error(ErrorKind::precondition, "vdp_period needs 1e-4 <= eps <= 1");
  if (cfg.transient_crossings < 0 || cfg.periods < 1) {
    throw Error(ErrorKind::precondition, "need transient_crossings >= 0 and periods >= 1");
  }
  const std::vector<EventSpec> evs{events::level(0, 0.0, Direction::rising, false, "up"),
                                   events::level(0, 0.0, Direction::falling, false, "down")};
  const Trajectory tr = integrate_with_events(unforced_vector_field(eps), State{2.0, kFoldY, 0.0}, 0.0, cfg.t_max,
                                              evs, cfg.integrator);
  std::vector<double> up, down;
  for (const auto& e : tr.events) (e.label == "up" ? up : down).push_back(e.t);
  const auto need = static_cast<std::size_t>(cfg.transient_crossings + cfg.periods + 1);
  if (up.size() < need) throw Error(ErrorKind::no_convergence, "too few oscillations within t_max");

  PeriodResult r;
  r.eps = eps;
  r.singular = singular_period();
  double sum = 0.0;
  for (int k = 0; k < cfg.periods; ++k) {
    const auto i = static_cast<std::size_t>(cfg.transient_crossings + k);
    r.periods.push_back(up[i + 1] - up[i]);
    sum += r.periods.back();
  }
  r.period = sum / cfg.periods;
  r.gap = r.period - r.singular;

  const double t_up = up[need - 2];
  const double t_next = up[need - 1];
  const auto d = std::upper_bound(down.begin(), down.end(), t_up);
  if (d == down.end() || *d > t_next) throw Error(ErrorKind::no_convergence, "missing falling crossing");
  r.half_asymmetry = std::abs((*d - t_up) - (t_next - *d));

  char buf[160];
  std::snprintf(buf, sizeof buf, "rodas4 rtol=%.3g atol=%.3g h_max=%.3g transient=%d periods=%d",
                cfg.integrator.rtol, cfg.integrator.atol.front(), cfg.integrator.h_max, cfg.transient_crossings,
                cfg.periods);
  r.config_digest = buf;
  return r;
}

double Range::at(std::size_t i, std::size_t n) const noexcept {
  if (n <= 1) return 0.5 * (lo + hi);
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool same_orbit(const Attractor& at, const PeriodVerdict& v, double tol) {
  if (at.map_period != v.map_period) return false;
  return std::any_of(v.orbit.begin(), v.orbit.end(),
                     [&](const SectionPoint& q) { return circle_distance(q, at.point) < tol; });
}

}  // namespace

SweepCell sweep_cell(double a, double omega, double eps, std::size_t cell_index, const SweepConfig& cfg) {
  SweepCell cell;
  cell.a = a;
  cell.omega = omega;
  const Params p{a, omega, eps};
  p.validate();

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(cell_index), static_cast<std::uint32_t>(cell_index >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<SectionPoint> starts{cfg.standard};
  for (int k = 0; k < cfg.extra_starts; ++k) {
    const double th = unit(rng);
    const double y = cfg.y_lo + (cfg.y_hi - cfg.y_lo) * unit(rng);
    starts.push_back({th, y});
  }

  for (std::size_t k = 0; k < starts.size(); ++k) {
    const PeriodVerdict v = detect_period(starts[k], p, cfg.ret, cfg.period);
    if (k == 0) {
      cell.verdict = v.kind;
      if (v.kind == PeriodKind::periodic) cell.subharmonic = v.subharmonic;
    }
    switch (v.kind) {
      case PeriodKind::aperiodic: ++cell.aperiodic; break;
      case PeriodKind::inconclusive: ++cell.inconclusive; break;
      case PeriodKind::failed:
        ++cell.failed;
        cell.errors.push_back(v.error);
        break;
      case PeriodKind::periodic: {
        auto it = std::find_if(cell.attractors.begin(), cell.attractors.end(),
                               [&](const Attractor& at) { return same_orbit(at, v, cfg.same_attractor); });
        if (it != cell.attractors.end()) {
          ++it->hits;
        } else {
          cell.attractors.push_back({v.map_period, v.subharmonic, v.orbit_time, v.orbit.front(), 1});
        }
        break;
      }
    }
  }
  return cell;
}

SweepGrid sweep(const Range& a, const Range& omega, double eps, std::size_t na, std::size_t nw,
                const SweepConfig& cfg) {
  if (na < 1 || nw < 1) throw Error(ErrorKind::precondition, "grid dimensions must be at least 1x1");
  if (cfg.extra_starts < 0) throw Error(ErrorKind::precondition, "extra_starts must be non-negative");
  Params{a.lo, omega.lo, eps}.validate();
  Params{a.hi, omega.hi, eps}.validate();

  SweepGrid g;
  g.a = a;
  g.omega = omega;
  g.na = na;
  g.nw = nw;
  g.eps = eps;
  g.cfg = cfg;
  g.cells.resize(na * nw);
  parallel_for(na * nw, cfg.jobs, [&](std::size_t idx) {
    const std::size_t ia = idx / nw, iw = idx % nw;
    SweepCell cell;
    try {
      cell = sweep_cell(a.at(ia, na), omega.at(iw, nw), eps, idx, cfg);
    } catch (const std::exception& e) {
      cell.a = a.at(ia, na);
      cell.omega = omega.at(iw, nw);
      cell.failed = 1;
      cell.errors.push_back(e.what());
    }
    cell.ia = ia;
    cell.iw = iw;
    g.cells[idx] = std::move(cell);
  });
  return g;
}

namespace {

bool single_periodic(const SweepCell& c) {
  return c.attractors.size() == 1 && c.aperiodic == 0 && c.inconclusive == 0 && c.failed == 0;
}

}  // namespace

bool strip_interior(const SweepGrid& grid, std::size_t ia, std::size_t iw) {
  const SweepCell& c = grid.at(ia, iw);
  if (!single_periodic(c)) return false;
  const int n = c.attractors.front().subharmonic;
  const long da[4] = {-1, 1, 0, 0};
  const long dw[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const long ja = static_cast<long>(ia) + da[k];
    const long jw = static_cast<long>(iw) + dw[k];
    if (ja < 0 || jw < 0 || ja >= static_cast<long>(grid.na) || jw >= static_cast<long>(grid.nw)) continue;
    const SweepCell& nb = grid.at(static_cast<std::size_t>(ja), static_cast<std::size_t>(jw));
    if (!single_periodic(nb) || nb.attractors.front().subharmonic != n) return false;
  }
  return true;
}

SweepSummary summarize(const SweepGrid& grid) {
  SweepSummary s;
  std::set<int> subs;
  for (std::size_t idx = 0; idx < grid.cells.size(); ++idx) {
    const SweepCell& c = grid.cells[idx];
    if (strip_interior(grid, c.ia, c.iw)) {
      ++s.interior_cells;
      const int n = c.attractors.front().subharmonic;
      subs.insert(n);
      if (n % 2 == 0) s.even_interior.push_back(idx);
    }
    bool overlap = false;
    for (std::size_t i = 0; i < c.attractors.size(); ++i)
      for (std::size_t j = i + 1; j < c.attractors.size(); ++j)
        if (std::abs(c.attractors[i].subharmonic - c.attractors[j].subharmonic) == 2) overlap = true;
    if (overlap) s.overlaps.push_back(idx);
  }
  s.interior_subharmonics.assign(subs.begin(), subs.end());
  return s;
}

}  // namespace fvdp
