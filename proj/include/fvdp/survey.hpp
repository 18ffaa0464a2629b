#pragma once

// Parameter studies: the unforced relaxation period as eps -> 0 and the
// (a, omega) sweep for entrainment strips.

#include <cstdint>
#include <string>
#include <vector>

#include "fvdp/integrator.hpp"
#include "fvdp/returnmap.hpp"

namespace fvdp {

// 3 - 2 ln 2, the eps -> 0 period of the unforced oscillator.
double singular_period() noexcept;

struct VdpPeriodConfig {
  IntegratorConfig integrator = [] {
    IntegratorConfig c;
    c.rtol = 1e-10;
    c.atol = {1e-12};
    c.store_samples = false;
    return c;
  }();
  int transient_crossings = 5;  // rising crossings of x = 0 discarded
  int periods = 3;              // consecutive periods averaged
  double t_max = 60.0;
};

struct PeriodResult {
  double eps = 0.0;
  double period = 0.0;
  double singular = 0.0;  // T0
  double gap = 0.0;       // period - T0
  std::vector<double> periods;
  double half_asymmetry = 0.0;  // |rising->falling - falling->rising| over the last period
  std::string config_digest;
};

PeriodResult vdp_period(double eps, const VdpPeriodConfig& cfg = {});

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  // Node i of n, endpoints included; a single node sits at the midpoint.
  double at(std::size_t i, std::size_t n) const noexcept;
};

struct SweepConfig {
  ReturnConfig ret = [] {
    ReturnConfig r;
    r.integrator = IntegratorConfig::sweep();
    r.record_events = false;
    return r;
  }();
  PeriodOptions period{};
  SectionPoint standard{0.0, -0.6752};
  int extra_starts = 8;
  double y_lo = -1.0;  // random starts: theta uniform on [0, 1), y uniform on [y_lo, y_hi]
  double y_hi = -0.2;
  double same_attractor = 1e-4;  // orbit-point distance identifying two verdicts
  std::uint64_t seed = 1;
  unsigned jobs = 0;
};

struct Attractor {
  int map_period = 0;
  int subharmonic = 0;
  double orbit_time = 0.0;
  SectionPoint point;  // first orbit point
  int hits = 0;        // starts converging to it
};

struct SweepCell {
  std::size_t ia = 0;
  std::size_t iw = 0;
  double a = 0.0;
  double omega = 0.0;
  PeriodKind verdict = PeriodKind::failed;  // verdict of the standard start
  int subharmonic = 0;                      // standard start, when periodic
  std::vector<Attractor> attractors;        // distinct periodic attractors over all starts
  int aperiodic = 0;
  int inconclusive = 0;
  int failed = 0;
  std::vector<std::string> errors;
};

struct SweepGrid {
  Range a;
  Range omega;
  std::size_t na = 0;
  std::size_t nw = 0;
  double eps = 0.0;
  SweepConfig cfg;
  std::vector<SweepCell> cells;  // index ia * nw + iw

  const SweepCell& at(std::size_t ia, std::size_t iw) const { return cells[ia * nw + iw]; }
};

SweepGrid sweep(const Range& a, const Range& omega, double eps, std::size_t na, std::size_t nw,
                const SweepConfig& cfg = {});

// Sweep cell evaluation on its own; deterministic in (a, omega, eps, cfg, cell index).
SweepCell sweep_cell(double a, double omega, double eps, std::size_t cell_index, const SweepConfig& cfg);

// A cell whose starts all converge to one periodic attractor, with every
// existing 4-neighbour doing the same with an equal subharmonic.
bool strip_interior(const SweepGrid& grid, std::size_t ia, std::size_t iw);

struct SweepSummary {
  int interior_cells = 0;
  std::vector<int> interior_subharmonics;  // sorted distinct values
  std::vector<std::size_t> even_interior;  // cell indices violating oddness
  std::vector<std::size_t> overlaps;       // cells with two attractors whose subharmonics differ by 2
};

SweepSummary summarize(const SweepGrid& grid);

}  // namespace fvdp
