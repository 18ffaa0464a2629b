#pragma once

// The eps = 0 layer: desingularized slow flow on C in (x, theta) coordinates,
// its folded equilibria, and the hybrid singular flow that concatenates slow
// arcs with instantaneous fold jumps (and, under a policy, canard arcs on the
// repelling sheet).

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "fvdp/model.hpp"
#include "fvdp/ode.hpp"

namespace fvdp {

// (-x + a sin(2 pi theta), omega (x^2 - 1)); the slow flow rescaled by x^2 - 1.
std::array<double, 2> desing_field(double x, double theta, const Params& p) noexcept;

// Slow flow on C in (x, theta), valid off the folds: desing_field / (x^2 - 1).
std::array<double, 2> slow_field_xtheta(double x, double theta, const Params& p);

std::array<std::array<double, 2>, 2> desing_jacobian(double x, double theta, const Params& p) noexcept;

enum class FoldedKind { saddle, node, focus, degenerate };
const char* to_string(FoldedKind kind) noexcept;

using EigenPair = std::array<std::complex<double>, 2>;

struct FoldedEquilibrium {
  double x = 0.0;
  double theta = 0.0;
  EigenPair eigenvalues{};
  FoldedKind kind = FoldedKind::degenerate;
  double det = 0.0;
  double trace = 0.0;
};

// Classifies a point on a fold through the eigenvalues of desing_jacobian.
FoldedEquilibrium classify_folded(double x, double theta, const Params& p);

// Four equilibria (x = +-1, a sin(2 pi theta) = x) for |a| > 1, ordered x = +1
// first, each pair by increasing theta. Two degenerate ones at |a| = 1, none
// for |a| < 1.
std::vector<FoldedEquilibrium> folded_equilibria(const Params& p);

// Point on the attracting sheet at (x, theta) distance `distance` from a folded
// saddle, lying on its stable manifold: trajectories started there reach the
// saddle under the singular flow.
State folded_saddle_approach(const FoldedEquilibrium& eq, const Params& p, double distance);

enum class Sheet { positive, negative, repelling };
const char* to_string(Sheet sheet) noexcept;

struct SlowArc {
  Sheet sheet = Sheet::positive;
  std::vector<double> t;
  std::vector<State> points;
};

struct JumpRecord {
  double t = 0.0;
  State from;
  State to;
  // Continuous passage through a folded singularity onto the repelling sheet;
  // from == to (the singularity itself).
  bool passage = false;
};

enum class HybridStop { time_limit, closed_orbit };

// arcs[i] ends where jumps[i] starts and jumps[i] lands where arcs[i+1] starts.
struct HybridTrajectory {
  std::vector<SlowArc> arcs;
  std::vector<JumpRecord> jumps;
  double t_end = 0.0;
  HybridStop stop = HybridStop::time_limit;
};

enum class CanardExit { dip, slice };

struct CanardPolicy {
  // Fold arrivals within this distance (in (x, theta)) of a folded saddle or
  // node continue onto the repelling sheet instead of jumping.
  double capture_radius = 1e-6;
  // Arc length in the (x, theta) plane followed along the repelling sheet.
  double max_arc_length = 0.5;
  // Exit side for successive canards; cycled when exhausted.
  std::vector<CanardExit> exits{CanardExit::slice};
};

struct HybridConfig {
  ode::IntegratorConfig integrator = [] {
    ode::IntegratorConfig c;
    c.rtol = 1e-10;
    c.atol = {1e-12};
    c.h_max = 0.02;
    c.fold_step_cap = false;
    return c;
  }();
  double singular_tolerance = 1e-8;  // folded-singularity proximity for the nondeterminism error
  double canard_offset = 1e-7;       // initial displacement off a folded saddle along its stable direction
  int max_jumps = 10000;
};

// Singular flow from s0. The sheet is chosen by sign(s0.x) (|s0.x| >= 1
// required) and the starting point is the branch root at s0.y.
HybridTrajectory hybrid_flow_forced(const State& s0, const Params& p, double t_max,
                                    const std::optional<CanardPolicy>& policy = std::nullopt,
                                    const HybridConfig& cfg = {});

struct SingularOrbit {
  HybridTrajectory orbit;
  double period = 0.0;  // 3 - 2 ln 2
};

// Closed singular relaxation orbit of the unforced van der Pol field.
SingularOrbit singular_orbit_unforced(int samples_per_arc = 65);

}  // namespace fvdp
