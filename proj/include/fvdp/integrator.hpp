#pragma once

// Trajectories of three-dimensional fields (x, y, theta) with a labelled event
// log. Event functions receive the raw integration vector, whose third
// component is the *unwrapped* phase; every State handed back to callers has
// theta reduced to [0, 1).

#include <span>
#include <string>
#include <vector>

#include "fvdp/model.hpp"
#include "fvdp/ode.hpp"

namespace fvdp {

using ode::Direction;
using ode::IntegratorConfig;
using ode::Method;
using ode::Termination;

using VectorField = ode::System<3>;
using EventSpec = ode::EventFn<3>;

VectorField fvdp_vector_field(const Params& p);

// Unforced van der Pol lifted to three components with a frozen phase.
VectorField unforced_vector_field(double eps);

struct Sample {
  double t;
  State s;
};

struct EventRecord {
  double t;
  State s;
  std::string label;
  int sign;  // +1 when the event function increased through zero
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<EventRecord> events;
  Termination termination = Termination::reached_end;
  double t_final = 0.0;
  State final_state;
  long accepted_steps = 0;
  long rejected_steps = 0;
};

class IntegrationError : public Error {
 public:
  IntegrationError(ErrorKind kind, const std::string& what, Trajectory partial)
      : Error(kind, what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

Trajectory integrate(const VectorField& field, const State& s0, double t0, double t1, const IntegratorConfig& cfg);

Trajectory integrate_with_events(const VectorField& field, const State& s0, double t0, double t1,
                                 std::span<const EventSpec> events, const IntegratorConfig& cfg);

// Stock events. Labels are the strings used throughout the event logs.
namespace events {

inline constexpr const char* kSection = "section";
inline constexpr const char* kFoldPlus = "fold+";
inline constexpr const char* kFoldMinus = "fold-";
inline constexpr const char* kPhaseWrap = "theta_wrap";
inline constexpr const char* kCritical = "c_cross";
inline constexpr const char* kJump = "jump";
inline constexpr const char* kBand = "band";
inline constexpr const char* kCanard = "canard";

// x = 0 with x decreasing.
EventSpec section(bool terminal);
// x = +-1 crossings that happen within `band` of C (|residual| <= band), i.e.
// passages of the fold curve rather than fast fibers sweeping past x = +-1.
EventSpec fold(Fold which, double band);
// theta passes an integer.
EventSpec phase_wrap();
// Sign change of the critical residual.
EventSpec critical_crossing();
// |residual| rises through delta.
EventSpec jump_onset(double delta);
// Entry into (+1) / exit from (-1) the region |x| < 1, |residual| < delta that
// hugs the repelling sheet.
EventSpec repelling_band(double delta);
// u[component] crosses level.
EventSpec level(std::size_t component, double value, Direction dir, bool terminal, std::string label);

}  // namespace events

// Jump-detection and canard band width 10 sqrt(eps).
double band_width(double eps) noexcept;

}  // namespace fvdp
