#include "fvdp/integrator.hpp"

#include <cmath>

namespace fvdp {

void ode::IntegratorConfig::validate(std::size_t dim) const {
  if (!(rtol > 0.0 && rtol < 1.0)) throw Error(ErrorKind::precondition, "rtol must lie in (0, 1)");
  if (atol.size() != 1 && atol.size() != dim) throw Error(ErrorKind::precondition, "atol must have 1 or dim entries");
  for (double a : atol)
    if (!(a > 0.0)) throw Error(ErrorKind::precondition, "atol entries must be positive");
  if (!(h_max > 0.0)) throw Error(ErrorKind::precondition, "h_max must be positive");
  if (h_init < 0.0) throw Error(ErrorKind::precondition, "h_init must be non-negative");
  if (max_steps <= 0) throw Error(ErrorKind::precondition, "max_steps must be positive");
  if (output_dt < 0.0) throw Error(ErrorKind::precondition, "output_dt must be non-negative");
}

VectorField fvdp_vector_field(const Params& p) {
  p.validate();
  return {[p](const Vec3& u) { return fvdp_rhs(u, p); }, [p](const Vec3& u) { return fvdp_jacobian_raw(u, p); }};
}

VectorField unforced_vector_field(double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::invalid_state, "eps must be positive");
  return {[eps](const Vec3& u) { return Vec3{critical_residual(u[0], u[1]) / eps, -u[0], 0.0}; },
          [eps](const Vec3& u) {
            return Mat3{{{(1.0 - u[0] * u[0]) / eps, 1.0 / eps, 0.0}, {-1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}};
          }};
}

double band_width(double eps) noexcept { return 10.0 * std::sqrt(eps); }

namespace {

State to_state(const Vec3& u) { return State{u[0], u[1], reduce_phase(u[2])}; }

Trajectory convert(const ode::RawSolution<3>& raw, std::span<const EventSpec> evs) {
  Trajectory tr;
  tr.samples.reserve(raw.t.size());
  for (std::size_t i = 0; i < raw.t.size(); ++i) tr.samples.push_back({raw.t[i], to_state(raw.u[i])});
  tr.events.reserve(raw.events.size());
  for (const auto& e : raw.events) tr.events.push_back({e.t, to_state(e.u), evs[e.index].label, e.sign});
  tr.termination = raw.termination;
  tr.t_final = raw.t_final;
  tr.final_state = to_state(raw.u_final);
  tr.accepted_steps = raw.accepted_steps;
  tr.rejected_steps = raw.rejected_steps;
  return tr;
}

}  // namespace

Trajectory integrate_with_events(const VectorField& field, const State& s0, double t0, double t1,
                                 std::span<const EventSpec> evs, const IntegratorConfig& cfg) {
  if (!s0.finite()) throw Error(ErrorKind::invalid_state, "initial state has nonfinite components");
  try {
    return convert(ode::solve<3>(field, t0, s0.as_vec(), t1, cfg, evs), evs);
  } catch (const ode::IntegrationFailure<3>& f) {
    throw IntegrationError(f.kind(), f.what(), convert(f.partial(), evs));
  }
}

Trajectory integrate(const VectorField& field, const State& s0, double t0, double t1, const IntegratorConfig& cfg) {
  return integrate_with_events(field, s0, t0, t1, {}, cfg);
}

namespace events {

EventSpec section(bool terminal) {
  return {[](double, const Vec3& u) { return u[0]; }, Direction::falling, terminal, kSection, {}};
}

EventSpec fold(Fold which, double band) {
  const double xf = which == Fold::plus ? 1.0 : -1.0;
  return {[xf](double, const Vec3& u) { return u[0] - xf; }, Direction::any, false,
          which == Fold::plus ? kFoldPlus : kFoldMinus,
          [band](double, const Vec3& u) { return std::abs(critical_residual(u[0], u[1])) <= band; }};
}

EventSpec phase_wrap() {
  return {[](double, const Vec3& u) { return std::sin(kTwoPi * 0.5 * u[2]); }, Direction::any, false, kPhaseWrap, {}};
}

EventSpec critical_crossing() {
  return {[](double, const Vec3& u) { return critical_residual(u[0], u[1]); }, Direction::any, false, kCritical, {}};
}

EventSpec jump_onset(double delta) {
  return {[delta](double, const Vec3& u) {
            const double r = critical_residual(u[0], u[1]);
            return r * r - delta * delta;
          },
          Direction::rising, false, kJump, {}};
}

EventSpec repelling_band(double delta) {
  return {[delta](double, const Vec3& u) {
            const double r = critical_residual(u[0], u[1]);
            return std::min(1.0 - u[0] * u[0], delta * delta - r * r);
          },
          Direction::any, false, kBand, {}};
}

EventSpec level(std::size_t component, double value, Direction dir, bool terminal, std::string label) {
  return {[component, value](double, const Vec3& u) { return u[component] - value; }, dir, terminal, std::move(label),
          {}};
}

}  // namespace events

}  // namespace fvdp
