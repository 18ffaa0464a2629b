#pragma once

// Adaptive one-step integration of small autonomous systems u' = F(u) with
// dense output and located events. Two schemes share one driver:
//
//   rodas4  - 6-stage stiffly accurate Rosenbrock method of order 4(3),
//             L-stable, with a third-order continuous extension. Uses the
//             analytic Jacobian when the system provides one.
//   dopri5  - explicit Dormand-Prince 5(4) with fourth-order dense output,
//             used to cross-check the implicit scheme.
//
// The driver never wraps phases: whatever the caller integrates is stored
// as-is. Wrapping happens when converting to user-facing types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fvdp/errors.hpp"

namespace fvdp::ode {

template <std::size_t N>
using Vec = std::array<double, N>;
template <std::size_t N>
using Mat = std::array<Vec<N>, N>;

enum class Method { rodas4, dopri5 };

struct IntegratorConfig {
  double rtol = 1e-10;
  std::vector<double> atol{1e-12};  // one entry (broadcast) or one per component
  double h_init = 0.0;              // 0 selects an automatic initial step
  double h_max = 0.05;
  long max_steps = 2'000'000;
  Method method = Method::rodas4;
  // Divide h_max by 100 while |u[0]| is within [0.9, 1.1] (the fold band).
  bool fold_step_cap = true;
  bool store_samples = true;
  double output_dt = 0.0;  // > 0: samples on a uniform grid instead of at steps

  void validate(std::size_t dim) const;

  // Tight step cap: on the slow stretches the embedded estimate alone lets
  // errors through that the canard later amplifies.
  static IntegratorConfig precise() {
    IntegratorConfig c;
    c.h_max = 0.005;
    return c;
  }
  static IntegratorConfig sweep() {
    IntegratorConfig c;
    c.rtol = 1e-7;
    c.atol = {1e-9};
    return c;
  }
};

enum class Direction { rising, falling, any };

template <std::size_t N>
struct EventFn {
  std::function<double(double, const Vec<N>&)> fn;
  Direction direction = Direction::any;
  bool terminal = false;
  std::string label;
  // Optional guard evaluated at the located root; rejected crossings are
  // neither logged nor terminal.
  std::function<bool(double, const Vec<N>&)> accept;
};

template <std::size_t N>
struct RawEvent {
  double t;
  Vec<N> u;
  std::size_t index;  // position in the event list
  int sign;           // +1 rising, -1 falling
};

enum class Termination { reached_end, terminal_event };

template <std::size_t N>
struct RawSolution {
  std::vector<double> t;
  std::vector<Vec<N>> u;
  std::vector<RawEvent<N>> events;
  Termination termination = Termination::reached_end;
  double t_final = 0.0;
  Vec<N> u_final{};
  long accepted_steps = 0;
  long rejected_steps = 0;
};

template <std::size_t N>
struct System {
  std::function<Vec<N>(const Vec<N>&)> rhs;
  std::function<Mat<N>(const Vec<N>&)> jacobian;  // finite differences when empty
};

// Thrown when integration stops before t_end for a numerical reason. Carries
// everything integrated so far.
template <std::size_t N>
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(ErrorKind kind, const std::string& what, RawSolution<N> partial)
      : Error(kind, what), partial_(std::move(partial)) {}
  const RawSolution<N>& partial() const noexcept { return partial_; }

 private:
  RawSolution<N> partial_;
};

class RootRefinementFailure : public Error {
 public:
  RootRefinementFailure(const std::string& what, double lo, double hi)
      : Error(ErrorKind::root_refinement, what), lo_(lo), hi_(hi) {}
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_, hi_;
};

inline constexpr double kEventTolerance = 1e-10;
inline constexpr double kEventWindow = 1e-12;

namespace detail {

template <std::size_t N>
bool lu_factor(Mat<N>& a, std::array<std::size_t, N>& piv) {
  for (std::size_t k = 0; k < N; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < N; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    piv[k] = p;
    if (a[p][k] == 0.0) return false;
    if (p != k) std::swap(a[p], a[k]);
    for (std::size_t i = k + 1; i < N; ++i) {
      a[i][k] /= a[k][k];
      for (std::size_t j = k + 1; j < N; ++j) a[i][j] -= a[i][k] * a[k][j];
    }
  }
  return true;
}

template <std::size_t N>
void lu_solve(const Mat<N>& lu, const std::array<std::size_t, N>& piv, Vec<N>& b) {
  for (std::size_t k = 0; k < N; ++k) {
    if (piv[k] != k) std::swap(b[k], b[piv[k]]);
    for (std::size_t i = k + 1; i < N; ++i) b[i] -= lu[i][k] * b[k];
  }
  for (std::size_t k = N; k-- > 0;) {
    for (std::size_t j = k + 1; j < N; ++j) b[k] -= lu[k][j] * b[j];
    b[k] /= lu[k][k];
  }
}

template <std::size_t N>
Mat<N> fd_jacobian(const std::function<Vec<N>(const Vec<N>&)>& f, const Vec<N>& u, const Vec<N>& fu) {
  Mat<N> jac{};
  for (std::size_t j = 0; j < N; ++j) {
    Vec<N> v = u;
    const double h = 1.4901161193847656e-08 * std::max(1.0, std::abs(u[j]));
    v[j] += h;
    const Vec<N> fv = f(v);
    for (std::size_t i = 0; i < N; ++i) jac[i][j] = (fv[i] - fu[i]) / (v[j] - u[j]);
  }
  return jac;
}

template <std::size_t N>
bool all_finite(const Vec<N>& v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

// RODAS4 tableau (Hairer & Wanner), as distributed with Boost.Odeint.
struct Rodas4 {
  static constexpr double gamma = 0.25;
  static constexpr double a21 = 1.544;
  static constexpr double a31 = 0.9466785280815826, a32 = 0.2557011698983284;
  static constexpr double a41 = 3.314825187068521, a42 = 2.896124015972201, a43 = 0.9986419139977817;
  static constexpr double a51 = 1.221224509226641, a52 = 6.019134481288629, a53 = 12.53708332932087,
                          a54 = -0.6878860361058950;
  static constexpr double c21 = -5.6688;
  static constexpr double c31 = -2.430093356833875, c32 = -0.2063599157091915;
  static constexpr double c41 = -0.1073529058151375, c42 = -9.594562251023355, c43 = -20.47028614809616;
  static constexpr double c51 = 7.496443313967647, c52 = -10.24680431464352, c53 = -33.99990352819905,
                          c54 = 11.70890893206160;
  static constexpr double c61 = 8.083246795921522, c62 = -7.981132988064893, c63 = -31.52159432874371,
                          c64 = 16.31930543123136, c65 = -6.058818238834054;
  static constexpr double d21 = 10.12623508344586, d22 = -7.487995877610167, d23 = -34.80091861555747,
                          d24 = -7.992771707568823, d25 = 1.025137723295662;
  static constexpr double d31 = -0.6762803392801253, d32 = 6.087714651680015, d33 = 16.43084320892478,
                          d34 = 24.76722511418386, d35 = -6.594389125716872;
};

// Accepted step with its continuous extension.
template <std::size_t N>
struct DenseStep {
  Method method = Method::rodas4;
  double t0 = 0.0, t1 = 0.0;
  Vec<N> u0{}, u1{};
  // rodas4: k[0], k[1] hold the two correction vectors.
  // dopri5: k[0..6] hold the stage derivatives k1..k7.
  std::array<Vec<N>, 7> k{};

  Vec<N> eval(double t) const {
    const double h = t1 - t0;
    const double s = h != 0.0 ? (t - t0) / h : 0.0;
    Vec<N> out{};
    if (method == Method::rodas4) {
      const double s1 = 1.0 - s;
      for (std::size_t i = 0; i < N; ++i) out[i] = u0[i] * s1 + s * (u1[i] + s1 * (k[0][i] + s * k[1][i]));
      return out;
    }
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    const double x1 = 5.0 * (2558722523.0 - 31403016.0 * s) / 11282082432.0;
    const double x3 = 100.0 * (882725551.0 - 15701508.0 * s) / 32700410799.0;
    const double x4 = 25.0 * (443332067.0 - 31403016.0 * s) / 1880347072.0;
    const double x5 = 32805.0 * (23143187.0 - 3489224.0 * s) / 199316789632.0;
    const double x6 = 55.0 * (29972135.0 - 7076736.0 * s) / 822651844.0;
    const double x7 = 10.0 * (7414447.0 - 829305.0 * s) / 29380423.0;
    const double sm1 = s - 1.0, s2 = s * s;
    const double A = s2 * (3.0 - 2.0 * s), B = s2 * sm1, C = s2 * sm1 * sm1, D = s * sm1 * sm1;
    const double w1 = A * b1 - C * x1 + D, w3 = A * b3 + C * x3, w4 = A * b4 - C * x4, w5 = A * b5 + C * x5,
                 w6 = A * b6 - C * x6, w7 = B + C * x7;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = u0[i] + h * (w1 * k[0][i] + w3 * k[2][i] + w4 * k[3][i] + w5 * k[4][i] + w6 * k[5][i] + w7 * k[6][i]);
    return out;
  }
};

template <std::size_t N>
class Stepper {
 public:
  Stepper(const System<N>& sys, const IntegratorConfig& cfg) : sys_(sys), cfg_(cfg) {
    for (std::size_t i = 0; i < N; ++i) atol_[i] = cfg.atol.size() == 1 ? cfg.atol[0] : cfg.atol[i];
  }

  // Weighted RMS norm used by both the controller and the initial-step guess.
  double error_norm(const Vec<N>& err, const Vec<N>& ua, const Vec<N>& ub) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = atol_[i] + cfg_.rtol * std::max(std::abs(ua[i]), std::abs(ub[i]));
      acc += (err[i] / sk) * (err[i] / sk);
    }
    return std::sqrt(acc / static_cast<double>(N));
  }

  double initial_step(const Vec<N>& u0, double h_cap) const {
    if (cfg_.h_init > 0.0) return std::min(cfg_.h_init, h_cap);
    const Vec<N> f0 = sys_.rhs(u0);
    const Vec<N> zero{};
    const double d0 = error_norm(u0, zero, zero);
    const double d1 = error_norm(f0, zero, zero);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::clamp(h, 1e-12, h_cap);
  }

  // Attempts one step of size h from (t, u). Returns the error norm; the
  // candidate step is left in `out` (meaningful only when the norm is <= 1).
  double attempt(double t, const Vec<N>& u, double h, DenseStep<N>& out) {
    out.method = cfg_.method;
    out.t0 = t;
    out.t1 = t + h;
    out.u0 = u;
    if (cfg_.method == Method::rodas4) return rodas_step(u, h, out);
    return dopri_step(u, h, out);
  }

  int order() const { return cfg_.method == Method::rodas4 ? 4 : 5; }

 private:
  double rodas_step(const Vec<N>& u, double h, DenseStep<N>& out) {
    using R = Rodas4;
    const Vec<N> f0 = sys_.rhs(u);
    Mat<N> m = sys_.jacobian ? sys_.jacobian(u) : fd_jacobian<N>(sys_.rhs, u, f0);
    for (auto& row : m)
      for (double& v : row) v = -v;
    const double diag = 1.0 / (R::gamma * h);
    for (std::size_t i = 0; i < N; ++i) m[i][i] += diag;
    std::array<std::size_t, N> piv{};
    if (!lu_factor<N>(m, piv)) return std::numeric_limits<double>::infinity();

    auto stage = [&](const Vec<N>& arg, auto&& extra) {
      Vec<N> g = sys_.rhs(arg);
      for (std::size_t i = 0; i < N; ++i) g[i] += extra(i) / h;
      lu_solve<N>(m, piv, g);
      return g;
    };
    Vec<N> g1 = f0;
    lu_solve<N>(m, piv, g1);
    Vec<N> x{};
    for (std::size_t i = 0; i < N; ++i) x[i] = u[i] + R::a21 * g1[i];
    const Vec<N> g2 = stage(x, [&](std::size_t i) { return R::c21 * g1[i]; });
    for (std::size_t i = 0; i < N; ++i) x[i] = u[i] + R::a31 * g1[i] + R::a32 * g2[i];
    const Vec<N> g3 = stage(x, [&](std::size_t i) { return R::c31 * g1[i] + R::c32 * g2[i]; });
    for (std::size_t i = 0; i < N; ++i) x[i] = u[i] + R::a41 * g1[i] + R::a42 * g2[i] + R::a43 * g3[i];
    const Vec<N> g4 = stage(x, [&](std::size_t i) { return R::c41 * g1[i] + R::c42 * g2[i] + R::c43 * g3[i]; });
    for (std::size_t i = 0; i < N; ++i)
      x[i] = u[i] + R::a51 * g1[i] + R::a52 * g2[i] + R::a53 * g3[i] + R::a54 * g4[i];
    const Vec<N> g5 = stage(
        x, [&](std::size_t i) { return R::c51 * g1[i] + R::c52 * g2[i] + R::c53 * g3[i] + R::c54 * g4[i]; });
    for (std::size_t i = 0; i < N; ++i) x[i] += g5[i];
    const Vec<N> err = stage(x, [&](std::size_t i) {
      return R::c61 * g1[i] + R::c62 * g2[i] + R::c63 * g3[i] + R::c64 * g4[i] + R::c65 * g5[i];
    });
    for (std::size_t i = 0; i < N; ++i) {
      out.u1[i] = x[i] + err[i];
      out.k[0][i] = R::d21 * g1[i] + R::d22 * g2[i] + R::d23 * g3[i] + R::d24 * g4[i] + R::d25 * g5[i];
      out.k[1][i] = R::d31 * g1[i] + R::d32 * g2[i] + R::d33 * g3[i] + R::d34 * g4[i] + R::d35 * g5[i];
    }
    if (!all_finite<N>(out.u1)) return std::numeric_limits<double>::quiet_NaN();
    return error_norm(err, u, out.u1);
  }

  double dopri_step(const Vec<N>& u, double h, DenseStep<N>& out) {
    auto& k = out.k;
    auto combo = [&](std::initializer_list<std::pair<int, double>> terms) {
      Vec<N> x = u;
      for (auto [idx, c] : terms)
        for (std::size_t i = 0; i < N; ++i) x[i] += h * c * k[idx][i];
      return x;
    };
    k[0] = sys_.rhs(u);
    k[1] = sys_.rhs(combo({{0, 1.0 / 5.0}}));
    k[2] = sys_.rhs(combo({{0, 3.0 / 40.0}, {1, 9.0 / 40.0}}));
    k[3] = sys_.rhs(combo({{0, 44.0 / 45.0}, {1, -56.0 / 15.0}, {2, 32.0 / 9.0}}));
    k[4] = sys_.rhs(combo({{0, 19372.0 / 6561.0}, {1, -25360.0 / 2187.0}, {2, 64448.0 / 6561.0}, {3, -212.0 / 729.0}}));
    k[5] = sys_.rhs(combo({{0, 9017.0 / 3168.0},
                           {1, -355.0 / 33.0},
                           {2, 46732.0 / 5247.0},
                           {3, 49.0 / 176.0},
                           {4, -5103.0 / 18656.0}}));
    out.u1 = combo({{0, 35.0 / 384.0}, {2, 500.0 / 1113.0}, {3, 125.0 / 192.0}, {4, -2187.0 / 6784.0}, {5, 11.0 / 84.0}});
    if (!all_finite<N>(out.u1)) return std::numeric_limits<double>::quiet_NaN();
    k[6] = sys_.rhs(out.u1);
    Vec<N> err{};
    for (std::size_t i = 0; i < N; ++i) {
      err[i] = h * (71.0 / 57600.0 * k[0][i] - 71.0 / 16695.0 * k[2][i] + 71.0 / 1920.0 * k[3][i] -
                    17253.0 / 339200.0 * k[4][i] + 22.0 / 525.0 * k[5][i] - 1.0 / 40.0 * k[6][i]);
    }
    return error_norm(err, u, out.u1);
  }

  const System<N>& sys_;
  const IntegratorConfig& cfg_;
  Vec<N> atol_{};
};

// Locates a sign change of g on [a, b] with an Illinois-modified regula falsi,
// falling back to bisection whenever the bracket stops halving.
template <class G>
double refine_root(G&& g, double a, double b, double ga, double gb) {
  if (gb == 0.0) return b;
  int side = 0;
  double best = std::abs(ga) < std::abs(gb) ? a : b;
  double gbest = std::min(std::abs(ga), std::abs(gb));
  for (int it = 0; it < 300; ++it) {
    const double width = b - a;
    if (gbest < kEventTolerance && width < kEventWindow) return best;
    double c = (ga * b - gb * a) / (ga - gb);
    const bool slow = (it % 3 == 2);
    if (!(c > a && c < b) || slow) c = 0.5 * (a + b);
    if (!(c > a && c < b)) break;  // bracket is down to adjacent doubles
    const double gc = g(c);
    if (gc == 0.0) return c;
    if ((gc > 0.0) == (gb > 0.0)) {
      b = c;
      gb = gc;
      if (side == 1) ga *= 0.5;
      side = 1;
    } else {
      a = c;
      ga = gc;
      if (side == -1) gb *= 0.5;
      side = -1;
    }
    if (std::abs(gc) < gbest) {
      gbest = std::abs(gc);
      best = c;
    }
  }
  if (gbest < kEventTolerance) return best;
  throw RootRefinementFailure("event root refinement failed in [" + std::to_string(a) + ", " + std::to_string(b) + "]",
                              a, b);
}

}  // namespace detail

template <std::size_t N>
RawSolution<N> solve(const System<N>& sys, double t0, const Vec<N>& u0, double t_end, const IntegratorConfig& cfg,
                     std::span<const EventFn<N>> events = {}) {
  cfg.validate(N);
  if (!(t_end >= t0)) throw Error(ErrorKind::precondition, "empty time span");
  if (!detail::all_finite<N>(u0)) throw Error(ErrorKind::nonfinite_state, "initial state is not finite");

  RawSolution<N> sol;
  detail::Stepper<N> stepper(sys, cfg);
  double t = t0;
  Vec<N> u = u0;
  double next_output = t0;
  auto emit_sample = [&](double ts, const Vec<N>& us) {
    if (!cfg.store_samples) return;
    if (!sol.t.empty() && !(ts > sol.t.back())) return;
    sol.t.push_back(ts);
    sol.u.push_back(us);
  };
  emit_sample(t, u);
  if (cfg.output_dt > 0.0) next_output = t0 + cfg.output_dt;

  std::vector<double> e_prev(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) e_prev[i] = events[i].fn(t, u);

  auto cap_for = [&](const Vec<N>& v) {
    double cap = cfg.h_max;
    if (cfg.fold_step_cap && std::abs(v[0]) >= 0.9 && std::abs(v[0]) <= 1.1) cap /= 100.0;
    return cap;
  };

  auto finish = [&](Termination why) {
    sol.termination = why;
    sol.t_final = t;
    sol.u_final = u;
    return sol;
  };

  if (t_end == t0) return finish(Termination::reached_end);

  double h = stepper.initial_step(u, cap_for(u));
  double err_old = 1.0, h_old = 0.0;
  bool first = true, last_rejected = false;
  const double expo = 1.0 / static_cast<double>(stepper.order());
  detail::DenseStep<N> step;

  struct Hit {
    double t;
    std::size_t index;
    int sign;
  };
  std::vector<Hit> hits;

  while (t < t_end) {
    if (sol.accepted_steps + sol.rejected_steps >= cfg.max_steps) {
      sol.t_final = t;
      sol.u_final = u;
      throw IntegrationFailure<N>(ErrorKind::step_budget, "step budget exhausted at t = " + std::to_string(t), sol);
    }
    const double cap = cap_for(u);
    h = std::min(h, cap);
    bool last = false;
    if (t + h >= t_end || t_end - (t + h) < 1e-12 * std::max(1.0, std::abs(t_end))) {
      h = t_end - t;
      last = true;
    }
    const double h_min = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min) {
      sol.t_final = t;
      sol.u_final = u;
      throw IntegrationFailure<N>(ErrorKind::step_underflow, "step size underflow at t = " + std::to_string(t), sol);
    }

    const double err = stepper.attempt(t, u, h, step);
    if (!(err <= 1.0)) {
      ++sol.rejected_steps;
      last_rejected = true;
      double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -expo), 0.1, 0.9) : 0.2;
      h *= fac;
      continue;
    }
    if (last) step.t1 = t_end;

    // Step-size proposal (Gustafsson predictive control for rodas4).
    double fac = std::clamp(std::pow(err, expo) / 0.9, 0.2, 6.0);
    if (!first && cfg.method == Method::rodas4 && err > 0.0) {
      const double pred = std::clamp((h_old / h) * std::pow(err * err / err_old, expo) / 0.9, 0.2, 6.0);
      fac = std::max(fac, pred);
    }
    double h_new = h / fac;
    if (last_rejected) h_new = std::min(h_new, h);
    first = false;
    h_old = h;
    err_old = std::max(0.01, err);
    last_rejected = false;
    ++sol.accepted_steps;

    // Events on [t, t1].
    hits.clear();
    std::vector<double> e_new(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& ev = events[i];
      const double ea = e_prev[i];
      const double eb = ev.fn(step.t1, step.u1);
      e_new[i] = eb;
      if (ea == 0.0) continue;
      const bool rising = ea < 0.0 && eb >= 0.0;
      const bool falling = ea > 0.0 && eb <= 0.0;
      if (!rising && !falling) continue;
      if (ev.direction == Direction::rising && !rising) continue;
      if (ev.direction == Direction::falling && !falling) continue;
      auto g = [&](double tc) { return ev.fn(tc, step.eval(tc)); };
      const double tr = detail::refine_root(g, step.t0, step.t1, ea, eb);
      if (ev.accept && !ev.accept(tr, step.eval(tr))) continue;
      hits.push_back({tr, i, rising ? 1 : -1});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& l, const Hit& r) { return l.t < r.t; });

    double stop_at = std::numeric_limits<double>::infinity();
    for (const Hit& hit : hits) {
      if (hit.t > stop_at) break;
      sol.events.push_back({hit.t, step.eval(hit.t), hit.index, hit.sign});
      if (events[hit.index].terminal) stop_at = hit.t;
    }

    const double t_stop = std::isfinite(stop_at) ? stop_at : step.t1;
    if (cfg.output_dt > 0.0) {
      while (next_output <= t_stop) {
        emit_sample(next_output, step.eval(next_output));
        next_output = t0 + cfg.output_dt * std::round((next_output - t0) / cfg.output_dt + 1.0);
      }
    }
    if (std::isfinite(stop_at)) {
      t = stop_at;
      u = step.eval(stop_at);
      emit_sample(t, u);
      return finish(Termination::terminal_event);
    }
    t = step.t1;
    u = step.u1;
    if (cfg.output_dt <= 0.0 || last) emit_sample(t, u);
    e_prev = std::move(e_new);
    h = h_new;
  }
  return finish(Termination::reached_end);
}

}  // namespace fvdp::ode
