#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "towplan/dual.hpp"
#include "towplan/expected.hpp"
#include "towplan/params.hpp"

namespace towplan {

enum class CableMode : std::uint8_t { Slack = 0, Taut = 1 };

template <class T>
struct BasicTractorState {
  T x{}, y{}, theta{};
  T vx{}, vy{}, omega{};
};

/// Trailer pose refers to the front anchor point; the body extends backwards.
template <class T>
struct BasicTrailerState {
  T x{}, y{}, theta{};
  T v{};      // speed along theta + delta
  T delta{};  // front-wheel steering angle
  T force{};  // cable force applied over the step that produced this state
};

template <class T>
struct BasicHybridState {
  BasicTractorState<T> tractor;
  BasicTrailerState<T> trailer;
  CableMode mode = CableMode::Slack;
};

template <class T>
struct BasicControlInput {
  T ax{}, ay{}, g{};
};

using TractorState = BasicTractorState<double>;
using TrailerState = BasicTrailerState<double>;
using HybridState = BasicHybridState<double>;
using ControlInput = BasicControlInput<double>;

struct CableKinematics {
  double l_c = 0.0;
  double theta_c = 0.0;
  double omega_c = 0.0;
  double v_r = 0.0;
  double p_r = 0.0;
};

enum class TautFailure : std::uint8_t { SteeringLimit, ObtuseVelocity, Degenerate };
std::string_view to_string(TautFailure f);

struct TautInfeasible {
  TautFailure reason;
};

struct RolloutFailure {
  std::size_t index;  // step index k of the failing transition k -> k+1
  TautFailure reason;
};

/// States at dt spacing; step k maps states[k] to states[k+1] with inputs[k]
/// in mode states[k+1].mode.
struct Trajectory {
  double dt = 0.1;
  std::vector<HybridState> states;
  std::vector<ControlInput> inputs;

  std::size_t steps() const { return inputs.size(); }
  CableMode step_mode(std::size_t k) const { return states[k + 1].mode; }
  std::vector<CableMode> modes() const;
};

// ---------------------------------------------------------------------------
// Generic kernels shared by the simulator (double) and the optimizer (Dual).

/// Wraps to (-pi, pi]. The 2*pi shift is piecewise constant, so derivatives
/// pass through unchanged.
template <class T>
T wrap_angle(const T& a) {
  const double w = value_of(a);
  const double k = std::ceil((w - kPi) / (2.0 * kPi));
  return k == 0.0 ? a : a - T(2.0 * kPi * k);
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

template <class T>
BasicTractorState<T> tractor_kernel(const BasicTractorState<T>& s, const BasicControlInput<T>& u,
                                    double dt) {
  BasicTractorState<T> r;
  r.x = s.x + s.vx * dt;
  r.y = s.y + s.vy * dt;
  r.theta = wrap_angle(T(s.theta + s.omega * dt));
  r.vx = s.vx + u.ax * dt;
  r.vy = s.vy + u.ay * dt;
  r.omega = s.omega + u.g * dt;
  return r;
}

/// Explicit Euler trailer update with friction sign `sgn` supplied by the
/// caller. Friction cannot by itself carry the speed through zero.
template <class T>
BasicTrailerState<T> trailer_kernel(const BasicTrailerState<T>& s, const T& force, double dt,
                                    const SystemParams& p, double sgn) {
  using std::cos;
  using std::sin;
  BasicTrailerState<T> r;
  const T heading = s.theta + s.delta;
  r.x = s.x + s.v * cos(heading) * dt;
  r.y = s.y + s.v * sin(heading) * dt;
  r.theta = wrap_angle(T(s.theta + s.v * sin(s.delta) / p.L_l * dt));
  r.v = s.v + (force / p.m_l - T(p.friction_decel() * sgn)) * dt;
  const double f = value_of(force);
  if ((sgn > 0.0 && f >= 0.0 && value_of(r.v) < 0.0) ||
      (sgn < 0.0 && f <= 0.0 && value_of(r.v) > 0.0)) {
    r.v = T(0.0);
  }
  r.delta = s.delta;
  r.force = force;
  return r;
}

template <class T>
BasicHybridState<T> slack_kernel(const BasicHybridState<T>& x, const BasicControlInput<T>& u,
                                 double dt, const SystemParams& p, double sgn) {
  BasicHybridState<T> r;
  r.tractor = tractor_kernel(x.tractor, u, dt);
  r.trailer = trailer_kernel(x.trailer, T(0.0), dt, p, sgn);
  r.trailer.force = T(0.0);
  r.mode = CableMode::Slack;
  return r;
}

/// Taut closure: trailer speed from the tractor velocity component along the
/// cable, Euler pose update with steering aligned to the cable, radial
/// re-projection onto the cable circle, then force recovered from the speed
/// change. No feasibility checks; see step_taut.
template <class T>
BasicHybridState<T> taut_kernel(const BasicHybridState<T>& x, const BasicControlInput<T>& u,
                                double dt, const SystemParams& p, double sgn) {
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  BasicHybridState<T> r;
  r.tractor = tractor_kernel(x.tractor, u, dt);

  const T theta_c = atan2(x.tractor.y - x.trailer.y, x.tractor.x - x.trailer.x);
  const T along = r.tractor.vx * cos(theta_c) + r.tractor.vy * sin(theta_c);
  const T v_next = value_of(along) > 0.0 ? along : T(0.0);

  const T steer = wrap_angle(T(theta_c - x.trailer.theta));
  const T heading = x.trailer.theta + steer;
  const T xe = x.trailer.x + x.trailer.v * cos(heading) * dt;
  const T ye = x.trailer.y + x.trailer.v * sin(heading) * dt;
  r.trailer.theta = wrap_angle(T(x.trailer.theta + x.trailer.v * sin(steer) / p.L_l * dt));

  const T dx = r.tractor.x - xe;
  const T dy = r.tractor.y - ye;
  T n = sqrt(dx * dx + dy * dy);
  if (value_of(n) < 1e-12) n = T(1e-12);
  r.trailer.x = r.tractor.x - p.L_c_ub * dx / n;
  r.trailer.y = r.tractor.y - p.L_c_ub * dy / n;
  r.trailer.delta = wrap_angle(T(atan2(dy, dx) - r.trailer.theta));
  r.trailer.v = v_next;
  r.trailer.force =
      p.m_l * ((v_next - x.trailer.v) / dt + T(p.friction_decel() * sgn));
  r.mode = CableMode::Taut;
  return r;
}

// ---------------------------------------------------------------------------
// Public simulation API.

TractorState step_tractor(const TractorState& s, const ControlInput& u, double dt);
TrailerState step_trailer(const TrailerState& s, double force, double dt, const SystemParams& p);
CableKinematics cable_kinematics(const HybridState& x);
double cable_length(const HybridState& x);

HybridState step_slack(const HybridState& x, const ControlInput& u, double dt,
                       const SystemParams& p);
Expected<HybridState, TautInfeasible> step_taut(const HybridState& x, const ControlInput& u,
                                                double dt, const SystemParams& p);

/// Checks the taut output conditions on an already-computed taut state.
std::optional<TautFailure> taut_violation(const HybridState& x, const SystemParams& p,
                                          double tol = kEpsTaut);

/// Applies one step in the given mode.
Expected<HybridState, TautInfeasible> step_mode(const HybridState& x, const ControlInput& u,
                                                CableMode mode, double dt,
                                                const SystemParams& p);

/// Search transition rule: slack step, recomputed as taut from the same
/// pre-state when the slack result overshoots the maximum cable length.
Expected<HybridState, TautInfeasible> step_hybrid(const HybridState& x, const ControlInput& u,
                                                  double dt, const SystemParams& p);

Expected<Trajectory, RolloutFailure> rollout(const HybridState& x0,
                                            const std::vector<ControlInput>& inputs,
                                            const std::vector<CableMode>& modes, double dt,
                                            const SystemParams& p);

/// Trailer acceleration realised over step k given the post-step force.
double trailer_acceleration(const HybridState& pre, const HybridState& post,
                            const SystemParams& p);

}  // namespace towplan
