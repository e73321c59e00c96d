#include "towplan/model.hpp"

#include <cmath>

#include "towplan/errors.hpp"

namespace towplan {

int SystemParams::steps_per_expansion() const {
  return static_cast<int>(std::lround(T_s / dt));
}

double SystemParams::r_min() const {
  return std::hypot(L_l + L_c_ub * std::cos(phi_max), L_c_ub * std::sin(phi_max));
}

void SystemParams::validate() const {
  auto require = [](bool ok, const char* field, const char* reason) {
    if (!ok) throw ValidationError(field, reason);
  };
  require(std::isfinite(L_c_lb) && L_c_lb > 0.0, "params.L_c_lb", "must be positive");
  require(L_c_lb < L_c_ub, "params.L_c_ub", "must exceed L_c_lb");
  require(L_s > 0.0 && L_s < L_c_ub + L_l, "params.L_s", "must lie in (0, L_c_ub + L_l)");
  require(mu >= 0.0, "params.mu", "must be non-negative");
  require(m_l > 0.0, "params.m_l", "must be positive");
  require(grav > 0.0, "params.grav", "must be positive");
  require(L_l > 0.0, "params.L_l", "must be positive");
  require(phi_max > 0.0 && phi_max <= kPi / 2.0 + 1e-12, "params.phi_max",
          "must lie in (0, pi/2]");
  require(a_max > 0.0, "params.a_max", "must be positive");
  require(g_max > 0.0, "params.g_max", "must be positive");
  require(v_max > 0.0, "params.v_max", "must be positive");
  require(omega_max > 0.0, "params.omega_max", "must be positive");
  require(v_xb > 0.0 && v_yb > 0.0, "params.v_xb", "velocity ellipse axes must be positive");
  require(dt > 0.0 && dt <= T_s, "params.dt", "must satisfy 0 < dt <= T_s");
  const double ratio = T_s / dt;
  require(std::abs(ratio - std::round(ratio)) < 1e-9, "params.T_s",
          "T_s / dt must be a positive integer");
  require(D_a > 0.0 && D_theta > 0.0 && D_d > 0.0 && D_r > 0.0, "params.D_a",
          "search resolutions must be positive");
}

std::string_view to_string(TautFailure f) {
  switch (f) {
    case TautFailure::SteeringLimit:
      return "steering-limit";
    case TautFailure::ObtuseVelocity:
      return "obtuse-velocity";
    case TautFailure::Degenerate:
      return "degenerate";
  }
  return "unknown";
}

std::vector<CableMode> Trajectory::modes() const {
  std::vector<CableMode> m;
  m.reserve(steps());
  for (std::size_t k = 0; k < steps(); ++k) m.push_back(step_mode(k));
  return m;
}

TractorState step_tractor(const TractorState& s, const ControlInput& u, double dt) {
  return tractor_kernel(s, u, dt);
}

TrailerState step_trailer(const TrailerState& s, double force, double dt, const SystemParams& p) {
  return trailer_kernel(s, force, dt, p, sign_of(s.v));
}

double cable_length(const HybridState& x) {
  return std::hypot(x.tractor.x - x.trailer.x, x.tractor.y - x.trailer.y);
}

CableKinematics cable_kinematics(const HybridState& x) {
  CableKinematics c;
  const double dx = x.tractor.x - x.trailer.x;
  const double dy = x.tractor.y - x.trailer.y;
  c.l_c = std::hypot(dx, dy);
  c.theta_c = (dx == 0.0 && dy == 0.0) ? 0.0 : wrap_angle(std::atan2(dy, dx));
  c.v_r = std::hypot(x.tractor.vx, x.tractor.vy);
  c.p_r = c.v_r == 0.0 ? 0.0 : wrap_angle(std::atan2(x.tractor.vy, x.tractor.vx));
  c.omega_c = c.l_c == 0.0 ? 0.0 : c.v_r * std::sin(c.p_r - c.theta_c) / c.l_c;
  return c;
}

HybridState step_slack(const HybridState& x, const ControlInput& u, double dt,
                       const SystemParams& p) {
  return slack_kernel(x, u, dt, p, sign_of(x.trailer.v));
}

std::optional<TautFailure> taut_violation(const HybridState& x, const SystemParams& p,
                                          double tol) {
  if (std::abs(x.trailer.delta) > p.phi_max + tol) return TautFailure::SteeringLimit;
  const double heading = x.trailer.theta + x.trailer.delta;
  const double along = std::cos(heading) * x.tractor.vx + std::sin(heading) * x.tractor.vy;
  if (along < -tol) return TautFailure::ObtuseVelocity;
  return std::nullopt;
}

Expected<HybridState, TautInfeasible> step_taut(const HybridState& x, const ControlInput& u,
                                                double dt, const SystemParams& p) {
  // The Euler-advanced trailer anchor must not land on the tractor.
  const HybridState r = taut_kernel(x, u, dt, p, sign_of(x.trailer.v));
  if (!std::isfinite(r.trailer.x) || !std::isfinite(r.trailer.delta)) {
    return unexpected(TautInfeasible{TautFailure::Degenerate});
  }
  if (auto fail = taut_violation(r, p)) return unexpected(TautInfeasible{*fail});
  return r;
}

Expected<HybridState, TautInfeasible> step_mode(const HybridState& x, const ControlInput& u,
                                                CableMode mode, double dt,
                                                const SystemParams& p) {
  if (mode == CableMode::Taut) return step_taut(x, u, dt, p);
  return step_slack(x, u, dt, p);
}

Expected<HybridState, TautInfeasible> step_hybrid(const HybridState& x, const ControlInput& u,
                                                  double dt, const SystemParams& p) {
  HybridState out = step_slack(x, u, dt, p);
  if (cable_length(out) > p.L_c_ub) return step_taut(x, u, dt, p);
  return out;
}

Expected<Trajectory, RolloutFailure> rollout(const HybridState& x0,
                                            const std::vector<ControlInput>& inputs,
                                            const std::vector<CableMode>& modes, double dt,
                                            const SystemParams& p) {
  if (inputs.size() != modes.size()) {
    throw std::invalid_argument("rollout: inputs and modes differ in length");
  }
  Trajectory t;
  t.dt = dt;
  t.states.reserve(inputs.size() + 1);
  t.states.push_back(x0);
  t.inputs = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto next = step_mode(t.states.back(), inputs[k], modes[k], dt, p);
    if (!next) return unexpected(RolloutFailure{k, next.error().reason});
    t.states.push_back(*next);
  }
  return t;
}

double trailer_acceleration(const HybridState& pre, const HybridState& post,
                            const SystemParams& p) {
  return post.trailer.force / p.m_l - p.friction_decel() * sign_of(pre.trailer.v);
}

}  // namespace towplan
