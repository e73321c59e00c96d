#pragma once

#include <numbers>
#include <string>

namespace towplan {

constexpr double kPi = std::numbers::pi;

/// Physical and algorithmic constants of the tractor-cable-trailer system.
/// Defaults are the reference platform (quadruped tractor, 0.8 m cable).
struct SystemParams {
  // Trailer and cable geometry.
  double phi_max = kPi / 2.0;  // maximum trailer steering angle, rad
  double L_l = 0.5;            // trailer wheelbase, m
  double L_c_ub = 0.8;         // maximum cable length, m
  double L_c_lb = 0.2;         // minimum cable length, m
  double L_s = 0.55;           // safe tractor-trailer distance, m
  double mu = 0.03;            // wheel friction coefficient
  double m_l = 5.0;            // trailer mass, kg
  double grav = 9.81;          // m/s^2

  // Input and state bounds.
  double a_max = 1.0;      // m/s^2
  double g_max = 1.5;      // rad/s^2
  double v_max = 1.0;      // m/s
  double omega_max = 1.5;  // rad/s
  double v_xb = 1.0;       // body-frame longitudinal velocity semi-axis, m/s
  double v_yb = 0.5;       // body-frame lateral velocity semi-axis, m/s

  // Discretization and search resolution.
  double dt = 0.1;          // s
  double T_s = 0.5;         // expansion period, s
  double D_a = 0.25;        // acceleration resolution, m/s^2
  double D_theta = kPi / 12.0;  // acceleration direction resolution, rad
  double D_d = 0.20;        // grid distance resolution, m
  double D_r = kPi / 12.0;  // grid rotation resolution, rad

  double friction_decel() const { return mu * grav; }
  int steps_per_expansion() const;

  /// Minimum turning radius used by the Dubins heuristic:
  /// ||(L_l + L_c_ub cos(phi_max), L_c_ub sin(phi_max))||.
  double r_min() const;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Mode-membership tolerance on the cable length, m.
constexpr double kEpsTaut = 1e-6;
/// Tolerance on the step_taut precondition, m.
constexpr double kEpsReach = 1e-3;

}  // namespace towplan
