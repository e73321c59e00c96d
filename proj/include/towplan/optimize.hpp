#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "towplan/geometry.hpp"
#include "towplan/model.hpp"
#include "towplan/search.hpp"

namespace towplan {

/// Diagonal weights of the regularisation cost. The velocity ellipse axes of
/// the anisotropy cost come from SystemParams (v_xb, v_yb).
struct WeightConfig {
  std::array<double, 3> R_u{1.0, 1.0, 0.5};
  std::array<double, 3> R_q{0.1, 0.1, 0.1};
  double R_v = 0.1;
  double Q_theta = 1.0;

  void validate() const;
};

/// L_R + L_O over knots 0..N and inputs 0..N-1, including the -1 per knot.
double objective(const std::vector<HybridState>& states, const std::vector<ControlInput>& inputs,
                 const WeightConfig& wc, const SystemParams& p);
double objective(const Trajectory& t, const WeightConfig& wc, const SystemParams& p);

enum class ConstraintKind { Equality, Inequality };  // inequality rows are g(z) >= 0

/// A local function of a few decision variables with exact first derivatives.
class Block {
 public:
  virtual ~Block() = default;
  virtual int rows() const = 0;
  virtual void eval(const double* local, double* out) const = 0;
  /// Values into `out`, row-major Jacobian (rows x vars.size()) into `jac`.
  virtual void jacobian(const double* local, double* out, double* jac) const = 0;

  std::vector<int> vars;
  ConstraintKind kind = ConstraintKind::Equality;
  std::string group;
  int step = -1;           // knot or step index for reporting
  std::uint64_t key = 0;   // stable identity of collision pairs across refreshes
};

/// Direct-transcription problem. Variables are interleaved per step:
/// [x_0 (12), u_0 (3), x_1, u_1, ..., x_N]. x_0 is held fixed.
struct NlpProblem {
  static constexpr int kStateDim = 12;
  static constexpr int kInputDim = 3;
  static constexpr int kStride = kStateDim + kInputDim;

  int N = 0;
  double dt = 0.1;
  SystemParams params;
  WeightConfig weights;
  BodyFootprint footprint;
  std::vector<Polygon> obstacles;
  Rect bounds;
  Pose2 goal;
  std::vector<CableMode> modes;   // per step, fixed
  std::vector<double> sgn;        // frozen friction sign per step
  std::vector<CableMode> knot_modes;  // mode flag stored on each knot
  std::vector<double> z0;         // initial guess
  std::vector<bool> fixed;

  std::vector<std::unique_ptr<Block>> cost;         // residuals r; objective = |r|^2 - (N+1)
  std::vector<std::unique_ptr<Block>> constraints;  // non-collision constraints
  std::vector<std::unique_ptr<Block>> collisions;   // active collision pairs
  std::vector<std::array<double, 4>> collision_anchor;  // knot anchor positions at activation

  int num_vars() const { return kStride * N + kStateDim; }
  static int state_offset(int k) { return kStride * k; }
  static int input_offset(int k) { return kStride * k + kStateDim; }

  std::size_t equality_count() const;
  std::size_t inequality_count() const;
  std::size_t collision_count() const { return collisions.size(); }

  /// Re-selects collision pairs whose bounding circles are within the
  /// activation margin at z.
  void activate_collisions(const std::vector<double>& z);
  /// True when some knot moved more than the refresh distance since the last
  /// activation.
  bool needs_refresh(const std::vector<double>& z) const;

  Trajectory to_trajectory(const std::vector<double>& z) const;
  double objective_at(const std::vector<double>& z) const;
};

/// Collision pair activation: bounding circles closer than this, m.
constexpr double kCollisionMargin = 0.5;
/// Knot displacement that triggers re-activation, m.
constexpr double kCollisionRefresh = 0.25;
/// Edge pairs with a smaller intersection determinant are treated as parallel
/// by the collision constraints.
constexpr double kOptimizerParallelEps = 1e-8;
/// Per-step rollout defect above which a guess is rejected.
constexpr double kGuessTolerance = 1e-6;

/// Throws InconsistentGuess when the guess does not reproduce itself under
/// rollout with its own modes, std::invalid_argument when it is empty.
NlpProblem build_problem(const Trajectory& gamma, const std::vector<Polygon>& world,
                         const Rect& bounds, const Pose2& goal, const BodyFootprint& fp,
                         const SystemParams& p, const WeightConfig& wc,
                         bool activate_all_collisions = false);

enum class SolveStatus { Converged, MaxIter, LineSearchFail };
std::string to_string(SolveStatus s);

struct SolveOptions {
  double tol_con = 1e-4;
  double tol_obj = 1e-6;
  int max_outer = 40;
  int max_inner = 60;
  double rho0 = 10.0;
  double rho_max = 1e8;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Converged;
  double objective = 0.0;
  double initial_objective = 0.0;
  double max_eq_violation = 0.0;
  double max_ineq_violation = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  std::size_t equality_constraints = 0;
  std::size_t inequality_constraints = 0;
  std::size_t collision_constraints = 0;
  std::map<std::string, double> group_violation;

  // Filled by validate; write omits them unless audited is set.
  bool audited = false;
  double max_defect = 0.0;
  int worst_defect_step = -1;
  std::vector<int> defect_steps;     // steps whose defect exceeds the tolerance
  std::vector<int> collision_steps;  // knots with an exact edge intersection or containment

  double max_violation() const { return std::max(max_eq_violation, max_ineq_violation); }
  void write(std::ostream& os) const;
};

struct SolveResult {
  Trajectory trajectory;
  SolveReport report;
};

SolveResult solve(NlpProblem& prob, const SolveOptions& opts = {});

/// Evaluates every constraint group at z; used by solve and the tests.
void measure(const NlpProblem& prob, const std::vector<double>& z, SolveReport& report);

/// Defect tolerance used by validate's pass/fail decision.
constexpr double kDefectTolerance = 1e-3;

/// Independent audit: one-step re-simulation of every transition in its
/// recorded mode, bound and cable checks, and the exact collision test.
SolveReport validate(const Trajectory& traj, const std::vector<Polygon>& world, const Rect& bounds,
                     const BodyFootprint& fp, const SystemParams& p, const WeightConfig& wc = {});
bool validation_passed(const SolveReport& r);

/// Euclidean norm of the state difference with wrapped angle components.
double state_distance(const HybridState& a, const HybridState& b);

}  // namespace towplan
