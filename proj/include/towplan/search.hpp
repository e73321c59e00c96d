#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "towplan/distance_field.hpp"
#include "towplan/geometry.hpp"
#include "towplan/model.hpp"

namespace towplan {

struct World {
  Rect bounds;
  std::vector<Polygon> obstacles;
};

/// Edge-cost weights: trailer path, tractor path, duration, and the
/// displacement-vs-rotation mix inside each path length.
struct CostWeights {
  double lambda_l = 1.0;
  double lambda_r = 0.5;
  double lambda_t = 0.5;
  double lambda_a = 0.7;

  void validate() const;
};

enum class ModePolicy { Hybrid, TautOnly };

/// Along-cable speed surplus the goal shot gives the tractor over the trailer
/// while slack, so that re-tensioning never decelerates the trailer, m/s.
constexpr double kRetensionMargin = 1e-6;

struct GoalTolerance {
  double position = 0.10;  // m
  double heading = 0.10;   // rad
  double speed = 0.05;     // m/s, trailer
};

struct SearchOptions {
  ModePolicy policy = ModePolicy::Hybrid;
  std::size_t node_budget = 2'000'000;
  GoalTolerance tolerance;
  /// Obstacle inflation of the holonomic distance field; negative selects half
  /// the trailer width.
  double heuristic_inflation = -1.0;
  /// Cruise speed of the goal-shot speed profile as a fraction of v_max.
  double shot_cruise_fraction = 0.8;
  double shot_radius_factor = 1.25;  // goal-shot turning radius over r_min
  double shot_run_in = 0.5;          // straight approach before the goal, m
  /// Upper bound on the primitive periods of one expansion; see expand_to_exit.
  int max_periods = 4;
  /// Called with the terminal state of every node moved to the closed set.
  std::function<void(const HybridState&)> on_close;
};

/// Integer grid cell used for duplicate detection.
struct GridKey {
  std::array<std::int64_t, 6> cell{};
  friend bool operator==(const GridKey&, const GridKey&) = default;
  friend auto operator<=>(const GridKey&, const GridKey&) = default;
};

struct GridKeyHash {
  std::size_t operator()(const GridKey& k) const;
};

GridKey grid_key(const HybridState& x, const SystemParams& p);

/// {a cos t, a sin t, 0} for a in {0, D_a, ..., a_max}, t in {D_theta, ..., 2 pi};
/// the zero primitive appears once, first.
std::vector<ControlInput> primitive_set(const SystemParams& p);

/// One expansion: origin is the parent's terminal state, states holds the
/// T_s/dt post-step states.
struct SearchNode {
  HybridState origin;
  std::vector<HybridState> states;
  ControlInput primitive;
  double g_cost = 0.0;
  double h_cost = 0.0;
  double f_cost = 0.0;
  std::int64_t parent = -1;

  const HybridState& terminal() const { return states.empty() ? origin : states.back(); }
};

SearchNode root_node(const HybridState& start);

/// Forward rollout of one primitive for T_s/dt steps using the policy's
/// transition rule (slack with taut promotion, or taut only).
Expected<SearchNode, TautInfeasible> expand(const SearchNode& node, const ControlInput& prim,
                                            const SystemParams& p,
                                            ModePolicy policy = ModePolicy::Hybrid);

/// Repeats the primitive in whole periods until the terminal state's grid cell
/// differs from the start's, or max_periods is reached. From rest a single
/// period moves less than one cell, so plain expansion would land every child
/// in its parent's closed cell.
Expected<SearchNode, TautInfeasible> expand_to_exit(const SearchNode& node, const ControlInput& prim,
                                                    const SystemParams& p, ModePolicy policy,
                                                    int max_periods);

/// Weighted path length sum over consecutive poses (wrapped heading change).
double path_length(const std::vector<Pose2>& poses, double lambda_a);
double edge_cost(const SearchNode& node, const CostWeights& w, double dt);

/// max(h_a, h_d) scaled by lambda_l * lambda_a; nullopt when the trailer is
/// outside the distance field.
std::optional<double> heuristic(const HybridState& x, const Pose2& goal, const DistanceField& df,
                                const SystemParams& p, const CostWeights& w);

/// Per-transition safety check: collisions (edge test plus containment),
/// cable length window, tractor/trailer separation, state and trailer
/// acceleration bounds, and world bounds. `pre` is the state before the step.
bool transition_feasible(const HybridState& pre, const HybridState& post, const World& world,
                         const BodyFootprint& fp, const SystemParams& p);
/// State-only part of transition_feasible.
bool state_feasible(const HybridState& x, const World& world, const BodyFootprint& fp,
                    const SystemParams& p);
bool feasible(const SearchNode& node, const World& world, const BodyFootprint& fp,
              const SystemParams& p);

bool within_goal(const HybridState& x, const Pose2& goal, const GoalTolerance& tol);

/// Goal shot: tracks the Dubins path from the trailer pose to the goal with a
/// closed-loop tractor law, simulated through the model. Returns the shot
/// (starting at x) when every transition is feasible and it ends at rest
/// inside the goal tolerance.
std::optional<Trajectory> reach_goal(const HybridState& x, const Pose2& goal, const World& world,
                                     const BodyFootprint& fp, const SystemParams& p,
                                     const SearchOptions& opts = {});

enum class SearchStatus { Solved, NoSolution, Timeout };
std::string to_string(SearchStatus s);

struct SearchStats {
  std::size_t expansions = 0;
  std::size_t generated = 0;
  std::size_t goal_shots = 0;
  double solution_cost = 0.0;
  double start_heuristic = 0.0;
  double trailer_path_cost = 0.0;  // lambda_l * l_l over the returned trajectory
  double tractor_path_cost = 0.0;  // lambda_r * l_r
  double duration_cost = 0.0;      // lambda_t * T
  std::size_t shot_steps = 0;
};

struct SearchResult {
  SearchStatus status = SearchStatus::NoSolution;
  Trajectory trajectory;
  SearchStats stats;
};

/// Cost components of a whole trajectory under the edge-cost definition.
void trajectory_cost(const Trajectory& t, const CostWeights& w, SearchStats& stats);

SearchResult plan(const HybridState& start, const Pose2& goal, const World& world,
                  const BodyFootprint& fp, const SystemParams& p, const CostWeights& w,
                  const SearchOptions& opts = {});

}  // namespace towplan
