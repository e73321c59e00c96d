#include <doctest.h>

#include <cmath>
#include <set>

#include "towplan/dubins.hpp"
#include "towplan/scenario.hpp"
#include "towplan/search.hpp"

using namespace towplan;

namespace {

HybridState taut_at(double x, double y, double theta) {
  SystemParams p;
  HybridState s;
  s.trailer = {x, y, theta, 0, 0, 0};
  s.tractor = {x + p.L_c_ub * std::cos(theta), y + p.L_c_ub * std::sin(theta), theta, 0, 0, 0};
  s.mode = CableMode::Taut;
  return s;
}

Polygon box(double x0, double y0, double x1, double y1) {
  return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

Scenario fixture(const char* name) {
  return load_scenario(std::string(TOWPLAN_FIXTURES_DIR) + "/" + name + ".json");
}

}  // namespace

TEST_SUITE("search") {
  TEST_CASE("primitive set") {
    SystemParams p;
    const auto prims = primitive_set(p);
    CHECK(prims.size() == 97);
    int zeros = 0;
    for (const auto& u : prims) {
      if (u.ax == 0.0 && u.ay == 0.0) ++zeros;
      CHECK(u.g == 0.0);
      CHECK(std::hypot(u.ax, u.ay) <= p.a_max + 1e-12);
    }
    CHECK(zeros == 1);
  }

  TEST_CASE("grid key wraps the trailer heading") {
    SystemParams p;
    HybridState a = taut_at(1.0, 1.0, -0.1), b = a;
    b.trailer.theta = 2 * kPi - 0.1;
    CHECK(grid_key(a, p) == grid_key(b, p));
    CHECK(grid_key(a, p).cell[4] == 23);
    b.mode = CableMode::Slack;
    CHECK_FALSE(grid_key(a, p) == grid_key(b, p));
  }

  TEST_CASE("expand: zero primitive from rest") {
    SystemParams p;
    const HybridState x = taut_at(1, 1, 0.3);
    auto n = expand(root_node(x), {0, 0, 0}, p);
    REQUIRE(n);
    REQUIRE(n->states.size() == static_cast<std::size_t>(p.steps_per_expansion()));
    for (const auto& s : n->states) {
      CHECK(s.trailer.x == x.trailer.x);
      CHECK(s.tractor.y == x.tractor.y);
    }
  }

  TEST_CASE("expand: slack cable tightens once the slack step overshoots") {
    SystemParams p;
    HybridState x;
    x.tractor = {0.7, 0, 0, 0.2, 0, 0};
    x.mode = CableMode::Slack;
    auto n = expand(root_node(x), {1, 0, 0}, p);
    REQUIRE(n);
    // reference_values.py: promotion_index -> step 3
    for (std::size_t k = 0; k < 3; ++k) CHECK(n->states[k].mode == CableMode::Slack);
    CHECK(n->states[3].mode == CableMode::Taut);
    CHECK(std::abs(cable_length(n->states[3]) - p.L_c_ub) <= 1e-9);
    // The promoted step is the one whose slack result would exceed the cable.
    const HybridState probe = step_slack(n->states[2], {1, 0, 0}, p.dt, p);
    CHECK(cable_length(probe) == doctest::Approx(0.84));
  }

  TEST_CASE("expand: tractor moving toward the trailer goes slack") {
    SystemParams p;
    const HybridState x = taut_at(0, 0, 0);
    auto n = expand(root_node(x), {-1, 0, 0}, p);
    REQUIRE(n);
    for (const auto& s : n->states) CHECK(s.mode == CableMode::Slack);
  }

  TEST_CASE("expand_to_exit leaves the start cell or stops at the cap") {
    SystemParams p;
    HybridState x = taut_at(1.05, 1.05, 0.0);
    x.mode = CableMode::Slack;
    auto still = expand_to_exit(root_node(x), {0, 0, 0}, p, ModePolicy::Hybrid, 4);
    REQUIRE(still);
    CHECK(still->states.size() == 4u * static_cast<std::size_t>(p.steps_per_expansion()));
    auto moving = expand_to_exit(root_node(x), {1, 0, 0}, p, ModePolicy::Hybrid, 4);
    REQUIRE(moving);
    CHECK(moving->states.size() % static_cast<std::size_t>(p.steps_per_expansion()) == 0);
    CHECK_FALSE(grid_key(moving->terminal(), p) == grid_key(x, p));
  }

  TEST_CASE("edge cost examples") {
    SystemParams p;
    CostWeights w;
    SearchNode still = *expand(root_node(taut_at(1, 1, 0)), {0, 0, 0}, p);
    CHECK(edge_cost(still, w, p.dt) == doctest::Approx(w.lambda_t * p.T_s));

    SearchNode straight;
    straight.origin = taut_at(0, 0, 0);
    HybridState s = straight.origin;
    s.tractor.x += 0.5;
    straight.states = {s};
    CHECK(edge_cost(straight, {1, 1, 0, 1}, p.dt) == doctest::Approx(0.5));

    SearchNode turn;
    turn.origin = taut_at(0, 0, 0);
    HybridState t = turn.origin;
    t.trailer.theta = kPi / 2;
    t.trailer.x = 0.3;
    turn.states = {t};
    // reference_values.py: edge_cost_turn
    CHECK(edge_cost(turn, {1, 0, 0, 0.5}, p.dt) ==
          doctest::Approx(0.9353981633974483).epsilon(1e-12));
  }

  TEST_CASE("heuristic examples") {
    SystemParams p;
    CostWeights w;
    const Rect bounds{0, 0, 6, 6};
    const Pose2 goal{4.1, 3.1, 0.0};
    const DistanceField df = build_distance_field({}, bounds, {goal.x, goal.y}, p.D_d, 0.2);
    CHECK(*heuristic(taut_at(goal.x, goal.y, 0), goal, df, p, w) == doctest::Approx(0.0));
    const double h = *heuristic(taut_at(goal.x - 3, goal.y, 0), goal, df, p, w);
    CHECK(h == doctest::Approx(3.0 * w.lambda_l * w.lambda_a).epsilon(1e-6));

    // A wall between trailer and goal forces a detour longer than the Dubins path.
    const std::vector<Polygon> wall = {box(2.9, 0.0, 3.3, 5.0)};
    const DistanceField dw = build_distance_field(wall, bounds, {goal.x, goal.y}, p.D_d, 0.2);
    const HybridState behind = taut_at(1.5, 3.1, 0);
    const double h_d = dubins_length({1.5, 3.1, 0}, goal, p.r_min());
    const double h_a = *dw.lookup({1.5, 3.1});
    CHECK(h_a > h_d);
    CHECK(*heuristic(behind, goal, dw, p, w) == doctest::Approx(w.lambda_l * w.lambda_a * h_a));
  }

  TEST_CASE("feasibility predicate") {
    SystemParams p;
    const BodyFootprint fp = BodyFootprint::defaults();
    World world{{0, 0, 6, 6}, {}};
    SearchNode still = *expand(root_node(taut_at(2, 2, 0)), {0, 0, 0}, p);
    CHECK(feasible(still, world, fp, p));

    HybridState close = taut_at(2, 2, 0);
    close.tractor.x = close.trailer.x + 0.1;
    CHECK_FALSE(state_feasible(close, world, fp, p));

    // An obstacle over the resting trailer body.
    world.obstacles = {box(1.7, 1.9, 1.9, 2.1)};
    CHECK_FALSE(state_feasible(still.origin, world, fp, p));
    CHECK_FALSE(feasible(still, world, fp, p));
  }

  TEST_CASE("goal shot: already at the goal") {
    SystemParams p;
    const BodyFootprint fp = BodyFootprint::defaults();
    const HybridState x = taut_at(2, 2, 0.5);
    auto t = reach_goal(x, {2, 2, 0.5}, {{0, 0, 6, 6}, {}}, fp, p);
    REQUIRE(t);
    CHECK(t->states.size() == 1);
  }

  TEST_CASE("goal shot: straight runway") {
    SystemParams p;
    const BodyFootprint fp = BodyFootprint::defaults();
    const World world{{0, 0, 6, 4}, {}};
    const HybridState x = taut_at(1, 2, 0);
    auto t = reach_goal(x, {3, 2, 0}, world, fp, p);
    REQUIRE(t);
    const HybridState& last = t->states.back();
    CHECK(within_goal(last, {3, 2, 0}, {}));
    // Speed rises once and then decreases to rest; each re-tension may add the
    // retension margin.
    std::size_t peak = 0;
    for (std::size_t k = 0; k < t->states.size(); ++k) {
      if (t->states[k].trailer.v > t->states[peak].trailer.v) peak = k;
    }
    for (std::size_t k = peak + 1; k < t->states.size(); ++k) {
      CHECK(t->states[k].trailer.v <= t->states[k - 1].trailer.v + kRetensionMargin + 1e-12);
    }
    for (std::size_t k = 1; k < t->states.size(); ++k) {
      CHECK(transition_feasible(t->states[k - 1], t->states[k], world, fp, p));
    }
  }

  TEST_CASE("goal shot: wall across the path") {
    SystemParams p;
    const BodyFootprint fp = BodyFootprint::defaults();
    const World world{{0, 0, 6, 4}, {box(2.0, 0.0, 2.2, 4.0)}};
    CHECK_FALSE(reach_goal(taut_at(1, 2, 0), {4, 2, 0}, world, fp, p));
  }

  TEST_CASE("plan: start equals goal") {
    SystemParams p;
    const HybridState x = taut_at(2, 2, 0);
    auto r = plan(x, {2, 2, 0}, {{0, 0, 6, 6}, {}}, BodyFootprint::defaults(), p, {});
    CHECK(r.status == SearchStatus::Solved);
    CHECK(r.trajectory.states.size() == 1);
  }

  TEST_CASE("plan: open arena") {
    const Scenario sc = fixture("open_arena");
    std::set<GridKey> closed;
    bool duplicate = false;
    SearchOptions opts;
    opts.on_close = [&](const HybridState& s) {
      duplicate |= !closed.insert(grid_key(s, sc.params)).second;
    };
    auto r = plan(sc.start, sc.goal, sc.world, sc.footprint, sc.params, sc.search_weights, opts);
    REQUIRE(r.status == SearchStatus::Solved);
    CHECK_FALSE(duplicate);
    const auto& st = r.trajectory.states;
    CHECK(within_goal(st.back(), sc.goal, {}));
    for (std::size_t k = 1; k < st.size(); ++k) {
      CHECK(transition_feasible(st[k - 1], st[k], sc.world, sc.footprint, sc.params));
    }
    CHECK(r.stats.solution_cost >= r.stats.start_heuristic);
  }
}

TEST_SUITE("search properties") {
  TEST_CASE("closed keys are unique and results repeat exactly") {
    const Scenario sc = fixture("l_corridor");
    std::set<GridKey> closed;
    std::size_t duplicates = 0;
    SearchOptions opts;
    opts.on_close = [&](const HybridState& s) {
      if (!closed.insert(grid_key(s, sc.params)).second) ++duplicates;
    };
    auto a = plan(sc.start, sc.goal, sc.world, sc.footprint, sc.params, sc.search_weights, opts);
    REQUIRE(a.status == SearchStatus::Solved);
    CHECK(duplicates == 0);
    CHECK(closed.size() == a.stats.expansions);

    auto b = plan(sc.start, sc.goal, sc.world, sc.footprint, sc.params, sc.search_weights);
    REQUIRE(b.trajectory.states.size() == a.trajectory.states.size());
    for (std::size_t k = 0; k < a.trajectory.states.size(); ++k) {
      CHECK(a.trajectory.states[k].trailer.x == b.trajectory.states[k].trailer.x);
      CHECK(a.trajectory.states[k].tractor.vy == b.trajectory.states[k].tractor.vy);
      CHECK(a.trajectory.states[k].mode == b.trajectory.states[k].mode);
    }
  }

  TEST_CASE("every slack to taut switch is a promotion") {
    const Scenario sc = fixture("l_corridor");
    auto r = plan(sc.start, sc.goal, sc.world, sc.footprint, sc.params, sc.search_weights);
    REQUIRE(r.status == SearchStatus::Solved);
    const auto& t = r.trajectory;
    int switches = 0;
    for (std::size_t k = 1; k < t.states.size(); ++k) {
      if (t.states[k - 1].mode == CableMode::Slack && t.states[k].mode == CableMode::Taut) {
        ++switches;
        const HybridState probe = step_slack(t.states[k - 1], t.inputs[k - 1], t.dt, sc.params);
        CHECK(cable_length(probe) > sc.params.L_c_ub);
      }
    }
    CHECK(switches > 0);
  }
}
