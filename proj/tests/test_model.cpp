#include <doctest.h>

#include <cmath>
#include <random>

#include "towplan/model.hpp"
#include "towplan/search.hpp"

using namespace towplan;

namespace {

HybridState towing_pair(double tractor_x, double vx, double vy, double trailer_v) {
  HybridState x;
  x.tractor = {tractor_x, 0.0, 0.0, vx, vy, 0.0};
  x.trailer = {0.0, 0.0, 0.0, trailer_v, 0.0, 0.0};
  x.mode = CableMode::Taut;
  return x;
}

double alignment_residual(const HybridState& x) {
  const double h = x.trailer.theta + x.trailer.delta;
  const double dx = x.tractor.x - x.trailer.x, dy = x.tractor.y - x.trailer.y;
  return std::cos(h) * dy - std::sin(h) * dx;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("tractor step: constant velocity") {
    const TractorState s{0, 0, 0, 1, 0, 0};
    const TractorState r = step_tractor(s, {0, 0, 0}, 0.1);
    CHECK(r.x == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(r.y == 0.0);
    CHECK(r.vx == 1.0);
  }

  TEST_CASE("tractor step: acceleration from rest") {
    const TractorState r = step_tractor({}, {1, 0, 0.5}, 0.1);
    CHECK(r.x == 0.0);
    CHECK(r.y == 0.0);
    CHECK(r.theta == 0.0);
    CHECK(r.vx == doctest::Approx(0.1));
    CHECK(r.omega == doctest::Approx(0.05));
  }

  TEST_CASE("tractor step: hand-evaluated update") {
    // reference_values.py: tractor_step
    const TractorState r = step_tractor({1, 2, 0.3, 0.5, -0.2, 0.1}, {0.2, 0.2, 0}, 0.1);
    CHECK(r.x == doctest::Approx(1.05).epsilon(1e-12));
    CHECK(r.y == doctest::Approx(1.98).epsilon(1e-12));
    CHECK(r.theta == doctest::Approx(0.31).epsilon(1e-12));
    CHECK(r.vx == doctest::Approx(0.52).epsilon(1e-12));
    CHECK(r.vy == doctest::Approx(-0.18).epsilon(1e-12));
    CHECK(r.omega == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("tractor heading wraps into (-pi, pi]") {
    const TractorState r = step_tractor({0, 0, 3.1, 0, 0, 1.0}, {}, 0.1);
    CHECK(r.theta > -kPi);
    CHECK(r.theta <= kPi);
    CHECK(r.theta == doctest::Approx(3.2 - 2 * kPi));
  }

  TEST_CASE("trailer step: coasting under friction") {
    SystemParams p;
    const TrailerState r = step_trailer({0, 0, 0, 1.0, 0, 0}, 0.0, 0.1, p);
    CHECK(r.x == doctest::Approx(0.1));
    CHECK(r.y == 0.0);
    CHECK(r.theta == 0.0);
    // reference_values.py: trailer_coast
    CHECK(r.v == doctest::Approx(0.97057).epsilon(1e-12));
  }

  TEST_CASE("trailer step: rest stays at rest") {
    SystemParams p;
    const TrailerState s{0.3, -0.2, 0.4, 0.0, 0.1, 0.0};
    const TrailerState r = step_trailer(s, 0.0, 0.1, p);
    CHECK(r.x == s.x);
    CHECK(r.y == s.y);
    CHECK(r.theta == s.theta);
    CHECK(r.v == 0.0);
  }

  TEST_CASE("trailer step: maximum steering") {
    SystemParams p;
    const TrailerState r = step_trailer({0, 0, 0, 1.0, kPi / 2, 0}, 0.0, 0.1, p);
    CHECK(r.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.y == doctest::Approx(0.1));
    CHECK(r.theta == doctest::Approx(0.2));
  }

  TEST_CASE("cable kinematics examples") {
    HybridState x;
    x.tractor = {1, 0, 0, 0, 1, 0};
    CableKinematics k = cable_kinematics(x);
    CHECK(k.l_c == doctest::Approx(1.0));
    CHECK(k.theta_c == doctest::Approx(0.0));
    CHECK(k.v_r == doctest::Approx(1.0));
    CHECK(k.p_r == doctest::Approx(kPi / 2));
    CHECK(k.omega_c == doctest::Approx(1.0));

    x.tractor = {0.8, 0, 0, 0, 0, 0};
    k = cable_kinematics(x);
    CHECK(k.l_c == doctest::Approx(0.8));
    CHECK(k.p_r == 0.0);
    CHECK(k.omega_c == 0.0);

    // reference_values.py: cable_rates
    x.tractor = {0.4, 0.4, 0, 1, 0, 0};
    k = cable_kinematics(x);
    CHECK(k.l_c == doctest::Approx(0.56568542494923801).epsilon(1e-12));
    CHECK(k.theta_c == doctest::Approx(kPi / 4));
    CHECK(k.omega_c == doctest::Approx(-1.25).epsilon(1e-12));
  }

  TEST_CASE("cable kinematics at zero length") {
    HybridState x;
    x.tractor = {0, 0, 0, 1, 0, 0};
    CHECK(cable_kinematics(x).omega_c == 0.0);
  }

  TEST_CASE("slack step: fixed point at rest") {
    SystemParams p;
    HybridState x;
    x.tractor = {1, 2, 0.3, 0, 0, 0};
    x.trailer = {0.5, 2, 0.1, 0, 0.2, 0};
    x.mode = CableMode::Taut;
    const HybridState r = step_slack(x, {}, 0.1, p);
    CHECK(r.tractor.x == x.tractor.x);
    CHECK(r.trailer.x == x.trailer.x);
    CHECK(r.trailer.delta == x.trailer.delta);
    CHECK(r.mode == CableMode::Slack);
  }

  TEST_CASE("slack step: tractor pulls away, cable lengthens") {
    SystemParams p;
    HybridState x;
    x.tractor = {0, 0, 0, 1, 0, 0};
    x.trailer = {-0.5, 0, 0, 0, 0, 0};
    const HybridState r = step_slack(x, {}, 0.1, p);
    CHECK(r.tractor.x == doctest::Approx(0.1));
    CHECK(r.trailer.x == -0.5);
    CHECK(r.trailer.v == 0.0);
    CHECK(cable_length(r) == doctest::Approx(0.6));
  }

  TEST_CASE("slack step: friction clamps at zero") {
    SystemParams p;
    HybridState x;
    x.tractor = {1, 0, 0, 0, 0, 0};
    x.trailer.v = 0.02;
    const HybridState r = step_slack(x, {}, 0.1, p);
    CHECK(r.trailer.v == 0.0);
    CHECK(r.trailer.force == 0.0);
  }

  TEST_CASE("taut step: straight-line towing") {
    SystemParams p;
    auto r = step_taut(towing_pair(0.8, 1, 0, 1), {}, 0.1, p);
    REQUIRE(r);
    CHECK(r->tractor.x == doctest::Approx(0.9));
    CHECK(r->trailer.x == doctest::Approx(0.1));
    CHECK(r->trailer.y == doctest::Approx(0.0));
    CHECK(r->trailer.theta == doctest::Approx(0.0));
    CHECK(r->trailer.v == doctest::Approx(1.0));
    CHECK(std::abs(cable_length(*r) - 0.8) <= 1e-12);
    // reference_values.py: straight_tow_force
    CHECK(r->trailer.force == doctest::Approx(1.4715).epsilon(1e-12));
    CHECK(r->mode == CableMode::Taut);
  }

  TEST_CASE("taut step: velocity perpendicular to the cable") {
    SystemParams p;
    auto r = step_taut(towing_pair(0.8, 0, 1, 0), {}, 0.1, p);
    REQUIRE(r);
    CHECK(r->trailer.v == 0.0);
    const double d = std::hypot(r->tractor.x - r->trailer.x, r->tractor.y - r->trailer.y);
    CHECK(d == doctest::Approx(0.8).epsilon(1e-12));
  }

  TEST_CASE("taut step: velocity into the cable is rejected") {
    SystemParams p;
    auto r = step_taut(towing_pair(0.8, -1, 0, 0), {}, 0.1, p);
    REQUIRE_FALSE(r);
    CHECK(r.error().reason == TautFailure::ObtuseVelocity);
  }

  TEST_CASE("rollout: empty and constant sequences") {
    SystemParams p;
    HybridState x0;
    x0.tractor = {0.8, 0, 0, 0, 0, 0};
    auto t = rollout(x0, {}, {}, 0.1, p);
    REQUIRE(t);
    CHECK(t->states.size() == 1);

    auto c = rollout(x0, std::vector<ControlInput>(10), std::vector<CableMode>(10, CableMode::Slack),
                     0.1, p);
    REQUIRE(c);
    REQUIRE(c->states.size() == 11);
    for (const auto& s : c->states) {
      CHECK(s.tractor.x == 0.8);
      CHECK(s.trailer.x == 0.0);
    }
  }

  TEST_CASE("rollout reports the failing step") {
    SystemParams p;
    HybridState x0 = towing_pair(0.8, 0, 0, 0);
    std::vector<ControlInput> u(4, ControlInput{0, 0, 0});
    u[2] = {-10, 0, 0};
    auto r = rollout(x0, u, std::vector<CableMode>(4, CableMode::Taut), 0.1, p);
    REQUIRE_FALSE(r);
    CHECK(r.error().index == 2);
  }

  TEST_CASE("rollout reproduces a search expansion") {
    SystemParams p;
    HybridState x0 = towing_pair(0.8, 0, 0, 0);
    auto node = expand(root_node(x0), {0.75, 0.25, 0}, p);
    REQUIRE(node);
    std::vector<CableMode> modes;
    for (const auto& s : node->states) modes.push_back(s.mode);
    auto t = rollout(x0, std::vector<ControlInput>(modes.size(), {0.75, 0.25, 0}), modes, 0.1, p);
    REQUIRE(t);
    for (std::size_t k = 0; k < node->states.size(); ++k) {
      CHECK(t->states[k + 1].trailer.x == node->states[k].trailer.x);
      CHECK(t->states[k + 1].tractor.vy == node->states[k].tractor.vy);
    }
  }
}

TEST_SUITE("model properties") {
  TEST_CASE("taut closure invariants on random states") {
    SystemParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(-kPi, kPi), spd(0.0, 1.0), acc(-1.0, 1.0);
    int accepted = 0;
    for (int i = 0; i < 2000; ++i) {
      HybridState x;
      const double th = ang(rng), st = 0.8 * ang(rng) / 2.0;
      x.trailer = {0.0, 0.0, th, spd(rng), st, 0.0};
      x.tractor.x = p.L_c_ub * std::cos(th + st);
      x.tractor.y = p.L_c_ub * std::sin(th + st);
      x.tractor.vx = spd(rng) * std::cos(ang(rng));
      x.tractor.vy = spd(rng) * std::sin(ang(rng));
      x.mode = CableMode::Taut;
      auto r = step_taut(x, {acc(rng), acc(rng), 0}, p.dt, p);
      if (!r) continue;
      ++accepted;
      CHECK(std::abs(cable_length(*r) - p.L_c_ub) <= 1e-9);
      CHECK(std::abs(alignment_residual(*r)) <= 1e-9);
      CHECK(r->mode == CableMode::Taut);
      CHECK(r->trailer.v >= 0.0);
    }
    CHECK(accepted > 500);
  }

  TEST_CASE("slack step freezes steering and zeroes the force") {
    SystemParams p;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
      HybridState x;
      x.trailer = {u(rng), u(rng), 3 * u(rng), std::abs(u(rng)), 1.5 * u(rng), u(rng)};
      x.tractor = {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const HybridState r = step_slack(x, {u(rng), u(rng), u(rng)}, p.dt, p);
      CHECK(r.trailer.delta == x.trailer.delta);
      CHECK(r.trailer.force == 0.0);
      CHECK(r.mode == CableMode::Slack);
    }
  }

  TEST_CASE("friction dissipation reaches rest within the bound") {
    SystemParams p;
    for (double v0 : {0.05, 0.3, 0.77, 1.0}) {
      TrailerState s{0, 0, 0, v0, 0, 0};
      const int bound = static_cast<int>(std::ceil(v0 / (p.friction_decel() * p.dt)));
      int n = 0;
      while (s.v > 0.0 && n <= bound + 1) {
        const double before = s.v;
        s = step_trailer(s, 0.0, p.dt, p);
        CHECK(s.v <= before);
        ++n;
      }
      CHECK(s.v == 0.0);
      CHECK(n <= bound);
    }
  }

  TEST_CASE("identical inputs give identical outputs") {
    SystemParams p;
    HybridState x = towing_pair(0.8, 0.3, 0.1, 0.2);
    auto a = step_hybrid(x, {0.3, -0.2, 0.1}, p.dt, p);
    auto b = step_hybrid(x, {0.3, -0.2, 0.1}, p.dt, p);
    REQUIRE(a);
    REQUIRE(b);
    const double fa[] = {a->tractor.x, a->tractor.y, a->tractor.theta, a->tractor.vx,
                         a->tractor.vy, a->tractor.omega, a->trailer.x, a->trailer.y,
                         a->trailer.theta, a->trailer.v, a->trailer.delta, a->trailer.force};
    const double fb[] = {b->tractor.x, b->tractor.y, b->tractor.theta, b->tractor.vx,
                         b->tractor.vy, b->tractor.omega, b->trailer.x, b->trailer.y,
                         b->trailer.theta, b->trailer.v, b->trailer.delta, b->trailer.force};
    for (int i = 0; i < 12; ++i) CHECK(fa[i] == fb[i]);
    CHECK(a->mode == b->mode);
  }
}
