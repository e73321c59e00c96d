#include <doctest.h>

#include <cmath>
#include <random>

#include "towplan/distance_field.hpp"
#include "towplan/dubins.hpp"
#include "towplan/errors.hpp"
#include "towplan/geometry.hpp"

using namespace towplan;

namespace {

Polygon square(double x, double y, double side) {
  return {{{x, y}, {x + side, y}, {x + side, y + side}, {x, y + side}}};
}

// Classical orientation test written independently of the library.
double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool crosses(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0.0 && o3 * o4 < 0.0;
}

double octile(int dx, int dy, double res) {
  const int a = std::abs(dx), b = std::abs(dy);
  return res * (std::max(a, b) - std::min(a, b)) + res * std::sqrt(2.0) * std::min(a, b);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("intersection parameters: midpoint crossing") {
    const auto ip = intersection_params({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
    CHECK(ip.theta_s == doctest::Approx(0.5));
    CHECK(ip.theta_o == doctest::Approx(0.5));
  }

  TEST_CASE("intersection parameters: parallel edges") {
    const auto ip = intersection_params({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    CHECK(ip.parallel());
    CHECK(std::isinf(ip.theta_o));
  }

  TEST_CASE("intersection parameters: crossing outside the first edge") {
    // reference_values.py: intersection_params
    const auto ip = intersection_params({{0, 0}, {2, 0}, {3, -1}, {3, 1}});
    CHECK(ip.theta_s == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(ip.theta_o == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("degenerate edge is rejected") {
    CHECK_THROWS_AS(intersection_params({{0, 0}, {0, 0}, {1, 0}, {1, 1}}), DegenerateEdge);
  }

  TEST_CASE("collision residual examples") {
    CHECK(collision_residual({{0, 0}, {1, 1}, {0, 1}, {1, 0}}) == doctest::Approx(-0.5));
    // theta_s = theta_o = 1: both lines meet at P1 of each edge.
    CHECK(collision_residual({{0, 0}, {1, 0}, {0, 0}, {0, 1}}) == doctest::Approx(0.0));
    CHECK(collision_residual({{0, 0}, {1, 0}, {0, 1}, {1, 1}}) == kParallelResidual);
    CHECK(collision_residual_inf({{0, 0}, {1, 1}, {0, 1}, {1, 0}}) == doctest::Approx(-0.5));
    // theta_s = 0, theta_o = 0.5: the crossing sits on the end of the system edge.
    CHECK(collision_residual_inf({{1, 0}, {0, 0}, {0, -1}, {0, 1}}) ==
          doctest::Approx(0.0));
  }

  TEST_CASE("polygon collision and containment") {
    const Polygon a = square(0, 0, 1);
    CHECK(polygons_collide(a, square(0.5, 0.5, 1)));
    CHECK_FALSE(polygons_collide(a, square(3, 0, 1)));
    const Polygon big = square(-2, -2, 5), tiny = square(0.4, 0.4, 0.1);
    CHECK_FALSE(polygons_collide(big, tiny));
    CHECK(polygons_overlap(big, tiny));
  }

  TEST_CASE("point in polygon") {
    const Polygon a = square(0, 0, 1);
    CHECK(point_in_polygon({0.5, 0.5}, a));
    CHECK_FALSE(point_in_polygon({2, 2}, a));
    CHECK(point_in_polygon({0, 0}, a));
  }

  TEST_CASE("system polygons") {
    SystemParams p;
    const BodyFootprint fp = BodyFootprint::defaults();
    HybridState x;
    auto polys = system_polygons(x, fp, p);
    REQUIRE(polys[0].vertices.size() == fp.tractor.vertices.size());
    for (std::size_t i = 0; i < polys[0].vertices.size(); ++i) {
      CHECK(polys[0].vertices[i].x == doctest::Approx(fp.tractor.vertices[i].x));
      CHECK(polys[0].vertices[i].y == doctest::Approx(fp.tractor.vertices[i].y));
    }

    x.tractor = {1, 1, kPi / 2, 0, 0, 0};
    polys = system_polygons(x, fp, p);
    for (std::size_t i = 0; i < polys[0].vertices.size(); ++i) {
      const Vec2 l = fp.tractor.vertices[i];
      CHECK(polys[0].vertices[i].x == doctest::Approx(1 - l.y));
      CHECK(polys[0].vertices[i].y == doctest::Approx(1 + l.x));
    }

    x.trailer = {0.2, 1.0 - 0.8, kPi / 2, 0, 0, 0};
    x.tractor = {0.2, 1.0, kPi / 2, 0, 0, 0};
    polys = system_polygons(x, fp, p);
    REQUIRE(polys[2].vertices.size() == 2);
    const Vec2 a = polys[2].vertices[0], b = polys[2].vertices[1];
    CHECK(std::hypot(a.x - b.x, a.y - b.y) == doctest::Approx(p.L_c_ub).epsilon(1e-6));
  }

  TEST_CASE("minimum turning radius") {
    // reference_values.py: r_min
    CHECK(std::abs(SystemParams{}.r_min() - 0.94339811320566047) <= 1e-9);
  }

  TEST_CASE("Dubins lengths against the circle-geometry oracle") {
    // reference_values.py: DUBINS_CASES
    struct Case {
      Pose2 a, b;
      double r, len;
    };
    const Case cases[] = {
        {{0, 0, 0}, {0, 0, kPi}, 1.0, 7.330382858376184},
        {{0, 0, 0}, {4, 3, 1}, 1.0, 5.053324727308359},
        {{1, -2, 2.5}, {-3, 0.5, -0.4}, 0.94339811320566, 7.781257106492608},
        {{0, 0, 0.3}, {0.5, 0.4, 2.9}, 1.0, 7.210342753101318},
        {{2, 2, -1.2}, {2, 5, -1.2}, 0.5, 6.088648050804323},
    };
    for (const auto& c : cases) {
      CHECK(dubins_length(c.a, c.b, c.r) == doctest::Approx(c.len).epsilon(1e-9));
    }
    CHECK(dubins_length({0, 0, 0}, {5, 0, 0}, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
  }

  TEST_CASE("Dubins interpolation") {
    auto poses = dubins_interpolate({0, 0, 0}, {1, 0, 0}, 1.0, 0.25);
    CHECK(poses.size() == 5);
    auto single = dubins_interpolate({0.3, 0.4, 0.5}, {0.3, 0.4, 0.5}, 1.0, 0.25);
    CHECK(single.size() == 1);
  }

  TEST_CASE("distance field: empty map equals octile distance") {
    const Rect bounds{0, 0, 4, 4};
    const double res = 0.2;
    const DistanceField df = build_distance_field({}, bounds, {2.1, 2.1}, res, 0.0);
    auto gc = df.cell_of({2.1, 2.1});
    REQUIRE(gc);
    CHECK(df.cell_cost(gc->first, gc->second) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(df.cell_cost(gc->first + 1, gc->second) == doctest::Approx(res));
    // Beyond the seeded neighbourhood every cost follows the octile metric
    // from the seed ring.
    for (int ix = 0; ix < df.nx(); ix += 3) {
      for (int iy = 0; iy < df.ny(); iy += 3) {
        const int dx = ix - gc->first, dy = iy - gc->second;
        if (std::max(std::abs(dx), std::abs(dy)) <= 2) continue;
        const double c = df.cell_cost(ix, iy);
        CHECK(c <= octile(dx, dy, res) + 1e-9);
        CHECK(c >= octile(dx, dy, res) - 2.0 * res);
        // Along axes and diagonals the seeded ring agrees with the octile metric.
        if (dx == 0 || dy == 0 || std::abs(dx) == std::abs(dy)) {
          CHECK(c == doctest::Approx(octile(dx, dy, res)).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("distance field: goal inside an obstacle") {
    CHECK_THROWS_AS(
        build_distance_field({square(1, 1, 1)}, {0, 0, 4, 4}, {1.5, 1.5}, 0.2, 0.0), GoalBlocked);
  }
}

TEST_SUITE("geometry properties") {
  TEST_CASE("residual sign agrees with the segment-intersection oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
      const EdgePair e{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
      const auto ip = intersection_params(e);
      if (ip.parallel()) continue;
      // Skip near-degenerate cases where the crossing lies on an endpoint.
      if (std::min({std::abs(ip.theta_s), std::abs(ip.theta_s - 1), std::abs(ip.theta_o),
                    std::abs(ip.theta_o - 1)}) < 1e-9) {
        continue;
      }
      const bool in_square = ip.theta_s >= 0 && ip.theta_s <= 1 && ip.theta_o >= 0 &&
                             ip.theta_o <= 1;
      CHECK(in_square == crosses(e.p1s, e.p2s, e.p1o, e.p2o));
      CHECK(in_square == segments_intersect(e.p1s, e.p2s, e.p1o, e.p2o));
      // Nesting: disc-feasible implies square-feasible implies disjoint.
      if (collision_residual(e) >= 0) CHECK(collision_residual_inf(e) >= 0);
      if (collision_residual_inf(e) > 0) CHECK_FALSE(crosses(e.p1s, e.p2s, e.p1o, e.p2o));
      ++checked;
    }
    CHECK(checked > 9900);
  }

  TEST_CASE("intersection parameters swap with the edges") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
      const EdgePair e{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
      const auto a = intersection_params(e);
      const auto b = intersection_params({e.p1o, e.p2o, e.p1s, e.p2s});
      if (a.parallel()) continue;
      CHECK(a.theta_s == doctest::Approx(b.theta_o).epsilon(1e-9));
      CHECK(a.theta_o == doctest::Approx(b.theta_s).epsilon(1e-9));
    }
  }

  TEST_CASE("Dubins length bounds and word minimum") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> pos(-5.0, 5.0), ang(-kPi, kPi);
    const DubinsWord words[] = {DubinsWord::LSL, DubinsWord::LSR, DubinsWord::RSL,
                                DubinsWord::RSR, DubinsWord::RLR, DubinsWord::LRL};
    for (int i = 0; i < 1000; ++i) {
      const Pose2 a{pos(rng), pos(rng), ang(rng)}, b{pos(rng), pos(rng), ang(rng)};
      const double r = 0.943398;
      const double len = dubins_length(a, b, r);
      CHECK(len >= std::hypot(b.x - a.x, b.y - a.y) - 1e-9);
      double best = INFINITY;
      for (DubinsWord w : words) {
        if (auto s = dubins_word(a, b, r, w)) best = std::min(best, r * ((*s)[0] + (*s)[1] + (*s)[2]));
      }
      CHECK(len == doctest::Approx(best).epsilon(1e-12));
      // The sampled end pose reaches the goal.
      const Pose2 end = dubins_shortest(a, b, r).sample(len);
      CHECK(end.x == doctest::Approx(b.x).epsilon(1e-9));
      CHECK(end.y == doctest::Approx(b.y).epsilon(1e-9));
    }
  }

  TEST_CASE("turn samples lie on circles of the turning radius") {
    const double r = 0.943398;
    const DubinsPath path = dubins_shortest({0, 0, 0}, {1, 3, 2.0}, r);
    const double first = path.segments[0] * r;
    const Pose2 s0 = path.sample(0.0);
    const bool left = path.word == DubinsWord::LSL || path.word == DubinsWord::LSR ||
                      path.word == DubinsWord::LRL;
    const Vec2 c = left ? Vec2{s0.x - r * std::sin(s0.theta), s0.y + r * std::cos(s0.theta)}
                        : Vec2{s0.x + r * std::sin(s0.theta), s0.y - r * std::cos(s0.theta)};
    for (int k = 0; k <= 20; ++k) {
      const Pose2 q = path.sample(first * k / 20.0);
      CHECK(std::abs(std::hypot(q.x - c.x, q.y - c.y) - r) <= 1e-9);
    }
  }

  TEST_CASE("distance field is admissible on grid paths") {
    const std::vector<Polygon> obs = {square(1.0, 0.0, 0.6), square(2.2, 1.4, 0.6)};
    const DistanceField df = build_distance_field(obs, {0, 0, 4, 3}, {3.5, 2.5}, 0.2, 0.1);
    // Bellman inequality over every free 8-neighbour; with a zero goal cost
    // it bounds the field by the length of any free grid path.
    int checked = 0;
    for (int ix = 0; ix < df.nx(); ++ix) {
      for (int iy = 0; iy < df.ny(); ++iy) {
        if (df.occupied(ix, iy)) {
          CHECK(std::isinf(df.cell_cost(ix, iy)));
          continue;
        }
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            const int nx = ix + dx, ny = iy + dy;
            if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= df.nx() || ny >= df.ny() ||
                df.occupied(nx, ny)) {
              continue;
            }
            const double step = std::hypot(dx, dy) * df.resolution();
            CHECK(df.cell_cost(ix, iy) <= df.cell_cost(nx, ny) + step + 1e-9);
            ++checked;
          }
        }
      }
    }
    CHECK(checked > 1000);
  }
}

TEST_SUITE("geometry properties") {
  // Hand-derived gradient of the edge-pair residual with respect to the system
  // edge endpoints. It covers the steep nearly parallel pairs where a
  // difference quotient cannot resolve the derivative.
  TEST_CASE("residual gradient matches the closed form near parallel") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> pos(-2.0, 2.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> expo(-7.0, 0.0);
    using D = Dual<4>;
    double worst = 0.0, steepest = 0.0;
    int checked = 0;
    for (int i = 0; i < 20000; ++i) {
      const Vec2 o1{pos(rng), pos(rng)};
      const double phi = ang(rng);
      const Vec2 o2{o1.x + std::cos(phi), o1.y + std::sin(phi)};
      // System edge rotated away from the obstacle edge by 10^-7 .. 1 rad.
      const double tilt = (i % 2 ? 1.0 : -1.0) * std::pow(10.0, expo(rng));
      const Vec2 s2{pos(rng), pos(rng)};
      const Vec2 s1{s2.x + 0.7 * std::cos(phi + tilt), s2.y + 0.7 * std::sin(phi + tilt)};

      const double ax = s1.x - s2.x, ay = s1.y - s2.y;
      const double bx = o1.x - o2.x, by = o1.y - o2.y;
      const double cx = o2.x - s2.x, cy = o2.y - s2.y;
      const double det = ax * by - ay * bx;
      if (std::abs(det) < kParallelEps) continue;
      const double ts = (cx * by - cy * bx) / det, to = (cx * ay - cy * ax) / det;
      const double ks = 2.0 * (ts - 0.5) / det, ko = 2.0 * (to - 0.5) / det;
      // Partials with respect to the difference vectors a and c.
      const double r_ax = ks * (-ts * by) + ko * (-cy - to * by);
      const double r_ay = ks * (ts * bx) + ko * (cx + to * bx);
      const double r_cx = ks * by + ko * ay;
      const double r_cy = -ks * bx - ko * ax;
      const double closed[4] = {r_ax, r_ay, -r_ax - r_cx, -r_ay - r_cy};

      const D r = collision_residual_t(BasicVec2<D>{D::variable(s1.x, 0), D::variable(s1.y, 1)},
                                       BasicVec2<D>{D::variable(s2.x, 2), D::variable(s2.y, 3)},
                                       BasicVec2<D>{D(o1.x), D(o1.y)},
                                       BasicVec2<D>{D(o2.x), D(o2.y)});
      for (int j = 0; j < 4; ++j) {
        const double scale = std::max(1.0, std::abs(closed[j]));
        worst = std::max(worst, std::abs(r.d[j] - closed[j]) / scale);
        steepest = std::max(steepest, std::abs(closed[j]));
      }
      ++checked;
    }
    CHECK(checked > 19000);
    CHECK(steepest > 1e6);
    CHECK(worst <= 1e-9);
  }
}
