#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "towplan/model.hpp"

namespace towplan {

template <class T>
struct BasicVec2 {
  T x{}, y{};
};
using Vec2 = BasicVec2<double>;

struct Pose2 {
  double x = 0.0, y = 0.0, theta = 0.0;
};

struct Rect {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

/// Counter-clockwise vertex list, implicitly closed. Two vertices form a
/// segment with a single edge.
struct Polygon {
  std::vector<Vec2> vertices;

  std::size_t edge_count() const {
    return vertices.size() < 3 ? (vertices.size() == 2 ? 1 : 0) : vertices.size();
  }
  std::pair<Vec2, Vec2> edge(std::size_t i) const {
    return {vertices[i], vertices[(i + 1) % vertices.size()]};
  }
};

/// Throws ValidationError when the polygon has fewer than two vertices,
/// repeated consecutive vertices, or non-finite coordinates.
void validate_polygon(const Polygon& poly, const std::string& field);

struct BodyFootprint {
  Polygon tractor;  // local frame, origin at the tractor pose
  Polygon trailer;  // local frame, origin at the trailer anchor (front centre)
  Vec2 tractor_anchor{0.0, 0.0};
  Vec2 trailer_anchor{0.0, 0.0};

  static BodyFootprint rectangles(double tractor_length, double tractor_width,
                                  double trailer_length, double trailer_width);
  static BodyFootprint defaults() { return rectangles(0.60, 0.30, 0.55, 0.40); }

  /// Farthest trailer vertex from the trailer anchor.
  double trailer_circumradius() const;
};

struct EdgePair {
  Vec2 p1s, p2s;  // system edge
  Vec2 p1o, p2o;  // obstacle edge
};

/// Line-intersection parameters in the convex-combination form
/// point = theta * P1 + (1 - theta) * P2 on each edge. Both are +inf for
/// parallel edges.
struct IntersectionParams {
  double theta_s = 0.0;
  double theta_o = 0.0;
  bool parallel() const { return std::isinf(theta_s); }
};

constexpr double kParallelEps = 1e-12;
constexpr double kParallelResidual = 1e6;
constexpr double kDegenerateEdge = 1e-12;

IntersectionParams intersection_params(const EdgePair& e);
/// (theta_s - 1/2)^2 + (theta_o - 1/2)^2 - 1/2; non-negative means the two
/// segments cannot intersect.
double collision_residual(const EdgePair& e);
/// max(|theta_s - 1/2|, |theta_o - 1/2|) - 1/2.
double collision_residual_inf(const EdgePair& e);

/// Generic residual for differentiation: parallel pairs return the sentinel.
template <class T>
T collision_residual_t(const BasicVec2<T>& p1s, const BasicVec2<T>& p2s, const BasicVec2<T>& p1o,
                       const BasicVec2<T>& p2o) {
  const T ax = p1s.x - p2s.x, ay = p1s.y - p2s.y;
  const T bx = p1o.x - p2o.x, by = p1o.y - p2o.y;
  const T cx = p2o.x - p2s.x, cy = p2o.y - p2s.y;
  const T det = ax * by - ay * bx;
  if (std::abs(value_of(det)) < kParallelEps) return T(kParallelResidual);
  const T ts = (cx * by - cy * bx) / det - 0.5;
  const T to = (cx * ay - cy * ax) / det - 0.5;
  return ts * ts + to * to - 0.5;
}

/// Orientation-based segment intersection (touching counts).
bool segments_intersect(const Vec2& a1, const Vec2& a2, const Vec2& b1, const Vec2& b2);

/// Edge-crossing collision: true iff some edge pair has both parameters in
/// [0, 1]. Full containment is not detected; see point_in_polygon.
bool polygons_collide(const Polygon& a, const Polygon& b);

/// Ray-crossing parity; boundary points count as inside.
bool point_in_polygon(const Vec2& pt, const Polygon& poly);

/// Edge crossing or containment of either polygon's vertices in the other.
bool polygons_overlap(const Polygon& a, const Polygon& b);

template <class T>
BasicVec2<T> transform_point(const Vec2& local, const T& x, const T& y, const T& theta) {
  using std::cos;
  using std::sin;
  const T c = cos(theta), s = sin(theta);
  return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
}

Polygon transform_polygon(const Polygon& local, const Pose2& pose);

enum class BodyPart { Tractor = 0, Trailer = 1, Cable = 2 };

/// World-frame tractor footprint, trailer footprint, and cable segment.
std::array<Polygon, 3> system_polygons(const HybridState& x, const BodyFootprint& fp,
                                       const SystemParams& p);

double point_polygon_distance(const Vec2& pt, const Polygon& poly);

}  // namespace towplan
