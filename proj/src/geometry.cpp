#include "towplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "towplan/errors.hpp"

namespace towplan {

namespace {

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

}  // namespace

void validate_polygon(const Polygon& poly, const std::string& field) {
  if (poly.vertices.size() < 2) throw ValidationError(field, "polygon needs at least 2 vertices");
  for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
    const Vec2& v = poly.vertices[i];
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw ValidationError(field, "vertex " + std::to_string(i) + " is not finite");
    }
    const Vec2& w = poly.vertices[(i + 1) % poly.vertices.size()];
    if (i + 1 < poly.vertices.size() || poly.vertices.size() > 2) {
      if (v.x == w.x && v.y == w.y) {
        throw ValidationError(field, "repeated consecutive vertex " + std::to_string(i));
      }
    }
  }
}

BodyFootprint BodyFootprint::rectangles(double tractor_length, double tractor_width,
                                        double trailer_length, double trailer_width) {
  BodyFootprint fp;
  const double hl = tractor_length / 2.0, hw = tractor_width / 2.0;
  fp.tractor.vertices = {{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}};
  const double tw = trailer_width / 2.0;
  fp.trailer.vertices = {{-trailer_length, -tw}, {0.0, -tw}, {0.0, tw}, {-trailer_length, tw}};
  return fp;
}

double BodyFootprint::trailer_circumradius() const {
  double r = 0.0;
  for (const Vec2& v : trailer.vertices) {
    r = std::max(r, std::hypot(v.x - trailer_anchor.x, v.y - trailer_anchor.y));
  }
  return r;
}

IntersectionParams intersection_params(const EdgePair& e) {
  const double ax = e.p1s.x - e.p2s.x, ay = e.p1s.y - e.p2s.y;
  const double bx = e.p1o.x - e.p2o.x, by = e.p1o.y - e.p2o.y;
  if (std::hypot(ax, ay) < kDegenerateEdge || std::hypot(bx, by) < kDegenerateEdge) {
    throw DegenerateEdge("intersection_params: edge shorter than 1e-12 m");
  }
  const double det = cross(ax, ay, bx, by);
  if (std::abs(det) < kParallelEps) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  const double cx = e.p2o.x - e.p2s.x, cy = e.p2o.y - e.p2s.y;
  return {cross(cx, cy, bx, by) / det, cross(cx, cy, ax, ay) / det};
}

double collision_residual(const EdgePair& e) {
  const IntersectionParams t = intersection_params(e);
  if (t.parallel()) return kParallelResidual;
  const double ds = t.theta_s - 0.5, d_o = t.theta_o - 0.5;
  return ds * ds + d_o * d_o - 0.5;
}

double collision_residual_inf(const EdgePair& e) {
  const IntersectionParams t = intersection_params(e);
  if (t.parallel()) return kParallelResidual;
  return std::max(std::abs(t.theta_s - 0.5), std::abs(t.theta_o - 0.5)) - 0.5;
}

bool segments_intersect(const Vec2& a1, const Vec2& a2, const Vec2& b1, const Vec2& b2) {
  const double d1 = orient(b1, b2, a1);
  const double d2 = orient(b1, b2, a2);
  const double d3 = orient(a1, a2, b1);
  const double d4 = orient(a1, a2, b2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(b1, b2, a1)) return true;
  if (d2 == 0 && on_segment(b1, b2, a2)) return true;
  if (d3 == 0 && on_segment(a1, a2, b1)) return true;
  if (d4 == 0 && on_segment(a1, a2, b2)) return true;
  return false;
}

bool polygons_collide(const Polygon& a, const Polygon& b) {
  for (std::size_t i = 0; i < a.edge_count(); ++i) {
    const auto [p1s, p2s] = a.edge(i);
    for (std::size_t j = 0; j < b.edge_count(); ++j) {
      const auto [p1o, p2o] = b.edge(j);
      const IntersectionParams t = intersection_params({p1s, p2s, p1o, p2o});
      if (t.parallel()) continue;
      if (t.theta_s >= 0.0 && t.theta_s <= 1.0 && t.theta_o >= 0.0 && t.theta_o <= 1.0) {
        return true;
      }
    }
  }
  return false;
}

bool point_in_polygon(const Vec2& pt, const Polygon& poly) {
  const std::size_t n = poly.vertices.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly.vertices[i];
    const Vec2& b = poly.vertices[j];
    if (orient(a, b, pt) == 0.0 && on_segment(a, b, pt)) return true;
    if ((a.y > pt.y) != (b.y > pt.y)) {
      const double x_cross = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (pt.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
  if (polygons_collide(a, b)) return true;
  for (const Vec2& v : a.vertices) {
    if (point_in_polygon(v, b)) return true;
  }
  for (const Vec2& v : b.vertices) {
    if (point_in_polygon(v, a)) return true;
  }
  return false;
}

Polygon transform_polygon(const Polygon& local, const Pose2& pose) {
  Polygon out;
  out.vertices.reserve(local.vertices.size());
  for (const Vec2& v : local.vertices) {
    out.vertices.push_back(transform_point(v, pose.x, pose.y, pose.theta));
  }
  return out;
}

std::array<Polygon, 3> system_polygons(const HybridState& x, const BodyFootprint& fp,
                                       const SystemParams& /*p*/) {
  const Pose2 tractor{x.tractor.x, x.tractor.y, x.tractor.theta};
  const Pose2 trailer{x.trailer.x, x.trailer.y, x.trailer.theta};
  Polygon cable;
  cable.vertices = {transform_point(fp.tractor_anchor, tractor.x, tractor.y, tractor.theta),
                    transform_point(fp.trailer_anchor, trailer.x, trailer.y, trailer.theta)};
  return {transform_polygon(fp.tractor, tractor), transform_polygon(fp.trailer, trailer),
          std::move(cable)};
}

double point_polygon_distance(const Vec2& pt, const Polygon& poly) {
  if (point_in_polygon(pt, poly)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.edge_count(); ++i) {
    const auto [a, b] = poly.edge(i);
    d = std::min(d, point_segment_distance(pt, a, b));
  }
  if (poly.vertices.size() == 1) d = std::hypot(pt.x - poly.vertices[0].x, pt.y - poly.vertices[0].y);
  return d;
}

}  // namespace towplan
