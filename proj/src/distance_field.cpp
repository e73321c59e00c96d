#include "towplan/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "towplan/errors.hpp"

namespace towplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

DistanceField::DistanceField(Rect bounds, double resolution, int nx, int ny,
                             std::vector<double> cost, std::vector<bool> occupied, Vec2 goal)
    : bounds_(bounds),
      resolution_(resolution),
      nx_(nx),
      ny_(ny),
      cost_(std::move(cost)),
      occupied_(std::move(occupied)),
      goal_(goal) {}

Vec2 DistanceField::cell_center(int ix, int iy) const {
  return {bounds_.xmin + (ix + 0.5) * resolution_, bounds_.ymin + (iy + 0.5) * resolution_};
}

std::optional<std::pair<int, int>> DistanceField::cell_of(const Vec2& p) const {
  if (!bounds_.contains(p)) return std::nullopt;
  const int ix = std::min(nx_ - 1, static_cast<int>((p.x - bounds_.xmin) / resolution_));
  const int iy = std::min(ny_ - 1, static_cast<int>((p.y - bounds_.ymin) / resolution_));
  return std::pair{ix, iy};
}

std::optional<double> DistanceField::lookup(const Vec2& p) const {
  if (!bounds_.contains(p)) return std::nullopt;
  const double to_goal = std::hypot(p.x - goal_.x, p.y - goal_.y);
  if (to_goal <= resolution_) return to_goal;
  const double fx = (p.x - bounds_.xmin) / resolution_ - 0.5;
  const double fy = (p.y - bounds_.ymin) / resolution_ - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double tx = fx - x0, ty = fy - y0;
  double acc = 0.0, wsum = 0.0;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const int ix = std::clamp(x0 + dx, 0, nx_ - 1);
      const int iy = std::clamp(y0 + dy, 0, ny_ - 1);
      const double c = cost_[index(ix, iy)];
      if (!std::isfinite(c)) continue;
      const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty);
      acc += w * c;
      wsum += w;
    }
  }
  if (wsum <= 1e-12) {
    // Only the cell containing p might still be finite.
    const auto cell = cell_of(p);
    return cell_cost(cell->first, cell->second);
  }
  return acc / wsum;
}

void DistanceField::write_csv(std::ostream& os) const {
  char buf[32];
  for (int iy = ny_ - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      const double c = cost_[index(ix, iy)];
      if (std::isfinite(c)) {
        std::snprintf(buf, sizeof buf, "%.6f", c);
        os << buf;
      } else {
        os << "inf";
      }
      os << (ix + 1 < nx_ ? "," : "\n");
    }
  }
}

DistanceField build_distance_field(const std::vector<Polygon>& obstacles, const Rect& bounds,
                                   const Vec2& goal, double resolution, double inflation) {
  if (!(resolution > 0.0)) throw std::invalid_argument("distance field: resolution must be > 0");
  if (!bounds.contains(goal)) throw std::invalid_argument("distance field: goal outside bounds");
  const int nx = std::max(1, static_cast<int>(std::ceil(bounds.width() / resolution - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(bounds.height() / resolution - 1e-9)));
  const std::size_t n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);

  std::vector<bool> occupied(n, false);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Vec2 c{bounds.xmin + (ix + 0.5) * resolution, bounds.ymin + (iy + 0.5) * resolution};
      for (const Polygon& ob : obstacles) {
        if (point_polygon_distance(c, ob) <= inflation) {
          occupied[static_cast<std::size_t>(iy) * nx + ix] = true;
          break;
        }
      }
    }
  }

  const int gx = std::min(nx - 1, static_cast<int>((goal.x - bounds.xmin) / resolution));
  const int gy = std::min(ny - 1, static_cast<int>((goal.y - bounds.ymin) / resolution));
  if (occupied[static_cast<std::size_t>(gy) * nx + gx]) {
    throw GoalBlocked("distance field: goal cell is occupied");
  }

  std::vector<double> cost(n, kInf);
  using Entry = std::tuple<double, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  for (int iy = std::max(0, gy - 2); iy <= std::min(ny - 1, gy + 2); ++iy) {
    for (int ix = std::max(0, gx - 2); ix <= std::min(nx - 1, gx + 2); ++ix) {
      const std::size_t j = static_cast<std::size_t>(iy) * nx + ix;
      const Vec2 c{bounds.xmin + (ix + 0.5) * resolution, bounds.ymin + (iy + 0.5) * resolution};
      const double d = std::hypot(c.x - goal.x, c.y - goal.y);
      if ((ix == gx && iy == gy) || (!occupied[j] && d <= 2.0 * resolution + 1e-9)) {
        cost[j] = d;
        open.emplace(d, ix, iy);
      }
    }
  }
  const double diag = std::sqrt(2.0) * resolution;
  while (!open.empty()) {
    const auto [c, ix, iy] = open.top();
    open.pop();
    if (c > cost[static_cast<std::size_t>(iy) * nx + ix]) continue;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int jx = ix + dx, jy = iy + dy;
        if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
        const std::size_t j = static_cast<std::size_t>(jy) * nx + jx;
        if (occupied[j]) continue;
        const double nc = c + ((dx != 0 && dy != 0) ? diag : resolution);
        if (nc < cost[j]) {
          cost[j] = nc;
          open.emplace(nc, jx, jy);
        }
      }
    }
  }
  return DistanceField(bounds, resolution, nx, ny, std::move(cost), std::move(occupied), goal);
}

}  // namespace towplan
