#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "towplan/geometry.hpp"

namespace towplan {

/// Grid of 8-connected shortest-path costs to a goal cell over free space.
/// Immutable after construction.
class DistanceField {
 public:
  DistanceField(Rect bounds, double resolution, int nx, int ny, std::vector<double> cost,
                std::vector<bool> occupied, Vec2 goal);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution() const { return resolution_; }
  const Rect& bounds() const { return bounds_; }

  double cell_cost(int ix, int iy) const { return cost_[index(ix, iy)]; }
  bool occupied(int ix, int iy) const { return occupied_[index(ix, iy)]; }
  Vec2 cell_center(int ix, int iy) const;
  std::optional<std::pair<int, int>> cell_of(const Vec2& p) const;
  const Vec2& goal() const { return goal_; }

  /// Euclidean distance within one cell of the goal point, otherwise bilinear
  /// interpolation between cell centres over the finite neighbours. nullopt
  /// outside the bounds; +inf when every neighbour is occupied.
  std::optional<double> lookup(const Vec2& p) const;

  void write_csv(std::ostream& os) const;

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(ix);
  }

  Rect bounds_;
  double resolution_;
  int nx_, ny_;
  std::vector<double> cost_;
  std::vector<bool> occupied_;
  Vec2 goal_;
};

/// Cells whose centre lies within `inflation` of an obstacle are occupied.
/// Free cells within two cells of the goal are seeded with their Euclidean
/// distance to the goal point before the 8-connected Dijkstra sweep.
/// Throws GoalBlocked when the goal cell is occupied and std::invalid_argument
/// when the goal lies outside the bounds.
DistanceField build_distance_field(const std::vector<Polygon>& obstacles, const Rect& bounds,
                                   const Vec2& goal, double resolution, double inflation);

}  // namespace towplan
