#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "towplan/geometry.hpp"

namespace towplan {

enum class DubinsWord { LSL = 0, LSR, RSL, RSR, RLR, LRL };
std::string_view to_string(DubinsWord w);

/// Segment lengths in units of the turning radius.
struct DubinsPath {
  Pose2 start;
  double radius = 1.0;
  DubinsWord word = DubinsWord::LSL;
  std::array<double, 3> segments{};

  double length() const { return (segments[0] + segments[1] + segments[2]) * radius; }
  /// Pose at arc length s (metres) along the path, clamped to [0, length()].
  Pose2 sample(double s) const;
};

/// Normalised segment lengths of one word, or nullopt when the word has no
/// solution for this pose pair.
std::optional<std::array<double, 3>> dubins_word(const Pose2& start, const Pose2& goal,
                                                 double radius, DubinsWord word);

DubinsPath dubins_shortest(const Pose2& start, const Pose2& goal, double radius);
double dubins_length(const Pose2& start, const Pose2& goal, double radius);

/// Poses at arc-length spacing ds along the shortest path; both endpoints are
/// included, the last spacing may be shorter.
std::vector<Pose2> dubins_interpolate(const Pose2& start, const Pose2& goal, double radius,
                                      double ds);

}  // namespace towplan
