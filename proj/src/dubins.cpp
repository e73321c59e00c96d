#include "towplan/dubins.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace towplan {

namespace {

double mod2pi(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  if (r >= 2.0 * kPi) r = 0.0;
  return r;
}

enum class Seg { L, S, R };

constexpr std::array<std::array<Seg, 3>, 6> kWordSegments = {{
    {Seg::L, Seg::S, Seg::L},
    {Seg::L, Seg::S, Seg::R},
    {Seg::R, Seg::S, Seg::L},
    {Seg::R, Seg::S, Seg::R},
    {Seg::R, Seg::L, Seg::R},
    {Seg::L, Seg::R, Seg::L},
}};

// Advances a unit-radius pose along one segment of length t.
Pose2 advance(const Pose2& q, Seg seg, double t) {
  switch (seg) {
    case Seg::L:
      return {q.x + std::sin(q.theta + t) - std::sin(q.theta),
              q.y - std::cos(q.theta + t) + std::cos(q.theta), q.theta + t};
    case Seg::R:
      return {q.x - std::sin(q.theta - t) + std::sin(q.theta),
              q.y + std::cos(q.theta - t) - std::cos(q.theta), q.theta - t};
    case Seg::S:
      break;
  }
  return {q.x + t * std::cos(q.theta), q.y + t * std::sin(q.theta), q.theta};
}

}  // namespace

std::string_view to_string(DubinsWord w) {
  static constexpr std::array<std::string_view, 6> names = {"LSL", "LSR", "RSL",
                                                             "RSR", "RLR", "LRL"};
  return names[static_cast<int>(w)];
}

std::optional<std::array<double, 3>> dubins_word(const Pose2& start, const Pose2& goal,
                                                 double radius, DubinsWord word) {
  const double dx = goal.x - start.x, dy = goal.y - start.y;
  const double d = std::hypot(dx, dy) / radius;
  const double th = d > 0.0 ? mod2pi(std::atan2(dy, dx)) : 0.0;
  const double a = mod2pi(start.theta - th);
  const double b = mod2pi(goal.theta - th);
  const double sa = std::sin(a), sb = std::sin(b), ca = std::cos(a), cb = std::cos(b);
  const double cab = std::cos(a - b);
  const double d2 = d * d;

  switch (word) {
    case DubinsWord::LSL: {
      const double p2 = 2.0 + d2 - 2.0 * cab + 2.0 * d * (sa - sb);
      if (p2 < 0.0) return std::nullopt;
      const double tmp = std::atan2(cb - ca, d + sa - sb);
      return std::array<double, 3>{mod2pi(tmp - a), std::sqrt(p2), mod2pi(b - tmp)};
    }
    case DubinsWord::RSR: {
      const double p2 = 2.0 + d2 - 2.0 * cab + 2.0 * d * (sb - sa);
      if (p2 < 0.0) return std::nullopt;
      const double tmp = std::atan2(ca - cb, d - sa + sb);
      return std::array<double, 3>{mod2pi(a - tmp), std::sqrt(p2), mod2pi(tmp - b)};
    }
    case DubinsWord::LSR: {
      const double p2 = -2.0 + d2 + 2.0 * cab + 2.0 * d * (sa + sb);
      if (p2 < 0.0) return std::nullopt;
      const double p = std::sqrt(p2);
      const double tmp = std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
      return std::array<double, 3>{mod2pi(tmp - a), p, mod2pi(tmp - b)};
    }
    case DubinsWord::RSL: {
      const double p2 = -2.0 + d2 + 2.0 * cab - 2.0 * d * (sa + sb);
      if (p2 < 0.0) return std::nullopt;
      const double p = std::sqrt(p2);
      const double tmp = std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
      return std::array<double, 3>{mod2pi(a - tmp), p, mod2pi(b - tmp)};
    }
    case DubinsWord::RLR: {
      const double c = (6.0 - d2 + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
      if (std::abs(c) > 1.0) return std::nullopt;
      const double p = mod2pi(2.0 * kPi - std::acos(c));
      const double t = mod2pi(a - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
      return std::array<double, 3>{t, p, mod2pi(a - b - t + p)};
    }
    case DubinsWord::LRL: {
      const double c = (6.0 - d2 + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
      if (std::abs(c) > 1.0) return std::nullopt;
      const double p = mod2pi(2.0 * kPi - std::acos(c));
      const double t = mod2pi(-a - std::atan2(ca - cb, d + sa - sb) + p / 2.0);
      return std::array<double, 3>{t, p, mod2pi(b - a - t + p)};
    }
  }
  return std::nullopt;
}

DubinsPath dubins_shortest(const Pose2& start, const Pose2& goal, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("dubins: radius must be positive");
  DubinsPath best;
  best.start = start;
  best.radius = radius;
  double best_len = std::numeric_limits<double>::infinity();
  for (int w = 0; w < 6; ++w) {
    const auto segs = dubins_word(start, goal, radius, static_cast<DubinsWord>(w));
    if (!segs) continue;
    const double len = (*segs)[0] + (*segs)[1] + (*segs)[2];
    if (len < best_len) {
      best_len = len;
      best.word = static_cast<DubinsWord>(w);
      best.segments = *segs;
    }
  }
  return best;
}

double dubins_length(const Pose2& start, const Pose2& goal, double radius) {
  return dubins_shortest(start, goal, radius).length();
}

Pose2 DubinsPath::sample(double s) const {
  double t = std::clamp(s, 0.0, length()) / radius;
  const auto& segs = kWordSegments[static_cast<int>(word)];
  Pose2 q{0.0, 0.0, start.theta};
  for (int i = 0; i < 3 && t >= 0.0; ++i) {
    const double step = std::min(t, segments[i]);
    q = advance(q, segs[i], step);
    t -= segments[i];
  }
  return {start.x + q.x * radius, start.y + q.y * radius, wrap_angle(q.theta)};
}

std::vector<Pose2> dubins_interpolate(const Pose2& start, const Pose2& goal, double radius,
                                      double ds) {
  if (!(ds > 0.0)) throw std::invalid_argument("dubins_interpolate: ds must be positive");
  const DubinsPath path = dubins_shortest(start, goal, radius);
  const double len = path.length();
  std::vector<Pose2> out;
  const auto n = static_cast<std::size_t>(std::floor(len / ds + 1e-9));
  out.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) out.push_back(path.sample(static_cast<double>(i) * ds));
  if (len - static_cast<double>(n) * ds > 1e-9) out.push_back(path.sample(len));
  return out;
}

}  // namespace towplan
