#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "towplan/geometry.hpp"
#include "towplan/model.hpp"
#include "towplan/optimize.hpp"
#include "towplan/search.hpp"

namespace towplan {

struct Scenario {
  std::string name = "unnamed";
  World world;
  HybridState start;
  Pose2 goal;
  SystemParams params;
  CostWeights search_weights;
  WeightConfig optimizer_weights;
  BodyFootprint footprint = BodyFootprint::defaults();
};

/// Parses and validates a scenario. Throws ParseError with a 1-based line for
/// malformed JSON and ValidationError naming the offending field.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// FNV-1a 64 over a canonical 17-digit dump of every tunable value
/// (parameters, both weight sets, footprint). Rendered as "fnv1a64:<hex>".
std::string parameter_hash(const Scenario& s);

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t v);

struct TrajectoryFile {
  std::string scenario;
  std::string param_hash;
  Trajectory trajectory;
};

/// Line-oriented JSON: header, one record per knot, checksum footer.
std::string serialize_trajectory(const TrajectoryFile& f);
TrajectoryFile parse_trajectory(const std::string& text);
void save_trajectory(const TrajectoryFile& f, const std::filesystem::path& path);
TrajectoryFile load_trajectory(const std::filesystem::path& path);

struct RenderOptions {
  int stride = 5;          // snapshot every stride knots
  double pixels_per_m = 100.0;
};

std::string render_svg(const Trajectory& traj, const Scenario& scenario,
                       const RenderOptions& opts = {});
void render_svg(const Trajectory& traj, const Scenario& scenario,
                const std::filesystem::path& path, const RenderOptions& opts = {});

/// Whole-file helpers; throw std::runtime_error on I/O failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace towplan
