#include "towplan/scenario.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "towplan/errors.hpp"

namespace towplan {

using nlohmann::json;

namespace {

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(text.size(), byte == 0 ? 0 : byte - 1);
  std::size_t line = 1;
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

void require_object(const json& j, const std::string& field, std::set<std::string> allowed) {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ValidationError(field.empty() ? key : field + "." + key, "unknown key");
    }
  }
}

double number_at(const json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
  return v;
}

void read_number(const json& obj, const char* key, const std::string& prefix, double& out) {
  if (auto it = obj.find(key); it != obj.end()) out = number_at(*it, prefix + "." + key);
}

Vec2 read_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(field, "expected [x, y]");
  return {number_at(j[0], field + "[0]"), number_at(j[1], field + "[1]")};
}

Polygon read_polygon(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected a vertex list");
  Polygon poly;
  for (std::size_t i = 0; i < j.size(); ++i) {
    poly.vertices.push_back(read_point(j[i], field + "[" + std::to_string(i) + "]"));
  }
  validate_polygon(poly, field);
  return poly;
}

void read_params(const json& j, SystemParams& p) {
  const std::string f = "params";
  require_object(j, f,
                 {"phi_max", "L_l", "L_c_ub", "L_c_lb", "L_s", "mu", "m_l", "grav", "a_max",
                  "g_max", "v_max", "omega_max", "v_xb", "v_yb", "dt", "T_s", "D_a", "D_theta",
                  "D_d", "D_r"});
  read_number(j, "phi_max", f, p.phi_max);
  read_number(j, "L_l", f, p.L_l);
  read_number(j, "L_c_ub", f, p.L_c_ub);
  read_number(j, "L_c_lb", f, p.L_c_lb);
  read_number(j, "L_s", f, p.L_s);
  read_number(j, "mu", f, p.mu);
  read_number(j, "m_l", f, p.m_l);
  read_number(j, "grav", f, p.grav);
  read_number(j, "a_max", f, p.a_max);
  read_number(j, "g_max", f, p.g_max);
  read_number(j, "v_max", f, p.v_max);
  read_number(j, "omega_max", f, p.omega_max);
  read_number(j, "v_xb", f, p.v_xb);
  read_number(j, "v_yb", f, p.v_yb);
  read_number(j, "dt", f, p.dt);
  read_number(j, "T_s", f, p.T_s);
  read_number(j, "D_a", f, p.D_a);
  read_number(j, "D_theta", f, p.D_theta);
  read_number(j, "D_d", f, p.D_d);
  read_number(j, "D_r", f, p.D_r);
}

void read_search_weights(const json& j, CostWeights& w) {
  const std::string f = "search_weights";
  require_object(j, f, {"lambda_l", "lambda_r", "lambda_t", "lambda_a"});
  read_number(j, "lambda_l", f, w.lambda_l);
  read_number(j, "lambda_r", f, w.lambda_r);
  read_number(j, "lambda_t", f, w.lambda_t);
  read_number(j, "lambda_a", f, w.lambda_a);
}

void read_diag3(const json& obj, const char* key, const std::string& prefix,
                std::array<double, 3>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string field = prefix + "." + key;
  if (!it->is_array() || it->size() != 3) throw ValidationError(field, "expected 3 numbers");
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = number_at((*it)[i], field + "[" + std::to_string(i) + "]");
  }
}

void read_optimizer_weights(const json& j, WeightConfig& w) {
  const std::string f = "optimizer_weights";
  require_object(j, f, {"R_u", "R_q", "R_v", "Q_theta"});
  read_diag3(j, "R_u", f, w.R_u);
  read_diag3(j, "R_q", f, w.R_q);
  read_number(j, "R_v", f, w.R_v);
  read_number(j, "Q_theta", f, w.Q_theta);
}

BodyFootprint read_footprint(const json& j) {
  const std::string f = "footprint";
  require_object(j, f,
                 {"tractor_length", "tractor_width", "trailer_length", "trailer_width", "tractor",
                  "trailer"});
  double tl = 0.60, tw = 0.30, ll = 0.55, lw = 0.40;
  read_number(j, "tractor_length", f, tl);
  read_number(j, "tractor_width", f, tw);
  read_number(j, "trailer_length", f, ll);
  read_number(j, "trailer_width", f, lw);
  for (auto [v, key] : {std::pair{tl, "tractor_length"}, {tw, "tractor_width"},
                        {ll, "trailer_length"}, {lw, "trailer_width"}}) {
    if (!(v > 0.0)) throw ValidationError(f + "." + key, "must be positive");
  }
  BodyFootprint fp = BodyFootprint::rectangles(tl, tw, ll, lw);
  if (auto it = j.find("tractor"); it != j.end()) {
    fp.tractor = read_polygon(*it, f + ".tractor");
  }
  if (auto it = j.find("trailer"); it != j.end()) {
    fp.trailer = read_polygon(*it, f + ".trailer");
  }
  return fp;
}

CableMode read_mode(const json& j, const std::string& field) {
  if (j.is_string()) {
    if (j == "taut") return CableMode::Taut;
    if (j == "slack") return CableMode::Slack;
  } else if (j.is_number_integer()) {
    if (j == 1) return CableMode::Taut;
    if (j == 0) return CableMode::Slack;
  }
  throw ValidationError(field, "expected \"taut\", \"slack\", 1 or 0");
}

HybridState read_start(const json& j, const SystemParams& p) {
  require_object(j, "start", {"tractor", "trailer", "mode"});
  HybridState x;
  auto tl = j.find("trailer");
  if (tl == j.end()) throw ValidationError("start.trailer", "missing");
  require_object(*tl, "start.trailer", {"x", "y", "theta", "v", "delta", "force"});
  read_number(*tl, "x", "start.trailer", x.trailer.x);
  read_number(*tl, "y", "start.trailer", x.trailer.y);
  read_number(*tl, "theta", "start.trailer", x.trailer.theta);
  read_number(*tl, "v", "start.trailer", x.trailer.v);
  read_number(*tl, "delta", "start.trailer", x.trailer.delta);
  read_number(*tl, "force", "start.trailer", x.trailer.force);
  x.trailer.theta = wrap_angle(x.trailer.theta);

  if (auto tr = j.find("tractor"); tr != j.end()) {
    require_object(*tr, "start.tractor", {"x", "y", "theta", "vx", "vy", "omega"});
    x.tractor.x = x.trailer.x + p.L_c_ub * std::cos(x.trailer.theta + x.trailer.delta);
    x.tractor.y = x.trailer.y + p.L_c_ub * std::sin(x.trailer.theta + x.trailer.delta);
    x.tractor.theta = x.trailer.theta + x.trailer.delta;
    read_number(*tr, "x", "start.tractor", x.tractor.x);
    read_number(*tr, "y", "start.tractor", x.tractor.y);
    read_number(*tr, "theta", "start.tractor", x.tractor.theta);
    read_number(*tr, "vx", "start.tractor", x.tractor.vx);
    read_number(*tr, "vy", "start.tractor", x.tractor.vy);
    read_number(*tr, "omega", "start.tractor", x.tractor.omega);
  } else {
    const double h = x.trailer.theta + x.trailer.delta;
    x.tractor.x = x.trailer.x + p.L_c_ub * std::cos(h);
    x.tractor.y = x.trailer.y + p.L_c_ub * std::sin(h);
    x.tractor.theta = h;
  }
  x.tractor.theta = wrap_angle(x.tractor.theta);
  x.mode = CableMode::Taut;
  if (auto m = j.find("mode"); m != j.end()) x.mode = read_mode(*m, "start.mode");
  return x;
}

HybridState default_start(const Rect& b, const SystemParams& p) {
  HybridState x;
  x.trailer.x = 0.5 * (b.xmin + b.xmax) - 0.5 * p.L_c_ub;
  x.trailer.y = 0.5 * (b.ymin + b.ymax);
  x.tractor.x = x.trailer.x + p.L_c_ub;
  x.tractor.y = x.trailer.y;
  x.mode = CableMode::Taut;
  return x;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of_byte(text, e.byte), e.what());
  }
  require_object(root, "",
                 {"name", "bounds", "obstacles", "start", "goal", "params", "search_weights",
                  "optimizer_weights", "footprint"});
  Scenario s;
  if (auto it = root.find("name"); it != root.end()) {
    if (!it->is_string()) throw ValidationError("name", "expected a string");
    s.name = it->get<std::string>();
  }
  s.world.bounds = {0.0, 0.0, 5.1, 8.1};
  if (auto it = root.find("bounds"); it != root.end()) {
    require_object(*it, "bounds", {"xmin", "ymin", "xmax", "ymax"});
    read_number(*it, "xmin", "bounds", s.world.bounds.xmin);
    read_number(*it, "ymin", "bounds", s.world.bounds.ymin);
    read_number(*it, "xmax", "bounds", s.world.bounds.xmax);
    read_number(*it, "ymax", "bounds", s.world.bounds.ymax);
  }
  if (!(s.world.bounds.xmax > s.world.bounds.xmin && s.world.bounds.ymax > s.world.bounds.ymin)) {
    throw ValidationError("bounds", "max must exceed min on both axes");
  }
  if (auto it = root.find("params"); it != root.end()) read_params(*it, s.params);
  s.params.validate();
  if (auto it = root.find("search_weights"); it != root.end()) {
    read_search_weights(*it, s.search_weights);
  }
  s.search_weights.validate();
  if (auto it = root.find("optimizer_weights"); it != root.end()) {
    read_optimizer_weights(*it, s.optimizer_weights);
  }
  s.optimizer_weights.validate();
  if (auto it = root.find("footprint"); it != root.end()) s.footprint = read_footprint(*it);

  if (auto it = root.find("obstacles"); it != root.end()) {
    if (!it->is_array()) throw ValidationError("obstacles", "expected a list of polygons");
    for (std::size_t i = 0; i < it->size(); ++i) {
      s.world.obstacles.push_back(read_polygon((*it)[i], "obstacles[" + std::to_string(i) + "]"));
    }
  }

  s.start = default_start(s.world.bounds, s.params);
  if (auto it = root.find("start"); it != root.end()) s.start = read_start(*it, s.params);
  s.goal = {s.start.trailer.x, s.start.trailer.y, s.start.trailer.theta};
  if (auto it = root.find("goal"); it != root.end()) {
    require_object(*it, "goal", {"x", "y", "theta"});
    read_number(*it, "x", "goal", s.goal.x);
    read_number(*it, "y", "goal", s.goal.y);
    read_number(*it, "theta", "goal", s.goal.theta);
    s.goal.theta = wrap_angle(s.goal.theta);
  }
  if (!s.world.bounds.contains({s.goal.x, s.goal.y})) {
    throw ValidationError("goal", "outside the world bounds");
  }
  if (!state_feasible(s.start, s.world, s.footprint, s.params)) {
    throw ValidationError("start", "infeasible (collision, bounds or cable length)");
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string parameter_hash(const Scenario& s) {
  std::string canon;
  auto put = [&](const char* key, double v) {
    canon += key;
    canon += '=';
    canon += num17(v);
    canon += '\n';
  };
  const SystemParams& p = s.params;
  put("phi_max", p.phi_max);
  put("L_l", p.L_l);
  put("L_c_ub", p.L_c_ub);
  put("L_c_lb", p.L_c_lb);
  put("L_s", p.L_s);
  put("mu", p.mu);
  put("m_l", p.m_l);
  put("grav", p.grav);
  put("a_max", p.a_max);
  put("g_max", p.g_max);
  put("v_max", p.v_max);
  put("omega_max", p.omega_max);
  put("v_xb", p.v_xb);
  put("v_yb", p.v_yb);
  put("dt", p.dt);
  put("T_s", p.T_s);
  put("D_a", p.D_a);
  put("D_theta", p.D_theta);
  put("D_d", p.D_d);
  put("D_r", p.D_r);
  put("lambda_l", s.search_weights.lambda_l);
  put("lambda_r", s.search_weights.lambda_r);
  put("lambda_t", s.search_weights.lambda_t);
  put("lambda_a", s.search_weights.lambda_a);
  const WeightConfig& w = s.optimizer_weights;
  for (int i = 0; i < 3; ++i) put("R_u", w.R_u[i]);
  for (int i = 0; i < 3; ++i) put("R_q", w.R_q[i]);
  put("R_v", w.R_v);
  put("Q_theta", w.Q_theta);
  for (const Vec2& v : s.footprint.tractor.vertices) {
    put("tractor.x", v.x);
    put("tractor.y", v.y);
  }
  for (const Vec2& v : s.footprint.trailer.vertices) {
    put("trailer.x", v.x);
    put("trailer.y", v.y);
  }
  return "fnv1a64:" + hex64(fnv1a64(canon));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace towplan
