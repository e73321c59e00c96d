#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "towplan/errors.hpp"
#include "towplan/scenario.hpp"

namespace towplan {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "towplan-trajectory";
constexpr int kVersion = 1;

void append_num(std::string& out, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("trajectory contains a non-finite value");
  // A bare "-0" would read back as the integer 0 and lose the sign bit.
  if (v == 0.0 && std::signbit(v)) {
    out += "-0.0";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_array(std::string& out, std::initializer_list<double> values) {
  out += '[';
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    append_num(out, v);
    first = false;
  }
  out += ']';
}

std::vector<double> read_array(const json& j, std::size_t n, std::size_t line, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != n) {
    throw ParseError(line, std::string("expected \"") + key + "\" with " + std::to_string(n) +
                               " numbers");
  }
  std::vector<double> out;
  for (const json& v : *it) {
    if (!v.is_number()) throw ParseError(line, std::string("non-numeric entry in ") + key);
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string serialize_trajectory(const TrajectoryFile& f) {
  const Trajectory& t = f.trajectory;
  if (t.states.empty()) throw std::invalid_argument("trajectory has no states");
  if (t.inputs.size() + 1 != t.states.size()) {
    throw std::invalid_argument("trajectory needs exactly one input per step");
  }
  std::string out;
  out += "{\"format\":";
  out += json(kFormat).dump();
  out += ",\"version\":" + std::to_string(kVersion);
  out += ",\"scenario\":" + json(f.scenario).dump();
  out += ",\"dt\":";
  append_num(out, t.dt);
  out += ",\"N\":" + std::to_string(t.inputs.size());
  out += ",\"param_hash\":" + json(f.param_hash).dump() + "}\n";
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    const HybridState& s = t.states[k];
    out += "{\"k\":" + std::to_string(k) + ",\"t\":";
    append_num(out, static_cast<double>(k) * t.dt);
    out += ",\"eta\":" + std::to_string(static_cast<int>(s.mode));
    out += ",\"tractor\":";
    append_array(out, {s.tractor.x, s.tractor.y, s.tractor.theta, s.tractor.vx, s.tractor.vy,
                       s.tractor.omega});
    out += ",\"trailer\":";
    append_array(out, {s.trailer.x, s.trailer.y, s.trailer.theta, s.trailer.v, s.trailer.delta,
                       s.trailer.force});
    out += ",\"input\":";
    if (k < t.inputs.size()) {
      const ControlInput& u = t.inputs[k];
      append_array(out, {u.ax, u.ay, u.g});
    } else {
      out += "null";
    }
    out += "}\n";
  }
  out += "{\"checksum\":\"fnv1a64:" + hex64(fnv1a64(out)) + "\"}\n";
  return out;
}

TrajectoryFile parse_trajectory(const std::string& text) {
  // Locate the footer: the last non-empty line.
  std::size_t end = text.size();
  while (end > 0 && (text[end - 1] == '\n' || text[end - 1] == '\r')) --end;
  const std::size_t footer_start = text.rfind('\n', end == 0 ? 0 : end - 1);
  const std::size_t body_len = footer_start == std::string::npos ? 0 : footer_start + 1;
  const std::string footer = text.substr(body_len, end - body_len);
  std::string expected;
  try {
    const json j = json::parse(footer);
    if (j.is_object() && j.contains("checksum") && j["checksum"].is_string()) {
      expected = j["checksum"].get<std::string>();
    }
  } catch (const json::parse_error&) {
  }
  if (expected.empty()) throw ChecksumMismatch("trajectory file has no checksum footer");
  const std::string body = text.substr(0, body_len);
  const std::string actual = "fnv1a64:" + hex64(fnv1a64(body));
  if (actual != expected) {
    throw ChecksumMismatch("checksum mismatch: file says " + expected + ", content hashes to " +
                           actual);
  }

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t nl = body.find('\n', pos);
    if (nl == std::string::npos) nl = body.size();
    lines.push_back(body.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty()) throw ParseError(1, "missing header");

  auto parse_line = [&](std::size_t i) {
    try {
      return json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw ParseError(i + 1, e.what());
    }
  };

  TrajectoryFile f;
  const json header = parse_line(0);
  if (!header.is_object() || header.value("format", "") != kFormat) {
    throw ParseError(1, "not a trajectory file header");
  }
  if (header.value("version", 0) != kVersion) throw ValidationError("header.version", "unsupported");
  if (!header.contains("dt") || !header["dt"].is_number()) throw ParseError(1, "missing dt");
  if (!header.contains("N") || !header["N"].is_number_unsigned()) throw ParseError(1, "missing N");
  f.scenario = header.value("scenario", "");
  f.param_hash = header.value("param_hash", "");
  Trajectory& t = f.trajectory;
  t.dt = header["dt"].get<double>();
  if (!(t.dt > 0.0)) throw ValidationError("header.dt", "must be positive");
  const auto n = header["N"].get<std::size_t>();
  if (lines.size() - 1 != n + 1) {
    throw ValidationError("header.N", "expected " + std::to_string(n + 1) + " records, found " +
                                          std::to_string(lines.size() - 1));
  }

  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t line = k + 2;
    const json r = parse_line(k + 1);
    if (!r.is_object()) throw ParseError(line, "record must be an object");
    const std::string field = "records[" + std::to_string(k) + "]";
    if (!r.contains("k") || !r["k"].is_number_unsigned() || r["k"].get<std::size_t>() != k) {
      throw ValidationError(field + ".k", "expected " + std::to_string(k));
    }
    if (!r.contains("t") || !r["t"].is_number()) throw ParseError(line, "missing t");
    const double time = r["t"].get<double>();
    const double want = static_cast<double>(k) * t.dt;
    if (std::abs(time - want) > 1e-9 * std::max(1.0, std::abs(want))) {
      throw ValidationError(field + ".t", "spacing does not match header dt");
    }
    const auto tr = read_array(r, 6, line, "tractor");
    const auto tl = read_array(r, 6, line, "trailer");
    HybridState s;
    s.tractor = {tr[0], tr[1], tr[2], tr[3], tr[4], tr[5]};
    s.trailer = {tl[0], tl[1], tl[2], tl[3], tl[4], tl[5]};
    if (!r.contains("eta") || !r["eta"].is_number_integer() ||
        (r["eta"].get<int>() != 0 && r["eta"].get<int>() != 1)) {
      throw ValidationError(field + ".eta", "must be 0 or 1");
    }
    s.mode = r["eta"].get<int>() == 1 ? CableMode::Taut : CableMode::Slack;
    t.states.push_back(s);
    if (k < n) {
      const auto u = read_array(r, 3, line, "input");
      t.inputs.push_back({u[0], u[1], u[2]});
    } else if (!r.contains("input") || !r["input"].is_null()) {
      throw ValidationError(field + ".input", "final record must have a null input");
    }
  }
  return f;
}

void save_trajectory(const TrajectoryFile& f, const std::filesystem::path& path) {
  write_file(path, serialize_trajectory(f));
}

TrajectoryFile load_trajectory(const std::filesystem::path& path) {
  return parse_trajectory(read_file(path));
}

}  // namespace towplan
