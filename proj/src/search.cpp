#include "towplan/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "towplan/dubins.hpp"
#include "towplan/errors.hpp"

namespace towplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_2pi(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return r >= 2.0 * kPi ? 0.0 : r;
}

struct Aabb {
  double xmin, ymin, xmax, ymax;
  bool overlaps(const Aabb& o) const {
    return xmin <= o.xmax && o.xmin <= xmax && ymin <= o.ymax && o.ymin <= ymax;
  }
};

Aabb aabb_of(const Polygon& poly) {
  Aabb b{kInf, kInf, -kInf, -kInf};
  for (const Vec2& v : poly.vertices) {
    b.xmin = std::min(b.xmin, v.x);
    b.ymin = std::min(b.ymin, v.y);
    b.xmax = std::max(b.xmax, v.x);
    b.ymax = std::max(b.ymax, v.y);
  }
  return b;
}

bool hits_obstacles(const Polygon& body, const World& world) {
  const Aabb box = aabb_of(body);
  for (const Polygon& ob : world.obstacles) {
    if (!box.overlaps(aabb_of(ob))) continue;
    if (polygons_overlap(body, ob)) return true;
  }
  return false;
}

bool inside_bounds(const Polygon& body, const Rect& bounds) {
  return std::all_of(body.vertices.begin(), body.vertices.end(),
                     [&](const Vec2& v) { return bounds.contains(v); });
}

double tractor_speed(const HybridState& x) { return std::hypot(x.tractor.vx, x.tractor.vy); }

Expected<HybridState, TautInfeasible> policy_step(const HybridState& x, const ControlInput& u,
                                                  const SystemParams& p, ModePolicy policy) {
  if (policy == ModePolicy::Hybrid) return step_hybrid(x, u, p.dt, p);
  if (std::abs(cable_length(x) - p.L_c_ub) > kEpsReach) {
    return unexpected(TautInfeasible{TautFailure::Degenerate});
  }
  return step_taut(x, u, p.dt, p);
}

Vec2 heading_vec(double a) { return {std::cos(a), std::sin(a)}; }

}  // namespace

void CostWeights::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw ValidationError(field, "must be finite and non-negative");
  };
  require(std::isfinite(lambda_l) && lambda_l >= 0.0, "weights.lambda_l");
  require(std::isfinite(lambda_r) && lambda_r >= 0.0, "weights.lambda_r");
  require(std::isfinite(lambda_t) && lambda_t >= 0.0, "weights.lambda_t");
  if (!(lambda_a >= 0.0 && lambda_a <= 1.0)) {
    throw ValidationError("weights.lambda_a", "must lie in [0, 1]");
  }
}

std::size_t GridKeyHash::operator()(const GridKey& k) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int64_t c : k.cell) {
    h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

GridKey grid_key(const HybridState& x, const SystemParams& p) {
  const auto cell = [](double v, double res) {
    return static_cast<std::int64_t>(std::floor(v / res));
  };
  const auto bins = static_cast<std::int64_t>(std::llround(2.0 * kPi / p.D_r));
  std::int64_t heading = cell(wrap_2pi(x.trailer.theta), p.D_r);
  if (bins > 0) heading %= bins;
  return GridKey{{cell(x.tractor.x, p.D_d), cell(x.tractor.y, p.D_d), cell(x.trailer.x, p.D_d),
                  cell(x.trailer.y, p.D_d), heading, static_cast<std::int64_t>(x.mode)}};
}

std::vector<ControlInput> primitive_set(const SystemParams& p) {
  const auto magnitudes = static_cast<int>(std::floor(p.a_max / p.D_a + 1e-9));
  const auto directions = static_cast<int>(std::llround(2.0 * kPi / p.D_theta));
  std::vector<ControlInput> out;
  out.reserve(1 + static_cast<std::size_t>(magnitudes * directions));
  out.push_back({0.0, 0.0, 0.0});
  for (int i = 1; i <= magnitudes; ++i) {
    const double a = p.D_a * i;
    for (int j = 1; j <= directions; ++j) {
      const double t = p.D_theta * j;
      out.push_back({a * std::cos(t), a * std::sin(t), 0.0});
    }
  }
  return out;
}

SearchNode root_node(const HybridState& start) {
  SearchNode n;
  n.origin = start;
  return n;
}

Expected<SearchNode, TautInfeasible> expand(const SearchNode& node, const ControlInput& prim,
                                            const SystemParams& p, ModePolicy policy) {
  SearchNode child;
  child.origin = node.terminal();
  child.primitive = prim;
  const int steps = p.steps_per_expansion();
  child.states.reserve(static_cast<std::size_t>(steps));
  HybridState x = child.origin;
  for (int k = 0; k < steps; ++k) {
    auto next = policy_step(x, prim, p, policy);
    if (!next) return unexpected(next.error());
    x = *next;
    child.states.push_back(x);
  }
  return child;
}

Expected<SearchNode, TautInfeasible> expand_to_exit(const SearchNode& node, const ControlInput& prim,
                                                    const SystemParams& p, ModePolicy policy,
                                                    int max_periods) {
  const GridKey from = grid_key(node.terminal(), p);
  SearchNode child;
  child.origin = node.terminal();
  child.primitive = prim;
  const int steps = p.steps_per_expansion();
  HybridState x = child.origin;
  for (int period = 0; period < std::max(max_periods, 1); ++period) {
    for (int k = 0; k < steps; ++k) {
      auto next = policy_step(x, prim, p, policy);
      if (!next) return unexpected(next.error());
      x = *next;
      child.states.push_back(x);
    }
    if (grid_key(x, p) != from) break;
  }
  return child;
}

double path_length(const std::vector<Pose2>& poses, double lambda_a) {
  double len = 0.0;
  for (std::size_t k = 1; k < poses.size(); ++k) {
    const double dth = std::abs(wrap_angle(poses[k].theta - poses[k - 1].theta));
    const double dp = std::hypot(poses[k].x - poses[k - 1].x, poses[k].y - poses[k - 1].y);
    len += (1.0 - lambda_a) * dth + lambda_a * dp;
  }
  return len;
}

namespace {

double sequence_cost(const std::vector<HybridState>& seq, const CostWeights& w, double dt,
                     double* trailer = nullptr, double* tractor = nullptr,
                     double* duration = nullptr) {
  std::vector<Pose2> tl, tr;
  tl.reserve(seq.size());
  tr.reserve(seq.size());
  for (const HybridState& s : seq) {
    tl.push_back({s.trailer.x, s.trailer.y, s.trailer.theta});
    tr.push_back({s.tractor.x, s.tractor.y, s.tractor.theta});
  }
  const double a = w.lambda_l * path_length(tl, w.lambda_a);
  const double b = w.lambda_r * path_length(tr, w.lambda_a);
  const double c = w.lambda_t * dt * static_cast<double>(seq.empty() ? 0 : seq.size() - 1);
  if (trailer) *trailer = a;
  if (tractor) *tractor = b;
  if (duration) *duration = c;
  return a + b + c;
}

}  // namespace

double edge_cost(const SearchNode& node, const CostWeights& w, double dt) {
  std::vector<HybridState> seq;
  seq.reserve(node.states.size() + 1);
  seq.push_back(node.origin);
  seq.insert(seq.end(), node.states.begin(), node.states.end());
  return sequence_cost(seq, w, dt);
}

void trajectory_cost(const Trajectory& t, const CostWeights& w, SearchStats& stats) {
  stats.solution_cost = sequence_cost(t.states, w, t.dt, &stats.trailer_path_cost,
                                      &stats.tractor_path_cost, &stats.duration_cost);
}

std::optional<double> heuristic(const HybridState& x, const Pose2& goal, const DistanceField& df,
                                const SystemParams& p, const CostWeights& w) {
  const auto h_a = df.lookup({x.trailer.x, x.trailer.y});
  if (!h_a) return std::nullopt;
  const double h_d = dubins_length({x.trailer.x, x.trailer.y, x.trailer.theta}, goal, p.r_min());
  return w.lambda_l * w.lambda_a * std::max(*h_a, h_d);
}

bool state_feasible(const HybridState& x, const World& world, const BodyFootprint& fp,
                    const SystemParams& p) {
  const double tol = kEpsTaut;
  const double lc = cable_length(x);
  if (lc < p.L_c_lb - tol || lc > p.L_c_ub + tol) return false;
  if (tractor_speed(x) > p.v_max + tol) return false;
  if (std::abs(x.tractor.omega) > p.omega_max + tol) return false;
  if (x.trailer.v < -tol || x.trailer.v > p.v_max + tol) return false;
  if (std::abs(x.trailer.delta) > p.phi_max + tol) return false;

  const auto polys = system_polygons(x, fp, p);
  const Polygon& tractor = polys[static_cast<int>(BodyPart::Tractor)];
  const Polygon& trailer = polys[static_cast<int>(BodyPart::Trailer)];
  const Polygon& cable = polys[static_cast<int>(BodyPart::Cable)];
  if (!inside_bounds(tractor, world.bounds) || !inside_bounds(trailer, world.bounds)) return false;
  if (polygons_overlap(tractor, trailer)) return false;
  for (const Polygon* body : {&tractor, &trailer, &cable}) {
    if (hits_obstacles(*body, world)) return false;
  }
  return true;
}

bool transition_feasible(const HybridState& pre, const HybridState& post, const World& world,
                         const BodyFootprint& fp, const SystemParams& p) {
  if (!state_feasible(post, world, fp, p)) return false;
  if (post.mode != CableMode::Taut) return true;
  const double acc = trailer_acceleration(pre, post, p);
  if (pre.mode == CableMode::Slack) return acc >= -kEpsTaut;
  return acc >= -p.friction_decel() - kEpsTaut && acc <= p.a_max + kEpsTaut;
}

bool feasible(const SearchNode& node, const World& world, const BodyFootprint& fp,
              const SystemParams& p) {
  const HybridState* pre = &node.origin;
  for (const HybridState& s : node.states) {
    if (!transition_feasible(*pre, s, world, fp, p)) return false;
    pre = &s;
  }
  return true;
}

bool within_goal(const HybridState& x, const Pose2& goal, const GoalTolerance& tol) {
  return std::hypot(x.trailer.x - goal.x, x.trailer.y - goal.y) <= tol.position &&
         std::abs(wrap_angle(x.trailer.theta - goal.theta)) <= tol.heading &&
         std::abs(x.trailer.v) <= tol.speed;
}

// Goal shot. The trailer tracks a Dubins curve to a point short of the goal
// followed by a straight run-in. The tractor velocity command is the profile
// speed along the path tangent plus a lateral correction towards the point one
// cable length ahead of the trailer. Along-cable braking stays below the
// friction deceleration: with the explicit update a harder stop re-enters taut
// mode with a trailer deceleration the model rejects. Gains were tuned on the
// fixtures.
std::optional<Trajectory> reach_goal(const HybridState& x, const Pose2& goal, const World& world,
                                     const BodyFootprint& fp, const SystemParams& p,
                                     const SearchOptions& opts) {
  Trajectory t;
  t.dt = p.dt;
  t.states.push_back(x);
  if (within_goal(x, goal, opts.tolerance) && tractor_speed(x) <= opts.tolerance.speed) return t;

  const Pose2 start{x.trailer.x, x.trailer.y, x.trailer.theta};
  // Dubins curve to a point short of the goal, then a straight run-in along
  // the goal heading so the trailer body can align before stopping.
  const double run_in = opts.shot_run_in;
  const Pose2 pre_goal{goal.x - run_in * std::cos(goal.theta),
                       goal.y - run_in * std::sin(goal.theta), goal.theta};
  const DubinsPath curve =
      dubins_shortest(start, pre_goal, opts.shot_radius_factor * p.r_min());
  const double curve_length = curve.length();
  const double length = curve_length + run_in;
  const auto sample = [&](double s) {
    if (s <= curve_length) return curve.sample(s);
    const double d = s - curve_length;
    return Pose2{pre_goal.x + d * std::cos(goal.theta), pre_goal.y + d * std::sin(goal.theta),
                 goal.theta};
  };
  const double a_dec = 0.9 * p.friction_decel();
  const double a_lim = 0.95 * p.a_max;
  const double a_prof = 0.6 * a_dec;
  const double v_cruise = opts.shot_cruise_fraction * p.v_max;
  const double k_pos = 3.0, k_lat = 2.0;
  const double stop_dist = 0.01;
  const auto max_steps = static_cast<std::size_t>(
      std::ceil((length / (0.5 * v_cruise) + 2.0 * v_cruise / std::max(a_dec, 1e-3) + 5.0) /
                p.dt));

  double s_proj = 0.0;
  bool stopping = false;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const HybridState& cur = t.states.back();
    const Vec2 pl{cur.trailer.x, cur.trailer.y};

    // Local projection of the front point onto the path.
    double best_s = s_proj, best_d = kInf;
    for (double s = std::max(0.0, s_proj - 0.05); s <= std::min(length, s_proj + 0.3) + 1e-12;
         s += 0.01) {
      const Pose2 q = sample(s);
      const double d = std::hypot(pl.x - q.x, pl.y - q.y);
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    s_proj = best_s;
    const Pose2 ref = sample(s_proj);
    const Vec2 tan = heading_vec(ref.theta);
    const double e_lat = tan.x * (pl.y - ref.y) - tan.y * (pl.x - ref.x);
    if (std::abs(e_lat) > 0.3) return std::nullopt;

    double rem = length - s_proj;
    if (s_proj >= length - 1e-9) {
      rem = (goal.x - pl.x) * std::cos(goal.theta) + (goal.y - pl.y) * std::sin(goal.theta);
    }
    // Speed profile planned at a fraction of the braking capability so that
    // tracking has margin in turns.
    if (rem <= stop_dist) stopping = true;
    const Vec2 vr{cur.tractor.vx, cur.tractor.vy};
    const double speed =
        stopping ? 0.0
                 : std::min(v_cruise, std::sqrt(2.0 * a_prof * std::max(rem - stop_dist, 0.0)));
    // Velocity-level law: profile speed along the path tangent plus a lateral
    // correction towards the point one cable length ahead along the steering
    // direction, reached in one step.
    Vec2 v_des{speed * tan.x, speed * tan.y};
    if (speed > 0.0) {
      const double phi = ref.theta - std::atan(k_lat * e_lat);
      const Vec2 q_des{pl.x + p.L_c_ub * std::cos(phi), pl.y + p.L_c_ub * std::sin(phi)};
      // Only the normal component: the tangential speed is the profile's.
      const double e_n = -tan.y * (q_des.x - cur.tractor.x) + tan.x * (q_des.y - cur.tractor.y);
      v_des.x += -k_pos * e_n * tan.y;
      v_des.y += k_pos * e_n * tan.x;
    }
    const double lc = cable_length(cur);
    const Vec2 ec = lc > 1e-9 ? Vec2{(cur.tractor.x - pl.x) / lc, (cur.tractor.y - pl.y) / lc}
                              : tan;
    // The taut trailer speed is the tractor's along-cable speed; keep it on
    // the profile.
    if (const double over = v_des.x * ec.x + v_des.y * ec.y - speed; over > 0.0) {
      v_des.x -= over * ec.x;
      v_des.y -= over * ec.y;
    }
    // Split the demand into along-cable and lateral parts. The along-cable
    // part sets the trailer speed and takes priority under the input limit;
    // its braking is capped so the trailer is never pushed.
    const Vec2 nc{-ec.y, ec.x};
    const Vec2 demand{(v_des.x - vr.x) / p.dt, (v_des.y - vr.y) / p.dt};
    const double ua = std::clamp(demand.x * ec.x + demand.y * ec.y, -a_dec, a_lim);
    const double lat_cap = std::sqrt(std::max(0.0, a_lim * a_lim - ua * ua));
    const double un = std::clamp(demand.x * nc.x + demand.y * nc.y, -lat_cap, lat_cap);
    Vec2 u{ua * ec.x + un * nc.x, ua * ec.y + un * nc.y};
    const Vec2 vn{vr.x + u.x * p.dt, vr.y + u.y * p.dt};
    const double sn = std::hypot(vn.x, vn.y);
    const double v_cap = 0.98 * p.v_max;
    if (sn > v_cap) {
      u = {(vn.x * v_cap / sn - vr.x) / p.dt, (vn.y * v_cap / sn - vr.y) / p.dt};
      const double m = std::hypot(u.x, u.y);
      if (m > p.a_max) u = {u.x * p.a_max / m, u.y * p.a_max / m};
    }
    // While slack, keep the tractor's along-cable speed at or above the
    // trailer's so that re-tensioning never decelerates the trailer.
    if (cur.mode == CableMode::Slack && lc > 1e-9) {
      const double along = (vr.x + u.x * p.dt) * ec.x + (vr.y + u.y * p.dt) * ec.y;
      const double target = std::max(cur.trailer.v, 0.0) + kRetensionMargin;
      if (along < target) {
        u.x += (target - along) / p.dt * ec.x;
        u.y += (target - along) / p.dt * ec.y;
      }
    }
    const double g = std::clamp(-cur.tractor.omega / p.dt, -p.g_max, p.g_max);
    const ControlInput in{u.x, u.y, g};

    auto next = policy_step(cur, in, p, opts.policy);
    if (!next) return std::nullopt;
    if (!transition_feasible(cur, *next, world, fp, p)) return std::nullopt;
    t.inputs.push_back(in);
    t.states.push_back(*next);
    if (stopping && tractor_speed(*next) == 0.0 && next->trailer.v == 0.0 &&
        next->tractor.omega == 0.0) {
      break;
    }
  }
  const HybridState& last = t.states.back();
  if (within_goal(last, goal, opts.tolerance) && tractor_speed(last) <= opts.tolerance.speed) {
    return t;
  }
  return std::nullopt;
}

std::string to_string(SearchStatus s) {
  switch (s) {
    case SearchStatus::Solved:
      return "solved";
    case SearchStatus::NoSolution:
      return "no-solution";
    case SearchStatus::Timeout:
      return "timeout";
  }
  return "unknown";
}

namespace {

struct NodeRecord {
  HybridState terminal;
  std::int64_t parent;
  std::int32_t primitive;
  double g;
};

struct OpenEntry {
  double f, h;
  std::uint64_t seq;
  std::size_t node;
  bool operator>(const OpenEntry& o) const {
    return std::tie(f, h, seq) > std::tie(o.f, o.h, o.seq);
  }
};

}  // namespace

SearchResult plan(const HybridState& start, const Pose2& goal, const World& world,
                  const BodyFootprint& fp, const SystemParams& p, const CostWeights& w,
                  const SearchOptions& opts) {
  SearchResult result;
  result.trajectory.dt = p.dt;
  if (!state_feasible(start, world, fp, p)) return result;

  const Aabb trailer_box = aabb_of(fp.trailer);
  const double inflation = opts.heuristic_inflation >= 0.0
                               ? opts.heuristic_inflation
                               : 0.5 * (trailer_box.ymax - trailer_box.ymin);
  std::optional<DistanceField> df;
  try {
    df = build_distance_field(world.obstacles, world.bounds, {goal.x, goal.y}, p.D_d, inflation);
  } catch (const GoalBlocked&) {
    return result;
  }

  const auto prims = primitive_set(p);
  std::vector<NodeRecord> nodes;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  std::unordered_map<GridKey, double, GridKeyHash> best_g;
  std::unordered_set<GridKey, GridKeyHash> closed;
  std::uint64_t seq = 0;

  const auto h0 = heuristic(start, goal, *df, p, w);
  if (!h0 || !std::isfinite(*h0)) return result;
  result.stats.start_heuristic = *h0;
  nodes.push_back({start, -1, -1, 0.0});
  best_g[grid_key(start, p)] = 0.0;
  open.push({*h0, *h0, seq++, 0});

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const NodeRecord rec = nodes[top.node];
    const GridKey key = grid_key(rec.terminal, p);
    if (closed.count(key)) continue;
    if (auto it = best_g.find(key); it != best_g.end() && rec.g > it->second) continue;
    if (result.stats.expansions >= opts.node_budget) {
      result.status = SearchStatus::Timeout;
      return result;
    }
    closed.insert(key);
    ++result.stats.expansions;
    if (opts.on_close) opts.on_close(rec.terminal);

    ++result.stats.goal_shots;
    if (auto shot = reach_goal(rec.terminal, goal, world, fp, p, opts)) {
      std::vector<std::size_t> chain;
      for (std::int64_t i = static_cast<std::int64_t>(top.node); i >= 0; i = nodes[i].parent) {
        chain.push_back(static_cast<std::size_t>(i));
      }
      std::reverse(chain.begin(), chain.end());
      Trajectory& out = result.trajectory;
      out.states = {start};
      SearchNode cursor = root_node(start);
      for (std::size_t c = 1; c < chain.size(); ++c) {
        const ControlInput& prim = prims[static_cast<std::size_t>(nodes[chain[c]].primitive)];
        auto child = expand_to_exit(cursor, prim, p, opts.policy, opts.max_periods);
        cursor = std::move(*child);
        for (const HybridState& s : cursor.states) {
          out.states.push_back(s);
          out.inputs.push_back(prim);
        }
      }
      out.states.insert(out.states.end(), shot->states.begin() + 1, shot->states.end());
      out.inputs.insert(out.inputs.end(), shot->inputs.begin(), shot->inputs.end());
      result.stats.shot_steps = shot->inputs.size();
      result.status = SearchStatus::Solved;
      trajectory_cost(out, w, result.stats);
      return result;
    }

    SearchNode parent = root_node(rec.terminal);
    for (std::size_t i = 0; i < prims.size(); ++i) {
      auto child = expand_to_exit(parent, prims[i], p, opts.policy, opts.max_periods);
      if (!child) continue;
      const GridKey ck = grid_key(child->terminal(), p);
      if (ck == key || closed.count(ck)) continue;
      if (!feasible(*child, world, fp, p)) continue;
      const double g = rec.g + edge_cost(*child, w, p.dt);
      const auto h = heuristic(child->terminal(), goal, *df, p, w);
      if (!h || !std::isfinite(*h)) continue;
      auto it = best_g.find(ck);
      if (it != best_g.end() && it->second <= g) continue;
      best_g[ck] = g;
      nodes.push_back({child->terminal(), static_cast<std::int64_t>(top.node),
                       static_cast<std::int32_t>(i), g});
      open.push({g + *h, *h, seq++, nodes.size() - 1});
      ++result.stats.generated;
    }
  }
  result.status = SearchStatus::NoSolution;
  return result;
}

}  // namespace towplan
