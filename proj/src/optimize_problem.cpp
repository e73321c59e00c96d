#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <type_traits>

#include "towplan/errors.hpp"
#include "towplan/optimize.hpp"

namespace towplan {

namespace {

// Knot layout inside a state block.
enum StateSlot : int {
  kXr = 0, kYr, kThr, kVxr, kVyr, kWr, kXl, kYl, kThl, kVl, kDelta, kForce
};

template <class T>
BasicHybridState<T> unpack(const T* v) {
  BasicHybridState<T> s;
  s.tractor = {v[kXr], v[kYr], v[kThr], v[kVxr], v[kVyr], v[kWr]};
  s.trailer = {v[kXl], v[kYl], v[kThl], v[kVl], v[kDelta], v[kForce]};
  return s;
}

void pack(const HybridState& s, double* v) {
  const double vals[12] = {s.tractor.x,  s.tractor.y,     s.tractor.theta, s.tractor.vx,
                           s.tractor.vy, s.tractor.omega, s.trailer.x,     s.trailer.y,
                           s.trailer.theta, s.trailer.v,  s.trailer.delta, s.trailer.force};
  std::copy(vals, vals + 12, v);
}

template <int NV, class F>
class FnBlock final : public Block {
 public:
  FnBlock(int rows, F f) : rows_(rows), f_(std::move(f)) {}
  int rows() const override { return rows_; }
  void eval(const double* local, double* out) const override { f_(local, out); }
  void jacobian(const double* local, double* out, double* jac) const override {
    std::array<Dual<NV>, NV> v;
    for (int i = 0; i < NV; ++i) v[i] = Dual<NV>::variable(local[i], i);
    std::array<Dual<NV>, 16> o;
    f_(v.data(), o.data());
    for (int r = 0; r < rows_; ++r) {
      out[r] = o[r].v;
      for (int c = 0; c < NV; ++c) jac[r * NV + c] = o[r].d[c];
    }
  }

 private:
  int rows_;
  F f_;
};

template <int NV, class F>
std::unique_ptr<Block> make_block(int rows, ConstraintKind kind, std::string group, int step,
                                  std::vector<int> vars, F f) {
  if (static_cast<int>(vars.size()) != NV || rows > 16) {
    throw std::logic_error("block arity mismatch in group " + group);
  }
  auto b = std::make_unique<FnBlock<NV, F>>(rows, std::move(f));
  b->vars = std::move(vars);
  b->kind = kind;
  b->group = std::move(group);
  b->step = step;
  return b;
}

std::vector<int> slots(int base, std::initializer_list<int> offsets) {
  std::vector<int> out;
  for (int o : offsets) out.push_back(base + o);
  return out;
}

std::vector<int> range(int base, int n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = base + i;
  return out;
}

// One system edge: endpoints in the frame of the named body.
struct SystemEdge {
  BodyPart frame1, frame2;
  Vec2 local1, local2;
};

std::vector<SystemEdge> system_edges(const BodyFootprint& fp) {
  std::vector<SystemEdge> out;
  for (std::size_t i = 0; i < fp.tractor.edge_count(); ++i) {
    const auto [a, b] = fp.tractor.edge(i);
    out.push_back({BodyPart::Tractor, BodyPart::Tractor, a, b});
  }
  for (std::size_t i = 0; i < fp.trailer.edge_count(); ++i) {
    const auto [a, b] = fp.trailer.edge(i);
    out.push_back({BodyPart::Trailer, BodyPart::Trailer, a, b});
  }
  out.push_back({BodyPart::Tractor, BodyPart::Trailer, fp.tractor_anchor, fp.trailer_anchor});
  return out;
}

template <class T>
BasicVec2<T> place(BodyPart frame, const Vec2& local, const T* pose) {
  // pose: tractor x, y, theta, trailer x, y, theta
  const int o = frame == BodyPart::Tractor ? 0 : 3;
  return transform_point(local, pose[o], pose[o + 1], pose[o + 2]);
}

struct CollisionFn {
  SystemEdge edge;
  Vec2 o1, o2;
  template <class T>
  void operator()(const T* v, T* out) const {
    const BasicVec2<T> p1 = place(edge.frame1, edge.local1, v);
    const BasicVec2<T> p2 = place(edge.frame2, edge.local2, v);
    // Near-parallel pairs contribute the constant sentinel, so they drop out
    // of the linearization until the geometry rotates.
    const double det = value_of((p1.x - p2.x) * (o1.y - o2.y) - (p1.y - p2.y) * (o1.x - o2.x));
    if (std::abs(det) < kOptimizerParallelEps) {
      out[0] = T(kParallelResidual);
      return;
    }
    out[0] = collision_residual_t(p1, p2, BasicVec2<T>{T(o1.x), T(o1.y)},
                                  BasicVec2<T>{T(o2.x), T(o2.y)});
  }
};

std::vector<int> pose_vars(int k) {
  const int s = NlpProblem::state_offset(k);
  return slots(s, {kXr, kYr, kThr, kXl, kYl, kThl});
}

struct BuildFlags {
  bool terminal = true;
  bool sign = true;
};

void add_cost_blocks(NlpProblem& prob) {
  const WeightConfig& w = prob.weights;
  const SystemParams& p = prob.params;
  for (int k = 0; k < prob.N; ++k) {
    const std::array<double, 3> su{std::sqrt(w.R_u[0]), std::sqrt(w.R_u[1]),
                                   std::sqrt(w.R_u[2])};
    prob.cost.push_back(make_block<3>(3, ConstraintKind::Equality, "cost.input", k,
                                      range(NlpProblem::input_offset(k), 3),
                                      [su](const auto* v, auto* out) {
                                        for (int i = 0; i < 3; ++i) out[i] = su[i] * v[i];
                                      }));
  }
  const double sq0 = std::sqrt(w.R_q[0]), sq1 = std::sqrt(w.R_q[1]), sq2 = std::sqrt(w.R_q[2]);
  const double sv = std::sqrt(w.R_v), sth = std::sqrt(w.Q_theta);
  const double ix = 1.0 / p.v_xb, iy = 1.0 / p.v_yb;
  for (int k = 0; k <= prob.N; ++k) {
    const int s = NlpProblem::state_offset(k);
    prob.cost.push_back(make_block<5>(
        7, ConstraintKind::Equality, "cost.knot", k, slots(s, {kThr, kVxr, kVyr, kWr, kVl}),
        [=](const auto* v, auto* out) {
          using std::cos;
          using std::sin;
          const auto c = cos(v[0]), sn = sin(v[0]);
          out[0] = sq0 * v[1];
          out[1] = sq1 * v[2];
          out[2] = sq2 * v[3];
          out[3] = sv * v[4];
          out[4] = sth * (c * v[2] - sn * v[1]);
          out[5] = ix * (c * v[1] + sn * v[2]);
          out[6] = iy * (c * v[2] - sn * v[1]);
        }));
  }
}

void add_constraint_blocks(NlpProblem& prob, const BuildFlags& flags,
                           const std::vector<double>& guess_speed) {
  const SystemParams& p = prob.params;
  const double dt = prob.dt;
  const auto eq = ConstraintKind::Equality;
  const auto ineq = ConstraintKind::Inequality;

  for (int k = 0; k < prob.N; ++k) {
    const CableMode mode = prob.modes[static_cast<std::size_t>(k)];
    const double sgn = prob.sgn[static_cast<std::size_t>(k)];
    prob.constraints.push_back(make_block<27>(
        12, eq, "dynamics", k, range(NlpProblem::state_offset(k), 27),
        [mode, sgn, dt, p](const auto* v, auto* out) {
          using T = std::remove_cv_t<std::remove_reference_t<decltype(*v)>>;
          const BasicHybridState<T> x = unpack(v);
          const BasicControlInput<T> u{v[12], v[13], v[14]};
          const BasicHybridState<T> f = mode == CableMode::Taut ? taut_kernel(x, u, dt, p, sgn)
                                                                 : slack_kernel(x, u, dt, p, sgn);
          T fv[12] = {f.tractor.x,  f.tractor.y,     f.tractor.theta, f.tractor.vx,
                      f.tractor.vy, f.tractor.omega, f.trailer.x,     f.trailer.y,
                      f.trailer.theta, f.trailer.v,  f.trailer.delta, f.trailer.force};
          for (int i = 0; i < 12; ++i) {
            const T d = v[15 + i] - fv[i];
            out[i] = (i == kThr || i == kThl || i == kDelta) ? wrap_angle(d) : d;
          }
        }));

    if (mode == CableMode::Slack) {
      prob.constraints.push_back(make_block<2>(
          1, eq, "slack", k,
          {NlpProblem::state_offset(k) + kDelta, NlpProblem::state_offset(k + 1) + kDelta},
          [](const auto* v, auto* out) { out[0] = v[1] - v[0]; }));
    }

    const double a_max = p.a_max, g_max = p.g_max;
    prob.constraints.push_back(make_block<3>(3, ineq, "input_bounds", k,
                                             range(NlpProblem::input_offset(k), 3),
                                             [a_max, g_max](const auto* v, auto* out) {
                                               out[0] = a_max * a_max - v[0] * v[0] - v[1] * v[1];
                                               out[1] = g_max - v[2];
                                               out[2] = g_max + v[2];
                                             }));

    const double mg = p.friction_decel(), m = p.m_l;
    const bool entering = prob.knot_modes[static_cast<std::size_t>(k)] == CableMode::Slack &&
                          mode == CableMode::Taut;
    const int fvar = NlpProblem::state_offset(k + 1) + kForce;
    if (entering) {
      prob.constraints.push_back(make_block<1>(1, ineq, "acceleration", k, {fvar},
                                               [m, mg, sgn](const auto* v, auto* out) {
                                                 out[0] = v[0] / m - mg * sgn;
                                               }));
    } else {
      prob.constraints.push_back(make_block<1>(2, ineq, "acceleration", k, {fvar},
                                               [m, mg, sgn, a_max](const auto* v, auto* out) {
                                                 const auto acc = v[0] / m - mg * sgn;
                                                 out[0] = acc + mg;
                                                 out[1] = a_max - acc;
                                               }));
    }

    if (flags.sign && k >= 1) {
      const int vvar = NlpProblem::state_offset(k) + kVl;
      if (sgn == 0.0) {
        prob.constraints.push_back(make_block<1>(
            1, eq, "sign", k, {vvar}, [](const auto* v, auto* out) { out[0] = v[0]; }));
      } else {
        const double floor_v = std::min(1e-3, 0.5 * guess_speed[static_cast<std::size_t>(k)]);
        prob.constraints.push_back(make_block<1>(
            1, ineq, "sign", k, {vvar},
            [floor_v](const auto* v, auto* out) { out[0] = v[0] - floor_v; }));
      }
    }
  }

  const Rect b = prob.bounds;
  for (int k = 1; k <= prob.N; ++k) {
    const int s = NlpProblem::state_offset(k);
    const double v_max = p.v_max, w_max = p.omega_max, phi = p.phi_max;
    prob.constraints.push_back(make_block<5>(
        7, ineq, "state_bounds", k, slots(s, {kVxr, kVyr, kWr, kVl, kDelta}),
        [=](const auto* v, auto* out) {
          out[0] = v_max * v_max - v[0] * v[0] - v[1] * v[1];
          out[1] = w_max - v[2];
          out[2] = w_max + v[2];
          out[3] = v[3];
          out[4] = v_max - v[3];
          out[5] = phi - v[4];
          out[6] = phi + v[4];
        }));

    prob.constraints.push_back(make_block<4>(8, ineq, "world_bounds", k,
                                             slots(s, {kXr, kYr, kXl, kYl}),
                                             [b](const auto* v, auto* out) {
                                               for (int i = 0; i < 2; ++i) {
                                                 out[4 * i + 0] = v[2 * i] - b.xmin;
                                                 out[4 * i + 1] = b.xmax - v[2 * i];
                                                 out[4 * i + 2] = v[2 * i + 1] - b.ymin;
                                                 out[4 * i + 3] = b.ymax - v[2 * i + 1];
                                               }
                                             }));

    const double lub2 = p.L_c_ub * p.L_c_ub, llb2 = p.L_c_lb * p.L_c_lb;
    const auto cable_vars = slots(s, {kXr, kYr, kXl, kYl});
    if (prob.knot_modes[static_cast<std::size_t>(k)] == CableMode::Taut) {
      prob.constraints.push_back(make_block<4>(1, eq, "taut", k, cable_vars,
                                               [lub2](const auto* v, auto* out) {
                                                 const auto dx = v[0] - v[2], dy = v[1] - v[3];
                                                 out[0] = lub2 - (dx * dx + dy * dy);
                                               }));
      const auto tv = slots(s, {kXr, kYr, kVxr, kVyr, kXl, kYl, kThl, kDelta});
      prob.constraints.push_back(make_block<8>(1, eq, "taut", k, tv, [](const auto* v, auto* out) {
        using std::cos;
        using std::sin;
        const auto h = v[6] + v[7];
        out[0] = cos(h) * (v[1] - v[5]) - sin(h) * (v[0] - v[4]);
      }));
      prob.constraints.push_back(make_block<8>(2, ineq, "taut", k, tv, [](const auto* v, auto* out) {
        using std::cos;
        using std::sin;
        const auto h = v[6] + v[7];
        const auto c = cos(h), sn = sin(h);
        out[0] = c * (v[0] - v[4]) + sn * (v[1] - v[5]);
        out[1] = c * v[2] + sn * v[3];
      }));
    } else {
      prob.constraints.push_back(make_block<4>(2, ineq, "slack", k, cable_vars,
                                               [lub2, llb2](const auto* v, auto* out) {
                                                 const auto dx = v[0] - v[2], dy = v[1] - v[3];
                                                 const auto l2 = dx * dx + dy * dy;
                                                 out[0] = l2 - llb2;
                                                 out[1] = lub2 - l2;
                                               }));
    }
  }

  if (flags.terminal) {
    const int s = NlpProblem::state_offset(prob.N);
    const Pose2 g = prob.goal;
    prob.constraints.push_back(make_block<7>(
        7, eq, "terminal", prob.N, slots(s, {kXl, kYl, kThl, kVl, kVxr, kVyr, kWr}),
        [g](const auto* v, auto* out) {
          out[0] = v[0] - g.x;
          out[1] = v[1] - g.y;
          out[2] = wrap_angle(v[2] - g.theta);
          out[3] = v[3];
          out[4] = v[4];
          out[5] = v[5];
          out[6] = v[6];
        }));
  }
}

void init_problem(NlpProblem& prob, const Trajectory& gamma, const std::vector<Polygon>& world,
                  const Rect& bounds, const Pose2& goal, const BodyFootprint& fp,
                  const SystemParams& p, const WeightConfig& wc) {
  prob.N = static_cast<int>(gamma.steps());
  prob.dt = gamma.dt;
  prob.params = p;
  prob.params.dt = gamma.dt;
  prob.weights = wc;
  prob.footprint = fp;
  prob.obstacles = world;
  prob.bounds = bounds;
  prob.goal = goal;
  prob.modes = gamma.modes();
  prob.knot_modes.clear();
  for (const HybridState& s : gamma.states) prob.knot_modes.push_back(s.mode);
  prob.sgn.clear();
  for (std::size_t k = 0; k < gamma.steps(); ++k) prob.sgn.push_back(sign_of(gamma.states[k].trailer.v));
  prob.z0.assign(static_cast<std::size_t>(prob.num_vars()), 0.0);
  for (int k = 0; k <= prob.N; ++k) {
    pack(gamma.states[static_cast<std::size_t>(k)], &prob.z0[static_cast<std::size_t>(NlpProblem::state_offset(k))]);
    if (k < prob.N) {
      const ControlInput& u = gamma.inputs[static_cast<std::size_t>(k)];
      double* d = &prob.z0[static_cast<std::size_t>(NlpProblem::input_offset(k))];
      d[0] = u.ax;
      d[1] = u.ay;
      d[2] = u.g;
    }
  }
  prob.fixed.assign(prob.z0.size(), false);
  for (int i = 0; i < NlpProblem::kStateDim; ++i) prob.fixed[static_cast<std::size_t>(i)] = true;
}

HybridState simulate_recorded(const HybridState& x, const ControlInput& u, CableMode mode,
                              double dt, const SystemParams& p) {
  const double sgn = sign_of(x.trailer.v);
  return mode == CableMode::Taut ? taut_kernel(x, u, dt, p, sgn) : slack_kernel(x, u, dt, p, sgn);
}

}  // namespace

void WeightConfig::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(R_u[i] > 0.0)) {
      throw ValidationError("optimizer_weights.R_u[" + std::to_string(i) + "]", "must be > 0");
    }
    if (!(R_q[i] > 0.0)) {
      throw ValidationError("optimizer_weights.R_q[" + std::to_string(i) + "]", "must be > 0");
    }
  }
  if (!(R_v > 0.0)) throw ValidationError("optimizer_weights.R_v", "must be > 0");
  if (!(Q_theta > 0.0)) throw ValidationError("optimizer_weights.Q_theta", "must be > 0");
}

double objective(const std::vector<HybridState>& states, const std::vector<ControlInput>& inputs,
                 const WeightConfig& wc, const SystemParams& p) {
  double total = 0.0;
  for (const ControlInput& u : inputs) {
    total += wc.R_u[0] * u.ax * u.ax + wc.R_u[1] * u.ay * u.ay + wc.R_u[2] * u.g * u.g;
  }
  for (const HybridState& s : states) {
    const TractorState& r = s.tractor;
    total += wc.R_q[0] * r.vx * r.vx + wc.R_q[1] * r.vy * r.vy + wc.R_q[2] * r.omega * r.omega;
    total += wc.R_v * s.trailer.v * s.trailer.v;
    const double c = std::cos(r.theta), sn = std::sin(r.theta);
    const double lateral_cross = c * r.vy - sn * r.vx;
    const double body_x = c * r.vx + sn * r.vy;
    const double body_y = -sn * r.vx + c * r.vy;
    total += wc.Q_theta * lateral_cross * lateral_cross;
    total += body_x * body_x / (p.v_xb * p.v_xb) + body_y * body_y / (p.v_yb * p.v_yb) - 1.0;
  }
  return total;
}

double objective(const Trajectory& t, const WeightConfig& wc, const SystemParams& p) {
  return objective(t.states, t.inputs, wc, p);
}

std::size_t NlpProblem::equality_count() const {
  std::size_t n = 0;
  for (const auto& b : constraints) {
    if (b->kind == ConstraintKind::Equality) n += static_cast<std::size_t>(b->rows());
  }
  return n;
}

std::size_t NlpProblem::inequality_count() const {
  std::size_t n = collisions.size();
  for (const auto& b : constraints) {
    if (b->kind == ConstraintKind::Inequality) n += static_cast<std::size_t>(b->rows());
  }
  return n;
}

namespace {

void activate(NlpProblem& prob, const std::vector<double>& z, bool all) {
  prob.collisions.clear();
  prob.collision_anchor.assign(static_cast<std::size_t>(prob.N) + 1, {0.0, 0.0, 0.0, 0.0});
  const auto edges = system_edges(prob.footprint);
  for (int k = 0; k <= prob.N; ++k) {
    const double* s = &z[static_cast<std::size_t>(NlpProblem::state_offset(k))];
    prob.collision_anchor[static_cast<std::size_t>(k)] = {s[kXr], s[kYr], s[kXl], s[kYl]};
  }
  for (int k = 1; k <= prob.N; ++k) {
    const double* s = &z[static_cast<std::size_t>(NlpProblem::state_offset(k))];
    const double pose[6] = {s[kXr], s[kYr], s[kThr], s[kXl], s[kYl], s[kThl]};
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Vec2 a = place(edges[e].frame1, edges[e].local1, pose);
      const Vec2 bpt = place(edges[e].frame2, edges[e].local2, pose);
      const Vec2 ma{(a.x + bpt.x) / 2, (a.y + bpt.y) / 2};
      const double ra = std::hypot(a.x - bpt.x, a.y - bpt.y) / 2;
      for (std::size_t o = 0; o < prob.obstacles.size(); ++o) {
        const Polygon& ob = prob.obstacles[o];
        for (std::size_t j = 0; j < ob.edge_count(); ++j) {
          const auto [o1, o2] = ob.edge(j);
          if (!all) {
            const Vec2 mo{(o1.x + o2.x) / 2, (o1.y + o2.y) / 2};
            const double ro = std::hypot(o1.x - o2.x, o1.y - o2.y) / 2;
            if (std::hypot(ma.x - mo.x, ma.y - mo.y) - ra - ro > kCollisionMargin) continue;
          }
          auto blk = make_block<6>(1, ConstraintKind::Inequality, "collision", k, pose_vars(k),
                                   CollisionFn{edges[e], o1, o2});
          blk->key = (((static_cast<std::uint64_t>(k) * 64 + e) * 4096 + o) * 4096) + j;
          prob.collisions.push_back(std::move(blk));
        }
      }
    }
  }
}

}  // namespace

void NlpProblem::activate_collisions(const std::vector<double>& z) { activate(*this, z, false); }

bool NlpProblem::needs_refresh(const std::vector<double>& z) const {
  for (int k = 0; k <= N && static_cast<std::size_t>(k) < collision_anchor.size(); ++k) {
    const double* s = &z[static_cast<std::size_t>(state_offset(k))];
    const auto& a = collision_anchor[static_cast<std::size_t>(k)];
    if (std::hypot(s[kXr] - a[0], s[kYr] - a[1]) > kCollisionRefresh ||
        std::hypot(s[kXl] - a[2], s[kYl] - a[3]) > kCollisionRefresh) {
      return true;
    }
  }
  return false;
}

Trajectory NlpProblem::to_trajectory(const std::vector<double>& z) const {
  Trajectory t;
  t.dt = dt;
  for (int k = 0; k <= N; ++k) {
    HybridState s = unpack(&z[static_cast<std::size_t>(state_offset(k))]);
    s.tractor.theta = wrap_angle(s.tractor.theta);
    s.trailer.theta = wrap_angle(s.trailer.theta);
    s.trailer.delta = wrap_angle(s.trailer.delta);
    s.mode = knot_modes[static_cast<std::size_t>(k)];
    // Knots held at rest by the sign constraints are written as exact zeros
    // so that re-simulation sees the same friction sign.
    if (k < N && sgn[static_cast<std::size_t>(k)] == 0.0) s.trailer.v = 0.0;
    t.states.push_back(s);
    if (k < N) {
      const double* u = &z[static_cast<std::size_t>(input_offset(k))];
      t.inputs.push_back({u[0], u[1], u[2]});
    }
  }
  return t;
}

double NlpProblem::objective_at(const std::vector<double>& z) const {
  double total = -static_cast<double>(N + 1);
  std::vector<double> local, out;
  for (const auto& b : cost) {
    local.resize(b->vars.size());
    out.resize(static_cast<std::size_t>(b->rows()));
    for (std::size_t i = 0; i < b->vars.size(); ++i) {
      local[i] = z[static_cast<std::size_t>(b->vars[i])];
    }
    b->eval(local.data(), out.data());
    for (double r : out) total += r * r;
  }
  return total;
}

double state_distance(const HybridState& a, const HybridState& b) {
  double va[12], vb[12];
  pack(a, va);
  pack(b, vb);
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) {
    double d = va[i] - vb[i];
    if (i == kThr || i == kThl || i == kDelta) d = wrap_angle(d);
    sum += d * d;
  }
  return std::sqrt(sum);
}

NlpProblem build_problem(const Trajectory& gamma, const std::vector<Polygon>& world,
                         const Rect& bounds, const Pose2& goal, const BodyFootprint& fp,
                         const SystemParams& p, const WeightConfig& wc,
                         bool activate_all_collisions) {
  if (gamma.states.empty()) throw std::invalid_argument("build_problem: empty trajectory");
  if (gamma.inputs.size() + 1 != gamma.states.size()) {
    throw std::invalid_argument("build_problem: need one input per step");
  }
  SystemParams q = p;
  q.dt = gamma.dt;
  for (std::size_t k = 0; k < gamma.steps(); ++k) {
    auto next = step_mode(gamma.states[k], gamma.inputs[k], gamma.step_mode(k), gamma.dt, q);
    if (!next) {
      throw InconsistentGuess("step " + std::to_string(k) + ": taut transition infeasible (" +
                              std::string(to_string(next.error().reason)) + ")");
    }
    const double d = state_distance(*next, gamma.states[k + 1]);
    if (!(d <= kGuessTolerance)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "step %zu: rollout defect %.3g exceeds 1e-6", k, d);
      throw InconsistentGuess(buf);
    }
  }
  NlpProblem prob;
  init_problem(prob, gamma, world, bounds, goal, fp, q, wc);
  std::vector<double> speed;
  for (const HybridState& s : gamma.states) speed.push_back(s.trailer.v);
  add_cost_blocks(prob);
  add_constraint_blocks(prob, BuildFlags{}, speed);
  activate(prob, prob.z0, activate_all_collisions);
  return prob;
}

SolveReport validate(const Trajectory& traj, const std::vector<Polygon>& world, const Rect& bounds,
                     const BodyFootprint& fp, const SystemParams& p, const WeightConfig& wc) {
  SolveReport r;
  r.audited = true;
  if (traj.states.empty() || traj.inputs.size() + 1 != traj.states.size()) {
    r.max_defect = std::numeric_limits<double>::infinity();
    r.worst_defect_step = 0;
    r.defect_steps.push_back(0);
    return r;
  }
  SystemParams q = p;
  q.dt = traj.dt;
  r.objective = objective(traj, wc, q);
  r.initial_objective = r.objective;
  for (std::size_t k = 0; k < traj.steps(); ++k) {
    const HybridState f =
        simulate_recorded(traj.states[k], traj.inputs[k], traj.step_mode(k), traj.dt, q);
    double d = state_distance(f, traj.states[k + 1]);
    if (!std::isfinite(d)) d = std::numeric_limits<double>::infinity();
    if (d > r.max_defect || r.worst_defect_step < 0) {
      if (d >= r.max_defect) {
        r.max_defect = d;
        r.worst_defect_step = static_cast<int>(k);
      }
    }
    if (!(d <= kDefectTolerance)) r.defect_steps.push_back(static_cast<int>(k));
  }

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto polys = system_polygons(traj.states[k], fp, q);
    bool hit = false;
    for (const Polygon& ob : world) {
      if (polygons_overlap(polys[0], ob) || polygons_overlap(polys[1], ob) ||
          polygons_collide(polys[2], ob)) {
        hit = true;
        break;
      }
    }
    if (hit) r.collision_steps.push_back(static_cast<int>(k));
  }

  NlpProblem prob;
  init_problem(prob, traj, world, bounds, Pose2{}, fp, q, wc);
  add_constraint_blocks(prob, BuildFlags{false, false}, {});
  activate(prob, prob.z0, true);
  measure(prob, prob.z0, r);
  r.objective = objective(traj, wc, q);
  r.initial_objective = r.objective;
  return r;
}

bool validation_passed(const SolveReport& r) {
  return r.max_defect <= kDefectTolerance && r.defect_steps.empty() && r.collision_steps.empty();
}

}  // namespace towplan
