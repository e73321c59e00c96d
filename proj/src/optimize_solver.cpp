#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "towplan/optimize.hpp"

namespace towplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Multipliers {
  std::vector<std::vector<double>> constraint;               // per constraint block
  std::unordered_map<std::uint64_t, double> collision;       // per collision key
};

struct LocalEval {
  std::vector<double> local, out, jac;
  void load(const Block& b, const std::vector<double>& z) {
    local.resize(b.vars.size());
    out.resize(static_cast<std::size_t>(b.rows()));
    jac.resize(b.vars.size() * static_cast<std::size_t>(b.rows()));
    for (std::size_t i = 0; i < b.vars.size(); ++i) local[i] = z[static_cast<std::size_t>(b.vars[i])];
  }
};

// Augmented Lagrangian (PHR) value; inequalities g >= 0 use the squared hinge.
class Merit {
 public:
  Merit(const NlpProblem& prob, const Multipliers& mult, double rho)
      : prob_(prob), mult_(mult), rho_(rho) {}

  double value(const std::vector<double>& z) const {
    double phi = prob_.objective_at(z);
    LocalEval ev;
    for (std::size_t i = 0; i < prob_.constraints.size(); ++i) {
      const Block& b = *prob_.constraints[i];
      ev.load(b, z);
      b.eval(ev.local.data(), ev.out.data());
      phi += term(b.kind, ev.out, mult_.constraint[i]);
    }
    for (const auto& b : prob_.collisions) {
      ev.load(*b, z);
      b->eval(ev.local.data(), ev.out.data());
      phi += term(b->kind, ev.out, {collision_multiplier(*b)});
    }
    return std::isfinite(phi) ? phi : kInf;
  }

  // Gradient and Gauss-Newton Hessian.
  double linearize(const std::vector<double>& z, Eigen::VectorXd& grad,
                   std::vector<Eigen::Triplet<double>>& trips) const {
    const auto n = static_cast<Eigen::Index>(z.size());
    grad.setZero(n);
    trips.clear();
    double phi = -static_cast<double>(prob_.N + 1);
    LocalEval ev;
    std::vector<double> weight_row;
    for (const auto& b : prob_.cost) {
      ev.load(*b, z);
      b->jacobian(ev.local.data(), ev.out.data(), ev.jac.data());
      weight_row.assign(ev.out.size(), 2.0);
      std::vector<double> coeff(ev.out.size());
      for (std::size_t r = 0; r < ev.out.size(); ++r) {
        phi += ev.out[r] * ev.out[r];
        coeff[r] = 2.0 * ev.out[r];
      }
      scatter(*b, ev, coeff, weight_row, grad, trips);
    }
    for (std::size_t i = 0; i < prob_.constraints.size(); ++i) {
      const Block& b = *prob_.constraints[i];
      ev.load(b, z);
      b.jacobian(ev.local.data(), ev.out.data(), ev.jac.data());
      phi += constraint_terms(b, ev, mult_.constraint[i], grad, trips);
    }
    for (const auto& b : prob_.collisions) {
      ev.load(*b, z);
      b->jacobian(ev.local.data(), ev.out.data(), ev.jac.data());
      phi += constraint_terms(*b, ev, {collision_multiplier(*b)}, grad, trips);
    }
    return phi;
  }

  double collision_multiplier(const Block& b) const {
    auto it = mult_.collision.find(b.key);
    return it == mult_.collision.end() ? 0.0 : it->second;
  }

 private:
  double term(ConstraintKind kind, const std::vector<double>& c,
              const std::vector<double>& lam) const {
    double t = 0.0;
    for (std::size_t r = 0; r < c.size(); ++r) {
      if (kind == ConstraintKind::Equality) {
        t += lam[r] * c[r] + 0.5 * rho_ * c[r] * c[r];
      } else {
        const double h = std::max(0.0, lam[r] - rho_ * c[r]);
        t += (h * h - lam[r] * lam[r]) / (2.0 * rho_);
      }
    }
    return t;
  }

  double constraint_terms(const Block& b, const LocalEval& ev, const std::vector<double>& lam,
                          Eigen::VectorXd& grad, std::vector<Eigen::Triplet<double>>& trips) const {
    std::vector<double> coeff(ev.out.size()), weight(ev.out.size());
    for (std::size_t r = 0; r < ev.out.size(); ++r) {
      if (b.kind == ConstraintKind::Equality) {
        coeff[r] = lam[r] + rho_ * ev.out[r];
        weight[r] = rho_;
      } else {
        const double h = std::max(0.0, lam[r] - rho_ * ev.out[r]);
        coeff[r] = -h;
        weight[r] = h > 0.0 ? rho_ : 0.0;
      }
    }
    scatter(b, ev, coeff, weight, grad, trips);
    return term(b.kind, ev.out, lam);
  }

  void scatter(const Block& b, const LocalEval& ev, const std::vector<double>& coeff,
               const std::vector<double>& weight, Eigen::VectorXd& grad,
               std::vector<Eigen::Triplet<double>>& trips) const {
    const std::size_t nv = b.vars.size();
    for (std::size_t r = 0; r < ev.out.size(); ++r) {
      const double* row = &ev.jac[r * nv];
      if (coeff[r] != 0.0) {
        for (std::size_t c = 0; c < nv; ++c) grad[b.vars[c]] += coeff[r] * row[c];
      }
      if (weight[r] == 0.0) continue;
      for (std::size_t a = 0; a < nv; ++a) {
        if (row[a] == 0.0 || prob_.fixed[static_cast<std::size_t>(b.vars[a])]) continue;
        for (std::size_t c = 0; c < nv; ++c) {
          if (row[c] == 0.0 || prob_.fixed[static_cast<std::size_t>(b.vars[c])]) continue;
          trips.emplace_back(b.vars[a], b.vars[c], weight[r] * row[a] * row[c]);
        }
      }
    }
  }

  const NlpProblem& prob_;
  const Multipliers& mult_;
  double rho_;
};

void update_multipliers(const NlpProblem& prob, const std::vector<double>& z, double rho,
                        Multipliers& mult) {
  LocalEval ev;
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const Block& b = *prob.constraints[i];
    ev.load(b, z);
    b.eval(ev.local.data(), ev.out.data());
    for (std::size_t r = 0; r < ev.out.size(); ++r) {
      double& l = mult.constraint[i][r];
      l = b.kind == ConstraintKind::Equality ? l + rho * ev.out[r]
                                             : std::max(0.0, l - rho * ev.out[r]);
    }
  }
  std::unordered_map<std::uint64_t, double> next;
  for (const auto& b : prob.collisions) {
    ev.load(*b, z);
    b->eval(ev.local.data(), ev.out.data());
    auto it = mult.collision.find(b->key);
    const double l = it == mult.collision.end() ? 0.0 : it->second;
    const double nl = std::max(0.0, l - rho * ev.out[0]);
    if (nl > 0.0) next[b->key] = nl;
  }
  mult.collision = std::move(next);
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIter:
      return "max-iter";
    case SolveStatus::LineSearchFail:
      return "line-search-fail";
  }
  return "unknown";
}

void measure(const NlpProblem& prob, const std::vector<double>& z, SolveReport& report) {
  report.max_eq_violation = 0.0;
  report.max_ineq_violation = 0.0;
  report.group_violation.clear();
  LocalEval ev;
  auto visit = [&](const Block& b) {
    ev.load(b, z);
    b.eval(ev.local.data(), ev.out.data());
    double v = 0.0;
    for (double c : ev.out) {
      const double viol = b.kind == ConstraintKind::Equality ? std::abs(c) : std::max(0.0, -c);
      v = std::max(v, std::isfinite(viol) ? viol : kInf);
    }
    double& g = report.group_violation[b.group];
    g = std::max(g, v);
    double& total =
        b.kind == ConstraintKind::Equality ? report.max_eq_violation : report.max_ineq_violation;
    total = std::max(total, v);
  };
  for (const auto& b : prob.constraints) visit(*b);
  for (const auto& b : prob.collisions) visit(*b);
  report.equality_constraints = prob.equality_count();
  report.inequality_constraints = prob.inequality_count();
  report.collision_constraints = prob.collision_count();
  report.objective = prob.cost.empty() ? report.objective : prob.objective_at(z);
}

SolveResult solve(NlpProblem& prob, const SolveOptions& opts) {
  std::vector<double> z = prob.z0;
  const auto n = static_cast<Eigen::Index>(z.size());
  Multipliers mult;
  for (const auto& b : prob.constraints) {
    mult.constraint.emplace_back(static_cast<std::size_t>(b->rows()), 0.0);
  }
  double rho = opts.rho0;

  SolveReport report;
  measure(prob, z, report);
  report.initial_objective = report.objective;

  std::vector<double> best_z = z;
  double best_obj = report.objective;
  double best_viol = report.max_violation();
  auto consider = [&](const std::vector<double>& cand, const SolveReport& r) {
    const bool feas = r.max_violation() <= opts.tol_con;
    const bool best_feas = best_viol <= opts.tol_con;
    if ((feas && (!best_feas || r.objective < best_obj)) ||
        (!feas && !best_feas && r.max_violation() < best_viol)) {
      best_z = cand;
      best_obj = r.objective;
      best_viol = r.max_violation();
    }
  };

  SolveStatus status = SolveStatus::MaxIter;
  double prev_obj = report.objective;
  double prev_viol = report.max_violation();
  double tau = 1e-6;
  Eigen::VectorXd grad;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  int line_search_failures = 0;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    report.outer_iterations = outer + 1;
    Merit merit(prob, mult, rho);
    const double inner_tol = std::max(1e-8, 1e-2 / std::pow(10.0, outer));
    bool stalled = false;
    for (int inner = 0; inner < opts.max_inner; ++inner) {
      ++report.inner_iterations;
      const double phi = merit.linearize(z, grad, trips);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (prob.fixed[static_cast<std::size_t>(i)]) grad[i] = 0.0;
      }
      const double gnorm = grad.lpNorm<Eigen::Infinity>();
      if (gnorm <= inner_tol) break;

      Eigen::SparseMatrix<double> H(n, n);
      H.setFromTriplets(trips.begin(), trips.end());
      bool accepted = false;
      for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
        Eigen::SparseMatrix<double> A = H;
        for (Eigen::Index i = 0; i < n; ++i) {
          A.coeffRef(i, i) += prob.fixed[static_cast<std::size_t>(i)] ? 1.0 : tau;
        }
        A.makeCompressed();
        ldlt.compute(A);
        if (ldlt.info() != Eigen::Success) {
          tau = std::max(tau * 10.0, 1e-8);
          continue;
        }
        const Eigen::VectorXd d = ldlt.solve(-grad);
        const double slope = grad.dot(d);
        if (!(slope < 0.0) || !d.allFinite()) {
          tau = std::max(tau * 10.0, 1e-8);
          continue;
        }
        double alpha = 1.0;
        std::vector<double> trial(z.size());
        for (int ls = 0; ls < 30; ++ls) {
          for (std::size_t i = 0; i < z.size(); ++i) {
            trial[i] = z[i] + alpha * d[static_cast<Eigen::Index>(i)];
          }
          const double phi_t = merit.value(trial);
          if (phi_t <= phi + 1e-4 * alpha * slope) {
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
        if (accepted) {
          const double rel = std::abs(phi - merit.value(trial)) / std::max(1.0, std::abs(phi));
          z.swap(trial);
          tau = alpha == 1.0 ? std::max(tau / 3.0, 1e-12) : std::min(tau * 2.0, 1e10);
          if (rel < 1e-14) stalled = true;
        } else {
          tau = std::max(tau * 10.0, 1e-8);
        }
      }
      if (!accepted) {
        ++line_search_failures;
        stalled = true;
      }
      if (stalled) break;
    }

    SolveReport cur;
    measure(prob, z, cur);
    consider(z, cur);
    const double viol = cur.max_violation();
    const double rel_obj = std::abs(cur.objective - prev_obj) / std::max(1.0, std::abs(prev_obj));
    if (viol <= opts.tol_con && rel_obj <= opts.tol_obj && outer > 0) {
      status = SolveStatus::Converged;
      break;
    }
    update_multipliers(prob, z, rho, mult);
    if (viol > 0.25 * prev_viol) rho = std::min(rho * 10.0, opts.rho_max);
    prev_obj = cur.objective;
    prev_viol = viol;
    if (prob.needs_refresh(z)) {
      prob.activate_collisions(z);
    }
    if (line_search_failures > 3 * opts.max_outer) {
      status = SolveStatus::LineSearchFail;
      break;
    }
  }

  SolveResult res;
  if (status == SolveStatus::Converged) best_z = z;
  res.trajectory = prob.to_trajectory(best_z);
  const double init = report.initial_objective;
  const int outer_it = report.outer_iterations, inner_it = report.inner_iterations;
  res.report = SolveReport{};
  measure(prob, best_z, res.report);
  res.report.status = status;
  res.report.initial_objective = init;
  res.report.outer_iterations = outer_it;
  res.report.inner_iterations = inner_it;
  return res;
}

void SolveReport::write(std::ostream& os) const {
  char buf[64];
  auto num = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << key << '=' << buf << '\n';
  };
  auto list = [&](const char* key, const std::vector<int>& v) {
    os << key << '=';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << '\n';
  };
  os << "status=" << to_string(status) << '\n';
  num("objective", objective);
  num("initial_objective", initial_objective);
  num("max_eq_violation", max_eq_violation);
  num("max_ineq_violation", max_ineq_violation);
  os << "outer_iterations=" << outer_iterations << '\n';
  os << "inner_iterations=" << inner_iterations << '\n';
  os << "equality_constraints=" << equality_constraints << '\n';
  os << "inequality_constraints=" << inequality_constraints << '\n';
  os << "collision_constraints=" << collision_constraints << '\n';
  for (const auto& [group, v] : group_violation) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << "violation." << group << '=' << buf << '\n';
  }
  if (!audited) return;
  num("max_defect", max_defect);
  os << "worst_defect_step=" << worst_defect_step << '\n';
  list("defect_steps", defect_steps);
  list("collision_steps", collision_steps);
}

}  // namespace towplan
