// towplan: plan, optimize, validate and render tractor-cable-trailer trajectories.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "towplan/errors.hpp"
#include "towplan/scenario.hpp"

namespace fs = std::filesystem;
using namespace towplan;

namespace {

enum Exit : int {
  kOk = 0,
  kValidationFailed = 1,
  kNoSolution = 2,
  kTimeout = 3,
  kUsage = 64,
  kDataError = 65,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path fixture_dir() {
  if (const char* env = std::getenv("TOWPLAN_FIXTURES"); env && *env) return env;
  return TOWPLAN_DEFAULT_FIXTURES;
}

// Existing paths are used as given; otherwise the name is looked up in the
// fixture directory, with and without a .json suffix.
fs::path resolve_scenario(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path dir = fixture_dir();
  for (const fs::path& cand : {dir / arg, dir / (arg + ".json")}) {
    if (fs::exists(cand)) return cand;
  }
  throw UsageError("scenario not found: " + arg);
}

fs::path require_file(const std::string& arg) {
  if (!fs::exists(arg)) throw UsageError("file not found: " + arg);
  return arg;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

int mode_switches(const Trajectory& t) {
  int n = 0;
  for (std::size_t k = 1; k < t.states.size(); ++k) n += t.states[k].mode != t.states[k - 1].mode;
  return n;
}

struct PlanArgs {
  std::string mode = "hybrid";
  std::size_t budget = 2'000'000;
};

SearchOptions search_options(const PlanArgs& a) {
  SearchOptions o;
  o.policy = a.mode == "taut-only" ? ModePolicy::TautOnly : ModePolicy::Hybrid;
  o.node_budget = a.budget;
  return o;
}

int exit_for(SearchStatus s) {
  switch (s) {
    case SearchStatus::Solved:
      return kOk;
    case SearchStatus::NoSolution:
      return kNoSolution;
    case SearchStatus::Timeout:
      return kTimeout;
  }
  return kNoSolution;
}

int do_plan(const Scenario& sc, const PlanArgs& a, const fs::path& out, std::ostream& os,
            Trajectory* result = nullptr) {
  const SearchResult r = plan(sc.start, sc.goal, sc.world, sc.footprint, sc.params,
                              sc.search_weights, search_options(a));
  os << "stage=plan\n";
  os << "mode=" << a.mode << '\n';
  os << "status=" << to_string(r.status) << '\n';
  os << "expansions=" << r.stats.expansions << '\n';
  os << "generated=" << r.stats.generated << '\n';
  os << "goal_shots=" << r.stats.goal_shots << '\n';
  os << "start_heuristic=" << num(r.stats.start_heuristic) << '\n';
  if (r.status != SearchStatus::Solved) return exit_for(r.status);
  os << "steps=" << r.trajectory.steps() << '\n';
  os << "shot_steps=" << r.stats.shot_steps << '\n';
  os << "mode_switches=" << mode_switches(r.trajectory) << '\n';
  os << "cost=" << num(r.stats.solution_cost) << '\n';
  os << "cost.trailer=" << num(r.stats.trailer_path_cost) << '\n';
  os << "cost.tractor=" << num(r.stats.tractor_path_cost) << '\n';
  os << "cost.duration=" << num(r.stats.duration_cost) << '\n';
  save_trajectory({sc.name, parameter_hash(sc), r.trajectory}, out);
  os << "output=" << out.string() << '\n';
  if (result) *result = r.trajectory;
  return kOk;
}

struct OptimizeArgs {
  double tol = 1e-4;
  int max_iter = 40;
};

int do_optimize(const Scenario& sc, const Trajectory& guess, const OptimizeArgs& a,
                const fs::path& out, const fs::path& report_path, std::ostream& os,
                Trajectory* result = nullptr) {
  NlpProblem prob = build_problem(guess, sc.world.obstacles, sc.world.bounds, sc.goal,
                                  sc.footprint, sc.params, sc.optimizer_weights);
  SolveOptions opts;
  opts.tol_con = a.tol;
  opts.max_outer = a.max_iter;
  const SolveResult res = solve(prob, opts);
  save_trajectory({sc.name, parameter_hash(sc), res.trajectory}, out);
  std::ostringstream rep;
  res.report.write(rep);
  write_file(report_path, rep.str());
  os << "stage=optimize\n";
  os << "status=" << to_string(res.report.status) << '\n';
  os << "objective=" << num(res.report.objective) << '\n';
  os << "initial_objective=" << num(res.report.initial_objective) << '\n';
  os << "objective_decrease=" << num(res.report.initial_objective - res.report.objective) << '\n';
  os << "max_eq_violation=" << num(res.report.max_eq_violation) << '\n';
  os << "max_ineq_violation=" << num(res.report.max_ineq_violation) << '\n';
  os << "outer_iterations=" << res.report.outer_iterations << '\n';
  os << "inner_iterations=" << res.report.inner_iterations << '\n';
  os << "output=" << out.string() << '\n';
  os << "report=" << report_path.string() << '\n';
  if (result) *result = res.trajectory;
  return res.report.status == SolveStatus::Converged ? kOk : kNoSolution;
}

int do_validate(const Scenario& sc, const Trajectory& t, std::ostream& os) {
  const SolveReport r =
      validate(t, sc.world.obstacles, sc.world.bounds, sc.footprint, sc.params,
               sc.optimizer_weights);
  const bool ok = validation_passed(r);
  os << "stage=validate\n";
  os << "passed=" << (ok ? "true" : "false") << '\n';
  os << "steps=" << t.steps() << '\n';
  os << "max_defect=" << num(r.max_defect) << '\n';
  os << "worst_defect_step=" << r.worst_defect_step << '\n';
  os << "objective=" << num(r.objective) << '\n';
  os << "max_eq_violation=" << num(r.max_eq_violation) << '\n';
  os << "max_ineq_violation=" << num(r.max_ineq_violation) << '\n';
  for (const auto& [group, v] : r.group_violation) {
    os << "violation." << group << '=' << num(v) << '\n';
  }
  for (int k : r.defect_steps) os << "defect_step=" << k << '\n';
  for (int k : r.collision_steps) os << "collision_step=" << k << '\n';
  const HybridState& last = t.states.back();
  os << "terminal_position_error="
     << num(std::hypot(last.trailer.x - sc.goal.x, last.trailer.y - sc.goal.y)) << '\n';
  os << "terminal_heading_error=" << num(std::abs(wrap_angle(last.trailer.theta - sc.goal.theta)))
     << '\n';
  return ok ? kOk : kValidationFailed;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InconsistentGuess& e) {
    std::cerr << "inconsistent guess: " << e.what() << '\n';
    return kDataError;
  } catch (const ParseError& e) {
    std::cerr << e.what() << '\n';
    return kDataError;
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kDataError;
  } catch (const ChecksumMismatch& e) {
    std::cerr << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid-mode planning for a tractor towing a trailer on a cable"};
  app.require_subcommand(1);

  std::string scenario_arg, traj_arg, out_arg, report_arg, outdir_arg;
  PlanArgs plan_args;
  OptimizeArgs opt_args;
  int stride = 5;

  auto* plan_cmd = app.add_subcommand("plan", "Hybrid search for a coarse trajectory");
  plan_cmd->add_option("scenario", scenario_arg, "Scenario file or fixture name")->required();
  plan_cmd->add_option("out", out_arg, "Output trajectory file")->required();
  plan_cmd->add_option("--mode", plan_args.mode, "Mode policy")
      ->check(CLI::IsMember({"hybrid", "taut-only"}));
  plan_cmd->add_option("--budget", plan_args.budget, "Node expansion budget");

  auto* opt_cmd = app.add_subcommand("optimize", "Refine a coarse trajectory");
  opt_cmd->add_option("trajectory", traj_arg, "Coarse trajectory file")->required();
  opt_cmd->add_option("scenario", scenario_arg, "Scenario file or fixture name")->required();
  opt_cmd->add_option("out", out_arg, "Output trajectory file")->required();
  opt_cmd->add_option("--report", report_arg, "Solve report path (default: <out>.report)");
  opt_cmd->add_option("--tol", opt_args.tol, "Constraint tolerance");
  opt_cmd->add_option("--max-iter", opt_args.max_iter, "Outer iteration cap");

  auto* val_cmd = app.add_subcommand("validate", "Audit a trajectory against its scenario");
  val_cmd->add_option("trajectory", traj_arg, "Trajectory file")->required();
  val_cmd->add_option("scenario", scenario_arg, "Scenario file or fixture name")->required();

  auto* render_cmd = app.add_subcommand("render", "Write an SVG plot");
  render_cmd->add_option("trajectory", traj_arg, "Trajectory file")->required();
  render_cmd->add_option("scenario", scenario_arg, "Scenario file or fixture name")->required();
  render_cmd->add_option("out", out_arg, "Output SVG file")->required();
  render_cmd->add_option("--stride", stride, "Snapshot stride in knots");

  auto* run_cmd = app.add_subcommand("run", "plan, optimize, validate and render");
  run_cmd->add_option("scenario", scenario_arg, "Scenario file or fixture name")->required();
  run_cmd->add_option("outdir", outdir_arg, "Output directory")->required();
  run_cmd->add_option("--mode", plan_args.mode, "Mode policy")
      ->check(CLI::IsMember({"hybrid", "taut-only"}));
  run_cmd->add_option("--budget", plan_args.budget, "Node expansion budget");
  run_cmd->add_option("--stride", stride, "Snapshot stride in knots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (plan_cmd->parsed()) {
    return guarded([&] {
      const Scenario sc = load_scenario(resolve_scenario(scenario_arg));
      return do_plan(sc, plan_args, out_arg, std::cout);
    });
  }
  if (opt_cmd->parsed()) {
    return guarded([&] {
      const Scenario sc = load_scenario(resolve_scenario(scenario_arg));
      const TrajectoryFile guess = load_trajectory(require_file(traj_arg));
      const fs::path report = report_arg.empty() ? fs::path(out_arg + ".report") : fs::path(report_arg);
      return do_optimize(sc, guess.trajectory, opt_args, out_arg, report, std::cout);
    });
  }
  if (val_cmd->parsed()) {
    return guarded([&] {
      const Scenario sc = load_scenario(resolve_scenario(scenario_arg));
      const TrajectoryFile t = load_trajectory(require_file(traj_arg));
      return do_validate(sc, t.trajectory, std::cout);
    });
  }
  if (render_cmd->parsed()) {
    return guarded([&] {
      const Scenario sc = load_scenario(resolve_scenario(scenario_arg));
      const TrajectoryFile t = load_trajectory(require_file(traj_arg));
      RenderOptions ro;
      ro.stride = stride;
      render_svg(t.trajectory, sc, fs::path(out_arg), ro);
      std::cout << "stage=render\noutput=" << out_arg << '\n';
      return int{kOk};
    });
  }
  if (run_cmd->parsed()) {
    return guarded([&] {
      const Scenario sc = load_scenario(resolve_scenario(scenario_arg));
      const fs::path dir = outdir_arg;
      fs::create_directories(dir);
      Trajectory coarse, refined;
      int code = do_plan(sc, plan_args, dir / "coarse.traj", std::cout, &coarse);
      if (code != kOk) return code;
      RenderOptions ro;
      ro.stride = stride;
      render_svg(coarse, sc, dir / "coarse.svg", ro);
      code = do_optimize(sc, coarse, opt_args, dir / "refined.traj", dir / "report.txt",
                         std::cout, &refined);
      render_svg(refined, sc, dir / "refined.svg", ro);
      if (code != kOk) return code;
      return do_validate(sc, refined, std::cout);
    });
  }
  return kUsage;
}
