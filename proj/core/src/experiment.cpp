// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "espkit/games.hpp"
#include "espkit/mdp.hpp"
#include "espkit/metrics.hpp"
#include "espkit/problems.hpp"
#include "espkit/rates.hpp"
#include "espkit/solver.hpp"
#include "espkit/stability.hpp"

namespace esp {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_grid(const std::vector<int>& grid) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(grid[i]);
  }
  return out;
}

std::vector<int> parse_grid(const std::string& text, int line) {
  std::vector<int> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      grid.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError(line, "bad n_grid entry '" + item + "'");
    }
  }
  if (grid.empty()) throw ConfigError(line, "empty n_grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      throw ConfigError(line, "n_grid must be strictly increasing");
  return grid;
}

// ---------------------------------------------------------------------------
// Experiment assembly
// ---------------------------------------------------------------------------

struct Assembled {
  ProblemPtr problem;                 // null for kind=mdp (instance used directly)
  std::optional<MdpInstance> mdp;     // mdp family
  std::optional<GameInstance> game;   // game family, for certification
};

Matrix named_payoff(const ExperimentConfig& c) {
  if (c.payoff == "matching-pennies") {
    Matrix a(2, 2);
    a << 1, -1, -1, 1;
    return a;
  }
  if (c.payoff == "zero") return Matrix::Zero(c.payoff_rows, c.payoff_cols);
  if (c.payoff == "random") {
    Rng rng(c.problem_seed);
    return Matrix::NullaryExpr(c.payoff_rows, c.payoff_cols,
                               [&](Eigen::Index, Eigen::Index) {
                                 return rng.uniform(-0.9, 0.9);
                               });
  }
  throw std::invalid_argument("unknown payoff kind '" + c.payoff + "'");
}

Assembled assemble_problem(const ExperimentConfig& c) {
  Assembled out;
  if (c.problem == "quadratic") {
    Rng rng(c.problem_seed);
    const QuadraticSpec spec =
        random_quadratic_spec(c.dim_x, c.dim_y, c.mu_x, c.mu_y, c.noise_scale,
                              c.box_radius_x, c.box_radius_y, rng);
    out.problem = make_quadratic_scsc(spec);
    return out;
  }
  if (c.problem == "game") {
    out.game = make_game_instance(named_payoff(c), c.payoff_noise);
    out.problem = out.game->problem;
    return out;
  }
  if (c.problem == "mdp") {
    MdpInstance mdp = make_random_ergodic_mdp(c.num_states, c.num_actions,
                                              c.min_transition_prob,
                                              c.problem_seed);
    mdp.reward_noise = c.reward_noise;
    out.mdp = std::move(mdp);
    return out;
  }
  throw std::invalid_argument("unknown problem family '" + c.problem + "'");
}

RegularizerRule resolve_regularizer(const ExperimentConfig& c) {
  if (c.regularizer == "none") return {};
  if (c.regularizer == "diameter") return diameter_regularizer_rule();
  if (c.regularizer == "family") {
    if (c.problem == "game") return game_entropy_rule();
    if (c.problem == "mdp") return mdp_regularizer_rule();
    throw std::invalid_argument(
        "regularizer 'family' needs a game or mdp problem");
  }
  throw std::invalid_argument("unknown regularizer '" + c.regularizer + "'");
}

BoundRule resolve_bound(const ExperimentConfig& c) {
  if (c.bound == "none") return {};
  if (c.bound == "scsc-wgm") return bound_rule(BoundKind::kScscWgm);
  if (c.bound == "scsc-sgm") return bound_rule(BoundKind::kScscSgm);
  if (c.bound == "unbounded-d2") return bound_rule(BoundKind::kUnboundedD2);
  if (c.bound == "unbounded-sgm") return bound_rule(BoundKind::kUnboundedSgm);
  if (c.bound == "regularized-wgm") return bound_rule(BoundKind::kRegularizedWgm);
  if (c.bound == "diameter") return bound_rule_l2(BoundKind::kDiameterWgm);
  throw std::invalid_argument("unknown bound kind '" + c.bound + "'");
}

MetricKind resolve_metric(const std::string& name) {
  if (name == "wgm") return MetricKind::kWgm;
  if (name == "sgm") return MetricKind::kSgm;
  if (name == "d2") return MetricKind::kD2;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string sweep_csv(const std::vector<RateSweep>& sweeps) {
  const bool extra =
      !sweeps.empty() && !sweeps.front().extra_column.empty();
  std::string csv = "n,metric,mean,std_error,bound,replications,seed";
  if (extra) csv += "," + sweeps.front().extra_column;
  csv += "\n";
  for (const RateSweep& sweep : sweeps) {
    for (const RateRow& row : sweep.rows) {
      csv += std::to_string(row.n) + "," + row.metric + "," +
             format_double(row.mean) + "," + format_double(row.std_error) + "," +
             format_double(row.bound) + "," + std::to_string(row.replications) +
             "," + std::to_string(row.seed);
      if (extra) csv += "," + format_double(row.extra);
      csv += "\n";
    }
  }
  return csv;
}

constexpr const char* kFitsHeader =
    "metric,slope,intercept,r_squared,points_used,points_excluded,"
    "bound_dominance\n";

std::string fits_row(const std::string& metric, const RateFit& fit,
                     const std::string& dominance) {
  return metric + "," + format_double(fit.slope) + "," +
         format_double(fit.intercept) + "," + format_double(fit.r_squared) + "," +
         std::to_string(fit.points_used) + "," +
         std::to_string(fit.points_excluded) + "," + dominance + "\n";
}

/// mean <= bound + 3 SE on every row (rows with bound 0 are skipped).
bool bound_dominates(const RateSweep& sweep) {
  for (const RateRow& row : sweep.rows)
    if (row.bound > 0.0 && row.mean > row.bound + 3.0 * row.std_error)
      return false;
  return true;
}

bool rows_sane(const RateSweep& sweep) {
  for (const RateRow& row : sweep.rows)
    if (row.mean < -4.0 * row.std_error) return false;
  return true;
}

struct RunContext {
  std::map<std::string, bool> checks;
  std::string results_csv;
  std::string fits_csv{kFitsHeader};
  json extra_manifest = json::object();
};

// ---------------------------------------------------------------------------
// Per-kind runners
// ---------------------------------------------------------------------------

SolverConfig solver_from(const ExperimentConfig& c) {
  SolverConfig cfg;
  cfg.max_iter = c.max_iter;
  cfg.gap_tol = c.gap_tol;
  return cfg;
}

void run_rate_sweep_kind(const ExperimentConfig& c, RunContext& ctx) {
  const Assembled assembled = assemble_problem(c);
  ProblemPtr problem = assembled.problem;
  if (!problem && assembled.mdp) {
    const MdpConstants constants = estimate_mixing_constants(
        *assembled.mdp, 64, Rng::stream(c.master_seed, 0xbeef)());
    problem = make_mdp_saddle_problem(*assembled.mdp, constants);
  }

  SweepSpec spec;
  spec.n_grid = c.n_grid;
  spec.replications = c.replications;
  spec.metric = resolve_metric(c.metric);
  spec.regularizer = resolve_regularizer(c);
  spec.bound = resolve_bound(c);
  spec.solver = solver_from(c);
  spec.master_seed = c.master_seed;
  spec.threads = c.threads;
  spec.problem_tag = c.problem;

  const RateSweep sweep = run_rate_sweep(problem, spec);
  ctx.results_csv = sweep_csv({sweep});

  const double floor = 5.0 * (c.gap_tol > 0.0 ? c.gap_tol : 1e-7);
  const RateFit fit = fit_sweep(sweep, floor);
  const bool dominance = bound_dominates(sweep);
  ctx.fits_csv += fits_row(c.metric, fit,
                           c.bound == "none" ? "na" : (dominance ? "pass" : "fail"));
  ctx.checks["rows_sane"] = rows_sane(sweep);
  if (c.bound != "none") ctx.checks["bound_dominance"] = dominance;
  ctx.extra_manifest["slope"] = fit.slope;
  ctx.extra_manifest["r_squared"] = fit.r_squared;
}

void run_stability_kind(const ExperimentConfig& c, RunContext& ctx) {
  ProblemPtr problem;
  Regularizer reg = Regularizer::none();
  if (c.stability_suite == "scsc") {
    Rng rng(c.problem_seed);
    QuadraticSpec spec = random_quadratic_spec(
        c.dim_x, c.dim_y, c.mu_x, c.mu_y, c.noise_scale,
        c.box_radius_x > 0.0 ? c.box_radius_x : 4.0,
        c.box_radius_y > 0.0 ? c.box_radius_y : 4.0, rng);
    problem = make_quadratic_scsc(spec);
  } else if (c.stability_suite == "regularized") {
    problem = make_game_instance(named_payoff(c), c.payoff_noise).problem;
    reg = diameter_regularizer(problem->constants_l2(), c.loo_n);
  } else {
    throw std::invalid_argument(
        "stability_suite must be 'scsc' or 'regularized'");
  }

  const SolverConfig cfg = solver_from(c);
  const double gap_tol_hint = c.gap_tol > 0.0 ? c.gap_tol : 1e-8;
  const double slack = 10.0 * gap_tol_hint;

  const StabilityGeometry geometry = c.stability_suite == "regularized"
                                         ? StabilityGeometry::kEuclidean
                                         : StabilityGeometry::kProblemNorms;
  std::string csv = "n,metric,mean,std_error,bound,replications,seed\n";
  int violations = 0;
  int invalid = 0;
  const std::string metric_name = "stability_" + c.stability_suite;
  for (int t = 0; t < c.trials; ++t) {
    const int index = t % c.loo_n;
    const std::uint64_t trial_seed =
        Rng::stream(c.master_seed, static_cast<std::uint64_t>(t))();
    const StabilityTrial trial =
        run_loo_trial(problem, c.loo_n, reg, index, trial_seed, cfg, geometry);
    if (!trial.valid) {
      ++invalid;
      continue;
    }
    if (!trial.passes(slack)) ++violations;
    csv += std::to_string(c.loo_n) + "," + metric_name + "," +
           format_double(trial.lhs) + ",0," + format_double(trial.rhs) + ",1," +
           std::to_string(trial_seed) + "\n";
  }
  ctx.results_csv = csv;
  ctx.checks["zero_violations"] = violations == 0;
  ctx.extra_manifest["violations"] = violations;
  ctx.extra_manifest["invalid_trials"] = invalid;
  ctx.extra_manifest["slack"] = slack;
}

void run_mdp_kind(const ExperimentConfig& c, RunContext& ctx) {
  const Assembled assembled = assemble_problem(c);
  if (!assembled.mdp)
    throw std::invalid_argument("kind=mdp requires problem=mdp");

  MdpExperimentSpec spec;
  spec.n_grid = c.n_grid;
  spec.replications = c.replications;
  spec.master_seed = c.master_seed;
  spec.solver = solver_from(c);
  spec.threads = c.threads;
  const MdpExperimentResult result = run_mdp_experiment(*assembled.mdp, spec);

  ctx.results_csv = sweep_csv({result.sweep});
  const RateFit fit = fit_sweep(result.sweep, 0.0);
  ctx.fits_csv += fits_row("regret", fit, "na");

  const MdpProblemPtr problem =
      make_mdp_saddle_problem(*assembled.mdp, result.constants);
  const MomentEnvelopeReport envelopes = check_mdp_moment_envelopes(
      problem, 20, 2000, Rng::stream(c.master_seed, 0xfeed)());

  const RateRow& first = result.sweep.rows.front();
  const RateRow& last = result.sweep.rows.back();
  const double joint_se = std::sqrt(first.std_error * first.std_error +
                                    last.std_error * last.std_error);

  ctx.checks["eq18_identity"] = result.max_eq18_residual <= 1e-8;
  ctx.checks["regret_nonnegative"] = result.min_regret >= -1e-8;
  ctx.checks["consistency"] =
      result.sweep.rows.size() < 2 || last.mean < first.mean - 3.0 * joint_se;
  ctx.checks["moment_envelope_x"] = envelopes.ratio_x() <= 10.0;
  ctx.checks["moment_envelope_y"] = envelopes.grad_y_moment <= envelopes.grad_y_envelope;
  ctx.extra_manifest["t_mix"] = result.constants.t_mix;
  ctx.extra_manifest["tau"] = result.constants.tau;
  ctx.extra_manifest["policies_scanned"] = result.constants.policy_set_size;
  ctx.extra_manifest["v_star"] = result.exact.v_star;
  ctx.extra_manifest["max_eq18_residual"] = result.max_eq18_residual;
  ctx.extra_manifest["slope"] = fit.slope;
}

void run_game_kind(const ExperimentConfig& c, RunContext& ctx) {
  const Assembled assembled = assemble_problem(c);
  if (!assembled.game)
    throw std::invalid_argument("kind=game requires problem=game");

  GameExperimentSpec spec;
  spec.n_grid = c.n_grid;
  spec.replications = c.replications;
  spec.master_seed = c.master_seed;
  spec.solver = solver_from(c);
  spec.threads = c.threads;
  const RateSweep sweep = run_game_experiment(*assembled.game, spec);

  ctx.results_csv = sweep_csv({sweep});
  const RateFit fit = fit_sweep(sweep, 0.0);
  const bool dominance = bound_dominates(sweep);
  ctx.fits_csv += fits_row("eps_nash", fit, dominance ? "pass" : "fail");

  const RateRow& first = sweep.rows.front();
  const RateRow& last = sweep.rows.back();
  const double joint_se = std::sqrt(first.std_error * first.std_error +
                                    last.std_error * last.std_error);
  ctx.checks["bound_dominance"] = dominance;
  ctx.checks["consistency"] =
      sweep.rows.size() < 2 || last.mean < first.mean - 3.0 * joint_se;
  ctx.extra_manifest["slope"] = fit.slope;
}

void run_solve_kind(const ExperimentConfig& c, RunContext& ctx) {
  const Assembled assembled = assemble_problem(c);
  ProblemPtr problem = assembled.problem;
  if (!problem && assembled.mdp) {
    const MdpConstants constants = estimate_mixing_constants(
        *assembled.mdp, 64, Rng::stream(c.master_seed, 0xbeef)());
    problem = make_mdp_saddle_problem(*assembled.mdp, constants);
  }

  SampleSet samples =
      problem->draw_samples(Rng::stream(c.master_seed, 0)(), c.solve_n);
  const RegularizerRule rule = resolve_regularizer(c);
  const Regularizer reg =
      rule ? rule(*problem, c.solve_n) : Regularizer::none();
  const EmpiricalObjective objective(problem, std::move(samples), reg);
  const SolverConfig cfg = solver_from(c);
  const SaddleSolution sol = solve_saddle(objective, cfg);

  std::string csv = "n,metric,mean,std_error,bound,replications,seed\n";
  csv += std::to_string(c.solve_n) + ",certified_gap," +
         format_double(sol.certified_gap) + ",0," +
         format_double(resolve_gap_tol(objective, cfg)) + ",1," +
         std::to_string(c.master_seed) + "\n";
  ctx.results_csv = csv;
  ctx.checks["converged"] = sol.converged;
  ctx.extra_manifest["certified_gap"] = sol.certified_gap;
  ctx.extra_manifest["iterations"] = sol.iterations;
  if (assembled.game) {
    const NashCertificate cert =
        epsilon_nash_gap(assembled.game->true_payoff, sol.x_hat, sol.y_hat);
    ctx.extra_manifest["epsilon_nash"] = cert.epsilon;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config text format
// ---------------------------------------------------------------------------

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "kind = " << kind << "\n";
  out << "problem = " << problem << "\n";
  out << "problem_seed = " << problem_seed << "\n";
  out << "dim_x = " << dim_x << "\n";
  out << "dim_y = " << dim_y << "\n";
  out << "mu_x = " << format_double(mu_x) << "\n";
  out << "mu_y = " << format_double(mu_y) << "\n";
  out << "noise_scale = " << format_double(noise_scale) << "\n";
  out << "box_radius_x = " << format_double(box_radius_x) << "\n";
  out << "box_radius_y = " << format_double(box_radius_y) << "\n";
  out << "payoff = " << payoff << "\n";
  out << "payoff_rows = " << payoff_rows << "\n";
  out << "payoff_cols = " << payoff_cols << "\n";
  out << "payoff_noise = " << format_double(payoff_noise) << "\n";
  out << "num_states = " << num_states << "\n";
  out << "num_actions = " << num_actions << "\n";
  out << "min_transition_prob = " << format_double(min_transition_prob) << "\n";
  out << "reward_noise = " << format_double(reward_noise) << "\n";
  out << "n_grid = " << format_grid(n_grid) << "\n";
  out << "replications = " << replications << "\n";
  out << "master_seed = " << master_seed << "\n";
  out << "metric = " << metric << "\n";
  out << "regularizer = " << regularizer << "\n";
  out << "bound = " << bound << "\n";
  out << "trials = " << trials << "\n";
  out << "loo_n = " << loo_n << "\n";
  out << "stability_suite = " << stability_suite << "\n";
  out << "solve_n = " << solve_n << "\n";
  out << "max_iter = " << max_iter << "\n";
  out << "gap_tol = " << format_double(gap_tol) << "\n";
  out << "threads = " << threads << "\n";
  return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(line_no, "expected 'key = value'");

    auto as_int = [&](const std::string& v) {
      try {
        return std::stoi(v);
      } catch (const std::exception&) {
        throw ConfigError(line_no, "bad integer '" + v + "' for " + key);
      }
    };
    auto as_u64 = [&](const std::string& v) -> std::uint64_t {
      try {
        return std::stoull(v);
      } catch (const std::exception&) {
        throw ConfigError(line_no, "bad seed '" + v + "' for " + key);
      }
    };
    auto as_double = [&](const std::string& v) {
      try {
        return std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError(line_no, "bad number '" + v + "' for " + key);
      }
    };

    if (key == "kind") c.kind = value;
    else if (key == "problem") c.problem = value;
    else if (key == "problem_seed") c.problem_seed = as_u64(value);
    else if (key == "dim_x") c.dim_x = as_int(value);
    else if (key == "dim_y") c.dim_y = as_int(value);
    else if (key == "mu_x") c.mu_x = as_double(value);
    else if (key == "mu_y") c.mu_y = as_double(value);
    else if (key == "noise_scale") c.noise_scale = as_double(value);
    else if (key == "box_radius_x") c.box_radius_x = as_double(value);
    else if (key == "box_radius_y") c.box_radius_y = as_double(value);
    else if (key == "payoff") c.payoff = value;
    else if (key == "payoff_rows") c.payoff_rows = as_int(value);
    else if (key == "payoff_cols") c.payoff_cols = as_int(value);
    else if (key == "payoff_noise") c.payoff_noise = as_double(value);
    else if (key == "num_states") c.num_states = as_int(value);
    else if (key == "num_actions") c.num_actions = as_int(value);
    else if (key == "min_transition_prob") c.min_transition_prob = as_double(value);
    else if (key == "reward_noise") c.reward_noise = as_double(value);
    else if (key == "n_grid") c.n_grid = parse_grid(value, line_no);
    else if (key == "replications") c.replications = as_int(value);
    else if (key == "master_seed") c.master_seed = as_u64(value);
    else if (key == "metric") c.metric = value;
    else if (key == "regularizer") c.regularizer = value;
    else if (key == "bound") c.bound = value;
    else if (key == "trials") c.trials = as_int(value);
    else if (key == "loo_n") c.loo_n = as_int(value);
    else if (key == "stability_suite") c.stability_suite = value;
    else if (key == "solve_n") c.solve_n = as_int(value);
    else if (key == "max_iter") c.max_iter = as_int(value);
    else if (key == "gap_tol") c.gap_tol = as_double(value);
    else if (key == "threads") c.threads = as_int(value);
    else throw ConfigError(line_no, "unknown key '" + key + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

int run_config(const ExperimentConfig& raw_config, const RunOptions& options) {
  ExperimentConfig config = raw_config;
  if (options.seed_override) config.master_seed = *options.seed_override;
  if (options.threads) config.threads = *options.threads;

  const std::filesystem::path out_dir(options.out_dir);
  std::filesystem::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  RunContext ctx;
  json manifest;
  manifest["version"] = kVersion;
  manifest["kind"] = config.kind;
  manifest["master_seed"] = config.master_seed;
  manifest["threads"] = config.threads;
  manifest["config"] = config.to_text();

  std::string status = "ok";
  std::string error;
  try {
    if (config.kind == "rate-sweep") run_rate_sweep_kind(config, ctx);
    else if (config.kind == "stability") run_stability_kind(config, ctx);
    else if (config.kind == "mdp") run_mdp_kind(config, ctx);
    else if (config.kind == "game") run_game_kind(config, ctx);
    else if (config.kind == "solve") run_solve_kind(config, ctx);
    else throw std::invalid_argument("unknown experiment kind '" + config.kind + "'");
  } catch (const std::exception& e) {
    status = "error";
    error = e.what();
  }

  bool all_passed = status == "ok";
  json checks = json::object();
  for (const auto& [name, passed] : ctx.checks) {
    checks[name] = passed;
    all_passed = all_passed && passed;
  }
  if (status == "ok" && !all_passed) status = "failed_checks";

  const auto t1 = std::chrono::steady_clock::now();
  manifest["status"] = status;
  if (!error.empty()) manifest["error"] = error;
  manifest["checks"] = checks;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();
  for (const auto& [key, value] : ctx.extra_manifest.items())
    manifest[key] = value;

  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  if (status != "error") {
    write_file(out_dir / "results.csv", ctx.results_csv);
    write_file(out_dir / "fits.csv", ctx.fits_csv);
  }

  if (status == "error") {
    std::fprintf(stderr, "espkit: %s\n", error.c_str());
    return 1;
  }
  return all_passed ? 0 : 1;
}

}  // namespace esp
