#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rrl/harness.hpp"
#include "rrl/robust_bellman.hpp"
#include "rrl/svg_plot.hpp"

using namespace rrl;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

struct TrainOpts {
  std::string config_path;
  std::string algo;
  std::string out_dir;
};

int cmd_train(const TrainOpts& o, bool all_algos) {
  ExperimentConfig cfg = experiment_from_config(load_config_file(o.config_path));
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  RunResult r;
  if (all_algos) {
    r = run_sweep(cfg);
  } else {
    r = run_experiment(cfg, o.algo.empty() ? cfg.algos.front() : o.algo);
  }
  print_warnings(r.warnings);
  std::printf("run dir: %s\n", r.dir.c_str());
  std::printf("instances completed: %d\n", r.instances_completed);
  std::fputs(r.aggregate_csv.c_str(), stdout);
  return 0;
}

struct EvalOpts {
  std::string run_dir;
  int instance = 0;
  int episodes = 0;  // 0: use the run's configured count
  std::vector<double> probs;
  std::string param;
  std::vector<double> scales;
  std::string out_path;
};

int cmd_eval(const EvalOpts& o) {
  ExperimentConfig cfg =
      experiment_from_config(load_config_file(o.run_dir + "/config.ini"));
  if (!o.probs.empty() && !o.scales.empty()) {
    throw std::invalid_argument("eval: give either --probs or --scales, not both");
  }
  if (!o.probs.empty()) {
    cfg.sweep_kind = PerturbSpec::Kind::action;
    cfg.action_probs = o.probs;
  } else if (!o.scales.empty()) {
    if (o.param.empty()) throw std::invalid_argument("eval: --scales needs --param");
    cfg.sweep_kind = PerturbSpec::Kind::parameter;
    cfg.param_name = o.param;
    cfg.param_scales = o.scales;
  }
  const int episodes = o.episodes > 0 ? o.episodes : cfg.eval_episodes;
  cfg.eval_episodes = episodes;
  auto problems = validate_experiment(cfg);
  if (!problems.empty()) {
    std::string all;
    for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
    throw std::invalid_argument(all);
  }

  const bool action_sweep = cfg.sweep_kind == PerturbSpec::Kind::action;
  const std::vector<double>& points = action_sweep ? cfg.action_probs : cfg.param_scales;
  const std::string kind = action_sweep ? "action" : "parameter";
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(o.instance);
  const std::string idir = o.run_dir + "/instance_" + std::to_string(o.instance);

  std::string csv =
      "# schema: rrl-eval-v1\n"
      "perturb_kind,perturb_value,mean_return,std_return,episodes,truncated\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    const std::uint64_t eval_seed = mix_seed(seed, 9000 + static_cast<std::uint64_t>(k));
    EvalReport rep;
    if (env_is_tabular(cfg.env_id)) {
      const TabularPolicy policy = greedy_policy(load_qtable(idir + "/qtable.csv"));
      auto env = wrap_action_perturbation(make_tabular_env(cfg.env_id), points[k]);
      rep = evaluate_policy(*env, policy, episodes, cfg.tab.max_steps, eval_seed);
    } else {
      std::unique_ptr<PhysicsEnv> env;
      if (action_sweep) {
        env = wrap_action_perturbation(make_physics_env(cfg.env_id), points[k]);
      } else {
        PerturbSpec spec;
        spec.kind = PerturbSpec::Kind::parameter;
        spec.parameter_scales = {{cfg.param_name, points[k]}};
        auto base = make_physics_env(cfg.env_id);
        env = wrap_parameter_perturbation(*base, spec);
      }
      if (make_physics_env(cfg.env_id)->n_actions() > 0) {
        rep = evaluate_policy(*env, make_q_actor(load_net(idir + "/net_q_pi.txt")),
                              episodes, env->step_limit(), eval_seed);
      } else {
        rep = evaluate_policy(*env,
                              make_ddpg_actor(load_net(idir + "/net_actor_pi.txt")),
                              episodes, env->step_limit(), eval_seed);
      }
    }
    csv += kind + "," + fmt(points[k]) + "," + fmt(rep.mean_return) + "," +
           fmt(rep.std_return) + "," + std::to_string(rep.episodes) + "," +
           std::to_string(rep.truncated) + "\n";
  }
  if (o.out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text_file(o.out_path, csv);
    std::printf("wrote %s\n", o.out_path.c_str());
  }
  return 0;
}

struct OracleOpts {
  std::string mdp_path;
  std::string set_kind = "adjacent";
  double R = 0.0;
  double tol = 1e-8;
  int max_iters = 200000;
  std::string out_path;
  std::string assert_path;
  double atol = 1e-6;
};

int cmd_oracle(const OracleOpts& o) {
  const TabularMdp mdp = load_mdp(o.mdp_path);
  const SetKind kind = set_kind_from_name(o.set_kind);
  UncertaintySetSpec spec = UncertaintySetSpec::nominal();
  if (kind == SetKind::r_contamination) spec = UncertaintySetSpec::contamination(o.R);
  if (kind == SetKind::adjacent) spec = UncertaintySetSpec::adjacent(o.R);
  const NeighborTable neighbors = true_neighbor_sets(mdp);
  const ViResult vi = robust_value_iteration(mdp, spec, neighbors, o.tol, o.max_iters);
  std::fprintf(stderr, "%s after %d iterations, residual %.3g\n",
               vi.converged ? "converged" : "NOT converged", vi.iterations,
               vi.residual);

  std::vector<double> v(static_cast<std::size_t>(mdp.n_states));
  for (int s = 0; s < mdp.n_states; ++s) {
    double best = vi.q(s, 0);
    for (int a = 1; a < mdp.n_actions; ++a) best = std::min(best, vi.q(s, a));
    v[static_cast<std::size_t>(s)] = best;
  }

  std::string csv = "# schema: rrl-values-v1\nstate,value\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    csv += std::to_string(s) + "," + fmt(v[static_cast<std::size_t>(s)]) + "\n";
  }
  if (!o.out_path.empty()) {
    write_text_file(o.out_path, csv);
    std::fprintf(stderr, "wrote %s\n", o.out_path.c_str());
  } else if (o.assert_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  }

  if (!o.assert_path.empty()) {
    CsvTable ref = load_csv_file(o.assert_path);
    const int si = ref.column_index("state");
    const int vi_col = ref.column_index("value");
    if (si < 0 || vi_col < 0) {
      throw std::invalid_argument("oracle: reference needs 'state' and 'value' columns");
    }
    if (ref.rows.size() != v.size()) {
      std::fprintf(stderr, "assert FAILED: %zu reference rows for %zu states\n",
                   ref.rows.size(), v.size());
      return 3;
    }
    double worst = 0.0;
    int worst_state = -1;
    for (const auto& row : ref.rows) {
      const int s = std::stoi(row[static_cast<std::size_t>(si)]);
      const double want = std::stod(row[static_cast<std::size_t>(vi_col)]);
      const double err = std::fabs(v[static_cast<std::size_t>(s)] - want);
      if (err > worst) {
        worst = err;
        worst_state = s;
      }
    }
    if (worst > o.atol) {
      std::fprintf(stderr, "assert FAILED: state %d off by %.3g (atol %.3g)\n",
                   worst_state, worst, o.atol);
      return 3;
    }
    std::fprintf(stderr, "assert passed: worst |diff| %.3g within %.3g\n", worst,
                 o.atol);
  }
  return 0;
}

struct PlotOpts {
  std::string csv_path;
  std::string out_path;
  PlotOptions options;
};

int cmd_plot(const PlotOpts& o) {
  CsvTable table = load_csv_file(o.csv_path);
  std::vector<std::string> warnings;
  const std::string svg = render_line_chart(table, o.options, &warnings);
  print_warnings(warnings);
  write_text_file(o.out_path, svg);
  std::printf("wrote %s\n", o.out_path.c_str());
  return 0;
}

struct GradCheckOpts {
  int instances = 100;
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

double policy_objective(const MlpNet& actor, const MlpNet& critic,
                        const std::vector<std::vector<double>>& states) {
  double total = 0.0;
  for (const auto& s : states) {
    const double a = forward(actor, s)[0];
    std::vector<double> sa = s;
    sa.push_back(a);
    total += forward(critic, sa)[0];
  }
  return total / static_cast<double>(states.size());
}

int cmd_grad_check(const GradCheckOpts& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 5);
  double worst = 0.0;
  std::string worst_where = "none";
  bool ok = true;

  for (int i = 0; i < o.instances; ++i) {
    const int in = dim(rng), hidden = dim(rng), out = dim(rng);
    const bool scaled = i % 4 == 3;
    MlpNet net = make_mlp({in, hidden, out}, rng(),
                          scaled ? OutputKind::tanh_scaled : OutputKind::linear, -2.0,
                          2.0);
    std::vector<double> input(static_cast<std::size_t>(in));
    std::vector<double> target(static_cast<std::size_t>(out));
    for (double& x : input) x = unit(rng);
    for (double& y : target) y = unit(rng);
    GradCheckReport rep = grad_check(net, input, target, o.tol);
    if (rep.worst_rel_err > worst) {
      worst = rep.worst_rel_err;
      worst_where = "net " + std::to_string(i) + " " + rep.worst_location;
    }
    ok = ok && rep.pass;
  }

  for (int i = 0; i < std::max(1, o.instances / 4); ++i) {
    const int od = dim(rng);
    MlpNet actor = make_mlp({od, dim(rng), 1}, rng(), OutputKind::tanh_scaled, -2.0, 2.0);
    MlpNet critic = make_mlp({od + 1, dim(rng), 1}, rng());
    std::vector<std::vector<double>> states(3, std::vector<double>(od));
    for (auto& s : states)
      for (double& x : s) x = unit(rng);
    GradBundle grads = zero_grads(actor);
    ddpg_policy_grad(actor, critic, states, grads);
    const double h = 1e-5;
    for (int probe = 0; probe < 6; ++probe) {
      const std::size_t layer =
          static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(actor.layer_count()));
      const std::size_t j = static_cast<std::size_t>(
          rng() % static_cast<std::uint64_t>(actor.w[layer].size()));
      MlpNet lo = actor, hi = actor;
      lo.w[layer][j] -= h;
      hi.w[layer][j] += h;
      const double fd =
          (policy_objective(hi, critic, states) - policy_objective(lo, critic, states)) /
          (2.0 * h);
      const double got = grads.w[layer][j];
      const double rel = std::fabs(got - fd) / std::max({1.0, std::fabs(got), std::fabs(fd)});
      if (rel > worst) {
        worst = rel;
        worst_where = "policy grad net " + std::to_string(i);
      }
      ok = ok && rel <= o.tol;
    }
  }

  std::printf("grad check: %d value nets and %d policy nets, worst rel err %.3g (%s)\n",
              o.instances, std::max(1, o.instances / 4), worst, worst_where.c_str());
  if (!ok) {
    std::fprintf(stderr, "grad check FAILED: tolerance %.3g\n", o.tol);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust reinforcement learning laboratory"};
  app.require_subcommand(1);

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train one algorithm and evaluate it");
  train->add_option("--config", train_opts.config_path, "experiment config file")
      ->required();
  train->add_option("--algo", train_opts.algo, "override the configured algorithm");
  train->add_option("--out", train_opts.out_dir, "override the run directory");

  TrainOpts sweep_opts;
  CLI::App* sweep =
      app.add_subcommand("sweep", "train every configured algorithm and merge results");
  sweep->add_option("--config", sweep_opts.config_path, "experiment config file")
      ->required();
  sweep->add_option("--out", sweep_opts.out_dir, "override the run directory");

  EvalOpts eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "re-evaluate a trained run");
  eval->add_option("--run", eval_opts.run_dir, "run directory")->required();
  eval->add_option("--instance", eval_opts.instance, "instance index");
  eval->add_option("--episodes", eval_opts.episodes, "episodes per point");
  eval->add_option("--probs", eval_opts.probs, "action perturbation probabilities")
      ->delimiter(',');
  eval->add_option("--param", eval_opts.param, "physics parameter to scale");
  eval->add_option("--scales", eval_opts.scales, "parameter scale points")
      ->delimiter(',');
  eval->add_option("--out", eval_opts.out_path, "write the CSV here instead of stdout");

  OracleOpts oracle_opts;
  CLI::App* oracle =
      app.add_subcommand("oracle", "robust value iteration on a saved model");
  oracle->add_option("--mdp", oracle_opts.mdp_path, "model file")->required();
  oracle->add_option("--set", oracle_opts.set_kind,
                     "uncertainty set: nominal, rc, adjacent");
  oracle->add_option("--R", oracle_opts.R, "contamination level");
  oracle->add_option("--tol", oracle_opts.tol, "convergence tolerance");
  oracle->add_option("--max-iters", oracle_opts.max_iters, "iteration cap");
  oracle->add_option("--out", oracle_opts.out_path, "write state values here");
  oracle->add_option("--assert", oracle_opts.assert_path,
                     "compare against this reference CSV");
  oracle->add_option("--atol", oracle_opts.atol, "assert tolerance");

  PlotOpts plot_opts;
  CLI::App* plot = app.add_subcommand("plot", "render a results CSV as an SVG chart");
  plot->add_option("--csv", plot_opts.csv_path, "input CSV")->required();
  plot->add_option("--out", plot_opts.out_path, "output SVG")->required();
  plot->add_option("--x", plot_opts.options.x_col, "x column");
  plot->add_option("--y", plot_opts.options.y_col, "y column");
  plot->add_option("--std", plot_opts.options.std_col, "spread column");
  plot->add_option("--group", plot_opts.options.group_col, "series column");
  plot->add_option("--title", plot_opts.options.title, "chart title");
  plot->add_option("--x-label", plot_opts.options.x_label, "x axis label");
  plot->add_option("--y-label", plot_opts.options.y_label, "y axis label");
  plot->add_option("--width", plot_opts.options.width, "svg width");
  plot->add_option("--height", plot_opts.options.height, "svg height");
  plot->add_option("--band-scale", plot_opts.options.band_scale,
                   "band half-width in spread units");

  std::string policy_run;
  bool policy_max_states = false;
  int policy_instance = 0;
  CLI::App* show = app.add_subcommand("show-policy", "render a tabular greedy policy");
  show->add_option("--run", policy_run, "run directory")->required();
  show->add_flag("--max-states", policy_max_states,
                 "show worst-case bootstrap targets instead of actions");
  show->add_option("--instance", policy_instance, "instance index");

  GradCheckOpts grad_opts;
  CLI::App* grad = app.add_subcommand("grad-check", "verify analytic gradients");
  grad->add_option("--instances", grad_opts.instances, "random networks to test");
  grad->add_option("--tol", grad_opts.tol, "relative error tolerance");
  grad->add_option("--seed", grad_opts.seed, "rng seed");

  std::vector<std::string> runtime_dirs;
  CLI::App* runtime = app.add_subcommand("runtime-table", "compare training wall-clock");
  runtime->add_option("--runs", runtime_dirs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, false);
    if (sweep->parsed()) return cmd_train(sweep_opts, true);
    if (eval->parsed()) return cmd_eval(eval_opts);
    if (oracle->parsed()) return cmd_oracle(oracle_opts);
    if (plot->parsed()) return cmd_plot(plot_opts);
    if (show->parsed()) {
      std::fputs(show_policy(policy_run, policy_max_states, policy_instance).c_str(),
                 stdout);
      return 0;
    }
    if (grad->parsed()) return cmd_grad_check(grad_opts);
    if (runtime->parsed()) {
      RuntimeTable table = compare_runtime(runtime_dirs);
      std::fputs(format_runtime_table(table).c_str(), stdout);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
