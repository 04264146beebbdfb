#include "rrl/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rrl/evaluate.hpp"
#include "rrl/grid_env.hpp"
#include "rrl/physics_env.hpp"
#include "rrl/robust_bellman.hpp"
#include "rrl/svg_plot.hpp"

#ifndef RRL_GIT_REV
#define RRL_GIT_REV "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace rrl {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::vector<std::string> parts;
  parts.reserve(xs.size());
  for (double x : xs) parts.push_back(fmt(x));
  return join(parts, ",");
}

constexpr const char* kAggregateHeader =
    "# schema: rrl-aggregate-v1\n"
    "algo,env,perturb_kind,perturb_value,mean_return,std_return,instances\n";

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys = {"name",          "env",      "algos",
                                             "instances",     "eval_episodes",
                                             "base_seed",     "out_dir"};
  return keys;
}

const std::set<std::string>& tabular_train_keys() {
  static const std::set<std::string> keys = {
      "alpha",     "gamma",          "R",         "episodes",  "max_steps",
      "batch_size", "buffer_capacity", "warmup_steps", "online", "eps_start",
      "eps_end",   "log_every",      "log_eval_episodes"};
  return keys;
}

const std::set<std::string>& deep_train_keys() {
  static const std::set<std::string> keys = {
      "gamma",        "R",           "lr_q",       "lr_actor",  "tau",
      "hidden",       "batch_size",  "buffer_capacity", "warmup_steps",
      "total_steps",  "eps_start",   "eps_end",    "eps_fraction",
      "noise_scale",  "vmax_capacity", "random_pessimist", "log_every",
      "log_eval_episodes"};
  return keys;
}

const std::set<std::string>& perturb_keys() {
  static const std::set<std::string> keys = {"kind", "action_probs", "param", "scales"};
  return keys;
}

void reject_unknown_keys(const ConfigMap& cfg, const std::string& section,
                         const std::set<std::string>& allowed,
                         const std::string& note) {
  for (const auto& key : cfg.keys(section)) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: [" + section + "] unknown key '" + key +
                                  "'" + note);
    }
  }
}

json config_snapshot_json(const ExperimentConfig& cfg) {
  ConfigMap parsed = parse_config_text(experiment_to_config_text(cfg));
  json out = json::object();
  for (const auto& [section, kv] : parsed.sections()) {
    json sec = json::object();
    for (const auto& [key, value] : kv) sec[key] = value;
    out[section] = sec;
  }
  return out;
}

struct PointStats {
  std::vector<double> instance_means;
};

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double pop_std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mu = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

std::string eval_csv_text(const std::vector<std::array<std::string, 6>>& rows) {
  std::string out =
      "# schema: rrl-eval-v1\n"
      "perturb_kind,perturb_value,mean_return,std_return,episodes,truncated\n";
  for (const auto& r : rows) {
    out += r[0] + "," + r[1] + "," + r[2] + "," + r[3] + "," + r[4] + "," + r[5] + "\n";
  }
  return out;
}

std::string tabular_trainlog_text(const std::vector<TrainLogRow>& log) {
  std::string out =
      "# schema: rrl-trainlog-tabular-v1\n"
      "episode,step,mean_return,std_return\n";
  for (const auto& row : log) {
    out += std::to_string(row.episode) + "," + std::to_string(row.step) + "," +
           fmt(row.mean_return) + "," + fmt(row.std_return) + "\n";
  }
  return out;
}

std::string deep_trainlog_text(const std::vector<DeepLogRow>& log) {
  std::string out =
      "# schema: rrl-trainlog-deep-v1\n"
      "step,train_return,eval_return_mean,eval_return_std,"
      "loss_q_pi,loss_q_phi,loss_actor_pi,loss_actor_phi\n";
  for (const auto& row : log) {
    out += std::to_string(row.step) + "," + fmt(row.train_return) + "," +
           fmt(row.eval_mean) + "," + fmt(row.eval_std) + "," + fmt(row.loss_q_pi) +
           "," + fmt(row.loss_q_phi) + "," + fmt(row.loss_actor_pi) + "," +
           fmt(row.loss_actor_phi) + "\n";
  }
  return out;
}

// Writes content and records the file under its run-relative path.
void put_file(const fs::path& run_dir, const fs::path& rel, const std::string& content,
              std::map<std::string, std::string>& index) {
  fs::path full = run_dir / rel;
  write_text_file(full.string(), content);
  index[rel.generic_string()] = file_checksum(full.string());
}

json files_json(const std::map<std::string, std::string>& index) {
  json out = json::object();
  for (const auto& [rel, sum] : index) out[rel] = sum;
  return out;
}

}  // namespace

bool env_is_tabular(const std::string& env_id) {
  return env_id == "cliffwalking" || env_id == "frozenlake" ||
         env_id == "frozenlake-slippery";
}

bool known_env(const std::string& env_id) {
  return env_is_tabular(env_id) || env_id == "cartpole" || env_id == "pendulum";
}

std::unique_ptr<TabularEnv> make_tabular_env(const std::string& env_id) {
  if (env_id == "cliffwalking") return make_cliffwalking();
  if (env_id == "frozenlake") return make_frozenlake(false);
  if (env_id == "frozenlake-slippery") return make_frozenlake(true);
  throw std::invalid_argument("unknown tabular environment: " + env_id);
}

std::unique_ptr<PhysicsEnv> make_physics_env(const std::string& env_id) {
  if (env_id == "cartpole") return make_cartpole();
  if (env_id == "pendulum") return make_pendulum();
  throw std::invalid_argument("unknown physics environment: " + env_id);
}

TabularAlgo tabular_algo_from_name(const std::string& name) {
  for (TabularAlgo a : {TabularAlgo::q_learning, TabularAlgo::robust_q,
                        TabularAlgo::arq, TabularAlgo::prq}) {
    if (name == tabular_algo_name(a)) return a;
  }
  throw std::invalid_argument("unknown tabular algorithm: " + name);
}

DeepAlgo deep_algo_from_name(const std::string& name) {
  for (DeepAlgo a : {DeepAlgo::dqn, DeepAlgo::r_dqn, DeepAlgo::pr_dqn, DeepAlgo::ddpg,
                     DeepAlgo::r_ddpg, DeepAlgo::pr_ddpg}) {
    if (name == deep_algo_name(a)) return a;
  }
  throw std::invalid_argument("unknown deep algorithm: " + name);
}

ExperimentConfig experiment_from_config(const ConfigMap& cfg) {
  for (const auto& section : cfg.section_names()) {
    if (section != "experiment" && section != "train" && section != "perturb") {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
  }
  reject_unknown_keys(cfg, "experiment", experiment_keys(), "");

  ExperimentConfig out;
  out.name = cfg.get("experiment", "name", out.name);
  out.env_id = cfg.require("experiment", "env");
  if (!known_env(out.env_id)) {
    throw std::invalid_argument("config: [experiment] env: unknown environment '" +
                                out.env_id + "'");
  }
  out.algos = cfg.get_words("experiment", "algos");
  out.instances = static_cast<int>(cfg.get_int("experiment", "instances", out.instances));
  out.eval_episodes =
      static_cast<int>(cfg.get_int("experiment", "eval_episodes", out.eval_episodes));
  out.base_seed = static_cast<std::uint64_t>(
      cfg.get_int("experiment", "base_seed", static_cast<long>(out.base_seed)));
  out.out_dir = cfg.get("experiment", "out_dir", out.out_dir);

  const bool tabular = env_is_tabular(out.env_id);
  if (tabular) {
    reject_unknown_keys(cfg, "train", tabular_train_keys(),
                        " for a tabular environment");
    TabularTrainConfig& t = out.tab;
    t.alpha = cfg.get_number("train", "alpha", t.alpha);
    t.gamma = cfg.get_number("train", "gamma", t.gamma);
    t.R = cfg.get_number("train", "R", t.R);
    t.episodes = static_cast<int>(cfg.get_int("train", "episodes", t.episodes));
    t.max_steps = static_cast<int>(cfg.get_int("train", "max_steps", t.max_steps));
    t.batch_size = static_cast<int>(cfg.get_int("train", "batch_size", t.batch_size));
    t.buffer_capacity =
        static_cast<int>(cfg.get_int("train", "buffer_capacity", t.buffer_capacity));
    t.warmup_steps =
        static_cast<int>(cfg.get_int("train", "warmup_steps", t.warmup_steps));
    t.online = cfg.get_flag("train", "online", t.online);
    t.eps_start = cfg.get_number("train", "eps_start", t.eps_start);
    t.eps_end = cfg.get_number("train", "eps_end", t.eps_end);
    t.log_every = static_cast<int>(cfg.get_int("train", "log_every", t.log_every));
    t.log_eval_episodes = static_cast<int>(
        cfg.get_int("train", "log_eval_episodes", t.log_eval_episodes));
  } else {
    reject_unknown_keys(cfg, "train", deep_train_keys(), " for a physics environment");
    DeepTrainConfig& d = out.deep;
    d.gamma = cfg.get_number("train", "gamma", d.gamma);
    d.R = cfg.get_number("train", "R", d.R);
    d.lr_q = cfg.get_number("train", "lr_q", d.lr_q);
    d.lr_actor = cfg.get_number("train", "lr_actor", d.lr_actor);
    d.tau = cfg.get_number("train", "tau", d.tau);
    d.hidden = static_cast<int>(cfg.get_int("train", "hidden", d.hidden));
    d.batch_size = static_cast<int>(cfg.get_int("train", "batch_size", d.batch_size));
    d.buffer_capacity =
        static_cast<int>(cfg.get_int("train", "buffer_capacity", d.buffer_capacity));
    d.warmup_steps =
        static_cast<int>(cfg.get_int("train", "warmup_steps", d.warmup_steps));
    d.total_steps =
        static_cast<int>(cfg.get_int("train", "total_steps", d.total_steps));
    d.eps_start = cfg.get_number("train", "eps_start", d.eps_start);
    d.eps_end = cfg.get_number("train", "eps_end", d.eps_end);
    d.eps_fraction = cfg.get_number("train", "eps_fraction", d.eps_fraction);
    d.noise_scale = cfg.get_number("train", "noise_scale", d.noise_scale);
    d.vmax_capacity =
        static_cast<int>(cfg.get_int("train", "vmax_capacity", d.vmax_capacity));
    d.random_pessimist = cfg.get_flag("train", "random_pessimist", d.random_pessimist);
    d.log_every = static_cast<int>(cfg.get_int("train", "log_every", d.log_every));
    d.log_eval_episodes = static_cast<int>(
        cfg.get_int("train", "log_eval_episodes", d.log_eval_episodes));
  }

  reject_unknown_keys(cfg, "perturb", perturb_keys(), "");
  std::string kind = cfg.get("perturb", "kind", "action");
  if (kind == "action") {
    out.sweep_kind = PerturbSpec::Kind::action;
    if (cfg.has("perturb", "action_probs")) {
      out.action_probs = cfg.get_numbers("perturb", "action_probs");
    }
  } else if (kind == "parameter") {
    out.sweep_kind = PerturbSpec::Kind::parameter;
    out.param_name = cfg.require("perturb", "param");
    out.param_scales = cfg.get_numbers("perturb", "scales");
  } else {
    throw std::invalid_argument(
        "config: [perturb] kind: expected 'action' or 'parameter', got '" + kind + "'");
  }

  auto problems = validate_experiment(out);
  if (!problems.empty()) {
    throw std::invalid_argument("config: " + join(problems, "; "));
  }
  return out;
}

std::string experiment_to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "# resolved experiment snapshot\n";
  out << "[experiment]\n";
  out << "name = " << cfg.name << "\n";
  out << "env = " << cfg.env_id << "\n";
  out << "algos = " << join(cfg.algos, ",") << "\n";
  out << "instances = " << cfg.instances << "\n";
  out << "eval_episodes = " << cfg.eval_episodes << "\n";
  out << "base_seed = " << cfg.base_seed << "\n";
  if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << "\n";
  out << "\n[train]\n";
  if (env_is_tabular(cfg.env_id)) {
    const TabularTrainConfig& t = cfg.tab;
    out << "alpha = " << fmt(t.alpha) << "\n";
    out << "gamma = " << fmt(t.gamma) << "\n";
    out << "R = " << fmt(t.R) << "\n";
    out << "episodes = " << t.episodes << "\n";
    out << "max_steps = " << t.max_steps << "\n";
    out << "batch_size = " << t.batch_size << "\n";
    out << "buffer_capacity = " << t.buffer_capacity << "\n";
    out << "warmup_steps = " << t.warmup_steps << "\n";
    out << "online = " << (t.online ? "true" : "false") << "\n";
    out << "eps_start = " << fmt(t.eps_start) << "\n";
    out << "eps_end = " << fmt(t.eps_end) << "\n";
    out << "log_every = " << t.log_every << "\n";
    out << "log_eval_episodes = " << t.log_eval_episodes << "\n";
  } else {
    const DeepTrainConfig& d = cfg.deep;
    out << "gamma = " << fmt(d.gamma) << "\n";
    out << "R = " << fmt(d.R) << "\n";
    out << "lr_q = " << fmt(d.lr_q) << "\n";
    out << "lr_actor = " << fmt(d.lr_actor) << "\n";
    out << "tau = " << fmt(d.tau) << "\n";
    out << "hidden = " << d.hidden << "\n";
    out << "batch_size = " << d.batch_size << "\n";
    out << "buffer_capacity = " << d.buffer_capacity << "\n";
    out << "warmup_steps = " << d.warmup_steps << "\n";
    out << "total_steps = " << d.total_steps << "\n";
    out << "eps_start = " << fmt(d.eps_start) << "\n";
    out << "eps_end = " << fmt(d.eps_end) << "\n";
    out << "eps_fraction = " << fmt(d.eps_fraction) << "\n";
    out << "noise_scale = " << fmt(d.noise_scale) << "\n";
    out << "vmax_capacity = " << d.vmax_capacity << "\n";
    out << "random_pessimist = " << (d.random_pessimist ? "true" : "false") << "\n";
    out << "log_every = " << d.log_every << "\n";
    out << "log_eval_episodes = " << d.log_eval_episodes << "\n";
  }
  out << "\n[perturb]\n";
  if (cfg.sweep_kind == PerturbSpec::Kind::action) {
    out << "kind = action\n";
    out << "action_probs = " << join_numbers(cfg.action_probs) << "\n";
  } else {
    out << "kind = parameter\n";
    out << "param = " << cfg.param_name << "\n";
    out << "scales = " << join_numbers(cfg.param_scales) << "\n";
  }
  return out.str();
}

std::vector<std::string> validate_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  if (!known_env(cfg.env_id)) {
    problems.push_back("experiment: unknown env '" + cfg.env_id + "'");
    return problems;  // everything else depends on the env family
  }
  const bool tabular = env_is_tabular(cfg.env_id);
  if (cfg.algos.empty()) problems.push_back("experiment: algos must not be empty");
  for (const auto& algo : cfg.algos) {
    try {
      if (tabular) {
        tabular_algo_from_name(algo);
      } else {
        deep_algo_from_name(algo);
      }
    } catch (const std::invalid_argument&) {
      problems.push_back("experiment: algo '" + algo + "' does not run on env '" +
                         cfg.env_id + "'");
    }
  }
  if (cfg.instances < 1) problems.push_back("experiment: instances must be >= 1");
  if (cfg.eval_episodes < 1)
    problems.push_back("experiment: eval_episodes must be >= 1");

  if (tabular) {
    const TabularTrainConfig& t = cfg.tab;
    if (!(t.alpha > 0.0) || t.alpha > 1.0)
      problems.push_back("train: alpha must be in (0, 1]");
    if (!(t.gamma > 0.0) || !(t.gamma < 1.0))
      problems.push_back("train: gamma must be in (0, 1)");
    if (t.R < 0.0 || t.R > 1.0) problems.push_back("train: R must be in [0, 1]");
    if (t.episodes < 1) problems.push_back("train: episodes must be >= 1");
    if (t.max_steps < 1) problems.push_back("train: max_steps must be >= 1");
    if (t.batch_size < 1) problems.push_back("train: batch_size must be >= 1");
    if (t.buffer_capacity < t.batch_size)
      problems.push_back("train: buffer_capacity must be >= batch_size");
    if (t.warmup_steps < 0) problems.push_back("train: warmup_steps must be >= 0");
    if (t.eps_start < 0.0 || t.eps_start > 1.0 || t.eps_end < 0.0 || t.eps_end > 1.0)
      problems.push_back("train: eps_start and eps_end must be in [0, 1]");
    if (t.eps_end > t.eps_start)
      problems.push_back("train: eps_end must not exceed eps_start");
    if (t.log_every < 1) problems.push_back("train: log_every must be >= 1");
    if (t.log_eval_episodes < 1)
      problems.push_back("train: log_eval_episodes must be >= 1");
  } else {
    try {
      validate_deep_config(cfg.deep);
    } catch (const std::invalid_argument& e) {
      problems.push_back(e.what());
    }
  }

  if (cfg.sweep_kind == PerturbSpec::Kind::action) {
    if (cfg.action_probs.empty())
      problems.push_back("perturb: action_probs must not be empty");
    for (double p : cfg.action_probs) {
      if (p < 0.0 || p > 1.0) {
        problems.push_back("perturb: action_probs entries must be in [0, 1]");
        break;
      }
    }
  } else {
    if (tabular) {
      problems.push_back("perturb: parameter sweeps need a physics environment");
    }
    if (cfg.param_name.empty()) problems.push_back("perturb: param must be named");
    if (cfg.param_scales.empty())
      problems.push_back("perturb: scales must not be empty");
    for (double s : cfg.param_scales) {
      if (!(s > 0.0)) {
        problems.push_back("perturb: scales entries must be > 0");
        break;
      }
    }
    if (!tabular && !cfg.param_name.empty() && !cfg.param_scales.empty()) {
      try {
        PerturbSpec spec;
        spec.kind = PerturbSpec::Kind::parameter;
        spec.parameter_scales = {{cfg.param_name, cfg.param_scales.front()}};
        auto base = make_physics_env(cfg.env_id);
        wrap_parameter_perturbation(*base, spec);
      } catch (const std::invalid_argument& e) {
        problems.push_back(std::string("perturb: ") + e.what());
      }
    }
  }
  return problems;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string file_checksum(const std::string& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_text_file(path))));
  return buf;
}

RunResult run_experiment(const ExperimentConfig& cfg_in, const std::string& algo) {
  ExperimentConfig cfg = cfg_in;
  cfg.algos = {algo};
  auto problems = validate_experiment(cfg);
  if (!problems.empty()) throw std::invalid_argument(join(problems, "; "));

  const bool tabular = env_is_tabular(cfg.env_id);
  fs::path dir = cfg.out_dir.empty() ? fs::path("runs") / cfg.name
                                     : fs::path(cfg.out_dir);
  cfg.out_dir = dir.generic_string();
  fs::create_directories(dir);

  RunResult out;
  out.dir = dir.generic_string();

  std::map<std::string, std::string> top_files;
  put_file(dir, "config.ini", experiment_to_config_text(cfg), top_files);

  json manifest;
  manifest["schema"] = "rrl-manifest-v1";
  manifest["name"] = cfg.name;
  manifest["env"] = cfg.env_id;
  manifest["algo"] = algo;
  manifest["code_version"] = RRL_GIT_REV;
  manifest["config"] = config_snapshot_json(cfg);
  manifest["instances"] = json::array();

  const bool action_sweep = cfg.sweep_kind == PerturbSpec::Kind::action;
  const std::vector<double>& points = action_sweep ? cfg.action_probs : cfg.param_scales;
  const std::string kind_name = action_sweep ? "action" : "parameter";

  std::vector<PointStats> stats(points.size());

  for (int i = 0; i < cfg.instances; ++i) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(i);
    const fs::path rel_idir = "instance_" + std::to_string(i);
    fs::create_directories(dir / rel_idir);

    std::map<std::string, std::string> files;
    double train_seconds = 0.0;
    bool completed = true;
    std::string note;
    std::vector<std::array<std::string, 6>> eval_rows;

    if (tabular) {
      auto env = make_tabular_env(cfg.env_id);
      TabularTrainConfig tc = cfg.tab;
      tc.seed = seed;
      const TabularAlgo ta = tabular_algo_from_name(algo);
      TabularTrainResult res = train_tabular(*env, ta, tc);
      train_seconds = res.train_seconds;

      {
        fs::path p = dir / rel_idir / "qtable.csv";
        save_qtable(res.q, p.string());
        files[(rel_idir / "qtable.csv").generic_string()] = file_checksum(p.string());
      }
      if (ta == TabularAlgo::prq) {
        fs::path p = dir / rel_idir / "qtable_phi.csv";
        save_qtable(res.q_phi, p.string());
        files[(rel_idir / "qtable_phi.csv").generic_string()] =
            file_checksum(p.string());
      }
      put_file(dir, rel_idir / "trainlog.csv", tabular_trainlog_text(res.log), files);

      const TabularPolicy policy = greedy_policy(res.q);
      for (std::size_t k = 0; k < points.size(); ++k) {
        auto eval_env = wrap_action_perturbation(make_tabular_env(cfg.env_id), points[k]);
        EvalReport rep = evaluate_policy(*eval_env, policy, cfg.eval_episodes,
                                         cfg.tab.max_steps,
                                         mix_seed(seed, 9000 + static_cast<std::uint64_t>(k)));
        eval_rows.push_back({kind_name, fmt(points[k]), fmt(rep.mean_return),
                             fmt(rep.std_return), std::to_string(rep.episodes),
                             std::to_string(rep.truncated)});
        stats[k].instance_means.push_back(rep.mean_return);
      }
    } else {
      auto env = make_physics_env(cfg.env_id);
      DeepTrainConfig dc = cfg.deep;
      dc.seed = seed;
      const DeepAlgo da = deep_algo_from_name(algo);
      DeepTrainResult res = deep_train(*env, da, dc);
      train_seconds = res.train_seconds;

      const bool discrete = deep_algo_discrete(da);
      const bool paired = da == DeepAlgo::pr_dqn || da == DeepAlgo::pr_ddpg;
      auto save = [&](const char* name, const MlpNet& net) {
        fs::path p = dir / rel_idir / name;
        save_net(net, p.string());
        files[(rel_idir / name).generic_string()] = file_checksum(p.string());
      };
      save("net_q_pi.txt", res.q_pi);
      if (paired) save("net_q_phi.txt", res.q_phi);
      if (!discrete) {
        save("net_actor_pi.txt", res.actor_pi);
        if (paired) save("net_actor_phi.txt", res.actor_phi);
      }
      put_file(dir, rel_idir / "trainlog.csv", deep_trainlog_text(res.log), files);

      if (res.diverged) {
        completed = false;
        note = res.divergence_note;
        out.warnings.push_back("instance " + std::to_string(i) + " diverged (" + note +
                               "); excluded from aggregation");
      } else {
        for (std::size_t k = 0; k < points.size(); ++k) {
          std::unique_ptr<PhysicsEnv> eval_env;
          if (action_sweep) {
            eval_env = wrap_action_perturbation(make_physics_env(cfg.env_id), points[k]);
          } else {
            PerturbSpec spec;
            spec.kind = PerturbSpec::Kind::parameter;
            spec.parameter_scales = {{cfg.param_name, points[k]}};
            auto base = make_physics_env(cfg.env_id);
            eval_env = wrap_parameter_perturbation(*base, spec);
          }
          const int max_steps = eval_env->step_limit();
          const std::uint64_t eval_seed =
              mix_seed(seed, 9000 + static_cast<std::uint64_t>(k));
          EvalReport rep;
          if (discrete) {
            rep = evaluate_policy(*eval_env, make_q_actor(res.q_pi), cfg.eval_episodes,
                                  max_steps, eval_seed);
          } else {
            rep = evaluate_policy(*eval_env, make_ddpg_actor(res.actor_pi),
                                  cfg.eval_episodes, max_steps, eval_seed);
          }
          eval_rows.push_back({kind_name, fmt(points[k]), fmt(rep.mean_return),
                               fmt(rep.std_return), std::to_string(rep.episodes),
                               std::to_string(rep.truncated)});
          stats[k].instance_means.push_back(rep.mean_return);
        }
      }
    }

    if (completed) {
      put_file(dir, rel_idir / "eval.csv", eval_csv_text(eval_rows), files);
      ++out.instances_completed;
    }

    json inst;
    inst["index"] = i;
    inst["seed"] = seed;
    inst["status"] = completed ? "ok" : "diverged";
    if (!note.empty()) inst["note"] = note;
    inst["train_seconds"] = train_seconds;
    inst["files"] = files_json(files);
    manifest["instances"].push_back(inst);
  }

  std::string agg;
  if (out.instances_completed > 0) {
    agg = kAggregateHeader;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& xs = stats[k].instance_means;
      agg += algo + "," + cfg.env_id + "," + kind_name + "," + fmt(points[k]) + "," +
             fmt(mean_of(xs)) + "," + fmt(pop_std_of(xs)) + "," +
             std::to_string(xs.size()) + "\n";
    }
    put_file(dir, "aggregate.csv", agg, top_files);
  }

  manifest["files"] = files_json(top_files);
  manifest["warnings"] = out.warnings;
  fs::path manifest_path = dir / "manifest.json";
  write_text_file(manifest_path.string(), manifest.dump(2) + "\n");
  out.manifest_path = manifest_path.generic_string();

  if (out.instances_completed == 0) {
    throw std::runtime_error("run: no instance completed in " + out.dir);
  }

  out.aggregate_csv = agg;
  return out;
}

RunResult run_sweep(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  auto problems = validate_experiment(cfg);
  if (!problems.empty()) throw std::invalid_argument(join(problems, "; "));

  fs::path dir = cfg.out_dir.empty() ? fs::path("runs") / cfg.name
                                     : fs::path(cfg.out_dir);
  cfg.out_dir = dir.generic_string();
  fs::create_directories(dir);

  RunResult out;
  out.dir = dir.generic_string();

  std::map<std::string, std::string> top_files;
  put_file(dir, "config.ini", experiment_to_config_text(cfg), top_files);

  json manifest;
  manifest["schema"] = "rrl-manifest-v1";
  manifest["name"] = cfg.name;
  manifest["env"] = cfg.env_id;
  manifest["algo"] = join(cfg.algos, ",");
  manifest["code_version"] = RRL_GIT_REV;
  manifest["config"] = config_snapshot_json(cfg);
  manifest["instances"] = json::array();
  manifest["sub_runs"] = json::array();

  std::string agg = kAggregateHeader;
  for (const auto& algo : cfg.algos) {
    ExperimentConfig sub = cfg;
    sub.out_dir = (dir / algo).generic_string();
    RunResult r = run_experiment(sub, algo);
    std::istringstream lines(r.aggregate_csv);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("algo,", 0) == 0) continue;
      agg += line + "\n";
    }
    manifest["sub_runs"].push_back(algo);
    for (const auto& w : r.warnings) out.warnings.push_back(algo + ": " + w);
    out.instances_completed += r.instances_completed;
  }

  put_file(dir, "aggregate.csv", agg, top_files);
  manifest["files"] = files_json(top_files);
  manifest["warnings"] = out.warnings;
  fs::path manifest_path = dir / "manifest.json";
  write_text_file(manifest_path.string(), manifest.dump(2) + "\n");

  out.aggregate_csv = agg;
  out.manifest_path = manifest_path.generic_string();
  return out;
}

std::vector<std::string> verify_manifest(const std::string& run_dir) {
  std::vector<std::string> problems;
  fs::path mp = fs::path(run_dir) / "manifest.json";
  if (!fs::exists(mp)) {
    problems.push_back("no manifest.json in " + run_dir);
    return problems;
  }
  json m;
  try {
    m = json::parse(read_text_file(mp.string()));
  } catch (const std::exception& e) {
    problems.push_back(std::string("manifest.json: ") + e.what());
    return problems;
  }
  for (const char* key : {"schema", "env", "algo", "instances", "files"}) {
    if (!m.contains(key)) {
      problems.push_back(std::string("manifest missing field: ") + key);
    }
  }
  auto check_files = [&](const json& files) {
    if (!files.is_object()) return;
    for (const auto& [rel, sum] : files.items()) {
      fs::path p = fs::path(run_dir) / rel;
      if (!fs::exists(p)) {
        problems.push_back("missing file: " + rel);
      } else if (file_checksum(p.string()) != sum.get<std::string>()) {
        problems.push_back("checksum mismatch: " + rel);
      }
    }
  };
  if (m.contains("files")) check_files(m["files"]);
  if (m.contains("instances") && m["instances"].is_array()) {
    for (const auto& inst : m["instances"]) {
      if (inst.contains("files")) check_files(inst["files"]);
    }
  }
  if (m.contains("sub_runs") && m["sub_runs"].is_array()) {
    for (const auto& sr : m["sub_runs"]) {
      const std::string name = sr.get<std::string>();
      for (const auto& p : verify_manifest((fs::path(run_dir) / name).string())) {
        problems.push_back(name + ": " + p);
      }
    }
  }
  return problems;
}

namespace {

char direction_char(int from, int to, int cols) {
  if (to == from) return 'o';
  if (to == from - 1 && from % cols != 0) return '<';
  if (to == from + 1 && to % cols != 0) return '>';
  if (to == from - cols) return '^';
  if (to == from + cols) return 'v';
  return 'T';
}

}  // namespace

std::string show_policy(const std::string& run_dir, bool max_states, int instance) {
  const fs::path dir(run_dir);
  ConfigMap cfg = load_config_file((dir / "config.ini").string());
  const std::string env_id = cfg.require("experiment", "env");
  if (!env_is_tabular(env_id)) {
    throw std::runtime_error("show-policy: '" + env_id +
                             "' is not a tabular environment; only grid runs "
                             "can be rendered");
  }
  const fs::path qpath =
      dir / ("instance_" + std::to_string(instance)) / "qtable.csv";
  if (!fs::exists(qpath)) {
    throw std::runtime_error("show-policy: missing " + qpath.generic_string());
  }
  const QTable q = load_qtable(qpath.string());
  const GridSpec spec = env_id == "cliffwalking"
                            ? cliffwalking_spec()
                            : frozenlake_spec(env_id == "frozenlake-slippery");
  if (q.n_states != spec.rows * spec.cols || q.n_actions != 4) {
    throw std::runtime_error("show-policy: q-table shape does not match the grid");
  }

  std::vector<char> cell(static_cast<std::size_t>(q.n_states), '.');
  if (max_states) {
    const double gamma = cfg.get_number("train", "gamma", 0.99);
    auto env = make_tabular_env(env_id);
    const TabularMdp mdp = env->to_mdp(gamma);
    const NeighborTable neighbors = true_neighbor_sets(mdp);
    std::vector<double> v(static_cast<std::size_t>(q.n_states));
    for (int s = 0; s < q.n_states; ++s) {
      double best = q(s, 0);
      for (int a = 1; a < q.n_actions; ++a) best = std::min(best, q(s, a));
      v[static_cast<std::size_t>(s)] = best;
    }
    for (int s = 0; s < q.n_states; ++s) {
      int target = -1;
      for (int t : neighbors.neighbors_of(s)) {
        if (target < 0 || v[static_cast<std::size_t>(t)] >
                              v[static_cast<std::size_t>(target)]) {
          target = t;
        }
      }
      cell[static_cast<std::size_t>(s)] =
          target < 0 ? '.' : direction_char(s, target, spec.cols);
    }
  } else {
    static const char arrows[4] = {'<', 'v', '>', '^'};
    const TabularPolicy policy = greedy_policy(q);
    for (int s = 0; s < q.n_states; ++s) {
      cell[static_cast<std::size_t>(s)] = arrows[policy.actions[static_cast<std::size_t>(s)]];
    }
  }
  for (const auto& [hr, hc] : spec.hazards) {
    cell[static_cast<std::size_t>(hr * spec.cols + hc)] = 'H';
  }
  cell[static_cast<std::size_t>(spec.goal_row * spec.cols + spec.goal_col)] = 'G';

  std::string out;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      out += cell[static_cast<std::size_t>(r * spec.cols + c)];
    }
    out += '\n';
  }
  return out;
}

RuntimeTable compare_runtime(const std::vector<std::string>& run_dirs) {
  RuntimeTable table;
  for (const auto& d : run_dirs) {
    fs::path mp = fs::path(d) / "manifest.json";
    if (!fs::exists(mp)) {
      table.warnings.push_back("no manifest.json in " + d + ", skipped");
      continue;
    }
    json m;
    try {
      m = json::parse(read_text_file(mp.string()));
    } catch (const std::exception& e) {
      table.warnings.push_back(d + ": " + e.what() + ", skipped");
      continue;
    }
    if (m.contains("sub_runs") && m["sub_runs"].is_array() && !m["sub_runs"].empty()) {
      std::vector<std::string> subs;
      for (const auto& sr : m["sub_runs"]) {
        subs.push_back((fs::path(d) / sr.get<std::string>()).generic_string());
      }
      RuntimeTable inner = compare_runtime(subs);
      table.rows.insert(table.rows.end(), inner.rows.begin(), inner.rows.end());
      table.warnings.insert(table.warnings.end(), inner.warnings.begin(),
                            inner.warnings.end());
      continue;
    }
    RuntimeRow row;
    row.run_dir = d;
    row.algo = m.value("algo", "?");
    row.env = m.value("env", "?");
    if (m.contains("instances") && m["instances"].is_array()) {
      for (const auto& inst : m["instances"]) {
        ++row.instances;
        row.total_seconds += inst.value("train_seconds", 0.0);
      }
    }
    row.mean_seconds =
        row.instances > 0 ? row.total_seconds / row.instances : 0.0;
    table.rows.push_back(row);
  }
  return table;
}

std::string format_runtime_table(const RuntimeTable& table) {
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back({"run", "algo", "env", "instances", "mean_s", "total_s"});
  for (const auto& row : table.rows) {
    char mean_buf[32], total_buf[32];
    std::snprintf(mean_buf, sizeof mean_buf, "%.2f", row.mean_seconds);
    std::snprintf(total_buf, sizeof total_buf, "%.2f", row.total_seconds);
    cells.push_back({row.run_dir, row.algo, row.env, std::to_string(row.instances),
                     mean_buf, total_buf});
  }
  std::array<std::size_t, 6> width{};
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < 6; ++j) width[j] = std::max(width[j], row[j].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < 6; ++j) {
      out += row[j];
      if (j + 1 < 6) out += std::string(width[j] - row[j].size() + 2, ' ');
    }
    out += '\n';
  }
  for (const auto& w : table.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace rrl
