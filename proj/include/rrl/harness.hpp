#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rrl/config.hpp"
#include "rrl/deep_agents.hpp"
#include "rrl/perturb.hpp"
#include "rrl/tabular_agents.hpp"

namespace rrl {

// One experiment: a single environment, one or more algorithms, `instances`
// independently seeded training runs each, evaluated across a perturbation
// sweep. Instance i trains with seed base_seed + i.
struct ExperimentConfig {
  std::string name = "run";
  std::string env_id;              // cliffwalking | frozenlake | frozenlake-slippery |
                                   // cartpole | pendulum
  std::vector<std::string> algos;  // tabular or deep names, matching the env family
  int instances = 5;
  int eval_episodes = 100;
  std::uint64_t base_seed = 1;
  std::string out_dir;  // empty: runs/<name>

  TabularTrainConfig tab;
  DeepTrainConfig deep;

  PerturbSpec::Kind sweep_kind = PerturbSpec::Kind::action;
  std::vector<double> action_probs = {0.0};  // action sweep points
  std::string param_name;                    // parameter sweep: which knob
  std::vector<double> param_scales;          // and its scale points
};

bool env_is_tabular(const std::string& env_id);
bool known_env(const std::string& env_id);
std::unique_ptr<TabularEnv> make_tabular_env(const std::string& env_id);
std::unique_ptr<PhysicsEnv> make_physics_env(const std::string& env_id);

TabularAlgo tabular_algo_from_name(const std::string& name);  // throws on unknown
DeepAlgo deep_algo_from_name(const std::string& name);        // throws on unknown

// Builds an ExperimentConfig from [experiment]/[train]/[perturb] sections.
// Unknown keys, unknown env/algo names, and family mismatches throw
// std::invalid_argument.
ExperimentConfig experiment_from_config(const ConfigMap& cfg);
// Fully resolved snapshot; parses back to an equivalent config.
std::string experiment_to_config_text(const ExperimentConfig& cfg);
std::vector<std::string> validate_experiment(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& data);
std::string file_checksum(const std::string& path);  // fnv1a64 as 16 hex digits

struct RunResult {
  std::string dir;
  std::string aggregate_csv;  // contents of <dir>/aggregate.csv
  std::string manifest_path;
  int instances_completed = 0;
  std::vector<std::string> warnings;
};

// Trains one algorithm for every instance seed, evaluates the greedy policy
// at every sweep point, and writes into the run directory:
//   config.ini                resolved snapshot of this run
//   instance_<i>/             q-tables or nets, trainlog.csv, eval.csv
//   aggregate.csv             per-point mean/std across completed instances
//   manifest.json             seeds, statuses, timings, file checksums
// Diverged instances are recorded and skipped with a warning; if none
// complete, throws std::runtime_error. Reruns with the same config produce
// byte-identical aggregate.csv.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& algo);

// run_experiment for each configured algorithm into <out_dir>/<algo>, then
// merges the per-algorithm aggregates into <out_dir>/aggregate.csv.
RunResult run_sweep(const ExperimentConfig& cfg);

// Re-checks every file listed in a run's manifest. Returns one line per
// problem (missing manifest, missing file, checksum mismatch); empty = clean.
std::vector<std::string> verify_manifest(const std::string& run_dir);

// ASCII map of a tabular run's greedy policy (arrows < v > ^, G goal,
// H hazard). With max_states, instead shows where each state's worst-case
// bootstrap points: the maximizer of V over the nominal neighbor set
// (o self, T non-adjacent jump). Throws std::runtime_error for physics runs.
std::string show_policy(const std::string& run_dir, bool max_states = false,
                        int instance = 0);

struct RuntimeRow {
  std::string run_dir;
  std::string algo;
  std::string env;
  int instances = 0;
  double mean_seconds = 0.0;
  double total_seconds = 0.0;
};

struct RuntimeTable {
  std::vector<RuntimeRow> rows;
  std::vector<std::string> warnings;
};

// Wall-clock training time per run directory, read from manifests. Sweep
// directories expand to their per-algorithm sub-runs; directories without a
// manifest are skipped with a warning.
RuntimeTable compare_runtime(const std::vector<std::string>& run_dirs);
std::string format_runtime_table(const RuntimeTable& table);

}  // namespace rrl
