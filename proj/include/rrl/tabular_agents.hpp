#pragma once

#include "rrl/evaluate.hpp"
#include "rrl/neighbor_table.hpp"
#include "rrl/replay.hpp"

namespace rrl {

struct Transition {
  int s = 0;
  int a = 0;
  double c = 0.0;
  int s_next = 0;
  bool done = false;
};

// One shared-state step of the two agents: the robust agent takes a from s,
// the pessimistic agent takes u from the same s, and the environment is left
// at the robust successor.
struct DoubleAgentTransition {
  int s = 0;
  int a = 0;
  double c = 0.0;
  int s_next = 0;
  bool done = false;
  int u = 0;
  double c_p = 0.0;  // negated cost seen by the pessimistic agent
  int x_next = 0;
  bool done_p = false;
};

// Single-sample value updates, cost-minimizing throughout. A terminal
// successor contributes no bootstrap on its branch.
void q_learning_update(QTable& q, const Transition& t, double alpha, double gamma);

double table_vmax(const QTable& q);  // max over states of min over actions

// Worst case taken over all states via the externally maintained vmax.
void robust_q_update(QTable& q, const Transition& t, double alpha, double gamma,
                     double R, double vmax);

// Worst case taken over the estimated neighbor set of s.
void arq_update(QTable& q, const Transition& t, const NeighborTable& nhat,
                double alpha, double gamma, double R);

void prq_pessimistic_update(QTable& q_phi, const DoubleAgentTransition& t,
                            double alpha, double gamma);

// Pessimistic successor x' stands in for the neighbor-set maximizer.
void prq_robust_update(QTable& q_pi, const DoubleAgentTransition& t, double alpha,
                       double gamma, double R);

int eps_greedy(const QTable& q, int s, double eps, std::mt19937_64& rng);

DoubleAgentTransition double_agent_step(TabularEnv& env, int s, int a, int u);

// Runs `steps` shared-state steps from a fresh reset, appending one tuple per
// step; the robust trajectory resets on termination and carries on.
int double_agent_sample(TabularEnv& env, const TabularActor& robust_policy,
                        const TabularActor& pessimistic_policy, int steps,
                        ReplayBuffer<DoubleAgentTransition>& buffer,
                        std::uint64_t seed);

enum class TabularAlgo { q_learning, robust_q, arq, prq };

const char* tabular_algo_name(TabularAlgo algo);

struct TabularTrainConfig {
  double alpha = 0.01;
  double gamma = 0.99;
  double R = 0.0;
  int episodes = 1000;
  int max_steps = 500;
  int batch_size = 32;
  int buffer_capacity = 20000;
  int warmup_steps = 500;
  bool online = false;  // update from the fresh transition, skip the buffer
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::uint64_t seed = 0;
  int log_every = 50;          // episodes between evaluation checkpoints
  int log_eval_episodes = 10;  // greedy episodes per checkpoint
};

struct TrainLogRow {
  int episode = 0;
  long step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct TabularTrainResult {
  QTable q;      // the table the greedy policy reads
  QTable q_phi;  // pessimistic table (prq only)
  NeighborTable nhat;
  std::vector<TrainLogRow> log;
  std::vector<int> visit_counts;                 // times each state was acted from
  std::vector<DoubleAgentTransition> transitions;  // buffer dump (prq only)
  long total_steps = 0;
  double train_seconds = 0.0;
};

TabularTrainResult train_tabular(TabularEnv& env, TabularAlgo algo,
                                 const TabularTrainConfig& cfg);

TabularTrainResult q_learning_train(TabularEnv& env, const TabularTrainConfig& cfg);
TabularTrainResult robust_q_train(TabularEnv& env, const TabularTrainConfig& cfg);
TabularTrainResult arq_train(TabularEnv& env, const TabularTrainConfig& cfg);
TabularTrainResult prq_train(TabularEnv& env, const TabularTrainConfig& cfg);

struct MaxStateReport {
  std::vector<int> argmax_state;       // maximizer of V over N_s, -1 if skipped
  std::vector<int> pessimistic_next;   // modal nominal successor of the
                                       // pessimistic greedy action, -1 if skipped
  std::vector<bool> considered;
  double agreement = 0.0;              // over considered states
};

// Compares the analytic neighbor-set maximizer of V (from q_pi) against the
// state the pessimistic greedy action actually reaches under the nominal
// kernel. mask selects the states to score (visited states, typically);
// terminal/absorbing states are skipped either way.
MaxStateReport max_state_report(const QTable& q_pi, const NeighborTable& neighbors,
                                const QTable& q_phi, const TabularMdp& mdp,
                                const std::vector<bool>* mask = nullptr);

}  // namespace rrl
