#pragma once

#include <cstdint>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include "rrl/env.hpp"
#include "rrl/evaluate.hpp"
#include "rrl/neural.hpp"

namespace rrl {

// One double-agent sample from a physics environment. Both branches start
// from the same decision state: the robust action a leads to obs_next and
// the pessimistic action u (taken from a rewound copy of the same state)
// leads to obs_x with negated cost c_p. Internal states are stored so a
// transition can be replayed through the simulator and checked.
struct DeepTransition {
  std::vector<double> obs;
  int a = 0;
  double a_cont = 0.0;
  double c = 0.0;
  std::vector<double> obs_next;
  bool done = false;

  int u = 0;
  double u_cont = 0.0;
  double c_p = 0.0;
  std::vector<double> obs_x;
  bool done_p = false;

  std::vector<double> state;       // internal state at the decision point
  std::vector<double> state_next;  // internal state after the robust action
  std::vector<double> state_x;     // internal state after the pessimistic action
};

// FIFO window over recently seen bootstrap values with a max query, used by
// the worst-over-window baselines in place of a neighbor model.
class VmaxBuffer {
 public:
  explicit VmaxBuffer(std::size_t capacity = 10000);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }

  void push(double v);
  // Largest stored value, or fallback when nothing has been pushed yet.
  double max_or(double fallback) const;

 private:
  std::size_t capacity_;
  std::deque<double> order_;
  std::multiset<double> sorted_;
};

// Smallest action value at an observation, with the index attaining it.
double q_min_value(const MlpNet& q, const std::vector<double>& obs);
int q_argmin(const MlpNet& q, const std::vector<double>& obs);

// Critic value of a (state, action) pair; the action is appended to the
// observation to form the critic input.
double critic_value(const MlpNet& critic, const std::vector<double>& obs, double action);

// Temporal-difference regression targets, all in cost convention. Terminal
// branches bootstrap to zero independently on each side.
double dqn_target(const DeepTransition& t, const MlpNet& q_target, double gamma);
double pr_dqn_pessimistic_target(const DeepTransition& t, const MlpNet& q_phi_target,
                                 double gamma);
double pr_dqn_robust_target(const DeepTransition& t, const MlpNet& q_pi_target,
                            double gamma, double R);
// Worst case taken over a sliding window of recent bootstrap values instead
// of the sampled pessimistic branch. Falls back to the nominal bootstrap
// when the window is empty.
double r_dqn_target(const DeepTransition& t, const MlpNet& q_pi_target, double gamma,
                    double R, const VmaxBuffer& vmax);

struct DdpgTargetPair {
  double y_pi = 0.0;   // robust critic target
  double y_phi = 0.0;  // pessimistic critic target
};

double ddpg_target(const DeepTransition& t, const MlpNet& critic_target,
                   const MlpNet& actor_target, double gamma);
DdpgTargetPair pr_ddpg_targets(const DeepTransition& t, const MlpNet& critic_pi_target,
                               const MlpNet& critic_phi_target,
                               const MlpNet& actor_pi_target,
                               const MlpNet& actor_phi_target, double gamma, double R);
double r_ddpg_target(const DeepTransition& t, const MlpNet& critic_target,
                     const MlpNet& actor_target, double gamma, double R,
                     const VmaxBuffer& vmax);

// Mean squared-error loss 0.5*(Q(s,a) - y)^2 over a batch, accumulating the
// parameter gradient of that mean into grads. Returns the loss.
double q_batch_loss_grad(const MlpNet& q, const std::vector<const DeepTransition*>& batch,
                         const std::vector<double>& y, bool pessimistic_branch,
                         GradBundle& grads);
double critic_batch_loss_grad(const MlpNet& critic,
                              const std::vector<const DeepTransition*>& batch,
                              const std::vector<double>& y, bool pessimistic_branch,
                              GradBundle& grads);

// Gradient of mean_i Q(x_i, actor(x_i)) with respect to the actor parameters,
// obtained by chaining the critic's action-input gradient through the actor.
// Minimizing this mean pushes the actor toward low-cost actions. Returns the
// mean critic value.
double ddpg_policy_grad(const MlpNet& actor, const MlpNet& critic,
                        const std::vector<std::vector<double>>& states,
                        GradBundle& grads);

enum class DeepAlgo { dqn, r_dqn, pr_dqn, ddpg, r_ddpg, pr_ddpg };

std::string deep_algo_name(DeepAlgo algo);
bool deep_algo_discrete(DeepAlgo algo);

struct DeepTrainConfig {
  double gamma = 0.99;
  double R = 0.0;
  double lr_q = 1e-3;
  double lr_actor = 1e-3;
  double tau = 0.005;
  int hidden = 64;  // width of both hidden layers
  int batch_size = 64;
  int buffer_capacity = 50000;
  int warmup_steps = 1000;
  long total_steps = 50000;
  double eps_start = 1.0;  // DQN-family exploration
  double eps_end = 0.05;
  double eps_fraction = 0.1;  // fraction of total_steps spent decaying
  double noise_scale = 0.1;   // DDPG exploration noise, relative to half the action range
  std::size_t vmax_capacity = 10000;
  bool random_pessimist = false;  // draw u uniformly, freeze pessimistic nets
  bool keep_transitions = false;  // dump the replay buffer into the result
  std::uint64_t seed = 0;
  long log_every = 2000;  // steps between evaluation checkpoints
  int log_eval_episodes = 5;
};

void validate_deep_config(const DeepTrainConfig& cfg);

struct DeepLogRow {
  long step = 0;
  double train_return = 0.0;  // return of the last finished training episode
  double eval_mean = 0.0;
  double eval_std = 0.0;
  double loss_q_pi = 0.0;
  double loss_q_phi = 0.0;
  double loss_actor_pi = 0.0;
  double loss_actor_phi = 0.0;
};

struct DeepTrainResult {
  DeepAlgo algo = DeepAlgo::dqn;
  // Value nets: per-action values for the DQN family, critics for DDPG.
  MlpNet q_pi, q_pi_target;
  MlpNet q_phi, q_phi_target;
  // Actors, used by the DDPG family only.
  MlpNet actor_pi, actor_pi_target;
  MlpNet actor_phi, actor_phi_target;
  std::vector<DeepLogRow> log;
  std::vector<DeepTransition> transitions;  // filled when keep_transitions is set
  long total_steps = 0;
  double train_seconds = 0.0;
  bool diverged = false;
  long divergence_step = -1;
  std::string divergence_note;
};

// Runs one training instance of the given algorithm on env. The double-agent
// variants branch every stored transition through a rewound copy of the
// simulator state; baselines mirror the robust branch into the pessimistic
// fields so every stored sample is well formed. A non-finite optimizer step
// aborts the run and reports the step it happened at.
DeepTrainResult deep_train(PhysicsEnv& env, DeepAlgo algo, const DeepTrainConfig& cfg);

// Greedy evaluation heads for a finished run.
DiscreteActor make_q_actor(const MlpNet& q);
ContinuousActor make_ddpg_actor(const MlpNet& actor);

}  // namespace rrl
