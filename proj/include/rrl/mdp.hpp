#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rrl {

// Finite MDP with dense transition kernel and cost table.
// Convention: agents minimize discounted cost. Reward = -cost wherever
// results are reported, so plotted numbers match the usual RL sign.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.99;
  std::vector<double> cost;    // [s * n_actions + a]
  std::vector<double> kernel;  // [(s * n_actions + a) * n_states + s_next]

  TabularMdp() = default;
  TabularMdp(int states, int actions, double discount);

  double c(int s, int a) const { return cost[idx(s, a)]; }
  double& c(int s, int a) { return cost[idx(s, a)]; }
  double p(int s, int a, int s_next) const { return kernel[idx(s, a) * n_states + s_next]; }
  double& p(int s, int a, int s_next) { return kernel[idx(s, a) * n_states + s_next]; }
  std::span<const double> row(int s, int a) const {
    return {kernel.data() + idx(s, a) * static_cast<std::size_t>(n_states),
            static_cast<std::size_t>(n_states)};
  }

 private:
  std::size_t idx(int s, int a) const {
    return static_cast<std::size_t>(s) * n_actions + a;
  }
};

// Returns human-readable contract violations; empty means valid.
// Checks: positive sizes, gamma in (0,1), finite costs, nonnegative
// probabilities, every kernel row summing to 1 within 1e-9.
std::vector<std::string> validate_mdp(const TabularMdp& mdp);

struct QTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;

  QTable() = default;
  QTable(int states, int actions, double fill = 0.0)
      : n_states(states), n_actions(actions),
        values(static_cast<std::size_t>(states) * actions, fill) {}

  double operator()(int s, int a) const {
    return values[static_cast<std::size_t>(s) * n_actions + a];
  }
  double& operator()(int s, int a) {
    return values[static_cast<std::size_t>(s) * n_actions + a];
  }
};

// V(s) = min_a Q(s,a). Throws std::out_of_range on a bad index.
double state_value(const QTable& q, int s);

// argmin_a Q(s,a), lowest index wins ties.
int greedy_action(const QTable& q, int s);

// Per-state V(s) for all states.
std::vector<double> values_of(const QTable& q);

double max_abs_diff(const QTable& a, const QTable& b);

struct TabularPolicy {
  std::vector<int> actions;                // deterministic: action per state
  std::vector<std::vector<double>> probs;  // stochastic form; empty if deterministic

  bool stochastic() const { return !probs.empty(); }
};

TabularPolicy greedy_policy(const QTable& q);

std::vector<std::string> validate_policy(const TabularPolicy& pol, int n_states,
                                         int n_actions);

struct EvalReport {
  double mean_return = 0.0;  // reward convention (negated cost)
  double std_return = 0.0;   // population std over episodes
  std::vector<double> episode_returns;
  int episodes = 0;
  std::uint64_t seed = 0;
  int truncated = 0;  // episodes cut off at the step cap
};

EvalReport make_report(std::vector<double> episode_returns, std::uint64_t seed,
                       int truncated);

// Plain-text MDP format, used by the oracle CLI:
//   line 1:            n_states n_actions gamma
//   next n_states:     cost row per state (n_actions values)
//   next n_states*n_actions: kernel row per (s,a), s-major then a
// '#' starts a comment; blank lines are skipped.
std::string mdp_to_text(const TabularMdp& mdp);
TabularMdp mdp_from_text(const std::string& text);  // throws std::invalid_argument

void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(const std::string& path);

// Q-table CSV: one row per state, comma-separated action values.
std::string qtable_to_csv(const QTable& q);
QTable qtable_from_csv(const std::string& text);
void save_qtable(const QTable& q, const std::string& path);
QTable load_qtable(const std::string& path);

}  // namespace rrl
