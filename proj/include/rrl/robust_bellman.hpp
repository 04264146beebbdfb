#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rrl/mdp.hpp"
#include "rrl/neighbor_table.hpp"

namespace rrl {

// Kernel uncertainty around a nominal row p:
//   nominal          { p }
//   r_contamination  { (1-R) p + R q : q any distribution over all states }
//   adjacent         { (1-R) p + R q : q supported on the neighbor set only }
enum class SetKind { nominal, r_contamination, adjacent };

struct UncertaintySetSpec {
  SetKind kind = SetKind::nominal;
  double R = 0.0;

  static UncertaintySetSpec nominal();
  static UncertaintySetSpec contamination(double radius);
  static UncertaintySetSpec adjacent(double radius);
};

const char* set_kind_name(SetKind kind);
SetKind set_kind_from_name(const std::string& name);  // throws std::invalid_argument

// Worst-case expectation max_{k in set} k.v in closed form:
//   nominal          p.v
//   r_contamination  (1-R) p.v + R max_j v_j
//   adjacent         (1-R) p.v + R max_{j in neighbors} v_j
// Throws std::invalid_argument for an empty neighbor set with kind=adjacent.
double support_function(const UncertaintySetSpec& spec, std::span<const double> p_row,
                        std::span<const double> v, std::span<const int> neighbors);

// Independent check: enumerates the vertices of the uncertainty set and
// maximizes the full dot product k.v directly. Exact because a linear
// objective over the restricted simplex peaks at a vertex. Refuses more
// than 12 states (reference use only).
double lp_support_oracle(const UncertaintySetSpec& spec, std::span<const double> p_row,
                         std::span<const double> v, std::span<const int> neighbors);

// One synchronous sweep of the robust operator:
//   (TQ)(s,a) = c(s,a) + gamma * sup_{k} k.V,  V(s') = min_a' Q(s',a').
QTable robust_backup(const TabularMdp& mdp, const UncertaintySetSpec& spec,
                     const NeighborTable& neighbors, const QTable& q);

struct ViResult {
  QTable q;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

// Iterates robust_backup until the sup-norm residual drops below tol.
// init = nullptr starts from zeros.
ViResult robust_value_iteration(const TabularMdp& mdp, const UncertaintySetSpec& spec,
                                const NeighborTable& neighbors, double tol = 1e-8,
                                int max_iters = 200000, const QTable* init = nullptr);

// Neighbor sets of the nominal kernel: s' in N_s iff some action reaches it.
NeighborTable true_neighbor_sets(const TabularMdp& mdp);

// Builds a table from observed (s, s') transitions.
NeighborTable estimate_neighbors(const std::vector<std::pair<int, int>>& transitions,
                                 int n_states);

// Per-state check that the maximizer of v_star over the true neighbor set
// (lowest index on ties) belongs to the estimated set.
std::vector<bool> check_assumption2(const NeighborTable& estimated,
                                    const NeighborTable& truth,
                                    std::span<const double> v_star);

}  // namespace rrl
