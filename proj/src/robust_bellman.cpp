#include "rrl/robust_bellman.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rrl {

namespace {

void validate_radius(double radius) {
  if (!(radius >= 0.0 && radius <= 1.0))
    throw std::invalid_argument("uncertainty radius must lie in [0,1]");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

UncertaintySetSpec UncertaintySetSpec::nominal() { return {SetKind::nominal, 0.0}; }

UncertaintySetSpec UncertaintySetSpec::contamination(double radius) {
  validate_radius(radius);
  return {SetKind::r_contamination, radius};
}

UncertaintySetSpec UncertaintySetSpec::adjacent(double radius) {
  validate_radius(radius);
  return {SetKind::adjacent, radius};
}

const char* set_kind_name(SetKind kind) {
  switch (kind) {
    case SetKind::nominal: return "nominal";
    case SetKind::r_contamination: return "rc";
    case SetKind::adjacent: return "adjacent";
  }
  return "?";
}

SetKind set_kind_from_name(const std::string& name) {
  if (name == "nominal") return SetKind::nominal;
  if (name == "rc" || name == "r_contamination") return SetKind::r_contamination;
  if (name == "adjacent") return SetKind::adjacent;
  throw std::invalid_argument("unknown uncertainty set '" + name + "'");
}

double support_function(const UncertaintySetSpec& spec, std::span<const double> p_row,
                        std::span<const double> v, std::span<const int> neighbors) {
  if (p_row.size() != v.size())
    throw std::invalid_argument("support_function: p and v length mismatch");
  if (spec.kind == SetKind::nominal) return dot(p_row, v);
  validate_radius(spec.R);

  double vmax;
  if (spec.kind == SetKind::r_contamination) {
    vmax = -std::numeric_limits<double>::infinity();
    for (double x : v) vmax = std::max(vmax, x);
  } else {
    if (neighbors.empty())
      throw std::invalid_argument("support_function: empty neighbor set");
    vmax = -std::numeric_limits<double>::infinity();
    for (int j : neighbors) {
      if (j < 0 || static_cast<std::size_t>(j) >= v.size())
        throw std::out_of_range("support_function: neighbor index");
      vmax = std::max(vmax, v[j]);
    }
  }
  return (1.0 - spec.R) * dot(p_row, v) + spec.R * vmax;
}

double lp_support_oracle(const UncertaintySetSpec& spec, std::span<const double> p_row,
                         std::span<const double> v, std::span<const int> neighbors) {
  const std::size_t n = v.size();
  if (p_row.size() != n)
    throw std::invalid_argument("lp_support_oracle: p and v length mismatch");
  if (n > 12) throw std::invalid_argument("lp_support_oracle: more than 12 states");
  if (spec.kind == SetKind::nominal) return dot(p_row, v);
  validate_radius(spec.R);

  std::vector<int> verts;
  if (spec.kind == SetKind::r_contamination) {
    verts.resize(n);
    for (std::size_t j = 0; j < n; ++j) verts[j] = static_cast<int>(j);
  } else {
    if (neighbors.empty())
      throw std::invalid_argument("lp_support_oracle: empty neighbor set");
    verts.assign(neighbors.begin(), neighbors.end());
  }

  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> k(n);
  for (int j : verts) {
    if (j < 0 || static_cast<std::size_t>(j) >= n)
      throw std::out_of_range("lp_support_oracle: vertex index");
    for (std::size_t i = 0; i < n; ++i) k[i] = (1.0 - spec.R) * p_row[i];
    k[j] += spec.R;
    best = std::max(best, dot(k, v));
  }
  return best;
}

QTable robust_backup(const TabularMdp& mdp, const UncertaintySetSpec& spec,
                     const NeighborTable& neighbors, const QTable& q) {
  if (q.n_states != mdp.n_states || q.n_actions != mdp.n_actions)
    throw std::invalid_argument("robust_backup: table shape mismatch");
  if (spec.kind == SetKind::adjacent && neighbors.n_states() != mdp.n_states)
    throw std::invalid_argument("robust_backup: neighbor table shape mismatch");

  const std::vector<double> v = values_of(q);
  QTable out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    std::vector<int> nbrs;
    if (spec.kind == SetKind::adjacent) nbrs = neighbors.neighbors_of(s);
    for (int a = 0; a < mdp.n_actions; ++a)
      out(s, a) = mdp.c(s, a) +
                  mdp.gamma * support_function(spec, mdp.row(s, a), v, nbrs);
  }
  return out;
}

ViResult robust_value_iteration(const TabularMdp& mdp, const UncertaintySetSpec& spec,
                                const NeighborTable& neighbors, double tol,
                                int max_iters, const QTable* init) {
  ViResult r;
  r.q = init ? *init : QTable(mdp.n_states, mdp.n_actions);
  for (int k = 0; k < max_iters; ++k) {
    QTable next = robust_backup(mdp, spec, neighbors, r.q);
    const double res = max_abs_diff(next, r.q);
    r.q = std::move(next);
    r.residual = res;
    r.residual_history.push_back(res);
    r.iterations = k + 1;
    if (res < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

NeighborTable true_neighbor_sets(const TabularMdp& mdp) {
  NeighborTable t(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      for (int j = 0; j < mdp.n_states; ++j)
        if (mdp.p(s, a, j) > 0.0) t.record(s, j);
  return t;
}

NeighborTable estimate_neighbors(const std::vector<std::pair<int, int>>& transitions,
                                 int n_states) {
  NeighborTable t(n_states);
  for (const auto& [s, s_next] : transitions) t.record(s, s_next);
  return t;
}

std::vector<bool> check_assumption2(const NeighborTable& estimated,
                                    const NeighborTable& truth,
                                    std::span<const double> v_star) {
  if (estimated.n_states() != truth.n_states())
    throw std::invalid_argument("check_assumption2: table size mismatch");
  if (static_cast<int>(v_star.size()) != truth.n_states())
    throw std::invalid_argument("check_assumption2: value length mismatch");
  std::vector<bool> ok(truth.n_states());
  for (int s = 0; s < truth.n_states(); ++s) {
    int arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int j : truth.neighbors_of(s))
      if (v_star[j] > best) {
        best = v_star[j];
        arg = j;
      }
    ok[s] = estimated.contains(s, arg);
  }
  return ok;
}

}  // namespace rrl
