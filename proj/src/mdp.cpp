#include "rrl/mdp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rrl {

TabularMdp::TabularMdp(int states, int actions, double discount)
    : n_states(states), n_actions(actions), gamma(discount),
      cost(static_cast<std::size_t>(states) * actions, 0.0),
      kernel(static_cast<std::size_t>(states) * actions * states, 0.0) {}

std::vector<std::string> validate_mdp(const TabularMdp& mdp) {
  std::vector<std::string> bad;
  if (mdp.n_states <= 0 || mdp.n_actions <= 0) {
    bad.push_back("non-positive state or action count");
    return bad;
  }
  if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0)) bad.push_back("gamma out of (0,1)");
  const std::size_t sa = static_cast<std::size_t>(mdp.n_states) * mdp.n_actions;
  if (mdp.cost.size() != sa) bad.push_back("cost table size mismatch");
  if (mdp.kernel.size() != sa * mdp.n_states) bad.push_back("kernel size mismatch");
  if (!bad.empty()) return bad;

  std::ostringstream os;
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (!std::isfinite(mdp.c(s, a))) {
        os.str("");
        os << "non-finite cost at (s=" << s << ",a=" << a << ")";
        bad.push_back(os.str());
      }
      double sum = 0.0;
      for (int j = 0; j < mdp.n_states; ++j) {
        const double pj = mdp.p(s, a, j);
        if (!(pj >= 0.0)) {
          os.str("");
          os << "negative probability at (s=" << s << ",a=" << a << ",s'=" << j << ")";
          bad.push_back(os.str());
        }
        sum += pj;
      }
      if (std::fabs(sum - 1.0) > 1e-9) {
        os.str("");
        os << "row sum " << sum << " at (s=" << s << ",a=" << a << ")";
        bad.push_back(os.str());
      }
    }
  }
  return bad;
}

double state_value(const QTable& q, int s) {
  if (s < 0 || s >= q.n_states) throw std::out_of_range("state_value: state index");
  double v = q(s, 0);
  for (int a = 1; a < q.n_actions; ++a) v = std::min(v, q(s, a));
  return v;
}

int greedy_action(const QTable& q, int s) {
  if (s < 0 || s >= q.n_states) throw std::out_of_range("greedy_action: state index");
  int best = 0;
  for (int a = 1; a < q.n_actions; ++a)
    if (q(s, a) < q(s, best)) best = a;
  return best;
}

std::vector<double> values_of(const QTable& q) {
  std::vector<double> v(q.n_states);
  for (int s = 0; s < q.n_states; ++s) v[s] = state_value(q, s);
  return v;
}

double max_abs_diff(const QTable& a, const QTable& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::fabs(a.values[i] - b.values[i]));
  return m;
}

TabularPolicy greedy_policy(const QTable& q) {
  TabularPolicy pol;
  pol.actions.resize(q.n_states);
  for (int s = 0; s < q.n_states; ++s) pol.actions[s] = greedy_action(q, s);
  return pol;
}

std::vector<std::string> validate_policy(const TabularPolicy& pol, int n_states,
                                         int n_actions) {
  std::vector<std::string> bad;
  if (pol.stochastic()) {
    if (static_cast<int>(pol.probs.size()) != n_states)
      bad.push_back("policy row count mismatch");
    else {
      for (int s = 0; s < n_states; ++s) {
        if (static_cast<int>(pol.probs[s].size()) != n_actions) {
          bad.push_back("policy column count mismatch at state " + std::to_string(s));
          continue;
        }
        double sum = 0.0;
        for (double p : pol.probs[s]) {
          if (!(p >= 0.0)) bad.push_back("negative action probability at state " + std::to_string(s));
          sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
          bad.push_back("action probabilities sum to " + std::to_string(sum) +
                        " at state " + std::to_string(s));
      }
    }
  } else {
    if (static_cast<int>(pol.actions.size()) != n_states)
      bad.push_back("policy length mismatch");
    else
      for (int s = 0; s < n_states; ++s)
        if (pol.actions[s] < 0 || pol.actions[s] >= n_actions)
          bad.push_back("action out of range at state " + std::to_string(s));
  }
  return bad;
}

EvalReport make_report(std::vector<double> episode_returns, std::uint64_t seed,
                       int truncated) {
  EvalReport r;
  r.episodes = static_cast<int>(episode_returns.size());
  r.seed = seed;
  r.truncated = truncated;
  r.episode_returns = std::move(episode_returns);
  if (r.episodes == 0) return r;
  double sum = 0.0;
  for (double x : r.episode_returns) sum += x;
  r.mean_return = sum / r.episodes;
  double ss = 0.0;
  for (double x : r.episode_returns) ss += (x - r.mean_return) * (x - r.mean_return);
  r.std_return = std::sqrt(ss / r.episodes);
  return r;
}

namespace {

std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Strips comments, returns whitespace-separated tokens.
std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) toks.push_back(t);
  }
  return toks;
}

double parse_num(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad ") + what + " token '" + tok + "'");
  }
}

}  // namespace

std::string mdp_to_text(const TabularMdp& mdp) {
  std::ostringstream os;
  os << mdp.n_states << " " << mdp.n_actions << " " << fmt_full(mdp.gamma) << "\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a)
      os << (a ? " " : "") << fmt_full(mdp.c(s, a));
    os << "\n";
  }
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (int j = 0; j < mdp.n_states; ++j)
        os << (j ? " " : "") << fmt_full(mdp.p(s, a, j));
      os << "\n";
    }
  return os.str();
}

TabularMdp mdp_from_text(const std::string& text) {
  const auto toks = tokenize(text);
  if (toks.size() < 3) throw std::invalid_argument("mdp text: missing header");
  const double ns_d = parse_num(toks[0], "state count");
  const double na_d = parse_num(toks[1], "action count");
  const int ns = static_cast<int>(ns_d);
  const int na = static_cast<int>(na_d);
  if (ns <= 0 || na <= 0 || ns != ns_d || na != na_d)
    throw std::invalid_argument("mdp text: bad header counts");
  const double gamma = parse_num(toks[2], "gamma");
  const std::size_t need = 3 + static_cast<std::size_t>(ns) * na +
                           static_cast<std::size_t>(ns) * na * ns;
  if (toks.size() != need)
    throw std::invalid_argument("mdp text: expected " + std::to_string(need) +
                                " tokens, got " + std::to_string(toks.size()));
  TabularMdp mdp(ns, na, gamma);
  std::size_t k = 3;
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) mdp.c(s, a) = parse_num(toks[k++], "cost");
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a)
      for (int j = 0; j < ns; ++j) mdp.p(s, a, j) = parse_num(toks[k++], "probability");
  return mdp;
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << mdp_to_text(mdp);
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return mdp_from_text(os.str());
}

std::string qtable_to_csv(const QTable& q) {
  std::ostringstream os;
  for (int s = 0; s < q.n_states; ++s) {
    for (int a = 0; a < q.n_actions; ++a) os << (a ? "," : "") << fmt_full(q(s, a));
    os << "\n";
  }
  return os.str();
}

QTable qtable_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      row.push_back(parse_num(cell, "q value"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("q csv: ragged row at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("q csv: empty");
  QTable q(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int s = 0; s < q.n_states; ++s)
    for (int a = 0; a < q.n_actions; ++a) q(s, a) = rows[s][a];
  return q;
}

void save_qtable(const QTable& q, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << qtable_to_csv(q);
}

QTable load_qtable(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return qtable_from_csv(os.str());
}

}  // namespace rrl
