#include "rrl/neighbor_table.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rrl {

NeighborTable::NeighborTable(int n_states) {
  if (n_states <= 0) throw std::invalid_argument("NeighborTable: non-positive size");
  sets_.resize(n_states);
}

void NeighborTable::check(int s) const {
  if (s < 0 || s >= n_states()) throw std::out_of_range("NeighborTable: state index");
}

void NeighborTable::record(int s, int s_next) {
  check(s);
  check(s_next);
  auto& set = sets_[s];
  auto it = std::lower_bound(set.begin(), set.end(), s_next);
  if (it == set.end() || *it != s_next) set.insert(it, s_next);
}

bool NeighborTable::visited(int s) const {
  check(s);
  return !sets_[s].empty();
}

std::vector<int> NeighborTable::neighbors_of(int s) const {
  check(s);
  if (sets_[s].empty()) return {s};
  return sets_[s];
}

const std::vector<int>& NeighborTable::raw(int s) const {
  check(s);
  return sets_[s];
}

bool NeighborTable::contains(int s, int candidate) const {
  check(s);
  if (sets_[s].empty()) return candidate == s;
  return std::binary_search(sets_[s].begin(), sets_[s].end(), candidate);
}

bool NeighborTable::subset_of(const NeighborTable& other) const {
  if (other.n_states() != n_states()) return false;
  for (int s = 0; s < n_states(); ++s)
    for (int v : sets_[s])
      if (!other.contains(s, v)) return false;
  return true;
}

std::string NeighborTable::to_text() const {
  std::ostringstream os;
  os << n_states() << "\n";
  for (int s = 0; s < n_states(); ++s) {
    os << s << ":";
    for (int v : sets_[s]) os << " " << v;
    os << "\n";
  }
  return os.str();
}

NeighborTable NeighborTable::from_text(const std::string& text) {
  std::istringstream is(text);
  int n = 0;
  if (!(is >> n) || n <= 0) throw std::invalid_argument("neighbor text: bad size");
  NeighborTable t(n);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("neighbor text: missing ':'");
    int s = std::stoi(line.substr(0, colon));
    std::istringstream rest(line.substr(colon + 1));
    int v;
    while (rest >> v) t.record(s, v);
  }
  return t;
}

}  // namespace rrl
