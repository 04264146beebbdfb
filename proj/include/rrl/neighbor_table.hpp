#pragma once

#include <string>
#include <vector>

namespace rrl {

// Per-state neighboring sets. Records observed successors; a state with no
// recorded successor falls back to {s} on lookup so the set is never empty.
class NeighborTable {
 public:
  NeighborTable() = default;
  explicit NeighborTable(int n_states);

  int n_states() const { return static_cast<int>(sets_.size()); }

  // Inserts s_next into the set for s. Throws std::out_of_range on bad indices.
  void record(int s, int s_next);

  // True once any successor of s has been recorded.
  bool visited(int s) const;

  // Sorted successor set; {s} when nothing has been recorded for s.
  std::vector<int> neighbors_of(int s) const;

  // Recorded successors only (sorted), empty when unvisited.
  const std::vector<int>& raw(int s) const;

  bool contains(int s, int candidate) const;

  bool subset_of(const NeighborTable& other) const;

  std::string to_text() const;
  static NeighborTable from_text(const std::string& text);

 private:
  void check(int s) const;
  std::vector<std::vector<int>> sets_;
};

}  // namespace rrl
