#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace rrl {

// Fixed-capacity ring buffer with seeded uniform sampling (with replacement).
template <class T>
class ReplayBuffer {
 public:
  ReplayBuffer() : capacity_(0) {}
  ReplayBuffer(std::size_t capacity, std::uint64_t seed)
      : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  void push(T item) {
    if (capacity_ == 0) throw std::runtime_error("ReplayBuffer: unconfigured");
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);  // overwrite the oldest
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i = 0 is the oldest element still stored
  const T& at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("ReplayBuffer: index");
    return items_[(head_ + i) % items_.size()];
  }

  const T& sample() {
    if (items_.empty()) throw std::runtime_error("ReplayBuffer: sample from empty");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    return items_[pick(rng_)];
  }

  std::vector<T> sample_batch(int n) {
    std::vector<T> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(sample());
    return out;
  }

  std::vector<T> dump() const {
    std::vector<T> out;
    out.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(at(i));
    return out;
  }

 private:
  std::size_t capacity_ = 0;
  std::size_t head_ = 0;
  std::vector<T> items_;
  std::mt19937_64 rng_{0};
};

}  // namespace rrl
