#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace depsim {

// Flat binary tree over nonnegative leaf weights supporting O(log n)
// point updates and O(log n) sampling of a leaf proportional to weight.
// Used for per-bond Gillespie clocks.
class SumTree {
 public:
  SumTree() = default;
  explicit SumTree(std::size_t n) { reset(n); }

  void reset(std::size_t n) {
    n_ = n;
    base_ = 1;
    while (base_ < n_) base_ <<= 1;
    node_.assign(2 * base_, 0.0);
  }

  std::size_t size() const { return n_; }
  double total() const { return node_.empty() ? 0.0 : node_[1]; }
  double value(std::size_t i) const { return node_[base_ + i]; }

  void set(std::size_t i, double w) {
    assert(i < n_ && w >= 0.0);
    std::size_t k = base_ + i;
    node_[k] = w;
    for (k >>= 1; k >= 1; k >>= 1) {
      node_[k] = node_[2 * k] + node_[2 * k + 1];
      if (k == 1) break;
    }
  }

  // Leaf k with cum(k) <= x < cum(k+1); x in [0, total()).
  // Returns the leaf index and the offset of x within the leaf weight.
  std::size_t sample(double x, double* offset = nullptr) const {
    std::size_t k = 1;
    while (k < base_) {
      k <<= 1;
      if (x >= node_[k]) {
        x -= node_[k];
        k += 1;
      }
    }
    std::size_t i = k - base_;
    // float drift can push x a hair past the last positive leaf; clamp
    if (i >= n_ || node_[k] <= 0.0) {
      i = n_;
      while (i > 0 && node_[base_ + i - 1] <= 0.0) --i;
      assert(i > 0);
      --i;
      x = 0.0;
    }
    if (offset) *offset = x;
    return i;
  }

  // Recompute all internal sums from the leaves. Called periodically by
  // long simulations to shed accumulated floating point drift.
  void rebuild() {
    for (std::size_t k = base_ - 1; k >= 1; --k) {
      node_[k] = node_[2 * k] + node_[2 * k + 1];
      if (k == 1) break;
    }
  }

 private:
  std::size_t n_ = 0;
  std::size_t base_ = 1;
  std::vector<double> node_;
};

} // namespace depsim
