#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sharekin {

/// Fenwick tree over non-negative site weights: O(log N) point update and weighted draw.
class WeightIndex {
 public:
  WeightIndex() = default;
  explicit WeightIndex(std::span<const double> weights) { rebuild(weights); }

  void rebuild(std::span<const double> weights);
  void set(std::size_t i, double weight);
  double weight(std::size_t i) const { return values_[i]; }
  double total() const { return total_; }
  std::size_t size() const { return values_.size(); }

  /// Index i such that prefix(i) <= target < prefix(i + 1), for target in [0, total()).
  std::size_t find(double target) const;

 private:
  std::vector<double> tree_;  // 1-based
  std::vector<double> values_;
  double total_ = 0.0;
  std::size_t top_bit_ = 0;
};

}  // namespace sharekin
