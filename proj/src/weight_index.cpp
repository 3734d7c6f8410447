#include "sharekin/weight_index.hpp"

#include <bit>

namespace sharekin {

void WeightIndex::rebuild(std::span<const double> weights) {
  const std::size_t n = weights.size();
  values_.assign(weights.begin(), weights.end());
  top_bit_ = n == 0 ? 0 : std::bit_ceil(n);
  // Padded to a power of two so the descent in find() needs no bounds check.
  tree_.assign(top_bit_ + 1, 0.0);
  total_ = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] += values_[i - 1];
    total_ += values_[i - 1];
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= top_bit_) tree_[parent] += tree_[i];
  }
  for (std::size_t i = n + 1; i <= top_bit_; ++i) {
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= top_bit_) tree_[parent] += tree_[i];
  }
}

void WeightIndex::set(std::size_t i, double weight) {
  const double delta = weight - values_[i];
  values_[i] = weight;
  total_ += delta;
  for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
}

std::size_t WeightIndex::find(double target) const {
  std::size_t pos = 0;
  for (std::size_t step = top_bit_ >> 1; step != 0; step >>= 1) {
    const std::size_t next = pos + step;
    const double w = tree_[next];
    const bool take = w <= target;
    pos = take ? next : pos;
    target -= take ? w : 0.0;
  }
  // pos is the count of entries whose prefix sum is <= target; round-off can push it past the end
  // or onto a zero-weight entry.
  if (pos >= values_.size()) pos = values_.size() - 1;
  while (values_[pos] == 0.0 && pos > 0) --pos;
  return pos;
}

}  // namespace sharekin
