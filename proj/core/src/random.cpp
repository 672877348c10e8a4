#include "dermo/random.hpp"

#include "dermo/errors.hpp"

namespace dermo {

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  detail::require(folds >= 1, "folds must be at least 1");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<int> fold(labels.size(), 0);
  // Negatives continue the rotation where positives stopped so fold sizes
  // stay balanced overall.
  std::size_t k = 0;
  for (std::size_t i : pos) fold[i] = int(k++ % std::size_t(folds));
  for (std::size_t i : neg) fold[i] = int(k++ % std::size_t(folds));
  return fold;
}

}  // namespace dermo
