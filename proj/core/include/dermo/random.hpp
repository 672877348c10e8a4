#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dermo {

/// Seeded generator with platform-independent draws. std::mt19937_64 has a
/// fully specified output sequence; the standard distributions do not, so
/// the mappings to reals and indices are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [lo, hi]; exactly lo when lo == hi.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next() { return engine_(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Stratified fold assignment: each class is shuffled with the seed and dealt
/// round-robin into `folds` groups. Returns the fold index per sample.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

}  // namespace dermo
