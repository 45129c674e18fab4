#ifndef HIM_RNG_HPP
#define HIM_RNG_HPP

#include <cstdint>
#include <random>
#include <string>

namespace him {

/// Seedable RNG with hand-rolled draw functions so every stream is
/// stateless given the engine state. std::normal_distribution caches a
/// spare deviate, which would break checkpoint/resume equivalence, so we
/// avoid the standard distribution objects entirely.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller, no cached spare.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n). Rejection sampling, bias-free.
  int64_t below(int64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Derived independent stream; advances this engine once.
  Rng fork(uint64_t salt) { return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL)); }

  std::string save_state() const;
  void restore_state(const std::string& s);

 private:
  std::mt19937_64 eng_;
};

}  // namespace him

#endif
