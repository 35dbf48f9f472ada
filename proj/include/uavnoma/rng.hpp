#ifndef UAVNOMA_RNG_HPP_
#define UAVNOMA_RNG_HPP_

#include <cstdint>
#include <random>

namespace uavnoma {

// Deterministic per-stream random source. Every component that needs
// randomness takes one of these explicitly; nothing draws from a global.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }      // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean, double stddev) {
    return mean + stddev * normal_(engine_);
  }
  // Unit-mean exponential (Rayleigh power fading coefficient).
  double exponential() { return exponential_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  size_t index(size_t n) {
    return static_cast<size_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::mt19937_64& engine() { return engine_; }

  // Stream-splitting: derive an independent child seed from this stream's
  // seed material without perturbing the parent state.
  static uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
    // splitmix64 over a simple combination; collision-free enough for
    // (seed, epoch, episode) triples.
    uint64_t x = base + 0x9E3779B97F4A7C15ULL * (a + 1) +
                 0xBF58476D1CE4E5B9ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace uavnoma

#endif  // UAVNOMA_RNG_HPP_
