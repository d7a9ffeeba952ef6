#ifndef GANOV_RNG_HPP
#define GANOV_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace ganov {

// The single named random source. Every stochastic step in the project
// draws from an Rng seeded (directly or via fork) from ExperimentConfig.seed,
// so a fixed config reproduces every artifact bit-for-bit.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  float normal(float mean = 0.0f, float stddev = 1.0f) {
    std::normal_distribution<float> d(mean, stddev);
    return d(engine_);
  }

  float uniform(float lo = 0.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> d(lo, hi);
    return d(engine_);
  }

  // Inclusive bounds.
  int64_t randint(int64_t lo, int64_t hi) {
    std::uniform_int_distribution<int64_t> d(lo, hi);
    return d(engine_);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }

  // Derived stream for an independent purpose (e.g. latent sampling vs.
  // weight init) so insertion of one draw does not shift the other.
  Rng fork(uint64_t stream) {
    uint64_t s = engine_();
    return Rng(s ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ganov

#endif
