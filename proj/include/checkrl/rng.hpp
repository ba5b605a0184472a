#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace checkrl {

// Deterministic random stream. Every consumer (policy sampling, world
// generation, checker verdicts) gets its own stream derived from the run seed
// and a label path, so streams never perturb one another and rollouts can be
// executed in any order or in parallel with identical results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits; platform independent.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). n must be positive.
  std::size_t index(std::size_t n);
  // Uniform integer on [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Stream labels. Values are arbitrary but frozen: changing them changes every
// recorded run.
namespace stream {
inline constexpr std::uint64_t kQuestion = 0x51;
inline constexpr std::uint64_t kPolicy = 0x70;
inline constexpr std::uint64_t kWorld = 0x77;
inline constexpr std::uint64_t kChecker = 0xc4;
}  // namespace stream

}  // namespace checkrl
