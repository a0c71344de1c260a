#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace m3pcg {

// Seedable random source passed explicitly through every stochastic operation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Inclusive on both ends.
  int uniform_int(int lo, int hi);
  double uniform01();
  bool bernoulli(double p);
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer over two words; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// FNV-1a, 64 bit. Stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

}  // namespace m3pcg
