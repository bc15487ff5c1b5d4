#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace mrgan {

// Deterministic random stream. Wraps mt19937_64 but generates uniform and
// Gaussian variates itself so that streams are bit-identical across standard
// library implementations (std::*_distribution is implementation-defined).
class Rng {
 public:
  Rng() : engine_(0x9e3779b97f4a7c15ull) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller; stateless beyond the engine.
  double gaussian();

  // Child stream whose seed depends on this stream's seed path and `name`.
  Rng fork(std::string_view name) const;

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  Rng(std::mt19937_64 engine, std::uint64_t tag) : engine_(std::move(engine)), tag_(tag) {}
  std::mt19937_64 engine_;
  std::uint64_t tag_ = 0;  // identity of the fork path, mixed into child seeds
};

// Stable 64-bit seed derivation: FNV-1a over `name`, whitened and mixed with
// `root`. Used to give every named consumer (layer init, shuffling, penalty
// sampling, ...) an independent deterministic stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);

}  // namespace mrgan
