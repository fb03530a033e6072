#pragma once

#include <cstdint>
#include <span>

namespace bae {

// SplitMix64 finalizer; full avalanche over 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Counter-based pseudorandom stream with cheap substream derivation.
//
// A stream is identified by a 64-bit key; draw i is mix64(key + i*golden),
// so streams can be split hierarchically (per prompt, per rollout, per
// bootstrap iteration, ...) without any shared state. Work scheduled across
// threads draws from its own substream, which keeps results independent of
// the parallelism degree.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

  // Child stream; independent of this stream's position and of siblings
  // derived with other labels.
  RngStream derive(std::uint64_t label) const {
    return RngStream(RawKey{}, mix64(key_ ^ mix64(label + kDeriveSalt)));
  }
  RngStream derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); n > 0. Fixed-point multiply keeps it branch-free.
  std::size_t next_below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Inverse-CDF draw from an (approximately normalized) distribution.
  // Consumes exactly one u64 regardless of the outcome.
  int next_categorical(std::span<const double> probs) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double target = next_double() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (target < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  struct RawKey {};
  RngStream(RawKey, std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kDeriveSalt = 0xD1B54A32D192ED03ull;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bae
