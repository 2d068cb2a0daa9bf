#pragma once

// Counter-based random streams for reproducible parallel Monte Carlo.
//
// Philox4x32-10 keyed by the experiment seed; the 128-bit counter is
// (block index, run index), so every simulated run owns an independent
// stream regardless of which worker executes it.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace srrs {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 2) refill();
    return buffer_[used_++];
  }

  std::uint64_t blocks_generated() const { return block_; }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void refill() {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                     static_cast<std::uint32_t>(block_ >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    buffer_[0] = (static_cast<std::uint64_t>(ctr[0]) << 32) | ctr[1];
    buffer_[1] = (static_cast<std::uint64_t>(ctr[2]) << 32) | ctr[3];
    ++block_;
    used_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int used_ = 2;
};

/// Variates drawn from one Philox stream. Gamma variates are returned with
/// their logarithm because shapes far below 1 underflow x itself.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

  struct GammaDraw {
    double value;
    double log_value;
  };

  /// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1; for shape < 1
  /// the exact boost Gamma(shape + 1) * U^(1/shape), carried out in log space.
  GammaDraw gamma(double shape) {
    if (shape < 1.0) {
      const GammaDraw boosted = gamma(shape + 1.0);
      const double log_value = boosted.log_value + std::log(uniform()) / shape;
      return {std::exp(log_value), log_value};
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z, v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double z2 = z * z;
      if (u < 1.0 - 0.0331 * z2 * z2 || std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) {
        const double value = d * v;
        return {value, std::log(value)};
      }
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace srrs
