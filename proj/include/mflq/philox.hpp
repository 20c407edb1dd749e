#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mflq {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
/// pure function of (counter, key), so any (path, step, purpose) triple can
/// be drawn independently of scheduling.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Random draws keyed by root seed and (path, step, purpose).
class CounterRng {
 public:
  /// Purpose tags. Atom k uses jump_base + k.
  static constexpr std::uint32_t brownian = 0;
  static constexpr std::uint32_t jump_base = 1;

  explicit CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Two uniforms in [0, 1) with 53 random bits each.
  std::array<double, 2> uniforms(std::uint64_t path, std::uint32_t step,
                                 std::uint32_t purpose) const noexcept {
    const auto w = Philox4x32::generate(
        {step, purpose, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)},
        key_);
    return {to_unit(w[0], w[1]), to_unit(w[2], w[3])};
  }

  /// Standard normal by Box-Muller.
  double normal(std::uint64_t path, std::uint32_t step, std::uint32_t purpose) const noexcept {
    const auto u = uniforms(path, step, purpose);
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u[0]));
    return radius * std::cos(2.0 * std::numbers::pi * u[1]);
  }

  /// Poisson(mean) by CDF inversion.
  unsigned poisson(std::uint64_t path, std::uint32_t step, std::uint32_t purpose,
                   double mean) const noexcept {
    return poisson_from_uniform(uniforms(path, step, purpose)[0], mean);
  }

  static unsigned poisson_from_uniform(double u, double mean) noexcept {
    double p = std::exp(-mean);
    double cdf = p;
    unsigned k = 0;
    while (u >= cdf && k < 10000u) {
      ++k;
      p *= mean / k;
      cdf += p;
      if (p == 0.0) break;
    }
    return k;
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace mflq
