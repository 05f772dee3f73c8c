#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace temper {

/// Philox4x32-10 counter-based generator (Salmon et al., 2011).
/// Stateless: the same (counter, key) always gives the same four words.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter c, Key k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{M0} * c[0];
      const std::uint64_t p1 = std::uint64_t{M1} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += W0;
      k[1] += W1;
    }
    return c;
  }
};

/// Standard normal noise addressed by (particle, step).  Every particle draws
/// from its own counter range, so results do not depend on how particles are
/// split across threads.
class NoiseStream {
 public:
  /// Step index reserved for drawing initial positions.
  static constexpr std::uint64_t kInitialStep = std::uint64_t{1} << 63;

  explicit NoiseStream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Fills `out` with independent N(0,1) draws for this particle and step.
  void gaussians(std::uint64_t particle, std::uint64_t step, std::span<double> out) const {
    std::size_t i = 0;
    for (std::uint32_t block = 0; i < out.size(); ++block) {
      const auto w = Philox4x32::generate(
          {static_cast<std::uint32_t>(particle), block, static_cast<std::uint32_t>(step),
           static_cast<std::uint32_t>(step >> 32) ^ static_cast<std::uint32_t>(particle >> 32)},
          key_);
      const double u1 = to_unit(w[0], w[1]);
      const double u2 = to_unit(w[2], w[3]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double th = 2.0 * std::numbers::pi * u2;
      out[i++] = r * std::cos(th);
      if (i < out.size()) out[i++] = r * std::sin(th);
    }
  }

  /// Open-interval uniform from 52 random bits; the half-step offset keeps
  /// both 0 and 1 out of reach.
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
  }

 private:
  Philox4x32::Key key_;
};

}  // namespace temper
