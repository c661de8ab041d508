#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

namespace tadlab {

/// xoshiro256++ state.  Streams are derived by hashing (seed, stream,
/// substream) through SplitMix64, so every replica's sequence is fixed by
/// its indices and not by scheduling order.
struct RngState {
  std::array<std::uint64_t, 4> s{};
};

std::uint64_t splitmix64(std::uint64_t& x);
RngState derive_state(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

inline std::uint64_t rotl64(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

inline std::uint64_t xoshiro_next(RngState& st) {
  auto& s = st.s;
  const std::uint64_t result = rotl64(s[0] + s[3], 23) + s[0];
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl64(s[3], 45);
  return result;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);
  explicit Rng(RngState st) : state_(st) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return xoshiro_next(state_); }

  /// [0, 1) with 52 random bits.
  double uniform();
  /// (0, 1].
  double uniform_open();
  double normal();
  double exponential(double rate);

  RngState& state() { return state_; }
  const RngState& state() const { return state_; }
  /// Drops a cached Box–Muller partner (walker kernels never carry one
  /// across segments).
  void discard_spare() { spare_.reset(); }

 private:
  RngState state_;
  std::optional<double> spare_;
};

}  // namespace tadlab
