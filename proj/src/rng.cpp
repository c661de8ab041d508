#include "tadlab/rng.hpp"

#include <cmath>

#include "tadlab/error.hpp"
#include "tadlab/fastmath.hpp"

namespace tadlab {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RngState derive_state(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  std::uint64_t h = seed;
  std::uint64_t key = splitmix64(h);
  h = key ^ (stream * 0xD1B54A32D192ED03ULL);
  key = splitmix64(h);
  h = key ^ (substream * 0x8CB92BA72F3D8DD7ULL);
  key = splitmix64(h);
  RngState st;
  std::uint64_t x = key;
  for (auto& w : st.s) w = splitmix64(x);
  if ((st.s[0] | st.s[1] | st.s[2] | st.s[3]) == 0) st.s[0] = 1;
  return st;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
    : state_(derive_state(seed, stream, substream)) {}

double Rng::uniform() { return fastmath::uniform52(xoshiro_next(state_)); }

double Rng::uniform_open() { return 1.0 - uniform(); }

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const std::uint64_t b1 = xoshiro_next(state_);
  const std::uint64_t b2 = xoshiro_next(state_);
  const auto p = fastmath::box_muller(b1, b2);
  spare_ = p.z1;
  return p.z0;
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw Error("exponential rate must be positive");
  return -fastmath::log(uniform_open()) / rate;
}

}  // namespace tadlab
