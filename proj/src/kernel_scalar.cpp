#include <stdexcept>

#include "tadlab/error.hpp"
#include "tadlab/fastmath.hpp"
#include "tadlab/kernel.hpp"

namespace tadlab {

ForceField ForceField::from(const Potential1D& pot) {
  ForceField f;
  const auto dc = pot.grad_coeffs();
  if (dc.size() > static_cast<std::size_t>(kMaxCoeffs))
    throw Error("polynomial degree too high for the walker kernel (max 16)");
  f.ncoeffs = static_cast<int>(dc.size());
  for (std::size_t k = 0; k < dc.size(); ++k) f.dcoeffs[k] = dc[k];
  if (f.ncoeffs == 0) {
    f.ncoeffs = 1;
    f.dcoeffs[0] = 0.0;
  }
  f.cos_w = pot.cos_frequency();
  f.cos_aw = pot.cos_amplitude() * pot.cos_frequency();
  return f;
}

double ForceField::grad(double x) const {
  double g = dcoeffs[ncoeffs - 1];
  for (int k = ncoeffs - 2; k >= 0; --k) g = g * x + dcoeffs[k];
  if (cos_aw != 0.0) g = g - cos_aw * fastmath::sin(cos_w * x);
  return g;
}

void advance_walker(const ForceField& f, Walker& w, RngState& rng) {
  w.exited = false;
  if (w.remaining <= 0) return;
  for (;;) {
    const std::uint64_t b1 = xoshiro_next(rng);
    const std::uint64_t b2 = xoshiro_next(rng);
    const auto nz = fastmath::box_muller(b1, b2);
    for (const double z : {nz.z0, nz.z1}) {
      const double g = f.grad(w.x);
      double xn = (w.x - g * w.dt) + w.noise * z;
      bool out = false;
      if (w.reflect) {
        if (xn < w.lo) xn = 2.0 * w.lo - xn;
        if (xn > w.hi) xn = 2.0 * w.hi - xn;
      } else {
        out = xn <= w.lo || xn >= w.hi;
      }
      w.x = xn;
      ++w.steps;
      --w.remaining;
      if (out) {
        w.exited = true;
        return;
      }
      if (w.remaining == 0) return;
    }
  }
}

void LaneBlock::load_rng(int lane, const RngState& st) {
  s0[lane] = st.s[0];
  s1[lane] = st.s[1];
  s2[lane] = st.s[2];
  s3[lane] = st.s[3];
}

RngState LaneBlock::rng(int lane) const {
  RngState st;
  st.s = {s0[lane], s1[lane], s2[lane], s3[lane]};
  return st;
}

namespace detail {

void run_block_scalar(const ForceField& f, LaneBlock& b) {
  for (int l = 0; l < LaneBlock::kLanes; ++l) {
    if (!b.active[l]) continue;
    Walker w;
    w.x = b.x[l];
    w.lo = b.lo[l];
    w.hi = b.hi[l];
    w.dt = b.dt[l];
    w.noise = b.noise[l];
    w.remaining = b.remaining[l];
    w.steps = b.steps[l];
    w.reflect = b.reflect[l] != 0;
    RngState st = b.rng(l);
    advance_walker(f, w, st);
    b.x[l] = w.x;
    b.remaining[l] = w.remaining;
    b.steps[l] = w.steps;
    b.load_rng(l, st);
    b.exited[l] = w.exited ? -1 : 0;
    b.stopped[l] = -1;
    b.active[l] = 0;
  }
}

}  // namespace detail
}  // namespace tadlab
