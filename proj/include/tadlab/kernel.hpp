#pragma once

// Lockstep Euler–Maruyama walkers.  A LaneBlock holds sixteen independent
// walkers in structure-of-arrays form; a backend advances every active lane
// until at least one of them stops (exit or exhausted step budget).
//
// Each iteration draws two 64-bit words per lane, turns them into a normal
// pair by Box–Muller and spends the pair on two consecutive steps.  A lane
// that stops on the first of the two steps discards the second normal.  The
// scalar and AVX2 backends perform the same floating-point operations in the
// same order and produce bit-identical lanes.

#include <array>
#include <cstdint>
#include <string>

#include "tadlab/potential.hpp"
#include "tadlab/rng.hpp"

namespace tadlab {

/// V' in a form both backends evaluate identically:
/// sum_k d_k x^k - (A w) sin(w x).
struct ForceField {
  static constexpr int kMaxCoeffs = 16;
  std::array<double, kMaxCoeffs> dcoeffs{};
  int ncoeffs = 0;
  double cos_aw = 0.0;
  double cos_w = 0.0;

  static ForceField from(const Potential1D& pot);
  double grad(double x) const;
};

struct alignas(32) LaneBlock {
  static constexpr int kLanes = 16;  // four AVX2 vectors, interleaved
  double x[kLanes] = {};
  double lo[kLanes] = {};
  double hi[kLanes] = {};
  double dt[kLanes] = {};
  double noise[kLanes] = {};  // sqrt(2 dt / beta)
  std::int64_t remaining[kLanes] = {};
  std::int64_t steps[kLanes] = {};
  std::uint64_t s0[kLanes] = {};
  std::uint64_t s1[kLanes] = {};
  std::uint64_t s2[kLanes] = {};
  std::uint64_t s3[kLanes] = {};
  // Masks are 0 or -1 so they load directly as vector masks.
  std::int64_t reflect[kLanes] = {};
  std::int64_t active[kLanes] = {};
  std::int64_t exited[kLanes] = {};
  std::int64_t stopped[kLanes] = {};

  void load_rng(int lane, const RngState& st);
  RngState rng(int lane) const;
};

/// One walker, scalar form.  Used by the scalar backend lane by lane and by
/// the single-trajectory helpers in dynamics.
struct Walker {
  double x = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double dt = 0.0;
  double noise = 0.0;
  std::int64_t remaining = 0;
  std::int64_t steps = 0;
  bool reflect = false;
  bool exited = false;
};

/// Runs w until it leaves (lo, hi) (absorbing mode) or its budget is spent.
/// In reflecting mode a step landing outside is mirrored about the crossed
/// end and the walker only stops on budget.
void advance_walker(const ForceField& f, Walker& w, RngState& rng);

enum class Backend { scalar, avx2 };

const char* to_string(Backend b);
bool backend_available(Backend b);
/// Best available backend unless overridden by set_backend() or by the
/// TADLAB_BACKEND environment variable ("scalar" or "avx2").
Backend active_backend();
void set_backend(Backend b);

void run_block(Backend b, const ForceField& f, LaneBlock& block);

namespace detail {
void run_block_scalar(const ForceField& f, LaneBlock& block);
#if TADLAB_HAVE_AVX2
void run_block_avx2(const ForceField& f, LaneBlock& block);
#endif
}  // namespace detail

}  // namespace tadlab
