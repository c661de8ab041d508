// AVX2 backend.  Every expression mirrors fastmath.hpp / kernel_scalar.cpp
// operation for operation; this file must be compiled without FMA
// contraction.

#include <immintrin.h>

#include "tadlab/fastmath.hpp"
#include "tadlab/kernel.hpp"

namespace tadlab::detail {
namespace {

namespace fm = fastmath;

using vd = __m256d;
using vi = __m256i;

inline vd set1(double v) { return _mm256_set1_pd(v); }
inline vi set1i(std::uint64_t v) { return _mm256_set1_epi64x(static_cast<long long>(v)); }
inline vd blend(vd a, vd b, vd mask) { return _mm256_blendv_pd(a, b, mask); }
inline vd neg(vd a) { return _mm256_xor_pd(a, set1(-0.0)); }
inline vd as_d(vi a) { return _mm256_castsi256_pd(a); }
inline vi as_i(vd a) { return _mm256_castpd_si256(a); }

template <int K>
inline vi rotl(vi v) {
  return _mm256_or_si256(_mm256_slli_epi64(v, K), _mm256_srli_epi64(v, 64 - K));
}

struct Xoshiro {
  vi s0, s1, s2, s3;

  // Callers only draw when every occupied lane is active (the loop returns
  // as soon as any lane stops), so the update needs no lane mask.
  vi next() {
    const vi result = _mm256_add_epi64(rotl<23>(_mm256_add_epi64(s0, s3)), s0);
    const vi t = _mm256_slli_epi64(s1, 17);
    vi n2 = _mm256_xor_si256(s2, s0);
    vi n3 = _mm256_xor_si256(s3, s1);
    const vi n1 = _mm256_xor_si256(s1, n2);
    const vi n0 = _mm256_xor_si256(s0, n3);
    n2 = _mm256_xor_si256(n2, t);
    n3 = rotl<45>(n3);
    s0 = n0;
    s1 = n1;
    s2 = n2;
    s3 = n3;
    return result;
  }
};

inline vd uniform52(vi bits) {
  return _mm256_sub_pd(as_d(_mm256_or_si256(_mm256_srli_epi64(bits, 12), set1i(fm::kOneBits))),
                       set1(1.0));
}

inline vd vlog(vd u) {
  const vi bits = as_i(u);
  const vd field = _mm256_sub_pd(
      as_d(_mm256_or_si256(_mm256_srli_epi64(bits, 52), set1i(fm::kExpShiftBits))), set1(fm::kTwo52));
  vd e = _mm256_sub_pd(field, set1(1023.0));
  vd m = as_d(_mm256_or_si256(_mm256_and_si256(bits, set1i(fm::kMantMask)), set1i(fm::kOneBits)));
  const vd big = _mm256_cmp_pd(m, set1(fm::kSqrt2), _CMP_GT_OQ);
  m = blend(m, _mm256_mul_pd(m, set1(0.5)), big);
  e = blend(e, _mm256_add_pd(e, set1(1.0)), big);
  const vd f = _mm256_sub_pd(m, set1(1.0));
  const vd s = _mm256_div_pd(f, _mm256_add_pd(set1(2.0), f));
  const vd z = _mm256_mul_pd(s, s);
  const vd w = _mm256_mul_pd(z, z);
  const vd t1 = _mm256_mul_pd(
      w, _mm256_add_pd(set1(fm::kLg2),
                       _mm256_mul_pd(w, _mm256_add_pd(set1(fm::kLg4), _mm256_mul_pd(w, set1(fm::kLg6))))));
  const vd t2 = _mm256_mul_pd(
      z, _mm256_add_pd(
             set1(fm::kLg1),
             _mm256_mul_pd(w, _mm256_add_pd(set1(fm::kLg3),
                                            _mm256_mul_pd(w, _mm256_add_pd(set1(fm::kLg5),
                                                                           _mm256_mul_pd(w, set1(fm::kLg7))))))));
  const vd r = _mm256_add_pd(t2, t1);
  const vd hfsq = _mm256_mul_pd(_mm256_mul_pd(set1(0.5), f), f);
  // e*ln2hi - ((hfsq - (s*(hfsq+r) + e*ln2lo)) - f)
  const vd inner = _mm256_add_pd(_mm256_mul_pd(s, _mm256_add_pd(hfsq, r)), _mm256_mul_pd(e, set1(fm::kLn2Lo)));
  return _mm256_sub_pd(_mm256_mul_pd(e, set1(fm::kLn2Hi)), _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline vd horner(vd z, std::initializer_list<double> c) {
  // c listed from the highest-order coefficient down.
  auto it = c.begin();
  vd acc = set1(*it++);
  for (; it != c.end(); ++it) acc = _mm256_add_pd(set1(*it), _mm256_mul_pd(z, acc));
  return acc;
}

inline vd sin_poly(vd y, vd z) {
  const vd p = horner(z, {fm::kS7, fm::kS6, fm::kS5, fm::kS4, fm::kS3, fm::kS2, fm::kS1});
  return _mm256_add_pd(y, _mm256_mul_pd(_mm256_mul_pd(y, z), p));
}

inline vd cos_poly(vd z) {
  const vd p = horner(z, {fm::kC7, fm::kC6, fm::kC5, fm::kC4, fm::kC3, fm::kC2, fm::kC1});
  return _mm256_add_pd(_mm256_sub_pd(set1(1.0), _mm256_mul_pd(set1(0.5), z)),
                       _mm256_mul_pd(_mm256_mul_pd(z, z), p));
}

inline void rotate(vd q, vd& s, vd& c) {
  const vd q1 = _mm256_cmp_pd(q, set1(1.0), _CMP_EQ_OQ);
  const vd q2 = _mm256_cmp_pd(q, set1(2.0), _CMP_EQ_OQ);
  const vd q3 = _mm256_cmp_pd(q, set1(3.0), _CMP_EQ_OQ);
  vd rs = s, rc = c;
  rs = blend(rs, c, q1);
  rc = blend(rc, neg(s), q1);
  rs = blend(rs, neg(s), q2);
  rc = blend(rc, neg(c), q2);
  rs = blend(rs, neg(c), q3);
  rc = blend(rc, s, q3);
  s = rs;
  c = rc;
}

constexpr int kRound = _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC;

inline vd vsin(vd x) {
  const vd k = _mm256_round_pd(_mm256_mul_pd(x, set1(fm::kTwoOverPi)), kRound);
  const vd y = _mm256_sub_pd(_mm256_sub_pd(x, _mm256_mul_pd(k, set1(fm::kPio2Hi))),
                             _mm256_mul_pd(k, set1(fm::kPio2Lo)));
  const vd q = _mm256_sub_pd(k, _mm256_mul_pd(set1(4.0), _mm256_floor_pd(_mm256_mul_pd(k, set1(0.25)))));
  const vd z = _mm256_mul_pd(y, y);
  vd s = sin_poly(y, z);
  vd c = cos_poly(z);
  rotate(q, s, c);
  return s;
}

inline void box_muller(vi b1, vi b2, vd& z0, vd& z1) {
  const vd u1 = _mm256_sub_pd(set1(1.0), uniform52(b1));
  const vd u2 = uniform52(b2);
  const vd r = _mm256_sqrt_pd(_mm256_mul_pd(set1(-2.0), vlog(u1)));
  const vd q = _mm256_round_pd(_mm256_mul_pd(set1(4.0), u2), kRound);
  const vd y = _mm256_mul_pd(_mm256_sub_pd(u2, _mm256_mul_pd(set1(0.25), q)), set1(fm::kTwoPi));
  const vd z = _mm256_mul_pd(y, y);
  vd s = sin_poly(y, z);
  vd c = cos_poly(z);
  rotate(q, s, c);
  z0 = _mm256_mul_pd(r, c);
  z1 = _mm256_mul_pd(r, s);
}

}  // namespace

namespace {

constexpr int kVec = LaneBlock::kLanes / 4;

// All lanes of the block advance together; the four vectors are independent
// dependency chains, which keeps the divider and the polynomial latencies
// overlapped.
struct Lanes {
  vd x[kVec], lo[kVec], hi[kVec], lo2[kVec], hi2[kVec], dt[kVec], noise[kVec], refl[kVec];
  vi remaining[kVec], steps[kVec], act[kVec], stopped[kVec], exited[kVec];
  Xoshiro rng[kVec];
};

template <class T>
inline T* at(T* base, int v) {
  return base + 4 * v;
}

inline vi loadi(const std::int64_t* p) { return _mm256_load_si256(reinterpret_cast<const vi*>(p)); }
inline vi loadu(const std::uint64_t* p) { return _mm256_load_si256(reinterpret_cast<const vi*>(p)); }
inline void storei(std::int64_t* p, vi v) { _mm256_store_si256(reinterpret_cast<vi*>(p), v); }
inline void storeu(std::uint64_t* p, vi v) { _mm256_store_si256(reinterpret_cast<vi*>(p), v); }

}  // namespace

void run_block_avx2(const ForceField& f, LaneBlock& b) {
  Lanes L;
  const vi zero = _mm256_setzero_si256();
  bool any_reflect = false;
  for (int v = 0; v < kVec; ++v) {
    L.x[v] = _mm256_load_pd(at(b.x, v));
    L.lo[v] = _mm256_load_pd(at(b.lo, v));
    L.hi[v] = _mm256_load_pd(at(b.hi, v));
    L.dt[v] = _mm256_load_pd(at(b.dt, v));
    L.noise[v] = _mm256_load_pd(at(b.noise, v));
    L.lo2[v] = _mm256_mul_pd(set1(2.0), L.lo[v]);
    L.hi2[v] = _mm256_mul_pd(set1(2.0), L.hi[v]);
    L.remaining[v] = loadi(at(b.remaining, v));
    L.steps[v] = loadi(at(b.steps, v));
    L.refl[v] = as_d(loadi(at(b.reflect, v)));
    any_reflect = any_reflect || _mm256_movemask_pd(L.refl[v]) != 0;
    vi act = loadi(at(b.active, v));
    // Lanes entering with an empty budget stop without stepping.
    const vi empty = _mm256_andnot_si256(_mm256_cmpgt_epi64(L.remaining[v], zero), act);
    L.stopped[v] = empty;
    L.exited[v] = zero;
    L.act[v] = _mm256_andnot_si256(empty, act);
    L.rng[v] = Xoshiro{loadu(at(b.s0, v)), loadu(at(b.s1, v)), loadu(at(b.s2, v)), loadu(at(b.s3, v))};
  }

  auto substep = [&](const vd (&z)[kVec]) {
    vd g[kVec];
    for (int v = 0; v < kVec; ++v) g[v] = set1(f.dcoeffs[f.ncoeffs - 1]);
    for (int k = f.ncoeffs - 2; k >= 0; --k) {
      const vd ck = set1(f.dcoeffs[k]);
      for (int v = 0; v < kVec; ++v) g[v] = _mm256_add_pd(_mm256_mul_pd(g[v], L.x[v]), ck);
    }
    if (f.cos_aw != 0.0)
      for (int v = 0; v < kVec; ++v)
        g[v] = _mm256_sub_pd(g[v], _mm256_mul_pd(set1(f.cos_aw), vsin(_mm256_mul_pd(set1(f.cos_w), L.x[v]))));
    for (int v = 0; v < kVec; ++v) {
      vd xn = _mm256_add_pd(_mm256_sub_pd(L.x[v], _mm256_mul_pd(g[v], L.dt[v])), _mm256_mul_pd(L.noise[v], z[v]));
      vd out;
      if (any_reflect) {
        const vd below = _mm256_and_pd(_mm256_cmp_pd(xn, L.lo[v], _CMP_LT_OQ), L.refl[v]);
        xn = blend(xn, _mm256_sub_pd(L.lo2[v], xn), below);
        const vd above = _mm256_and_pd(_mm256_cmp_pd(xn, L.hi[v], _CMP_GT_OQ), L.refl[v]);
        xn = blend(xn, _mm256_sub_pd(L.hi2[v], xn), above);
        out = _mm256_andnot_pd(L.refl[v], _mm256_or_pd(_mm256_cmp_pd(xn, L.lo[v], _CMP_LE_OQ),
                                                       _mm256_cmp_pd(xn, L.hi[v], _CMP_GE_OQ)));
      } else {
        out = _mm256_or_pd(_mm256_cmp_pd(xn, L.lo[v], _CMP_LE_OQ), _mm256_cmp_pd(xn, L.hi[v], _CMP_GE_OQ));
      }
      const vi act = L.act[v];
      L.x[v] = blend(L.x[v], xn, as_d(act));
      L.steps[v] = _mm256_sub_epi64(L.steps[v], act);
      L.remaining[v] = _mm256_add_epi64(L.remaining[v], act);
      const vi out_i = as_i(out);
      const vi done = _mm256_and_si256(act, _mm256_or_si256(out_i, _mm256_cmpeq_epi64(L.remaining[v], zero)));
      L.exited[v] = _mm256_or_si256(L.exited[v], _mm256_and_si256(done, out_i));
      L.stopped[v] = _mm256_or_si256(L.stopped[v], done);
      L.act[v] = _mm256_andnot_si256(done, act);
    }
  };

  auto any_of = [](const vi (&m)[kVec]) {
    vi acc = m[0];
    for (int v = 1; v < kVec; ++v) acc = _mm256_or_si256(acc, m[v]);
    return !_mm256_testz_si256(acc, acc);
  };

  while (!any_of(L.stopped) && any_of(L.act)) {
    vd z0[kVec], z1[kVec];
    for (int v = 0; v < kVec; ++v) {
      const vi b1 = L.rng[v].next();
      const vi b2 = L.rng[v].next();
      box_muller(b1, b2, z0[v], z1[v]);
    }
    substep(z0);
    substep(z1);
  }

  for (int v = 0; v < kVec; ++v) {
    _mm256_store_pd(at(b.x, v), L.x[v]);
    storei(at(b.remaining, v), L.remaining[v]);
    storei(at(b.steps, v), L.steps[v]);
    storeu(at(b.s0, v), L.rng[v].s0);
    storeu(at(b.s1, v), L.rng[v].s1);
    storeu(at(b.s2, v), L.rng[v].s2);
    storeu(at(b.s3, v), L.rng[v].s3);
    storei(at(b.active, v), L.act[v]);
    storei(at(b.exited, v), L.exited[v]);
    storei(at(b.stopped, v), L.stopped[v]);
  }
}

}  // namespace tadlab::detail
