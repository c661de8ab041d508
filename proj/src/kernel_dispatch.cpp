#include <atomic>
#include <cstdlib>
#include <cstring>

#include "tadlab/error.hpp"
#include "tadlab/kernel.hpp"

namespace tadlab {
namespace {

Backend detect() {
#if TADLAB_HAVE_AVX2
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Backend::avx2;
#endif
  return Backend::scalar;
}

Backend initial() {
  if (const char* env = std::getenv("TADLAB_BACKEND")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && backend_available(Backend::avx2)) return Backend::avx2;
  }
  return detect();
}

std::atomic<int>& selected() {
  static std::atomic<int> b{static_cast<int>(initial())};
  return b;
}

}  // namespace

const char* to_string(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  return detect() == Backend::avx2;
}

Backend active_backend() { return static_cast<Backend>(selected().load()); }

void set_backend(Backend b) {
  if (!backend_available(b)) throw Error(std::string("backend not available: ") + to_string(b));
  selected().store(static_cast<int>(b));
}

void run_block(Backend b, const ForceField& f, LaneBlock& block) {
#if TADLAB_HAVE_AVX2
  if (b == Backend::avx2) {
    detail::run_block_avx2(f, block);
    return;
  }
#endif
  (void)b;
  detail::run_block_scalar(f, block);
}

}  // namespace tadlab
