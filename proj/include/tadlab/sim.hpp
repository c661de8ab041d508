#pragma once

// Simulation procedures are written as coroutines that co_await walker
// segments.  The same procedure runs either synchronously on the scalar
// kernel (run_sync) or interleaved with thousands of others on the SIMD
// lanes (run_ensemble).  Each procedure owns one Rng; the segment kernels
// consume that Rng's raw state, so results do not depend on which driver or
// lane ran them.

#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "tadlab/kernel.hpp"
#include "tadlab/rng.hpp"

namespace tadlab {

struct SegmentRequest {
  double x = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double beta = 1.0;
  double dt = 1e-3;
  std::int64_t max_steps = 0;
  bool reflect = false;
};

struct SegmentOutcome {
  double x = 0.0;
  std::int64_t steps = 0;
  bool exited = false;
};

struct SimContext {
  Rng* rng = nullptr;
  std::optional<SegmentRequest> pending;
  SegmentOutcome outcome;
  std::coroutine_handle<> resume_point;
};

namespace detail {

struct PromiseBase {
  SimContext* ctx = nullptr;
  std::coroutine_handle<> continuation;
  std::exception_ptr error;

  std::suspend_always initial_suspend() noexcept { return {}; }

  struct FinalAwaiter {
    bool await_ready() noexcept { return false; }
    template <class P>
    std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) noexcept {
      auto c = h.promise().continuation;
      if (c) return c;
      return std::noop_coroutine();
    }
    void await_resume() noexcept {}
  };
  FinalAwaiter final_suspend() noexcept { return {}; }
  void unhandled_exception() { error = std::current_exception(); }
};

template <class T>
struct PromiseValue {
  std::optional<T> value;
  template <class U>
  void return_value(U&& v) {
    value.emplace(std::forward<U>(v));
  }
  T take() { return std::move(*value); }
};

template <>
struct PromiseValue<void> {
  void return_void() {}
  void take() {}
};

}  // namespace detail

template <class T>
class [[nodiscard]] Sim {
 public:
  struct promise_type : detail::PromiseBase, detail::PromiseValue<T> {
    Sim get_return_object() { return Sim(std::coroutine_handle<promise_type>::from_promise(*this)); }
  };
  using handle_type = std::coroutine_handle<promise_type>;

  Sim(Sim&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Sim& operator=(Sim&& o) noexcept {
    if (this != &o) {
      if (h_) h_.destroy();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  Sim(const Sim&) = delete;
  Sim& operator=(const Sim&) = delete;
  ~Sim() {
    if (h_) h_.destroy();
  }

  /// Attach as the root of a driver context.
  std::coroutine_handle<> bind(SimContext* ctx) {
    h_.promise().ctx = ctx;
    return h_;
  }
  bool done() const { return h_.done(); }
  T result() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
    return h_.promise().take();
  }

  struct Awaiter {
    handle_type child;
    bool await_ready() noexcept { return false; }
    template <class P>
    std::coroutine_handle<> await_suspend(std::coroutine_handle<P> parent) noexcept {
      child.promise().ctx = parent.promise().ctx;
      child.promise().continuation = parent;
      return child;
    }
    T await_resume() {
      if (child.promise().error) std::rethrow_exception(child.promise().error);
      return child.promise().take();
    }
  };
  Awaiter operator co_await() && noexcept { return Awaiter{h_}; }

 private:
  explicit Sim(handle_type h) : h_(h) {}
  handle_type h_;
};

struct SegmentAwaiter {
  SegmentRequest req;
  SimContext* ctx = nullptr;

  bool await_ready() const noexcept { return false; }
  template <class P>
  void await_suspend(std::coroutine_handle<P> h) noexcept {
    ctx = h.promise().ctx;
    ctx->pending = req;
    ctx->resume_point = h;
  }
  SegmentOutcome await_resume() const noexcept { return ctx->outcome; }
};

/// co_await segment(req) runs one walker segment with the procedure's Rng.
inline SegmentAwaiter segment(const SegmentRequest& req) { return SegmentAwaiter{req, nullptr}; }

/// Runs a segment synchronously with the scalar kernel.
SegmentOutcome run_segment(const ForceField& f, const SegmentRequest& req, Rng& rng);

namespace detail {
/// Resumes ctx until it posts a segment (true) or the root finishes (false).
bool pump(SimContext& ctx);
/// Serves posted segments with the scalar kernel until the root finishes.
void drive_sync(const ForceField& f, SimContext& ctx);
}  // namespace detail

/// Runs a procedure to completion on the calling thread.
template <class T>
T run_sync(const ForceField& f, Sim<T> sim, Rng& rng) {
  SimContext ctx;
  ctx.rng = &rng;
  ctx.resume_point = sim.bind(&ctx);
  detail::drive_sync(f, ctx);
  return sim.result();
}

struct EnsembleOptions {
  unsigned threads = 1;
  std::optional<Backend> backend;  // default: active_backend()
};

struct EnsembleTask {
  explicit EnsembleTask(Rng r) : rng(r) {}
  virtual ~EnsembleTask() = default;
  virtual std::coroutine_handle<> bind() = 0;
  Rng rng;
  SimContext ctx;
};

/// Type-erased driver.  make(i) creates task i; finish(i, task) is called
/// once task i's root completed.  Tasks are created lazily from an atomic
/// counter, so at most threads * lanes tasks are alive at any time.
void run_tasks(const ForceField& f, std::size_t n,
               const std::function<std::unique_ptr<EnsembleTask>(std::size_t)>& make,
               const std::function<void(std::size_t, EnsembleTask&)>& finish,
               const EnsembleOptions& opt);

/// Runs n independent procedures; procedure i gets Rng(seed, stream_base + i)
/// and is built by make(i, rng).  Results are in index order and do not
/// depend on threads or backend.
template <class Factory>
auto run_ensemble(const ForceField& f, std::size_t n, std::uint64_t seed, std::uint64_t stream_base,
                  Factory&& make, const EnsembleOptions& opt = {}) {
  using SimT = decltype(make(std::size_t{}, std::declval<Rng&>()));
  using T = decltype(std::declval<SimT&>().result());
  struct Task : EnsembleTask {
    Task(Rng r, Factory& mk, std::size_t i) : EnsembleTask(r), sim(mk(i, rng)) {}
    std::coroutine_handle<> bind() override { return sim.bind(&ctx); }
    SimT sim;
  };
  std::vector<std::optional<T>> slots(n);
  run_tasks(
      f, n,
      [&](std::size_t i) -> std::unique_ptr<EnsembleTask> {
        return std::make_unique<Task>(Rng(seed, stream_base + i), make, i);
      },
      [&](std::size_t i, EnsembleTask& t) { slots[i].emplace(static_cast<Task&>(t).sim.result()); },
      opt);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace tadlab
