#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "tadlab/error.hpp"
#include "tadlab/sim.hpp"

namespace tadlab {
namespace {

double noise_scale(const SegmentRequest& r) { return std::sqrt(2.0 * r.dt / r.beta); }

void check_request(const SegmentRequest& r) {
  if (!(r.dt > 0.0) || !(r.beta > 0.0)) throw Error("segment needs dt > 0 and beta > 0");
  if (!(r.lo < r.hi)) throw Error("segment needs lo < hi");
}

}  // namespace

SegmentOutcome run_segment(const ForceField& f, const SegmentRequest& req, Rng& rng) {
  check_request(req);
  Walker w;
  w.x = req.x;
  w.lo = req.lo;
  w.hi = req.hi;
  w.dt = req.dt;
  w.noise = noise_scale(req);
  w.remaining = req.max_steps;
  w.reflect = req.reflect;
  advance_walker(f, w, rng.state());
  return {w.x, w.steps, w.exited};
}

namespace detail {

bool pump(SimContext& ctx) {
  ctx.pending.reset();
  ctx.resume_point.resume();
  return ctx.pending.has_value();
}

void drive_sync(const ForceField& f, SimContext& ctx) {
  while (pump(ctx)) ctx.outcome = run_segment(f, *ctx.pending, *ctx.rng);
}

}  // namespace detail

namespace {

struct Worker {
  const ForceField& f;
  std::size_t n;
  const std::function<std::unique_ptr<EnsembleTask>(std::size_t)>& make;
  const std::function<void(std::size_t, EnsembleTask&)>& finish;
  Backend backend;
  std::atomic<std::size_t>& next;
  std::atomic<bool>& abort;

  Worker(const ForceField& f_, std::size_t n_,
         const std::function<std::unique_ptr<EnsembleTask>(std::size_t)>& make_,
         const std::function<void(std::size_t, EnsembleTask&)>& finish_, Backend b,
         std::atomic<std::size_t>& next_, std::atomic<bool>& abort_)
      : f(f_), n(n_), make(make_), finish(finish_), backend(b), next(next_), abort(abort_) {}

  std::unique_ptr<EnsembleTask> task[LaneBlock::kLanes];
  std::size_t index[LaneBlock::kLanes] = {};
  LaneBlock block;

  // Pumps lane l's task until it posts a runnable segment; zero-budget
  // segments are answered inline.  Returns false when the task finished.
  bool advance_task(int l, bool first) {
    EnsembleTask& t = *task[l];
    if (first) t.ctx.resume_point = t.bind();
    for (;;) {
      if (!detail::pump(t.ctx)) return false;
      const SegmentRequest& r = *t.ctx.pending;
      check_request(r);
      if (r.max_steps > 0) break;
      t.ctx.outcome = {r.x, 0, false};
    }
    load_lane(l);
    return true;
  }

  void load_lane(int l) {
    EnsembleTask& t = *task[l];
    const SegmentRequest& r = *t.ctx.pending;
    block.x[l] = r.x;
    block.lo[l] = r.lo;
    block.hi[l] = r.hi;
    block.dt[l] = r.dt;
    block.noise[l] = noise_scale(r);
    block.remaining[l] = r.max_steps;
    block.steps[l] = 0;
    block.reflect[l] = r.reflect ? -1 : 0;
    block.active[l] = -1;
    block.exited[l] = 0;
    block.stopped[l] = 0;
    block.load_rng(l, t.rng.state());
  }

  void idle_lane(int l) {
    task[l].reset();
    block.active[l] = 0;
    block.stopped[l] = 0;
    block.x[l] = 0.0;
    block.lo[l] = -1.0;
    block.hi[l] = 1.0;
    block.dt[l] = 0.0;
    block.noise[l] = 0.0;
  }

  // Fills lane l with fresh tasks until one posts a segment.
  void fill(int l) {
    for (;;) {
      if (abort.load(std::memory_order_relaxed)) {
        idle_lane(l);
        return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= n) {
        idle_lane(l);
        return;
      }
      index[l] = i;
      task[l] = make(i);
      if (advance_task(l, true)) return;
      finish(i, *task[l]);
    }
  }

  void run() {
    for (int l = 0; l < LaneBlock::kLanes; ++l) fill(l);
    for (;;) {
      bool any = false;
      for (int l = 0; l < LaneBlock::kLanes; ++l) any = any || block.active[l] != 0;
      if (!any) return;
      run_block(backend, f, block);
      for (int l = 0; l < LaneBlock::kLanes; ++l) {
        if (!block.stopped[l]) continue;
        EnsembleTask& t = *task[l];
        t.rng.state() = block.rng(l);
        t.ctx.outcome = {block.x[l], block.steps[l], block.exited[l] != 0};
        block.stopped[l] = 0;
        if (!advance_task(l, false)) {
          finish(index[l], t);
          fill(l);
        }
      }
    }
  }
};

}  // namespace

void run_tasks(const ForceField& f, std::size_t n,
               const std::function<std::unique_ptr<EnsembleTask>(std::size_t)>& make,
               const std::function<void(std::size_t, EnsembleTask&)>& finish,
               const EnsembleOptions& opt) {
  const Backend backend = opt.backend.value_or(active_backend());
  if (!backend_available(backend)) throw Error("requested backend not available");
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto body = [&] {
    try {
      Worker w(f, n, make, finish, backend, next, abort);
      w.run();
    } catch (...) {
      abort.store(true);
      std::lock_guard<std::mutex> lock(err_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const unsigned threads = std::max(1u, opt.threads);
  if (threads == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tadlab
