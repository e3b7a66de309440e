#pragma once

// Branch-parallel inference.  Branches are independent given the shared
// embedding, so a pool of long-lived workers evaluates them concurrently;
// the per-branch logit terms are then reduced on the calling thread in
// ascending branch order — the same left-associated order the sequential
// path uses — which makes the parallel result bitwise-equal to predict(),
// not merely close.  The reduction point is the only synchronization, and
// workers share nothing but the read-only model and input.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pf/dataset.hpp"
#include "pf/model.hpp"

namespace pf {

enum class Pinning { none, round_robin };

Pinning parse_pinning(const std::string& s);
const char* pinning_name(Pinning p);

struct PoolConfig {
    std::size_t workers = 1;  // capped at the branch count per call
    std::size_t batch = 0;    // samples per timed benchmark pass; 0 = the whole set
    Pinning pinning = Pinning::none;
};

// Fixed-size pool of long-lived workers (per-call thread creation would
// dominate timings at this scale).  run() executes fn(0..n-1) across the
// pool and blocks until every index finished; worker exceptions are
// rethrown on the calling thread.  After shutdown(), run() throws.
class ThreadPool {
  public:
    explicit ThreadPool(std::size_t workers, Pinning pinning = Pinning::none);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const { return threads_.size(); }

    void run(std::size_t n, const std::function<void(std::size_t)>& fn);

    // Stops accepting work and joins the workers.  A run() blocked on
    // unfinished work is woken and fails; no partial result is returned.
    void shutdown();

  private:
    void worker_loop(std::size_t worker_index);

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable work_cv_;  // workers wait here
    std::condition_variable done_cv_;  // run() waits here
    std::deque<std::function<void()>> queue_;
    std::size_t inflight_ = 0;  // queued + executing tasks of the current run
    bool shutdown_ = false;
};

// Full-width logits via the pool, bitwise-equal to predict(x0, model).
// When branch_ns is given it must hold one counter per branch; each
// branch's compute time is added to its slot.
template <typename T>
Tensor<T> parallel_predict(const Tensor<T>& x0, const ParaFormerModel<T>& model, ThreadPool& pool,
                           std::vector<std::atomic<std::uint64_t>>* branch_ns = nullptr);

struct BenchReport {
    std::size_t workers = 0;
    std::size_t batch = 0;  // samples evaluated per timed pass
    std::string pinning;
    std::size_t branches = 0, layers = 0, width = 0;
    double wall_ms = 0.0;      // median of the timed passes
    double baseline_ms = 0.0;  // single-worker median from the same run
    double speedup = 0.0;      // baseline_ms / wall_ms
    std::vector<double> per_branch_ms;  // compute time inside each branch, over all timed passes
};

// Times parallel_predict over the evaluation set for every pool config:
// 2 warmup passes, then the median of 5 timed passes, against a
// single-worker baseline measured the same way in the same call.
template <typename T>
std::vector<BenchReport> bench_inference(const ParaFormerModel<T>& model, const Dataset<T>& data,
                                         const std::vector<PoolConfig>& pool_configs, std::size_t warmup = 2,
                                         std::size_t passes = 5);

}  // namespace pf
