#include "pf/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <memory>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace pf {

Pinning parse_pinning(const std::string& s) {
    if (s == "none") return Pinning::none;
    if (s == "round-robin") return Pinning::round_robin;
    throw ConfigError("unknown pinning policy '" + s + "' (expected none or round-robin)");
}

const char* pinning_name(Pinning p) {
    switch (p) {
        case Pinning::none: return "none";
        case Pinning::round_robin: return "round-robin";
    }
    return "?";
}

ThreadPool::ThreadPool(std::size_t workers, Pinning pinning) {
    if (workers == 0) throw ConfigError("pool: need at least one worker");
    threads_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this, i] { worker_loop(i); });
#if defined(__linux__)
    if (pinning == Pinning::round_robin) {
        const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        for (std::size_t i = 0; i < threads_.size(); ++i) {
            cpu_set_t set;
            CPU_ZERO(&set);
            CPU_SET(static_cast<int>(i % hw), &set);
            // Best effort; an unpinnable thread still works, just unpinned.
            (void)pthread_setaffinity_np(threads_[i].native_handle(), sizeof(set), &set);
        }
    }
#else
    (void)pinning;
#endif
}

ThreadPool::~ThreadPool() { shutdown(); }

void ThreadPool::worker_loop(std::size_t) {
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock<std::mutex> lock(mu_);
            work_cv_.wait(lock, [&] { return shutdown_ || !queue_.empty(); });
            if (shutdown_) return;  // pending work is abandoned on shutdown
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        task();
    }
}

namespace {

struct RunState {
    std::function<void(std::size_t)> fn;
    std::atomic<std::size_t> done{0};
    std::mutex error_mu;
    std::exception_ptr error;
};

}  // namespace

void ThreadPool::run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    auto st = std::make_shared<RunState>();
    st->fn = fn;
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (shutdown_) throw Error("pool: run() on a shut-down pool");
        for (std::size_t i = 0; i < n; ++i)
            queue_.emplace_back([this, st, i] {
                try {
                    st->fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> g(st->error_mu);
                    if (!st->error) st->error = std::current_exception();
                }
                st->done.fetch_add(1, std::memory_order_acq_rel);
                {
                    std::lock_guard<std::mutex> g(mu_);
                }
                done_cv_.notify_all();
            });
    }
    work_cv_.notify_all();

    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [&] { return shutdown_ || st->done.load(std::memory_order_acquire) == n; });
    if (st->done.load(std::memory_order_acquire) != n)
        throw Error("pool: shut down while work was in flight; results discarded");
    if (st->error) std::rethrow_exception(st->error);
}

void ThreadPool::shutdown() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (shutdown_ && threads_.empty()) return;
        shutdown_ = true;
        queue_.clear();
    }
    work_cv_.notify_all();
    done_cv_.notify_all();
    for (auto& t : threads_)
        if (t.joinable()) t.join();
    threads_.clear();
}

template <typename T>
Tensor<T> parallel_predict(const Tensor<T>& x0, const ParaFormerModel<T>& model, ThreadPool& pool,
                           std::vector<std::atomic<std::uint64_t>>* branch_ns) {
    const std::size_t n = model.branches.size();
    if (n == 0) throw ShapeError("parallel_predict: model has no branches");
    if (branch_ns && branch_ns->size() != n)
        throw ShapeError("parallel_predict: " + std::to_string(branch_ns->size()) + " timing slots for " +
                         std::to_string(n) + " branches");

    // Workers write only their own slot; x0 and the model are read-only.
    std::vector<Tensor<T>> terms(n);
    pool.run(n, [&](std::size_t j) {
        const auto t0 = std::chrono::steady_clock::now();
        terms[j] = branch_term(x0, model, j + 1);
        if (branch_ns) {
            const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0);
            (*branch_ns)[j].fetch_add(static_cast<std::uint64_t>(ns.count()), std::memory_order_relaxed);
        }
    });

    // Ascending, left-associated reduction: the sequential summation order.
    Tensor<T> logits = model.agg_bias.reshaped({std::size_t(1), model.config.classes});
    for (std::size_t j = 0; j < n; ++j) logits = add(logits, terms[j]);
    return logits.reshaped({model.config.classes});
}

namespace {

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace

template <typename T>
std::vector<BenchReport> bench_inference(const ParaFormerModel<T>& model, const Dataset<T>& data,
                                         const std::vector<PoolConfig>& pool_configs, std::size_t warmup,
                                         std::size_t passes) {
    if (data.size() == 0) throw DataError("bench: empty dataset");
    if (passes == 0) throw ConfigError("bench: need at least one timed pass");

    auto measure = [&](std::size_t workers, Pinning pinning, std::size_t n_eval,
                       std::vector<double>* per_branch_ms) -> double {
        ThreadPool pool(workers, pinning);
        std::vector<std::atomic<std::uint64_t>> branch_ns(model.branches.size());
        std::vector<double> times;
        times.reserve(passes);
        for (std::size_t p = 0; p < warmup + passes; ++p) {
            const bool timed = p >= warmup;
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < n_eval; ++i) {
                auto x0 = embed_image(data.images[i], model);
                (void)parallel_predict(x0, model, pool, timed ? &branch_ns : nullptr);
            }
            if (timed)
                times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                                    .count());
        }
        if (per_branch_ms) {
            per_branch_ms->clear();
            for (const auto& ns : branch_ns) per_branch_ms->push_back(static_cast<double>(ns.load()) / 1e6);
        }
        return median_of(std::move(times));
    };

    // Single-worker baselines, one per distinct workload size, measured in
    // this same run.
    std::vector<std::pair<std::size_t, double>> baselines;
    auto baseline_for = [&](std::size_t n_eval) {
        for (const auto& [n, ms] : baselines)
            if (n == n_eval) return ms;
        const double ms = measure(1, Pinning::none, n_eval, nullptr);
        baselines.emplace_back(n_eval, ms);
        return ms;
    };

    std::vector<BenchReport> reports;
    reports.reserve(pool_configs.size());
    for (const auto& pc : pool_configs) {
        if (pc.workers == 0) throw ConfigError("bench: pool config needs at least one worker");
        const std::size_t n_eval = pc.batch == 0 ? data.size() : std::min(pc.batch, data.size());
        const std::size_t workers = std::min(pc.workers, model.branches.size());

        BenchReport r;
        r.workers = workers;
        r.batch = n_eval;
        r.pinning = pinning_name(pc.pinning);
        r.branches = model.config.branches;
        r.layers = model.config.layers;
        r.width = model.config.width;
        r.baseline_ms = baseline_for(n_eval);
        r.wall_ms = measure(workers, pc.pinning, n_eval, &r.per_branch_ms);
        r.speedup = r.baseline_ms / r.wall_ms;
        reports.push_back(std::move(r));
    }
    return reports;
}

#define PF_INSTANTIATE_RUNTIME(T)                                                                     \
    template Tensor<T> parallel_predict<T>(const Tensor<T>&, const ParaFormerModel<T>&, ThreadPool&,  \
                                           std::vector<std::atomic<std::uint64_t>>*);                 \
    template std::vector<BenchReport> bench_inference<T>(const ParaFormerModel<T>&, const Dataset<T>&, \
                                                         const std::vector<PoolConfig>&, std::size_t, \
                                                         std::size_t);

PF_INSTANTIATE_RUNTIME(float)
PF_INSTANTIATE_RUNTIME(double)

#undef PF_INSTANTIATE_RUNTIME

}  // namespace pf
