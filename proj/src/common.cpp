#include "afkit/common.hpp"

#include <cstdio>
#include <memory>

namespace afkit {

namespace {

std::mutex g_warn_mutex;
WarnSink g_warn_sink = [](const std::string& msg) {
    std::fprintf(stderr, "[afkit] warning: %s\n", msg.c_str());
};

}  // namespace

void warn(const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    if (g_warn_sink) g_warn_sink(msg);
}

WarnSink set_warn_sink(WarnSink sink) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    WarnSink prev = std::move(g_warn_sink);
    g_warn_sink = std::move(sink);
    return prev;
}

// One dispatched parallel_for. Workers hold a shared_ptr while executing, so
// a late worker can never observe the next dispatch through stale members.
struct WorkerPool::Job {
    const std::function<void(std::size_t, unsigned)>* fn = nullptr;
    std::size_t units = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> pending{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    // Claims and runs units until none are left.
    void run(unsigned worker_id) {
        for (;;) {
            std::size_t unit = next.fetch_add(1, std::memory_order_relaxed);
            if (unit >= units) return;
            try {
                (*fn)(unit, worker_id);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
            pending.fetch_sub(1, std::memory_order_acq_rel);
        }
    }
};

WorkerPool::WorkerPool(unsigned workers) : workers_(workers == 0 ? 1 : workers) {
    threads_.reserve(workers_ - 1);
    for (unsigned w = 1; w < workers_; ++w) {
        threads_.emplace_back([this, w] { worker_loop(w); });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        stopping_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::worker_loop(unsigned worker_id) {
    std::uint64_t seen_generation = 0;
    for (;;) {
        std::shared_ptr<Job> job;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen_generation; });
            if (stopping_) return;
            seen_generation = generation_;
            job = job_;
        }
        if (!job) continue;
        job->run(worker_id);
        if (job->pending.load(std::memory_order_acquire) == 0) {
            // the lock pairs with the waiter's predicate check; without it the
            // notify could fall between the caller's check and its sleep
            std::lock_guard<std::mutex> lock(mutex_);
            done_cv_.notify_all();
        }
    }
}

void WorkerPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, unsigned)>& fn) {
    if (n == 0) return;
    if (workers_ == 1 || n == 1) {
        for (std::size_t unit = 0; unit < n; ++unit) fn(unit, 0);
        return;
    }
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->units = n;
    job->pending.store(n, std::memory_order_relaxed);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        job_ = job;
        ++generation_;
    }
    start_cv_.notify_all();
    job->run(0);
    {
        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [&] { return job->pending.load(std::memory_order_acquire) == 0; });
        job_ = nullptr;
    }
    if (job->error) std::rethrow_exception(job->error);
}

}  // namespace afkit
