#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace afkit {

/* === Errors and exit codes === */

// Exit codes used by the CLI: 0 ok, 2 config error, 3 input error,
// 4 numeric/degenerate error, 5 checkpoint mismatch.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    input = 3,
    numeric = 4,
    checkpoint = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ExitCode::config, msg) {}
};
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(ExitCode::input, msg) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(ExitCode::numeric, msg) {}
};
struct CheckpointError : Error {
    explicit CheckpointError(const std::string& msg) : Error(ExitCode::checkpoint, msg) {}
};

/* === Warnings === */

// Warnings go through a replaceable sink so library users (and tests) can
// capture them. Default sink writes "[afkit] warning: ..." to stderr.
using WarnSink = std::function<void(const std::string&)>;

void warn(const std::string& msg);
WarnSink set_warn_sink(WarnSink sink);  // returns the previous sink

/* === Hashing === */

// All hashing in the toolkit is derived from the splitmix64 finalizer
// (Steele, Lea & Flood; public domain reference constants). It is fast,
// well mixed and reproducible across platforms.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seeded 64-bit hash of a key. Default seed is 42.
inline uint64_t hash64(uint64_t key, uint64_t seed = 42) {
    return mix64(key ^ mix64(seed));
}

// Derives an independent rng seed for a sub-stream (Monte Carlo run,
// robustness repeat, ...) from a master seed and stream indices.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0) {
    return mix64(mix64(master ^ mix64(a + 1)) ^ mix64(b + 0x51700e8587fa2bcdULL));
}

// Draws a uniform integer in [0, bound) from a 64-bit generator without
// using std distributions (their output is not specified bit-for-bit).
template <class Rng>
uint64_t uniform_below(Rng& rng, uint64_t bound) {
    // multiply-shift; bias is < 2^-64 * bound, irrelevant at our scales
    unsigned __int128 wide = static_cast<unsigned __int128>(rng()) * bound;
    return static_cast<uint64_t>(wide >> 64);
}

template <class Rng>
double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/* === Worker pool === */

// Fixed-size pool executing indexed work units. Units are claimed from a
// shared atomic counter; results must be written to per-unit slots by the
// callback so that the outcome does not depend on scheduling. With a single
// worker everything runs inline on the calling thread.
class WorkerPool {
public:
    explicit WorkerPool(unsigned workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    unsigned size() const { return workers_; }

    // Runs fn(unit, worker) for every unit in [0, n). Blocks until all units
    // are done. The calling thread participates as worker 0. The first
    // exception thrown by any unit is rethrown here.
    void parallel_for(std::size_t n, const std::function<void(std::size_t, unsigned)>& fn);

private:
    struct Job;

    void worker_loop(unsigned worker_id);

    unsigned workers_;
    std::vector<std::thread> threads_;

    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    std::shared_ptr<Job> job_;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
};

}  // namespace afkit
