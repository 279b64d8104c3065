#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "afkit/engine.hpp"
#include "afkit/matrix.hpp"
#include "afkit/seqio.hpp"

namespace afkit {

/* === Null model === */

struct NullModelConfig {
    int q = 1;                // shuffle word length
    int runs = 100;           // Monte Carlo runs (l)
    double alpha = 0.01;      // family-wise significance level
    std::uint64_t seed = 42;  // master rng seed; run i uses a derived stream
};

// The pooled multiset of all overlapping q-mers of the dataset, addressed by
// position index instead of materializing the strings. Sampling an index
// uniformly samples the multiset uniformly.
class QmerBin {
public:
    static QmerBin build(const Dataset& dataset, int q);  // error: EmptyBin

    std::uint64_t size() const { return total_; }
    int q() const { return q_; }
    std::string_view qmer(std::uint64_t index) const;

    template <class Rng>
    std::string_view draw(Rng& rng) const {
        return qmer(uniform_below(rng, total_));
    }

private:
    struct FragmentRef {
        const std::string* text;
        std::uint64_t cumulative;  // q-mer positions before this fragment
    };
    const Dataset* dataset_ = nullptr;
    std::vector<FragmentRef> fragments_;
    std::uint64_t total_ = 0;
    int q_ = 1;
};

// Builds a synthetic dataset: same samples, same fragment lengths, each
// fragment a concatenation of uniform draws from the bin with the final draw
// truncated to the exact length.
Dataset randomize_dataset(const QmerBin& bin, const Dataset& dataset, std::mt19937_64& rng);

/* === Ranking === */

struct RankMatrix {
    std::vector<std::string> labels;
    std::vector<int> ranks;          // n*n; simulated values strictly worse than T
    std::vector<double> pvalues;     // 1 - rank/l
    std::vector<std::uint8_t> pass;  // pvalue <= alpha/m
    std::vector<std::uint8_t> undefined;  // original entry was inf/nan
    bool family_pass = false;
    int runs_completed = 0;
    int runs_executed = 0;  // freshly computed in this invocation
    int m = 0;              // n(n-1)/2
    double alpha = 0.0;

    std::size_t n() const { return labels.size(); }
    std::size_t idx(std::size_t i, std::size_t j) const { return i * n() + j; }
};

// Applies the Bonferroni decision (threshold alpha/m with m = n(n-1)/2) to a
// filled rank/pvalue matrix and sets pass flags and the family verdict.
void bonferroni_decide(RankMatrix& rm, double alpha);

/* === Checkpointing === */

// Directory layout: config.fingerprint (text), run_<i>.mat (full-precision
// tsv matrices), state (completed-run count, informational). Writes are
// atomic (temp file + rename).
struct Checkpoint {
    std::filesystem::path dir;

    void ensure(const std::string& fingerprint) const;  // error: FingerprintMismatch
    std::optional<AFMatrix> load_run(int run, std::size_t n) const;
    void store_run(int run, const AFMatrix& m) const;
    void write_state(int completed) const;
};

// Fingerprint of everything that influences simulated values: dataset
// content, statistic and evaluator configuration, q, runs and seed.
std::string config_fingerprint(const Dataset& dataset, const PipelineConfig& pipeline,
                               const std::string& evaluator, const NullModelConfig& nm);

/* === MECCA === */

// Called before each run; returning false stops the procedure early (the
// checkpoint keeps completed runs and a later call resumes them).
using InterruptFn = std::function<bool(int next_run)>;

// Computes the original AF matrix once, then ranks every off-diagonal entry
// against `runs` bootstrap matrices. The `evaluator` must be one of
// pipeline.evaluators. Undefined original entries auto-fail and are flagged.
RankMatrix mecca(const Dataset& dataset, const std::string& evaluator,
                 const NullModelConfig& nm, const PipelineConfig& pipeline,
                 const Checkpoint* ckpt = nullptr, WorkerPool* pool = nullptr,
                 const InterruptFn& interrupt = {});

/* === Reporting === */

struct SignificanceRow {
    std::string function_id;
    int q = 0;
    double percent_pass = 0.0;       // off-diagonal entries passing, percent
    std::string classification;      // green >= 75%, red = 0%, yellow otherwise
};

SignificanceRow summarize(const std::string& function_id, int q, const RankMatrix& rm);
void write_report(const std::vector<SignificanceRow>& rows, std::ostream& out);
void write_rank_csv(const RankMatrix& rm, std::ostream& out);

}  // namespace afkit
