#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afkit/affuncs.hpp"
#include "afkit/common.hpp"
#include "afkit/matrix.hpp"
#include "afkit/seqio.hpp"
#include "afkit/stats.hpp"

namespace afkit {

/* === Workload partitioning ===
 *
 * The engine mirrors a distributed map/shuffle/reduce pipeline in process:
 * stage 1 maps over chunks, statistics are then shuffled by a grouping key
 * and reduced group-wise. The strategy decides the grouping: everything on
 * one unit (total), one group per statistic key (none), or keys hashed into
 * bins (partial). All three produce the same matrices; floating-point
 * combination happens in a fixed partition-then-key order, so results do not
 * depend on the worker count.
 */

enum class StrategyKind { total_aggregation, no_aggregation, partial_aggregation };

StrategyKind parse_strategy(std::string_view text);
std::string_view to_string(StrategyKind s);

struct Strategy {
    StrategyKind variant = StrategyKind::partial_aggregation;
    std::uint32_t bins = 0;  // partial aggregation only; 0 = 16 * workers
};

struct PipelineConfig {
    StatKind kind = StatKind::kmer;
    int k = 0;                       // word length (kmer / minhash)
    SpacedPattern pattern;           // spacedword
    std::uint32_t sketch_size = 1000;
    bool sketch_canonical = true;
    std::vector<std::string> evaluators;  // canonical ids, at least one
    Strategy strategy;
    std::size_t slices = 2048;
    unsigned workers = 1;
    std::string filter_include;      // stage-2 regex filters, empty = off
    std::string filter_exclude;
    bool keep_invalid = false;       // keep non-ACGT windows for filter testing
    std::optional<ValueFilter> value_filter;
    NormMode normalization = NormMode::none;
    std::uint64_t seed = 42;
    std::uint64_t memory_budget = 6ULL << 30;  // total-aggregation soft limit
    bool kulczynski2_literal = false;
    bool divergence_literal = false;
    FswmOptions fswm;

    int window_length() const {
        return kind == StatKind::spacedword ? pattern.length() : k;
    }
};

// Per-stage instrumentation, exposed for tests and the CLI --stats flag.
struct EngineCounters {
    std::uint64_t chunks = 0;
    std::uint64_t stage1_records = 0;    // records emitted by extraction
    std::uint64_t stage2_dropped = 0;    // records removed by feature filters
    std::uint64_t shuffled_records = 0;  // records entering stage 3
    std::uint64_t stage3_groups = 0;     // aggregated (key, sample) groups
    std::uint64_t stage4_dropped = 0;    // groups removed by the value filter
    std::uint64_t stage5_partials = 0;   // partial AF evaluations
    std::uint64_t aggregated_count_sum = 0;  // sum of aggregated counts (kmer)
    std::uint32_t partitions = 0;
    std::array<unsigned, 5> stage_workers{};  // eligible workers per stage

    std::string summary() const;
};

struct PipelineResult {
    std::vector<AFMatrix> matrices;  // one per evaluator, in config order
    EngineCounters counters;
};

// Runs the five-stage pipeline and computes one AF matrix per configured
// evaluator from a single statistics pass. When `pool` is null a pool of
// config.workers is created for the call.
PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                            WorkerPool* pool = nullptr);

// Value of an absent key after aggregation: 0 counts, no occurrences; under
// z-score normalization the z-score of a zero count.
double missing_value(StatKind kind, const NormParams& norm);

}  // namespace afkit
