#include "afkit/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

namespace afkit {

namespace {

constexpr std::uint32_t kNoAggPartitions = 64;   // shuffle granularity, Strategy 2
constexpr std::uint64_t kShuffleSalt = 0x7d3a9fc1u;

struct KmerRecord {
    std::uint64_t key = 0;
    std::uint32_t sample = 0;
};

struct KmerAgg {
    std::uint64_t key = 0;
    std::uint32_t sample = 0;
    std::uint32_t count = 0;
};

struct SwRecord {
    std::uint64_t key = 0;
    std::uint32_t sample = 0;
    std::string dontcare;
};

struct SwAgg {
    std::uint64_t key = 0;
    std::uint32_t sample = 0;
    std::vector<std::string> occurrences;
};

struct SketchRecord {
    std::uint32_t sample = 0;
    std::vector<std::uint64_t> hashes;
};

// raw (pre-normalization) per-sample aggregates
struct SampleAgg {
    std::uint64_t support = 0;
    double total = 0.0;
    double sum_sq = 0.0;

    void merge(const SampleAgg& o) {
        support += o.support;
        total += o.total;
        sum_sq += o.sum_sq;
    }
};

// value-space per-sample constants
struct SampleContext {
    SampleAgg raw;
    NormParams norm;
    double total_v = 0.0;
    double mu_v = 0.0;
    double sigma_v = 0.0;
    double miss = 0.0;
    std::array<double, 4> bg{};
};

std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
    // upper triangle including the diagonal, i <= j
    return i * n - i * (i - 1) / 2 + (j - i);
}

std::array<double, 4> base_frequencies(const Sample& sample) {
    std::array<std::uint64_t, 4> counts{};
    for (const auto& frag : sample.fragments) {
        for (char c : frag) {
            const std::uint8_t code = kBaseCode[static_cast<unsigned char>(c)];
            if (code < 4) ++counts[code];
        }
    }
    const double total = static_cast<double>(counts[0] + counts[1] + counts[2] + counts[3]);
    std::array<double, 4> freq{};
    if (total > 0) {
        for (int b = 0; b < 4; ++b) freq[b] = static_cast<double>(counts[b]) / total;
    }
    return freq;
}

class PipelineRun {
public:
    PipelineRun(const Dataset& dataset, const PipelineConfig& config, WorkerPool& pool)
        : ds_(dataset), cfg_(config), pool_(pool), n_(dataset.size()) {}

    PipelineResult run();

private:
    void validate();
    void build_chunks();
    std::uint32_t partition_of(std::uint64_t key) const;

    template <class Rec, class PartFn>
    std::vector<std::vector<Rec>> shuffle(std::vector<std::vector<Rec>>& per_chunk,
                                          PartFn part_fn);

    void run_kmer(PipelineResult& result);
    void run_spacedword(PipelineResult& result);
    void run_minhash(PipelineResult& result);

    void build_sample_contexts(const std::vector<SampleAgg>& raw);
    PairContext make_pair_context(std::size_t i, std::size_t j) const;
    void finalize_histogram(PipelineResult& result,
                            std::vector<std::vector<PairAccum>>& partition_accums,
                            const std::vector<std::vector<std::uint64_t>>& partition_unions);

    const Dataset& ds_;
    const PipelineConfig& cfg_;
    WorkerPool& pool_;
    std::size_t n_;
    std::size_t pairs_ = 0;

    std::vector<Chunk> chunks_;
    std::vector<std::unique_ptr<Evaluator>> evals_;
    FeatureFilter include_filter_;
    FeatureFilter exclude_filter_;
    bool regex_active_ = false;
    std::uint32_t partitions_ = 1;
    int window_ = 0;
    double keyspace_ = 0.0;
    std::vector<SampleContext> sctx_;
    std::vector<std::vector<std::uint64_t>> support_bits_;  // per sample, optional
    EngineCounters counters_;
};

void PipelineRun::validate() {
    if (n_ < 2) throw ConfigError("pipeline needs at least 2 samples");
    if (ds_.total_length == 0) throw ConfigError("pipeline input holds no residues");
    if (cfg_.evaluators.empty()) throw ConfigError("no evaluator configured");

    EvaluatorOptions eopt;
    eopt.fswm = cfg_.fswm;
    for (const auto& id : cfg_.evaluators) {
        auto ev = make_evaluator(id, eopt);
        if (ev->statistic() != cfg_.kind) {
            throw ConfigError("EvaluatorStatisticMismatch: evaluator '" + id + "' needs " +
                              std::string(to_string(ev->statistic())) +
                              " statistics but the pipeline extracts " +
                              std::string(to_string(cfg_.kind)));
        }
        evals_.push_back(std::move(ev));
    }

    if (cfg_.kind == StatKind::spacedword) {
        if (cfg_.pattern.length() == 0) throw ConfigError("spacedword pipeline needs a pattern");
    } else {
        if (cfg_.k < 1 || cfg_.k > kMaxKmerK) {
            throw ConfigError("k must be in [1, " + std::to_string(kMaxKmerK) + "]");
        }
        if (cfg_.keep_invalid && cfg_.k > kMaxInvalidKmerK) {
            throw ConfigError("keep_invalid supports k up to " +
                              std::to_string(kMaxInvalidKmerK));
        }
    }
    if (cfg_.kind == StatKind::minhash) {
        if (cfg_.sketch_size < 1) throw ConfigError("sketch_size must be positive");
        if (!cfg_.filter_include.empty() || !cfg_.filter_exclude.empty()) {
            throw ConfigError("feature filters are not applicable to sketch statistics");
        }
    }
    if (cfg_.normalization != NormMode::none && cfg_.kind != StatKind::kmer) {
        throw ConfigError("normalization applies to k-mer histograms only");
    }
    if (cfg_.normalization == NormMode::zscore) {
        for (const auto& id : cfg_.evaluators) {
            if (id == "squared_chord") {
                throw ConfigError(
                    "NegativeInput: squared_chord cannot run on z-score normalized statistics");
            }
            if (id == "jeffrey" || id == "jsd") {
                warn("divergence functions on z-score statistics are not probabilities");
            }
        }
    }

    if (!cfg_.filter_include.empty()) {
        include_filter_ = FeatureFilter(FeatureFilter::Mode::include, cfg_.filter_include);
    }
    if (!cfg_.filter_exclude.empty()) {
        exclude_filter_ = FeatureFilter(FeatureFilter::Mode::exclude, cfg_.filter_exclude);
    }
    regex_active_ = include_filter_.active() || exclude_filter_.active();

    if (cfg_.slices < cfg_.workers) {
        warn("slices (" + std::to_string(cfg_.slices) + ") below worker count (" +
             std::to_string(cfg_.workers) + "); some workers will idle in stage 1");
    }

    window_ = cfg_.window_length();
    const int kk = cfg_.kind == StatKind::spacedword ? cfg_.pattern.weight() : cfg_.k;
    keyspace_ = std::pow(4.0, kk);

    switch (cfg_.strategy.variant) {
        case StrategyKind::total_aggregation: partitions_ = 1; break;
        case StrategyKind::no_aggregation: partitions_ = kNoAggPartitions; break;
        case StrategyKind::partial_aggregation:
            partitions_ = cfg_.strategy.bins > 0 ? cfg_.strategy.bins : 16 * cfg_.workers;
            break;
    }
    if (cfg_.kind == StatKind::minhash) partitions_ = 1;  // one sketch group

    if (cfg_.strategy.variant == StrategyKind::total_aggregation &&
        cfg_.kind != StatKind::minhash) {
        std::uint64_t windows = 0;
        for (const auto& s : ds_.samples) {
            for (const auto& f : s.fragments) {
                if (f.size() >= static_cast<std::size_t>(window_)) {
                    windows += f.size() - window_ + 1;
                }
            }
        }
        const std::uint64_t footprint =
            windows * (cfg_.kind == StatKind::kmer ? sizeof(KmerRecord) + sizeof(KmerAgg)
                                                   : sizeof(SwRecord) + 2 * window_);
        if (footprint > cfg_.memory_budget) {
            throw NumericError(
                "MemoryBudgetExceeded: total aggregation would hold about " +
                std::to_string(footprint >> 20) +
                " MiB on one worker; switch to partial_aggregation or raise memory_budget");
        }
    }

    pairs_ = n_ * (n_ + 1) / 2;
}

void PipelineRun::build_chunks() {
    const std::size_t overlap = window_ > 0 ? static_cast<std::size_t>(window_ - 1) : 0;
    for (const auto& sample : ds_.samples) {
        const double share_exact = static_cast<double>(cfg_.slices) *
                                   static_cast<double>(sample.total_length()) /
                                   static_cast<double>(ds_.total_length);
        const std::size_t share = std::max<std::size_t>(1, std::llround(share_exact));
        auto sample_chunks = chunk_sample(sample, share, overlap);
        chunks_.insert(chunks_.end(), sample_chunks.begin(), sample_chunks.end());
    }
    counters_.chunks = chunks_.size();

    const unsigned s1 = static_cast<unsigned>(
        std::min<std::size_t>(cfg_.workers, std::max<std::size_t>(1, chunks_.size())));
    const unsigned s35 = static_cast<unsigned>(std::min<std::size_t>(cfg_.workers, partitions_));
    const bool total = cfg_.strategy.variant == StrategyKind::total_aggregation;
    counters_.stage_workers = {s1, total ? 1u : s1, s35, s35, s35};
    counters_.partitions = partitions_;
}

std::uint32_t PipelineRun::partition_of(std::uint64_t key) const {
    switch (cfg_.strategy.variant) {
        case StrategyKind::total_aggregation: return 0;
        case StrategyKind::no_aggregation:
            return static_cast<std::uint32_t>(hash64(key, kShuffleSalt) % partitions_);
        case StrategyKind::partial_aggregation: return assign_bin(key, partitions_);
    }
    return 0;
}

template <class Rec, class PartFn>
std::vector<std::vector<Rec>> PipelineRun::shuffle(std::vector<std::vector<Rec>>& per_chunk,
                                                   PartFn part_fn) {
    const std::size_t C = per_chunk.size();
    const std::uint32_t P = partitions_;
    std::vector<std::vector<std::uint32_t>> chunk_counts(C);
    pool_.parallel_for(C, [&](std::size_t c, unsigned) {
        auto& counts = chunk_counts[c];
        counts.assign(P, 0);
        for (const auto& rec : per_chunk[c]) ++counts[part_fn(rec)];
    });

    // chunk-major layout inside each partition keeps record order independent
    // of worker scheduling
    std::vector<std::vector<std::uint64_t>> chunk_offsets(C);
    std::vector<std::uint64_t> partition_sizes(P, 0);
    for (std::size_t c = 0; c < C; ++c) {
        chunk_offsets[c].resize(P);
        for (std::uint32_t p = 0; p < P; ++p) {
            chunk_offsets[c][p] = partition_sizes[p];
            partition_sizes[p] += chunk_counts[c][p];
        }
    }
    std::vector<std::vector<Rec>> parts(P);
    for (std::uint32_t p = 0; p < P; ++p) parts[p].resize(partition_sizes[p]);
    pool_.parallel_for(C, [&](std::size_t c, unsigned) {
        auto offsets = chunk_offsets[c];
        for (auto& rec : per_chunk[c]) {
            const std::uint32_t p = part_fn(rec);
            parts[p][offsets[p]++] = std::move(rec);
        }
        std::vector<Rec>().swap(per_chunk[c]);
    });
    return parts;
}

void PipelineRun::build_sample_contexts(const std::vector<SampleAgg>& raw) {
    sctx_.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) {
        SampleContext& c = sctx_[s];
        c.raw = raw[s];
        c.norm = NormParams::compute(cfg_.normalization, raw[s].total, raw[s].sum_sq, keyspace_);
        c.miss = missing_value(cfg_.kind, c.norm);
        switch (cfg_.normalization) {
            case NormMode::none:
                c.total_v = raw[s].total;
                c.mu_v = raw[s].total / keyspace_;
                c.sigma_v = std::sqrt(
                    std::max(0.0, raw[s].sum_sq / keyspace_ - c.mu_v * c.mu_v));
                break;
            case NormMode::frequency: {
                c.total_v = raw[s].total > 0 ? 1.0 : 0.0;
                c.mu_v = c.total_v / keyspace_;
                const double e2 = raw[s].total > 0
                                      ? raw[s].sum_sq / (raw[s].total * raw[s].total * keyspace_)
                                      : 0.0;
                c.sigma_v = std::sqrt(std::max(0.0, e2 - c.mu_v * c.mu_v));
                break;
            }
            case NormMode::zscore:
                c.total_v = 0.0;
                c.mu_v = 0.0;
                c.sigma_v = c.norm.sigma > 0 ? 1.0 : 0.0;
                break;
        }
        c.bg = base_frequencies(ds_.samples[s]);
    }
}

PairContext PipelineRun::make_pair_context(std::size_t i, std::size_t j) const {
    const SampleContext& s = sctx_[i];
    const SampleContext& t = sctx_[j];
    PairContext ctx;
    ctx.k = cfg_.kind == StatKind::spacedword ? cfg_.pattern.weight() : cfg_.k;
    ctx.keyspace = keyspace_;
    ctx.total_s = s.total_v;
    ctx.total_t = t.total_v;
    ctx.miss_s = s.miss;
    ctx.miss_t = t.miss;
    ctx.mu_s = s.mu_v;
    ctx.sigma_s = s.sigma_v;
    ctx.mu_t = t.mu_v;
    ctx.sigma_t = t.sigma_v;
    ctx.bg_s = s.bg;
    ctx.bg_t = t.bg;
    for (int b = 0; b < 4; ++b) ctx.bg_cross_sum += std::sqrt(s.bg[b] * t.bg[b]);
    ctx.pseudo_s = 1.0 / (s.total_v + ctx.keyspace);
    ctx.pseudo_t = 1.0 / (t.total_v + ctx.keyspace);
    if (cfg_.divergence_literal) {
        ctx.pdenom_s = ctx.keyspace;
        ctx.pdenom_t = ctx.keyspace;
    } else {
        ctx.pdenom_s = s.total_v + ctx.keyspace * ctx.pseudo_s;
        ctx.pdenom_t = t.total_v + ctx.keyspace * ctx.pseudo_t;
    }
    if (!support_bits_.empty()) {
        ctx.support_s = &support_bits_[i];
        ctx.support_t = &support_bits_[j];
    }
    ctx.kulczynski2_literal = cfg_.kulczynski2_literal;
    ctx.divergence_literal = cfg_.divergence_literal;
    return ctx;
}

void PipelineRun::finalize_histogram(
    PipelineResult& result, std::vector<std::vector<PairAccum>>& partition_accums,
    const std::vector<std::vector<std::uint64_t>>& partition_unions) {
    const std::size_t E = evals_.size();
    std::vector<PairAccum> totals(pairs_ * E);
    std::vector<std::uint64_t> unions(pairs_, 0);
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        for (std::size_t pi = 0; pi < pairs_; ++pi) {
            unions[pi] += partition_unions[p][pi];
            for (std::size_t e = 0; e < E; ++e) {
                evals_[e]->combine(totals[pi * E + e], partition_accums[p][pi * E + e]);
            }
        }
    }

    for (std::size_t e = 0; e < E; ++e) {
        result.matrices.emplace_back(ds_.labels(), evals_[e]->orientation(), evals_[e]->id());
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) {
            const std::size_t pi = pair_index(n_, i, j);
            PairContext ctx = make_pair_context(i, j);
            ctx.union_support = unions[pi];
            const double complement_keys =
                std::max(0.0, keyspace_ - static_cast<double>(unions[pi]));
            for (std::size_t e = 0; e < E; ++e) {
                if (i == j && evals_[e]->orientation() == Orientation::distance) {
                    result.matrices[e].at(i, j) = 0.0;
                    continue;
                }
                PairAccum acc = totals[pi * E + e];
                evals_[e]->complement(acc, complement_keys, ctx);
                result.matrices[e].set_symmetric(i, j, evals_[e]->finalize(acc, ctx));
            }
        }
    }
}

void PipelineRun::run_kmer(PipelineResult& result) {
    const std::size_t C = chunks_.size();
    const bool filter_at_extraction =
        regex_active_ && cfg_.strategy.variant != StrategyKind::total_aggregation;

    /* stage 1 + 2: extraction and (distributed) feature filtering */
    std::vector<std::vector<KmerRecord>> per_chunk(C);
    std::vector<std::uint64_t> emitted(C, 0), dropped(C, 0);
    KmerExtractOptions opt;
    opt.k = cfg_.k;
    opt.keep_invalid = cfg_.keep_invalid;
    pool_.parallel_for(C, [&](std::size_t c, unsigned) {
        const Chunk& chunk = chunks_[c];
        auto& out = per_chunk[c];
        out.reserve(chunk.body.size());
        extract_kmers(chunk, opt, [&](std::uint64_t key) {
            ++emitted[c];
            if (filter_at_extraction) {
                const std::string text = decode_key(key, cfg_.k);
                if (!include_filter_.keep(text) || !exclude_filter_.keep(text)) {
                    ++dropped[c];
                    return;
                }
            }
            out.push_back({key, static_cast<std::uint32_t>(chunk.sample_id)});
        });
    });
    for (std::size_t c = 0; c < C; ++c) {
        counters_.stage1_records += emitted[c];
        counters_.stage2_dropped += dropped[c];
    }

    /* shuffle by grouping key */
    auto parts = shuffle(per_chunk, [&](const KmerRecord& r) { return partition_of(r.key); });
    per_chunk.clear();

    /* stage 3 + 4 per partition: sort, aggregate, value-filter */
    std::vector<std::vector<KmerAgg>> agg(partitions_);
    std::vector<std::vector<SampleAgg>> part_samples(partitions_);
    std::vector<std::uint64_t> part_groups(partitions_, 0), part_shuffled(partitions_, 0),
        part_value_dropped(partitions_, 0), part_regex_dropped(partitions_, 0),
        part_count_sum(partitions_, 0);
    pool_.parallel_for(partitions_, [&](std::size_t p, unsigned) {
        auto& records = parts[p];
        part_shuffled[p] = records.size();
        if (!filter_at_extraction && regex_active_) {
            // total aggregation: the feature filter runs on the single worker
            auto keep = [&](const KmerRecord& r) {
                const std::string text = decode_key(r.key, cfg_.k);
                return include_filter_.keep(text) && exclude_filter_.keep(text);
            };
            auto it = std::partition(records.begin(), records.end(), keep);
            part_regex_dropped[p] = static_cast<std::uint64_t>(records.end() - it);
            records.erase(it, records.end());
        }
        std::sort(records.begin(), records.end(), [](const KmerRecord& a, const KmerRecord& b) {
            return a.key != b.key ? a.key < b.key : a.sample < b.sample;
        });
        auto& out = agg[p];
        auto& stats = part_samples[p];
        stats.assign(n_, SampleAgg{});
        std::size_t i = 0;
        while (i < records.size()) {
            std::size_t j = i;
            while (j < records.size() && records[j].key == records[i].key &&
                   records[j].sample == records[i].sample) {
                ++j;
            }
            ++part_groups[p];
            const double count = static_cast<double>(j - i);
            if (!cfg_.value_filter || cfg_.value_filter->keep(count)) {
                out.push_back({records[i].key, records[i].sample,
                               static_cast<std::uint32_t>(j - i)});
                auto& st = stats[records[i].sample];
                st.support += 1;
                st.total += count;
                st.sum_sq += count * count;
                part_count_sum[p] += j - i;
            } else {
                ++part_value_dropped[p];
            }
            i = j;
        }
        std::vector<KmerRecord>().swap(records);
    });
    parts.clear();

    std::vector<SampleAgg> raw(n_);
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        counters_.shuffled_records += part_shuffled[p];
        counters_.stage2_dropped += part_regex_dropped[p];
        counters_.stage3_groups += part_groups[p];
        counters_.stage4_dropped += part_value_dropped[p];
        counters_.aggregated_count_sum += part_count_sum[p];
        for (std::size_t s = 0; s < n_; ++s) raw[s].merge(part_samples[p][s]);
    }
    build_sample_contexts(raw);

    // dense support bitmaps, needed only for the d2s complement sweep
    bool want_supports = false;
    for (const auto& id : cfg_.evaluators) want_supports |= (id == "d2s");
    if (want_supports && cfg_.k <= 8) {
        const std::size_t words = (std::size_t(1) << (2 * cfg_.k)) / 64 + 1;
        support_bits_.assign(n_, std::vector<std::uint64_t>(words, 0));
        for (std::uint32_t p = 0; p < partitions_; ++p) {
            for (const auto& a : agg[p]) {
                if (key_is_invalid(a.key)) continue;
                support_bits_[a.sample][a.key >> 6] |= 1ULL << (a.key & 63);
            }
        }
    }

    /* stage 5: per-key partial AF values, reduced per pair */
    const std::size_t E = evals_.size();
    std::vector<PairContext> pair_ctx;
    pair_ctx.reserve(pairs_);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) pair_ctx.push_back(make_pair_context(i, j));
    }
    std::vector<std::vector<PairAccum>> part_accums(partitions_);
    std::vector<std::vector<std::uint64_t>> part_unions(partitions_);
    std::vector<std::uint64_t> part_partials(partitions_, 0);
    pool_.parallel_for(partitions_, [&](std::size_t p, unsigned) {
        part_accums[p].assign(pairs_ * E, PairAccum{});
        part_unions[p].assign(pairs_, 0);
        auto& accums = part_accums[p];
        auto& unions = part_unions[p];
        const auto& entries = agg[p];
        std::vector<double> value(n_, 0.0);
        std::vector<std::uint8_t> present(n_, 0);
        std::vector<std::uint32_t> plist;
        std::size_t gi = 0;
        while (gi < entries.size()) {
            const std::uint64_t key = entries[gi].key;
            std::size_t ge = gi;
            plist.clear();
            while (ge < entries.size() && entries[ge].key == key) {
                const std::uint32_t s = entries[ge].sample;
                present[s] = 1;
                value[s] = sctx_[s].norm.value(static_cast<double>(entries[ge].count));
                plist.push_back(s);
                ++ge;
            }
            const bool valid = !key_is_invalid(key);
            for (std::size_t ai = 0; ai < plist.size(); ++ai) {
                const std::uint32_t i = plist[ai];
                for (std::size_t bi = ai; bi < plist.size(); ++bi) {
                    const std::uint32_t j = plist[bi];
                    const std::size_t pi = pair_index(n_, i, j);
                    if (valid) ++unions[pi];
                    for (std::size_t e = 0; e < E; ++e) {
                        evals_[e]->accumulate(accums[pi * E + e], key, value[i], value[j], true,
                                              true, pair_ctx[pi]);
                    }
                    part_partials[p] += E;
                }
                for (std::uint32_t j = 0; j < n_; ++j) {
                    if (present[j]) continue;
                    const std::size_t pi = pair_index(n_, std::min(i, j), std::max(i, j));
                    const bool i_first = i < j;
                    if (valid) ++unions[pi];
                    for (std::size_t e = 0; e < E; ++e) {
                        const PairContext& ctx = pair_ctx[pi];
                        if (i_first) {
                            evals_[e]->accumulate(accums[pi * E + e], key, value[i], ctx.miss_t,
                                                  true, false, ctx);
                        } else {
                            evals_[e]->accumulate(accums[pi * E + e], key, ctx.miss_s, value[i],
                                                  false, true, ctx);
                        }
                    }
                    part_partials[p] += E;
                }
            }
            for (std::uint32_t s : plist) present[s] = 0;
            gi = ge;
        }
    });
    for (std::uint32_t p = 0; p < partitions_; ++p) counters_.stage5_partials += part_partials[p];

    finalize_histogram(result, part_accums, part_unions);
}

void PipelineRun::run_spacedword(PipelineResult& result) {
    const std::size_t C = chunks_.size();
    const bool filter_at_extraction =
        regex_active_ && cfg_.strategy.variant != StrategyKind::total_aggregation;
    const int weight = cfg_.pattern.weight();

    std::vector<std::vector<SwRecord>> per_chunk(C);
    std::vector<std::uint64_t> emitted(C, 0), dropped(C, 0);
    pool_.parallel_for(C, [&](std::size_t c, unsigned) {
        const Chunk& chunk = chunks_[c];
        auto& out = per_chunk[c];
        extract_spaced_words(chunk, cfg_.pattern, [&](std::uint64_t key, const std::string& dc) {
            ++emitted[c];
            if (filter_at_extraction) {
                const std::string text = decode_kmer(key, weight);
                if (!include_filter_.keep(text) || !exclude_filter_.keep(text)) {
                    ++dropped[c];
                    return;
                }
            }
            out.push_back({key, static_cast<std::uint32_t>(chunk.sample_id), dc});
        });
    });
    for (std::size_t c = 0; c < C; ++c) {
        counters_.stage1_records += emitted[c];
        counters_.stage2_dropped += dropped[c];
    }

    auto parts = shuffle(per_chunk, [&](const SwRecord& r) { return partition_of(r.key); });
    per_chunk.clear();

    std::vector<std::vector<SwAgg>> agg(partitions_);
    std::vector<std::vector<SampleAgg>> part_samples(partitions_);
    std::vector<std::uint64_t> part_groups(partitions_, 0), part_shuffled(partitions_, 0),
        part_value_dropped(partitions_, 0), part_regex_dropped(partitions_, 0);
    pool_.parallel_for(partitions_, [&](std::size_t p, unsigned) {
        auto& records = parts[p];
        part_shuffled[p] = records.size();
        if (!filter_at_extraction && regex_active_) {
            auto keep = [&](const SwRecord& r) {
                const std::string text = decode_kmer(r.key, weight);
                return include_filter_.keep(text) && exclude_filter_.keep(text);
            };
            auto it = std::partition(records.begin(), records.end(), keep);
            part_regex_dropped[p] = static_cast<std::uint64_t>(records.end() - it);
            records.erase(it, records.end());
        }
        std::sort(records.begin(), records.end(), [](const SwRecord& a, const SwRecord& b) {
            return a.key != b.key ? a.key < b.key : a.sample < b.sample;
        });
        auto& out = agg[p];
        auto& stats = part_samples[p];
        stats.assign(n_, SampleAgg{});
        std::size_t i = 0;
        while (i < records.size()) {
            std::size_t j = i;
            SwAgg group;
            group.key = records[i].key;
            group.sample = records[i].sample;
            while (j < records.size() && records[j].key == group.key &&
                   records[j].sample == group.sample) {
                group.occurrences.push_back(std::move(records[j].dontcare));
                ++j;
            }
            ++part_groups[p];
            const double count = static_cast<double>(group.occurrences.size());
            if (!cfg_.value_filter || cfg_.value_filter->keep(count)) {
                // canonical occurrence order keeps cross-pair subsampling
                // identical for every strategy
                std::sort(group.occurrences.begin(), group.occurrences.end());
                auto& st = stats[group.sample];
                st.support += 1;
                st.total += count;
                st.sum_sq += count * count;
                out.push_back(std::move(group));
            } else {
                ++part_value_dropped[p];
            }
            i = j;
        }
        std::vector<SwRecord>().swap(records);
    });
    parts.clear();

    std::vector<SampleAgg> raw(n_);
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        counters_.shuffled_records += part_shuffled[p];
        counters_.stage2_dropped += part_regex_dropped[p];
        counters_.stage3_groups += part_groups[p];
        counters_.stage4_dropped += part_value_dropped[p];
        for (std::size_t s = 0; s < n_; ++s) raw[s].merge(part_samples[p][s]);
    }
    build_sample_contexts(raw);

    const std::size_t E = evals_.size();
    std::vector<std::vector<PairAccum>> part_accums(partitions_);
    std::vector<std::uint64_t> part_partials(partitions_, 0);
    pool_.parallel_for(partitions_, [&](std::size_t p, unsigned) {
        part_accums[p].assign(pairs_ * E, PairAccum{});
        auto& accums = part_accums[p];
        const auto& entries = agg[p];
        std::size_t gi = 0;
        while (gi < entries.size()) {
            const std::uint64_t key = entries[gi].key;
            std::size_t ge = gi;
            while (ge < entries.size() && entries[ge].key == key) ++ge;
            for (std::size_t a = gi; a < ge; ++a) {
                for (std::size_t b = a + 1; b < ge; ++b) {
                    const std::size_t pi = pair_index(n_, entries[a].sample, entries[b].sample);
                    for (std::size_t e = 0; e < E; ++e) {
                        auto* fswm = dynamic_cast<const FswmEvaluator*>(evals_[e].get());
                        fswm->accumulate_occurrences(accums[pi * E + e], key,
                                                     entries[a].occurrences,
                                                     entries[b].occurrences);
                    }
                    part_partials[p] += E;
                }
            }
            gi = ge;
        }
    });
    for (std::uint32_t p = 0; p < partitions_; ++p) counters_.stage5_partials += part_partials[p];

    const std::size_t E2 = evals_.size();
    std::vector<PairAccum> totals(pairs_ * E2);
    for (std::uint32_t p = 0; p < partitions_; ++p) {
        for (std::size_t pi = 0; pi < pairs_; ++pi) {
            for (std::size_t e = 0; e < E2; ++e) {
                evals_[e]->combine(totals[pi * E2 + e], part_accums[p][pi * E2 + e]);
            }
        }
    }
    for (std::size_t e = 0; e < E2; ++e) {
        result.matrices.emplace_back(ds_.labels(), evals_[e]->orientation(), evals_[e]->id());
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) {
            const std::size_t pi = pair_index(n_, i, j);
            const PairContext ctx = make_pair_context(i, j);
            for (std::size_t e = 0; e < E2; ++e) {
                if (i == j) {
                    result.matrices[e].at(i, j) = 0.0;
                    continue;
                }
                result.matrices[e].set_symmetric(i, j,
                                                 evals_[e]->finalize(totals[pi * E2 + e], ctx));
            }
        }
    }
}

void PipelineRun::run_minhash(PipelineResult& result) {
    const std::size_t C = chunks_.size();
    std::vector<std::vector<SketchRecord>> per_chunk(C);
    pool_.parallel_for(C, [&](std::size_t c, unsigned) {
        const Chunk& chunk = chunks_[c];
        auto hashes = sketch_chunk(chunk, cfg_.k, cfg_.sketch_size, cfg_.seed,
                                   cfg_.sketch_canonical);
        per_chunk[c].push_back({static_cast<std::uint32_t>(chunk.sample_id), std::move(hashes)});
    });
    counters_.stage1_records = C;

    auto parts = shuffle(per_chunk, [](const SketchRecord&) { return std::uint32_t{0}; });
    per_chunk.clear();
    counters_.shuffled_records = parts[0].size();

    auto& records = parts[0];
    std::sort(records.begin(), records.end(),
              [](const SketchRecord& a, const SketchRecord& b) { return a.sample < b.sample; });
    std::vector<std::vector<std::uint64_t>> sketches(n_);
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        std::vector<std::uint64_t> merged;
        while (j < records.size() && records[j].sample == records[i].sample) {
            merged = merge_sketch_hashes(merged, records[j].hashes, cfg_.sketch_size);
            ++j;
        }
        sketches[records[i].sample] = std::move(merged);
        ++counters_.stage3_groups;
        i = j;
    }
    for (std::size_t s = 0; s < n_; ++s) {
        if (sketches[s].size() < cfg_.sketch_size) {
            warn("SketchUnderfull: sample '" + ds_.samples[s].name + "' has only " +
                 std::to_string(sketches[s].size()) + " distinct k-mer hashes (requested " +
                 std::to_string(cfg_.sketch_size) + ")");
        }
    }

    std::vector<SampleAgg> raw(n_);
    for (std::size_t s = 0; s < n_; ++s) {
        raw[s].support = sketches[s].size();
        raw[s].total = static_cast<double>(sketches[s].size());
    }
    build_sample_contexts(raw);

    const std::size_t E = evals_.size();
    for (std::size_t e = 0; e < E; ++e) {
        result.matrices.emplace_back(ds_.labels(), evals_[e]->orientation(), evals_[e]->id());
    }
    for (std::size_t i2 = 0; i2 < n_; ++i2) {
        for (std::size_t j2 = i2; j2 < n_; ++j2) {
            const PairContext ctx = make_pair_context(i2, j2);
            for (std::size_t e = 0; e < E; ++e) {
                auto* mash = dynamic_cast<const MashEvaluator*>(evals_[e].get());
                if (i2 == j2 && mash->orientation() == Orientation::distance) {
                    result.matrices[e].at(i2, j2) = 0.0;
                    continue;
                }
                PairAccum acc;
                mash->accumulate_sketches(acc, sketches[i2], sketches[j2], cfg_.sketch_size);
                ++counters_.stage5_partials;
                result.matrices[e].set_symmetric(i2, j2, mash->finalize(acc, ctx));
            }
        }
    }
}

PipelineResult PipelineRun::run() {
    validate();
    build_chunks();
    PipelineResult result;
    switch (cfg_.kind) {
        case StatKind::kmer: run_kmer(result); break;
        case StatKind::spacedword: run_spacedword(result); break;
        case StatKind::minhash: run_minhash(result); break;
    }
    result.counters = counters_;
    return result;
}

}  // namespace

StrategyKind parse_strategy(std::string_view text) {
    if (text == "total_aggregation" || text == "total") return StrategyKind::total_aggregation;
    if (text == "no_aggregation" || text == "none") return StrategyKind::no_aggregation;
    if (text == "partial_aggregation" || text == "partial") {
        return StrategyKind::partial_aggregation;
    }
    throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::total_aggregation: return "total_aggregation";
        case StrategyKind::no_aggregation: return "no_aggregation";
        case StrategyKind::partial_aggregation: return "partial_aggregation";
    }
    return "?";
}

std::string EngineCounters::summary() const {
    std::ostringstream out;
    out << "chunks\t" << chunks << "\n"
        << "stage1_records\t" << stage1_records << "\n"
        << "stage2_dropped\t" << stage2_dropped << "\n"
        << "shuffled_records\t" << shuffled_records << "\n"
        << "stage3_groups\t" << stage3_groups << "\n"
        << "stage4_dropped\t" << stage4_dropped << "\n"
        << "stage5_partials\t" << stage5_partials << "\n"
        << "aggregated_count_sum\t" << aggregated_count_sum << "\n"
        << "partitions\t" << partitions << "\n"
        << "stage_workers\t" << stage_workers[0] << ' ' << stage_workers[1] << ' '
        << stage_workers[2] << ' ' << stage_workers[3] << ' ' << stage_workers[4] << "\n";
    return out.str();
}

double missing_value(StatKind kind, const NormParams& norm) {
    if (kind != StatKind::kmer) return 0.0;
    return norm.mode == NormMode::zscore ? norm.missing : 0.0;
}

PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                            WorkerPool* pool) {
    if (pool) {
        PipelineRun run(dataset, config, *pool);
        return run.run();
    }
    WorkerPool local(config.workers);
    PipelineRun run(dataset, config, local);
    return run.run();
}

}  // namespace afkit
