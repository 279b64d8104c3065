#include "afkit/sigtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace afkit {

QmerBin QmerBin::build(const Dataset& dataset, int q) {
    if (q < 1) throw ConfigError("q must be positive");
    QmerBin bin;
    bin.dataset_ = &dataset;
    bin.q_ = q;
    for (const auto& sample : dataset.samples) {
        for (const auto& frag : sample.fragments) {
            if (frag.size() < static_cast<std::size_t>(q)) continue;
            bin.fragments_.push_back({&frag, bin.total_});
            bin.total_ += frag.size() - q + 1;
        }
    }
    if (bin.total_ == 0) {
        throw InputError("EmptyBin: no fragment is at least q = " + std::to_string(q) +
                         " residues long");
    }
    return bin;
}

std::string_view QmerBin::qmer(std::uint64_t index) const {
    // find the fragment whose cumulative range holds `index`
    std::size_t lo = 0, hi = fragments_.size();
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (fragments_[mid].cumulative <= index) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const FragmentRef& ref = fragments_[lo];
    const std::size_t offset = static_cast<std::size_t>(index - ref.cumulative);
    return std::string_view(*ref.text).substr(offset, static_cast<std::size_t>(q_));
}

Dataset randomize_dataset(const QmerBin& bin, const Dataset& dataset, std::mt19937_64& rng) {
    std::vector<Sample> samples;
    samples.reserve(dataset.samples.size());
    for (const auto& original : dataset.samples) {
        Sample synthetic;
        synthetic.sample_id = original.sample_id;
        synthetic.name = original.name;
        synthetic.fragments.reserve(original.fragments.size());
        for (const auto& frag : original.fragments) {
            std::string built;
            built.reserve(frag.size());
            while (built.size() < frag.size()) {
                const std::string_view piece = bin.draw(rng);
                built.append(piece.substr(0, frag.size() - built.size()));
            }
            synthetic.fragments.push_back(std::move(built));
        }
        samples.push_back(std::move(synthetic));
    }
    return Dataset::from_samples(std::move(samples));
}

void bonferroni_decide(RankMatrix& rm, double alpha) {
    const std::size_t n = rm.n();
    rm.alpha = alpha;
    rm.m = static_cast<int>(n * (n - 1) / 2);
    const double threshold = rm.m > 0 ? alpha / rm.m : alpha;
    rm.pass.assign(n * n, 0);
    bool family = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const std::size_t e = rm.idx(i, j);
            const bool ok = !rm.undefined[e] && rm.pvalues[e] <= threshold;
            rm.pass[e] = ok ? 1 : 0;
            if (i < j && !ok) family = false;
        }
    }
    rm.family_pass = family;
}

void Checkpoint::ensure(const std::string& fingerprint) const {
    fs::create_directories(dir);
    const fs::path fp_path = dir / "config.fingerprint";
    if (fs::exists(fp_path)) {
        std::ifstream in(fp_path);
        std::string existing;
        std::getline(in, existing);
        if (existing != fingerprint) {
            throw CheckpointError("FingerprintMismatch: checkpoint directory '" + dir.string() +
                                  "' was written with a different configuration");
        }
        return;
    }
    const fs::path tmp = dir / "config.fingerprint.tmp";
    {
        std::ofstream out(tmp);
        out << fingerprint << '\n';
    }
    fs::rename(tmp, fp_path);
}

std::optional<AFMatrix> Checkpoint::load_run(int run, std::size_t n) const {
    const fs::path path = dir / ("run_" + std::to_string(run) + ".mat");
    if (!fs::exists(path)) return std::nullopt;
    try {
        std::ifstream in(path);
        AFMatrix m = parse_tsv(in);
        if (m.size() != n) throw InputError("size mismatch");
        return m;
    } catch (const std::exception& e) {
        warn("CorruptRunFile: '" + path.string() + "' discarded (" + e.what() + ")");
        return std::nullopt;
    }
}

void Checkpoint::store_run(int run, const AFMatrix& m) const {
    const fs::path path = dir / ("run_" + std::to_string(run) + ".mat");
    const fs::path tmp = dir / ("run_" + std::to_string(run) + ".mat.tmp");
    {
        std::ofstream out(tmp);
        // 17 significant digits round-trip doubles exactly, which keeps
        // resumed rank comparisons identical to an uninterrupted execution
        write_tsv(m, out, 17);
        if (!out.good()) throw InputError("IoError: cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void Checkpoint::write_state(int completed) const {
    const fs::path tmp = dir / "state.tmp";
    {
        std::ofstream out(tmp);
        out << completed << '\n';
    }
    fs::rename(tmp, dir / "state");
}

namespace {

std::uint64_t mix_string(std::uint64_t h, std::string_view text) {
    for (char c : text) h = mix64(h ^ static_cast<unsigned char>(c));
    return h;
}

}  // namespace

std::string config_fingerprint(const Dataset& dataset, const PipelineConfig& pipeline,
                               const std::string& evaluator, const NullModelConfig& nm) {
    std::uint64_t h = 0x41464b4954736967ULL;
    for (const auto& sample : dataset.samples) {
        h = mix_string(h, sample.name);
        for (const auto& frag : sample.fragments) {
            h = mix64(h ^ frag.size());
            h = mix_string(h, frag);
        }
    }
    h = mix64(h ^ static_cast<std::uint64_t>(pipeline.kind));
    h = mix64(h ^ static_cast<std::uint64_t>(pipeline.k));
    h = mix_string(h, pipeline.pattern.bits);
    h = mix64(h ^ pipeline.sketch_size);
    h = mix64(h ^ static_cast<std::uint64_t>(pipeline.strategy.variant));
    h = mix64(h ^ pipeline.strategy.bins);
    h = mix64(h ^ pipeline.slices);
    h = mix64(h ^ static_cast<std::uint64_t>(pipeline.normalization));
    h = mix_string(h, pipeline.filter_include);
    h = mix_string(h, pipeline.filter_exclude);
    h = mix64(h ^ pipeline.seed);
    h = mix_string(h, evaluator);
    h = mix64(h ^ static_cast<std::uint64_t>(nm.q));
    h = mix64(h ^ static_cast<std::uint64_t>(nm.runs));
    h = mix64(h ^ nm.seed);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RankMatrix mecca(const Dataset& dataset, const std::string& evaluator, const NullModelConfig& nm,
                 const PipelineConfig& pipeline, const Checkpoint* ckpt, WorkerPool* pool,
                 const InterruptFn& interrupt) {
    PipelineConfig cfg = pipeline;
    cfg.evaluators = {evaluator};
    const auto orientation = make_evaluator(evaluator)->orientation();

    std::unique_ptr<WorkerPool> local_pool;
    if (!pool) {
        local_pool = std::make_unique<WorkerPool>(cfg.workers);
        pool = local_pool.get();
    }

    const AFMatrix original = run_pipeline(dataset, cfg, pool).matrices.at(0);
    const std::size_t n = original.size();

    RankMatrix rm;
    rm.labels = original.labels;
    rm.ranks.assign(n * n, 0);
    rm.pvalues.assign(n * n, 1.0);
    rm.undefined.assign(n * n, 0);
    bool any_undefined = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && !std::isfinite(original.at(i, j))) {
                rm.undefined[rm.idx(i, j)] = 1;
                any_undefined = true;
            }
        }
    }
    if (any_undefined) {
        warn("EvaluatorUndefinedEntries: original " + evaluator +
             " matrix holds inf/nan entries; they fail the test automatically");
    }

    if (ckpt) ckpt->ensure(config_fingerprint(dataset, pipeline, evaluator, nm));

    const QmerBin bin = QmerBin::build(dataset, nm.q);
    std::vector<AFMatrix> simulated;
    simulated.reserve(static_cast<std::size_t>(nm.runs));
    int executed = 0;
    int completed = 0;
    for (int run = 0; run < nm.runs; ++run) {
        if (ckpt) {
            if (auto cached = ckpt->load_run(run, n)) {
                simulated.push_back(std::move(*cached));
                ++completed;
                continue;
            }
        }
        if (interrupt && !interrupt(run)) break;
        std::mt19937_64 rng(derive_seed(nm.seed, static_cast<std::uint64_t>(run)));
        const Dataset synthetic = randomize_dataset(bin, dataset, rng);
        AFMatrix sim = run_pipeline(synthetic, cfg, pool).matrices.at(0);
        if (ckpt) {
            ckpt->store_run(run, sim);
            ckpt->write_state(run + 1);
        }
        simulated.push_back(std::move(sim));
        ++executed;
        ++completed;
    }

    // rank = number of simulated values strictly worse than the original;
    // an undefined simulated value counts as maximally bad
    const bool similarity = orientation == Orientation::similarity;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const std::size_t e = rm.idx(i, j);
            if (rm.undefined[e]) {
                rm.ranks[e] = 0;
                rm.pvalues[e] = 1.0;
                continue;
            }
            const double t = original.at(i, j);
            int rank = 0;
            for (const auto& sim : simulated) {
                const double v = sim.at(i, j);
                if (std::isnan(v)) {
                    ++rank;  // no signal in the synthetic pair
                } else if (similarity ? v < t : v > t) {
                    ++rank;
                }
            }
            rm.ranks[e] = rank;
            rm.pvalues[e] =
                1.0 - static_cast<double>(rank) / static_cast<double>(nm.runs);
        }
    }
    rm.runs_completed = completed;
    rm.runs_executed = executed;
    bonferroni_decide(rm, nm.alpha);
    return rm;
}

SignificanceRow summarize(const std::string& function_id, int q, const RankMatrix& rm) {
    SignificanceRow row;
    row.function_id = function_id;
    row.q = q;
    const std::size_t n = rm.n();
    std::size_t passed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rm.pass[rm.idx(i, j)]) ++passed;
        }
    }
    const std::size_t m = n * (n - 1) / 2;
    row.percent_pass = m > 0 ? 100.0 * static_cast<double>(passed) / static_cast<double>(m) : 0.0;
    if (row.percent_pass >= 75.0) {
        row.classification = "green";
    } else if (passed == 0) {
        row.classification = "red";
    } else {
        row.classification = "yellow";
    }
    return row;
}

void write_report(const std::vector<SignificanceRow>& rows, std::ostream& out) {
    out << "function\tq\tpercent_pass\tclassification\n";
    for (const auto& row : rows) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", row.percent_pass);
        out << row.function_id << '\t' << row.q << '\t' << buf << '\t' << row.classification
            << '\n';
    }
}

void write_rank_csv(const RankMatrix& rm, std::ostream& out) {
    out << "i,j,label_i,label_j,rank,pvalue,pass,undefined\n";
    const std::size_t n = rm.n();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t e = rm.idx(i, j);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.10g", rm.pvalues[e]);
            out << i << ',' << j << ',' << rm.labels[i] << ',' << rm.labels[j] << ','
                << rm.ranks[e] << ',' << buf << ',' << int(rm.pass[e]) << ','
                << int(rm.undefined[e]) << '\n';
        }
    }
}

}  // namespace afkit
