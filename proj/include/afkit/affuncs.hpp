#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "afkit/matrix.hpp"
#include "afkit/stats.hpp"

namespace afkit {

enum class StatKind { kmer, minhash, spacedword };

std::string_view to_string(StatKind kind);

/* === Pair context ===
 *
 * Everything an evaluator may need besides the per-key values of one sample
 * pair: value-space totals and dense moments, the transformed value of an
 * absent key, order-0 background nucleotide frequencies, and (after the key
 * sweep) the number of keys present in at least one of the two samples.
 */
struct PairContext {
    int k = 0;
    double keyspace = 0.0;  // 4^k
    double total_s = 0.0, total_t = 0.0;
    double miss_s = 0.0, miss_t = 0.0;
    double mu_s = 0.0, sigma_s = 0.0, mu_t = 0.0, sigma_t = 0.0;
    std::array<double, 4> bg_s{}, bg_t{};
    double bg_cross_sum = 0.0;  // sum over bases of sqrt(bg_s * bg_t)
    // divergence-family smoothing: p(w) = (v + pseudo) / pdenom
    double pseudo_s = 0.0, pseudo_t = 0.0, pdenom_s = 1.0, pdenom_t = 1.0;
    std::uint64_t union_support = 0;
    // per-sample dense support bitmaps (4^k bits), present only when needed
    const std::vector<std::uint64_t>* support_s = nullptr;
    const std::vector<std::uint64_t>* support_t = nullptr;
    bool kulczynski2_literal = false;
    bool divergence_literal = false;

    double prob_key_s(std::uint64_t key) const { return prob_key(key, bg_s); }
    double prob_key_t(std::uint64_t key) const { return prob_key(key, bg_t); }

private:
    double prob_key(std::uint64_t key, const std::array<double, 4>& bg) const;
};

/* === Evaluator contract ===
 *
 * An AF function is decomposed into a per-key term folded into a running
 * accumulator (partial evaluation), an associative and commutative combine
 * over accumulators, and a finalize transform. Keys absent from both samples
 * are never enumerated; their contribution is added through complement().
 */
struct PairAccum {
    double a = 0.0;
    double b = 0.0;
};

class Evaluator {
public:
    Evaluator(std::string id, Orientation orientation, StatKind statistic)
        : id_(std::move(id)), orientation_(orientation), statistic_(statistic) {}
    virtual ~Evaluator() = default;

    const std::string& id() const { return id_; }
    Orientation orientation() const { return orientation_; }
    StatKind statistic() const { return statistic_; }

    // Folds the term of one key into `acc`. vs/vt are the (normalized)
    // aggregated values, ps/pt the presence flags; at least one is set.
    virtual void accumulate(PairAccum& acc, std::uint64_t key, double vs, double vt, bool ps,
                            bool pt, const PairContext& ctx) const;

    // Merges two partial accumulators (sum by default).
    virtual void combine(PairAccum& acc, const PairAccum& other) const;

    // Adds the contribution of the `count` keys absent from both samples.
    virtual void complement(PairAccum& acc, double count, const PairContext& ctx) const;

    virtual double finalize(const PairAccum& acc, const PairContext& ctx) const = 0;

private:
    std::string id_;
    Orientation orientation_;
    StatKind statistic_;
};

/* === FSWM support === */

// 5x5 don't-care scoring matrix over codes A,C,G,T,other. Defaults to the
// published Chiaromonte nucleotide scores with every pair involving a
// non-ACGT symbol at the matrix minimum.
struct SubstitutionMatrix {
    std::array<std::array<int, 5>, 5> score{};

    static SubstitutionMatrix chiaromonte();
    // Whitespace-separated: header row of symbols, then one row per symbol.
    static SubstitutionMatrix parse(std::string_view text);
    static SubstitutionMatrix load(const std::string& path);
};

struct FswmOptions {
    SubstitutionMatrix matrix = SubstitutionMatrix::chiaromonte();
    long long threshold = 0;
    std::uint64_t pair_cap = 1000000;  // max scored cross pairs per key
    std::uint64_t seed = 42;           // subsampling stream
};

// FSWM is evaluated per shared match-projection key over all cross pairs of
// occurrences; the accumulator carries (mismatching don't-care characters,
// total don't-care characters).
class FswmEvaluator : public Evaluator {
public:
    explicit FswmEvaluator(FswmOptions opt);

    void accumulate_occurrences(PairAccum& acc, std::uint64_t key,
                                const std::vector<std::string>& occ_s,
                                const std::vector<std::string>& occ_t) const;
    double finalize(const PairAccum& acc, const PairContext& ctx) const override;

private:
    FswmOptions opt_;
};

/* === Sketch (MinHash) support === */

// Estimates the Jaccard index from two bottom-s sketches; accumulator is
// (shared hashes within the merged bottom-s, merged bottom-s size).
class MashEvaluator : public Evaluator {
public:
    MashEvaluator(std::string id, Orientation orientation, bool as_distance);

    void accumulate_sketches(PairAccum& acc, const std::vector<std::uint64_t>& a,
                             const std::vector<std::uint64_t>& b, std::uint32_t s) const;
    double finalize(const PairAccum& acc, const PairContext& ctx) const override;

private:
    bool as_distance_;
};

/* === Registry === */

struct EvaluatorOptions {
    FswmOptions fswm;
};

// Canonical evaluator ids. Throws ConfigError for unknown ids.
std::unique_ptr<Evaluator> make_evaluator(std::string_view id, const EvaluatorOptions& opt = {});
const std::vector<std::string>& evaluator_ids();
bool is_known_evaluator(std::string_view id);

// Maps class-path style aliases ("x.y.Euclidean") and loose spellings
// ("D2star", "jensen_shannon") to canonical ids; returns the input unchanged
// when nothing matches.
std::string canonical_evaluator_id(std::string_view name);

}  // namespace afkit
