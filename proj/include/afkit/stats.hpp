#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "afkit/seqio.hpp"

namespace afkit {

/* === Statistic keys ===
 *
 * Valid k-mers are packed 2 bits per residue (A=0, C=1, G=2, T=3), most
 * significant first, so numeric order equals lexicographic order. Windows
 * containing a non-ACGT residue can optionally be kept for filter testing;
 * they are packed 3 bits per residue with every non-ACGT symbol normalized
 * to code 4 (rendered as 'N') and carry the high-bit invalid marker.
 */

inline constexpr std::uint64_t kInvalidKeyBit = 1ULL << 63;
inline constexpr int kMaxKmerK = 31;         // 2-bit packing limit
inline constexpr int kMaxInvalidKmerK = 20;  // 3-bit packing limit

extern const std::array<std::uint8_t, 256> kBaseCode;  // A/C/G/T -> 0..3, else 4

bool key_is_invalid(std::uint64_t key);
std::uint64_t encode_kmer(std::string_view word);            // word must be ACGT only
std::string decode_kmer(std::uint64_t code, int k);
std::string decode_key(std::uint64_t key, int k);            // handles invalid keys too
std::uint64_t revcomp(std::uint64_t code, int k);
std::uint64_t canonical_kmer(std::uint64_t code, int k);     // min(code, revcomp)

/* === Domain types === */

struct KmerHistogram {
    int sample_id = -1;
    int k = 0;
    std::unordered_map<std::uint64_t, std::uint64_t> counts;  // sparse, values > 0
    std::uint64_t total = 0;                                  // sum of counts

    void add(std::uint64_t key, std::uint64_t count = 1);
};

struct Sketch {
    int sample_id = -1;
    int k = 0;
    std::uint32_t s = 0;        // requested sketch size
    std::uint64_t seed = 42;
    std::vector<std::uint64_t> hashes;  // sorted ascending, distinct, |hashes| <= s
};

struct SpacedPattern {
    std::string bits;                       // over {'1','0'}, first bit '1'
    std::vector<int> match_positions;
    std::vector<int> dontcare_positions;

    int length() const { return static_cast<int>(bits.size()); }
    int weight() const { return static_cast<int>(match_positions.size()); }

    // Validates: non-empty, only '0'/'1', first bit '1', weight in [1, 31].
    static SpacedPattern parse(std::string_view bits);
};

// One spaced-word occurrence: the match projection packed like a k-mer of
// length weight(), and the don't-care projection as one residue code
// (0..3 = ACGT, 4 = anything else) per byte.
struct SpacedWordRecord {
    int sample_id = -1;
    std::uint64_t key = 0;
    std::string dontcare;
};

/* === Extraction === */

struct KmerExtractOptions {
    int k = 1;
    bool keep_invalid = false;  // emit invalid-marked keys instead of dropping
};

// Calls sink(key) once per window of length k fully inside the chunk body,
// skipping the first left_overlap window starts. Windows with a non-ACGT
// residue are dropped unless keep_invalid is set. A chunk shorter than k
// yields nothing.
template <class Sink>
void extract_kmers(const Chunk& chunk, const KmerExtractOptions& opt, Sink&& sink);

// Calls sink(key, dontcare) per window whose match positions are all ACGT.
template <class Sink>
void extract_spaced_words(const Chunk& chunk, const SpacedPattern& pattern, Sink&& sink);

// Bottom-s distinct hashes of the chunk's valid k-mers (canonicalized when
// `canonical` is set), sorted ascending.
std::vector<std::uint64_t> sketch_chunk(const Chunk& chunk, int k, std::uint32_t s,
                                        std::uint64_t seed, bool canonical = true);

// Merges sorted distinct hash lists, keeping the s smallest distinct values.
std::vector<std::uint64_t> merge_sketch_hashes(const std::vector<std::uint64_t>& a,
                                               const std::vector<std::uint64_t>& b,
                                               std::uint32_t s);

// Whole-sample sketch; warns "SketchUnderfull" when fewer than s distinct
// hashes exist.
Sketch extract_minhash(const Sample& sample, int k, std::uint32_t s, std::uint64_t seed,
                       bool canonical = true);

// Whole-sample histogram (mainly for tests and direct evaluator use).
KmerHistogram extract_histogram(const Sample& sample, int k);

/* === Filters === */

// Stage-2 feature filter over the decoded key text. With no pattern
// configured everything passes; the default pipeline additionally drops
// invalid (non-ACGT) keys unless keep_invalid is set.
class FeatureFilter {
public:
    enum class Mode { none, include, exclude };

    FeatureFilter() = default;
    FeatureFilter(Mode mode, const std::string& pattern);  // InvalidPredicate on bad regex

    bool active() const { return mode_ != Mode::none; }
    bool keep(std::string_view key_text) const;

private:
    Mode mode_ = Mode::none;
    std::regex regex_;
};

// Stage-4 value filter: comparison of the aggregated value against a constant.
struct ValueFilter {
    enum class Op { gt, ge, lt, le, eq };
    Op op = Op::ge;
    double threshold = 0.0;

    bool keep(double value) const;
};

/* === Normalization === */

enum class NormMode { none, frequency, zscore };

NormMode parse_norm_mode(std::string_view text);

// Per-sample constants of the value transform. `missing` is the transformed
// value of a zero count, nonzero only in z-score mode.
struct NormParams {
    NormMode mode = NormMode::none;
    double total = 0.0;       // sum of raw aggregated values
    double mu = 0.0;          // dense mean of raw values over 4^k entries
    double sigma = 0.0;       // dense population standard deviation
    double missing = 0.0;

    double value(double raw) const;

    // keyspace = 4^k; sum_sq = sum of squared raw values
    static NormParams compute(NormMode mode, double total, double sum_sq, double keyspace);
};

// Spec-shaped normalization of a whole histogram; in z-score mode the value
// of all absent keys is returned through `missing_out`. A degenerate variance
// (all dense entries equal) yields the all-zero vector and a warning.
std::unordered_map<std::uint64_t, double> normalize(const KmerHistogram& hist, NormMode mode,
                                                    double* missing_out = nullptr);

/* === Misc stage primitives === */

// Deterministic bin id in [0, bins): 64-bit hash of the key, mod bins.
std::uint32_t assign_bin(std::uint64_t key, std::uint32_t bins);

// Partial record as moved between stages: payload is a count, a sketch
// fragment, or one spaced-word don't-care projection.
struct PartialRecord {
    std::uint64_t key = 0;
    std::uint32_t sample_id = 0;
    std::variant<std::uint64_t, std::vector<std::uint64_t>, std::string> value;
};

// Aggregated value of one (key, sample) group: summed count, merged sketch,
// or the multiset of don't-care projections.
using AggregatedValue =
    std::variant<std::uint64_t, std::vector<std::uint64_t>, std::vector<std::string>>;

// Aggregates records that share (key, sample). Counts are summed, sketch
// fragments merged bottom-s, don't-care payloads concatenated. Throws
// "MixedKinds" when payload types disagree.
AggregatedValue aggregate(const std::vector<PartialRecord>& records, std::uint32_t sketch_s = 0);

/* === template implementations === */

template <class Sink>
void extract_kmers(const Chunk& chunk, const KmerExtractOptions& opt, Sink&& sink) {
    const int k = opt.k;
    const std::string_view body = chunk.body;
    if (k < 1 || body.size() < static_cast<std::size_t>(k)) return;
    const std::uint64_t mask2 = (k == 32) ? ~0ULL : ((1ULL << (2 * k)) - 1);
    const std::uint64_t mask3 = (1ULL << (3 * std::min(k, kMaxInvalidKmerK))) - 1;
    std::uint64_t code2 = 0, code3 = 0;
    int valid_run = 0;  // consecutive ACGT residues ending at current position
    for (std::size_t i = 0; i < body.size(); ++i) {
        const std::uint8_t c = kBaseCode[static_cast<unsigned char>(body[i])];
        code3 = ((code3 << 3) | c) & mask3;
        if (c < 4) {
            code2 = ((code2 << 2) | c) & mask2;
            ++valid_run;
        } else {
            code2 = (code2 << 2) & mask2;
            valid_run = 0;
        }
        if (i + 1 < static_cast<std::size_t>(k)) continue;
        const std::size_t start = i + 1 - k;
        if (start < chunk.left_overlap) continue;
        if (valid_run >= k) {
            sink(code2);
        } else if (opt.keep_invalid) {
            sink(code3 | kInvalidKeyBit);
        }
    }
}

template <class Sink>
void extract_spaced_words(const Chunk& chunk, const SpacedPattern& pattern, Sink&& sink) {
    const std::size_t len = static_cast<std::size_t>(pattern.length());
    const std::string_view body = chunk.body;
    if (len == 0 || body.size() < len) return;
    std::string dontcare(pattern.dontcare_positions.size(), '\0');
    for (std::size_t start = chunk.left_overlap; start + len <= body.size(); ++start) {
        std::uint64_t key = 0;
        bool ok = true;
        for (int m : pattern.match_positions) {
            const std::uint8_t c = kBaseCode[static_cast<unsigned char>(body[start + m])];
            if (c >= 4) {
                ok = false;
                break;
            }
            key = (key << 2) | c;
        }
        if (!ok) continue;
        for (std::size_t d = 0; d < pattern.dontcare_positions.size(); ++d) {
            dontcare[d] = static_cast<char>(
                kBaseCode[static_cast<unsigned char>(body[start + pattern.dontcare_positions[d]])]);
        }
        sink(key, dontcare);
    }
}

}  // namespace afkit
