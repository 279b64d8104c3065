#include "afkit/stats.hpp"

#include <algorithm>
#include <cmath>

#include "afkit/common.hpp"

namespace afkit {

namespace {

std::array<std::uint8_t, 256> make_base_codes() {
    std::array<std::uint8_t, 256> codes{};
    codes.fill(4);
    codes['A'] = codes['a'] = 0;
    codes['C'] = codes['c'] = 1;
    codes['G'] = codes['g'] = 2;
    codes['T'] = codes['t'] = 3;
    return codes;
}

constexpr char kBaseChar[5] = {'A', 'C', 'G', 'T', 'N'};

}  // namespace

const std::array<std::uint8_t, 256> kBaseCode = make_base_codes();

bool key_is_invalid(std::uint64_t key) { return (key & kInvalidKeyBit) != 0; }

std::uint64_t encode_kmer(std::string_view word) {
    if (word.empty() || word.size() > static_cast<std::size_t>(kMaxKmerK)) {
        throw NumericError("encode_kmer: word length out of range");
    }
    std::uint64_t code = 0;
    for (char c : word) {
        const std::uint8_t b = kBaseCode[static_cast<unsigned char>(c)];
        if (b >= 4) throw NumericError("encode_kmer: non-ACGT residue");
        code = (code << 2) | b;
    }
    return code;
}

std::string decode_kmer(std::uint64_t code, int k) {
    std::string word(static_cast<std::size_t>(k), 'A');
    for (int i = k - 1; i >= 0; --i) {
        word[static_cast<std::size_t>(i)] = kBaseChar[code & 3];
        code >>= 2;
    }
    return word;
}

std::string decode_key(std::uint64_t key, int k) {
    if (!key_is_invalid(key)) return decode_kmer(key, k);
    key &= ~kInvalidKeyBit;
    std::string word(static_cast<std::size_t>(k), 'N');
    for (int i = k - 1; i >= 0; --i) {
        word[static_cast<std::size_t>(i)] = kBaseChar[std::min<std::uint64_t>(key & 7, 4)];
        key >>= 3;
    }
    return word;
}

std::uint64_t revcomp(std::uint64_t code, int k) {
    std::uint64_t out = 0;
    for (int i = 0; i < k; ++i) {
        out = (out << 2) | (3 - (code & 3));
        code >>= 2;
    }
    return out;
}

std::uint64_t canonical_kmer(std::uint64_t code, int k) {
    return std::min(code, revcomp(code, k));
}

void KmerHistogram::add(std::uint64_t key, std::uint64_t count) {
    if (count == 0) return;
    counts[key] += count;
    total += count;
}

SpacedPattern SpacedPattern::parse(std::string_view bits) {
    if (bits.empty()) throw ConfigError("spaced pattern must not be empty");
    if (bits[0] != '1') throw ConfigError("spaced pattern must start with a match position");
    SpacedPattern p;
    p.bits.assign(bits.begin(), bits.end());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') {
            p.match_positions.push_back(static_cast<int>(i));
        } else if (bits[i] == '0') {
            p.dontcare_positions.push_back(static_cast<int>(i));
        } else {
            throw ConfigError("spaced pattern may contain only '0' and '1'");
        }
    }
    if (p.weight() > 31) throw ConfigError("spaced pattern weight above 31 is not supported");
    return p;
}

std::vector<std::uint64_t> sketch_chunk(const Chunk& chunk, int k, std::uint32_t s,
                                        std::uint64_t seed, bool canonical) {
    std::vector<std::uint64_t> hashes;
    KmerExtractOptions opt;
    opt.k = k;
    extract_kmers(chunk, opt, [&](std::uint64_t code) {
        const std::uint64_t key = canonical ? canonical_kmer(code, k) : code;
        hashes.push_back(hash64(key, seed));
    });
    std::sort(hashes.begin(), hashes.end());
    hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
    if (hashes.size() > s) hashes.resize(s);
    return hashes;
}

std::vector<std::uint64_t> merge_sketch_hashes(const std::vector<std::uint64_t>& a,
                                               const std::vector<std::uint64_t>& b,
                                               std::uint32_t s) {
    std::vector<std::uint64_t> out;
    out.reserve(std::min<std::size_t>(a.size() + b.size(), s));
    std::size_t i = 0, j = 0;
    while (out.size() < s && (i < a.size() || j < b.size())) {
        std::uint64_t v;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
            v = a[i];
            if (j < b.size() && b[j] == v) ++j;
            ++i;
        } else {
            v = b[j++];
        }
        out.push_back(v);
    }
    return out;
}

Sketch extract_minhash(const Sample& sample, int k, std::uint32_t s, std::uint64_t seed,
                       bool canonical) {
    Sketch sketch;
    sketch.sample_id = sample.sample_id;
    sketch.k = k;
    sketch.s = s;
    sketch.seed = seed;
    for (std::size_t f = 0; f < sample.fragments.size(); ++f) {
        Chunk whole;
        whole.sample_id = sample.sample_id;
        whole.fragment_id = static_cast<int>(f);
        whole.body = sample.fragments[f];
        sketch.hashes = merge_sketch_hashes(sketch.hashes, sketch_chunk(whole, k, s, seed, canonical), s);
    }
    if (sketch.hashes.size() < s) {
        warn("SketchUnderfull: sample '" + sample.name + "' has only " +
             std::to_string(sketch.hashes.size()) + " distinct k-mer hashes (requested " +
             std::to_string(s) + ")");
    }
    return sketch;
}

KmerHistogram extract_histogram(const Sample& sample, int k) {
    KmerHistogram hist;
    hist.sample_id = sample.sample_id;
    hist.k = k;
    KmerExtractOptions opt;
    opt.k = k;
    for (std::size_t f = 0; f < sample.fragments.size(); ++f) {
        Chunk whole;
        whole.sample_id = sample.sample_id;
        whole.fragment_id = static_cast<int>(f);
        whole.body = sample.fragments[f];
        extract_kmers(whole, opt, [&](std::uint64_t code) { hist.add(code); });
    }
    return hist;
}

FeatureFilter::FeatureFilter(Mode mode, const std::string& pattern) : mode_(mode) {
    try {
        regex_ = std::regex(pattern);
    } catch (const std::regex_error& e) {
        throw ConfigError("InvalidPredicate: bad filter regex '" + pattern + "': " + e.what());
    }
}

bool FeatureFilter::keep(std::string_view key_text) const {
    if (mode_ == Mode::none) return true;
    const bool matches =
        std::regex_search(key_text.begin(), key_text.end(), regex_);
    return mode_ == Mode::include ? matches : !matches;
}

bool ValueFilter::keep(double value) const {
    switch (op) {
        case Op::gt: return value > threshold;
        case Op::ge: return value >= threshold;
        case Op::lt: return value < threshold;
        case Op::le: return value <= threshold;
        case Op::eq: return value == threshold;
    }
    return true;
}

NormMode parse_norm_mode(std::string_view text) {
    if (text == "none" || text.empty()) return NormMode::none;
    if (text == "frequency") return NormMode::frequency;
    if (text == "zscore") return NormMode::zscore;
    throw ConfigError("unknown normalization mode '" + std::string(text) + "'");
}

NormParams NormParams::compute(NormMode mode, double total, double sum_sq, double keyspace) {
    NormParams p;
    p.mode = mode;
    p.total = total;
    p.mu = total / keyspace;
    const double var = std::max(0.0, sum_sq / keyspace - p.mu * p.mu);
    p.sigma = std::sqrt(var);
    if (mode == NormMode::zscore) {
        p.missing = p.sigma > 0.0 ? -p.mu / p.sigma : 0.0;
    }
    return p;
}

double NormParams::value(double raw) const {
    switch (mode) {
        case NormMode::none: return raw;
        case NormMode::frequency: return total > 0.0 ? raw / total : 0.0;
        case NormMode::zscore: return sigma > 0.0 ? (raw - mu) / sigma : 0.0;
    }
    return raw;
}

std::unordered_map<std::uint64_t, double> normalize(const KmerHistogram& hist, NormMode mode,
                                                    double* missing_out) {
    double sum_sq = 0.0;
    for (const auto& [key, count] : hist.counts) {
        sum_sq += static_cast<double>(count) * static_cast<double>(count);
    }
    const double keyspace = std::pow(4.0, hist.k);
    const NormParams p =
        NormParams::compute(mode, static_cast<double>(hist.total), sum_sq, keyspace);
    if (mode == NormMode::zscore && p.sigma == 0.0) {
        warn("DegenerateVariance: all dense histogram entries equal; z-scores set to 0");
    }
    std::unordered_map<std::uint64_t, double> out;
    out.reserve(hist.counts.size());
    for (const auto& [key, count] : hist.counts) {
        out[key] = p.value(static_cast<double>(count));
    }
    if (missing_out) *missing_out = p.missing;
    return out;
}

std::uint32_t assign_bin(std::uint64_t key, std::uint32_t bins) {
    if (bins <= 1) return 0;
    // fixed salt: bin layout must not move with the user-facing hash seed
    return static_cast<std::uint32_t>(hash64(key, 0x5bd1e995u) % bins);
}

AggregatedValue aggregate(const std::vector<PartialRecord>& records, std::uint32_t sketch_s) {
    if (records.empty()) throw NumericError("aggregate: empty record group");
    const std::size_t kind = records.front().value.index();
    for (const auto& r : records) {
        if (r.value.index() != kind) {
            throw NumericError("MixedKinds: record group mixes payload types");
        }
    }
    if (kind == 0) {
        std::uint64_t sum = 0;
        for (const auto& r : records) sum += std::get<std::uint64_t>(r.value);
        return sum;
    }
    if (kind == 1) {
        std::vector<std::uint64_t> merged;
        for (const auto& r : records) {
            merged = merge_sketch_hashes(merged, std::get<std::vector<std::uint64_t>>(r.value),
                                         sketch_s);
        }
        return merged;
    }
    std::vector<std::string> occurrences;
    occurrences.reserve(records.size());
    for (const auto& r : records) occurrences.push_back(std::get<std::string>(r.value));
    return occurrences;
}

}  // namespace afkit
