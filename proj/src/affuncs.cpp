#include "afkit/affuncs.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>

#include "afkit/common.hpp"
#include "afkit/seqio.hpp"

namespace afkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string_view to_string(StatKind kind) {
    switch (kind) {
        case StatKind::kmer: return "kmer";
        case StatKind::minhash: return "minhash";
        case StatKind::spacedword: return "spacedword";
    }
    return "?";
}

double PairContext::prob_key(std::uint64_t key, const std::array<double, 4>& bg) const {
    if (key_is_invalid(key)) return 0.0;
    double p = 1.0;
    for (int i = 0; i < k; ++i) {
        p *= bg[(key >> (2 * (k - 1 - i))) & 3];
    }
    return p;
}

void Evaluator::accumulate(PairAccum&, std::uint64_t, double, double, bool, bool,
                           const PairContext&) const {
    throw NumericError("evaluator '" + id_ + "' does not take per-key statistics");
}

void Evaluator::combine(PairAccum& acc, const PairAccum& other) const {
    acc.a += other.a;
    acc.b += other.b;
}

void Evaluator::complement(PairAccum& acc, double count, const PairContext& ctx) const {
    if (count <= 0.0) return;
    PairAccum one;
    accumulate(one, 0, ctx.miss_s, ctx.miss_t, false, false, ctx);
    acc.a += count * one.a;
    acc.b += count * one.b;
}

/* === The Minkowski family === */

namespace {

class MinkowskiEvaluator final : public Evaluator {
public:
    enum class Variant { euclidean, manhattan, chebyshev };

    MinkowskiEvaluator(std::string id, Variant v)
        : Evaluator(std::move(id), Orientation::distance, StatKind::kmer), variant_(v) {}

    void accumulate(PairAccum& acc, std::uint64_t, double vs, double vt, bool, bool,
                    const PairContext&) const override {
        const double d = vs - vt;
        switch (variant_) {
            case Variant::euclidean: acc.a += d * d; break;
            case Variant::manhattan: acc.a += std::abs(d); break;
            case Variant::chebyshev: acc.a = std::max(acc.a, std::abs(d)); break;
        }
    }

    void combine(PairAccum& acc, const PairAccum& other) const override {
        if (variant_ == Variant::chebyshev) {
            acc.a = std::max(acc.a, other.a);
            acc.b = std::max(acc.b, other.b);
        } else {
            acc.a += other.a;
            acc.b += other.b;
        }
    }

    void complement(PairAccum& acc, double count, const PairContext& ctx) const override {
        if (count <= 0.0) return;
        if (variant_ == Variant::chebyshev) {
            acc.a = std::max(acc.a, std::abs(ctx.miss_s - ctx.miss_t));
        } else {
            Evaluator::complement(acc, count, ctx);
        }
    }

    double finalize(const PairAccum& acc, const PairContext&) const override {
        return variant_ == Variant::euclidean ? std::sqrt(acc.a) : acc.a;
    }

private:
    Variant variant_;
};

/* === Exact Jaccard over histogram supports === */

class JaccardEvaluator final : public Evaluator {
public:
    JaccardEvaluator() : Evaluator("jaccard", Orientation::similarity, StatKind::kmer) {}

    void accumulate(PairAccum& acc, std::uint64_t, double, double, bool ps, bool pt,
                    const PairContext&) const override {
        if (ps && pt) acc.a += 1.0;
        if (ps || pt) acc.b += 1.0;
    }

    double finalize(const PairAccum& acc, const PairContext&) const override {
        if (acc.b == 0.0) {
            warn("EmptySupport: Jaccard of two empty supports defined as 1");
            return 1.0;
        }
        return acc.a / acc.b;
    }
};

/* === chi^2 and Canberra === */

class Chi2CanberraEvaluator final : public Evaluator {
public:
    enum class Variant { chi2, canberra };

    Chi2CanberraEvaluator(std::string id, Variant v)
        : Evaluator(std::move(id), Orientation::distance, StatKind::kmer), variant_(v) {}

    void accumulate(PairAccum& acc, std::uint64_t, double vs, double vt, bool, bool,
                    const PairContext&) const override {
        const double sum = vs + vt;
        if (sum == 0.0) return;  // keys absent from both contribute nothing
        const double d = vs - vt;
        acc.a += variant_ == Variant::chi2 ? d * d / sum : std::abs(d) / sum;
    }

    double finalize(const PairAccum& acc, const PairContext&) const override { return acc.a; }

private:
    Variant variant_;
};

/* === The D2 family === */

class D2FamilyEvaluator final : public Evaluator {
public:
    enum class Variant { d2, d2z, d2s, d2star };

    D2FamilyEvaluator(std::string id, Variant v)
        : Evaluator(std::move(id), Orientation::similarity, StatKind::kmer), variant_(v) {}

    void accumulate(PairAccum& acc, std::uint64_t key, double vs, double vt, bool ps, bool pt,
                    const PairContext& ctx) const override {
        switch (variant_) {
            case Variant::d2:
                acc.a += vs * vt;
                break;
            case Variant::d2z: {
                const double zs = ctx.sigma_s > 0.0 ? (vs - ctx.mu_s) / ctx.sigma_s : 0.0;
                const double zt = ctx.sigma_t > 0.0 ? (vt - ctx.mu_t) / ctx.sigma_t : 0.0;
                acc.a += zs * zt;
                break;
            }
            case Variant::d2s: {
                const double cs = vs - ctx.total_s * background(ctx, key, ps, true);
                const double ct = vt - ctx.total_t * background(ctx, key, pt, false);
                const double den = std::sqrt(cs * cs + ct * ct);
                if (den > 0.0) acc.a += cs * ct / den;
                break;
            }
            case Variant::d2star: {
                const double es = ctx.total_s * background(ctx, key, ps, true);
                const double et = ctx.total_t * background(ctx, key, pt, false);
                const double den = std::sqrt(es * et);
                if (den > 0.0) acc.a += (vs - es) * (vt - et) / den;
                acc.b += den;
                break;
            }
        }
    }

    void complement(PairAccum& acc, double count, const PairContext& ctx) const override {
        if (count <= 0.0) return;
        switch (variant_) {
            case Variant::d2:
                acc.a += count * ctx.miss_s * ctx.miss_t;
                break;
            case Variant::d2z: {
                const double zs = ctx.sigma_s > 0.0 ? (ctx.miss_s - ctx.mu_s) / ctx.sigma_s : 0.0;
                const double zt = ctx.sigma_t > 0.0 ? (ctx.miss_t - ctx.mu_t) / ctx.sigma_t : 0.0;
                acc.a += count * zs * zt;
                break;
            }
            case Variant::d2s:
                complement_d2s(acc, ctx);
                break;
            case Variant::d2star:
                // folded into finalize through the closed-form total
                break;
        }
    }

    double finalize(const PairAccum& acc, const PairContext& ctx) const override {
        if (variant_ != Variant::d2star) return acc.a;
        const double closed_total = std::sqrt(ctx.total_s * ctx.total_t) *
                                    std::pow(ctx.bg_cross_sum, ctx.k);
        return acc.a + (closed_total - acc.b);
    }

private:
    static double background(const PairContext& ctx, std::uint64_t key, bool present, bool s) {
        const double p = s ? ctx.prob_key_s(key) : ctx.prob_key_t(key);
        if (present && p == 0.0 && !key_is_invalid(key)) {
            throw NumericError("DegenerateBackground: zero background probability for a present " +
                               decode_key(key, ctx.k));
        }
        return p;
    }

    void complement_d2s(PairAccum& acc, const PairContext& ctx) const {
        if (ctx.k > 8 || !ctx.support_s || !ctx.support_t) {
            // no closed form exists for the d2s complement; beyond the dense
            // enumeration range those terms are dropped
            warn("d2s: complement terms dropped (k > 8); result is sparse-only");
            return;
        }
        const std::uint64_t space = 1ULL << (2 * ctx.k);
        const auto& ss = *ctx.support_s;
        const auto& st = *ctx.support_t;
        for (std::uint64_t w = 0; w < space; ++w) {
            if ((ss[w >> 6] >> (w & 63)) & 1) continue;
            if ((st[w >> 6] >> (w & 63)) & 1) continue;
            const double cs = ctx.miss_s - ctx.total_s * ctx.prob_key_s(w);
            const double ct = ctx.miss_t - ctx.total_t * ctx.prob_key_t(w);
            const double den = std::sqrt(cs * cs + ct * ct);
            if (den > 0.0) acc.a += cs * ct / den;
        }
    }

    Variant variant_;
};

/* === The intersection family === */

class IntersectionFamilyEvaluator final : public Evaluator {
public:
    enum class Variant { intersection, kulczynski2 };

    IntersectionFamilyEvaluator(std::string id, Variant v)
        : Evaluator(std::move(id), Orientation::similarity, StatKind::kmer), variant_(v) {}

    void accumulate(PairAccum& acc, std::uint64_t, double vs, double vt, bool, bool,
                    const PairContext&) const override {
        if (variant_ == Variant::intersection) {
            const double sum = vs + vt;
            if (sum != 0.0) acc.a += 2.0 * std::min(vs, vt) / sum;
        } else {
            acc.a += std::min(vs, vt);
        }
    }

    double finalize(const PairAccum& acc, const PairContext& ctx) const override {
        if (variant_ == Variant::intersection) return acc.a;
        if (ctx.total_s == 0.0 || ctx.total_t == 0.0) {
            throw NumericError("ZeroMean: Kulczynski2 needs non-empty histograms");
        }
        const double mu_s = ctx.total_s / ctx.keyspace;
        const double mu_t = ctx.total_t / ctx.keyspace;
        const double num = ctx.kulczynski2_literal ? (mu_s - mu_t) : (mu_s + mu_t);
        const double a_mu = ctx.keyspace * num / (2.0 * mu_s * mu_t);
        return a_mu * acc.a;
    }

private:
    Variant variant_;
};

/* === The inner product family === */

class InnerProductFamilyEvaluator final : public Evaluator {
public:
    enum class Variant { harmonic_mean, squared_chord };

    InnerProductFamilyEvaluator(std::string id, Variant v)
        : Evaluator(std::move(id),
                    v == Variant::harmonic_mean ? Orientation::similarity : Orientation::distance,
                    StatKind::kmer),
          variant_(v) {}

    void accumulate(PairAccum& acc, std::uint64_t, double vs, double vt, bool, bool,
                    const PairContext&) const override {
        if (variant_ == Variant::harmonic_mean) {
            const double sum = vs + vt;
            if (sum != 0.0) acc.a += vs * vt / sum;
        } else {
            if (vs < 0.0 || vt < 0.0) {
                throw NumericError(
                    "NegativeInput: squared chord needs raw or frequency statistics");
            }
            const double d = std::sqrt(vs) - std::sqrt(vt);
            acc.a += d * d;
        }
    }

    double finalize(const PairAccum& acc, const PairContext&) const override {
        return variant_ == Variant::harmonic_mean ? 2.0 * acc.a : acc.a;
    }

private:
    Variant variant_;
};

/* === The divergence family === */

class DivergenceFamilyEvaluator final : public Evaluator {
public:
    enum class Variant { jeffrey, jsd };

    DivergenceFamilyEvaluator(std::string id, Variant v)
        : Evaluator(std::move(id), Orientation::distance, StatKind::kmer), variant_(v) {}

    void accumulate(PairAccum& acc, std::uint64_t, double vs, double vt, bool, bool,
                    const PairContext& ctx) const override {
        if (variant_ == Variant::jeffrey) {
            // smoothed: every dense entry carries the pseudocount
            const double ps = (vs + ctx.pseudo_s) / ctx.pdenom_s;
            const double pt = (vt + ctx.pseudo_t) / ctx.pdenom_t;
            acc.a += (ps - pt) * std::log(ps / pt);
        } else {
            const double den_s = ctx.divergence_literal ? ctx.keyspace : ctx.total_s;
            const double den_t = ctx.divergence_literal ? ctx.keyspace : ctx.total_t;
            const double ps = den_s > 0.0 ? vs / den_s : 0.0;
            const double pt = den_t > 0.0 ? vt / den_t : 0.0;
            const double mid = 0.5 * (ps + pt);
            if (ps > 0.0) acc.a += 0.5 * ps * std::log2(ps / mid);
            if (pt > 0.0) acc.a += 0.5 * pt * std::log2(pt / mid);
        }
    }

    double finalize(const PairAccum& acc, const PairContext&) const override { return acc.a; }

private:
    Variant variant_;
};

}  // namespace

/* === FSWM === */

SubstitutionMatrix SubstitutionMatrix::chiaromonte() {
    SubstitutionMatrix m;
    const int table[4][4] = {
        {91, -114, -31, -123},
        {-114, 100, -125, -31},
        {-31, -125, 100, -114},
        {-123, -31, -114, 91},
    };
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            m.score[i][j] = (i < 4 && j < 4) ? table[i][j] : -125;
        }
    }
    return m;
}

SubstitutionMatrix SubstitutionMatrix::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string token;
    std::vector<int> symbols;  // codes 0..4 in header order
    std::string header_line;
    if (!std::getline(in, header_line)) throw ConfigError("empty substitution matrix");
    {
        std::istringstream header(header_line);
        while (header >> token) {
            if (token.size() != 1) throw ConfigError("bad substitution matrix symbol '" + token + "'");
            const std::uint8_t code = kBaseCode[static_cast<unsigned char>(token[0])];
            symbols.push_back(code);
        }
    }
    if (symbols.size() != 4 && symbols.size() != 5) {
        throw ConfigError("substitution matrix header must list 4 or 5 symbols");
    }
    SubstitutionMatrix m;
    int min_score = 0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (!(in >> token)) throw ConfigError("substitution matrix truncated");
        // row label is optional
        bool labeled = token.size() == 1 && kBaseCode[static_cast<unsigned char>(token[0])] <= 4 &&
                       !(token[0] >= '0' && token[0] <= '9') && token[0] != '-';
        int first_value;
        if (labeled) {
            if (!(in >> first_value)) throw ConfigError("substitution matrix truncated");
        } else {
            first_value = std::stoi(token);
        }
        m.score[symbols[i]][symbols[0]] = first_value;
        min_score = std::min(min_score, first_value);
        for (std::size_t j = 1; j < symbols.size(); ++j) {
            int v;
            if (!(in >> v)) throw ConfigError("substitution matrix truncated");
            m.score[symbols[i]][symbols[j]] = v;
            min_score = std::min(min_score, v);
        }
    }
    if (symbols.size() == 4) {
        for (int i = 0; i < 5; ++i) {
            m.score[4][i] = min_score;
            m.score[i][4] = min_score;
        }
    }
    return m;
}

SubstitutionMatrix SubstitutionMatrix::load(const std::string& path) {
    return parse(read_file(path));
}

FswmEvaluator::FswmEvaluator(FswmOptions opt)
    : Evaluator("fswm", Orientation::distance, StatKind::spacedword), opt_(std::move(opt)) {}

void FswmEvaluator::accumulate_occurrences(PairAccum& acc, std::uint64_t key,
                                           const std::vector<std::string>& occ_s,
                                           const std::vector<std::string>& occ_t) const {
    if (occ_s.empty() || occ_t.empty()) return;
    const std::uint64_t cross = static_cast<std::uint64_t>(occ_s.size()) * occ_t.size();
    auto score_pair = [&](const std::string& a, const std::string& b) {
        long long score = 0;
        int mismatches = 0;
        const std::size_t len = a.size();
        for (std::size_t i = 0; i < len; ++i) {
            const int ca = a[i], cb = b[i];
            score += opt_.matrix.score[ca][cb];
            // any pair involving a non-ACGT symbol counts as a mismatch
            if (ca != cb || ca >= 4) ++mismatches;
        }
        if (score >= opt_.threshold) {
            acc.a += mismatches;
            acc.b += static_cast<double>(len);
        }
    };
    if (cross <= opt_.pair_cap) {
        for (const auto& a : occ_s) {
            for (const auto& b : occ_t) score_pair(a, b);
        }
    } else {
        warn("fswm: " + std::to_string(cross) + " occurrence pairs for one key, sampling " +
             std::to_string(opt_.pair_cap));
        std::mt19937_64 rng(derive_seed(opt_.seed, key));
        for (std::uint64_t draw = 0; draw < opt_.pair_cap; ++draw) {
            const auto& a = occ_s[uniform_below(rng, occ_s.size())];
            const auto& b = occ_t[uniform_below(rng, occ_t.size())];
            score_pair(a, b);
        }
    }
}

double FswmEvaluator::finalize(const PairAccum& acc, const PairContext&) const {
    if (acc.b == 0.0) {
        warn("fswm: NoMatches, distance undefined");
        return kNaN;
    }
    const double rate = acc.a / acc.b;
    if (rate >= 0.75) {
        warn("fswm: SaturatedDistance (mismatch rate >= 3/4)");
        return kInf;
    }
    return -0.75 * std::log(1.0 - rate * 4.0 / 3.0);
}

/* === Mash === */

MashEvaluator::MashEvaluator(std::string id, Orientation orientation, bool as_distance)
    : Evaluator(std::move(id), orientation, StatKind::minhash), as_distance_(as_distance) {}

void MashEvaluator::accumulate_sketches(PairAccum& acc, const std::vector<std::uint64_t>& a,
                                        const std::vector<std::uint64_t>& b,
                                        std::uint32_t s) const {
    // walk the merged bottom-s of the union, counting values present in both
    std::size_t i = 0, j = 0;
    std::uint32_t taken = 0;
    while (taken < s && (i < a.size() || j < b.size())) {
        if (i < a.size() && j < b.size() && a[i] == b[j]) {
            acc.a += 1.0;
            ++i;
            ++j;
        } else if (j >= b.size() || (i < a.size() && a[i] < b[j])) {
            ++i;
        } else {
            ++j;
        }
        ++taken;
    }
    acc.b = taken;
}

double MashEvaluator::finalize(const PairAccum& acc, const PairContext& ctx) const {
    double jaccard;
    if (acc.b == 0.0) {
        warn("EmptySupport: Mash estimate of two empty sketches defined as 1");
        jaccard = 1.0;
    } else {
        jaccard = acc.a / acc.b;
    }
    if (!as_distance_) return jaccard;
    if (jaccard == 0.0) return kInf;
    return -std::log(2.0 * jaccard / (1.0 + jaccard)) / static_cast<double>(ctx.k);
}

/* === Registry === */

std::unique_ptr<Evaluator> make_evaluator(std::string_view id, const EvaluatorOptions& opt) {
    using MV = MinkowskiEvaluator::Variant;
    using CV = Chi2CanberraEvaluator::Variant;
    using DV = D2FamilyEvaluator::Variant;
    using IV = IntersectionFamilyEvaluator::Variant;
    using PV = InnerProductFamilyEvaluator::Variant;
    using GV = DivergenceFamilyEvaluator::Variant;
    const std::string name(id);
    if (name == "euclidean") return std::make_unique<MinkowskiEvaluator>(name, MV::euclidean);
    if (name == "manhattan") return std::make_unique<MinkowskiEvaluator>(name, MV::manhattan);
    if (name == "chebyshev") return std::make_unique<MinkowskiEvaluator>(name, MV::chebyshev);
    if (name == "jaccard") return std::make_unique<JaccardEvaluator>();
    if (name == "chi2") return std::make_unique<Chi2CanberraEvaluator>(name, CV::chi2);
    if (name == "canberra") return std::make_unique<Chi2CanberraEvaluator>(name, CV::canberra);
    if (name == "d2") return std::make_unique<D2FamilyEvaluator>(name, DV::d2);
    if (name == "d2z") return std::make_unique<D2FamilyEvaluator>(name, DV::d2z);
    if (name == "d2s") return std::make_unique<D2FamilyEvaluator>(name, DV::d2s);
    if (name == "d2star") return std::make_unique<D2FamilyEvaluator>(name, DV::d2star);
    if (name == "intersection") {
        return std::make_unique<IntersectionFamilyEvaluator>(name, IV::intersection);
    }
    if (name == "kulczynski2") {
        return std::make_unique<IntersectionFamilyEvaluator>(name, IV::kulczynski2);
    }
    if (name == "harmonic_mean") {
        return std::make_unique<InnerProductFamilyEvaluator>(name, PV::harmonic_mean);
    }
    if (name == "squared_chord") {
        return std::make_unique<InnerProductFamilyEvaluator>(name, PV::squared_chord);
    }
    if (name == "jeffrey") return std::make_unique<DivergenceFamilyEvaluator>(name, GV::jeffrey);
    if (name == "jsd") return std::make_unique<DivergenceFamilyEvaluator>(name, GV::jsd);
    if (name == "mash") {
        return std::make_unique<MashEvaluator>(name, Orientation::distance, true);
    }
    if (name == "mash_jaccard") {
        return std::make_unique<MashEvaluator>(name, Orientation::similarity, false);
    }
    if (name == "fswm") return std::make_unique<FswmEvaluator>(opt.fswm);
    throw ConfigError("unknown evaluator '" + name + "'");
}

const std::vector<std::string>& evaluator_ids() {
    static const std::vector<std::string> ids = {
        "euclidean",    "manhattan",   "chebyshev",     "jaccard",       "chi2",
        "canberra",     "d2",          "d2z",           "d2s",           "d2star",
        "intersection", "kulczynski2", "harmonic_mean", "squared_chord", "jeffrey",
        "jsd",          "mash",        "mash_jaccard",  "fswm",
    };
    return ids;
}

bool is_known_evaluator(std::string_view id) {
    const auto& ids = evaluator_ids();
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

std::string canonical_evaluator_id(std::string_view name) {
    // take the last dotted component, lowercase, '*' -> "star", drop -_ separators
    std::string_view tail = name;
    if (const std::size_t dot = tail.rfind('.'); dot != std::string_view::npos) {
        tail = tail.substr(dot + 1);
    }
    std::string flat;
    for (char c : tail) {
        if (c == '*') {
            flat += "star";
        } else if (c != '-' && c != '_') {
            flat.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    struct Alias {
        const char* flat;
        const char* id;
    };
    static const Alias aliases[] = {
        {"euclidean", "euclidean"},
        {"manhattan", "manhattan"},
        {"chebyshev", "chebyshev"},
        {"jaccard", "jaccard"},
        {"chi2", "chi2"},
        {"chisquare", "chi2"},
        {"canberra", "canberra"},
        {"d2", "d2"},
        {"d2z", "d2z"},
        {"d2s", "d2s"},
        {"d2star", "d2star"},
        {"intersection", "intersection"},
        {"czekanowski", "intersection"},
        {"kulczynski2", "kulczynski2"},
        {"harmonicmean", "harmonic_mean"},
        {"squaredchord", "squared_chord"},
        {"jeffrey", "jeffrey"},
        {"jeffreys", "jeffrey"},
        {"jsd", "jsd"},
        {"jensenshannon", "jsd"},
        {"mash", "mash"},
        {"minhash", "mash"},
        {"mashjaccard", "mash_jaccard"},
        {"fswm", "fswm"},
        {"filteredspacedwordmatches", "fswm"},
    };
    for (const auto& alias : aliases) {
        if (flat == alias.flat) return alias.id;
    }
    return std::string(name);
}

}  // namespace afkit
