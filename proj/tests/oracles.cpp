#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace oracle {

namespace {

int code_of(char c) {
    switch (c) {
        case 'A': case 'a': return 0;
        case 'C': case 'c': return 1;
        case 'G': case 'g': return 2;
        case 'T': case 't': return 3;
        default: return -1;
    }
}

char complement(char c) {
    switch (c) {
        case 'A': return 'T';
        case 'C': return 'G';
        case 'G': return 'C';
        case 'T': return 'A';
        default: return 'N';
    }
}

double total_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

std::vector<double> dense_histogram(const Fragments& fragments, int k) {
    std::vector<double> hist(static_cast<std::size_t>(std::pow(4.0, k)), 0.0);
    for (const auto& frag : fragments) {
        if (frag.size() < static_cast<std::size_t>(k)) continue;
        for (std::size_t start = 0; start + k <= frag.size(); ++start) {
            std::size_t index = 0;
            bool ok = true;
            for (int i = 0; i < k; ++i) {
                const int c = code_of(frag[start + i]);
                if (c < 0) {
                    ok = false;
                    break;
                }
                index = index * 4 + static_cast<std::size_t>(c);
            }
            if (ok) hist[index] += 1.0;
        }
    }
    return hist;
}

std::array<double, 4> base_freqs(const Fragments& fragments) {
    std::array<double, 4> counts{};
    double total = 0;
    for (const auto& frag : fragments) {
        for (char c : frag) {
            const int code = code_of(c);
            if (code >= 0) {
                counts[code] += 1.0;
                total += 1.0;
            }
        }
    }
    if (total > 0) {
        for (auto& c : counts) c /= total;
    }
    return counts;
}

std::string word_of(std::uint64_t index, int k) {
    std::string word(static_cast<std::size_t>(k), 'A');
    static const char alphabet[] = "ACGT";
    for (int i = k - 1; i >= 0; --i) {
        word[static_cast<std::size_t>(i)] = alphabet[index % 4];
        index /= 4;
    }
    return word;
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
}

double manhattan(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum;
}

double chebyshev(const std::vector<double>& a, const std::vector<double>& b) {
    double best = 0;
    for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a[i] - b[i]));
    return best;
}

double chi2(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s != 0) sum += (a[i] - b[i]) * (a[i] - b[i]) / s;
    }
    return sum;
}

double canberra(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s != 0) sum += std::abs(a[i] - b[i]) / s;
    }
    return sum;
}

double d2(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

namespace {

std::vector<double> zscores(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mu = total_of(v) / n;
    double var = 0;
    for (double x : v) var += (x - mu) * (x - mu);
    var /= n;
    const double sigma = std::sqrt(var);
    std::vector<double> z(v.size(), 0.0);
    if (sigma > 0) {
        for (std::size_t i = 0; i < v.size(); ++i) z[i] = (v[i] - mu) / sigma;
    }
    return z;
}

}  // namespace

double d2z(const std::vector<double>& a, const std::vector<double>& b) {
    return d2(zscores(a), zscores(b));
}

double d2s(const std::vector<double>& a, const std::vector<double>& b,
           const std::array<double, 4>& bg_a, const std::array<double, 4>& bg_b, int k) {
    const double na = total_of(a), nb = total_of(b);
    double sum = 0;
    for (std::size_t w = 0; w < a.size(); ++w) {
        const std::string word = word_of(w, k);
        double pa = 1.0, pb = 1.0;
        for (char c : word) {
            pa *= bg_a[code_of(c)];
            pb *= bg_b[code_of(c)];
        }
        const double ca = a[w] - na * pa;
        const double cb = b[w] - nb * pb;
        const double den = std::sqrt(ca * ca + cb * cb);
        if (den > 0) sum += ca * cb / den;
    }
    return sum;
}

double d2star(const std::vector<double>& a, const std::vector<double>& b,
              const std::array<double, 4>& bg_a, const std::array<double, 4>& bg_b, int k) {
    const double na = total_of(a), nb = total_of(b);
    double sum = 0;
    for (std::size_t w = 0; w < a.size(); ++w) {
        const std::string word = word_of(w, k);
        double pa = 1.0, pb = 1.0;
        for (char c : word) {
            pa *= bg_a[code_of(c)];
            pb *= bg_b[code_of(c)];
        }
        const double ca = a[w] - na * pa;
        const double cb = b[w] - nb * pb;
        const double den = std::sqrt(na * pa * nb * pb);
        if (den > 0) sum += ca * cb / den;
    }
    return sum;
}

double intersection(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s != 0) sum += 2.0 * std::min(a[i], b[i]) / s;
    }
    return sum;
}

double kulczynski2(const std::vector<double>& a, const std::vector<double>& b) {
    const double space = static_cast<double>(a.size());
    const double mu_a = total_of(a) / space;
    const double mu_b = total_of(b) / space;
    double min_sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) min_sum += std::min(a[i], b[i]);
    return space * (mu_a + mu_b) / (2.0 * mu_a * mu_b) * min_sum;
}

double harmonic_mean(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s != 0) sum += a[i] * b[i] / s;
    }
    return 2.0 * sum;
}

double squared_chord(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::sqrt(a[i]) - std::sqrt(b[i]);
        sum += d * d;
    }
    return sum;
}

double jeffrey(const std::vector<double>& a, const std::vector<double>& b) {
    const double space = static_cast<double>(a.size());
    const double ta = total_of(a), tb = total_of(b);
    const double pc_a = 1.0 / (ta + space), pc_b = 1.0 / (tb + space);
    const double den_a = ta + space * pc_a, den_b = tb + space * pc_b;
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double pa = (a[i] + pc_a) / den_a;
        const double pb = (b[i] + pc_b) / den_b;
        sum += (pa - pb) * std::log(pa / pb);
    }
    return sum;
}

double jsd(const std::vector<double>& a, const std::vector<double>& b) {
    const double ta = total_of(a), tb = total_of(b);
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double pa = ta > 0 ? a[i] / ta : 0.0;
        const double pb = tb > 0 ? b[i] / tb : 0.0;
        const double mid = 0.5 * (pa + pb);
        if (pa > 0) sum += 0.5 * pa * std::log2(pa / mid);
        if (pb > 0) sum += 0.5 * pb * std::log2(pb / mid);
    }
    return sum;
}

double jaccard(const std::vector<double>& a, const std::vector<double>& b) {
    double both = 0, either = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool in_a = a[i] != 0, in_b = b[i] != 0;
        if (in_a && in_b) both += 1;
        if (in_a || in_b) either += 1;
    }
    return either == 0 ? 1.0 : both / either;
}

double evaluate(const std::string& id, const Fragments& fa, const Fragments& fb, int k) {
    const auto a = dense_histogram(fa, k);
    const auto b = dense_histogram(fb, k);
    if (id == "euclidean") return euclidean(a, b);
    if (id == "manhattan") return manhattan(a, b);
    if (id == "chebyshev") return chebyshev(a, b);
    if (id == "chi2") return chi2(a, b);
    if (id == "canberra") return canberra(a, b);
    if (id == "d2") return d2(a, b);
    if (id == "d2z") return d2z(a, b);
    if (id == "d2s") return d2s(a, b, base_freqs(fa), base_freqs(fb), k);
    if (id == "d2star") return d2star(a, b, base_freqs(fa), base_freqs(fb), k);
    if (id == "intersection") return intersection(a, b);
    if (id == "kulczynski2") return kulczynski2(a, b);
    if (id == "harmonic_mean") return harmonic_mean(a, b);
    if (id == "squared_chord") return squared_chord(a, b);
    if (id == "jeffrey") return jeffrey(a, b);
    if (id == "jsd") return jsd(a, b);
    if (id == "jaccard") return jaccard(a, b);
    throw std::invalid_argument("oracle: unknown function " + id);
}

std::set<std::string> canonical_kmer_set(const Fragments& fragments, int k) {
    std::set<std::string> out;
    for (const auto& frag : fragments) {
        if (frag.size() < static_cast<std::size_t>(k)) continue;
        for (std::size_t start = 0; start + k <= frag.size(); ++start) {
            const std::string word = frag.substr(start, static_cast<std::size_t>(k));
            if (word.find_first_not_of("ACGT") != std::string::npos) continue;
            std::string rc(word.rbegin(), word.rend());
            for (char& c : rc) c = complement(c);
            out.insert(std::min(word, rc));
        }
    }
    return out;
}

double jaccard_of_sets(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t both = 0;
    for (const auto& w : a) both += b.count(w);
    const std::size_t either = a.size() + b.size() - both;
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

FswmCounts fswm_enumerate(const Fragments& a, const Fragments& b, const std::string& pattern,
                          const std::array<std::array<int, 5>, 5>& score, long long threshold) {
    struct Occurrence {
        std::string match;
        std::vector<int> dontcare;  // codes 0..4
    };
    auto collect = [&](const Fragments& frags) {
        std::vector<Occurrence> occ;
        for (const auto& frag : frags) {
            if (frag.size() < pattern.size()) continue;
            for (std::size_t start = 0; start + pattern.size() <= frag.size(); ++start) {
                Occurrence o;
                bool ok = true;
                for (std::size_t p = 0; p < pattern.size(); ++p) {
                    const int c = code_of(frag[start + p]);
                    if (pattern[p] == '1') {
                        if (c < 0) {
                            ok = false;
                            break;
                        }
                        o.match.push_back(frag[start + p]);
                    } else {
                        o.dontcare.push_back(c < 0 ? 4 : c);
                    }
                }
                if (ok) occ.push_back(std::move(o));
            }
        }
        return occ;
    };
    const auto oa = collect(a);
    const auto ob = collect(b);
    FswmCounts counts;
    for (const auto& x : oa) {
        for (const auto& y : ob) {
            if (x.match != y.match) continue;
            long long s = 0;
            long long mm = 0;
            for (std::size_t d = 0; d < x.dontcare.size(); ++d) {
                s += score[x.dontcare[d]][y.dontcare[d]];
                if (x.dontcare[d] != y.dontcare[d] || x.dontcare[d] >= 4) ++mm;
            }
            if (s >= threshold) {
                counts.mismatches += mm;
                counts.total_dontcare += static_cast<long long>(x.dontcare.size());
            }
        }
    }
    return counts;
}

/* === trees === */

namespace {

using LabelSet = std::set<std::string>;

void leafset_below(const afkit::PhyloTree& t, int v, LabelSet& out) {
    if (t.nodes[v].children.empty()) {
        out.insert(t.nodes[v].label);
        return;
    }
    for (int c : t.nodes[v].children) leafset_below(t, c, out);
}

std::set<LabelSet> splits_of(const afkit::PhyloTree& t, const LabelSet& all,
                             const std::string& anchor) {
    std::set<LabelSet> splits;
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        if (static_cast<int>(v) == t.root) continue;
        LabelSet below;
        leafset_below(t, static_cast<int>(v), below);
        if (below.size() < 2 || below.size() > all.size() - 2) continue;
        if (below.count(anchor)) {
            LabelSet other;
            for (const auto& l : all) {
                if (!below.count(l)) other.insert(l);
            }
            splits.insert(other);
        } else {
            splits.insert(below);
        }
    }
    return splits;
}

}  // namespace

int rf_bruteforce(const afkit::PhyloTree& a, const afkit::PhyloTree& b) {
    LabelSet all;
    leafset_below(a, a.root, all);
    const std::string anchor = *all.begin();
    const auto sa = splits_of(a, all, anchor);
    const auto sb = splits_of(b, all, anchor);
    int diff = 0;
    for (const auto& s : sa) diff += sb.count(s) ? 0 : 1;
    for (const auto& s : sb) diff += sa.count(s) ? 0 : 1;
    return diff;
}

int mcm_bruteforce(const afkit::PhyloTree& a, const afkit::PhyloTree& b) {
    const afkit::PhyloTree ra = a.rooted ? a : afkit::midpoint_root(a);
    const afkit::PhyloTree rb = b.rooted ? b : afkit::midpoint_root(b);
    auto clusters = [](const afkit::PhyloTree& t) {
        std::vector<LabelSet> out;
        for (std::size_t v = 0; v < t.nodes.size(); ++v) {
            if (t.nodes[v].children.empty()) continue;
            LabelSet below;
            leafset_below(t, static_cast<int>(v), below);
            out.push_back(std::move(below));
        }
        return out;
    };
    auto ca = clusters(ra);
    auto cb = clusters(rb);
    const std::size_t m = std::max(ca.size(), cb.size());
    while (ca.size() < m) ca.emplace_back();
    while (cb.size() < m) cb.emplace_back();
    auto sym_diff = [](const LabelSet& x, const LabelSet& y) {
        int d = 0;
        for (const auto& l : x) d += y.count(l) ? 0 : 1;
        for (const auto& l : y) d += x.count(l) ? 0 : 1;
        return d;
    };
    std::vector<int> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = static_cast<int>(i);
    int best = std::numeric_limits<int>::max();
    do {
        int cost = 0;
        for (std::size_t i = 0; i < m; ++i) cost += sym_diff(ca[i], cb[perm[i]]);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

afkit::PhyloTree random_binary_tree(int leaves, std::mt19937_64& rng) {
    afkit::PhyloTree t;
    std::vector<int> roots;
    for (int i = 0; i < leaves; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "L%02d", i);
        roots.push_back(t.add_node(-1, 0.0, buf));
    }
    auto random_length = [&]() {
        return 0.1 + 0.9 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    while (roots.size() > 1) {
        const std::size_t x = rng() % roots.size();
        std::size_t y = rng() % (roots.size() - 1);
        if (y >= x) ++y;
        const int parent = t.add_node(-1);
        for (const std::size_t pick : {x, y}) {
            t.nodes[roots[pick]].parent = parent;
            t.nodes[roots[pick]].length = random_length();
            t.nodes[parent].children.push_back(roots[pick]);
        }
        std::vector<int> next;
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (i != x && i != y) next.push_back(roots[i]);
        }
        next.push_back(parent);
        roots = std::move(next);
    }
    t.root = roots[0];
    t.rooted = true;
    return t;
}

afkit::PhyloTree random_clock_tree(int leaves, std::mt19937_64& rng) {
    afkit::PhyloTree t;
    struct Cluster {
        int node;
        double height;
    };
    std::vector<Cluster> clusters;
    for (int i = 0; i < leaves; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "L%02d", i);
        clusters.push_back({t.add_node(-1, 0.0, buf), 0.0});
    }
    double height = 0.0;
    while (clusters.size() > 1) {
        height += 0.1 + 0.9 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const std::size_t x = rng() % clusters.size();
        std::size_t y = rng() % (clusters.size() - 1);
        if (y >= x) ++y;
        const int parent = t.add_node(-1);
        for (const std::size_t pick : {x, y}) {
            t.nodes[clusters[pick].node].parent = parent;
            t.nodes[clusters[pick].node].length = height - clusters[pick].height;
            t.nodes[parent].children.push_back(clusters[pick].node);
        }
        std::vector<Cluster> next;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            if (i != x && i != y) next.push_back(clusters[i]);
        }
        next.push_back({parent, height});
        clusters = std::move(next);
    }
    t.root = clusters[0].node;
    t.rooted = true;
    return t;
}

afkit::AFMatrix path_length_matrix(const afkit::PhyloTree& tree) {
    std::vector<int> leaves;
    for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
        if (tree.nodes[v].children.empty()) leaves.push_back(static_cast<int>(v));
    }
    std::sort(leaves.begin(), leaves.end(), [&](int a, int b) {
        return tree.nodes[a].label < tree.nodes[b].label;
    });
    std::vector<std::string> labels;
    for (int v : leaves) labels.push_back(tree.nodes[v].label);
    afkit::AFMatrix m(labels, afkit::Orientation::distance, "oracle_paths");

    const std::size_t count = tree.nodes.size();
    auto fill_dist = [&](int from, std::vector<double>& dist) {
        dist.assign(count, -1.0);
        std::vector<int> stack{from};
        dist[from] = 0.0;
        auto len = [&](int child) {
            const double l = tree.nodes[child].length;
            return std::isnan(l) ? 0.0 : l;
        };
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            const int parent = tree.nodes[v].parent;
            if (parent >= 0 && dist[parent] < 0) {
                dist[parent] = dist[v] + len(v);
                stack.push_back(parent);
            }
            for (int c : tree.nodes[v].children) {
                if (dist[c] < 0) {
                    dist[c] = dist[v] + len(c);
                    stack.push_back(c);
                }
            }
        }
    };
    std::vector<double> dist;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        fill_dist(leaves[i], dist);
        for (std::size_t j = 0; j < leaves.size(); ++j) m.at(i, j) = dist[leaves[j]];
    }
    // edge sums accumulate in path order; mirror the upper triangle so the
    // matrix is bit-exactly symmetric
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        for (std::size_t j = i + 1; j < leaves.size(); ++j) m.at(j, i) = m.at(i, j);
    }
    return m;
}

std::vector<std::string> windows_of(const std::string& fragment, int k) {
    std::vector<std::string> out;
    if (fragment.size() < static_cast<std::size_t>(k)) return out;
    for (std::size_t start = 0; start + k <= fragment.size(); ++start) {
        out.push_back(fragment.substr(start, static_cast<std::size_t>(k)));
    }
    return out;
}

std::string random_dna(std::mt19937_64& rng, std::size_t length) {
    static const char alphabet[] = "ACGT";
    std::string out(length, 'A');
    for (auto& c : out) c = alphabet[rng() % 4];
    return out;
}

double binom_cdf(int x, int n, double p) {
    if (x < 0) return 0.0;
    if (x >= n) return 1.0;
    double cdf = 0.0;
    for (int i = 0; i <= x; ++i) {
        const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                               std::lgamma(n - i + 1.0) + i * std::log(p) +
                               (n - i) * std::log1p(-p);
        cdf += std::exp(log_pmf);
    }
    return std::min(1.0, cdf);
}

std::pair<int, int> binom_central_interval(int n, double p, double mass) {
    const double tail = (1.0 - mass) / 2.0;
    // largest lo with P(X < lo) <= tail
    int lo = 0;
    while (lo < n && binom_cdf(lo, n, p) <= tail) ++lo;
    // smallest hi with P(X > hi) <= tail
    int hi = n;
    while (hi > 0 && 1.0 - binom_cdf(hi - 1, n, p) <= tail) --hi;
    return {lo, hi};
}

}  // namespace oracle
