#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "afkit/common.hpp"
#include "afkit/phylo.hpp"
#include "oracles.hpp"

using namespace afkit;

namespace {

AFMatrix matrix_of(const std::vector<std::string>& labels,
                   const std::vector<std::vector<double>>& d) {
    AFMatrix m(labels, Orientation::distance, "test");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = 0; j < labels.size(); ++j) m.at(i, j) = d[i][j];
    }
    return m;
}

// canonical serialization: children ordered by smallest leaf label, lengths
// rounded, so isomorphic trees compare equal as strings
std::string canon(const PhyloTree& t, int v, double parent_len, bool with_lengths) {
    const auto& node = t.nodes[v];
    std::string body;
    if (node.children.empty()) {
        body = node.label;
    } else {
        std::vector<std::string> parts;
        for (int c : node.children) {
            parts.push_back(canon(t, c, t.nodes[c].length, with_lengths));
        }
        std::sort(parts.begin(), parts.end());
        body = "(";
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) body += ",";
            body += parts[i];
        }
        body += ")";
    }
    if (with_lengths && !std::isnan(parent_len)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), ":%.6f", parent_len);
        body += buf;
    }
    return body;
}

std::string canon(const PhyloTree& t, bool with_lengths = true) {
    return canon(t, t.root, std::numeric_limits<double>::quiet_NaN(), with_lengths);
}

}  // namespace

TEST_CASE("upgma reproduces the worked 3-taxon example") {
    const AFMatrix m = matrix_of({"A", "B", "C"}, {{0, 2, 4}, {2, 0, 4}, {4, 4, 0}});
    const PhyloTree t = upgma(m);
    const PhyloTree want = parse_newick("((A:1,B:1):1,C:2);");
    CHECK(canon(t) == canon(want));
    // root height 2: every leaf sits at depth 2
    const AFMatrix paths = oracle::path_length_matrix(t);
    CHECK(paths.at(0, 1) == doctest::Approx(2.0));  // A-B
    CHECK(paths.at(0, 2) == doctest::Approx(4.0));  // A-C
}

TEST_CASE("upgma on equidistant points merges at one height") {
    const AFMatrix m = matrix_of({"A", "B", "C", "D"},
                                 {{0, 2, 2, 2}, {2, 0, 2, 2}, {2, 2, 0, 2}, {2, 2, 2, 0}});
    const PhyloTree t = upgma(m);
    const AFMatrix paths = oracle::path_length_matrix(t);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) CHECK(paths.at(i, j) == doctest::Approx(2.0));
    }
}

TEST_CASE("upgma recovers random ultrametric trees") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 25; ++trial) {
        const int leaves = 4 + static_cast<int>(rng() % 13);
        const PhyloTree truth = oracle::random_clock_tree(leaves, rng);
        const AFMatrix m = oracle::path_length_matrix(truth);
        const PhyloTree built = upgma(m);
        CHECK(rf_distance(built, truth) == 0);
        // ultrametric output: root-to-leaf depths all equal
        const AFMatrix paths = oracle::path_length_matrix(built);
        double reference = -1;
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t j = i + 1; j < m.size(); ++j) {
                CHECK(paths.at(i, j) == doctest::Approx(m.at(i, j)).epsilon(1e-9));
            }
        }
        (void)reference;
    }
}

TEST_CASE("nj recovers random additive trees and exact branch lengths at n=3") {
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 25; ++trial) {
        const int leaves = 4 + static_cast<int>(rng() % 13);
        const PhyloTree truth = oracle::random_binary_tree(leaves, rng);
        const AFMatrix m = oracle::path_length_matrix(truth);
        const PhyloTree built = nj(m);
        CHECK(rf_distance(built, truth) == 0);
    }

    const AFMatrix m3 = matrix_of({"A", "B", "C"}, {{0, 5, 9}, {5, 0, 8}, {9, 8, 0}});
    const PhyloTree t3 = nj(m3);
    REQUIRE(t3.nodes[t3.root].children.size() == 3);
    // three-point formulas: a = (5+9-8)/2 = 3, b = 2, c = 6
    std::map<std::string, double> lengths;
    for (int c : t3.nodes[t3.root].children) lengths[t3.nodes[c].label] = t3.nodes[c].length;
    CHECK(lengths["A"] == doctest::Approx(3.0));
    CHECK(lengths["B"] == doctest::Approx(2.0));
    CHECK(lengths["C"] == doctest::Approx(6.0));
}

TEST_CASE("nj is equivariant under label permutation") {
    std::mt19937_64 rng(303);
    const PhyloTree truth = oracle::random_binary_tree(7, rng);
    const AFMatrix m = oracle::path_length_matrix(truth);
    // permute rows/columns and labels together
    std::vector<std::size_t> perm(m.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    AFMatrix shuffled(std::vector<std::string>(m.size(), ""), Orientation::distance, "test");
    std::vector<std::string> labels(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) labels[i] = m.labels[perm[i]];
    shuffled.labels = labels;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            shuffled.at(i, j) = m.at(perm[i], perm[j]);
        }
    }
    CHECK(rf_distance(nj(m), nj(shuffled)) == 0);
}

TEST_CASE("tree construction rejects bad input") {
    AFMatrix bad = matrix_of({"A", "B", "C"}, {{0, 1, 2}, {1, 0, 3}, {2, 3, 0}});
    bad.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(upgma(bad), doctest::Contains("NonFiniteMatrix"), NumericError);
    CHECK_THROWS_WITH_AS(nj(bad), doctest::Contains("NonFiniteMatrix"), NumericError);
    const AFMatrix two = matrix_of({"A", "B"}, {{0, 1}, {1, 0}});
    CHECK_THROWS_WITH_AS(nj(two), doctest::Contains("TooFewTaxa"), NumericError);
}

TEST_CASE("negative nj branch lengths are clamped") {
    std::vector<std::string> warnings;
    auto previous = set_warn_sink([&](const std::string& w) { warnings.push_back(w); });
    // violates the four-point condition badly enough to force negatives
    const AFMatrix m = matrix_of({"A", "B", "C", "D"},
                                 {{0, 10, 1, 9}, {10, 0, 9, 1}, {1, 9, 0, 10}, {9, 1, 10, 0}});
    const PhyloTree t = nj(m);
    set_warn_sink(previous);
    for (const auto& node : t.nodes) {
        if (!std::isnan(node.length)) CHECK(node.length >= 0.0);
    }
}

TEST_CASE("newick round trip") {
    const std::string text = "((A:1,B:1):1,C:2);";
    const PhyloTree t = parse_newick(text);
    CHECK(t.leaf_count() == 3);
    const PhyloTree back = parse_newick(write_newick(t));
    CHECK(canon(back) == canon(t));

    const PhyloTree tri = parse_newick("(A,B,C);");
    CHECK(tri.nodes[tri.root].children.size() == 3);
    for (int c : tri.nodes[tri.root].children) CHECK(std::isnan(tri.nodes[c].length));

    const PhyloTree quoted = parse_newick("('space name':0.5,B:0.25);");
    CHECK(quoted.leaf_count() == 2);
    const PhyloTree quoted_back = parse_newick(write_newick(quoted));
    CHECK(canon(quoted_back) == canon(quoted));
}

TEST_CASE("newick syntax errors carry a position") {
    CHECK_THROWS_WITH_AS(parse_newick("((A,B);"), doctest::Contains("SyntaxError"), InputError);
    CHECK_THROWS_WITH_AS(parse_newick("(A,Bothy"), doctest::Contains("SyntaxError"), InputError);
    CHECK_THROWS_WITH_AS(parse_newick("(A:1,A:2);"), doctest::Contains("DuplicateLeafLabel"),
                         InputError);
}

TEST_CASE("rf distance on hand trees and against the reference") {
    const PhyloTree a = parse_newick("((A,B),(C,(D,E)));");
    CHECK(rf_distance(a, a) == 0);
    // one NNI move away: distance 2
    const PhyloTree b = parse_newick("((A,C),(B,(D,E)));");
    CHECK(rf_distance(a, b) == 2);

    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 30; ++trial) {
        const int leaves = 4 + static_cast<int>(rng() % 8);
        const PhyloTree x = oracle::random_binary_tree(leaves, rng);
        const PhyloTree y = oracle::random_binary_tree(leaves, rng);
        CHECK(rf_distance(x, y) == oracle::rf_bruteforce(x, y));
        CHECK(rf_distance(x, y) == rf_distance(y, x));
    }

    const PhyloTree other = parse_newick("((A,B),(C,X));");
    CHECK_THROWS_WITH_AS(rf_distance(a, other), doctest::Contains("LeafSetMismatch"), InputError);
}

TEST_CASE("mcm distance equals brute-force matching") {
    const PhyloTree a = parse_newick("((A,B),(C,D));");
    CHECK(mcm_distance(a, a) == 0);
    const PhyloTree b = parse_newick("((A,C),(B,D));");
    CHECK(mcm_distance(a, b) == oracle::mcm_bruteforce(a, b));
    CHECK(mcm_distance(a, b) == mcm_distance(b, a));

    std::mt19937_64 rng(505);
    for (int trial = 0; trial < 25; ++trial) {
        const int leaves = 4 + static_cast<int>(rng() % 5);  // <= 7 internal clusters
        const PhyloTree x = oracle::random_binary_tree(leaves, rng);
        const PhyloTree y = oracle::random_binary_tree(leaves, rng);
        CHECK(mcm_distance(x, y) == oracle::mcm_bruteforce(x, y));
    }
}

TEST_CASE("hungarian solves random assignment problems exactly") {
    std::mt19937_64 rng(606);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        std::vector<std::vector<double>> cost(n, std::vector<double>(n));
        for (auto& row : cost) {
            for (auto& c : row) c = static_cast<double>(rng() % 50);
        }
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        double best = std::numeric_limits<double>::infinity();
        do {
            double total = 0;
            for (int i = 0; i < n; ++i) total += cost[i][perm[i]];
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(hungarian_min_cost(cost) == doctest::Approx(best));
    }
}

TEST_CASE("midpoint rooting preserves the topology") {
    std::mt19937_64 rng(707);
    const PhyloTree truth = oracle::random_binary_tree(8, rng);
    const PhyloTree unrooted = nj(oracle::path_length_matrix(truth));
    const PhyloTree rooted = midpoint_root(unrooted);
    CHECK(rooted.rooted);
    CHECK(rooted.leaf_labels() == unrooted.leaf_labels());
    CHECK(rf_distance(rooted, truth) == 0);
}

TEST_CASE("inject_noise replaces exactly the requested pairs symmetrically") {
    std::mt19937_64 rng(808);
    const int n = 9;
    const PhyloTree truth = oracle::random_clock_tree(n, rng);
    const AFMatrix m = oracle::path_length_matrix(truth);

    NoiseSpec zero;
    zero.percent = 0.0;
    const AFMatrix same = inject_noise(m, zero, {});
    CHECK(same.values == m.values);

    for (const double percent : {0.1, 0.3, 0.7, 1.0}) {
        NoiseSpec spec;
        spec.percent = percent;
        spec.seed = 99;
        const AFMatrix noisy = inject_noise(m, spec, {});
        std::size_t changed = 0;
        for (std::size_t i = 0; i < noisy.size(); ++i) {
            for (std::size_t j = i + 1; j < noisy.size(); ++j) {
                CHECK(noisy.at(i, j) == noisy.at(j, i));
                if (noisy.at(i, j) != m.at(i, j)) ++changed;
            }
        }
        const std::size_t expected =
            static_cast<std::size_t>(percent * static_cast<double>(m.pair_count()));
        CHECK(changed == expected);
        // additive noise never decreases an entry
        for (std::size_t e = 0; e < noisy.values.size(); ++e) {
            CHECK(noisy.values[e] >= m.values[e]);
        }
        // determinism
        const AFMatrix again = inject_noise(m, spec, {});
        CHECK(again.values == noisy.values);
    }
}

TEST_CASE("simulated pool noise draws values from the pool") {
    std::mt19937_64 rng(909);
    const PhyloTree truth = oracle::random_clock_tree(6, rng);
    const AFMatrix m = oracle::path_length_matrix(truth);
    AFMatrix pool_matrix = m;
    for (auto& v : pool_matrix.values) v = 1000.0 + static_cast<double>(rng() % 50);
    for (std::size_t i = 0; i < pool_matrix.size(); ++i) pool_matrix.at(i, i) = 0;

    NoiseSpec spec;
    spec.percent = 1.0;
    spec.source = NoiseSpec::Source::simulated_pool;
    std::set<double> pool_values;
    for (std::size_t i = 0; i < pool_matrix.size(); ++i) {
        for (std::size_t j = 0; j < pool_matrix.size(); ++j) {
            if (i != j) pool_values.insert(pool_matrix.at(i, j));
        }
    }
    const AFMatrix noisy = inject_noise(m, spec, {pool_matrix});
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        for (std::size_t j = i + 1; j < noisy.size(); ++j) {
            CHECK(pool_values.count(noisy.at(i, j)) == 1);
        }
    }
    CHECK_THROWS_WITH_AS(inject_noise(m, spec, {}), doctest::Contains("EmptyPool"), InputError);
}

TEST_CASE("robustness sweep reports the reference row at percent zero") {
    std::mt19937_64 rng(1010);
    const PhyloTree gold = oracle::random_clock_tree(8, rng);
    const AFMatrix m = oracle::path_length_matrix(gold);
    NoiseSpec spec;
    spec.seed = 7;
    const auto rows = robustness_sweep(m, gold, {TreeBuilder::nj, TreeBuilder::upgma},
                                       {TreeMetric::rf, TreeMetric::mcm}, {0.0, 0.4}, 5, spec);
    CHECK(rows.size() == 2 * 2 * 2);  // builders x metrics x percents
    for (const auto& row : rows) {
        if (row.percent == 0.0) {
            CHECK(row.mean == doctest::Approx(0.0));  // exact matrix recovers gold
            CHECK(row.stddev == doctest::Approx(0.0));
            CHECK(row.repeats == 5);
        }
    }
    std::ostringstream out;
    write_sweep(rows, out);
    CHECK(out.str().find("builder\tmetric\tpercent") == 0);
}
