#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "afkit/matrix.hpp"

namespace afkit {

/* === Trees === */

// Rooted tree with branch lengths. NJ output is logically unrooted and is
// stored with a trifurcation at an arbitrary root (rooted = false). A branch
// length of NaN means "unknown" and is omitted when writing Newick.
struct PhyloTree {
    struct Node {
        int parent = -1;
        std::vector<int> children;
        double length = std::numeric_limits<double>::quiet_NaN();  // to parent
        std::string label;  // non-empty for leaves
    };

    std::vector<Node> nodes;
    int root = -1;
    bool rooted = true;

    bool is_leaf(int v) const { return nodes[v].children.empty(); }
    std::size_t leaf_count() const;
    std::vector<std::string> leaf_labels() const;  // sorted
    int add_node(int parent, double length = std::numeric_limits<double>::quiet_NaN(),
                 std::string label = {});
};

/* === Construction === */

// Average-linkage agglomeration; merge heights are half the average
// inter-cluster distance and ties pick the smallest (i, j) pair. The result
// is rooted and ultrametric. Error: NonFiniteMatrix.
PhyloTree upgma(const AFMatrix& matrix);

// Saitou-Nei neighbor joining with the standard Q criterion; ties pick the
// smallest (i, j) pair; negative branch lengths are clamped to 0 with a
// warning. Errors: TooFewTaxa (n < 3), NonFiniteMatrix.
PhyloTree nj(const AFMatrix& matrix);

// Roots an unrooted tree at the midpoint of its longest leaf-to-leaf path.
PhyloTree midpoint_root(const PhyloTree& tree);

/* === Newick === */

PhyloTree parse_newick(std::string_view text);  // SyntaxError with position
std::string write_newick(const PhyloTree& tree);

/* === Tree distances === */

// Robinson-Foulds: size of the symmetric difference of the non-trivial
// bipartition sets, both trees treated as unrooted. Error: LeafSetMismatch.
int rf_distance(const PhyloTree& a, const PhyloTree& b);

// Matching Cluster distance between rooted trees: minimum-cost perfect
// matching of the internal-node cluster sets (padded with empty clusters),
// cost = leaf-set symmetric difference, solved exactly. Unrooted inputs are
// midpoint-rooted first.
int mcm_distance(const PhyloTree& a, const PhyloTree& b);

// Exact solver for a square cost matrix; returns the minimum total cost.
// Exposed for tests.
double hungarian_min_cost(const std::vector<std::vector<double>>& cost);

/* === Noise injection and the robustness sweep === */

struct NoiseSpec {
    enum class Source { simulated_pool, additive_uniform };
    double percent = 0.0;  // fraction of unordered off-diagonal pairs in [0, 1]
    Source source = Source::additive_uniform;
    double max_delta = 0.0;  // additive_uniform; 0 = max finite off-diagonal
    std::uint64_t seed = 42;
};

// Replaces floor(percent * m) distinct unordered pairs, symmetrically.
// simulated_pool substitutes a uniformly chosen off-diagonal entry of a
// uniformly chosen pool matrix; additive_uniform adds U(0, max_delta).
// Error: EmptyPool.
AFMatrix inject_noise(const AFMatrix& matrix, const NoiseSpec& spec,
                      const std::vector<AFMatrix>& pool);

enum class TreeBuilder { nj, upgma };
enum class TreeMetric { rf, mcm };

std::string_view to_string(TreeBuilder b);
std::string_view to_string(TreeMetric m);

struct SweepRow {
    TreeBuilder builder;
    TreeMetric metric;
    double percent = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    int repeats = 0;
};

// For every (builder, metric, percent): mean and sample standard deviation of
// metric(builder(corrupted matrix), gold) over seeded repeats. All builders
// and metrics of one (percent, repeat) cell share the same corrupted matrix.
std::vector<SweepRow> robustness_sweep(const AFMatrix& matrix, const PhyloTree& gold,
                                       const std::vector<TreeBuilder>& builders,
                                       const std::vector<TreeMetric>& metrics,
                                       const std::vector<double>& percents, int repeats,
                                       const NoiseSpec& spec,
                                       const std::vector<AFMatrix>& pool = {});

void write_sweep(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace afkit
