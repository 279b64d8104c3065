#include "afkit/phylo.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "afkit/common.hpp"

namespace afkit {

namespace {

constexpr double kUnknownLength = std::numeric_limits<double>::quiet_NaN();

void check_finite(const AFMatrix& m) {
    if (!m.all_finite()) {
        throw NumericError("NonFiniteMatrix: tree construction needs finite entries");
    }
}

}  // namespace

std::size_t PhyloTree::leaf_count() const {
    std::size_t count = 0;
    for (const auto& node : nodes) {
        if (node.children.empty()) ++count;
    }
    return count;
}

std::vector<std::string> PhyloTree::leaf_labels() const {
    std::vector<std::string> labels;
    for (const auto& node : nodes) {
        if (node.children.empty()) labels.push_back(node.label);
    }
    std::sort(labels.begin(), labels.end());
    return labels;
}

int PhyloTree::add_node(int parent, double length, std::string label) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(Node{parent, {}, length, std::move(label)});
    if (parent >= 0) nodes[parent].children.push_back(id);
    return id;
}

/* === UPGMA === */

PhyloTree upgma(const AFMatrix& matrix) {
    check_finite(matrix);
    const std::size_t n = matrix.size();
    if (n < 2) throw NumericError("TooFewTaxa: UPGMA needs at least 2 taxa");

    PhyloTree tree;
    struct Cluster {
        int node;
        std::size_t size;
        double height;
    };
    std::vector<Cluster> active;
    std::map<std::pair<std::size_t, std::size_t>, double> dist;
    for (std::size_t i = 0; i < n; ++i) {
        const int node = tree.add_node(-1, kUnknownLength, matrix.labels[i]);
        active.push_back({node, 1, 0.0});
    }
    std::vector<std::size_t> alive(n);
    for (std::size_t i = 0; i < n; ++i) alive[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) dist[{i, j}] = matrix.at(i, j);
    }

    auto d = [&](std::size_t a, std::size_t b) {
        return dist.at({std::min(a, b), std::max(a, b)});
    };

    while (alive.size() > 1) {
        std::size_t best_a = 0, best_b = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < alive.size(); ++x) {
            for (std::size_t y = x + 1; y < alive.size(); ++y) {
                const double v = d(alive[x], alive[y]);
                if (v < best) {
                    best = v;
                    best_a = x;
                    best_b = y;
                }
            }
        }
        const std::size_t ia = alive[best_a], ib = alive[best_b];
        const double height = best / 2.0;
        const int parent = tree.add_node(-1);
        tree.nodes[active[ia].node].parent = parent;
        tree.nodes[active[ia].node].length = height - active[ia].height;
        tree.nodes[parent].children.push_back(active[ia].node);
        tree.nodes[active[ib].node].parent = parent;
        tree.nodes[active[ib].node].length = height - active[ib].height;
        tree.nodes[parent].children.push_back(active[ib].node);

        const std::size_t merged_size = active[ia].size + active[ib].size;
        const std::size_t iu = active.size();
        active.push_back({parent, merged_size, height});
        for (std::size_t x = 0; x < alive.size(); ++x) {
            const std::size_t other = alive[x];
            if (other == ia || other == ib) continue;
            const double mixed = (d(ia, other) * active[ia].size +
                                  d(ib, other) * active[ib].size) /
                                 static_cast<double>(merged_size);
            dist[{std::min(iu, other), std::max(iu, other)}] = mixed;
        }
        alive.erase(alive.begin() + best_b);
        alive.erase(alive.begin() + best_a);
        alive.push_back(iu);
        std::sort(alive.begin(), alive.end());  // smallest-index tie breaking
    }
    tree.root = active[alive[0]].node;
    tree.rooted = true;
    return tree;
}

/* === Neighbor joining === */

PhyloTree nj(const AFMatrix& matrix) {
    check_finite(matrix);
    const std::size_t n = matrix.size();
    if (n < 3) throw NumericError("TooFewTaxa: NJ needs at least 3 taxa");

    PhyloTree tree;
    std::vector<int> node_of;
    std::vector<std::size_t> alive;
    std::map<std::pair<std::size_t, std::size_t>, double> dist;
    for (std::size_t i = 0; i < n; ++i) {
        node_of.push_back(tree.add_node(-1, kUnknownLength, matrix.labels[i]));
        alive.push_back(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) dist[{i, j}] = matrix.at(i, j);
    }
    auto d = [&](std::size_t a, std::size_t b) {
        return dist.at({std::min(a, b), std::max(a, b)});
    };
    auto clamp_length = [](double v) {
        if (v < 0.0) {
            warn("nj: negative branch length clamped to 0");
            return 0.0;
        }
        return v;
    };

    std::size_t next_id = n;
    while (alive.size() > 3) {
        const std::size_t r = alive.size();
        std::vector<double> row_sum(r, 0.0);
        for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t y = 0; y < r; ++y) {
                if (x != y) row_sum[x] += d(alive[x], alive[y]);
            }
        }
        double best_q = std::numeric_limits<double>::infinity();
        std::size_t best_x = 0, best_y = 1;
        for (std::size_t x = 0; x < r; ++x) {
            for (std::size_t y = x + 1; y < r; ++y) {
                const double q = (r - 2) * d(alive[x], alive[y]) - row_sum[x] - row_sum[y];
                if (q < best_q - 1e-12) {
                    best_q = q;
                    best_x = x;
                    best_y = y;
                }
            }
        }
        const std::size_t ia = alive[best_x], ib = alive[best_y];
        const double dij = d(ia, ib);
        const double la =
            0.5 * dij + (row_sum[best_x] - row_sum[best_y]) / (2.0 * (r - 2));
        const double lb = dij - la;

        const int parent = tree.add_node(-1);
        tree.nodes[node_of[ia]].parent = parent;
        tree.nodes[node_of[ia]].length = clamp_length(la);
        tree.nodes[parent].children.push_back(node_of[ia]);
        tree.nodes[node_of[ib]].parent = parent;
        tree.nodes[node_of[ib]].length = clamp_length(lb);
        tree.nodes[parent].children.push_back(node_of[ib]);

        const std::size_t iu = next_id++;
        node_of.push_back(parent);
        for (std::size_t x = 0; x < r; ++x) {
            const std::size_t other = alive[x];
            if (other == ia || other == ib) continue;
            const double v = 0.5 * (d(ia, other) + d(ib, other) - dij);
            dist[{std::min(iu, other), std::max(iu, other)}] = v;
        }
        alive.erase(alive.begin() + best_y);
        alive.erase(alive.begin() + best_x);
        alive.push_back(iu);
        std::sort(alive.begin(), alive.end());
    }

    // connect the last three through a central node (three-point formulas)
    const std::size_t a = alive[0], b = alive[1], c = alive[2];
    const int center = tree.add_node(-1);
    const double la = 0.5 * (d(a, b) + d(a, c) - d(b, c));
    const double lb = 0.5 * (d(a, b) + d(b, c) - d(a, c));
    const double lc = 0.5 * (d(a, c) + d(b, c) - d(a, b));
    const std::size_t last[3] = {a, b, c};
    const double lengths[3] = {la, lb, lc};
    for (int t = 0; t < 3; ++t) {
        const int v = node_of[last[t]];
        tree.nodes[v].parent = center;
        tree.nodes[v].length = clamp_length(lengths[t]);
        tree.nodes[center].children.push_back(v);
    }
    tree.root = center;
    tree.rooted = false;
    return tree;
}

/* === Midpoint rooting === */

namespace {

// distance and path from `from` to every node over the undirected tree
void tree_paths(const PhyloTree& t, int from, std::vector<double>& dist,
                std::vector<int>& back) {
    const std::size_t n = t.nodes.size();
    dist.assign(n, -1.0);
    back.assign(n, -1);
    std::vector<int> stack{from};
    dist[from] = 0.0;
    auto edge_len = [&](int child) {
        const double l = t.nodes[child].length;
        return std::isnan(l) ? 0.0 : l;
    };
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        const int parent = t.nodes[v].parent;
        if (parent >= 0 && dist[parent] < 0) {
            dist[parent] = dist[v] + edge_len(v);
            back[parent] = v;
            stack.push_back(parent);
        }
        for (int child : t.nodes[v].children) {
            if (dist[child] < 0) {
                dist[child] = dist[v] + edge_len(child);
                back[child] = v;
                stack.push_back(child);
            }
        }
    }
}

// re-hangs the tree so that `new_root` becomes the root
void reroot_at(PhyloTree& t, int new_root) {
    std::vector<int> path;
    for (int v = new_root; v >= 0; v = t.nodes[v].parent) path.push_back(v);
    for (std::size_t i = path.size(); i-- > 1;) {
        const int upper = path[i];
        const int lower = path[i - 1];
        auto& upper_children = t.nodes[upper].children;
        upper_children.erase(std::remove(upper_children.begin(), upper_children.end(), lower),
                             upper_children.end());
        t.nodes[upper].parent = lower;
        t.nodes[upper].length = t.nodes[lower].length;
        t.nodes[lower].children.push_back(upper);
    }
    t.nodes[new_root].parent = -1;
    t.nodes[new_root].length = kUnknownLength;
    t.root = new_root;
    t.rooted = true;
}

}  // namespace

PhyloTree midpoint_root(const PhyloTree& tree) {
    PhyloTree t = tree;
    std::vector<int> leaves;
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        if (t.is_leaf(static_cast<int>(v))) leaves.push_back(static_cast<int>(v));
    }
    if (leaves.size() < 2) return t;

    double best = -1.0;
    int best_u = leaves[0], best_v = leaves[0];
    std::vector<double> dist;
    std::vector<int> back;
    for (int u : leaves) {
        tree_paths(t, u, dist, back);
        for (int v : leaves) {
            if (v == u) continue;
            if (dist[v] > best + 1e-15) {
                best = dist[v];
                best_u = u;
                best_v = v;
            }
        }
    }
    if (best <= 0) {
        // degenerate: all path lengths zero, root at the first leaf's parent
        reroot_at(t, t.nodes[best_u].parent >= 0 ? t.nodes[best_u].parent : best_u);
        return t;
    }

    tree_paths(t, best_u, dist, back);
    // walk from best_v towards best_u until the midpoint is crossed
    const double half = best / 2.0;
    int v = best_v;
    auto edge_len_between = [&](int a, int b) {
        // a and b adjacent; the stored length sits on the child side
        if (t.nodes[a].parent == b) return std::isnan(t.nodes[a].length) ? 0.0 : t.nodes[a].length;
        return std::isnan(t.nodes[b].length) ? 0.0 : t.nodes[b].length;
    };
    while (back[v] != -1) {
        const int next = back[v];  // one step closer to best_u
        if (dist[next] <= half + 1e-15) {
            // midpoint lies on edge (v, next) or exactly on `next`
            const double offset = half - dist[next];  // distance from next towards v
            const double len = edge_len_between(v, next);
            if (offset <= 1e-15) {
                reroot_at(t, next);
                return t;
            }
            if (offset >= len - 1e-15) {
                reroot_at(t, v);
                return t;
            }
            // split the edge with a new root node
            PhyloTree s = t;
            const bool v_is_child = s.nodes[v].parent == next;
            const int child = v_is_child ? v : next;
            const int parent = v_is_child ? next : v;
            const double child_side = v_is_child ? len - offset : offset;
            const int mid = s.add_node(-1);
            auto& pc = s.nodes[parent].children;
            pc.erase(std::remove(pc.begin(), pc.end(), child), pc.end());
            s.nodes[child].parent = mid;
            s.nodes[child].length = child_side;
            s.nodes[mid].children.push_back(child);
            s.nodes[mid].parent = parent;
            s.nodes[mid].length = len - child_side;
            s.nodes[parent].children.push_back(mid);
            reroot_at(s, mid);
            return s;
        }
        v = next;
    }
    reroot_at(t, best_u);
    return t;
}

/* === Newick === */

namespace {

struct NewickParser {
    std::string_view text;
    std::size_t pos = 0;
    PhyloTree tree;

    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("SyntaxError: " + what + " at position " + std::to_string(pos));
    }

    char peek() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        return pos < text.size() ? text[pos] : '\0';
    }

    std::string read_label() {
        if (peek() == '\'') {
            ++pos;
            std::string label;
            while (pos < text.size() && text[pos] != '\'') label.push_back(text[pos++]);
            if (pos >= text.size()) fail("unterminated quoted label");
            ++pos;
            return label;
        }
        std::string label;
        while (pos < text.size()) {
            const char c = text[pos];
            if (c == ',' || c == ')' || c == '(' || c == ':' || c == ';' ||
                std::isspace(static_cast<unsigned char>(c))) {
                break;
            }
            label.push_back(c);
            ++pos;
        }
        return label;
    }

    double read_length() {
        if (peek() != ':') return kUnknownLength;
        ++pos;
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(std::string(text.substr(pos)), &used);
        } catch (const std::exception&) {
            fail("bad branch length");
        }
        pos += used;
        return v;
    }

    int parse_clade(int parent) {
        int node;
        if (peek() == '(') {
            ++pos;
            node = tree.add_node(parent);
            for (;;) {
                parse_clade(node);
                const char c = peek();
                if (c == ',') {
                    ++pos;
                    continue;
                }
                if (c == ')') {
                    ++pos;
                    break;
                }
                fail("expected ',' or ')'");
            }
            tree.nodes[node].label = read_label();  // internal labels allowed
        } else {
            const std::string label = read_label();
            if (label.empty()) fail("expected a leaf label");
            node = tree.add_node(parent, kUnknownLength, label);
        }
        tree.nodes[node].length = read_length();
        return node;
    }

    PhyloTree parse() {
        tree.root = parse_clade(-1);
        if (peek() != ';') fail("expected ';'");
        ++pos;
        if (peek() != '\0') fail("trailing text after ';'");
        // internal labels are kept only on leaves
        std::set<std::string> seen;
        for (auto& node : tree.nodes) {
            if (!node.children.empty()) {
                node.label.clear();
                continue;
            }
            if (node.label.empty()) fail("leaf without label");
            if (!seen.insert(node.label).second) {
                throw InputError("DuplicateLeafLabel: '" + node.label + "'");
            }
        }
        tree.rooted = true;
        return std::move(tree);
    }
};

void write_newick_node(const PhyloTree& t, int v, std::string& out) {
    const auto& node = t.nodes[v];
    if (!node.children.empty()) {
        out.push_back('(');
        for (std::size_t c = 0; c < node.children.size(); ++c) {
            if (c) out.push_back(',');
            write_newick_node(t, node.children[c], out);
        }
        out.push_back(')');
    } else {
        const bool quote =
            node.label.find_first_of("(),:; \t'") != std::string::npos || node.label.empty();
        if (quote) {
            out.push_back('\'');
            out += node.label;
            out.push_back('\'');
        } else {
            out += node.label;
        }
    }
    if (!std::isnan(node.length)) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), ":%.10g", node.length);
        out += buf;
    }
}

}  // namespace

PhyloTree parse_newick(std::string_view text) {
    NewickParser parser;
    parser.text = text;
    return parser.parse();
}

std::string write_newick(const PhyloTree& tree) {
    std::string out;
    write_newick_node(tree, tree.root, out);
    out.push_back(';');
    return out;
}

/* === RF distance === */

namespace {

using Bitset = std::vector<std::uint64_t>;

// non-trivial splits of the tree treated as unrooted, canonicalized so that
// the bit of leaf 0 is clear
std::set<Bitset> tree_splits(const PhyloTree& t, const std::map<std::string, int>& leaf_index) {
    const std::size_t n = leaf_index.size();
    const std::size_t words = (n + 63) / 64;
    std::vector<Bitset> below(t.nodes.size(), Bitset(words, 0));
    // children before parents: nodes are visited in reverse topological
    // order via an explicit post-order stack
    std::vector<int> order;
    std::vector<int> stack{t.root};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        order.push_back(v);
        for (int c : t.nodes[v].children) stack.push_back(c);
    }
    std::set<Bitset> splits;
    for (std::size_t i = order.size(); i-- > 0;) {
        const int v = order[i];
        if (t.is_leaf(v)) {
            const int li = leaf_index.at(t.nodes[v].label);
            below[v][li >> 6] |= 1ULL << (li & 63);
        } else {
            for (int c : t.nodes[v].children) {
                for (std::size_t w = 0; w < words; ++w) below[v][w] |= below[c][w];
            }
        }
        if (v == t.root) continue;
        std::size_t size = 0;
        for (std::size_t w = 0; w < words; ++w) size += std::popcount(below[v][w]);
        if (size < 2 || size > n - 2) continue;  // trivial split
        Bitset split = below[v];
        if (split[0] & 1) {  // canonical side: complement when leaf 0 is set
            for (std::size_t w = 0; w < words; ++w) split[w] = ~split[w];
            const std::size_t tail = n % 64;
            if (tail) split[words - 1] &= (1ULL << tail) - 1;
        }
        splits.insert(std::move(split));
    }
    return splits;
}

std::map<std::string, int> shared_leaf_index(const PhyloTree& a, const PhyloTree& b) {
    const auto la = a.leaf_labels();
    const auto lb = b.leaf_labels();
    if (la != lb) throw InputError("LeafSetMismatch: trees have different leaf label sets");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < la.size(); ++i) index[la[i]] = static_cast<int>(i);
    return index;
}

}  // namespace

int rf_distance(const PhyloTree& a, const PhyloTree& b) {
    const auto index = shared_leaf_index(a, b);
    const auto sa = tree_splits(a, index);
    const auto sb = tree_splits(b, index);
    int diff = 0;
    for (const auto& s : sa) {
        if (!sb.count(s)) ++diff;
    }
    for (const auto& s : sb) {
        if (!sa.count(s)) ++diff;
    }
    return diff;
}

/* === Matching cluster distance === */

double hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
    // O(n^3) potentials formulation over a square matrix
    const int n = static_cast<int>(cost.size());
    if (n == 0) return 0.0;
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) {
        if (p[j]) total += cost[p[j] - 1][j - 1];
    }
    return total;
}

namespace {

std::vector<Bitset> tree_clusters(const PhyloTree& t,
                                  const std::map<std::string, int>& leaf_index) {
    const std::size_t words = (leaf_index.size() + 63) / 64;
    std::vector<Bitset> below(t.nodes.size(), Bitset(words, 0));
    std::vector<int> order;
    std::vector<int> stack{t.root};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        order.push_back(v);
        for (int c : t.nodes[v].children) stack.push_back(c);
    }
    std::vector<Bitset> clusters;
    for (std::size_t i = order.size(); i-- > 0;) {
        const int v = order[i];
        if (t.is_leaf(v)) {
            const int li = leaf_index.at(t.nodes[v].label);
            below[v][li >> 6] |= 1ULL << (li & 63);
        } else {
            for (int c : t.nodes[v].children) {
                for (std::size_t w = 0; w < words; ++w) below[v][w] |= below[c][w];
            }
            clusters.push_back(below[v]);
        }
    }
    return clusters;
}

}  // namespace

int mcm_distance(const PhyloTree& a, const PhyloTree& b) {
    const PhyloTree ra = a.rooted ? a : midpoint_root(a);
    const PhyloTree rb = b.rooted ? b : midpoint_root(b);
    const auto index = shared_leaf_index(ra, rb);
    auto ca = tree_clusters(ra, index);
    auto cb = tree_clusters(rb, index);
    const std::size_t m = std::max(ca.size(), cb.size());
    const std::size_t words = (index.size() + 63) / 64;
    const Bitset empty(words, 0);
    while (ca.size() < m) ca.push_back(empty);
    while (cb.size() < m) cb.push_back(empty);
    std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            int diff = 0;
            for (std::size_t w = 0; w < words; ++w) diff += std::popcount(ca[i][w] ^ cb[j][w]);
            cost[i][j] = diff;
        }
    }
    return static_cast<int>(std::llround(hungarian_min_cost(cost)));
}

/* === Noise injection === */

AFMatrix inject_noise(const AFMatrix& matrix, const NoiseSpec& spec,
                      const std::vector<AFMatrix>& pool) {
    const std::size_t n = matrix.size();
    const std::size_t m = matrix.pair_count();
    const std::size_t corrupt =
        static_cast<std::size_t>(std::floor(spec.percent * static_cast<double>(m)));
    AFMatrix out = matrix;
    if (corrupt == 0) return out;
    if (spec.source == NoiseSpec::Source::simulated_pool && pool.empty()) {
        throw InputError("EmptyPool: simulated_pool noise needs at least one pool matrix");
    }
    double max_delta = spec.max_delta;
    if (spec.source == NoiseSpec::Source::additive_uniform && max_delta <= 0.0) {
        max_delta = matrix.max_finite_offdiag();
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<std::pair<std::size_t, std::size_t>> all_pairs;
    all_pairs.reserve(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) all_pairs.emplace_back(i, j);
    }
    // partial Fisher-Yates: the first `corrupt` slots become the chosen pairs
    for (std::size_t x = 0; x < corrupt; ++x) {
        const std::size_t pick = x + uniform_below(rng, all_pairs.size() - x);
        std::swap(all_pairs[x], all_pairs[pick]);
    }
    for (std::size_t x = 0; x < corrupt; ++x) {
        const auto [i, j] = all_pairs[x];
        double noisy;
        if (spec.source == NoiseSpec::Source::simulated_pool) {
            const AFMatrix& src = pool[uniform_below(rng, pool.size())];
            const std::size_t pn = src.size();
            // uniform off-diagonal ordered position of the pool matrix
            const std::uint64_t cell = uniform_below(rng, pn * (pn - 1));
            const std::size_t pi = static_cast<std::size_t>(cell / (pn - 1));
            std::size_t pj = static_cast<std::size_t>(cell % (pn - 1));
            if (pj >= pi) ++pj;
            noisy = src.at(pi, pj);
        } else {
            noisy = out.at(i, j) + uniform_unit(rng) * max_delta;
        }
        out.set_symmetric(i, j, noisy);
    }
    return out;
}

/* === Robustness sweep === */

std::string_view to_string(TreeBuilder b) { return b == TreeBuilder::nj ? "nj" : "upgma"; }
std::string_view to_string(TreeMetric m) { return m == TreeMetric::rf ? "rf" : "mcm"; }

std::vector<SweepRow> robustness_sweep(const AFMatrix& matrix, const PhyloTree& gold,
                                       const std::vector<TreeBuilder>& builders,
                                       const std::vector<TreeMetric>& metrics,
                                       const std::vector<double>& percents, int repeats,
                                       const NoiseSpec& spec, const std::vector<AFMatrix>& pool) {
    struct Cell {
        double sum = 0.0;
        double sum_sq = 0.0;
    };
    std::vector<std::vector<Cell>> cells(
        percents.size(), std::vector<Cell>(builders.size() * metrics.size()));

    for (std::size_t pi = 0; pi < percents.size(); ++pi) {
        for (int rep = 0; rep < repeats; ++rep) {
            NoiseSpec rep_spec = spec;
            rep_spec.percent = percents[pi];
            rep_spec.seed = derive_seed(spec.seed, pi, static_cast<std::uint64_t>(rep));
            const AFMatrix corrupted = inject_noise(matrix, rep_spec, pool);
            for (std::size_t b = 0; b < builders.size(); ++b) {
                const PhyloTree built =
                    builders[b] == TreeBuilder::nj ? nj(corrupted) : upgma(corrupted);
                for (std::size_t mt = 0; mt < metrics.size(); ++mt) {
                    const double score = metrics[mt] == TreeMetric::rf
                                             ? rf_distance(built, gold)
                                             : mcm_distance(built, gold);
                    auto& cell = cells[pi][b * metrics.size() + mt];
                    cell.sum += score;
                    cell.sum_sq += score * score;
                }
            }
        }
    }

    std::vector<SweepRow> rows;
    for (std::size_t b = 0; b < builders.size(); ++b) {
        for (std::size_t mt = 0; mt < metrics.size(); ++mt) {
            for (std::size_t pi = 0; pi < percents.size(); ++pi) {
                const auto& cell = cells[pi][b * metrics.size() + mt];
                SweepRow row;
                row.builder = builders[b];
                row.metric = metrics[mt];
                row.percent = percents[pi];
                row.repeats = repeats;
                row.mean = repeats > 0 ? cell.sum / repeats : 0.0;
                if (repeats > 1) {
                    const double var =
                        (cell.sum_sq - cell.sum * cell.sum / repeats) / (repeats - 1);
                    row.stddev = std::sqrt(std::max(0.0, var));
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

void write_sweep(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "builder\tmetric\tpercent\tmean\tstddev\trepeats\n";
    for (const auto& row : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%g\t%.6f\t%.6f\t%d", row.percent, row.mean, row.stddev,
                      row.repeats);
        out << to_string(row.builder) << '\t' << to_string(row.metric) << '\t' << buf << '\n';
    }
}

}  // namespace afkit
