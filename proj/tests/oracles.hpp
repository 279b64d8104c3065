#pragma once

// Independent reference implementations used to compute expected values for
// the unit and acceptance suites. Everything here deliberately avoids the
// library's extraction/encoding/evaluator code paths: strings are scanned
// directly, histograms are dense, formulas are transcribed one-to-one.

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "afkit/matrix.hpp"
#include "afkit/phylo.hpp"

namespace oracle {

using Fragments = std::vector<std::string>;

/* dense histogram machinery */
std::vector<double> dense_histogram(const Fragments& fragments, int k);
std::array<double, 4> base_freqs(const Fragments& fragments);
std::string word_of(std::uint64_t index, int k);  // base-4 digits -> ACGT

/* the histogram AF functions, dense transcriptions */
double euclidean(const std::vector<double>& a, const std::vector<double>& b);
double manhattan(const std::vector<double>& a, const std::vector<double>& b);
double chebyshev(const std::vector<double>& a, const std::vector<double>& b);
double chi2(const std::vector<double>& a, const std::vector<double>& b);
double canberra(const std::vector<double>& a, const std::vector<double>& b);
double d2(const std::vector<double>& a, const std::vector<double>& b);
double d2z(const std::vector<double>& a, const std::vector<double>& b);
double d2s(const std::vector<double>& a, const std::vector<double>& b,
           const std::array<double, 4>& bg_a, const std::array<double, 4>& bg_b, int k);
double d2star(const std::vector<double>& a, const std::vector<double>& b,
              const std::array<double, 4>& bg_a, const std::array<double, 4>& bg_b, int k);
double intersection(const std::vector<double>& a, const std::vector<double>& b);
double kulczynski2(const std::vector<double>& a, const std::vector<double>& b);
double harmonic_mean(const std::vector<double>& a, const std::vector<double>& b);
double squared_chord(const std::vector<double>& a, const std::vector<double>& b);
double jeffrey(const std::vector<double>& a, const std::vector<double>& b);
double jsd(const std::vector<double>& a, const std::vector<double>& b);
double jaccard(const std::vector<double>& a, const std::vector<double>& b);

// evaluates one function id on two fragment sets (raw counts, k-mers)
double evaluate(const std::string& id, const Fragments& a, const Fragments& b, int k);

/* canonical k-mer sets (own reverse complement) for MinHash checks */
std::set<std::string> canonical_kmer_set(const Fragments& fragments, int k);
double jaccard_of_sets(const std::set<std::string>& a, const std::set<std::string>& b);

/* FSWM: exhaustive all-pairs spaced-word enumeration */
struct FswmCounts {
    long long mismatches = 0;
    long long total_dontcare = 0;
};
FswmCounts fswm_enumerate(const Fragments& a, const Fragments& b, const std::string& pattern,
                          const std::array<std::array<int, 5>, 5>& score, long long threshold);

/* tree distances, re-derived from label sets */
int rf_bruteforce(const afkit::PhyloTree& a, const afkit::PhyloTree& b);
int mcm_bruteforce(const afkit::PhyloTree& a, const afkit::PhyloTree& b);  // <= 7 clusters

/* random trees and their exact matrices */
afkit::PhyloTree random_binary_tree(int leaves, std::mt19937_64& rng);
afkit::PhyloTree random_clock_tree(int leaves, std::mt19937_64& rng);
afkit::AFMatrix path_length_matrix(const afkit::PhyloTree& tree);

/* misc */
std::vector<std::string> windows_of(const std::string& fragment, int k);
std::string random_dna(std::mt19937_64& rng, std::size_t length);
double binom_cdf(int x, int n, double p);
// central interval [lo, hi] with tail mass <= (1 - mass)/2 on each side
std::pair<int, int> binom_central_interval(int n, double p, double mass);

}  // namespace oracle
