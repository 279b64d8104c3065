#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace afkit {

/* === Input model ===
 *
 * One input file is one sample. A sample holds one fragment per FASTA record
 * or FASTQ read; windows (k-mers, spaced words) never cross fragment
 * boundaries. All residues are uppercased at ingestion; non-ACGT symbols are
 * kept and dealt with by the extraction-stage filters.
 */

struct Sample {
    int sample_id = -1;             // 0..n-1 in lexicographic file-name order
    std::string name;               // file name without directory and extension
    std::vector<std::string> fragments;

    std::uint64_t total_length() const;
};

struct Dataset {
    std::vector<Sample> samples;
    std::uint64_t total_length = 0;
    double mean_length = 0.0;       // total_length / |samples|

    static Dataset from_samples(std::vector<Sample> samples);
    std::size_t size() const { return samples.size(); }
    std::vector<std::string> labels() const;
};

// A slice of one fragment. The body borrows from the owning Sample, which
// must outlive the chunk. The first `left_overlap` residues of the body are
// duplicated from the preceding chunk so that no window of length
// overlap + 1 is lost; extraction skips the first `left_overlap` window
// starts to keep the window multiset exact.
struct Chunk {
    int sample_id = -1;
    int fragment_id = -1;
    std::size_t offset = 0;         // 0-based start of body within the fragment
    std::string_view body;
    std::size_t left_overlap = 0;
};

/* === Parsing === */

using NamedSequence = std::pair<std::string, std::string>;  // (header, residues)

// Errors: "EmptyInput" when no record is found, "MalformedRecord" when
// sequence data precedes the first header. Headers are the token after '>'
// up to the first whitespace; wrapped lines are joined; residues uppercased.
std::vector<NamedSequence> parse_fasta(std::string_view bytes);

// 4-line records (@header, sequence, +, quality). Quality is discarded but
// its length must match the sequence.
std::vector<NamedSequence> parse_fastq(std::string_view bytes);

/* === Chunking === */

// Splits every fragment of `sample` into approximately equal chunks so that
// the sample yields about `slices` chunks in total. Consecutive chunks of a
// fragment share `overlap` residues. Fragments shorter than the chunk target
// become single chunks. The engine supplies overlap = window length - 1.
std::vector<Chunk> chunk_sample(const Sample& sample, std::size_t slices, std::size_t overlap);

/* === Loading === */

// Expands the given globs ('*' and '?' in the final path component; a bare
// directory means all regular files inside), reads each matched file as one
// sample (FASTA or FASTQ, detected by the first byte; transparently
// gunzipped when the name ends in ".gz"), sorts samples by file name and
// assigns ids 0..n-1. Errors: "NoFilesMatched"; parse errors carry the file
// name.
Dataset load_dataset(const std::vector<std::string>& globs);

// Reads one file into memory, gunzipping if `path` ends in ".gz".
std::string read_file(const std::string& path);

}  // namespace afkit
