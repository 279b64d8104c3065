#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <unistd.h>

#include <zlib.h>

#include "afkit/common.hpp"
#include "afkit/seqio.hpp"
#include "oracles.hpp"

using namespace afkit;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string& tag) {
    const fs::path dir =
        fs::temp_directory_path() / ("afkit_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("parse_fasta handles minimal and wrapped records") {
    auto records = parse_fasta(">a\nACGT\n");
    REQUIRE(records.size() == 1);
    CHECK(records[0].first == "a");
    CHECK(records[0].second == "ACGT");

    records = parse_fasta(">a desc\nac\ngt\n>b\nTT\n");
    REQUIRE(records.size() == 2);
    CHECK(records[0].first == "a");
    CHECK(records[0].second == "ACGT");
    CHECK(records[1].first == "b");
    CHECK(records[1].second == "TT");
}

TEST_CASE("parse_fasta rejects malformed input") {
    CHECK_THROWS_WITH_AS(parse_fasta("ACGT\n"), doctest::Contains("MalformedRecord"), InputError);
    CHECK_THROWS_WITH_AS(parse_fasta(""), doctest::Contains("EmptyInput"), InputError);
}

TEST_CASE("parse_fastq handles records and mismatches") {
    auto records = parse_fastq("@r1\nACGT\n+\nIIII\n");
    REQUIRE(records.size() == 1);
    CHECK(records[0].first == "r1");
    CHECK(records[0].second == "ACGT");

    CHECK_THROWS_WITH_AS(parse_fastq("@r1\nACGT\n+\nIII\n"), doctest::Contains("MalformedRecord"),
                         InputError);

    records = parse_fastq("@r1\nacgt\n+\nIIII\n@r2\nTTAA\n+\nJJJJ\n");
    REQUIRE(records.size() == 2);
    CHECK(records[0].second == "ACGT");
    CHECK(records[1].second == "TTAA");
}

TEST_CASE("chunk_sample splits the documented example") {
    Sample s;
    s.sample_id = 0;
    s.name = "s";
    s.fragments = {"ABCDEFGH"};
    const auto chunks = chunk_sample(s, 2, 2);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].offset == 0);
    CHECK(chunks[0].body == "ABCDEF");
    CHECK(chunks[0].left_overlap == 0);
    CHECK(chunks[1].offset == 2);
    CHECK(chunks[1].body == "CDEFGH");
    CHECK(chunks[1].left_overlap == 2);
}

TEST_CASE("chunk_sample degenerate inputs") {
    Sample s;
    s.sample_id = 0;
    s.fragments = {"ACGTC"};
    const auto one = chunk_sample(s, 1, 3);
    REQUIRE(one.size() == 1);
    CHECK(one[0].body == "ACGTC");

    Sample s16;
    s16.sample_id = 0;
    s16.fragments = {"AACCGGTTAACCGGTT"};
    const auto four = chunk_sample(s16, 4, 0);
    REQUIRE(four.size() == 4);
    std::string joined;
    for (const auto& c : four) joined += std::string(c.body);
    CHECK(joined == s16.fragments[0]);
}

TEST_CASE("chunking never loses or duplicates a window") {
    // overlap = k - 1; the windows of all chunks (skipping the first
    // left_overlap starts) must reproduce the fragment's window multiset
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 120; ++trial) {
        const int k = 1 + static_cast<int>(rng() % 8);
        const std::size_t slices = 1 + rng() % 16;
        const std::size_t len = 1 + rng() % 200;
        Sample s;
        s.sample_id = 0;
        s.fragments = {oracle::random_dna(rng, len)};

        std::map<std::string, int> expected;
        for (const auto& w : oracle::windows_of(s.fragments[0], k)) ++expected[w];

        std::map<std::string, int> got;
        for (const auto& chunk : chunk_sample(s, slices, static_cast<std::size_t>(k - 1))) {
            for (std::size_t start = chunk.left_overlap;
                 start + static_cast<std::size_t>(k) <= chunk.body.size(); ++start) {
                ++got[std::string(chunk.body.substr(start, static_cast<std::size_t>(k)))];
            }
        }
        REQUIRE(got == expected);
    }
}

TEST_CASE("load_dataset orders samples by file name") {
    const fs::path dir = make_temp_dir("seqio_order");
    write_text(dir / "b.fa", ">b\nAAAA\n");
    write_text(dir / "a.fa", ">a\nCCCC\n");
    const Dataset ds = load_dataset({(dir / "*.fa").string()});
    REQUIRE(ds.size() == 2);
    CHECK(ds.samples[0].name == "a");
    CHECK(ds.samples[0].sample_id == 0);
    CHECK(ds.samples[1].name == "b");
    CHECK(ds.samples[1].sample_id == 1);
    CHECK(ds.total_length == 8);
    CHECK(ds.mean_length == doctest::Approx(4.0));

    const Dataset again = load_dataset({(dir / "*.fa").string()});
    REQUIRE(again.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(again.samples[i].name == ds.samples[i].name);
        CHECK(again.samples[i].fragments == ds.samples[i].fragments);
    }
    fs::remove_all(dir);
}

TEST_CASE("load_dataset reports empty matches and parses fastq files") {
    const fs::path dir = make_temp_dir("seqio_kinds");
    CHECK_THROWS_WITH_AS(load_dataset({(dir / "*.fa").string()}),
                         doctest::Contains("NoFilesMatched"), InputError);
    write_text(dir / "reads.fq", "@r1\nACGT\n+\nIIII\n@r2\nGGGG\n+\nIIII\n@r3\nTT\n+\nII\n");
    const Dataset ds = load_dataset({(dir / "reads.fq").string()});
    REQUIRE(ds.size() == 1);
    CHECK(ds.samples[0].fragments.size() == 3);
    fs::remove_all(dir);
}

TEST_CASE("load_dataset reads gzip compressed files") {
    const fs::path dir = make_temp_dir("seqio_gz");
    const fs::path path = dir / "x.fasta.gz";
    gzFile gz = gzopen(path.string().c_str(), "wb");
    REQUIRE(gz != nullptr);
    const std::string text = ">x\nACGTACGT\n";
    gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
    gzclose(gz);
    const Dataset ds = load_dataset({path.string()});
    REQUIRE(ds.size() == 1);
    CHECK(ds.samples[0].name == "x");
    CHECK(ds.samples[0].fragments[0] == "ACGTACGT");
    fs::remove_all(dir);
}
