#include "afkit/seqio.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <zlib.h>

#include "afkit/common.hpp"

namespace fs = std::filesystem;

namespace afkit {

namespace {

void append_upper(std::string& dst, std::string_view line) {
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        dst.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
}

// Iterates lines without copying; '\r' before '\n' is stripped.
struct LineReader {
    std::string_view text;
    std::size_t pos = 0;

    bool next(std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t eol = text.find('\n', pos);
        std::size_t end = (eol == std::string_view::npos) ? text.size() : eol;
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = (eol == std::string_view::npos) ? text.size() : eol + 1;
        return true;
    }
};

std::string header_token(std::string_view line) {
    // token after the marker character, up to the first whitespace
    std::size_t start = 1;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    std::size_t end = start;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    return std::string(line.substr(start, end - start));
}

}  // namespace

std::uint64_t Sample::total_length() const {
    std::uint64_t total = 0;
    for (const auto& f : fragments) total += f.size();
    return total;
}

Dataset Dataset::from_samples(std::vector<Sample> samples) {
    Dataset ds;
    ds.samples = std::move(samples);
    for (auto& s : ds.samples) ds.total_length += s.total_length();
    ds.mean_length = ds.samples.empty() ? 0.0
                                        : static_cast<double>(ds.total_length) /
                                              static_cast<double>(ds.samples.size());
    return ds;
}

std::vector<std::string> Dataset::labels() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.name);
    return out;
}

std::vector<NamedSequence> parse_fasta(std::string_view bytes) {
    std::vector<NamedSequence> records;
    LineReader reader{bytes};
    std::string_view line;
    bool have_record = false;
    while (reader.next(line)) {
        if (line.empty()) continue;
        if (line[0] == '>') {
            records.emplace_back(header_token(line), std::string());
            have_record = true;
        } else {
            if (!have_record) {
                throw InputError("MalformedRecord: sequence data before first FASTA header");
            }
            append_upper(records.back().second, line);
        }
    }
    if (records.empty()) throw InputError("EmptyInput: no FASTA records found");
    return records;
}

std::vector<NamedSequence> parse_fastq(std::string_view bytes) {
    std::vector<NamedSequence> records;
    LineReader reader{bytes};
    std::string_view line;
    while (reader.next(line)) {
        if (line.empty()) continue;
        if (line[0] != '@') {
            throw InputError("MalformedRecord: expected '@' header in FASTQ input");
        }
        std::string name = header_token(line);
        std::string_view seq_line, plus_line, qual_line;
        if (!reader.next(seq_line) || !reader.next(plus_line) || !reader.next(qual_line)) {
            throw InputError("MalformedRecord: truncated FASTQ record '" + name + "'");
        }
        if (plus_line.empty() || plus_line[0] != '+') {
            throw InputError("MalformedRecord: missing '+' separator in FASTQ record '" + name +
                             "'");
        }
        std::string residues;
        append_upper(residues, seq_line);
        std::size_t qual_len = 0;
        for (char c : qual_line) {
            if (!std::isspace(static_cast<unsigned char>(c))) ++qual_len;
        }
        if (qual_len != residues.size()) {
            throw InputError("MalformedRecord: quality/sequence length mismatch in FASTQ record '" +
                             name + "'");
        }
        records.emplace_back(std::move(name), std::move(residues));
    }
    if (records.empty()) throw InputError("EmptyInput: no FASTQ records found");
    return records;
}

std::vector<Chunk> chunk_sample(const Sample& sample, std::size_t slices, std::size_t overlap) {
    if (slices == 0) slices = 1;
    const std::uint64_t total = sample.total_length();
    // target length of one chunk core; never below overlap + 1
    std::size_t target = static_cast<std::size_t>((total + slices - 1) / slices);
    target = std::max<std::size_t>(target, overlap + 1);

    std::vector<Chunk> chunks;
    for (std::size_t f = 0; f < sample.fragments.size(); ++f) {
        const std::string& frag = sample.fragments[f];
        const std::size_t len = frag.size();
        if (len == 0) continue;
        std::size_t pieces = std::max<std::size_t>(1, len / target);
        for (std::size_t i = 0; i < pieces; ++i) {
            std::size_t core_begin = i * len / pieces;
            std::size_t core_end = (i + 1) * len / pieces;
            std::size_t lo = std::min(core_begin, overlap);
            std::size_t begin = core_begin - lo;
            std::size_t end = std::min(len, core_end + overlap);
            Chunk c;
            c.sample_id = sample.sample_id;
            c.fragment_id = static_cast<int>(f);
            c.offset = begin;
            c.body = std::string_view(frag).substr(begin, end - begin);
            c.left_overlap = lo;
            chunks.push_back(c);
        }
    }
    return chunks;
}

std::string read_file(const std::string& path) {
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
        gzFile gz = gzopen(path.c_str(), "rb");
        if (!gz) throw InputError("cannot open '" + path + "'");
        std::string out;
        char buf[1 << 16];
        int got;
        while ((got = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, static_cast<size_t>(got));
        bool bad = got < 0;
        gzclose(gz);
        if (bad) throw InputError("gzip read error in '" + path + "'");
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::regex glob_to_regex(std::string_view pattern) {
    std::string re;
    for (char c : pattern) {
        switch (c) {
            case '*': re += "[^/]*"; break;
            case '?': re += "[^/]"; break;
            case '.': case '+': case '(': case ')': case '[': case ']':
            case '{': case '}': case '^': case '$': case '|': case '\\':
                re += '\\'; re += c; break;
            default: re += c;
        }
    }
    return std::regex(re);
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    std::vector<std::string> paths;
    fs::path p(pattern);
    const std::string base = p.filename().string();
    if (base.find('*') == std::string::npos && base.find('?') == std::string::npos) {
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file()) paths.push_back(entry.path().string());
            }
        } else if (fs::is_regular_file(p)) {
            paths.push_back(p.string());
        }
        return paths;
    }
    fs::path dir = p.parent_path();
    if (dir.empty()) dir = ".";
    if (!fs::is_directory(dir)) return paths;
    const std::regex re = glob_to_regex(base);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (std::regex_match(entry.path().filename().string(), re)) {
            paths.push_back(entry.path().string());
        }
    }
    return paths;
}

std::string sample_name_of(const fs::path& path) {
    std::string name = path.filename().string();
    auto strip = [&](std::string_view ext) {
        if (name.size() > ext.size() &&
            name.compare(name.size() - ext.size(), ext.size(), ext) == 0) {
            name.resize(name.size() - ext.size());
            return true;
        }
        return false;
    };
    strip(".gz");
    std::size_t dot = name.rfind('.');
    if (dot != std::string::npos && dot > 0) name.resize(dot);
    return name;
}

}  // namespace

Dataset load_dataset(const std::vector<std::string>& globs) {
    std::vector<std::string> paths;
    for (const auto& g : globs) {
        auto matched = expand_glob(g);
        paths.insert(paths.end(), matched.begin(), matched.end());
    }
    std::sort(paths.begin(), paths.end(), [](const std::string& a, const std::string& b) {
        const std::string fa = fs::path(a).filename().string();
        const std::string fb = fs::path(b).filename().string();
        return fa != fb ? fa < fb : a < b;
    });
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    if (paths.empty()) {
        std::string joined;
        for (const auto& g : globs) {
            if (!joined.empty()) joined += ", ";
            joined += g;
        }
        throw InputError("NoFilesMatched: no input files for '" + joined + "'");
    }

    std::vector<Sample> samples;
    samples.reserve(paths.size());
    for (const auto& path : paths) {
        std::string bytes = read_file(path);
        std::vector<NamedSequence> records;
        try {
            if (!bytes.empty() && bytes[0] == '@') {
                records = parse_fastq(bytes);
            } else {
                records = parse_fasta(bytes);
            }
        } catch (const Error& e) {
            throw InputError(std::string(e.what()) + " [file: " + path + "]");
        }
        Sample s;
        s.sample_id = static_cast<int>(samples.size());
        s.name = sample_name_of(path);
        for (auto& rec : records) {
            if (rec.second.empty()) {
                warn("empty record '" + rec.first + "' in '" + path + "' skipped");
                continue;
            }
            s.fragments.push_back(std::move(rec.second));
        }
        if (s.fragments.empty()) {
            throw InputError("file '" + path + "' contains no usable residues");
        }
        samples.push_back(std::move(s));
    }
    return Dataset::from_samples(std::move(samples));
}

}  // namespace afkit
