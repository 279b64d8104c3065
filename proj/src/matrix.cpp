#include "afkit/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "afkit/common.hpp"

namespace afkit {

AFMatrix::AFMatrix(std::vector<std::string> labels_, Orientation o, std::string function)
    : labels(std::move(labels_)),
      values(labels.size() * labels.size(), 0.0),
      orientation(o),
      function_id(std::move(function)) {}

void AFMatrix::set_symmetric(std::size_t i, std::size_t j, double v) {
    at(i, j) = v;
    at(j, i) = v;
}

bool AFMatrix::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double AFMatrix::max_finite_offdiag() const {
    double best = 0.0;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = at(i, j);
            if (std::isfinite(v) && v > best) best = v;
        }
    }
    return best;
}

std::size_t AFMatrix::pair_count() const { return size() * (size() - 1) / 2; }

namespace {

std::string format_value(double v, int precision) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

double parse_value(const std::string& token) {
    if (token == "nan" || token == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used != token.size()) throw InputError("bad matrix value '" + token + "'");
    return v;
}

// 10-character phylip names, unique via numeric suffix
std::vector<std::string> phylip_names(const std::vector<std::string>& labels) {
    std::vector<std::string> names;
    std::set<std::string> used;
    for (const auto& label : labels) {
        std::string name = label.substr(0, 10);
        if (used.count(name)) {
            for (int suffix = 1;; ++suffix) {
                std::string tag = std::to_string(suffix);
                std::string candidate = label.substr(0, 10 - tag.size()) + tag;
                if (!used.count(candidate)) {
                    name = candidate;
                    break;
                }
            }
        }
        used.insert(name);
        names.push_back(name);
    }
    return names;
}

}  // namespace

void write_phylip(const AFMatrix& m, std::ostream& out) {
    const std::size_t n = m.size();
    out << n << '\n';
    const auto names = phylip_names(m.labels);
    for (std::size_t i = 0; i < n; ++i) {
        std::string padded = names[i];
        padded.resize(10, ' ');
        out << padded;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m.at(i, j);
            if (std::isnan(v)) {
                out << " nan";
            } else if (std::isinf(v)) {
                out << (v > 0 ? " inf" : " -inf");
            } else {
                char buf[64];
                std::snprintf(buf, sizeof(buf), " %.6f", v);
                out << buf;
            }
        }
        out << '\n';
    }
}

void write_tsv(const AFMatrix& m, std::ostream& out, int precision) {
    const std::size_t n = m.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (j) out << '\t';
        out << m.labels[j];
    }
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j) out << '\t';
            out << format_value(m.at(i, j), precision);
        }
        out << '\n';
    }
}

AFMatrix parse_tsv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty matrix file");
    AFMatrix m;
    {
        std::istringstream header(line);
        std::string label;
        while (header >> label) m.labels.push_back(label);
    }
    const std::size_t n = m.labels.size();
    if (n == 0) throw InputError("matrix file has no labels");
    m.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw InputError("matrix file truncated");
        std::istringstream row(line);
        std::string token;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(row >> token)) throw InputError("matrix row too short");
            m.at(i, j) = parse_value(token);
        }
    }
    return m;
}

AFMatrix parse_phylip(std::istream& in) {
    std::size_t n = 0;
    if (!(in >> n) || n == 0) throw InputError("bad phylip matrix header");
    std::string rest;
    std::getline(in, rest);
    AFMatrix m;
    m.values.assign(n * n, 0.0);
    std::string line;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw InputError("phylip matrix truncated");
        if (line.size() < 10) throw InputError("phylip row too short");
        std::string name = line.substr(0, 10);
        while (!name.empty() && name.back() == ' ') name.pop_back();
        labels.push_back(name);
        std::istringstream row(line.substr(10));
        std::string token;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(row >> token)) throw InputError("phylip row too short");
            m.values[i * n + j] = parse_value(token);
        }
    }
    m.labels = std::move(labels);
    return m;
}

void save_matrix(const AFMatrix& m, const std::string& path, const std::string& format,
                 int precision) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    if (format == "phylip") {
        write_phylip(m, out);
    } else if (format == "tsv") {
        write_tsv(m, out, precision);
    } else {
        throw ConfigError("unknown matrix format '" + format + "'");
    }
    if (!out.good()) throw InputError("IoError: failed writing '" + path + "'");
}

AFMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    const int first = in.peek();
    if (first >= '0' && first <= '9') return parse_phylip(in);
    return parse_tsv(in);
}

}  // namespace afkit
