#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace afkit {

enum class Orientation { distance, similarity };

// Symmetric n x n matrix of AF values. Distances carry 0 on the diagonal,
// similarities the self-comparison value. Undefined entries are NaN and
// +inf marks a saturated distance; both are rendered literally as "nan" /
// "inf" in text outputs.
struct AFMatrix {
    std::vector<std::string> labels;
    std::vector<double> values;  // row-major n*n
    Orientation orientation = Orientation::distance;
    std::string function_id;

    AFMatrix() = default;
    AFMatrix(std::vector<std::string> labels_, Orientation o, std::string function);

    std::size_t size() const { return labels.size(); }
    double& at(std::size_t i, std::size_t j) { return values[i * labels.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
    void set_symmetric(std::size_t i, std::size_t j, double v);

    bool all_finite() const;
    double max_finite_offdiag() const;
    std::size_t pair_count() const;  // n(n-1)/2
};

/* === Text formats ===
 *
 * phylip: first line n; one row per sample, name padded/truncated to 10
 * characters (uniqueness enforced with a numeric suffix), then the full row
 * with 6 decimals.
 *
 * tsv: header row of labels, then one row per sample with 12 significant
 * digits. `precision` can be raised (17 digits round-trips doubles exactly;
 * used for checkpoint files).
 */

void write_phylip(const AFMatrix& m, std::ostream& out);
void write_tsv(const AFMatrix& m, std::ostream& out, int precision = 12);

AFMatrix parse_tsv(std::istream& in);
AFMatrix parse_phylip(std::istream& in);

void save_matrix(const AFMatrix& m, const std::string& path, const std::string& format,
                 int precision = 12);
AFMatrix load_matrix(const std::string& path);  // format detected from contents

}  // namespace afkit
