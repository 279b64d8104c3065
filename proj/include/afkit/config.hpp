#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afkit/engine.hpp"
#include "afkit/phylo.hpp"
#include "afkit/sigtest.hpp"

namespace afkit {

enum class Task { distance, sigtest, robustness, tree };

Task parse_task(std::string_view text);  // error: UnknownTask
std::string_view to_string(Task task);

/* === key=value configuration ===
 *
 * Lines are key=value; '#' starts a comment; blank lines are ignored.
 * Duplicate keys are an error, unknown keys a warning. Evaluator, extractor
 * and aggregator accept both registry short names and class-path style
 * dotted names ("x.y.Euclidean" -> euclidean, "x.sw.SwExtractorByBin" ->
 * spacedword statistics).
 */

struct RawConfig {
    std::map<std::string, std::string> values;
    std::vector<std::string> warnings;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback = {}) const;
};

RawConfig parse_config(std::string_view text);  // error: DuplicateKey

// Everything a task run needs. k = 0 or an empty pattern means "choose
// automatically from the dataset".
struct RunConfig {
    Task task = Task::distance;
    PipelineConfig pipeline;
    NullModelConfig nullmodel;
    NoiseSpec noise;
    std::vector<std::string> inputs;   // comma-separated globs from input=
    std::string output;                // directory
    std::string gold_tree;             // robustness
    std::string format = "phylip";     // matrix files: phylip | tsv
    std::vector<int> qs = {1, 7, 10};  // sigtest q sweep
    std::vector<double> percents = {0.0, 0.1, 0.3, 0.5};
    int repeats = 30;
    std::vector<TreeBuilder> builders = {TreeBuilder::nj, TreeBuilder::upgma};
    std::string noise_pool_dir;        // simulated_pool source (run_*.mat files)
    bool show_stats = false;
    bool pattern_auto = false;         // pattern left to default_pattern
};

// Validates mutually required keys for `task` and maps every recognized key.
// Warnings (unknown keys, ignored keys like the accepted-and-ignored x/m)
// are appended to raw.warnings.
RunConfig resolve_config(RawConfig& raw, Task task);

/* === Parameter selection === */

// Smallest word length whose key space covers the mean sequence length:
// k = ceil(log4(mean)) - 1, computed in exact integer arithmetic.
int choose_k(std::uint64_t total_length, std::uint64_t sample_count);
int choose_k(const Dataset& dataset);

// Weight-12 pattern with 100 (assembled) or 60 (reads) don't-care positions;
// the first position is a match, the other eleven are placed by a seeded
// draw. The pattern is reported through warn() for reproducibility.
enum class PatternMode { assembled, reads };
SpacedPattern default_pattern(PatternMode mode, std::uint64_t seed);

// Fills pipeline.k / pipeline.pattern from the dataset when left automatic.
void finalize_parameters(RunConfig& config, const Dataset& dataset);

}  // namespace afkit
