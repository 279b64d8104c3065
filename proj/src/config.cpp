#include "afkit/config.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>
#include <sstream>

namespace afkit {

Task parse_task(std::string_view text) {
    if (text == "distance") return Task::distance;
    if (text == "sigtest") return Task::sigtest;
    if (text == "robustness") return Task::robustness;
    if (text == "tree") return Task::tree;
    throw ConfigError("UnknownTask: '" + std::string(text) + "'");
}

std::string_view to_string(Task task) {
    switch (task) {
        case Task::distance: return "distance";
        case Task::sigtest: return "sigtest";
        case Task::robustness: return "robustness";
        case Task::tree: return "tree";
    }
    return "?";
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == ',') {
            const std::string item = trim(current);
            if (!item.empty()) parts.push_back(item);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    const std::string item = trim(current);
    if (!item.empty()) parts.push_back(item);
    return parts;
}

long long to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for key '" + key + "': '" + value + "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number for key '" + key + "': '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("bad boolean for key '" + key + "': '" + value + "'");
}

// maps extractor/aggregator names (short or class-path style) to a statistic
std::optional<StatKind> stat_kind_of_module(const std::string& name) {
    std::string tail = name;
    if (const std::size_t dot = tail.rfind('.'); dot != std::string::npos) {
        tail = tail.substr(dot + 1);
    }
    std::string flat;
    for (char c : tail) flat.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (flat == "kmer" || flat.find("kmer") != std::string::npos) return StatKind::kmer;
    if (flat == "minhash" || flat.find("mash") != std::string::npos) return StatKind::minhash;
    if (flat == "spacedword" || flat == "sw" || flat.rfind("sw", 0) == 0 ||
        flat.find("spaced") != std::string::npos) {
        return StatKind::spacedword;
    }
    return std::nullopt;
}

const std::set<std::string>& recognized_keys() {
    static const std::set<std::string> keys = {
        "k", "q", "l", "alpha", "pattern", "threshold", "slices", "bins", "workers", "seed",
        "input", "output", "task", "strategy", "evaluator", "extractor", "aggregator",
        "normalization", "filter_include", "filter_exclude", "value_min", "sketch_size",
        "canonical", "gold_tree", "percents", "repeats", "noise_source", "x", "m",
        // toolkit extensions
        "keep_invalid", "memory_budget", "kulczynski2_literal", "divergence_literal",
        "fswm_pair_cap", "subst_matrix", "format", "builder", "noise_max_delta", "noise_pool",
    };
    return keys;
}

}  // namespace

std::string RawConfig::get(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

RawConfig parse_config(std::string_view text) {
    RawConfig raw;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                              stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        if (raw.values.count(key)) {
            throw ConfigError("DuplicateKey: '" + key + "' (line " + std::to_string(line_no) +
                              ")");
        }
        raw.values[key] = value;
    }
    return raw;
}

RunConfig resolve_config(RawConfig& raw, Task task) {
    RunConfig cfg;
    cfg.task = task;

    for (const auto& [key, value] : raw.values) {
        if (!recognized_keys().count(key)) {
            raw.warnings.push_back("unknown key '" + key + "' ignored");
        }
    }
    if (raw.has("x") || raw.has("m")) {
        raw.warnings.push_back("keys 'x'/'m' are accepted and ignored");
    }
    if (raw.has("task")) {
        const Task declared = parse_task(raw.get("task"));
        if (declared != task) {
            throw ConfigError("config declares task '" + std::string(to_string(declared)) +
                              "' but '" + std::string(to_string(task)) + "' was requested");
        }
    }

    auto require = [&](const char* key) {
        if (!raw.has(key)) {
            throw ConfigError("MissingRequiredKey: '" + std::string(key) + "' for task " +
                              std::string(to_string(task)));
        }
    };
    require("input");
    cfg.inputs = split_list(raw.get("input"));
    require("output");
    cfg.output = raw.get("output");
    require("evaluator");

    PipelineConfig& p = cfg.pipeline;
    for (const auto& name : split_list(raw.get("evaluator"))) {
        const std::string id = canonical_evaluator_id(name);
        if (!is_known_evaluator(id)) throw ConfigError("unknown evaluator '" + name + "'");
        p.evaluators.push_back(id);
    }

    // statistic kind: explicit extractor wins, otherwise from the evaluators
    std::optional<StatKind> kind;
    if (raw.has("extractor")) {
        kind = stat_kind_of_module(raw.get("extractor"));
        if (!kind) throw ConfigError("unknown extractor '" + raw.get("extractor") + "'");
    }
    if (raw.has("aggregator")) {
        const auto agg_kind = stat_kind_of_module(raw.get("aggregator"));
        if (!agg_kind) {
            throw ConfigError("unknown aggregator '" + raw.get("aggregator") + "'");
        }
        if (kind && *agg_kind != *kind) {
            raw.warnings.push_back("aggregator statistic differs from extractor; using extractor");
        }
        if (!kind) kind = agg_kind;
    }
    if (!kind) {
        std::set<StatKind> needed;
        for (const auto& id : p.evaluators) needed.insert(make_evaluator(id)->statistic());
        if (needed.size() != 1) {
            throw ConfigError("evaluators need different statistics; split the run");
        }
        kind = *needed.begin();
    }
    p.kind = *kind;

    if (raw.has("k")) p.k = static_cast<int>(to_int("k", raw.get("k")));
    if (raw.has("pattern")) {
        p.pattern = SpacedPattern::parse(raw.get("pattern"));
        if (raw.has("k") && p.kind == StatKind::spacedword &&
            p.k != p.pattern.length()) {
            raw.warnings.push_back("k differs from the pattern length; the pattern wins");
        }
    } else if (p.kind == StatKind::spacedword) {
        cfg.pattern_auto = true;
    }
    if (raw.has("strategy")) p.strategy.variant = parse_strategy(raw.get("strategy"));
    if (raw.has("bins")) p.strategy.bins = static_cast<std::uint32_t>(to_int("bins", raw.get("bins")));
    if (raw.has("slices")) p.slices = static_cast<std::size_t>(to_int("slices", raw.get("slices")));
    if (raw.has("workers")) p.workers = static_cast<unsigned>(to_int("workers", raw.get("workers")));
    if (raw.has("seed")) p.seed = static_cast<std::uint64_t>(to_int("seed", raw.get("seed")));
    if (raw.has("sketch_size")) {
        p.sketch_size = static_cast<std::uint32_t>(to_int("sketch_size", raw.get("sketch_size")));
    }
    if (raw.has("canonical")) p.sketch_canonical = to_bool("canonical", raw.get("canonical"));
    if (raw.has("normalization")) p.normalization = parse_norm_mode(raw.get("normalization"));
    if (raw.has("filter_include")) p.filter_include = raw.get("filter_include");
    if (raw.has("filter_exclude")) p.filter_exclude = raw.get("filter_exclude");
    if (raw.has("keep_invalid")) p.keep_invalid = to_bool("keep_invalid", raw.get("keep_invalid"));
    if (raw.has("value_min")) {
        p.value_filter = ValueFilter{ValueFilter::Op::ge, to_double("value_min", raw.get("value_min"))};
    }
    if (raw.has("memory_budget")) {
        p.memory_budget = static_cast<std::uint64_t>(to_int("memory_budget", raw.get("memory_budget")));
    }
    if (raw.has("kulczynski2_literal")) {
        p.kulczynski2_literal = to_bool("kulczynski2_literal", raw.get("kulczynski2_literal"));
    }
    if (raw.has("divergence_literal")) {
        p.divergence_literal = to_bool("divergence_literal", raw.get("divergence_literal"));
    }
    if (raw.has("threshold")) p.fswm.threshold = to_int("threshold", raw.get("threshold"));
    if (raw.has("fswm_pair_cap")) {
        p.fswm.pair_cap = static_cast<std::uint64_t>(to_int("fswm_pair_cap", raw.get("fswm_pair_cap")));
    }
    if (raw.has("subst_matrix")) p.fswm.matrix = SubstitutionMatrix::load(raw.get("subst_matrix"));
    p.fswm.seed = p.seed;

    NullModelConfig& nm = cfg.nullmodel;
    nm.seed = p.seed;
    if (raw.has("l")) nm.runs = static_cast<int>(to_int("l", raw.get("l")));
    if (raw.has("alpha")) nm.alpha = to_double("alpha", raw.get("alpha"));
    if (raw.has("q")) {
        nm.q = static_cast<int>(to_int("q", raw.get("q")));
        cfg.qs = {nm.q};
    }
    if (nm.runs < 1) throw ConfigError("l (runs) must be positive");
    if (!(nm.alpha > 0.0 && nm.alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");

    cfg.noise.seed = p.seed;
    if (raw.has("noise_source")) {
        const std::string spec = raw.get("noise_source");
        const std::size_t colon = spec.find(':');
        const std::string name = spec.substr(0, colon == std::string::npos ? spec.size() : colon);
        const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
        if (name == "additive_uniform") {
            cfg.noise.source = NoiseSpec::Source::additive_uniform;
            if (!arg.empty()) cfg.noise.max_delta = to_double("noise_source", arg);
        } else if (name == "simulated_pool") {
            cfg.noise.source = NoiseSpec::Source::simulated_pool;
            if (!arg.empty()) cfg.noise_pool_dir = arg;
        } else {
            throw ConfigError("unknown noise_source '" + name + "'");
        }
    }
    if (raw.has("noise_max_delta")) {
        cfg.noise.max_delta = to_double("noise_max_delta", raw.get("noise_max_delta"));
    }
    if (raw.has("noise_pool")) cfg.noise_pool_dir = raw.get("noise_pool");
    if (raw.has("percents")) {
        cfg.percents.clear();
        for (const auto& item : split_list(raw.get("percents"))) {
            cfg.percents.push_back(to_double("percents", item));
        }
    }
    if (raw.has("repeats")) cfg.repeats = static_cast<int>(to_int("repeats", raw.get("repeats")));
    if (raw.has("gold_tree")) cfg.gold_tree = raw.get("gold_tree");
    if (raw.has("format")) {
        cfg.format = raw.get("format");
        if (cfg.format != "phylip" && cfg.format != "tsv") {
            throw ConfigError("format must be phylip or tsv");
        }
    }
    if (raw.has("builder")) {
        cfg.builders.clear();
        for (const auto& item : split_list(raw.get("builder"))) {
            if (item == "nj") {
                cfg.builders.push_back(TreeBuilder::nj);
            } else if (item == "upgma") {
                cfg.builders.push_back(TreeBuilder::upgma);
            } else if (item == "both") {
                cfg.builders = {TreeBuilder::nj, TreeBuilder::upgma};
            } else {
                throw ConfigError("unknown builder '" + item + "'");
            }
        }
    }

    if (task == Task::robustness) {
        require("gold_tree");
        if (p.evaluators.size() != 1) {
            throw ConfigError("robustness needs exactly one evaluator");
        }
        if (cfg.noise.source == NoiseSpec::Source::simulated_pool && cfg.noise_pool_dir.empty()) {
            throw ConfigError("MissingRequiredKey: 'noise_pool' for simulated_pool noise");
        }
    }
    if (task == Task::tree && p.evaluators.size() != 1) {
        throw ConfigError("tree needs exactly one evaluator");
    }
    return cfg;
}

int choose_k(std::uint64_t total_length, std::uint64_t sample_count) {
    if (sample_count == 0 || total_length == 0) {
        throw ConfigError("choose_k needs a non-empty dataset");
    }
    // smallest e with 4^e >= total/count, exactly
    int e = 0;
    unsigned __int128 power = 1;
    while (power * sample_count < total_length) {
        power *= 4;
        ++e;
        if (e > 32) break;
    }
    const int k = e - 1;
    if (k < 1) {
        warn("choose_k: mean sequence length too small, using k = 1");
        return 1;
    }
    return std::min(k, kMaxKmerK);
}

int choose_k(const Dataset& dataset) {
    return choose_k(dataset.total_length, dataset.samples.size());
}

SpacedPattern default_pattern(PatternMode mode, std::uint64_t seed) {
    const int weight = 12;
    const int dontcare = mode == PatternMode::assembled ? 100 : 60;
    const int length = weight + dontcare;
    std::string bits(static_cast<std::size_t>(length), '0');
    bits[0] = '1';
    std::vector<int> positions;
    for (int i = 1; i < length; ++i) positions.push_back(i);
    std::mt19937_64 rng(mix64(seed ^ 0x7061747465726eULL));
    for (int pick = 0; pick < weight - 1; ++pick) {
        const std::size_t at = pick + uniform_below(rng, positions.size() - pick);
        std::swap(positions[pick], positions[at]);
        bits[positions[pick]] = '1';
    }
    SpacedPattern pattern = SpacedPattern::parse(bits);
    warn("default spaced pattern (" + std::string(mode == PatternMode::assembled ? "assembled" : "reads") +
         "): " + pattern.bits);
    return pattern;
}

void finalize_parameters(RunConfig& config, const Dataset& dataset) {
    PipelineConfig& p = config.pipeline;
    if (p.kind == StatKind::spacedword) {
        if (config.pattern_auto && p.pattern.length() == 0) {
            std::uint64_t fragments = 0;
            for (const auto& s : dataset.samples) fragments += s.fragments.size();
            const double mean_fragment =
                fragments ? static_cast<double>(dataset.total_length) / fragments : 0.0;
            const PatternMode mode =
                mean_fragment < 500.0 ? PatternMode::reads : PatternMode::assembled;
            p.pattern = default_pattern(mode, p.seed);
        }
    } else if (p.k == 0) {
        p.k = choose_k(dataset);
        warn("k chosen automatically: " + std::to_string(p.k));
    }
}

}  // namespace afkit
