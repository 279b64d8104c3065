#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afkit/tasks.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    int workers = -1;
    bool stats = false;
    std::string format;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "key=value configuration file");
    cmd->add_option("--set", opt.overrides, "override or add a key=value entry")
        ->type_name("KEY=VALUE");
    cmd->add_option("--workers", opt.workers, "worker pool size");
    cmd->add_flag("--stats", opt.stats, "dump engine instrumentation counters");
    cmd->add_option("--format", opt.format, "matrix output format (phylip|tsv)")
        ->check(CLI::IsMember({"phylip", "tsv"}));
}

int run(afkit::Task task, CliOptions& opt) {
    afkit::RawConfig raw;
    if (!opt.config_path.empty()) {
        raw = afkit::parse_config(afkit::read_file(opt.config_path));
    }
    for (const auto& entry : opt.overrides) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos) {
            throw afkit::ConfigError("--set expects key=value, got '" + entry + "'");
        }
        raw.values[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    afkit::RunConfig config = afkit::resolve_config(raw, task);
    for (const auto& w : raw.warnings) std::fprintf(stderr, "[afkit] warning: %s\n", w.c_str());

    if (opt.workers > 0) {
        config.pipeline.workers = static_cast<unsigned>(opt.workers);
    } else if (config.pipeline.workers == 0) {
        if (const char* env = std::getenv("AFKIT_WORKERS")) {
            config.pipeline.workers = static_cast<unsigned>(std::max(1, std::atoi(env)));
        }
    }
    if (!opt.format.empty()) config.format = opt.format;
    config.show_stats = opt.stats;

    afkit::run_task(config);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"afkit - data-parallel alignment-free sequence comparison"};
    app.require_subcommand(1);

    CliOptions opt;
    afkit::Task chosen = afkit::Task::distance;
    for (const auto& [name, task, help] :
         {std::tuple{"distance", afkit::Task::distance, "pairwise AF matrices"},
          std::tuple{"sigtest", afkit::Task::sigtest, "Monte Carlo significance test"},
          std::tuple{"robustness", afkit::Task::robustness, "noise-injection tree robustness"},
          std::tuple{"tree", afkit::Task::tree, "build NJ/UPGMA trees"}}) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common(cmd, opt);
        cmd->callback([task, &chosen] { chosen = task; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return run(chosen, opt);
    } catch (const afkit::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
