#include "afkit/tasks.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "afkit/tasks.hpp"

namespace fs = std::filesystem;

namespace afkit {

namespace {

std::string matrix_path(const RunConfig& cfg, const std::string& function_id) {
    const std::string ext = cfg.format == "phylip" ? ".phylip" : ".tsv";
    return (fs::path(cfg.output) / (function_id + ext)).string();
}

void dump_stats(const EngineCounters& counters) {
    std::fputs(counters.summary().c_str(), stderr);
}

void require_distance_orientation(const std::string& evaluator) {
    if (make_evaluator(evaluator)->orientation() != Orientation::distance) {
        throw NumericError("tree construction needs a distance-oriented evaluator; '" +
                           evaluator + "' yields similarities");
    }
}

std::vector<AFMatrix> load_pool(const std::string& dir) {
    std::vector<AFMatrix> pool;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) == 0 && name.size() > 4 &&
            name.compare(name.size() - 4, 4, ".mat") == 0) {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) pool.push_back(load_matrix(file));
    if (pool.empty()) {
        throw InputError("EmptyPool: no run_*.mat files in '" + dir + "'");
    }
    return pool;
}

void run_distance(RunConfig& cfg, const Dataset& dataset) {
    const PipelineResult result = run_pipeline(dataset, cfg.pipeline);
    for (const auto& matrix : result.matrices) {
        save_matrix(matrix, matrix_path(cfg, matrix.function_id), cfg.format);
    }
    if (cfg.show_stats) dump_stats(result.counters);
}

void run_sigtest(RunConfig& cfg, const Dataset& dataset) {
    WorkerPool pool(cfg.pipeline.workers);
    std::vector<SignificanceRow> rows;
    for (const auto& evaluator : cfg.pipeline.evaluators) {
        for (int q : cfg.qs) {
            NullModelConfig nm = cfg.nullmodel;
            nm.q = q;
            Checkpoint ckpt;
            ckpt.dir = fs::path(cfg.output) / ("ckpt_" + evaluator + "_q" + std::to_string(q));
            const RankMatrix rm =
                mecca(dataset, evaluator, nm, cfg.pipeline, &ckpt, &pool);
            rows.push_back(summarize(evaluator, q, rm));
            const std::string csv_path =
                (fs::path(cfg.output) / ("ranks_" + evaluator + "_q" + std::to_string(q) + ".csv"))
                    .string();
            std::ofstream csv(csv_path);
            if (!csv) throw InputError("cannot write '" + csv_path + "'");
            write_rank_csv(rm, csv);
            std::fprintf(stderr, "[afkit] %s q=%d: %d/%d runs, %.1f%% entries pass%s\n",
                         evaluator.c_str(), q, rm.runs_completed, nm.runs,
                         rows.back().percent_pass, rm.family_pass ? ", family passes" : "");
        }
    }
    const std::string report_path = (fs::path(cfg.output) / "report.tsv").string();
    std::ofstream report(report_path);
    if (!report) throw InputError("cannot write '" + report_path + "'");
    write_report(rows, report);
}

void run_robustness(RunConfig& cfg, const Dataset& dataset) {
    const std::string evaluator = cfg.pipeline.evaluators.at(0);
    require_distance_orientation(evaluator);
    const PipelineResult result = run_pipeline(dataset, cfg.pipeline);
    const AFMatrix& matrix = result.matrices.at(0);
    if (!matrix.all_finite()) {
        throw NumericError("NonFiniteMatrix: '" + evaluator +
                           "' produced undefined entries; robustness needs finite matrices");
    }
    const PhyloTree gold = parse_newick(read_file(cfg.gold_tree));
    std::vector<AFMatrix> pool;
    if (cfg.noise.source == NoiseSpec::Source::simulated_pool) {
        pool = load_pool(cfg.noise_pool_dir);
    }
    const auto rows = robustness_sweep(matrix, gold, cfg.builders,
                                       {TreeMetric::rf, TreeMetric::mcm}, cfg.percents,
                                       cfg.repeats, cfg.noise, pool);
    const std::string sweep_path = (fs::path(cfg.output) / "sweep.tsv").string();
    std::ofstream sweep(sweep_path);
    if (!sweep) throw InputError("cannot write '" + sweep_path + "'");
    write_sweep(rows, sweep);
    if (cfg.show_stats) dump_stats(result.counters);
}

void run_tree(RunConfig& cfg, const Dataset& dataset) {
    const std::string evaluator = cfg.pipeline.evaluators.at(0);
    require_distance_orientation(evaluator);
    const PipelineResult result = run_pipeline(dataset, cfg.pipeline);
    const AFMatrix& matrix = result.matrices.at(0);
    for (const TreeBuilder builder : cfg.builders) {
        const PhyloTree tree = builder == TreeBuilder::nj ? nj(matrix) : upgma(matrix);
        const std::string path =
            (fs::path(cfg.output) /
             (evaluator + "_" + std::string(to_string(builder)) + ".nwk"))
                .string();
        std::ofstream out(path);
        if (!out) throw InputError("cannot write '" + path + "'");
        out << write_newick(tree) << '\n';
    }
    if (cfg.show_stats) dump_stats(result.counters);
}

}  // namespace

void run_task(RunConfig& config) {
    if (config.pipeline.workers == 0) {
        config.pipeline.workers = std::max(1u, std::thread::hardware_concurrency());
    }
    const Dataset dataset = load_dataset(config.inputs);
    finalize_parameters(config, dataset);
    fs::create_directories(config.output);
    switch (config.task) {
        case Task::distance: run_distance(config, dataset); break;
        case Task::sigtest: run_sigtest(config, dataset); break;
        case Task::robustness: run_robustness(config, dataset); break;
        case Task::tree: run_tree(config, dataset); break;
    }
}

}  // namespace afkit
