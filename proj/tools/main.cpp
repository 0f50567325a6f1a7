#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "emsq/bench.hpp"

namespace {

emsq::RunConfig make_run_config(const std::string& config_path, std::int64_t seed,
                                const std::string& out, const std::string& methods,
                                const std::string& budgets, int jobs) {
    emsq::Config cfg = config_path.empty() ? emsq::Config() : emsq::Config::load(config_path);
    if (config_path.empty()) cfg.apply_env_overrides();
    if (seed >= 0) cfg.set("run.seed", std::to_string(seed));
    if (!out.empty()) cfg.set("run.out", out);
    if (!methods.empty()) cfg.set("run.methods", methods);
    if (!budgets.empty()) cfg.set("run.budgets", budgets);
    if (jobs > 0) cfg.set("run.jobs", std::to_string(jobs));
    return emsq::RunConfig::from_config(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding compression benchmark"};
    app.require_subcommand(1);

    std::string config_path, out, methods, budgets, matrix, queries, reports, out_prefix;
    std::string method, path, output;
    std::int64_t seed = -1;
    int jobs = 0;
    double budget = 0.5;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (key = value with [sections])");
        sub->add_option("--seed", seed, "run seed");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--jobs", jobs, "parallel grid cells");
    };

    auto* gen = app.add_subcommand("gen-data", "generate a dataset and its skew summary");
    add_common(gen);

    auto* bt = app.add_subcommand("bench-train", "training benchmark grid");
    add_common(bt);
    bt->add_option("--methods", methods, "comma-separated method list");
    bt->add_option("--budgets", budgets, "comma-separated budgets, e.g. 50%,10%,1%,0.1%");

    auto* bp = app.add_subcommand("bench-posttrain", "post-training compression grid");
    add_common(bp);
    bp->add_option("--methods", methods, "comma-separated codec list");
    bp->add_option("--budgets", budgets, "comma-separated budgets");
    bp->add_option("--matrix", matrix, "matrix checkpoint or raw f32 with .shape sidecar");
    bp->add_option("--queries", queries, "query matrix path or gaussian:<count>");

    auto* cp = app.add_subcommand("compress", "compress one matrix with one method");
    add_common(cp);
    cp->add_option("--matrix", matrix, "input matrix")->required();
    cp->add_option("--method", method, "codec name")->required();
    cp->add_option("--budget", budget, "budget fraction (0,1]");
    cp->add_option("--output", output, "codec checkpoint path")->required();

    auto* insp = app.add_subcommand("inspect", "print a checkpoint's type, shape and bytes");
    insp->add_option("path", path, "checkpoint file")->required();

    auto* rend = app.add_subcommand("render", "re-render grids from a reports file");
    rend->add_option("reports", reports, "reports .jsonl")->required();
    rend->add_option("--out-prefix", out_prefix, "output prefix for .txt/.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            auto cfg = make_run_config(config_path, seed, out, "", "", jobs);
            std::cout << emsq::cmd_gen_data(cfg) << "\n";
        } else if (bt->parsed()) {
            auto cfg = make_run_config(config_path, seed, out, methods, budgets, jobs);
            const auto paths = emsq::cmd_bench_train(cfg);
            std::ifstream grid(paths.grid_txt);
            std::cout << grid.rdbuf();
            std::cout << "reports: " << paths.reports << "\n";
        } else if (bp->parsed()) {
            auto cfg = make_run_config(config_path, seed, out, methods, budgets, jobs);
            if (!matrix.empty()) cfg.matrix_path = matrix;
            if (!queries.empty()) cfg.queries_spec = queries;
            const auto paths = emsq::cmd_bench_posttrain(cfg);
            std::ifstream grid(paths.grid_txt);
            std::cout << grid.rdbuf();
            std::cout << "reports: " << paths.reports << "\n";
        } else if (cp->parsed()) {
            auto cfg = make_run_config(config_path, seed, out, "", "", jobs);
            std::cout << emsq::cmd_compress(cfg, matrix, method, budget, output) << "\n";
        } else if (insp->parsed()) {
            std::cout << emsq::cmd_inspect(path) << "\n";
        } else if (rend->parsed()) {
            if (out_prefix.empty()) out_prefix = reports + ".grid";
            const auto paths = emsq::cmd_render(reports, out_prefix);
            std::ifstream grid(paths.grid_txt);
            std::cout << grid.rdbuf();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
