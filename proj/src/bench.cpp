#include "emsq/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "emsq/eval.hpp"

namespace emsq {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t cell_seed(std::uint64_t run_seed, const std::string& method, double budget) {
    std::uint64_t h = run_seed ^ 0x9e3779b97f4a7c15ull;
    for (char c : method) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ull;
    h ^= static_cast<std::uint64_t>(budget * 1e9);
    return Rng(h).next_u64();
}

std::string humanize_seconds(double s) {
    std::ostringstream os;
    if (s < 1.0) {
        const double ms = s * 1000.0;
        os << std::fixed << std::setprecision(ms >= 100 ? 0 : (ms >= 1 ? 2 : 4)) << ms << "ms";
    } else if (s < 60.0) {
        os << std::fixed << std::setprecision(1) << s << "s";
    } else if (s < 3600.0) {
        const auto m = static_cast<int>(s / 60);
        os << m << "m" << static_cast<int>(s - m * 60) << "s";
    } else {
        const auto h = static_cast<int>(s / 3600);
        os << h << "h" << static_cast<int>((s - h * 3600) / 60) << "m";
    }
    return os.str();
}

std::string format_auc(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

json run_header(const RunConfig& cfg, const char* kind) {
    json h;
    h["type"] = "run_header";
    h["kind"] = kind;
    h["version"] = kVersion;
    h["seed"] = cfg.seed;
    h["config"] = cfg.raw.to_text();
    return h;
}

void write_reports(const std::string& path, const json& header,
                   const std::vector<json>& cells) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("bench: cannot write " + path);
    os << header.dump() << "\n";
    for (const auto& c : cells) os << c.dump() << "\n";
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("bench: cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

bool discrete_ratio_method(const std::string& m) {
    return m == "int8_16" || m == "fp16" || m == "alpt";
}

// Runs every (method, budget) cell, optionally in parallel; results land in a
// deterministic order regardless of the thread count.
template <class CellFn>
std::vector<json> run_cells(const RunConfig& cfg, const std::vector<std::string>& methods,
                            CellFn&& fn) {
    struct Task {
        std::size_t mi, bi;
    };
    std::vector<Task> tasks;
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) tasks.push_back({mi, bi});
    std::vector<json> cells(tasks.size());
    const int jobs = std::max(1, cfg.jobs);
    std::mutex next_mutex;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t t;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= tasks.size()) return;
                t = next++;
            }
            const auto& task = tasks[t];
            json cell;
            cell["type"] = "cell";
            cell["method"] = methods[task.mi];
            cell["budget_fraction"] = cfg.budgets[task.bi];
            cell["budget"] = budget_label(cfg.budgets[task.bi]);
            try {
                fn(methods[task.mi], cfg.budgets[task.bi], cell);
            } catch (const std::exception& e) {
                cell["error"] = e.what();
            }
            cells[t] = std::move(cell);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return cells;
}

}  // namespace

std::string cmd_gen_data(const RunConfig& cfg) {
    if (cfg.data_source == "synthetic" && cfg.synthetic.samples < 1)
        throw config_error("gen-data: sample count must be positive");
    fs::create_directories(cfg.out_dir);
    const Dataset data = cfg.load_dataset();
    data.to_checkpoint().save((fs::path(cfg.out_dir) / "dataset.ckpt").string());
    const auto skew = skew_summary(data);
    json j;
    j["type"] = "skew_summary";
    j["version"] = kVersion;
    j["samples"] = data.samples();
    j["fields"] = data.fields;
    j["features"] = data.space().total_features();
    j["top10_share"] = skew.top10_share;
    j["tail_lt5_share"] = skew.tail_lt5_share;
    j["label_balance"] = skew.label_balance;
    j["config"] = cfg.raw.to_text();
    std::ofstream os((fs::path(cfg.out_dir) / "skew.json").string());
    os << j.dump(2) << "\n";
    return j.dump();
}

BenchPaths cmd_bench_train(const RunConfig& cfg) {
    const auto methods = cfg.methods.empty() ? train_methods() : cfg.methods;
    if (methods.empty()) throw config_error("bench-train: empty method list");
    for (const auto& m : methods)
        if (std::find(train_methods().begin(), train_methods().end(), m) ==
            train_methods().end())
            throw config_error("bench-train: unknown method '" + m + "'");
    fs::create_directories(cfg.out_dir);
    const Dataset data = cfg.load_dataset();
    const FeatureSpace space = data.space();
    const std::uint64_t baseline = MemoryModel::baseline_bytes(space, cfg.train.dim);

    auto cells = run_cells(cfg, methods, [&](const std::string& method, double budget,
                                             json& cell) {
        auto plan = solve(method, budget, space, cfg.train.dim, cfg.solver);
        cell["feasible"] = plan.feasible;
        if (!plan.feasible) {
            // run at the nearest achievable ratio, annotated like the paper
            cell["annotation"] = plan.ratio_annotation();
            plan.feasible = true;
            plan.target_bytes = plan.achieved_bytes;
            plan.budget_fraction = plan.achieved_fraction();
        }
        const auto sched = default_scheduler(method, cfg.train);
        const auto seed = cell_seed(cfg.seed, method, budget);
        auto outcome = train(plan, data, sched, cfg.train, seed);

        // lookup latency of one inference batch on the frozen store
        const auto val = data.split_indices(Split::kValidation);
        std::vector<index_t> batch_ids;
        for (index_t i = 0; i < cfg.train.batch_size; ++i) {
            const index_t s = val.empty() ? 0 : val[i % val.size()];
            for (index_t f = 0; f < data.fields; ++f)
                batch_ids.push_back(data.ids[s * data.fields + f]);
        }
        const double latency = time_batch(
                [&]() {
                    volatile float sink = outcome.store->lookup(batch_ids).values[0];
                    (void)sink;
                },
                9);

        cell["seed"] = seed;
        cell["auc"] = outcome.report.val_auc;
        cell["auc_text"] = format_auc(outcome.report.val_auc);
        cell["test_auc"] = outcome.report.test_auc;
        cell["inference_bytes"] = outcome.report.inference_bytes;
        cell["achieved_fraction"] = static_cast<double>(outcome.report.inference_bytes) /
                                    static_cast<double>(baseline);
        cell["training_bytes"] = outcome.report.training_bytes;
        cell["trainmem"] = format_percent(static_cast<double>(outcome.report.training_bytes) /
                                          static_cast<double>(baseline));
        cell["train_seconds"] = outcome.report.train_seconds;
        cell["latency_seconds"] = latency;
        cell["plan"] = plan.to_kv();
        json stages = json::array();
        for (const auto& s : outcome.report.stages) {
            json sj;
            sj["stage"] = s.stage;
            sj["epochs"] = s.epochs_run;
            sj["seconds"] = s.seconds;
            sj["val_auc"] = s.val_auc;
            stages.push_back(sj);
        }
        cell["stages"] = stages;
    });

    BenchPaths paths;
    paths.reports = (fs::path(cfg.out_dir) / "train_reports.jsonl").string();
    paths.grid_txt = (fs::path(cfg.out_dir) / "train_grid.txt").string();
    paths.grid_csv = (fs::path(cfg.out_dir) / "train_grid.csv").string();
    write_reports(paths.reports, run_header(cfg, "bench-train"), cells);
    const auto lines = read_lines(paths.reports);
    std::ofstream(paths.grid_txt) << render_grid(lines, false);
    std::ofstream(paths.grid_csv) << render_grid(lines, true);
    return paths;
}

BenchPaths cmd_bench_posttrain(const RunConfig& cfg) {
    const auto methods = cfg.methods.empty() ? posttrain_methods() : cfg.methods;
    if (methods.empty()) throw config_error("bench-posttrain: empty method list");
    if (cfg.matrix_path.empty()) throw config_error("bench-posttrain: posttrain.matrix required");
    fs::create_directories(cfg.out_dir);
    const DenseMatrix matrix = load_matrix_any(cfg.matrix_path);
    const FeatureSpace row_space({matrix.rows});

    // queries: a checkpoint/raw matrix path or "gaussian:<count>"
    DenseMatrix queries;
    if (cfg.queries_spec.rfind("gaussian:", 0) == 0) {
        const auto count = static_cast<index_t>(std::stoll(cfg.queries_spec.substr(9)));
        queries = DenseMatrix(count, matrix.cols);
        Rng qrng(cfg.seed ^ 0xabcdefull);
        for (auto& v : queries.values) v = static_cast<float>(qrng.next_normal());
    } else {
        queries = load_matrix_any(cfg.queries_spec);
    }

    auto cells = run_cells(cfg, methods, [&](const std::string& method, double budget,
                                             json& cell) {
        const std::string solver_tag = method == "int8_16" ? "int_codec" : method;
        auto plan = solve(solver_tag, budget, row_space, matrix.cols, cfg.solver);
        plan.method = method == "int8_16" ? "int_codec" : method;
        cell["feasible"] = plan.feasible;
        if (!plan.feasible) {
            if (!discrete_ratio_method(method)) {
                cell["infeasible"] = true;  // rendered as "/"
                return;
            }
            cell["annotation"] = plan.ratio_annotation();
            plan.feasible = true;
            plan.target_bytes = plan.achieved_bytes;
            plan.budget_fraction = plan.achieved_fraction();
        }
        const auto seed = cell_seed(cfg.seed, method, budget);
        auto result = compress(matrix, plan, seed);
        const double recall =
                recall_overlap(matrix, *result.codec, queries, cfg.recall_k,
                               cfg.decompress_batch);
        // batched-decompression latency over seeded ids
        std::vector<index_t> batch(cfg.decompress_batch);
        Rng brng(seed ^ 0x77ull);
        for (auto& id : batch) id = static_cast<index_t>(brng.next_below(matrix.rows));
        const double latency = time_batch(
                [&]() {
                    volatile float sink = result.codec->decompress_batch(batch).values[0];
                    (void)sink;
                },
                9);
        cell["seed"] = seed;
        cell["recall"] = recall;
        cell["recall_text"] = format_auc(recall);
        cell["bytes"] = result.bytes;
        cell["achieved_fraction"] = static_cast<double>(result.bytes) /
                                    static_cast<double>(MemoryModel::dense_bytes(matrix.rows,
                                                                                 matrix.cols));
        cell["compress_seconds"] = result.seconds;
        cell["latency_seconds"] = latency;
        cell["plan"] = plan.to_kv();
    });

    BenchPaths paths;
    paths.reports = (fs::path(cfg.out_dir) / "posttrain_reports.jsonl").string();
    paths.grid_txt = (fs::path(cfg.out_dir) / "posttrain_grid.txt").string();
    paths.grid_csv = (fs::path(cfg.out_dir) / "posttrain_grid.csv").string();
    write_reports(paths.reports, run_header(cfg, "bench-posttrain"), cells);
    const auto lines = read_lines(paths.reports);
    std::ofstream(paths.grid_txt) << render_grid(lines, false);
    std::ofstream(paths.grid_csv) << render_grid(lines, true);
    return paths;
}

std::string cmd_compress(const RunConfig& cfg, const std::string& matrix_path,
                         const std::string& method, double budget_fraction,
                         const std::string& out_path) {
    const DenseMatrix matrix = load_matrix_any(matrix_path);
    const FeatureSpace row_space({matrix.rows});
    const std::string solver_tag = method == "int8_16" ? "int_codec" : method;
    auto plan = solve(solver_tag, budget_fraction, row_space, matrix.cols, cfg.solver);
    auto result = compress(matrix, plan, cfg.seed);
    Checkpoint ck;
    result.codec->save(ck);
    ck.save(out_path);
    json j;
    j["type"] = "compress";
    j["method"] = method;
    j["bytes"] = result.bytes;
    j["ratio"] = compression_ratio(MemoryModel::dense_bytes(matrix.rows, matrix.cols),
                                   result.bytes);
    j["achieved_fraction"] = static_cast<double>(result.bytes) /
                             static_cast<double>(MemoryModel::dense_bytes(matrix.rows,
                                                                          matrix.cols));
    j["seconds"] = result.seconds;
    j["out"] = out_path;
    return j.dump();
}

std::string cmd_inspect(const std::string& path) {
    const auto c = Checkpoint::load(path);
    json j;
    j["type_tag"] = static_cast<std::uint32_t>(c.type());
    j["type"] = chunk_type_name(c.type());
    j["payload_bytes"] = c.data_bytes();
    j["meta"] = c.meta();
    return j.dump(2);
}

namespace {

struct GridTable {
    std::vector<std::string> budgets;
    std::vector<std::string> methods;
    // rows[method][metric][budget] -> text
    std::map<std::string, std::map<std::string, std::map<std::string, std::string>>> cells;
    std::vector<std::string> metrics;
};

GridTable collect(const std::vector<std::string>& json_lines) {
    GridTable g;
    bool posttrain = false;
    for (const auto& line : json_lines) {
        const json j = json::parse(line);
        if (j.value("type", "") == "run_header") {
            posttrain = j.value("kind", "") == "bench-posttrain";
            continue;
        }
        if (j.value("type", "") != "cell") continue;
        const std::string method = j.at("method");
        const std::string budget = j.at("budget");
        if (std::find(g.budgets.begin(), g.budgets.end(), budget) == g.budgets.end())
            g.budgets.push_back(budget);
        if (std::find(g.methods.begin(), g.methods.end(), method) == g.methods.end())
            g.methods.push_back(method);
        auto& slot = g.cells[method];
        auto annotate = [&](std::string text) {
            if (j.contains("annotation"))
                text += " (" + j.at("annotation").get<std::string>() + ")";
            return text;
        };
        if (j.contains("error") || j.value("infeasible", false)) {
            for (const auto& metric : posttrain
                         ? std::vector<std::string>{"Recall", "Time", "Latency"}
                         : std::vector<std::string>{"AUC", "TrainMem", "TrainTime", "Latency"})
                slot[metric][budget] = "/";
            continue;
        }
        if (posttrain) {
            slot["Recall"][budget] = annotate(j.at("recall_text").get<std::string>());
            slot["Time"][budget] = humanize_seconds(j.at("compress_seconds").get<double>());
            slot["Latency"][budget] = humanize_seconds(j.at("latency_seconds").get<double>());
        } else {
            slot["AUC"][budget] = annotate(j.at("auc_text").get<std::string>());
            slot["TrainMem"][budget] = j.at("trainmem").get<std::string>();
            slot["TrainTime"][budget] = humanize_seconds(j.at("train_seconds").get<double>());
            slot["Latency"][budget] = humanize_seconds(j.at("latency_seconds").get<double>());
        }
    }
    g.metrics = posttrain ? std::vector<std::string>{"Recall", "Time", "Latency"}
                          : std::vector<std::string>{"AUC", "TrainMem", "TrainTime", "Latency"};
    return g;
}

}  // namespace

std::string render_grid(const std::vector<std::string>& json_lines, bool csv) {
    const GridTable g = collect(json_lines);
    std::ostringstream os;
    if (csv) {
        os << "method,metric";
        for (const auto& b : g.budgets) os << "," << b;
        os << "\n";
        for (const auto& m : g.methods)
            for (const auto& metric : g.metrics) {
                os << m << "," << metric;
                for (const auto& b : g.budgets) {
                    const auto& mm = g.cells.at(m);
                    const auto it = mm.find(metric);
                    std::string cell = "/";
                    if (it != mm.end()) {
                        const auto bit = it->second.find(b);
                        if (bit != it->second.end()) cell = bit->second;
                    }
                    os << "," << cell;
                }
                os << "\n";
            }
        return os.str();
    }
    // aligned text
    std::vector<std::size_t> widths;
    const std::size_t name_w = 14, metric_w = 10;
    for (const auto& b : g.budgets) {
        std::size_t w = b.size();
        for (const auto& m : g.methods) {
            const auto mit = g.cells.find(m);
            if (mit == g.cells.end()) continue;
            for (const auto& metric : g.metrics) {
                const auto it = mit->second.find(metric);
                if (it == mit->second.end()) continue;
                const auto bit = it->second.find(b);
                if (bit != it->second.end()) w = std::max(w, bit->second.size());
            }
        }
        widths.push_back(w);
    }
    os << std::left << std::setw(name_w) << "Method" << std::setw(metric_w) << "Metric";
    for (std::size_t i = 0; i < g.budgets.size(); ++i)
        os << "  " << std::right << std::setw(static_cast<int>(widths[i])) << g.budgets[i];
    os << "\n";
    os << std::string(name_w + metric_w + 2 * g.budgets.size() +
                              std::accumulate(widths.begin(), widths.end(), std::size_t(0)),
                      '-')
       << "\n";
    for (const auto& m : g.methods) {
        bool first = true;
        for (const auto& metric : g.metrics) {
            os << std::left << std::setw(name_w) << (first ? m : "") << std::setw(metric_w)
               << metric;
            first = false;
            for (std::size_t i = 0; i < g.budgets.size(); ++i) {
                const auto& mm = g.cells.at(m);
                std::string cell = "/";
                const auto it = mm.find(metric);
                if (it != mm.end()) {
                    const auto bit = it->second.find(g.budgets[i]);
                    if (bit != it->second.end()) cell = bit->second;
                }
                os << "  " << std::right << std::setw(static_cast<int>(widths[i])) << cell;
            }
            os << "\n";
        }
    }
    return os.str();
}

BenchPaths cmd_render(const std::string& reports_path, const std::string& out_prefix) {
    const auto lines = read_lines(reports_path);
    BenchPaths paths;
    paths.reports = reports_path;
    paths.grid_txt = out_prefix + ".txt";
    paths.grid_csv = out_prefix + ".csv";
    std::ofstream(paths.grid_txt) << render_grid(lines, false);
    std::ofstream(paths.grid_csv) << render_grid(lines, true);
    return paths;
}

}  // namespace emsq
