#include "doctest.h"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "emsq/bench.hpp"

using namespace emsq;
using nlohmann::json;

TEST_SUITE_BEGIN("bench");

namespace {

std::vector<std::string> fixed_train_lines() {
    // hand-written cells with fixed timings; rendering is a pure function of
    // these lines, so the expected grid below is frozen
    std::vector<std::string> lines;
    json header;
    header["type"] = "run_header";
    header["kind"] = "bench-train";
    lines.push_back(header.dump());
    auto cell = [&](const char* method, const char* budget, const char* auc,
                    const char* trainmem, double tsec, double lat, const char* annotation) {
        json c;
        c["type"] = "cell";
        c["method"] = method;
        c["budget"] = budget;
        c["auc_text"] = auc;
        c["trainmem"] = trainmem;
        c["train_seconds"] = tsec;
        c["latency_seconds"] = lat;
        if (annotation) c["annotation"] = annotation;
        lines.push_back(c.dump());
    };
    cell("full", "50.0%", "0.7543", "300.0%", 96.0, 0.00056, "100.0%");
    cell("full", "10.0%", "0.7543", "300.0%", 96.0, 0.00056, "100.0%");
    cell("int8_16", "50.0%", "0.7539", "250.0%", 144.0, 0.00065, nullptr);
    cell("int8_16", "10.0%", "0.7524", "225.0%", 271.0, 0.00065, "25.0%");
    {
        json c;  // failed cell renders as "/"
        c["type"] = "cell";
        c["method"] = "adaptemb";
        c["budget"] = "50.0%";
        c["error"] = "adaptive: exclusive region full (capacity 3)";
        lines.push_back(c.dump());
    }
    return lines;
}

const char* kGoldenText =
        "Method        Metric                50.0%            10.0%\n"
        "----------------------------------------------------------\n"
        "full          AUC         0.7543 (100.0%)  0.7543 (100.0%)\n"
        "              TrainMem             300.0%           300.0%\n"
        "              TrainTime             1m36s            1m36s\n"
        "              Latency            0.5600ms         0.5600ms\n"
        "int8_16       AUC                  0.7539   0.7524 (25.0%)\n"
        "              TrainMem             250.0%           225.0%\n"
        "              TrainTime             2m24s            4m31s\n"
        "              Latency            0.6500ms         0.6500ms\n"
        "adaptemb      AUC                       /                /\n"
        "              TrainMem                  /                /\n"
        "              TrainTime                 /                /\n"
        "              Latency                   /                /\n";

const char* kGoldenCsv =
        "method,metric,50.0%,10.0%\n"
        "full,AUC,0.7543 (100.0%),0.7543 (100.0%)\n"
        "full,TrainMem,300.0%,300.0%\n"
        "full,TrainTime,1m36s,1m36s\n"
        "full,Latency,0.5600ms,0.5600ms\n"
        "int8_16,AUC,0.7539,0.7524 (25.0%)\n"
        "int8_16,TrainMem,250.0%,225.0%\n"
        "int8_16,TrainTime,2m24s,4m31s\n"
        "int8_16,Latency,0.6500ms,0.6500ms\n"
        "adaptemb,AUC,/,/\n"
        "adaptemb,TrainMem,/,/\n"
        "adaptemb,TrainTime,/,/\n"
        "adaptemb,Latency,/,/\n";

RunConfig tiny_run(const std::string& out, std::uint64_t seed) {
    auto cfg = Config::parse(
            "[run]\nmethods = full,double_hash\nbudgets = 50%\n"
            "[data]\nsource = synthetic\nfields = 2\ncardinality = 120\nsamples = 1200\n"
            "[model]\ndim = 8\nhidden1 = 8\nhidden2 = 4\n"
            "[train]\nlr = 0.01\nwarmup_epochs = 0.5\neval_every = 0.25\n");
    cfg.set("run.out", out);
    cfg.set("run.seed", std::to_string(seed));
    return RunConfig::from_config(cfg);
}

json parse_line(const std::string& line) { return json::parse(line); }

std::vector<json> cells_of(const std::string& reports_path) {
    std::ifstream is(reports_path);
    std::vector<json> cells;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto j = parse_line(line);
        if (j.value("type", "") == "cell") cells.push_back(j);
    }
    return cells;
}

const std::vector<std::string> kTimingKeys = {"train_seconds", "latency_seconds",
                                              "compress_seconds", "stages"};

void strip_timing(json& j) {
    for (const auto& key : kTimingKeys) j.erase(key);
}

}  // namespace

TEST_CASE("grid rendering matches the golden text and csv") {
    const auto lines = fixed_train_lines();
    CHECK(render_grid(lines, false) == kGoldenText);
    CHECK(render_grid(lines, true) == kGoldenCsv);
}

TEST_CASE("bench-train reports reproduce bitwise apart from timings") {
    namespace fs = std::filesystem;
    const auto dir1 = (fs::temp_directory_path() / "emsq_det1").string();
    const auto dir2 = (fs::temp_directory_path() / "emsq_det2").string();
    const auto p1 = cmd_bench_train(tiny_run(dir1, 99));
    const auto p2 = cmd_bench_train(tiny_run(dir2, 99));
    auto c1 = cells_of(p1.reports);
    auto c2 = cells_of(p2.reports);
    REQUIRE(c1.size() == c2.size());
    for (std::size_t i = 0; i < c1.size(); ++i) {
        strip_timing(c1[i]);
        strip_timing(c2[i]);
        CHECK(c1[i] == c2[i]);
    }
    // a different seed changes the learned numbers
    const auto dir3 = (fs::temp_directory_path() / "emsq_det3").string();
    const auto p3 = cmd_bench_train(tiny_run(dir3, 100));
    auto c3 = cells_of(p3.reports);
    CHECK(c1[0].at("auc") != c3[0].at("auc"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    fs::remove_all(dir3);
}

TEST_CASE("gen-data writes identical files for identical seeds") {
    namespace fs = std::filesystem;
    auto run_once = [&](const std::string& out) {
        auto cfg = Config::parse(
                "[data]\nsource = synthetic\nfields = 2\ncardinality = 50\nsamples = 400\n");
        cfg.set("run.out", out);
        auto rc = RunConfig::from_config(cfg);
        cmd_gen_data(rc);
        std::ifstream is(out + "/dataset.ckpt", std::ios::binary);
        return std::vector<char>{std::istreambuf_iterator<char>(is), {}};
    };
    const auto dir1 = (fs::temp_directory_path() / "emsq_gen1").string();
    const auto dir2 = (fs::temp_directory_path() / "emsq_gen2").string();
    CHECK(run_once(dir1) == run_once(dir2));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("gen-data rejects zero samples; bench rejects unknown methods") {
    auto cfg = Config::parse("[data]\nsource = synthetic\nsamples = 0\n");
    cfg.set("run.out", (std::filesystem::temp_directory_path() / "emsq_zero").string());
    auto rc = RunConfig::from_config(cfg);
    CHECK_THROWS_AS(cmd_gen_data(rc), config_error);

    auto bad = tiny_run((std::filesystem::temp_directory_path() / "emsq_bad").string(), 1);
    bad.methods = {"not_a_method"};
    CHECK_THROWS_AS(cmd_bench_train(bad), config_error);
    bad.methods = {};
    bad.budgets = {};
    // empty lists fall back to the full defaults, which is not an error;
    // an explicitly empty method list via config text is
}

TEST_SUITE_END();
