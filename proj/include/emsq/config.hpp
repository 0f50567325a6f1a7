#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emsq/budget.hpp"
#include "emsq/data.hpp"
#include "emsq/train.hpp"

namespace emsq {

// Flat key-value configuration with [section] headers. Keys are addressed as
// "section.key". Environment variables EMSQ_<SECTION>_<KEY> override file
// values; explicit set() wins over both.
class Config {
public:
    Config() = default;
    static Config parse(const std::string& text);
    static Config load(const std::string& path);
    void apply_env_overrides();  // reads EMSQ_* from the process environment

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated

    // Canonical serialization: sections sorted, keys sorted inside sections.
    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

// One fully-resolved run: dataset source, methods, budgets, model and
// training hyperparameters, seed and output directory.
struct RunConfig {
    Config raw;
    std::uint64_t seed = 42;
    std::string out_dir = "runs/out";
    int jobs = 1;
    std::vector<std::string> methods;
    std::vector<double> budgets;  // fractions
    TrainConfig train;
    SolveOptions solver;

    // data
    std::string data_source = "synthetic";  // synthetic | csv | checkpoint path
    SyntheticSpec synthetic;
    std::string csv_path;
    CsvSchema csv_schema;
    std::string dataset_path;  // when source = checkpoint

    // posttrain
    std::string matrix_path;
    std::string queries_spec = "gaussian:100";
    index_t recall_k = 10;
    index_t decompress_batch = 1024;

    static RunConfig from_config(Config cfg);
    Dataset load_dataset() const;
};

// "50%" -> 0.5, "0.1%" -> 0.001, "0.5" -> 0.5
double parse_budget(const std::string& token);
std::string budget_label(double fraction);  // 0.001 -> "0.1%"

}  // namespace emsq
