#pragma once

#include <string>
#include <vector>

#include "emsq/config.hpp"

namespace emsq {

// One reports file per run: a header line carrying the config and version,
// then one JSON object per (method, budget) cell. Rendering is a pure
// function of those lines.
struct BenchPaths {
    std::string reports;   // .jsonl
    std::string grid_txt;  // aligned text grid
    std::string grid_csv;
};

// Writes <out>/dataset.ckpt and <out>/skew.json; returns the summary line.
std::string cmd_gen_data(const RunConfig& cfg);

// Table-3-style grid: AUC / TrainMem / TrainTime / Latency per method row.
// Infeasible cells run at the nearest achievable ratio and carry it in
// parentheses; failed cells render as "/" with the error recorded.
BenchPaths cmd_bench_train(const RunConfig& cfg);

// Table-4-style grid over a frozen matrix: Recall@k / Time / Latency.
// Infeasible continuous cells render "/"; discrete-ratio methods run at the
// nearest grid point with the achieved ratio in parentheses.
BenchPaths cmd_bench_posttrain(const RunConfig& cfg);

// Single compression run: writes the codec checkpoint, returns a JSON line.
std::string cmd_compress(const RunConfig& cfg, const std::string& matrix_path,
                         const std::string& method, double budget_fraction,
                         const std::string& out_path);

// Human-readable header + meta of any checkpoint file.
std::string cmd_inspect(const std::string& path);

// Re-renders grids from an existing reports file (pure).
std::string render_grid(const std::vector<std::string>& json_lines, bool csv);
BenchPaths cmd_render(const std::string& reports_path, const std::string& out_prefix);

}  // namespace emsq
