#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emsq/core.hpp"
#include "emsq/stores.hpp"

namespace emsq {

// Solved hyperparameters for one (method, budget) cell. achieved_bytes is the
// MemoryModel forecast of the frozen payload; for data-dependent codecs
// (dedup) it is the budget cap until compress() fills in the real value.
struct CompressionPlan {
    std::string method;
    double budget_fraction = 1.0;
    std::uint64_t baseline_bytes = 0;
    std::uint64_t target_bytes = 0;
    std::uint64_t achieved_bytes = 0;
    bool feasible = true;
    bool bytes_data_dependent = false;

    // hashing family
    index_t rows = 0;  // double_hash / memcom shared rows, adaptive shared rows
    index_t m1 = 0, m2 = 0;
    index_t robe_len = 0, robe_chunk = 0;
    std::vector<index_t> tt_row_factors, tt_col_factors, tt_ranks;
    // quantization
    StorageType dtype = StorageType::kI8;
    Rounding rounding = Rounding::kStochastic;
    QuantGranularity granularity = QuantGranularity::kPerTable;
    double clip = 1.0;
    // dimension reduction
    double mde_alpha = 0.3;
    double mde_lambda = 0.0;
    std::vector<index_t> mde_dims;
    index_t svd_rank = 0;
    std::vector<index_t> group_ranks;
    // pruning
    double density = 1.0;
    std::uint64_t nnz = 0;
    // product quantization
    index_t pq_parts = 0;
    index_t pq_centroids = 0;  // K of the first group (doubles per group)
    index_t groups = 0;        // magnitude groups (0 = ungrouped)
    // dedup
    index_t dedup_block = 0;
    index_t lsh_projections = 4;
    double lsh_width = 0.05;
    // adaptive
    std::uint32_t promote_threshold = 16;
    index_t exclusive_capacity = 0;

    double achieved_fraction() const {
        return baseline_bytes ? static_cast<double>(achieved_bytes) / baseline_bytes : 0.0;
    }
    // Ratio printed next to infeasible cells, e.g. "25.0%".
    std::string ratio_annotation() const { return format_percent(achieved_fraction()); }

    // Human-readable key-value block embedded in run configs.
    std::string to_kv() const;
    static CompressionPlan from_kv(const std::string& text);
};

// Product-quantization codebooks cap at 256 centroids per group (8-bit
// codes); both the solver's byte forecasts and the codec obey this limit.
inline constexpr index_t kMaxPqCentroids = 256;

struct FeasibleRange {
    std::uint64_t min_bytes = 0;
    std::uint64_t max_bytes = 0;
    std::vector<double> discrete_fractions;  // empty for continuous methods
    bool continuous() const { return discrete_fractions.empty(); }
};

// Tunables the solver cannot derive from (space, d) alone.
struct SolveOptions {
    index_t robe_chunk = 8;        // clamped to divide d
    double mde_alpha = 0.3;
    int tt_cores = 2;              // 2 or 3
    std::uint32_t promote_threshold = 16;
    index_t lsh_projections = 4;
    double lsh_width = 0.05;
    index_t groups = 4;            // magnitude groups for mag_pq / mag_svd
};

// Turns (method, budget fraction, feature space, width) into concrete
// hyperparameters whose frozen byte count fits the budget. For discrete-ratio
// methods an unreachable budget returns the nearest achievable ratio with
// feasible = false.
CompressionPlan solve(const std::string& method, double budget_fraction,
                      const FeatureSpace& space, index_t dim,
                      const SolveOptions& options = {});

FeasibleRange feasible_range(const std::string& method, const FeatureSpace& space, index_t dim,
                             const SolveOptions& options = {});

// Method tags accepted by the benchmark surfaces.
const std::vector<std::string>& train_methods();
const std::vector<std::string>& posttrain_methods();
bool is_posttrain_wrapped(const std::string& method);  // trained full, compressed after

}  // namespace emsq
