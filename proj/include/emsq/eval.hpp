#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "emsq/core.hpp"
#include "emsq/posttrain.hpp"

namespace emsq {

// Rank-statistic AUC with explicit tie correction: equals
// P(score_pos > score_neg) + 0.5 * P(tie) over all positive-negative pairs.
double auc(std::span<const double> scores, std::span<const float> labels);
double auc(std::span<const float> scores, std::span<const float> labels);

// Mean over queries of |topk(full) ∩ topk(decompressed)| / k under
// inner-product scoring with an exhaustive scan; ties break toward the lower
// row id. Decompression runs in batches of `decompress_batch_size`.
double recall_overlap(const DenseMatrix& full, const Codec& codec, const DenseMatrix& queries,
                      index_t k, index_t decompress_batch_size = 1024);

// Median wall time of `repeats` runs of fn, after one untimed warm-up.
double time_batch(const std::function<void()>& fn, int repeats);

struct MetricsReport {
    double auc = 0;
    std::uint64_t inference_bytes = 0;
    std::uint64_t training_bytes = 0;
    double train_seconds = 0;
    double batch_latency_seconds = 0;
    double recall_at_k = -1;  // negative when not measured
};

}  // namespace emsq
