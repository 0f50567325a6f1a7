#include "emsq/eval.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <vector>

namespace emsq {

namespace {

template <class Score>
double auc_impl(std::span<const Score> scores, std::span<const float> labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc: score/label length mismatch");
    std::uint64_t positives = 0, negatives = 0;
    for (float l : labels) (l > 0.5f ? positives : negatives) += 1;
    if (positives == 0 || negatives == 0)
        throw undefined_metric_error("auc: needs at least one positive and one negative label");

    std::vector<index_t> order(scores.size());
    std::iota(order.begin(), order.end(), index_t(0));
    std::sort(order.begin(), order.end(),
              [&](index_t a, index_t b) { return scores[a] < scores[b]; });

    // average ranks over tied score runs, accumulate positive ranks
    double pos_rank_sum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]] > 0.5f) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double p = static_cast<double>(positives);
    const double n = static_cast<double>(negatives);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

}  // namespace

double auc(std::span<const double> scores, std::span<const float> labels) {
    return auc_impl(scores, labels);
}
double auc(std::span<const float> scores, std::span<const float> labels) {
    return auc_impl(scores, labels);
}

double recall_overlap(const DenseMatrix& full, const Codec& codec, const DenseMatrix& queries,
                      index_t k, index_t decompress_batch_size) {
    if (k < 1) throw std::invalid_argument("recall_overlap: k must be >= 1");
    if (k > full.rows) throw std::invalid_argument("recall_overlap: k exceeds the corpus");
    if (queries.cols != full.cols)
        throw std::invalid_argument("recall_overlap: query width mismatch");
    if (codec.rows() != full.rows || codec.cols() != full.cols)
        throw std::invalid_argument("recall_overlap: codec shape mismatch");

    const DenseMatrix decoded = codec.decompress_all(decompress_batch_size);

    auto topk = [&](const DenseMatrix& corpus, const float* q) {
        std::vector<std::pair<double, index_t>> scored(corpus.rows);
        for (index_t r = 0; r < corpus.rows; ++r) {
            double s = 0;
            const float* row = corpus.row(r);
            for (index_t c = 0; c < corpus.cols; ++c) s += double(row[c]) * double(q[c]);
            scored[r] = {s, r};
        }
        auto better = [](const std::pair<double, index_t>& a,
                         const std::pair<double, index_t>& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        };
        std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
        std::vector<index_t> ids(k);
        for (index_t i = 0; i < k; ++i) ids[i] = scored[i].second;
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    double total = 0;
    for (index_t q = 0; q < queries.rows; ++q) {
        const auto a = topk(full, queries.row(q));
        const auto b = topk(decoded, queries.row(q));
        std::vector<index_t> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                              std::back_inserter(common));
        total += static_cast<double>(common.size()) / static_cast<double>(k);
    }
    return queries.rows ? total / static_cast<double>(queries.rows) : 0.0;
}

double time_batch(const std::function<void()>& fn, int repeats) {
    if (repeats < 3) throw std::invalid_argument("time_batch: need at least 3 repeats");
    fn();  // warm-up, untimed
    std::vector<double> times(repeats);
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        times[r] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                           .count();
    }
    std::nth_element(times.begin(), times.begin() + repeats / 2, times.end());
    return times[repeats / 2];
}

}  // namespace emsq
