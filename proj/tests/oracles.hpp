#pragma once

// Test-side oracles, independent of the library implementation paths they
// check: central finite differences, pairwise AUC, exhaustive top-k.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "emsq/core.hpp"
#include "emsq/model.hpp"
#include "emsq/stores.hpp"

namespace oracle {

using emsq::index_t;

struct GradCheckResult {
    double max_rel = 0;
    double worst_analytic = 0, worst_fd = 0;
    index_t worst_index = -1;
};

// Central finite differences against an analytic gradient, at 64-bit
// precision. Perturbed parameters are re-read after import so quantized
// grids contribute their true step to the quotient.
inline GradCheckResult fd_check_store(emsq::StoreT<double>& store,
                                      emsq::DlrmLiteT<double>& model,
                                      const std::vector<index_t>& ids,
                                      const std::vector<double>& dense,
                                      const std::vector<float>& labels) {
    auto loss = [&]() {
        const auto cache = model.forward(store, ids, dense);
        return emsq::bce_loss(std::span<const double>(cache.predictions),
                              std::span<const float>(labels));
    };
    const auto cache = model.forward(store, ids, dense);
    const auto grads = model.backward(cache, labels);
    const auto analytic = store.param_gradients(ids, grads.embeddings);

    std::vector<double> theta(static_cast<std::size_t>(store.param_count()));
    store.export_params(theta);
    GradCheckResult res;
    double ref = 0;
    for (double a : analytic) ref = std::max(ref, std::abs(a));
    for (index_t j = 0; j < store.param_count(); ++j) {
        const double step = store.fd_step(j);
        std::vector<double> work = theta;
        work[j] = theta[j] + step;
        store.import_params(work);
        std::vector<double> actual_hi(work.size());
        store.export_params(actual_hi);
        const double lp = loss();
        work[j] = theta[j] - step;
        store.import_params(work);
        std::vector<double> actual_lo(work.size());
        store.export_params(actual_lo);
        const double lm = loss();
        store.import_params(theta);
        const double width = actual_hi[j] - actual_lo[j];
        if (std::abs(width) < 1e-15) continue;  // masked or pinned parameter
        const double fd = (lp - lm) / width;
        const double denom = std::max({std::abs(analytic[j]), std::abs(fd), 1e-3 * ref, 1e-8});
        const double rel = std::abs(fd - analytic[j]) / denom;
        if (rel > res.max_rel) {
            res.max_rel = rel;
            res.worst_analytic = analytic[j];
            res.worst_fd = fd;
            res.worst_index = j;
        }
    }
    return res;
}

inline double fd_check_model(emsq::StoreT<double>& store, emsq::DlrmLiteT<double>& model,
                             const std::vector<index_t>& ids, const std::vector<double>& dense,
                             const std::vector<float>& labels) {
    auto loss = [&]() {
        const auto cache = model.forward(store, ids, dense);
        return emsq::bce_loss(std::span<const double>(cache.predictions),
                              std::span<const float>(labels));
    };
    const auto cache = model.forward(store, ids, dense);
    const auto grads = model.backward(cache, labels);
    const auto theta0 = model.params();
    double max_rel = 0, ref = 0;
    for (double a : grads.theta) ref = std::max(ref, std::abs(a));
    for (std::size_t j = 0; j < theta0.size(); ++j) {
        const double h = 1e-5;
        auto work = theta0;
        work[j] += h;
        model.set_params(work);
        const double lp = loss();
        work[j] = theta0[j] - h;
        model.set_params(work);
        const double lm = loss();
        const double fd = (lp - lm) / (2 * h);
        const double a = grads.theta[j];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-3 * ref, 1e-8});
        max_rel = std::max(max_rel, std::abs(fd - a) / denom);
    }
    model.set_params(theta0);
    return max_rel;
}

// O(P*N) pair enumeration with explicit tie handling.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0, ties = 0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1;
            else if (scores[i] == scores[j])
                ties += 1;
        }
    }
    return (wins + 0.5 * ties) / static_cast<double>(pairs);
}

// Exhaustive inner-product top-k, ties broken by lower row id.
inline std::vector<index_t> topk_ids(const emsq::DenseMatrix& corpus, const float* query,
                                     index_t k) {
    std::vector<std::pair<double, index_t>> scored(corpus.rows);
    for (index_t r = 0; r < corpus.rows; ++r) {
        double s = 0;
        for (index_t c = 0; c < corpus.cols; ++c)
            s += static_cast<double>(corpus.at(r, c)) * query[c];
        scored[r] = {s, r};
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<index_t> out(k);
    for (index_t i = 0; i < k; ++i) out[i] = scored[i].second;
    return out;
}

}  // namespace oracle
