#include "doctest.h"

#include "emsq/eval.hpp"
#include "emsq/train.hpp"
#include "oracles.hpp"

using namespace emsq;

TEST_SUITE_BEGIN("eval");

TEST_CASE("auc worked examples") {
    // labels [1,0,1,0], scores [0.9,0.8,0.7,0.2]: pairs (0.9,0.8)+, (0.9,0.2)+,
    // (0.7,0.8)-, (0.7,0.2)+ -> 3/4
    const std::vector<double> scores = {0.9, 0.8, 0.7, 0.2};
    const std::vector<float> labels = {1, 0, 1, 0};
    CHECK(auc(std::span<const double>(scores), std::span<const float>(labels)) ==
          doctest::Approx(0.75));

    const std::vector<double> separated = {0.9, 0.8, 0.2, 0.1};
    const std::vector<float> lab2 = {1, 1, 0, 0};
    CHECK(auc(std::span<const double>(separated), std::span<const float>(lab2)) ==
          doctest::Approx(1.0));

    const std::vector<double> ties = {0.5, 0.5, 0.5, 0.5};
    CHECK(auc(std::span<const double>(ties), std::span<const float>(labels)) ==
          doctest::Approx(0.5));

    const std::vector<float> single = {1, 1, 1, 1};
    CHECK_THROWS_AS(auc(std::span<const double>(scores), std::span<const float>(single)),
                    undefined_metric_error);
}

TEST_CASE("auc equals the pair-enumeration oracle, with ties") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const int count = 10 + static_cast<int>(rng.next_below(200));
        std::vector<double> scores(count);
        std::vector<float> labels(count);
        std::vector<int> labels_int(count);
        bool has_pos = false, has_neg = false;
        for (int i = 0; i < count; ++i) {
            // quantized scores force ties
            scores[i] = std::floor(rng.next_double() * 12.0) / 12.0;
            labels_int[i] = rng.next_double() < 0.4 ? 1 : 0;
            labels[i] = static_cast<float>(labels_int[i]);
            (labels_int[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        const double fast = auc(std::span<const double>(scores), std::span<const float>(labels));
        const double slow = oracle::pairwise_auc(scores, labels_int);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}

namespace {
DenseMatrix random_matrix(index_t rows, index_t cols, std::uint64_t seed) {
    DenseMatrix m(rows, cols);
    Rng rng(seed);
    for (auto& v : m.values) v = static_cast<float>(rng.next_normal());
    return m;
}
}  // namespace

TEST_CASE("recall overlap: identity codec scores 1.0") {
    const auto corpus = random_matrix(50, 8, 1);
    const auto queries = random_matrix(7, 8, 2);
    auto plan = solve("identity", 1.0, FeatureSpace({50}), 8);
    auto res = compress(corpus, plan, 0);
    CHECK(recall_overlap(corpus, *res.codec, queries, 10) == doctest::Approx(1.0));
    CHECK_THROWS_AS(recall_overlap(corpus, *res.codec, queries, 0), std::invalid_argument);
    CHECK_THROWS_AS(recall_overlap(corpus, *res.codec, queries, 51), std::invalid_argument);
}

TEST_CASE("recall overlap: all-zero reconstruction with k=n is trivially 1.0") {
    DenseMatrix corpus(6, 4);  // zero corpus: any codec reconstructs zeros
    auto plan = solve("int_codec", 1.0, FeatureSpace({6}), 4);
    plan.feasible = true;
    auto res = compress(corpus, plan, 0);
    const auto queries = random_matrix(3, 4, 9);
    CHECK(recall_overlap(corpus, *res.codec, queries, 6) == doctest::Approx(1.0));
}

TEST_CASE("recall overlap: 5x2 corpus against the exhaustive oracle") {
    DenseMatrix corpus(5, 2);
    const float rows[5][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 0}, {0.5f, 0.5f}};
    for (index_t r = 0; r < 5; ++r)
        for (index_t c = 0; c < 2; ++c) corpus.at(r, c) = rows[r][c];
    auto plan = solve("svd", 1.0, FeatureSpace({5}), 2);
    plan.svd_rank = 1;
    auto res = compress(corpus, plan, 0);
    const auto decoded = res.codec->decompress_all();
    DenseMatrix queries(3, 2);
    const float qs[3][2] = {{1, 0.2f}, {-0.5f, 1}, {0.3f, 0.3f}};
    for (index_t r = 0; r < 3; ++r)
        for (index_t c = 0; c < 2; ++c) queries.at(r, c) = qs[r][c];
    const index_t k = 2;
    double expect = 0;
    for (index_t q = 0; q < 3; ++q) {
        const auto full_top = oracle::topk_ids(corpus, queries.row(q), k);
        const auto comp_top = oracle::topk_ids(decoded, queries.row(q), k);
        int common = 0;
        for (index_t a : full_top)
            for (index_t b : comp_top)
                if (a == b) ++common;
        expect += double(common) / k;
    }
    expect /= 3;
    CHECK(recall_overlap(corpus, *res.codec, queries, k) == doctest::Approx(expect));
}

TEST_CASE("recall overlap is exactly 1.0 when reconstruction is bitwise equal") {
    const auto corpus = random_matrix(30, 4, 3);
    auto plan = solve("prune", 1.0, FeatureSpace({30}), 4);
    plan.target_bytes = sparse_bytes(30, 4, 120).second + 16;
    auto res = compress(corpus, plan, 0);
    REQUIRE(res.codec->decompress_all().values == corpus.values);
    const auto queries = random_matrix(5, 4, 4);
    CHECK(recall_overlap(corpus, *res.codec, queries, 3) == 1.0);
}

TEST_CASE("time_batch: positive, finite, needs three repeats") {
    const double t = time_batch([]() { volatile int x = 0; for (int i = 0; i < 1000; ++i) x += i; }, 3);
    CHECK(t >= 0.0);
    CHECK(t < 1.0);
    CHECK_THROWS_AS(time_batch([]() {}, 2), std::invalid_argument);
}

TEST_SUITE_END();
