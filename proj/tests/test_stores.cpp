#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "emsq/stores.hpp"

using namespace emsq;

TEST_SUITE_BEGIN("stores");

namespace {

std::vector<index_t> iota_ids(index_t n) {
    std::vector<index_t> ids(n);
    for (index_t i = 0; i < n; ++i) ids[i] = i;
    return ids;
}

// count-then-filter oracle for promotion tests
std::set<index_t> promotion_oracle(const std::vector<index_t>& stream, std::uint32_t threshold) {
    std::map<index_t, std::uint32_t> counts;
    std::set<index_t> promoted;
    for (index_t id : stream)
        if (++counts[id] >= threshold) promoted.insert(id);
    return promoted;
}

}  // namespace

TEST_CASE("full table lookup, identity example") {
    FullTable t(4, 4, 1);
    for (auto& v : t.raw_values()) v = 0;
    for (index_t i = 0; i < 4; ++i) t.raw_values()[i * 4 + i] = 1.0f;  // identity
    const index_t ids[] = {2};
    const auto out = t.lookup(ids);
    CHECK(out.rows == 1);
    CHECK(out.at(0, 0) == 0);
    CHECK(out.at(0, 2) == 1);
    CHECK(t.inference_bytes() == 64);
    CHECK(t.training_bytes() == 192);
    CHECK_THROWS_AS((void)t.lookup(std::vector<index_t>{4}), std::invalid_argument);
    CHECK_THROWS_AS((void)t.lookup(std::vector<index_t>{-1}), std::invalid_argument);
}

TEST_CASE("full table SGD step with lr=1 subtracts the gradient exactly") {
    FullTable t(6, 3, 2);
    const auto before = t.lookup(std::vector<index_t>{4});
    MatrixT<float> grad(1, 3);
    grad.at(0, 0) = 0.25f;
    grad.at(0, 1) = -1.0f;
    grad.at(0, 2) = 2.0f;
    OptimizerConfig opt;
    opt.kind = OptimizerConfig::Kind::kSgd;
    opt.lr = 1.0;
    t.apply_gradients(std::vector<index_t>{4}, grad, opt);
    const auto after = t.lookup(std::vector<index_t>{4});
    for (index_t j = 0; j < 3; ++j)
        CHECK(after.at(0, j) == doctest::Approx(before.at(0, j) - grad.at(0, j)));
    t.freeze();
    CHECK_THROWS_AS(t.apply_gradients(std::vector<index_t>{4}, grad, opt), state_error);
}

TEST_CASE("double hash sums two rows and routes the full gradient to both") {
    DoubleHashTable t(100, 4, 16, 7);
    const auto [r1, r2] = t.bucket_pair(42);
    const auto direct = t.lookup(std::vector<index_t>{42});
    for (index_t j = 0; j < 4; ++j)
        CHECK(direct.at(0, j) ==
              doctest::Approx(t.raw_values()[r1 * 4 + j] + t.raw_values()[r2 * 4 + j]));
    MatrixT<float> grad(1, 4);
    for (index_t j = 0; j < 4; ++j) grad.at(0, j) = 1.0f + j;
    const auto grads = t.param_gradients(std::vector<index_t>{42}, grad);
    if (r1 != r2) {
        for (index_t j = 0; j < 4; ++j) {
            CHECK(grads[r1 * 4 + j] == doctest::Approx(grad.at(0, j)));
            CHECK(grads[r2 * 4 + j] == doctest::Approx(grad.at(0, j)));
        }
    }
}

TEST_CASE("compo table: constant tables multiply elementwise") {
    CompoTable t(12, 3, 4, 3, 5);
    for (auto& v : t.raw_first()) v = 2.0f;
    for (auto& v : t.raw_second()) v = 3.0f;
    for (index_t id : {0, 5, 11}) {
        const auto out = t.lookup(std::vector<index_t>{id});
        for (index_t j = 0; j < 3; ++j) CHECK(out.at(0, j) == doctest::Approx(6.0f));
    }
    CHECK_THROWS_AS(CompoTable(13, 3, 4, 3, 5), std::invalid_argument);
}

TEST_CASE("compo index pairs are injective whenever m1*m2 >= n") {
    for (index_t n : {37, 100, 1000, 10000}) {
        const auto m1 = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
        const index_t m2 = (n + m1 - 1) / m1;
        CompoTable t(n, 2, m1, m2, 3);
        std::set<std::pair<index_t, index_t>> seen;
        for (index_t x = 0; x < n; ++x) CHECK(seen.insert(t.index_pair(x)).second);
    }
}

TEST_CASE("memcom: output is shared row * scale + bias") {
    MEmComTable t(50, 4, 8, 11);
    t.raw_scale()[7] = 2.5f;
    t.raw_bias()[7] = -1.0f;
    const index_t bucket = t.bucket(7);
    const auto out = t.lookup(std::vector<index_t>{7});
    for (index_t j = 0; j < 4; ++j)
        CHECK(out.at(0, j) == doctest::Approx(t.raw_table()[bucket * 4 + j] * 2.5f - 1.0f));
    CHECK(t.inference_bytes() == 8 * 4 * 4 + 2 * 4 * 50);
}

TEST_CASE("robe: rows are chunks of the 1-D array, wrapping modulo Z") {
    RobeArray t(30, 8, 21, 4, 13);
    const auto out = t.lookup(std::vector<index_t>{9});
    for (index_t c = 0; c < 2; ++c) {
        const index_t off = t.chunk_offset(9, c);
        for (index_t i = 0; i < 4; ++i)
            CHECK(out.at(0, c * 4 + i) == doctest::Approx(t.raw_values()[(off + i) % 21]));
    }
    CHECK(t.inference_bytes() == 21 * 4);
    CHECK_THROWS_AS(RobeArray(30, 8, 21, 3, 13), std::invalid_argument);
}

TEST_CASE("ttrec: rank-1 kronecker example reproduces (3,4,6,8)") {
    TtRecTableT<float> t(1, 4, {1, 1}, {2, 2}, {1}, 1);
    t.core_values(0) = {1.0f, 2.0f};  // g1, shape (1,1,2,1)
    t.core_values(1) = {3.0f, 4.0f};  // g2, shape (1,1,2,1)
    const auto out = t.lookup(std::vector<index_t>{0});
    CHECK(out.at(0, 0) == doctest::Approx(3));
    CHECK(out.at(0, 1) == doctest::Approx(4));
    CHECK(out.at(0, 2) == doctest::Approx(6));
    CHECK(out.at(0, 3) == doctest::Approx(8));
}

TEST_CASE("ttrec exactness: planted rank-1 matrix reproduced to 1e-6") {
    const index_t m1 = 4, m2 = 3, d1 = 2, d2 = 2;
    TtRecTableT<float> t(m1 * m2, d1 * d2, {m1, m2}, {d1, d2}, {1}, 1);
    std::vector<float> u = {0.5f, -1.0f, 2.0f, 0.25f}, p = {1.0f, 3.0f};
    std::vector<float> v = {1.5f, -0.5f, 1.0f}, q = {2.0f, -1.0f};
    for (index_t i = 0; i < m1; ++i)
        for (index_t a = 0; a < d1; ++a) t.core_values(0)[i * d1 + a] = u[i] * p[a];
    for (index_t i = 0; i < m2; ++i)
        for (index_t b = 0; b < d2; ++b) t.core_values(1)[i * d2 + b] = v[i] * q[b];
    for (index_t x = 0; x < m1 * m2; ++x) {
        const auto out = t.lookup(std::vector<index_t>{x});
        const index_t x1 = x % m1, x2 = x / m1;
        for (index_t a = 0; a < d1; ++a)
            for (index_t b = 0; b < d2; ++b)
                CHECK(out.at(0, a * d2 + b) ==
                      doctest::Approx(u[x1] * v[x2] * p[a] * q[b]).epsilon(1e-6));
    }
}

TEST_CASE("ttrec three-core lookup matches explicit contraction") {
    TtRecTableT<double> t(8, 8, {2, 2, 2}, {2, 2, 2}, {2, 3}, 99);
    for (index_t x = 0; x < 8; ++x) {
        const auto out = t.lookup(std::vector<index_t>{x});
        const index_t i1 = x % 2, i2 = (x / 2) % 2, i3 = x / 4;
        auto g1 = [&](index_t a, index_t r) { return t.core_values(0)[(i1 * 2 + a) * 2 + r]; };
        auto g2 = [&](index_t r, index_t a, index_t s) {
            return t.core_values(1)[((r * 2 + i2) * 2 + a) * 3 + s];
        };
        auto g3 = [&](index_t s, index_t a) { return t.core_values(2)[(s * 2 + i3) * 2 + a]; };
        for (index_t a1 = 0; a1 < 2; ++a1)
            for (index_t a2 = 0; a2 < 2; ++a2)
                for (index_t a3 = 0; a3 < 2; ++a3) {
                    double want = 0;
                    for (index_t r = 0; r < 2; ++r)
                        for (index_t s = 0; s < 3; ++s)
                            want += g1(a1, r) * g2(r, a2, s) * g3(s, a3);
                    CHECK(out.at(0, (a1 * 2 + a2) * 2 + a3) == doctest::Approx(want));
                }
    }
}

TEST_CASE("quantized table: write then read stays within one step") {
    QuantizedTable q(10, 4, StorageType::kI16, Rounding::kNearest, QuantGranularity::kPerRow,
                     1.0, 3);
    const double step = q.fd_step(5 * 4);
    for (float v : {0.33f, -0.97f, 0.0f, 0.5f}) {
        q.write_value(5 * 4, v, Rounding::kNearest);
        CHECK(std::abs(q.value_at(5 * 4) - v) <= step * 0.5 + 1e-7);
    }
    QuantizedTable q8(1000, 16, StorageType::kI8, Rounding::kNearest,
                      QuantGranularity::kPerRow, 1.0, 3);
    CHECK(q8.inference_bytes() == 16000 + 8000);  // codes + row scale/bias
    QuantizedTable qg(1000, 16, StorageType::kI8, Rounding::kNearest,
                      QuantGranularity::kPerTable, 1.0, 3);
    CHECK(qg.inference_bytes() == 16000);
    CHECK(qg.training_bytes() == 16000 + 2 * 64000);
}

TEST_CASE("quantized from_matrix calibrates rows exactly") {
    MatrixT<float> m(3, 4);
    const float rows[3][4] = {{0.f, 1.f, 2.f, 3.f}, {-1.f, -1.f, -1.f, -1.f}, {0.5f, 0.25f, -0.75f, 0.f}};
    for (index_t r = 0; r < 3; ++r)
        for (index_t c = 0; c < 4; ++c) m.at(r, c) = rows[r][c];
    auto q = QuantizedTable::from_matrix(m, StorageType::kI16);
    for (index_t r = 0; r < 3; ++r) {
        const auto out = q.lookup(std::vector<index_t>{r});
        for (index_t c = 0; c < 4; ++c)
            CHECK(out.at(0, c) == doctest::Approx(m.at(r, c)).epsilon(1e-4));
    }
}

TEST_CASE("quantized stochastic update: 0.25 -> 0.3 lands 0.5 about 20% of the time") {
    int ups = 0;
    constexpr int kTrials = 20000;
    QuantizedTable q(1, 1, StorageType::kI8, Rounding::kStochastic,
                     QuantGranularity::kPerTable, 1.0, 5);
    q.scales() = {0.25f};
    q.biases() = {0.0f};
    for (int i = 0; i < kTrials; ++i) {
        q.write_value(0, 0.3f, Rounding::kStochastic);
        const float got = q.value_at(0);
        CHECK((got == doctest::Approx(0.25f) || got == doctest::Approx(0.5f)));
        if (got > 0.4f) ++ups;
    }
    CHECK(ups > kTrials * 0.17);
    CHECK(ups < kTrials * 0.23);
}

TEST_CASE("alpt bytes and symmetric storage") {
    AlptTable t(1000, 16, StorageType::kI8, 3);
    CHECK(t.inference_bytes() == 16000 + 4000);
    CHECK(compression_ratio(64000, t.inference_bytes()) == doctest::Approx(3.2));
    CHECK(t.training_bytes() == 20000 + 2 * 64000 + 2 * 4000);
    const auto out = t.lookup(iota_ids(1000));
    CHECK(out.rows == 1000);
}

TEST_CASE("mixed dims: output is the reduced row times the projection") {
    FeatureSpace space({5, 7});
    MixedDimTableT<float> t(space, 6, {2, 3}, 0.3, 1.0, 21);
    const index_t id = space.global_id(1, 4);
    const auto out = t.lookup(std::vector<index_t>{id});
    const auto& row = t.raw_table(1);
    const auto& proj = t.raw_projection(1);
    for (index_t j = 0; j < 6; ++j) {
        float want = 0;
        for (index_t a = 0; a < 3; ++a) want += row[4 * 3 + a] * proj[a * 6 + j];
        CHECK(out.at(0, j) == doctest::Approx(want));
    }
    CHECK(t.inference_bytes() == 4 * (5 * 2 + 2 * 6 + 7 * 3 + 3 * 6));
}

TEST_CASE("prune schedule: start, end, and idempotence") {
    PrunedTableT<float> p(4, 8, 0.125, 9);
    std::vector<double> vals(4 * 8);
    for (index_t r = 0; r < 4; ++r)
        for (index_t c = 0; c < 8; ++c) vals[r * 8 + c] = (r % 2 ? 1 : -1) * double(8 - c);
    p.import_params(vals);

    p.prune_step(0.125, 0.0);
    CHECK(p.nnz() == 32);  // schedule start: nothing pruned
    p.prune_step(0.125, 1.0);
    CHECK(p.nnz() == 4);  // sort-and-threshold oracle: only the 8s survive
    const auto out = p.lookup(iota_ids(4));
    for (index_t r = 0; r < 4; ++r) {
        CHECK(std::abs(out.at(r, 0)) == doctest::Approx(8.0));
        for (index_t c = 1; c < 8; ++c) CHECK(out.at(r, c) == 0.0f);
    }
    p.prune_step(0.125, 1.0);
    CHECK(p.nnz() == 4);  // idempotent at the same position

    PrunedTableT<float> q(10, 10, 0.2, 3);
    q.prune_step(0.2, 0.5);
    CHECK(q.nnz() == static_cast<std::uint64_t>(std::floor((0.2 + 0.8 * 0.125) * 100)));
}

TEST_CASE("pruned freeze converts to the cheaper sparse format") {
    PrunedTableT<float> p(3, 4, 0.5, 10);
    std::vector<double> vals = {1, 0.1, 2, 0.2, 3, 0.3, 4, 0.4, 5, 0.5, 6, 0.6};
    p.import_params(vals);
    p.prune_step(5.0 / 12.0, 1.0);
    CHECK(p.nnz() == 5);
    const auto before = p.lookup(iota_ids(3));
    p.freeze();
    CHECK(p.frozen_format() == SparseFormat::kCsr);
    CHECK(p.inference_bytes() == 56);  // matches the core example
    const auto after = p.lookup(iota_ids(3));
    CHECK(before.values == after.values);
    CHECK_THROWS_AS(p.prune_step(0.5, 1.0), state_error);
}

TEST_CASE("adaptive: threshold crossing promotes exactly once") {
    AdaptiveTableT<float> t(100, 4, 8, 3, 10, 31);
    CHECK(t.observe_and_promote(std::vector<index_t>{5, 5}) == 0);
    CHECK_FALSE(t.is_promoted(5));
    const auto before = t.lookup(std::vector<index_t>{5});
    CHECK(t.observe_and_promote(std::vector<index_t>{5}) == 1);  // third sighting
    CHECK(t.is_promoted(5));
    const auto after = t.lookup(std::vector<index_t>{5});
    CHECK(before.values == after.values);  // promotion copies the shared row
    CHECK(t.observe_and_promote(std::vector<index_t>{5}) == 0);  // only once

    AdaptiveTableT<float> u(100, 4, 8, 3, 10, 31);
    CHECK(u.observe_and_promote(iota_ids(100)) == 0);  // all distinct
}

TEST_CASE("adaptive: zipf stream matches the count-then-filter oracle") {
    AdaptiveTableT<float> t(1000, 4, 64, 10, 1000, 77);
    Rng rng(123);
    std::vector<index_t> stream;
    stream.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        stream.push_back(static_cast<index_t>(999.0 * u * u * u));
    }
    std::size_t promotions = 0;
    for (std::size_t i = 0; i < stream.size(); i += 100)
        promotions += t.observe_and_promote(std::span<const index_t>(
                stream.data() + i, std::min<std::size_t>(100, stream.size() - i)));
    const auto oracle = promotion_oracle(stream, 10);
    CHECK(promotions == oracle.size());
    for (index_t id : oracle) CHECK(t.is_promoted(id));

    // lookup after promotion differs from an untouched twin only on promoted ids
    AdaptiveTableT<float> twin(1000, 4, 64, 10, 1000, 77);
    OptimizerConfig opt;
    MatrixT<float> g(1, 4);
    for (index_t j = 0; j < 4; ++j) g.at(0, j) = 0.1f;
    for (index_t id : oracle) t.apply_gradients(std::vector<index_t>{id}, g, opt);
    for (index_t id = 0; id < 1000; ++id) {
        if (oracle.count(id)) continue;
        const auto a = t.lookup(std::vector<index_t>{id});
        const auto b = twin.lookup(std::vector<index_t>{id});
        CHECK(a.values == b.values);
    }
}

TEST_CASE("adaptive: capacity exhaustion raises a capacity error") {
    AdaptiveTableT<float> t(100, 4, 8, 1, 2, 31);
    CHECK(t.observe_and_promote(std::vector<index_t>{1, 2}) == 2);
    CHECK_THROWS_AS(t.observe_and_promote(std::vector<index_t>{3}), capacity_error);
}

TEST_CASE("store checkpoints round trip byte-stably and match MemoryModel") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();
    auto roundtrip = [&](const Store& s, const char* name) {
        CAPTURE(name);
        Checkpoint c;
        s.save(c);
        CHECK(c.data_bytes() == s.inference_bytes());
        const auto p1 = (dir / (std::string("emsq_") + name + ".ckpt")).string();
        c.save(p1);
        auto loaded = store_from_checkpoint(Checkpoint::load(p1));
        Checkpoint c2;
        loaded->save(c2);
        const auto p2 = p1 + ".again";
        c2.save(p2);
        std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
        const std::vector<char> ba{std::istreambuf_iterator<char>(a), {}};
        const std::vector<char> bb{std::istreambuf_iterator<char>(b), {}};
        CHECK(ba == bb);
        const auto ids = iota_ids(std::min<index_t>(s.feature_count(), 16));
        CHECK(s.lookup(ids).values == loaded->lookup(ids).values);
        std::remove(p1.c_str());
        std::remove(p2.c_str());
    };
    roundtrip(FullTable(20, 4, 1), "full");
    roundtrip(DoubleHashTable(50, 4, 8, 2), "double_hash");
    roundtrip(CompoTable(24, 4, 6, 4, 3), "compo");
    roundtrip(MEmComTable(30, 4, 8, 4), "memcom");
    roundtrip(RobeArray(30, 4, 17, 2, 5), "robe");
    roundtrip(TtRecTableT<float>(12, 4, {4, 3}, {2, 2}, {2}, 6), "ttrec");
    roundtrip(QuantizedTable(10, 4, StorageType::kI8, Rounding::kNearest,
                             QuantGranularity::kPerRow, 1.0, 7),
              "quant_row");
    roundtrip(QuantizedTable(10, 4, StorageType::kI16, Rounding::kNearest,
                             QuantGranularity::kPerTable, 1.0, 7),
              "quant_table");
    roundtrip(QuantizedTable(10, 4, StorageType::kF16, Rounding::kNearest,
                             QuantGranularity::kPerTable, 1.0, 7),
              "fp16");
    roundtrip(AlptTable(10, 4, StorageType::kI8, 8), "alpt");
    {
        FeatureSpace space({5, 7});
        roundtrip(MixedDimTableT<float>(space, 4, {2, 3}, 0.3, 1.0, 9), "mde");
    }
    {
        PrunedTableT<float> p(6, 4, 0.5, 10);
        p.prune_step(0.5, 1.0);
        p.freeze();
        roundtrip(p, "pruned");
    }
    {
        AdaptiveTableT<float> a(40, 4, 8, 2, 10, 11);
        a.observe_and_promote(std::vector<index_t>{3, 3, 9, 9});
        roundtrip(a, "adaptive");
    }
}

TEST_SUITE_END();
