#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "emsq/checkpoint.hpp"
#include "emsq/core.hpp"
#include "emsq/quantize.hpp"

namespace emsq {

struct OptimizerConfig {
    enum class Kind { kSgd, kAdam };
    Kind kind = Kind::kAdam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One trainable array plus its Adam moments (allocated on first Adam step).
template <class T>
struct ParamArray {
    std::string name;
    std::vector<T> values;
    std::vector<T> moment1, moment2;

    void ensure_moments() {
        if (moment1.size() != values.size()) {
            moment1.resize(values.size(), T(0));
            moment2.resize(values.size(), T(0));
        }
    }
};

// Receives accumulated chain-rule gradients: (array, element) -> grad.
template <class T>
struct GradSink {
    virtual ~GradSink() = default;
    virtual void add(int array_idx, index_t element, T grad) = 0;
};

namespace detail {

template <class T>
struct SparseSink final : GradSink<T> {
    explicit SparseSink(std::size_t arrays) : grads(arrays) {}
    void add(int array_idx, index_t element, T g) override {
        grads[array_idx][element] += g;
    }
    std::vector<std::map<index_t, T>> grads;  // ordered: updates are replayed sorted
};

template <class T>
struct DenseSink final : GradSink<T> {
    DenseSink(std::vector<double>& out, std::vector<index_t> offsets)
            : flat(out), array_offsets(std::move(offsets)) {}
    void add(int array_idx, index_t element, T g) override {
        flat[array_offsets[array_idx] + element] += static_cast<double>(g);
    }
    std::vector<double>& flat;
    std::vector<index_t> array_offsets;
};

template <class T>
void adam_element(T& p, T& m1, T& m2, T g, const OptimizerConfig& opt, std::int64_t step) {
    m1 = static_cast<T>(opt.beta1 * m1 + (1.0 - opt.beta1) * g);
    m2 = static_cast<T>(opt.beta2 * m2 + (1.0 - opt.beta2) * g * g);
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
    const double mhat = m1 / c1;
    const double vhat = m2 / c2;
    p -= static_cast<T>(opt.lr * mhat / (std::sqrt(vhat) + opt.eps));
}

template <class T>
void apply_sparse_update(ParamArray<T>& arr, const std::map<index_t, T>& grads,
                         const OptimizerConfig& opt, std::int64_t step) {
    if (opt.kind == OptimizerConfig::Kind::kSgd) {
        for (const auto& [idx, g] : grads) arr.values[idx] -= static_cast<T>(opt.lr) * g;
        return;
    }
    arr.ensure_moments();
    for (const auto& [idx, g] : grads)
        adam_element(arr.values[idx], arr.moment1[idx], arr.moment2[idx], g, opt, step);
}

}  // namespace detail

// Uniform contract for every compressed embedding layer: batch lookup of
// global feature ids, gradient application through the store's composition,
// freeze, and byte-exact memory accounting. Scalar is float in production
// and double in gradient-check mode.
template <class T>
class StoreT {
public:
    StoreT(index_t features, index_t dim) : features_(features), dim_(dim) {
        if (features < 1 || dim < 1) throw std::invalid_argument("store: empty shape");
    }
    virtual ~StoreT() = default;

    virtual const char* method() const = 0;
    virtual ChunkType chunk_type() const = 0;
    index_t dim() const { return dim_; }
    index_t feature_count() const { return features_; }
    bool frozen() const { return frozen_; }

    MatrixT<T> lookup(std::span<const index_t> ids) const {
        MatrixT<T> out(static_cast<index_t>(ids.size()), dim_);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            check_id(ids[i]);
            lookup_row(ids[i], out.row(static_cast<index_t>(i)));
        }
        return out;
    }

    virtual void apply_gradients(std::span<const index_t> ids, const MatrixT<T>& grads,
                                 const OptimizerConfig& opt) {
        pre_update_checks(ids, grads);
        detail::SparseSink<T> sink(arrays_.size());
        backward(ids, grads, sink);
        ++step_;
        for (std::size_t a = 0; a < arrays_.size(); ++a)
            detail::apply_sparse_update(*arrays_[a], sink.grads[a], opt, step_);
    }

    virtual void freeze() { frozen_ = true; }

    // Exact byte formulas; see MemoryModel. Training bytes include optimizer
    // moments and auxiliary structures.
    virtual std::uint64_t inference_bytes() const = 0;
    virtual std::uint64_t training_bytes() const = 0;

    // --- continuous parameter view (gradient checks, diagnostics) ----------
    virtual index_t param_count() const {
        index_t total = 0;
        for (const auto* a : arrays_) total += static_cast<index_t>(a->values.size());
        return total;
    }
    virtual void export_params(std::span<double> out) const {
        std::size_t pos = 0;
        for (const auto* a : arrays_)
            for (const auto& v : a->values) out[pos++] = static_cast<double>(v);
    }
    virtual void import_params(std::span<const double> in) {
        std::size_t pos = 0;
        for (auto* a : arrays_)
            for (auto& v : a->values) v = static_cast<T>(in[pos++]);
    }
    // Central-difference step for parameter `index`; quantized stores return
    // their grid step so perturbed values stay representable.
    virtual double fd_step(index_t) const { return 1e-5; }

    // Analytic gradient of the batch loss w.r.t. the continuous parameter
    // view, in export_params layout. Same chain rule as apply_gradients.
    virtual std::vector<double> param_gradients(std::span<const index_t> ids,
                                                const MatrixT<T>& grads) const {
        std::vector<double> flat(static_cast<std::size_t>(param_count()), 0.0);
        std::vector<index_t> offsets;
        index_t off = 0;
        for (const auto* a : arrays_) {
            offsets.push_back(off);
            off += static_cast<index_t>(a->values.size());
        }
        detail::DenseSink<T> sink(flat, std::move(offsets));
        backward(ids, grads, sink);
        return flat;
    }

    virtual void save(Checkpoint& out) const = 0;

protected:
    virtual void lookup_row(index_t id, T* out) const = 0;
    virtual void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                          GradSink<T>& sink) const = 0;

    void check_id(index_t id) const {
        if (id < 0 || id >= features_)
            throw std::invalid_argument("store: feature id " + std::to_string(id) +
                                        " out of range [0, " + std::to_string(features_) + ")");
    }
    void pre_update_checks(std::span<const index_t> ids, const MatrixT<T>& grads) const {
        if (frozen_) throw state_error("store: apply_gradients on a frozen store");
        if (grads.cols != dim_ || grads.rows != static_cast<index_t>(ids.size()))
            throw std::invalid_argument("store: gradient shape mismatch");
        for (index_t id : ids) check_id(id);
    }

    index_t features_;
    index_t dim_;
    bool frozen_ = false;
    std::int64_t step_ = 0;
    std::vector<ParamArray<T>*> arrays_;  // registered by subclasses, fixed order
};

using Store = StoreT<float>;

template <class T>
void seed_normal(std::vector<T>& values, Rng& rng, double stddev) {
    for (auto& v : values) v = static_cast<T>(rng.next_normal() * stddev);
}

// ---------------------------------------------------------------------------
// FullTable: the uncompressed n x d baseline.
// ---------------------------------------------------------------------------
template <class T>
class FullTableT final : public StoreT<T> {
public:
    FullTableT(index_t features, index_t dim, std::uint64_t seed) : StoreT<T>(features, dim) {
        table_.name = "table";
        table_.values.resize(static_cast<std::size_t>(features) * dim);
        Rng rng(seed);
        seed_normal(table_.values, rng, 0.1);
        this->arrays_ = {&table_};
    }

    const char* method() const override { return "full"; }
    ChunkType chunk_type() const override { return ChunkType::kFullTable; }

    std::uint64_t inference_bytes() const override {
        return MemoryModel::dense_bytes(this->features_, this->dim_);
    }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    MatrixT<T> to_matrix() const {
        MatrixT<T> m(this->features_, this->dim_);
        m.values = table_.values;
        return m;
    }
    std::vector<T>& raw_values() { return table_.values; }
    const std::vector<T>& raw_values() const { return table_.values; }

    void save(Checkpoint& out) const override;

protected:
    void lookup_row(index_t id, T* out) const override {
        const T* src = table_.values.data() + static_cast<std::size_t>(id) * this->dim_;
        std::copy(src, src + this->dim_, out);
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t base = ids[i] * this->dim_;
            const T* g = grads.row(static_cast<index_t>(i));
            for (index_t j = 0; j < this->dim_; ++j) sink.add(0, base + j, g[j]);
        }
    }

private:
    ParamArray<T> table_;
};

// ---------------------------------------------------------------------------
// DoubleHashTable: one shared m x d table, two hash functions, sum aggregation.
// ---------------------------------------------------------------------------
template <class T>
class DoubleHashTableT final : public StoreT<T> {
public:
    DoubleHashTableT(index_t features, index_t dim, index_t rows, std::uint64_t seed)
            : StoreT<T>(features, dim), rows_(rows), hashes_(seed, 2) {
        if (rows < 1) throw std::invalid_argument("double_hash: rows must be >= 1");
        table_.name = "table";
        table_.values.resize(static_cast<std::size_t>(rows) * dim);
        Rng rng(seed + 1);
        seed_normal(table_.values, rng, 0.1 / std::sqrt(2.0));
        this->arrays_ = {&table_};
    }

    const char* method() const override { return "double_hash"; }
    ChunkType chunk_type() const override { return ChunkType::kDoubleHashTable; }
    index_t rows() const { return rows_; }
    std::uint64_t hash_seed() const { return hashes_.seed(); }

    std::uint64_t inference_bytes() const override {
        return MemoryModel::dense_bytes(rows_, this->dim_);
    }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    const std::vector<T>& raw_values() const { return table_.values; }
    std::vector<T>& raw_values() { return table_.values; }
    std::pair<index_t, index_t> bucket_pair(index_t id) const {
        return {static_cast<index_t>(hashes_.hash(static_cast<std::uint64_t>(id), 0,
                                                  static_cast<std::uint64_t>(rows_))),
                static_cast<index_t>(hashes_.hash(static_cast<std::uint64_t>(id), 1,
                                                  static_cast<std::uint64_t>(rows_)))};
    }

    void save(Checkpoint& out) const override;

protected:
    void lookup_row(index_t id, T* out) const override {
        const auto [r1, r2] = bucket_pair(id);
        const T* a = table_.values.data() + static_cast<std::size_t>(r1) * this->dim_;
        const T* b = table_.values.data() + static_cast<std::size_t>(r2) * this->dim_;
        for (index_t j = 0; j < this->dim_; ++j) out[j] = a[j] + b[j];
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto [r1, r2] = bucket_pair(ids[i]);
            const T* g = grads.row(static_cast<index_t>(i));
            for (index_t j = 0; j < this->dim_; ++j) {
                sink.add(0, r1 * this->dim_ + j, g[j]);
                sink.add(0, r2 * this->dim_ + j, g[j]);
            }
        }
    }

private:
    index_t rows_;
    HashFamily hashes_;
    ParamArray<T> table_;
};

// ---------------------------------------------------------------------------
// CompoTable: quotient-remainder index pair, elementwise-product aggregation.
// The pair (x mod m1, (x div m1) mod m2) is injective whenever m1*m2 >= n.
// ---------------------------------------------------------------------------
template <class T>
class CompoTableT final : public StoreT<T> {
public:
    CompoTableT(index_t features, index_t dim, index_t m1, index_t m2, std::uint64_t seed)
            : StoreT<T>(features, dim), m1_(m1), m2_(m2) {
        if (m1 < 1 || m2 < 1) throw std::invalid_argument("compo: table sizes must be >= 1");
        if (static_cast<std::uint64_t>(m1) * static_cast<std::uint64_t>(m2) <
            static_cast<std::uint64_t>(features))
            throw std::invalid_argument("compo: m1*m2 must cover the feature count");
        first_.name = "first";
        second_.name = "second";
        first_.values.resize(static_cast<std::size_t>(m1) * dim);
        second_.values.resize(static_cast<std::size_t>(m2) * dim);
        Rng rng(seed);
        const double sd = std::sqrt(0.1);  // product of the two init scales ~ 0.1
        seed_normal(first_.values, rng, sd);
        seed_normal(second_.values, rng, sd);
        this->arrays_ = {&first_, &second_};
    }

    const char* method() const override { return "compo"; }
    ChunkType chunk_type() const override { return ChunkType::kCompoTable; }
    index_t m1() const { return m1_; }
    index_t m2() const { return m2_; }
    std::pair<index_t, index_t> index_pair(index_t id) const {
        return {id % m1_, (id / m1_) % m2_};
    }

    std::uint64_t inference_bytes() const override {
        return MemoryModel::dense_bytes(m1_ + m2_, this->dim_);
    }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    void save(Checkpoint& out) const override;
    std::vector<T>& raw_first() { return first_.values; }
    std::vector<T>& raw_second() { return second_.values; }

protected:
    void lookup_row(index_t id, T* out) const override {
        const auto [i1, i2] = index_pair(id);
        const T* a = first_.values.data() + static_cast<std::size_t>(i1) * this->dim_;
        const T* b = second_.values.data() + static_cast<std::size_t>(i2) * this->dim_;
        for (index_t j = 0; j < this->dim_; ++j) out[j] = a[j] * b[j];
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto [i1, i2] = index_pair(ids[i]);
            const T* a = first_.values.data() + static_cast<std::size_t>(i1) * this->dim_;
            const T* b = second_.values.data() + static_cast<std::size_t>(i2) * this->dim_;
            const T* g = grads.row(static_cast<index_t>(i));
            for (index_t j = 0; j < this->dim_; ++j) {
                sink.add(0, i1 * this->dim_ + j, g[j] * b[j]);
                sink.add(1, i2 * this->dim_ + j, g[j] * a[j]);
            }
        }
    }

private:
    index_t m1_, m2_;
    ParamArray<T> first_, second_;
};

// ---------------------------------------------------------------------------
// MEmComTable: one hashed table plus per-feature scale and bias scalars.
// ---------------------------------------------------------------------------
template <class T>
class MEmComTableT final : public StoreT<T> {
public:
    MEmComTableT(index_t features, index_t dim, index_t rows, std::uint64_t seed)
            : StoreT<T>(features, dim), rows_(rows), hashes_(seed, 1) {
        if (rows < 1) throw std::invalid_argument("memcom: rows must be >= 1");
        table_.name = "table";
        scale_.name = "scale";
        bias_.name = "bias";
        table_.values.resize(static_cast<std::size_t>(rows) * dim);
        scale_.values.assign(static_cast<std::size_t>(features), T(1));
        bias_.values.assign(static_cast<std::size_t>(features), T(0));
        Rng rng(seed + 1);
        seed_normal(table_.values, rng, 0.1);
        this->arrays_ = {&table_, &scale_, &bias_};
    }

    const char* method() const override { return "memcom"; }
    ChunkType chunk_type() const override { return ChunkType::kMEmComTable; }
    index_t rows() const { return rows_; }
    std::uint64_t hash_seed() const { return hashes_.seed(); }
    index_t bucket(index_t id) const {
        return static_cast<index_t>(hashes_.hash(static_cast<std::uint64_t>(id), 0,
                                                 static_cast<std::uint64_t>(rows_)));
    }

    std::uint64_t inference_bytes() const override {
        return MemoryModel::dense_bytes(rows_, this->dim_) +
               2 * MemoryModel::kF32 * static_cast<std::uint64_t>(this->features_);
    }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    void save(Checkpoint& out) const override;
    std::vector<T>& raw_table() { return table_.values; }
    std::vector<T>& raw_scale() { return scale_.values; }
    std::vector<T>& raw_bias() { return bias_.values; }

protected:
    void lookup_row(index_t id, T* out) const override {
        const T* row = table_.values.data() + static_cast<std::size_t>(bucket(id)) * this->dim_;
        const T s = scale_.values[id];
        const T b = bias_.values[id];
        for (index_t j = 0; j < this->dim_; ++j) out[j] = row[j] * s + b;
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t id = ids[i];
            const index_t r = bucket(id);
            const T* row = table_.values.data() + static_cast<std::size_t>(r) * this->dim_;
            const T s = scale_.values[id];
            const T* g = grads.row(static_cast<index_t>(i));
            T gscale = 0, gbias = 0;
            for (index_t j = 0; j < this->dim_; ++j) {
                sink.add(0, r * this->dim_ + j, g[j] * s);
                gscale += g[j] * row[j];
                gbias += g[j];
            }
            sink.add(1, id, gscale);
            sink.add(2, id, gbias);
        }
    }

private:
    index_t rows_;
    HashFamily hashes_;
    ParamArray<T> table_, scale_, bias_;
};

// ---------------------------------------------------------------------------
// RobeArray: a single 1-D parameter array; embeddings are concatenations of
// d/c chunks read at hashed offsets, wrapping modulo the array length.
// ---------------------------------------------------------------------------
template <class T>
class RobeArrayT final : public StoreT<T> {
public:
    RobeArrayT(index_t features, index_t dim, index_t array_len, index_t chunk,
               std::uint64_t seed)
            : StoreT<T>(features, dim), len_(array_len), chunk_(chunk), hashes_(seed, 1) {
        if (chunk < 1 || dim % chunk != 0)
            throw std::invalid_argument("robe: chunk size must divide the embedding width");
        if (array_len < chunk) throw std::invalid_argument("robe: array shorter than a chunk");
        array_.name = "array";
        array_.values.resize(static_cast<std::size_t>(array_len));
        Rng rng(seed + 1);
        seed_normal(array_.values, rng, 0.1);
        this->arrays_ = {&array_};
    }

    const char* method() const override { return "robe"; }
    ChunkType chunk_type() const override { return ChunkType::kRobeArray; }
    index_t array_len() const { return len_; }
    index_t chunk_size() const { return chunk_; }
    std::uint64_t hash_seed() const { return hashes_.seed(); }

    index_t chunk_offset(index_t id, index_t chunk_idx) const {
        const index_t chunks = this->dim_ / chunk_;
        const std::uint64_t key =
                static_cast<std::uint64_t>(id) * static_cast<std::uint64_t>(chunks) +
                static_cast<std::uint64_t>(chunk_idx);
        return static_cast<index_t>(hashes_.hash(key, 0, static_cast<std::uint64_t>(len_)));
    }

    std::uint64_t inference_bytes() const override {
        return MemoryModel::kF32 * static_cast<std::uint64_t>(len_);
    }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    void save(Checkpoint& out) const override;
    std::vector<T>& raw_values() { return array_.values; }

protected:
    void lookup_row(index_t id, T* out) const override {
        const index_t chunks = this->dim_ / chunk_;
        for (index_t cidx = 0; cidx < chunks; ++cidx) {
            const index_t off = chunk_offset(id, cidx);
            for (index_t i = 0; i < chunk_; ++i)
                out[cidx * chunk_ + i] = array_.values[(off + i) % len_];
        }
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        const index_t chunks = this->dim_ / chunk_;
        for (std::size_t s = 0; s < ids.size(); ++s) {
            const T* g = grads.row(static_cast<index_t>(s));
            for (index_t cidx = 0; cidx < chunks; ++cidx) {
                const index_t off = chunk_offset(ids[s], cidx);
                for (index_t i = 0; i < chunk_; ++i)
                    sink.add(0, (off + i) % len_, g[cidx * chunk_ + i]);
            }
        }
    }

private:
    index_t len_, chunk_;
    HashFamily hashes_;
    ParamArray<T> array_;
};

// ---------------------------------------------------------------------------
// TtRecTable: tensor-train factorized table. Row sizes factor as n <= prod m_i
// and the embedding width as d = prod d_i; cores have shape
// (R_{i-1}, m_i, d_i, R_i) with R_0 = R_t = 1. A row is the matrix product of
// the core slices selected by the mixed-radix digits of the feature id.
// ---------------------------------------------------------------------------
template <class T>
class TtRecTableT final : public StoreT<T> {
public:
    TtRecTableT(index_t features, index_t dim, std::vector<index_t> row_factors,
                std::vector<index_t> col_factors, std::vector<index_t> ranks,
                std::uint64_t seed)
            : StoreT<T>(features, dim),
              row_factors_(std::move(row_factors)),
              col_factors_(std::move(col_factors)) {
        const std::size_t t = row_factors_.size();
        if (t < 2 || col_factors_.size() != t || ranks.size() != t - 1)
            throw std::invalid_argument("ttrec: need t>=2 cores with t-1 inner ranks");
        index_t row_prod = 1, col_prod = 1;
        for (std::size_t i = 0; i < t; ++i) {
            row_prod *= row_factors_[i];
            col_prod *= col_factors_[i];
        }
        if (row_prod < features) throw std::invalid_argument("ttrec: prod m_i must cover n");
        if (col_prod != dim) throw std::invalid_argument("ttrec: prod d_i must equal d");
        ranks_.push_back(1);
        for (index_t r : ranks) {
            if (r < 1) throw std::invalid_argument("ttrec: ranks must be >= 1");
            ranks_.push_back(r);
        }
        ranks_.push_back(1);
        cores_.resize(t);
        double rank_prod = 1;
        for (std::size_t i = 0; i + 1 < ranks_.size(); ++i) rank_prod *= ranks_[i + 1];
        rank_prod /= ranks_.back();
        // element scale so that a reconstructed row has variance ~ 0.01
        const double sd = std::pow(0.01 / std::max(rank_prod, 1.0), 1.0 / (2.0 * t));
        Rng rng(seed);
        this->arrays_.clear();
        for (std::size_t i = 0; i < t; ++i) {
            cores_[i].name = "core" + std::to_string(i);
            cores_[i].values.resize(static_cast<std::size_t>(ranks_[i]) * row_factors_[i] *
                                    col_factors_[i] * ranks_[i + 1]);
            seed_normal(cores_[i].values, rng, sd);
            this->arrays_.push_back(&cores_[i]);
        }
    }

    const char* method() const override { return "ttrec"; }
    ChunkType chunk_type() const override { return ChunkType::kTtRecTable; }
    const std::vector<index_t>& row_factors() const { return row_factors_; }
    const std::vector<index_t>& col_factors() const { return col_factors_; }
    const std::vector<index_t>& ranks() const { return ranks_; }

    std::uint64_t core_elements() const {
        std::uint64_t total = 0;
        for (const auto& c : cores_) total += c.values.size();
        return total;
    }
    std::uint64_t inference_bytes() const override { return MemoryModel::kF32 * core_elements(); }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    // Direct core access for tests that plant exact decompositions.
    std::vector<T>& core_values(std::size_t i) { return cores_[i].values; }

    void save(Checkpoint& out) const override;

protected:
    // Core layout: cores_[i] is (R_i, m_i, d_i, R_{i+1}) row-major.
    std::vector<index_t> digits(index_t id) const {
        std::vector<index_t> out(row_factors_.size());
        index_t x = id;
        for (std::size_t i = 0; i < row_factors_.size(); ++i) {
            out[i] = x % row_factors_[i];
            x /= row_factors_[i];
        }
        return out;
    }

    T core_at(std::size_t c, index_t r0, index_t m, index_t a, index_t r1) const {
        const auto& core = cores_[c];
        const index_t mi = row_factors_[c], di = col_factors_[c], R1 = ranks_[c + 1];
        return core.values[((static_cast<std::size_t>(r0) * mi + m) * di + a) * R1 + r1];
    }

    // Left accumulators: L_c has shape (prod_{i<=c} d_i) x R_{c+1}.
    std::vector<std::vector<T>> left_chain(const std::vector<index_t>& dg) const {
        const std::size_t t = cores_.size();
        std::vector<std::vector<T>> left(t);
        index_t p = 1;
        std::vector<T> prev = {T(1)};  // shape 1 x R_0 (= 1x1)
        index_t prev_rank = 1;
        for (std::size_t c = 0; c < t; ++c) {
            const index_t di = col_factors_[c], r1 = ranks_[c + 1];
            left[c].assign(static_cast<std::size_t>(p) * di * r1, T(0));
            for (index_t row = 0; row < p; ++row)
                for (index_t a = 0; a < di; ++a)
                    for (index_t k = 0; k < r1; ++k) {
                        T acc = 0;
                        for (index_t r = 0; r < prev_rank; ++r)
                            acc += prev[row * prev_rank + r] * core_at(c, r, dg[c], a, k);
                        left[c][(row * di + a) * r1 + k] = acc;
                    }
            prev = left[c];
            prev_rank = r1;
            p *= di;
        }
        return left;
    }

    void lookup_row(index_t id, T* out) const override {
        const auto dg = digits(id);
        const auto left = left_chain(dg);
        const auto& last = left.back();
        std::copy(last.begin(), last.end(), out);  // final rank is 1
    }

    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        const std::size_t t = cores_.size();
        for (std::size_t s = 0; s < ids.size(); ++s) {
            const auto dg = digits(ids[s]);
            const auto left = left_chain(dg);
            const T* gout = grads.row(static_cast<index_t>(s));
            // Right accumulators R_c: shape R_c x (prod_{i>=c} d_i), built
            // from the tail; dL/dG_c combines left[c-1], gout and right[c+1].
            std::vector<std::vector<T>> right(t + 1);
            right[t] = {T(1)};
            index_t q = 1;
            for (std::size_t c = t; c-- > 0;) {
                const index_t di = col_factors_[c], r0 = ranks_[c], r1 = ranks_[c + 1];
                right[c].assign(static_cast<std::size_t>(r0) * di * q, T(0));
                for (index_t r = 0; r < r0; ++r)
                    for (index_t a = 0; a < di; ++a)
                        for (index_t col = 0; col < q; ++col) {
                            T acc = 0;
                            for (index_t k = 0; k < r1; ++k)
                                acc += core_at(c, r, dg[c], a, k) * right[c + 1][k * q + col];
                            right[c][(r * di + a) * q + col] = acc;
                        }
                q *= di;
            }
            // gradient for core c: dG_c(r, a, k) =
            //   sum_{P,Q} left_{c-1}(P, r) * gout[(P, a, Q)] * right_{c+1}(k, Q)
            index_t p = 1;
            for (std::size_t c = 0; c < t; ++c) {
                const index_t di = col_factors_[c], r0 = ranks_[c], r1 = ranks_[c + 1];
                const index_t tail = this->dim_ / (p * di);
                const std::vector<T>* lprev = (c == 0) ? nullptr : &left[c - 1];
                const auto& rnext = right[c + 1];
                const index_t mi = row_factors_[c];
                for (index_t r = 0; r < r0; ++r)
                    for (index_t a = 0; a < di; ++a)
                        for (index_t k = 0; k < r1; ++k) {
                            T acc = 0;
                            for (index_t P = 0; P < p; ++P) {
                                const T lv = lprev ? (*lprev)[P * r0 + r] : T(1);
                                if (lv == T(0)) continue;
                                for (index_t Q = 0; Q < tail; ++Q)
                                    acc += lv * gout[(P * di + a) * tail + Q] *
                                           rnext[k * tail + Q];
                            }
                            const index_t elem =
                                    ((r * mi + dg[c]) * di + a) * r1 + k;
                            sink.add(static_cast<int>(c), elem, acc);
                        }
                p *= di;
            }
        }
    }

private:
    std::vector<index_t> row_factors_, col_factors_, ranks_;
    std::vector<ParamArray<T>> cores_;
};

}  // namespace emsq

#include "emsq/stores_intra.hpp"  // quantized / dim-reduction / pruning / adaptive stores
