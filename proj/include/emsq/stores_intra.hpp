#pragma once

// Intra-feature stores: low-precision storage, learned-scale quantization,
// mixed dimensions, magnitude pruning, and the frequency-adaptive table.
// Included at the end of stores.hpp.

#include <cstring>

namespace emsq {

enum class StorageType { kI8, kI16, kF16 };
enum class QuantGranularity { kPerTable, kPerRow };

inline const char* to_string(StorageType t) {
    switch (t) {
        case StorageType::kI8: return "i8";
        case StorageType::kI16: return "i16";
        case StorageType::kF16: return "f16";
    }
    return "?";
}
inline StorageType storage_type_from(const std::string& s) {
    if (s == "i8") return StorageType::kI8;
    if (s == "i16") return StorageType::kI16;
    if (s == "f16") return StorageType::kF16;
    throw config_error("unknown storage type: " + s);
}
inline std::uint64_t storage_width(StorageType t) {
    return t == StorageType::kI8 ? MemoryModel::kI8
                                 : (t == StorageType::kI16 ? MemoryModel::kI16 : MemoryModel::kF16);
}

// ---------------------------------------------------------------------------
// QuantizedTable: low-precision storage with fixed affine grids (or raw FP16).
// Training keeps FP32 optimizer moments; updates dequantize, step, and
// requantize with the configured rounding. Scale/bias granularity is either
// one pair per row (counted as payload, 8 bytes each) or one pair for the
// whole table (treated as two config constants, not payload).
// ---------------------------------------------------------------------------
template <class T>
class QuantizedTableT final : public StoreT<T> {
public:
    QuantizedTableT(index_t features, index_t dim, StorageType dtype, Rounding rounding,
                    QuantGranularity gran, double clip, std::uint64_t seed)
            : StoreT<T>(features, dim),
              dtype_(dtype),
              rounding_(rounding),
              gran_(gran),
              rng_(seed ^ 0x71c3u) {
        alloc_codes();
        if (dtype_ != StorageType::kF16) {
            const index_t pairs = gran_ == QuantGranularity::kPerRow ? features : 1;
            const T scale = static_cast<T>(2.0 * clip / levels());
            scales_.assign(pairs, scale);
            biases_.assign(pairs, static_cast<T>(-clip));
        }
        // seeded init, written through the grid so state matches storage
        Rng init(seed);
        std::vector<T> row(dim);
        for (index_t r = 0; r < features; ++r) {
            for (auto& v : row) v = static_cast<T>(init.next_normal() * 0.1);
            for (index_t j = 0; j < dim; ++j) write_value(r * dim + j, row[j], Rounding::kNearest);
        }
    }

    // Exact per-row calibration of an existing matrix: scale=(max-min)/levels,
    // bias=min, nearest writes.
    static QuantizedTableT from_matrix(const MatrixT<T>& m, StorageType dtype,
                                       Rounding rounding = Rounding::kNearest,
                                       std::uint64_t seed = 0) {
        QuantizedTableT q(m.rows, m.cols, dtype, rounding, QuantGranularity::kPerRow, 1.0, seed);
        if (dtype != StorageType::kF16) {
            for (index_t r = 0; r < m.rows; ++r) {
                auto [s, b] = qz::calibrate(m.row(r), m.cols, q.levels());
                q.scales_[r] = s;
                q.biases_[r] = b;
            }
        }
        for (std::size_t i = 0; i < m.values.size(); ++i)
            q.write_value(static_cast<index_t>(i), m.values[i], Rounding::kNearest);
        return q;
    }

    const char* method() const override { return dtype_ == StorageType::kF16 ? "fp16" : "int8_16"; }
    ChunkType chunk_type() const override { return ChunkType::kQuantizedTable; }
    StorageType dtype() const { return dtype_; }
    Rounding rounding() const { return rounding_; }
    QuantGranularity granularity() const { return gran_; }
    int levels() const { return dtype_ == StorageType::kI8 ? qz::kLevels8 : qz::kLevels16; }

    T value_at(index_t idx) const {
        if (dtype_ == StorageType::kF16) return static_cast<T>(f16::to_f32(half_[idx]));
        return qz::decode(code_at(idx), scale_of(idx), bias_of(idx));
    }
    void write_value(index_t idx, T v, Rounding rounding) {
        if (dtype_ == StorageType::kF16) {
            half_[idx] = rounding == Rounding::kStochastic
                                 ? f16::round_stochastic(static_cast<float>(v), rng_)
                                 : f16::from_f32(static_cast<float>(v));
            return;
        }
        set_code(idx, qz::encode(v, scale_of(idx), bias_of(idx), levels(), rounding, rng_));
    }

    std::uint64_t inference_bytes() const override {
        const std::uint64_t nd = static_cast<std::uint64_t>(this->features_) * this->dim_;
        std::uint64_t bytes = nd * storage_width(dtype_);
        if (dtype_ != StorageType::kF16 && gran_ == QuantGranularity::kPerRow)
            bytes += 2 * MemoryModel::kF32 * static_cast<std::uint64_t>(this->features_);
        return bytes;
    }
    std::uint64_t training_bytes() const override {
        const std::uint64_t nd = static_cast<std::uint64_t>(this->features_) * this->dim_;
        return inference_bytes() + 2 * MemoryModel::kF32 * nd;  // FP32 Adam moments
    }

    index_t param_count() const override { return this->features_ * this->dim_; }
    void export_params(std::span<double> out) const override {
        for (index_t i = 0; i < param_count(); ++i) out[i] = static_cast<double>(value_at(i));
    }
    void import_params(std::span<const double> in) override {
        for (index_t i = 0; i < param_count(); ++i)
            write_value(i, static_cast<T>(in[i]), Rounding::kNearest);
    }
    double fd_step(index_t idx) const override {
        if (dtype_ == StorageType::kF16) {
            const auto [lo, hi] = f16::bracket(static_cast<float>(value_at(idx)));
            return std::max(static_cast<double>(hi) - lo, 1e-6);
        }
        return static_cast<double>(scale_of(idx));
    }
    std::vector<double> param_gradients(std::span<const index_t> ids,
                                        const MatrixT<T>& grads) const override {
        std::vector<double> flat(static_cast<std::size_t>(param_count()), 0.0);
        detail::DenseSink<T> sink(flat, {0});
        backward(ids, grads, sink);
        return flat;
    }

    void apply_gradients(std::span<const index_t> ids, const MatrixT<T>& grads,
                         const OptimizerConfig& opt) override {
        this->pre_update_checks(ids, grads);
        detail::SparseSink<T> sink(1);
        backward(ids, grads, sink);
        ++this->step_;
        const std::size_t nd = static_cast<std::size_t>(this->features_) * this->dim_;
        if (opt.kind == OptimizerConfig::Kind::kAdam && moment1_.size() != nd) {
            moment1_.assign(nd, T(0));
            moment2_.assign(nd, T(0));
        }
        for (const auto& [idx, g] : sink.grads[0]) {
            T w = value_at(idx);
            if (opt.kind == OptimizerConfig::Kind::kSgd)
                w -= static_cast<T>(opt.lr) * g;
            else
                detail::adam_element(w, moment1_[idx], moment2_[idx], g, opt, this->step_);
            write_value(idx, w, rounding_);
        }
    }

    void save(Checkpoint& out) const override;

protected:
    void lookup_row(index_t id, T* out) const override {
        const index_t base = id * this->dim_;
        if (dtype_ == StorageType::kF16) {
            for (index_t j = 0; j < this->dim_; ++j)
                out[j] = static_cast<T>(f16::to_f32(half_[base + j]));
            return;
        }
        const T s = scale_of(base), b = bias_of(base);
        if (dtype_ == StorageType::kI8) {
            for (index_t j = 0; j < this->dim_; ++j)
                out[j] = static_cast<T>(static_cast<int>(codes8_[base + j]) + 128) * s + b;
        } else {
            for (index_t j = 0; j < this->dim_; ++j)
                out[j] = static_cast<T>(static_cast<int>(codes16_[base + j]) + 32768) * s + b;
        }
    }
    // Straight-through: the composed derivative w.r.t. the stored value is the
    // upstream gradient.
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t base = ids[i] * this->dim_;
            const T* g = grads.row(static_cast<index_t>(i));
            for (index_t j = 0; j < this->dim_; ++j) sink.add(0, base + j, g[j]);
        }
    }

public:
    // serialization needs raw access
    const std::vector<std::int8_t>& codes8() const { return codes8_; }
    const std::vector<std::int16_t>& codes16() const { return codes16_; }
    const std::vector<std::uint16_t>& half_bits() const { return half_; }
    std::vector<std::int8_t>& codes8() { return codes8_; }
    std::vector<std::int16_t>& codes16() { return codes16_; }
    std::vector<std::uint16_t>& half_bits() { return half_; }
    std::vector<T>& scales() { return scales_; }
    std::vector<T>& biases() { return biases_; }
    const std::vector<T>& scales() const { return scales_; }
    const std::vector<T>& biases() const { return biases_; }

private:
    void alloc_codes() {
        const std::size_t nd = static_cast<std::size_t>(this->features_) * this->dim_;
        switch (dtype_) {
            case StorageType::kI8: codes8_.assign(nd, 0); break;
            case StorageType::kI16: codes16_.assign(nd, 0); break;
            case StorageType::kF16: half_.assign(nd, 0); break;
        }
    }
    int code_at(index_t idx) const {
        return dtype_ == StorageType::kI8 ? static_cast<int>(codes8_[idx]) + 128
                                          : static_cast<int>(codes16_[idx]) + 32768;
    }
    void set_code(index_t idx, int code) {
        if (dtype_ == StorageType::kI8)
            codes8_[idx] = static_cast<std::int8_t>(code - 128);
        else
            codes16_[idx] = static_cast<std::int16_t>(code - 32768);
    }
    T scale_of(index_t idx) const {
        return scales_[gran_ == QuantGranularity::kPerRow ? idx / this->dim_ : 0];
    }
    T bias_of(index_t idx) const {
        return biases_[gran_ == QuantGranularity::kPerRow ? idx / this->dim_ : 0];
    }

    StorageType dtype_;
    Rounding rounding_;
    QuantGranularity gran_;
    std::vector<std::int8_t> codes8_;
    std::vector<std::int16_t> codes16_;
    std::vector<std::uint16_t> half_;
    std::vector<T> scales_, biases_;
    std::vector<T> moment1_, moment2_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// AlptTable: symmetric integer storage with a learnable per-row scale.
// Weights update through the straight-through estimator and requantize
// stochastically; scales train alternately with an LSQ-style derivative
// evaluated at the freshly updated weights.
// ---------------------------------------------------------------------------
template <class T>
class AlptTableT final : public StoreT<T> {
public:
    AlptTableT(index_t features, index_t dim, StorageType dtype, std::uint64_t seed)
            : StoreT<T>(features, dim), dtype_(dtype), rng_(seed ^ 0xa19fu) {
        if (dtype == StorageType::kF16) throw std::invalid_argument("alpt: integer storage only");
        qmax_ = dtype == StorageType::kI8 ? 127 : 32767;
        const std::size_t nd = static_cast<std::size_t>(features) * dim;
        codes8_.assign(dtype == StorageType::kI8 ? nd : 0, 0);
        codes16_.assign(dtype == StorageType::kI16 ? nd : 0, 0);
        scales_.name = "scales";
        scales_.values.assign(features, T(0));
        Rng init(seed);
        std::vector<T> row(dim);
        for (index_t r = 0; r < features; ++r) {
            T mean_abs = 0;
            for (auto& v : row) {
                v = static_cast<T>(init.next_normal() * 0.1);
                mean_abs += std::abs(v);
            }
            mean_abs /= static_cast<T>(dim);
            const T s = std::max<T>(2 * mean_abs / static_cast<T>(std::sqrt((double)qmax_)),
                                    static_cast<T>(1e-8));
            scales_.values[r] = s;
            for (index_t j = 0; j < dim; ++j)
                set_code(r * dim + j, quantize_sym(row[j], s, Rounding::kNearest));
        }
    }

    const char* method() const override { return "alpt"; }
    ChunkType chunk_type() const override { return ChunkType::kAlptTable; }
    StorageType dtype() const { return dtype_; }

    std::uint64_t inference_bytes() const override {
        const std::uint64_t nd = static_cast<std::uint64_t>(this->features_) * this->dim_;
        return nd * storage_width(dtype_) +
               MemoryModel::kF32 * static_cast<std::uint64_t>(this->features_);
    }
    std::uint64_t training_bytes() const override {
        const std::uint64_t nd = static_cast<std::uint64_t>(this->features_) * this->dim_;
        const std::uint64_t n = static_cast<std::uint64_t>(this->features_);
        return inference_bytes() + 2 * MemoryModel::kF32 * nd + 2 * MemoryModel::kF32 * n;
    }

    // parameter view: [values (n*d), scales (n)]
    index_t param_count() const override {
        return this->features_ * this->dim_ + this->features_;
    }
    void export_params(std::span<double> out) const override {
        const index_t nd = this->features_ * this->dim_;
        for (index_t i = 0; i < nd; ++i) out[i] = static_cast<double>(value_at(i));
        for (index_t r = 0; r < this->features_; ++r)
            out[nd + r] = static_cast<double>(scales_.values[r]);
    }
    void import_params(std::span<const double> in) override {
        const index_t nd = this->features_ * this->dim_;
        for (index_t r = 0; r < this->features_; ++r)
            scales_.values[r] = static_cast<T>(in[nd + r]);
        for (index_t i = 0; i < nd; ++i)
            set_code(i, quantize_sym(static_cast<T>(in[i]), scales_.values[i / this->dim_],
                                     Rounding::kNearest));
    }
    double fd_step(index_t idx) const override {
        const index_t nd = this->features_ * this->dim_;
        if (idx < nd) return static_cast<double>(scales_.values[idx / this->dim_]);
        // small enough that re-deriving codes at the perturbed scale cannot
        // flip any stored code
        return static_cast<double>(scales_.values[idx - nd]) / (4.0 * qmax_);
    }
    std::vector<double> param_gradients(std::span<const index_t> ids,
                                        const MatrixT<T>& grads) const override {
        std::vector<double> flat(static_cast<std::size_t>(param_count()), 0.0);
        detail::DenseSink<T> sink(flat, {0, this->features_ * this->dim_});
        backward(ids, grads, sink);
        return flat;
    }

    void apply_gradients(std::span<const index_t> ids, const MatrixT<T>& grads,
                         const OptimizerConfig& opt) override {
        this->pre_update_checks(ids, grads);
        detail::SparseSink<T> sink(2);
        backward(ids, grads, sink);
        ++this->step_;
        const std::size_t nd = static_cast<std::size_t>(this->features_) * this->dim_;
        if (opt.kind == OptimizerConfig::Kind::kAdam && moment1_.size() != nd) {
            moment1_.assign(nd, T(0));
            moment2_.assign(nd, T(0));
        }
        // 1) weight step at dequantized values
        std::map<index_t, T> fresh;
        for (const auto& [idx, g] : sink.grads[0]) {
            T w = value_at(idx);
            if (opt.kind == OptimizerConfig::Kind::kSgd)
                w -= static_cast<T>(opt.lr) * g;
            else
                detail::adam_element(w, moment1_[idx], moment2_[idx], g, opt, this->step_);
            fresh[idx] = w;
        }
        // 2) scale step with the LSQ derivative at the fresh weights
        std::map<index_t, T> scale_grads;
        for (const auto& [idx, g] : sink.grads[0]) {
            const index_t row = idx / this->dim_;
            const T s = scales_.values[row];
            const double u = static_cast<double>(fresh[idx]) / static_cast<double>(s);
            double r;
            if (u >= qmax_)
                r = qmax_;
            else if (u <= -qmax_)
                r = -qmax_;
            else
                r = std::floor(u + 0.5) - u;
            scale_grads[row] += g * static_cast<T>(r);
        }
        detail::apply_sparse_update(scales_, scale_grads, opt, this->step_);
        for (auto& [row, unused] : scale_grads)
            scales_.values[row] = std::max<T>(scales_.values[row], static_cast<T>(1e-8));
        // 3) requantize the fresh weights on the updated grid
        for (const auto& [idx, w] : fresh)
            set_code(idx, quantize_sym(w, scales_.values[idx / this->dim_],
                                       Rounding::kStochastic));
    }

    void save(Checkpoint& out) const override;

    T value_at(index_t idx) const {
        return static_cast<T>(code_at(idx)) * scales_.values[idx / this->dim_];
    }
    const std::vector<std::int8_t>& codes8() const { return codes8_; }
    const std::vector<std::int16_t>& codes16() const { return codes16_; }
    std::vector<std::int8_t>& codes8() { return codes8_; }
    std::vector<std::int16_t>& codes16() { return codes16_; }
    std::vector<T>& scales() { return scales_.values; }
    const std::vector<T>& scales() const { return scales_.values; }

protected:
    void lookup_row(index_t id, T* out) const override {
        const index_t base = id * this->dim_;
        const T s = scales_.values[id];
        for (index_t j = 0; j < this->dim_; ++j)
            out[j] = static_cast<T>(code_at(base + j)) * s;
    }
    // values: straight-through; scales: exact derivative of q*s at fixed codes
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t id = ids[i];
            const index_t base = id * this->dim_;
            const T* g = grads.row(static_cast<index_t>(i));
            T gs = 0;
            for (index_t j = 0; j < this->dim_; ++j) {
                sink.add(0, base + j, g[j]);
                gs += g[j] * static_cast<T>(code_at(base + j));
            }
            sink.add(1, id, gs);
        }
    }

private:
    int code_at(index_t idx) const {
        return dtype_ == StorageType::kI8 ? static_cast<int>(codes8_[idx])
                                          : static_cast<int>(codes16_[idx]);
    }
    void set_code(index_t idx, int code) {
        if (dtype_ == StorageType::kI8)
            codes8_[idx] = static_cast<std::int8_t>(code);
        else
            codes16_[idx] = static_cast<std::int16_t>(code);
    }
    int quantize_sym(T v, T s, Rounding rounding) {
        const double u = static_cast<double>(v) / static_cast<double>(s);
        int code;
        if (rounding == Rounding::kNearest) {
            code = static_cast<int>(std::floor(u + 0.5));
        } else {
            const double lo = std::floor(u);
            code = static_cast<int>(lo) + (rng_.next_double() < u - lo ? 1 : 0);
        }
        return std::clamp(code, -qmax_, qmax_);
    }

    StorageType dtype_;
    int qmax_;
    std::vector<std::int8_t> codes8_;
    std::vector<std::int16_t> codes16_;
    ParamArray<T> scales_;
    std::vector<T> moment1_, moment2_;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// MixedDimTable: per-field reduced widths d'_f with learned projections back
// to the shared width d. d'_f = clamp(round(lambda * p_f^alpha), 1, d) with
// p_f the inverse field cardinality; lambda is solved by the budget module.
// ---------------------------------------------------------------------------
template <class T>
class MixedDimTableT final : public StoreT<T> {
public:
    MixedDimTableT(FeatureSpace space, index_t dim, std::vector<index_t> dims, double alpha,
                   double lambda, std::uint64_t seed)
            : StoreT<T>(space.total_features(), dim),
              space_(std::move(space)),
              dims_(std::move(dims)),
              alpha_(alpha),
              lambda_(lambda) {
        const index_t k = space_.field_count();
        if (static_cast<index_t>(dims_.size()) != k)
            throw std::invalid_argument("mde: one reduced dim per field required");
        tables_.resize(k);
        projections_.resize(k);
        Rng rng(seed);
        for (index_t f = 0; f < k; ++f) {
            const index_t dd = dims_[f];
            if (dd < 1 || dd > dim) throw std::invalid_argument("mde: reduced dim out of range");
            tables_[f].name = "table" + std::to_string(f);
            projections_[f].name = "proj" + std::to_string(f);
            tables_[f].values.resize(static_cast<std::size_t>(space_.cardinality(f)) * dd);
            projections_[f].values.resize(static_cast<std::size_t>(dd) * dim);
            const double sd = std::pow(0.01 / static_cast<double>(dd), 0.25);
            seed_normal(tables_[f].values, rng, sd);
            seed_normal(projections_[f].values, rng, sd);
        }
        for (index_t f = 0; f < k; ++f) this->arrays_.push_back(&tables_[f]);
        for (index_t f = 0; f < k; ++f) this->arrays_.push_back(&projections_[f]);
    }

    const char* method() const override { return "mde"; }
    ChunkType chunk_type() const override { return ChunkType::kMixedDimTable; }
    const std::vector<index_t>& field_dims() const { return dims_; }
    double alpha() const { return alpha_; }
    double lambda() const { return lambda_; }
    const FeatureSpace& space() const { return space_; }

    std::uint64_t inference_bytes() const override {
        std::uint64_t total = 0;
        for (index_t f = 0; f < space_.field_count(); ++f)
            total += MemoryModel::kF32 * (static_cast<std::uint64_t>(space_.cardinality(f)) *
                                                  dims_[f] +
                                          static_cast<std::uint64_t>(dims_[f]) * this->dim_);
        return total;
    }
    std::uint64_t training_bytes() const override { return 3 * inference_bytes(); }

    void save(Checkpoint& out) const override;

protected:
    void lookup_row(index_t id, T* out) const override {
        const index_t f = space_.field_of(id);
        const index_t local = id - space_.offset(f);
        const index_t dd = dims_[f];
        const T* row = tables_[f].values.data() + static_cast<std::size_t>(local) * dd;
        const T* proj = projections_[f].values.data();
        std::fill(out, out + this->dim_, T(0));
        for (index_t a = 0; a < dd; ++a) {
            const T r = row[a];
            const T* p = proj + static_cast<std::size_t>(a) * this->dim_;
            for (index_t j = 0; j < this->dim_; ++j) out[j] += r * p[j];
        }
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        const index_t k = space_.field_count();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t id = ids[i];
            const index_t f = space_.field_of(id);
            const index_t local = id - space_.offset(f);
            const index_t dd = dims_[f];
            const T* row = tables_[f].values.data() + static_cast<std::size_t>(local) * dd;
            const T* proj = projections_[f].values.data();
            const T* g = grads.row(static_cast<index_t>(i));
            for (index_t a = 0; a < dd; ++a) {
                const T* p = proj + static_cast<std::size_t>(a) * this->dim_;
                T gr = 0;
                for (index_t j = 0; j < this->dim_; ++j) {
                    gr += g[j] * p[j];
                    sink.add(static_cast<int>(k + f), a * this->dim_ + j, row[a] * g[j]);
                }
                sink.add(static_cast<int>(f), local * dd + a, gr);
            }
        }
    }

private:
    FeatureSpace space_;
    std::vector<index_t> dims_;
    double alpha_, lambda_;
    std::vector<ParamArray<T>> tables_, projections_;

public:
    std::vector<T>& raw_table(index_t field) { return tables_[field].values; }
    std::vector<T>& raw_projection(index_t field) { return projections_[field].values; }
};

// ---------------------------------------------------------------------------
// PrunedTable: dense shadow with a monotone magnitude mask during training;
// freezing converts to the cheaper of CSR and COO. Density follows a cubic
// decay from 1 to the target across the prune schedule.
// ---------------------------------------------------------------------------
template <class T>
class PrunedTableT final : public StoreT<T> {
public:
    PrunedTableT(index_t features, index_t dim, double target_density, std::uint64_t seed)
            : StoreT<T>(features, dim), target_density_(target_density) {
        if (target_density <= 0 || target_density > 1)
            throw std::invalid_argument("pruned: target density must be in (0, 1]");
        shadow_.name = "shadow";
        shadow_.values.resize(static_cast<std::size_t>(features) * dim);
        Rng rng(seed);
        seed_normal(shadow_.values, rng, 0.1);
        mask_.assign(shadow_.values.size(), 1);
        live_ = static_cast<std::uint64_t>(shadow_.values.size());
        row_cutoff_.assign(features, T(0));
        this->arrays_ = {&shadow_};
    }

    const char* method() const override { return "deeplight"; }
    ChunkType chunk_type() const override { return ChunkType::kPrunedTable; }
    double target_density() const { return target_density_; }
    std::uint64_t nnz() const { return live_; }

    // Masks the smallest-magnitude live entries so density tracks
    // r + (1-r)*(1-s)^3. Monotone: masked entries never return.
    void prune_step(double target_density, double schedule_position) {
        if (this->frozen_) throw state_error("pruned: prune_step on a frozen store");
        if (target_density <= 0 || target_density > 1)
            throw std::invalid_argument("pruned: target density must be in (0, 1]");
        if (schedule_position < 0 || schedule_position > 1)
            throw std::invalid_argument("pruned: schedule position must be in [0, 1]");
        const double rest = 1.0 - schedule_position;
        const double density = target_density + (1.0 - target_density) * rest * rest * rest;
        const auto target =
                static_cast<std::uint64_t>(std::floor(density * static_cast<double>(
                                                                        mask_.size())));
        if (target >= live_) return;
        std::vector<T> mags;
        mags.reserve(live_);
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (mask_[i]) mags.push_back(std::abs(shadow_.values[i]));
        // cutoff = target-th largest live magnitude
        std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(target),
                         mags.end(), std::greater<T>());
        const T cutoff = mags[target];  // first value NOT kept by strict >
        std::uint64_t above = 0;
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (mask_[i] && std::abs(shadow_.values[i]) > cutoff) ++above;
        std::uint64_t tie_budget = target - above;  // ties kept in index order
        for (std::size_t i = 0; i < mask_.size(); ++i) {
            if (!mask_[i]) continue;
            const T mag = std::abs(shadow_.values[i]);
            if (mag > cutoff) continue;
            if (mag == cutoff && tie_budget > 0) {
                --tie_budget;
                continue;
            }
            mask_[i] = 0;
            shadow_.values[i] = T(0);
        }
        live_ = target;
        refresh_row_cutoffs();
    }

    std::uint64_t inference_bytes() const override {
        return sparse_bytes(this->features_, this->dim_, live_).second;
    }
    std::uint64_t training_bytes() const override {
        // dense shadow + two Adam moments + per-row magnitude cutoff
        const std::uint64_t nd = static_cast<std::uint64_t>(this->features_) * this->dim_;
        return 3 * MemoryModel::kF32 * nd +
               MemoryModel::kF32 * static_cast<std::uint64_t>(this->features_);
    }
    SparseFormat frozen_format() const { return format_; }

    void freeze() override {
        if (this->frozen_) return;
        format_ = sparse_bytes(this->features_, this->dim_, live_).first;
        values_.reserve(live_);
        cols_.reserve(live_);
        row_ptr_.assign(this->features_ + 1, 0);
        for (index_t r = 0; r < this->features_; ++r) {
            for (index_t c = 0; c < this->dim_; ++c) {
                const std::size_t idx = static_cast<std::size_t>(r) * this->dim_ + c;
                if (mask_[idx]) {
                    values_.push_back(shadow_.values[idx]);
                    cols_.push_back(static_cast<std::uint32_t>(c));
                    if (format_ == SparseFormat::kCoo)
                        rows_.push_back(static_cast<std::uint32_t>(r));
                }
            }
            row_ptr_[r + 1] = static_cast<std::uint32_t>(values_.size());
        }
        shadow_.values.clear();
        shadow_.values.shrink_to_fit();
        mask_.clear();
        mask_.shrink_to_fit();
        this->frozen_ = true;
    }

    void import_params(std::span<const double> in) override {
        StoreT<T>::import_params(in);
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (!mask_[i]) shadow_.values[i] = T(0);
    }

    void save(Checkpoint& out) const override;

    // sparse payload access (populated after freeze)
    const std::vector<T>& sparse_values() const { return values_; }
    const std::vector<std::uint32_t>& sparse_cols() const { return cols_; }
    const std::vector<std::uint32_t>& sparse_rows() const { return rows_; }
    const std::vector<std::uint32_t>& sparse_row_ptr() const { return row_ptr_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    // Rebuilds a frozen table from a serialized sparse payload.
    static PrunedTableT restore_frozen(index_t n, index_t d, double target_density,
                                       SparseFormat format, std::vector<T> values,
                                       std::vector<std::uint32_t> cols,
                                       std::vector<std::uint32_t> rows_or_ptr) {
        PrunedTableT out(n, d, target_density, 0);
        out.shadow_.values.clear();
        out.mask_.clear();
        out.live_ = values.size();
        out.format_ = format;
        out.values_ = std::move(values);
        out.cols_ = std::move(cols);
        if (format == SparseFormat::kCsr) {
            out.row_ptr_ = std::move(rows_or_ptr);
        } else {
            out.rows_ = std::move(rows_or_ptr);
            out.row_ptr_.assign(n + 1, 0);
            for (std::uint32_t r : out.rows_) ++out.row_ptr_[r + 1];
            for (index_t i = 0; i < n; ++i) out.row_ptr_[i + 1] += out.row_ptr_[i];
        }
        out.frozen_ = true;
        return out;
    }

protected:
    void lookup_row(index_t id, T* out) const override {
        if (!this->frozen_) {
            const T* src = shadow_.values.data() + static_cast<std::size_t>(id) * this->dim_;
            std::copy(src, src + this->dim_, out);
            return;
        }
        std::fill(out, out + this->dim_, T(0));
        for (std::uint32_t i = row_ptr_[id]; i < row_ptr_[id + 1]; ++i) out[cols_[i]] = values_[i];
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t base = ids[i] * this->dim_;
            const T* g = grads.row(static_cast<index_t>(i));
            for (index_t j = 0; j < this->dim_; ++j)
                if (mask_[base + j]) sink.add(0, base + j, g[j]);
        }
    }

private:
    void refresh_row_cutoffs() {
        for (index_t r = 0; r < this->features_; ++r) {
            T lo = T(0);
            bool any = false;
            for (index_t c = 0; c < this->dim_; ++c) {
                const std::size_t idx = static_cast<std::size_t>(r) * this->dim_ + c;
                if (!mask_[idx]) continue;
                const T mag = std::abs(shadow_.values[idx]);
                if (!any || mag < lo) lo = mag;
                any = true;
            }
            row_cutoff_[r] = any ? lo : T(0);
        }
    }

    double target_density_;
    ParamArray<T> shadow_;
    std::vector<std::uint8_t> mask_;
    std::uint64_t live_ = 0;
    std::vector<T> row_cutoff_;
    SparseFormat format_ = SparseFormat::kCsr;
    std::vector<T> values_;
    std::vector<std::uint32_t> cols_, rows_, row_ptr_;
};

// ---------------------------------------------------------------------------
// AdaptiveTable: hashed shared rows for the long tail plus an exclusive
// region for features whose observed frequency crosses the promotion
// threshold. Promotion seeds the exclusive row with the current shared row.
// ---------------------------------------------------------------------------
template <class T>
class AdaptiveTableT final : public StoreT<T> {
public:
    AdaptiveTableT(index_t features, index_t dim, index_t shared_rows, std::uint32_t threshold,
                   index_t capacity, std::uint64_t seed)
            : StoreT<T>(features, dim),
              shared_rows_(shared_rows),
              threshold_(threshold),
              capacity_(capacity),
              hashes_(seed, 1) {
        if (shared_rows < 1) throw std::invalid_argument("adaptive: shared rows must be >= 1");
        if (threshold < 1) throw std::invalid_argument("adaptive: threshold must be >= 1");
        shared_.name = "shared";
        exclusive_.name = "exclusive";
        shared_.values.resize(static_cast<std::size_t>(shared_rows) * dim);
        Rng rng(seed + 1);
        seed_normal(shared_.values, rng, 0.1);
        counters_.assign(features, 0);
        this->arrays_ = {&shared_, &exclusive_};
    }

    const char* method() const override { return "adaptemb"; }
    ChunkType chunk_type() const override { return ChunkType::kAdaptiveTable; }
    index_t shared_rows() const { return shared_rows_; }
    std::uint32_t threshold() const { return threshold_; }
    index_t capacity() const { return capacity_; }
    index_t promoted_count() const { return static_cast<index_t>(slot_of_.size()); }
    std::uint64_t hash_seed() const { return hashes_.seed(); }
    bool is_promoted(index_t id) const { return slot_of_.count(id) > 0; }

    // Counts observations; promotes ids whose count crosses the threshold.
    std::size_t observe_and_promote(std::span<const index_t> ids) {
        if (this->frozen_) throw state_error("adaptive: observe on a frozen store");
        std::size_t promotions = 0;
        for (index_t id : ids) {
            this->check_id(id);
            const std::uint32_t c = ++counters_[id];
            if (c == threshold_) {
                if (promoted_count() >= capacity_)
                    throw capacity_error("adaptive: exclusive region full (capacity " +
                                         std::to_string(capacity_) + ")");
                const index_t slot = promoted_count();
                slot_of_.emplace(id, slot);
                const T* src = shared_row(id);
                exclusive_.values.insert(exclusive_.values.end(), src, src + this->dim_);
                exclusive_.ensure_moments();
                ++promotions;
            }
        }
        return promotions;
    }

    std::uint64_t inference_bytes() const override {
        const auto used = static_cast<std::uint64_t>(promoted_count());
        return MemoryModel::dense_bytes(shared_rows_, this->dim_) +
               used * this->dim_ * MemoryModel::kF32 + used * 8;  // id + slot (u32 each)
    }
    std::uint64_t training_bytes() const override {
        const auto cap = static_cast<std::uint64_t>(capacity_);
        return 3 * (MemoryModel::dense_bytes(shared_rows_, this->dim_) +
                    cap * this->dim_ * MemoryModel::kF32) +
               4 * static_cast<std::uint64_t>(this->features_) + 8 * cap;
    }

    void freeze() override {
        counters_.clear();
        counters_.shrink_to_fit();
        this->frozen_ = true;
    }

    void save(Checkpoint& out) const override;

    // used by serialization
    const std::vector<T>& shared_values() const { return shared_.values; }
    const std::vector<T>& exclusive_values() const { return exclusive_.values; }
    std::vector<std::pair<index_t, index_t>> sorted_promotions() const {
        std::vector<std::pair<index_t, index_t>> out(slot_of_.begin(), slot_of_.end());
        std::sort(out.begin(), out.end());
        return out;
    }
    void restore_promotion(index_t id, index_t slot, std::span<const T> row) {
        slot_of_.emplace(id, slot);
        exclusive_.values.insert(exclusive_.values.end(), row.begin(), row.end());
    }
    std::vector<T>& shared_values() { return shared_.values; }

protected:
    const T* shared_row(index_t id) const {
        const auto bucket = hashes_.hash(static_cast<std::uint64_t>(id), 0,
                                         static_cast<std::uint64_t>(shared_rows_));
        return shared_.values.data() + static_cast<std::size_t>(bucket) * this->dim_;
    }
    void lookup_row(index_t id, T* out) const override {
        const auto it = slot_of_.find(id);
        const T* src = it == slot_of_.end()
                               ? shared_row(id)
                               : exclusive_.values.data() +
                                         static_cast<std::size_t>(it->second) * this->dim_;
        std::copy(src, src + this->dim_, out);
    }
    void backward(std::span<const index_t> ids, const MatrixT<T>& grads,
                  GradSink<T>& sink) const override {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const index_t id = ids[i];
            const T* g = grads.row(static_cast<index_t>(i));
            const auto it = slot_of_.find(id);
            if (it == slot_of_.end()) {
                const auto bucket =
                        static_cast<index_t>(hashes_.hash(static_cast<std::uint64_t>(id), 0,
                                                          static_cast<std::uint64_t>(
                                                                  shared_rows_)));
                for (index_t j = 0; j < this->dim_; ++j)
                    sink.add(0, bucket * this->dim_ + j, g[j]);
            } else {
                for (index_t j = 0; j < this->dim_; ++j)
                    sink.add(1, it->second * this->dim_ + j, g[j]);
            }
        }
    }

private:
    index_t shared_rows_;
    std::uint32_t threshold_;
    index_t capacity_;
    HashFamily hashes_;
    ParamArray<T> shared_, exclusive_;
    std::vector<std::uint32_t> counters_;
    std::unordered_map<index_t, index_t> slot_of_;
};

using FullTable = FullTableT<float>;
using DoubleHashTable = DoubleHashTableT<float>;
using CompoTable = CompoTableT<float>;
using MEmComTable = MEmComTableT<float>;
using RobeArray = RobeArrayT<float>;
using TtRecTable = TtRecTableT<float>;
using QuantizedTable = QuantizedTableT<float>;
using AlptTable = AlptTableT<float>;
using MixedDimTable = MixedDimTableT<float>;
using PrunedTable = PrunedTableT<float>;
using AdaptiveTable = AdaptiveTableT<float>;

// Store serialization lives in stores_io.cpp (float instantiation).
std::unique_ptr<Store> store_from_checkpoint(const Checkpoint& c);

}  // namespace emsq
