#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emsq/common.hpp"

namespace emsq {

using index_t = std::int64_t;

// Categorical feature layout: k fields with per-field cardinalities n_f and
// cumulative offsets, so that a (field, local id) pair maps to one global id
// in [0, n). Immutable after construction.
class FeatureSpace {
public:
    explicit FeatureSpace(std::vector<index_t> cardinalities)
            : cardinalities_(std::move(cardinalities)) {
        if (cardinalities_.empty())
            throw std::invalid_argument("FeatureSpace: need at least one field");
        offsets_.reserve(cardinalities_.size() + 1);
        offsets_.push_back(0);
        for (index_t c : cardinalities_) {
            if (c < 1) throw std::invalid_argument("FeatureSpace: cardinality must be >= 1");
            offsets_.push_back(offsets_.back() + c);
        }
    }

    index_t field_count() const { return static_cast<index_t>(cardinalities_.size()); }
    index_t total_features() const { return offsets_.back(); }
    index_t cardinality(index_t field) const { return cardinalities_.at(field); }
    index_t offset(index_t field) const { return offsets_.at(field); }
    const std::vector<index_t>& cardinalities() const { return cardinalities_; }
    const std::vector<index_t>& offsets() const { return offsets_; }

    index_t global_id(index_t field, index_t local) const {
        if (field < 0 || field >= field_count())
            throw std::invalid_argument("FeatureSpace: field out of range");
        if (local < 0 || local >= cardinalities_[field])
            throw std::invalid_argument("FeatureSpace: local id out of range");
        return offsets_[field] + local;
    }

    index_t field_of(index_t global) const {
        if (global < 0 || global >= total_features())
            throw std::invalid_argument("FeatureSpace: global id out of range");
        // offsets_ is sorted; binary search for the owning field.
        index_t lo = 0, hi = field_count() - 1;
        while (lo < hi) {
            index_t mid = (lo + hi + 1) / 2;
            if (offsets_[mid] <= global)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

private:
    std::vector<index_t> cardinalities_;
    std::vector<index_t> offsets_;
};

// Row-major dense matrix. Scalar is float on the production path and double
// in gradient-check mode.
template <class Scalar>
struct MatrixT {
    index_t rows = 0;
    index_t cols = 0;
    std::vector<Scalar> values;

    MatrixT() = default;
    MatrixT(index_t r, index_t c, Scalar fill = Scalar(0))
            : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("MatrixT: negative shape");
    }

    Scalar* row(index_t r) { return values.data() + static_cast<std::size_t>(r) * cols; }
    const Scalar* row(index_t r) const {
        return values.data() + static_cast<std::size_t>(r) * cols;
    }
    Scalar& at(index_t r, index_t c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    Scalar at(index_t r, index_t c) const {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
    std::span<Scalar> row_span(index_t r) { return {row(r), static_cast<std::size_t>(cols)}; }
    std::span<const Scalar> row_span(index_t r) const {
        return {row(r), static_cast<std::size_t>(cols)};
    }
};

using DenseMatrix = MatrixT<float>;
using DenseMatrix64 = MatrixT<double>;

template <class To, class From>
MatrixT<To> matrix_cast(const MatrixT<From>& m) {
    MatrixT<To> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.values.size(); ++i)
        out.values[i] = static_cast<To>(m.values[i]);
    return out;
}

// Multiply-add hash family over the prime 2^61 - 1. Constants are drawn from
// a seeded generator, so every test vector is derivable from the seed.
class HashFamily {
public:
    static constexpr std::uint64_t kPrime = (1ull << 61) - 1;

    explicit HashFamily(std::uint64_t seed, int count = 8) : seed_(seed) {
        Rng rng(seed);
        constants_.reserve(count);
        for (int i = 0; i < count; ++i) {
            std::uint64_t a = 1 + rng.next_below(kPrime - 1);
            std::uint64_t b = rng.next_below(kPrime);
            constants_.push_back({a, b});
        }
    }

    std::uint64_t seed() const { return seed_; }
    int size() const { return static_cast<int>(constants_.size()); }

    // hash_i(x, m): deterministic bucket in [0, m).
    std::uint64_t hash(std::uint64_t x, int which, std::uint64_t m) const {
        if (m == 0) throw std::invalid_argument("HashFamily::hash: bucket count must be >= 1");
        const auto& [a, b] = constants_.at(which);
        const auto prod = static_cast<unsigned __int128>(a) * (x % kPrime) + b;
        return static_cast<std::uint64_t>(prod % kPrime) % m;
    }

private:
    std::uint64_t seed_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> constants_;
};

enum class SparseFormat { kCsr, kCoo };

inline const char* to_string(SparseFormat f) {
    return f == SparseFormat::kCsr ? "csr" : "coo";
}

// Byte-exact memory model. Every reported memory number in the library comes
// from these formulas, never from process-level measurement, so reports are
// identical across platforms. Serialized checkpoint payloads match the
// corresponding formula exactly.
struct MemoryModel {
    static constexpr std::uint64_t kF32 = 4;
    static constexpr std::uint64_t kF16 = 2;
    static constexpr std::uint64_t kI16 = 2;
    static constexpr std::uint64_t kI8 = 1;
    static constexpr std::uint64_t kIndex32 = 4;

    static std::uint64_t dense_bytes(index_t rows, index_t cols, std::uint64_t width = kF32) {
        return static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) * width;
    }

    // FP32 baseline table for a feature space at embedding width d.
    static std::uint64_t baseline_bytes(const FeatureSpace& space, index_t dim) {
        return dense_bytes(space.total_features(), dim);
    }

    static std::uint64_t csr_bytes(index_t rows, std::uint64_t nnz, std::uint64_t value_width = kF32) {
        return nnz * (value_width + kIndex32) + (static_cast<std::uint64_t>(rows) + 1) * kIndex32;
    }

    static std::uint64_t coo_bytes(std::uint64_t nnz, std::uint64_t value_width = kF32) {
        return nnz * (value_width + 2 * kIndex32);
    }
};

// CR = baseline bytes / compressed bytes.
inline double compression_ratio(std::uint64_t baseline_bytes, std::uint64_t compressed_bytes) {
    if (compressed_bytes == 0)
        throw std::invalid_argument("compression_ratio: compressed_bytes must be positive");
    return static_cast<double>(baseline_bytes) / static_cast<double>(compressed_bytes);
}

// Cheaper of CSR and COO for the given shape and population. Ties go to CSR.
inline std::pair<SparseFormat, std::uint64_t> sparse_bytes(index_t rows, index_t cols,
                                                           std::uint64_t nnz,
                                                           std::uint64_t value_width =
                                                                   MemoryModel::kF32) {
    if (nnz > static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols))
        throw std::invalid_argument("sparse_bytes: nnz exceeds rows*cols");
    const std::uint64_t csr = MemoryModel::csr_bytes(rows, nnz, value_width);
    const std::uint64_t coo = MemoryModel::coo_bytes(nnz, value_width);
    if (csr <= coo) return {SparseFormat::kCsr, csr};
    return {SparseFormat::kCoo, coo};
}

}  // namespace emsq
