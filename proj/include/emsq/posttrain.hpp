#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emsq/budget.hpp"
#include "emsq/checkpoint.hpp"
#include "emsq/core.hpp"
#include "emsq/quantize.hpp"

namespace emsq {

// Compressed representation of a frozen matrix plus batched reconstruction.
// Codecs are immutable after construction and safe to share across readers.
class Codec {
public:
    Codec(index_t rows, index_t cols) : rows_(rows), cols_(cols) {}
    virtual ~Codec() = default;

    virtual const char* method() const = 0;
    virtual ChunkType chunk_type() const = 0;
    index_t rows() const { return rows_; }
    index_t cols() const { return cols_; }
    virtual std::uint64_t bytes() const = 0;

    DenseMatrix decompress_batch(std::span<const index_t> ids) const {
        DenseMatrix out(static_cast<index_t>(ids.size()), cols_);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] < 0 || ids[i] >= rows_)
                throw std::invalid_argument("codec: row id " + std::to_string(ids[i]) +
                                            " out of range");
            reconstruct_row(ids[i], out.row(static_cast<index_t>(i)));
        }
        return out;
    }
    DenseMatrix decompress_all(index_t batch = 1024) const {
        DenseMatrix out(rows_, cols_);
        std::vector<index_t> ids(static_cast<std::size_t>(batch));
        for (index_t start = 0; start < rows_; start += batch) {
            const index_t count = std::min<index_t>(batch, rows_ - start);
            ids.resize(static_cast<std::size_t>(count));
            for (index_t i = 0; i < count; ++i) ids[i] = start + i;
            const auto part = decompress_batch(ids);
            std::copy(part.values.begin(), part.values.end(), out.row(start));
        }
        return out;
    }

    virtual void save(Checkpoint& out) const = 0;

protected:
    virtual void reconstruct_row(index_t id, float* out) const = 0;
    index_t rows_, cols_;
};

struct CompressResult {
    std::unique_ptr<Codec> codec;
    std::uint64_t bytes = 0;
    double seconds = 0;
};

// Builds the codec named by the plan. Throws feasibility_error (carrying the
// nearest achievable byte count) when the plan is marked infeasible.
CompressResult compress(const DenseMatrix& matrix, const CompressionPlan& plan,
                        std::uint64_t seed);

std::unique_ptr<Codec> codec_from_checkpoint(const Checkpoint& c);

// L2LSH: signature_j = floor((a_j . block + shift_j) / w) with seeded
// Gaussian projections and uniform shifts.
struct LshParams {
    index_t block = 0;        // block width in elements
    index_t projections = 4;  // L
    double width = 0.05;      // w
    std::uint64_t seed = 0;
};

std::vector<std::int64_t> lsh_signature(std::span<const float> block, const LshParams& params);

// Magnitude-quantile grouping shared by MagPQ and MagSVD: rows sorted by
// L2 norm (ties by row id) are split into `groups` rank ranges; group 0 holds
// the smallest norms. Returns per-row group ids.
std::vector<std::uint8_t> norm_quantile_groups(const DenseMatrix& m, index_t groups);

}  // namespace emsq
