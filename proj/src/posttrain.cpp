#include "emsq/posttrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

namespace emsq {

namespace {

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// identity
// ---------------------------------------------------------------------------
class IdentityCodec final : public Codec {
public:
    explicit IdentityCodec(DenseMatrix m) : Codec(m.rows, m.cols), matrix_(std::move(m)) {}
    const char* method() const override { return "identity"; }
    ChunkType chunk_type() const override { return ChunkType::kIdentityCodec; }
    std::uint64_t bytes() const override { return MemoryModel::dense_bytes(rows_, cols_); }
    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.append(std::span<const float>(matrix_.values));
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        DenseMatrix m(c.meta().at("rows").get<index_t>(), c.meta().at("cols").get<index_t>());
        auto r = c.reader();
        r.read(std::span<float>(m.values));
        return std::make_unique<IdentityCodec>(std::move(m));
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        const float* src = matrix_.row(id);
        std::copy(src, src + cols_, out);
    }

private:
    DenseMatrix matrix_;
};

// ---------------------------------------------------------------------------
// per-row affine integer codec (posttrain INT8/16)
// payload: codes (n*d) | scales (n f32) | biases (n f32)
// ---------------------------------------------------------------------------
class IntCodec final : public Codec {
public:
    IntCodec(const DenseMatrix& m, StorageType dtype) : Codec(m.rows, m.cols), dtype_(dtype) {
        if (dtype == StorageType::kF16) throw std::invalid_argument("int codec: integer only");
        const int levels = dtype == StorageType::kI8 ? qz::kLevels8 : qz::kLevels16;
        scales_.resize(m.rows);
        biases_.resize(m.rows);
        if (dtype == StorageType::kI8)
            codes8_.resize(m.values.size());
        else
            codes16_.resize(m.values.size());
        Rng rng_unused(0);
        for (index_t r = 0; r < m.rows; ++r) {
            auto [s, b] = qz::calibrate(m.row(r), m.cols, levels);
            scales_[r] = s;
            biases_[r] = b;
            for (index_t c = 0; c < m.cols; ++c) {
                const int code =
                        qz::encode(m.at(r, c), s, b, levels, Rounding::kNearest, rng_unused);
                if (dtype == StorageType::kI8)
                    codes8_[r * m.cols + c] = static_cast<std::int8_t>(code - 128);
                else
                    codes16_[r * m.cols + c] = static_cast<std::int16_t>(code - 32768);
            }
        }
    }
    IntCodec(index_t rows, index_t cols, StorageType dtype) : Codec(rows, cols), dtype_(dtype) {}

    const char* method() const override { return "int8_16"; }
    ChunkType chunk_type() const override { return ChunkType::kIntCodec; }
    std::uint64_t bytes() const override {
        return MemoryModel::dense_bytes(rows_, cols_, storage_width(dtype_)) +
               8ull * static_cast<std::uint64_t>(rows_);
    }
    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.meta()["dtype"] = to_string(dtype_);
        if (dtype_ == StorageType::kI8)
            out.append(std::span<const std::int8_t>(codes8_));
        else
            out.append(std::span<const std::int16_t>(codes16_));
        out.append(std::span<const float>(scales_));
        out.append(std::span<const float>(biases_));
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        const auto rows = c.meta().at("rows").get<index_t>();
        const auto cols = c.meta().at("cols").get<index_t>();
        auto codec = std::make_unique<IntCodec>(
                rows, cols, storage_type_from(c.meta().at("dtype").get<std::string>()));
        auto r = c.reader();
        const std::size_t nd = static_cast<std::size_t>(rows) * cols;
        if (codec->dtype_ == StorageType::kI8)
            codec->codes8_ = r.read_vector<std::int8_t>(nd);
        else
            codec->codes16_ = r.read_vector<std::int16_t>(nd);
        codec->scales_ = r.read_vector<float>(rows);
        codec->biases_ = r.read_vector<float>(rows);
        return codec;
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        const float s = scales_[id], b = biases_[id];
        const std::size_t base = static_cast<std::size_t>(id) * cols_;
        if (dtype_ == StorageType::kI8) {
            for (index_t c = 0; c < cols_; ++c)
                out[c] = static_cast<float>(static_cast<int>(codes8_[base + c]) + 128) * s + b;
        } else {
            for (index_t c = 0; c < cols_; ++c)
                out[c] =
                        static_cast<float>(static_cast<int>(codes16_[base + c]) + 32768) * s + b;
        }
    }

private:
    StorageType dtype_;
    std::vector<std::int8_t> codes8_;
    std::vector<std::int16_t> codes16_;
    std::vector<float> scales_, biases_;
};

// ---------------------------------------------------------------------------
// k-means: seeded kmeans++ init, Lloyd iterations ending on a mean update,
// so the final objective cannot exceed the single-centroid baseline.
// ---------------------------------------------------------------------------
struct KmeansResult {
    std::vector<float> centroids;       // K x dim
    std::vector<std::uint32_t> assign;  // per point
};

KmeansResult kmeans(const float* data, index_t points, index_t dim, index_t k, Rng rng,
                    int max_iters = 25, double tol = 1e-4);

// Large inputs train the centroids on a seeded subsample (256 points per
// centroid) and then assign every point once against the final means.
KmeansResult kmeans_sampled(const float* data, index_t points, index_t dim, index_t k,
                            Rng rng) {
    const index_t cap = 256 * std::max<index_t>(k, 1);
    if (points <= cap) return kmeans(data, points, dim, k, rng);
    std::vector<index_t> picks(points);
    std::iota(picks.begin(), picks.end(), index_t(0));
    for (index_t i = 0; i < cap; ++i)
        std::swap(picks[i], picks[i + static_cast<index_t>(rng.next_below(points - i))]);
    std::vector<float> sample(static_cast<std::size_t>(cap) * dim);
    for (index_t i = 0; i < cap; ++i)
        std::copy(data + picks[i] * dim, data + (picks[i] + 1) * dim,
                  sample.begin() + static_cast<std::size_t>(i) * dim);
    KmeansResult trained = kmeans(sample.data(), cap, dim, k, rng);
    KmeansResult res;
    res.centroids = std::move(trained.centroids);
    res.assign.assign(points, 0);
    k = static_cast<index_t>(res.centroids.size() / dim);
    auto assign_all = [&]() {
        for (index_t p = 0; p < points; ++p) {
            double bd = -1;
            std::uint32_t bi = 0;
            for (index_t c = 0; c < k; ++c) {
                double s = 0;
                for (index_t j = 0; j < dim; ++j) {
                    const double diff = double(data[p * dim + j]) -
                                        res.centroids[static_cast<std::size_t>(c) * dim + j];
                    s += diff * diff;
                }
                if (bd < 0 || s < bd) {
                    bd = s;
                    bi = static_cast<std::uint32_t>(c);
                }
            }
            res.assign[p] = bi;
        }
    };
    // one full update keeps the objective at or below the one-centroid
    // baseline on the complete data, not just the sample
    assign_all();
    std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
    std::vector<index_t> counts(k, 0);
    for (index_t p = 0; p < points; ++p) {
        ++counts[res.assign[p]];
        for (index_t j = 0; j < dim; ++j)
            sums[static_cast<std::size_t>(res.assign[p]) * dim + j] += data[p * dim + j];
    }
    for (index_t c = 0; c < k; ++c)
        if (counts[c] > 0)
            for (index_t j = 0; j < dim; ++j)
                res.centroids[static_cast<std::size_t>(c) * dim + j] =
                        static_cast<float>(sums[static_cast<std::size_t>(c) * dim + j] /
                                           counts[c]);
    assign_all();
    return res;
}

KmeansResult kmeans(const float* data, index_t points, index_t dim, index_t k, Rng rng,
                    int max_iters, double tol) {
    KmeansResult res;
    k = std::max<index_t>(1, std::min<index_t>(k, points));
    res.centroids.assign(static_cast<std::size_t>(k) * dim, 0.0f);
    res.assign.assign(points, 0);
    if (points == 0) return res;

    auto dist2 = [&](const float* a, const float* b) {
        double s = 0;
        for (index_t c = 0; c < dim; ++c) {
            const double diff = double(a[c]) - double(b[c]);
            s += diff * diff;
        }
        return s;
    };
    auto centroid = [&](index_t c) {
        return res.centroids.data() + static_cast<std::size_t>(c) * dim;
    };

    // kmeans++ seeding
    std::vector<double> best(points, 0.0);
    const auto first = static_cast<index_t>(rng.next_below(points));
    std::copy(data + first * dim, data + (first + 1) * dim, res.centroids.begin());
    for (index_t p = 0; p < points; ++p) best[p] = dist2(data + p * dim, centroid(0));
    for (index_t c = 1; c < k; ++c) {
        const double total = std::accumulate(best.begin(), best.end(), 0.0);
        index_t chosen;
        if (total > 0) {
            double target = rng.next_double() * total;
            chosen = points - 1;
            for (index_t p = 0; p < points; ++p) {
                target -= best[p];
                if (target <= 0) {
                    chosen = p;
                    break;
                }
            }
        } else {
            chosen = static_cast<index_t>(rng.next_below(points));
        }
        std::copy(data + chosen * dim, data + (chosen + 1) * dim,
                  res.centroids.begin() + static_cast<std::size_t>(c) * dim);
        for (index_t p = 0; p < points; ++p)
            best[p] = std::min(best[p], dist2(data + p * dim, centroid(c)));
    }

    auto assign_all = [&]() {
        double obj = 0;
        for (index_t p = 0; p < points; ++p) {
            double bd = dist2(data + p * dim, centroid(0));
            std::uint32_t bi = 0;
            for (index_t c = 1; c < k; ++c) {
                const double dd = dist2(data + p * dim, centroid(c));
                if (dd < bd) {
                    bd = dd;
                    bi = static_cast<std::uint32_t>(c);
                }
            }
            res.assign[p] = bi;
            obj += bd;
        }
        return obj;
    };

    std::vector<double> sums(static_cast<std::size_t>(k) * dim);
    std::vector<index_t> counts(k);
    double prev_obj = -1;
    for (int iter = 0; iter < max_iters; ++iter) {
        const double obj = assign_all();
        // empty clusters adopt the farthest member of the largest cluster
        std::fill(counts.begin(), counts.end(), 0);
        for (index_t p = 0; p < points; ++p) ++counts[res.assign[p]];
        for (index_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            const auto big = static_cast<index_t>(
                    std::max_element(counts.begin(), counts.end()) - counts.begin());
            index_t far_p = -1;
            double far_d = -1;
            for (index_t p = 0; p < points; ++p) {
                if (res.assign[p] != static_cast<std::uint32_t>(big)) continue;
                const double dd = dist2(data + p * dim, centroid(big));
                if (dd > far_d) {
                    far_d = dd;
                    far_p = p;
                }
            }
            if (far_p >= 0) {
                res.assign[far_p] = static_cast<std::uint32_t>(c);
                --counts[big];
                ++counts[c];
            }
        }
        // update: centroids become cluster means
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (index_t p = 0; p < points; ++p) {
            const std::uint32_t a = res.assign[p];
            ++counts[a];
            for (index_t c = 0; c < dim; ++c)
                sums[static_cast<std::size_t>(a) * dim + c] += data[p * dim + c];
        }
        for (index_t c = 0; c < k; ++c)
            if (counts[c] > 0)
                for (index_t j = 0; j < dim; ++j)
                    res.centroids[static_cast<std::size_t>(c) * dim + j] = static_cast<float>(
                            sums[static_cast<std::size_t>(c) * dim + j] / counts[c]);
        if (prev_obj >= 0 && (prev_obj - obj) / std::max(prev_obj, 1e-12) < tol) break;
        prev_obj = obj;
    }
    assign_all();  // final assignment against the final means
    return res;
}

}  // namespace

std::vector<std::uint8_t> norm_quantile_groups(const DenseMatrix& m, index_t groups) {
    std::vector<std::pair<double, index_t>> norms(m.rows);
    for (index_t r = 0; r < m.rows; ++r) {
        double s = 0;
        for (index_t c = 0; c < m.cols; ++c) s += double(m.at(r, c)) * double(m.at(r, c));
        norms[r] = {std::sqrt(s), r};
    }
    std::sort(norms.begin(), norms.end());
    std::vector<std::uint8_t> out(m.rows);
    index_t pos = 0;
    for (index_t g = 0; g < groups; ++g) {
        const index_t count = m.rows / groups + (g < m.rows % groups ? 1 : 0);
        for (index_t i = 0; i < count; ++i)
            out[norms[pos++].second] = static_cast<std::uint8_t>(g);
    }
    return out;
}

std::vector<std::int64_t> lsh_signature(std::span<const float> block, const LshParams& params) {
    std::vector<std::int64_t> sig(params.projections);
    Rng root(params.seed);
    for (index_t j = 0; j < params.projections; ++j) {
        Rng stream = root.fork(static_cast<std::uint64_t>(j));
        double dot = 0;
        for (float v : block) dot += stream.next_normal() * double(v);
        const double shift = stream.next_double() * params.width;
        sig[j] = static_cast<std::int64_t>(std::floor((dot + shift) / params.width));
    }
    return sig;
}

namespace {

// ---------------------------------------------------------------------------
// PQ / MagPQ. Group 0 holds the smallest norms; centroid counts double with
// the group index, so high-norm rows get the richest codebooks. Plain PQ is
// the single-group case without the per-row group/local maps.
// payload: per group, codebook (K_g * d f32); codes (n*parts u8|u16);
//          grouped only: group ids (n u8) | local indices (n u32)
// ---------------------------------------------------------------------------
class PqCodec final : public Codec {
public:
    PqCodec(const DenseMatrix& m, index_t parts, index_t k0, index_t groups, std::uint64_t seed,
            bool tag_mgqe)
            : Codec(m.rows, m.cols), parts_(parts), groups_(groups), tag_mgqe_(tag_mgqe) {
        if (parts < 1 || cols_ % parts != 0)
            throw std::invalid_argument("pq: part count must divide the width");
        const index_t sub = cols_ / parts;
        group_of_ = groups > 1 ? norm_quantile_groups(m, groups)
                               : std::vector<std::uint8_t>(m.rows, 0);
        local_of_.assign(m.rows, 0);
        std::vector<std::vector<index_t>> members(groups);
        for (index_t r = 0; r < m.rows; ++r) {
            local_of_[r] = static_cast<std::uint32_t>(members[group_of_[r]].size());
            members[group_of_[r]].push_back(r);
        }
        ks_.resize(groups);
        index_t kmax = 0;
        for (index_t g = 0; g < groups; ++g) {
            ks_[g] = std::max<index_t>(
                    1, std::min<index_t>(std::min<index_t>(k0 << g, kMaxPqCentroids),
                                         static_cast<index_t>(members[g].size())));
            kmax = std::max(kmax, ks_[g]);
        }
        wide_codes_ = kmax > 256;
        codebooks_.resize(groups);
        codes8_.assign(wide_codes_ ? 0 : static_cast<std::size_t>(rows_) * parts, 0);
        codes16_.assign(wide_codes_ ? static_cast<std::size_t>(rows_) * parts : 0, 0);
        Rng root(seed);
        std::vector<float> slice;
        for (index_t g = 0; g < groups; ++g) {
            codebooks_[g].assign(static_cast<std::size_t>(ks_[g]) * cols_, 0.0f);
            const auto& rows = members[g];
            for (index_t p = 0; p < parts; ++p) {
                slice.assign(rows.size() * sub, 0.0f);
                for (std::size_t i = 0; i < rows.size(); ++i)
                    std::copy(m.row(rows[i]) + p * sub, m.row(rows[i]) + (p + 1) * sub,
                              slice.begin() + i * sub);
                const auto km = kmeans_sampled(slice.data(), static_cast<index_t>(rows.size()),
                                               sub, ks_[g], root.fork(g * 1024 + p));
                for (index_t c = 0; c < ks_[g]; ++c)
                    std::copy(km.centroids.begin() + static_cast<std::size_t>(c) * sub,
                              km.centroids.begin() + static_cast<std::size_t>(c + 1) * sub,
                              codebooks_[g].begin() + static_cast<std::size_t>(c) * cols_ +
                                      p * sub);
                for (std::size_t i = 0; i < rows.size(); ++i) set_code(rows[i], p, km.assign[i]);
            }
        }
    }
    PqCodec(index_t rows, index_t cols, index_t parts, index_t groups, bool tag_mgqe)
            : Codec(rows, cols), parts_(parts), groups_(groups), tag_mgqe_(tag_mgqe) {}

    const char* method() const override {
        return tag_mgqe_ ? "mgqe" : (groups_ > 1 ? "mag_pq" : "pq");
    }
    ChunkType chunk_type() const override {
        return groups_ > 1 ? ChunkType::kMagPqCodec : ChunkType::kPqCodec;
    }
    std::uint64_t bytes() const override {
        std::uint64_t total = 0;
        for (index_t g = 0; g < groups_; ++g)
            total += MemoryModel::kF32 * static_cast<std::uint64_t>(ks_[g]) * cols_;
        total += static_cast<std::uint64_t>(rows_) * parts_ * (wide_codes_ ? 2 : 1);
        if (groups_ > 1) total += static_cast<std::uint64_t>(rows_) * 5;
        return total;
    }

    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.meta()["parts"] = parts_;
        out.meta()["groups"] = groups_;
        out.meta()["group_k"] = ks_;
        out.meta()["mgqe"] = tag_mgqe_;
        for (index_t g = 0; g < groups_; ++g) out.append(std::span<const float>(codebooks_[g]));
        if (wide_codes_)
            out.append(std::span<const std::uint16_t>(codes16_));
        else
            out.append(std::span<const std::uint8_t>(codes8_));
        if (groups_ > 1) {
            out.append(std::span<const std::uint8_t>(group_of_));
            out.append(std::span<const std::uint32_t>(local_of_));
        }
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        const auto& meta = c.meta();
        auto codec = std::make_unique<PqCodec>(
                meta.at("rows").get<index_t>(), meta.at("cols").get<index_t>(),
                meta.at("parts").get<index_t>(), meta.at("groups").get<index_t>(),
                meta.value("mgqe", false));
        codec->ks_ = meta.at("group_k").get<std::vector<index_t>>();
        index_t kmax = 0;
        for (index_t k : codec->ks_) kmax = std::max(kmax, k);
        codec->wide_codes_ = kmax > 256;
        auto r = c.reader();
        codec->codebooks_.resize(codec->groups_);
        for (index_t g = 0; g < codec->groups_; ++g)
            codec->codebooks_[g] =
                    r.read_vector<float>(static_cast<std::size_t>(codec->ks_[g]) * codec->cols_);
        const std::size_t nparts = static_cast<std::size_t>(codec->rows_) * codec->parts_;
        if (codec->wide_codes_)
            codec->codes16_ = r.read_vector<std::uint16_t>(nparts);
        else
            codec->codes8_ = r.read_vector<std::uint8_t>(nparts);
        if (codec->groups_ > 1) {
            codec->group_of_ = r.read_vector<std::uint8_t>(codec->rows_);
            codec->local_of_ = r.read_vector<std::uint32_t>(codec->rows_);
        } else {
            codec->group_of_.assign(codec->rows_, 0);
            codec->local_of_.assign(codec->rows_, 0);
        }
        return codec;
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        const index_t sub = cols_ / parts_;
        const std::uint8_t g = group_of_[id];
        for (index_t p = 0; p < parts_; ++p) {
            const float* cb = codebooks_[g].data() +
                              static_cast<std::size_t>(code_of(id, p)) * cols_ + p * sub;
            std::copy(cb, cb + sub, out + p * sub);
        }
    }

private:
    std::uint32_t code_of(index_t row, index_t part) const {
        const std::size_t idx = static_cast<std::size_t>(row) * parts_ + part;
        return wide_codes_ ? codes16_[idx] : codes8_[idx];
    }
    void set_code(index_t row, index_t part, std::uint32_t code) {
        const std::size_t idx = static_cast<std::size_t>(row) * parts_ + part;
        if (wide_codes_)
            codes16_[idx] = static_cast<std::uint16_t>(code);
        else
            codes8_[idx] = static_cast<std::uint8_t>(code);
    }

    index_t parts_;
    index_t groups_;
    bool tag_mgqe_;
    bool wide_codes_ = false;
    std::vector<index_t> ks_;
    std::vector<std::vector<float>> codebooks_;
    std::vector<std::uint8_t> codes8_;
    std::vector<std::uint16_t> codes16_;
    std::vector<std::uint8_t> group_of_;
    std::vector<std::uint32_t> local_of_;
};

// ---------------------------------------------------------------------------
// SVD / MagSVD: 64-bit thin SVD per group; the left factor absorbs the
// singular values. payload per group: left (rows_g*r f32) | right (r*d f32);
// grouped variants add group ids (u8) and local indices (u32).
// ---------------------------------------------------------------------------
class SvdCodec final : public Codec {
public:
    SvdCodec(const DenseMatrix& m, std::vector<index_t> ranks, index_t groups, bool tag_mag)
            : Codec(m.rows, m.cols), groups_(groups), ranks_(std::move(ranks)), tag_mag_(tag_mag) {
        group_of_ = groups > 1 ? norm_quantile_groups(m, groups)
                               : std::vector<std::uint8_t>(m.rows, 0);
        local_of_.assign(m.rows, 0);
        std::vector<std::vector<index_t>> members(groups);
        for (index_t r = 0; r < m.rows; ++r) {
            local_of_[r] = static_cast<std::uint32_t>(members[group_of_[r]].size());
            members[group_of_[r]].push_back(r);
        }
        left_.resize(groups);
        right_.resize(groups);
        for (index_t g = 0; g < groups; ++g) {
            const auto& rows = members[g];
            if (rows.empty()) {
                ranks_[g] = 0;
                continue;
            }
            const index_t rank = std::clamp<index_t>(
                    ranks_[g], 1, std::min<index_t>(static_cast<index_t>(rows.size()), cols_));
            ranks_[g] = rank;
            Eigen::MatrixXd block(rows.size(), cols_);
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (index_t c = 0; c < cols_; ++c) block(i, c) = m.at(rows[i], c);
            Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
            left_[g].assign(rows.size() * rank, 0.0f);
            right_[g].assign(static_cast<std::size_t>(rank) * cols_, 0.0f);
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (index_t k = 0; k < rank; ++k)
                    left_[g][i * rank + k] =
                            static_cast<float>(svd.matrixU()(i, k) * svd.singularValues()(k));
            for (index_t k = 0; k < rank; ++k)
                for (index_t c = 0; c < cols_; ++c)
                    right_[g][static_cast<std::size_t>(k) * cols_ + c] =
                            static_cast<float>(svd.matrixV()(c, k));
        }
    }
    SvdCodec(index_t rows, index_t cols, index_t groups, bool tag_mag)
            : Codec(rows, cols), groups_(groups), tag_mag_(tag_mag) {}

    const char* method() const override { return tag_mag_ ? "mag_svd" : "svd"; }
    ChunkType chunk_type() const override {
        return tag_mag_ ? ChunkType::kMagSvdCodec : ChunkType::kSvdCodec;
    }
    std::uint64_t bytes() const override {
        std::uint64_t total = 0;
        for (index_t g = 0; g < groups_; ++g)
            total += MemoryModel::kF32 *
                     (static_cast<std::uint64_t>(left_[g].size()) + right_[g].size());
        if (groups_ > 1) total += static_cast<std::uint64_t>(rows_) * 5;
        return total;
    }

    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.meta()["groups"] = groups_;
        out.meta()["ranks"] = ranks_;
        out.meta()["group_sizes"] = group_sizes();
        for (index_t g = 0; g < groups_; ++g) {
            out.append(std::span<const float>(left_[g]));
            out.append(std::span<const float>(right_[g]));
        }
        if (groups_ > 1) {
            out.append(std::span<const std::uint8_t>(group_of_));
            out.append(std::span<const std::uint32_t>(local_of_));
        }
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        const auto& meta = c.meta();
        const auto groups = meta.at("groups").get<index_t>();
        auto codec = std::make_unique<SvdCodec>(meta.at("rows").get<index_t>(),
                                                meta.at("cols").get<index_t>(), groups,
                                                groups > 1);
        codec->ranks_ = meta.at("ranks").get<std::vector<index_t>>();
        const auto sizes = meta.at("group_sizes").get<std::vector<index_t>>();
        auto r = c.reader();
        codec->left_.resize(groups);
        codec->right_.resize(groups);
        for (index_t g = 0; g < groups; ++g) {
            codec->left_[g] =
                    r.read_vector<float>(static_cast<std::size_t>(sizes[g]) * codec->ranks_[g]);
            codec->right_[g] = r.read_vector<float>(
                    static_cast<std::size_t>(codec->ranks_[g]) * codec->cols_);
        }
        if (groups > 1) {
            codec->group_of_ = r.read_vector<std::uint8_t>(codec->rows_);
            codec->local_of_ = r.read_vector<std::uint32_t>(codec->rows_);
        } else {
            codec->group_of_.assign(codec->rows_, 0);
            codec->local_of_.resize(codec->rows_);
            for (index_t i = 0; i < codec->rows_; ++i)
                codec->local_of_[i] = static_cast<std::uint32_t>(i);
        }
        return codec;
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        const std::uint8_t g = group_of_[id];
        const std::uint32_t local = local_of_[id];
        const index_t rank = ranks_[g];
        const float* lrow = left_[g].data() + static_cast<std::size_t>(local) * rank;
        std::fill(out, out + cols_, 0.0f);
        for (index_t k = 0; k < rank; ++k) {
            const float w = lrow[k];
            const float* rrow = right_[g].data() + static_cast<std::size_t>(k) * cols_;
            for (index_t c = 0; c < cols_; ++c) out[c] += w * rrow[c];
        }
    }

private:
    std::vector<index_t> group_sizes() const {
        std::vector<index_t> sizes(groups_, 0);
        for (auto g : group_of_) ++sizes[g];
        return sizes;
    }

    index_t groups_;
    std::vector<index_t> ranks_;
    bool tag_mag_;
    std::vector<std::vector<float>> left_, right_;
    std::vector<std::uint8_t> group_of_;
    std::vector<std::uint32_t> local_of_;
};

// ---------------------------------------------------------------------------
// Tensor-train codec. The matrix reshapes into the 4-mode tensor (i1, a, i2, b)
// with row x = i1 + m1*i2 (zero padding past n) and column a*d2+b; three
// sequential truncated SVDs (64-bit) give cores G1 (m1 x R1), G2 (R1 x d1 x R2),
// G3 (R2 x m2 x R3), G4 (R3 x d2). Full ranks reconstruct exactly.
// payload: G1 | G2 | G3 | G4 (f32)
// ---------------------------------------------------------------------------
class TtCodec final : public Codec {
public:
    TtCodec(const DenseMatrix& m, index_t m1, index_t m2, index_t d1, index_t d2,
            const std::vector<index_t>& ranks)
            : Codec(m.rows, m.cols), m1_(m1), m2_(m2), d1_(d1), d2_(d2) {
        if (d1 * d2 != cols_) throw std::invalid_argument("tt: d1*d2 must equal the width");
        if (static_cast<std::uint64_t>(m1) * m2 < static_cast<std::uint64_t>(rows_))
            throw std::invalid_argument("tt: m1*m2 must cover the rows");
        Eigen::MatrixXd u1(m1, static_cast<Eigen::Index>(d1) * m2 * d2);
        u1.setZero();
        for (index_t i2 = 0; i2 < m2; ++i2)
            for (index_t i1 = 0; i1 < m1; ++i1) {
                const index_t x = i1 + m1 * i2;
                if (x >= rows_) continue;
                for (index_t a = 0; a < d1; ++a)
                    for (index_t b = 0; b < d2; ++b)
                        u1(i1, (a * m2 + i2) * d2 + b) = m.at(x, a * d2 + b);
            }
        auto truncate = [](const Eigen::MatrixXd& mat, index_t rank) {
            Eigen::BDCSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto limit = static_cast<index_t>(std::min(mat.rows(), mat.cols()));
            const index_t r = std::clamp<index_t>(rank, 1, limit);
            Eigen::MatrixXd u = svd.matrixU().leftCols(r);
            Eigen::MatrixXd rest = svd.singularValues().head(r).asDiagonal() *
                                   svd.matrixV().leftCols(r).transpose();
            return std::make_pair(std::move(u), std::move(rest));
        };
        auto [g1, c1] = truncate(u1, ranks[0]);
        r1_ = static_cast<index_t>(g1.cols());
        Eigen::MatrixXd u2(static_cast<Eigen::Index>(r1_) * d1,
                           static_cast<Eigen::Index>(m2) * d2);
        for (index_t r = 0; r < r1_; ++r)
            for (index_t a = 0; a < d1; ++a)
                for (index_t i2 = 0; i2 < m2; ++i2)
                    for (index_t b = 0; b < d2; ++b)
                        u2(r * d1 + a, i2 * d2 + b) = c1(r, (a * m2 + i2) * d2 + b);
        auto [g2, c2] = truncate(u2, ranks[1]);
        r2_ = static_cast<index_t>(g2.cols());
        Eigen::MatrixXd u3(static_cast<Eigen::Index>(r2_) * m2, d2);
        for (index_t r = 0; r < r2_; ++r)
            for (index_t i2 = 0; i2 < m2; ++i2)
                for (index_t b = 0; b < d2; ++b) u3(r * m2 + i2, b) = c2(r, i2 * d2 + b);
        auto [g3, c3] = truncate(u3, ranks[2]);
        r3_ = static_cast<index_t>(g3.cols());

        core1_.resize(static_cast<std::size_t>(m1_) * r1_);
        for (index_t i = 0; i < m1_; ++i)
            for (index_t r = 0; r < r1_; ++r) core1_[i * r1_ + r] = static_cast<float>(g1(i, r));
        core2_.resize(static_cast<std::size_t>(r1_) * d1_ * r2_);
        for (index_t r = 0; r < r1_; ++r)
            for (index_t a = 0; a < d1_; ++a)
                for (index_t s = 0; s < r2_; ++s)
                    core2_[(r * d1_ + a) * r2_ + s] = static_cast<float>(g2(r * d1_ + a, s));
        core3_.resize(static_cast<std::size_t>(r2_) * m2_ * r3_);
        for (index_t s = 0; s < r2_; ++s)
            for (index_t i2 = 0; i2 < m2_; ++i2)
                for (index_t t = 0; t < r3_; ++t)
                    core3_[(s * m2_ + i2) * r3_ + t] = static_cast<float>(g3(s * m2_ + i2, t));
        core4_.resize(static_cast<std::size_t>(r3_) * d2_);
        for (index_t t = 0; t < r3_; ++t)
            for (index_t b = 0; b < d2_; ++b) core4_[t * d2_ + b] = static_cast<float>(c3(t, b));
    }
    TtCodec(index_t rows, index_t cols) : Codec(rows, cols) {}

    const char* method() const override { return "tt"; }
    ChunkType chunk_type() const override { return ChunkType::kTtCodec; }
    std::uint64_t bytes() const override {
        return MemoryModel::kF32 *
               (static_cast<std::uint64_t>(core1_.size()) + core2_.size() + core3_.size() +
                core4_.size());
    }
    std::vector<index_t> ranks() const { return {r1_, r2_, r3_}; }

    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.meta()["m1"] = m1_;
        out.meta()["m2"] = m2_;
        out.meta()["d1"] = d1_;
        out.meta()["d2"] = d2_;
        out.meta()["ranks"] = ranks();
        out.append(std::span<const float>(core1_));
        out.append(std::span<const float>(core2_));
        out.append(std::span<const float>(core3_));
        out.append(std::span<const float>(core4_));
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        const auto& meta = c.meta();
        auto codec = std::make_unique<TtCodec>(meta.at("rows").get<index_t>(),
                                               meta.at("cols").get<index_t>());
        codec->m1_ = meta.at("m1").get<index_t>();
        codec->m2_ = meta.at("m2").get<index_t>();
        codec->d1_ = meta.at("d1").get<index_t>();
        codec->d2_ = meta.at("d2").get<index_t>();
        const auto ranks = meta.at("ranks").get<std::vector<index_t>>();
        codec->r1_ = ranks[0];
        codec->r2_ = ranks[1];
        codec->r3_ = ranks[2];
        auto r = c.reader();
        codec->core1_ = r.read_vector<float>(static_cast<std::size_t>(codec->m1_) * codec->r1_);
        codec->core2_ = r.read_vector<float>(static_cast<std::size_t>(codec->r1_) * codec->d1_ *
                                             codec->r2_);
        codec->core3_ = r.read_vector<float>(static_cast<std::size_t>(codec->r2_) * codec->m2_ *
                                             codec->r3_);
        codec->core4_ = r.read_vector<float>(static_cast<std::size_t>(codec->r3_) * codec->d2_);
        return codec;
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        const index_t i1 = id % m1_, i2 = id / m1_;
        std::vector<double> t2(static_cast<std::size_t>(d1_) * r2_, 0.0);
        for (index_t r = 0; r < r1_; ++r) {
            const double w = core1_[i1 * r1_ + r];
            if (w == 0) continue;
            for (index_t a = 0; a < d1_; ++a)
                for (index_t s = 0; s < r2_; ++s)
                    t2[a * r2_ + s] += w * core2_[(r * d1_ + a) * r2_ + s];
        }
        std::vector<double> u(static_cast<std::size_t>(d1_) * r3_, 0.0);
        for (index_t s = 0; s < r2_; ++s)
            for (index_t t = 0; t < r3_; ++t) {
                const double c3 = core3_[(s * m2_ + i2) * r3_ + t];
                if (c3 == 0) continue;
                for (index_t a = 0; a < d1_; ++a) u[a * r3_ + t] += t2[a * r2_ + s] * c3;
            }
        for (index_t a = 0; a < d1_; ++a)
            for (index_t b = 0; b < d2_; ++b) {
                double acc = 0;
                for (index_t t = 0; t < r3_; ++t) acc += u[a * r3_ + t] * core4_[t * d2_ + b];
                out[a * d2_ + b] = static_cast<float>(acc);
            }
    }

private:
    index_t m1_ = 0, m2_ = 0, d1_ = 0, d2_ = 0;
    index_t r1_ = 0, r2_ = 0, r3_ = 0;
    std::vector<float> core1_, core2_, core3_, core4_;
};

// ---------------------------------------------------------------------------
// Dedup: L2LSH over fixed-width blocks of the flattened table. Blocks share a
// representative (the first block seen) iff all L signatures coincide. The
// bucket width grows until the payload fits the byte target, then bisects
// back toward it to keep as many representatives as the budget allows.
// payload: representatives (R*b f32) | mapping (blocks u32)
// ---------------------------------------------------------------------------
class DedupCodec final : public Codec {
public:
    DedupCodec(const DenseMatrix& m, index_t block, index_t projections, double width,
               std::uint64_t seed, std::uint64_t byte_target)
            : Codec(m.rows, m.cols), block_(block), projections_(projections), seed_(seed) {
        const std::uint64_t total = static_cast<std::uint64_t>(rows_) * cols_;
        const std::uint64_t blocks = (total + block - 1) / block;
        const std::uint64_t floor_bytes =
                blocks * 4 + MemoryModel::kF32 * static_cast<std::uint64_t>(block);
        if (floor_bytes > byte_target)
            throw feasibility_error("dedup: mapping alone exceeds the byte target", floor_bytes);
        padded_.assign(blocks * block, 0.0f);
        std::copy(m.values.begin(), m.values.end(), padded_.begin());

        double lo = 0.0, hi = std::max(width, 1e-9);
        build(hi);
        int growth = 0;
        while (bytes() > byte_target && growth < 200) {
            lo = hi;
            hi *= 1.5;
            build(hi);
            ++growth;
        }
        if (bytes() > byte_target)
            throw feasibility_error("dedup: cannot merge below the byte target", bytes());
        if (lo > 0.0) {
            for (int iter = 0; iter < 18; ++iter) {
                const double mid = (lo + hi) / 2;
                build(mid);
                if (bytes() <= byte_target)
                    hi = mid;
                else
                    lo = mid;
            }
            build(hi);
        }
        width_ = hi;
        padded_.clear();
        padded_.shrink_to_fit();
    }
    DedupCodec(index_t rows, index_t cols) : Codec(rows, cols) {}

    const char* method() const override { return "dedup"; }
    ChunkType chunk_type() const override { return ChunkType::kDedupCodec; }
    std::uint64_t bytes() const override {
        return MemoryModel::kF32 * static_cast<std::uint64_t>(reps_.size()) +
               4ull * mapping_.size();
    }
    index_t block() const { return block_; }
    double width() const { return width_; }
    index_t representative_count() const { return static_cast<index_t>(reps_.size() / block_); }

    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.meta()["block"] = block_;
        out.meta()["projections"] = projections_;
        out.meta()["width"] = width_;
        out.meta()["seed"] = seed_;
        out.meta()["representatives"] = representative_count();
        out.append(std::span<const float>(reps_));
        out.append(std::span<const std::uint32_t>(mapping_));
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        const auto& meta = c.meta();
        auto codec = std::make_unique<DedupCodec>(meta.at("rows").get<index_t>(),
                                                  meta.at("cols").get<index_t>());
        codec->block_ = meta.at("block").get<index_t>();
        codec->projections_ = meta.at("projections").get<index_t>();
        codec->width_ = meta.at("width").get<double>();
        codec->seed_ = meta.at("seed").get<std::uint64_t>();
        const auto reps = meta.at("representatives").get<index_t>();
        const std::uint64_t total = static_cast<std::uint64_t>(codec->rows_) * codec->cols_;
        const std::uint64_t blocks = (total + codec->block_ - 1) / codec->block_;
        auto r = c.reader();
        codec->reps_ = r.read_vector<float>(static_cast<std::size_t>(reps) * codec->block_);
        codec->mapping_ = r.read_vector<std::uint32_t>(blocks);
        return codec;
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        const std::uint64_t start = static_cast<std::uint64_t>(id) * cols_;
        for (index_t c = 0; c < cols_;) {
            const std::uint64_t flat = start + c;
            const std::uint64_t blk = flat / block_;
            const std::uint64_t off = flat % block_;
            const index_t take =
                    std::min<index_t>(cols_ - c, static_cast<index_t>(block_ - off));
            const float* rep =
                    reps_.data() + static_cast<std::size_t>(mapping_[blk]) * block_ + off;
            std::copy(rep, rep + take, out + c);
            c += take;
        }
    }

private:
    void build(double width) {
        reps_.clear();
        mapping_.clear();
        const std::uint64_t blocks = padded_.size() / block_;
        mapping_.reserve(blocks);
        std::map<std::vector<std::int64_t>, std::uint32_t> seen;
        const LshParams params{block_, projections_, width, seed_};
        for (std::uint64_t b = 0; b < blocks; ++b) {
            const auto sig = lsh_signature(
                    std::span<const float>(padded_.data() + b * block_,
                                           static_cast<std::size_t>(block_)),
                    params);
            auto [it, inserted] =
                    seen.emplace(sig, static_cast<std::uint32_t>(reps_.size() / block_));
            if (inserted)
                reps_.insert(reps_.end(), padded_.begin() + b * block_,
                             padded_.begin() + (b + 1) * block_);
            mapping_.push_back(it->second);
        }
    }

    index_t block_ = 0;
    index_t projections_ = 4;
    double width_ = 0.05;
    std::uint64_t seed_ = 0;
    std::vector<float> padded_;
    std::vector<float> reps_;
    std::vector<std::uint32_t> mapping_;
};

// ---------------------------------------------------------------------------
// ThresholdPrune: keep entries with |v| > tau; tau comes from a binary search
// over the sorted magnitudes so the adaptive sparse payload fits the budget.
// Boundary ties keep the lowest (row, col) positions.
// payload (csr): values | cols u32 | row_ptr u32; (coo): values | rows | cols
// ---------------------------------------------------------------------------
class PruneCodec final : public Codec {
public:
    PruneCodec(const DenseMatrix& m, std::uint64_t byte_target) : Codec(m.rows, m.cols) {
        const std::uint64_t total = m.values.size();
        std::vector<float> mags(m.values.size());
        for (std::size_t i = 0; i < m.values.size(); ++i) mags[i] = std::abs(m.values[i]);
        std::sort(mags.begin(), mags.end(), std::greater<float>());
        std::uint64_t lo = 0, hi = total;
        while (lo < hi) {
            const std::uint64_t mid = lo + (hi - lo + 1) / 2;
            if (sparse_bytes(rows_, cols_, mid).second <= byte_target)
                lo = mid;
            else
                hi = mid - 1;
        }
        const std::uint64_t nnz = lo;
        tau_ = nnz < total ? mags[nnz] : -1.0f;  // tau below the minimum keeps everything
        std::uint64_t strictly_above = 0;
        for (float v : mags)
            if (v > tau_) ++strictly_above;
        std::uint64_t tie_budget = nnz - strictly_above;

        format_ = sparse_bytes(rows_, cols_, nnz).first;
        row_ptr_.assign(rows_ + 1, 0);
        for (index_t r = 0; r < rows_; ++r) {
            for (index_t c = 0; c < cols_; ++c) {
                const float v = m.at(r, c);
                const float mag = std::abs(v);
                bool keep = mag > tau_;
                if (!keep && mag == tau_ && tie_budget > 0) {
                    keep = true;
                    --tie_budget;
                }
                if (!keep) continue;
                values_.push_back(v);
                cols_idx_.push_back(static_cast<std::uint32_t>(c));
                if (format_ == SparseFormat::kCoo)
                    rows_idx_.push_back(static_cast<std::uint32_t>(r));
            }
            row_ptr_[r + 1] = static_cast<std::uint32_t>(values_.size());
        }
    }
    PruneCodec(index_t rows, index_t cols) : Codec(rows, cols) {}

    const char* method() const override { return "prune"; }
    ChunkType chunk_type() const override { return ChunkType::kThresholdPrune; }
    std::uint64_t bytes() const override {
        return sparse_bytes(rows_, cols_, values_.size()).second;
    }
    float tau() const { return tau_; }
    std::uint64_t nnz() const { return values_.size(); }
    SparseFormat format() const { return format_; }

    void save(Checkpoint& out) const override {
        out.set_type(chunk_type());
        out.meta()["rows"] = rows_;
        out.meta()["cols"] = cols_;
        out.meta()["format"] = to_string(format_);
        out.meta()["nnz"] = values_.size();
        out.meta()["tau"] = tau_;
        out.append(std::span<const float>(values_));
        if (format_ == SparseFormat::kCsr) {
            out.append(std::span<const std::uint32_t>(cols_idx_));
            out.append(std::span<const std::uint32_t>(row_ptr_));
        } else {
            out.append(std::span<const std::uint32_t>(rows_idx_));
            out.append(std::span<const std::uint32_t>(cols_idx_));
        }
    }
    static std::unique_ptr<Codec> load(const Checkpoint& c) {
        const auto& meta = c.meta();
        auto codec = std::make_unique<PruneCodec>(meta.at("rows").get<index_t>(),
                                                  meta.at("cols").get<index_t>());
        const auto nnz = meta.at("nnz").get<std::uint64_t>();
        codec->format_ = meta.at("format").get<std::string>() == "csr" ? SparseFormat::kCsr
                                                                       : SparseFormat::kCoo;
        codec->tau_ = meta.at("tau").get<float>();
        auto r = c.reader();
        codec->values_ = r.read_vector<float>(nnz);
        if (codec->format_ == SparseFormat::kCsr) {
            codec->cols_idx_ = r.read_vector<std::uint32_t>(nnz);
            codec->row_ptr_ = r.read_vector<std::uint32_t>(codec->rows_ + 1);
        } else {
            codec->rows_idx_ = r.read_vector<std::uint32_t>(nnz);
            codec->cols_idx_ = r.read_vector<std::uint32_t>(nnz);
            codec->row_ptr_.assign(codec->rows_ + 1, 0);
            for (auto row : codec->rows_idx_) ++codec->row_ptr_[row + 1];
            for (index_t i = 0; i < codec->rows_; ++i)
                codec->row_ptr_[i + 1] += codec->row_ptr_[i];
        }
        return codec;
    }

protected:
    void reconstruct_row(index_t id, float* out) const override {
        std::fill(out, out + cols_, 0.0f);
        for (std::uint32_t i = row_ptr_[id]; i < row_ptr_[id + 1]; ++i)
            out[cols_idx_[i]] = values_[i];
    }

private:
    float tau_ = 0;
    SparseFormat format_ = SparseFormat::kCsr;
    std::vector<float> values_;
    std::vector<std::uint32_t> cols_idx_, rows_idx_, row_ptr_;
};

}  // namespace

CompressResult compress(const DenseMatrix& matrix, const CompressionPlan& plan,
                        std::uint64_t seed) {
    if (!plan.feasible)
        throw feasibility_error("compress: infeasible plan for " + plan.method +
                                        " (nearest achievable " +
                                        std::to_string(plan.achieved_bytes) + " bytes)",
                                plan.achieved_bytes);
    const auto start = Clock::now();
    CompressResult res;
    const std::string& m = plan.method;
    if (m == "identity" || m == "full") {
        res.codec = std::make_unique<IdentityCodec>(matrix);
    } else if (m == "int8_16" || m == "int_codec") {
        res.codec = std::make_unique<IntCodec>(matrix, plan.dtype);
    } else if (m == "pq" || m == "mag_pq" || m == "mgqe") {
        res.codec = std::make_unique<PqCodec>(matrix, plan.pq_parts, plan.pq_centroids,
                                              std::max<index_t>(plan.groups, 1), seed,
                                              m == "mgqe");
    } else if (m == "svd") {
        res.codec =
                std::make_unique<SvdCodec>(matrix, std::vector<index_t>{plan.svd_rank}, 1, false);
    } else if (m == "mag_svd") {
        res.codec = std::make_unique<SvdCodec>(matrix, plan.group_ranks, plan.groups, true);
    } else if (m == "tt") {
        res.codec = std::make_unique<TtCodec>(matrix, plan.tt_row_factors[0],
                                              plan.tt_row_factors[1], plan.tt_col_factors[0],
                                              plan.tt_col_factors[1], plan.tt_ranks);
    } else if (m == "dedup") {
        res.codec = std::make_unique<DedupCodec>(matrix, plan.dedup_block, plan.lsh_projections,
                                                 plan.lsh_width, seed, plan.target_bytes);
    } else if (m == "prune" || m == "deeplight") {
        res.codec = std::make_unique<PruneCodec>(matrix, plan.target_bytes);
    } else {
        throw config_error("compress: unknown codec '" + m + "'");
    }
    res.bytes = res.codec->bytes();
    res.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

std::unique_ptr<Codec> codec_from_checkpoint(const Checkpoint& c) {
    switch (c.type()) {
        case ChunkType::kIdentityCodec: return IdentityCodec::load(c);
        case ChunkType::kIntCodec: return IntCodec::load(c);
        case ChunkType::kPqCodec:
        case ChunkType::kMagPqCodec: return PqCodec::load(c);
        case ChunkType::kSvdCodec:
        case ChunkType::kMagSvdCodec: return SvdCodec::load(c);
        case ChunkType::kTtCodec: return TtCodec::load(c);
        case ChunkType::kDedupCodec: return DedupCodec::load(c);
        case ChunkType::kThresholdPrune: return PruneCodec::load(c);
        default:
            throw parse_error(std::string("codec_from_checkpoint: unsupported type ") +
                              chunk_type_name(c.type()));
    }
}

}  // namespace emsq
