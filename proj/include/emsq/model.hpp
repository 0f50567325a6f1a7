#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "emsq/core.hpp"
#include "emsq/stores.hpp"

namespace emsq {

template <class T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// Mean binary cross-entropy. Zero iff predictions match labels exactly.
template <class T>
double bce_loss(std::span<const T> yhat, std::span<const float> labels) {
    double total = 0;
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        const double p = std::clamp(static_cast<double>(yhat[i]), 1e-12, 1.0 - 1e-12);
        const double y = labels[i];
        total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return total / static_cast<double>(yhat.size());
}

struct DlrmConfig {
    index_t fields = 1;       // k categorical fields
    index_t dense_width = 1;  // numerical feature width
    index_t dim = 16;         // shared embedding width d
    index_t hidden1 = 64;
    index_t hidden2 = 32;
};

// Desk-scale DLRM: one bottom affine+ReLU over the numerical features,
// pairwise dot interaction of the k+1 width-d vectors, and a two-layer ReLU
// top network with a scalar sigmoid output. Gradients are hand-derived.
template <class T>
class DlrmLiteT {
public:
    struct Cache {
        std::int64_t version = -1;
        index_t batch = 0;
        std::vector<index_t> ids;     // batch x k, row-major
        std::vector<T> dense;         // batch x q
        MatrixT<T> embeddings;        // (batch*k) x d
        std::vector<T> bottom_pre;    // batch x d
        std::vector<T> bottom;        // batch x d
        std::vector<T> interactions;  // batch x z
        std::vector<T> h1_pre, h1;    // batch x hidden1
        std::vector<T> h2_pre, h2;    // batch x hidden2
        std::vector<T> logits;        // batch
        std::vector<T> predictions;   // batch
    };

    struct Gradients {
        std::vector<T> theta;   // flat, same layout as params()
        MatrixT<T> embeddings;  // (batch*k) x d
    };

    DlrmLiteT(DlrmConfig cfg, std::uint64_t seed) : cfg_(cfg) {
        if (cfg.fields < 1 || cfg.dense_width < 1 || cfg.dim < 1)
            throw std::invalid_argument("dlrm: fields, dense width and dim must be >= 1");
        nz_ = (cfg.fields + 1) * cfg.fields / 2;
        offsets_ = Layout(cfg, nz_);
        params_.assign(offsets_.total, T(0));
        Rng rng(seed);
        auto init_block = [&](index_t off, index_t count, double sd) {
            for (index_t i = 0; i < count; ++i)
                params_[off + i] = static_cast<T>(rng.next_normal() * sd);
        };
        init_block(offsets_.wb, cfg.dim * cfg.dense_width, std::sqrt(2.0 / cfg.dense_width));
        init_block(offsets_.w1, cfg.hidden1 * nz_, std::sqrt(2.0 / nz_));
        init_block(offsets_.w2, cfg.hidden2 * cfg.hidden1, std::sqrt(2.0 / cfg.hidden1));
        init_block(offsets_.w3, cfg.hidden2, std::sqrt(1.0 / cfg.hidden2));
        // small positive biases keep ReLU units off their kink at init
        for (index_t i = offsets_.bb; i < offsets_.bb + cfg.dim; ++i) params_[i] = T(0.01);
        for (index_t i = offsets_.b1; i < offsets_.b1 + cfg.hidden1; ++i) params_[i] = T(0.01);
        for (index_t i = offsets_.b2; i < offsets_.b2 + cfg.hidden2; ++i) params_[i] = T(0.01);
    }

    const DlrmConfig& config() const { return cfg_; }
    index_t interaction_width() const { return nz_; }
    std::int64_t version() const { return version_; }

    // Forward pass for a batch. `ids` is row-major batch x k of global feature
    // ids, `dense` is batch x q. The cache holds everything backward needs.
    Cache forward(const StoreT<T>& store, std::span<const index_t> ids,
                  std::span<const T> dense) const {
        const index_t k = cfg_.fields, d = cfg_.dim, q = cfg_.dense_width;
        if (ids.size() % static_cast<std::size_t>(k) != 0)
            throw std::invalid_argument("dlrm: ids not a multiple of the field count");
        const index_t B = static_cast<index_t>(ids.size()) / k;
        if (dense.size() != static_cast<std::size_t>(B) * q)
            throw std::invalid_argument("dlrm: dense feature shape mismatch");
        if (store.dim() != d) throw std::invalid_argument("dlrm: store width != model width");

        Cache c;
        c.version = version_;
        c.batch = B;
        c.ids.assign(ids.begin(), ids.end());
        c.dense.assign(dense.begin(), dense.end());
        c.embeddings = store.lookup(ids);
        c.bottom_pre.resize(static_cast<std::size_t>(B) * d);
        c.bottom.resize(static_cast<std::size_t>(B) * d);
        c.interactions.resize(static_cast<std::size_t>(B) * nz_);
        c.h1_pre.resize(static_cast<std::size_t>(B) * cfg_.hidden1);
        c.h1.resize(static_cast<std::size_t>(B) * cfg_.hidden1);
        c.h2_pre.resize(static_cast<std::size_t>(B) * cfg_.hidden2);
        c.h2.resize(static_cast<std::size_t>(B) * cfg_.hidden2);
        c.logits.resize(B);
        c.predictions.resize(B);

        const T* wb = params_.data() + offsets_.wb;
        const T* bb = params_.data() + offsets_.bb;
        const T* w1 = params_.data() + offsets_.w1;
        const T* b1 = params_.data() + offsets_.b1;
        const T* w2 = params_.data() + offsets_.w2;
        const T* b2 = params_.data() + offsets_.b2;
        const T* w3 = params_.data() + offsets_.w3;
        const T b3 = params_[offsets_.b3];

        for (index_t i = 0; i < B; ++i) {
            const T* x = c.dense.data() + static_cast<std::size_t>(i) * q;
            T* u0 = c.bottom_pre.data() + static_cast<std::size_t>(i) * d;
            T* e0 = c.bottom.data() + static_cast<std::size_t>(i) * d;
            for (index_t r = 0; r < d; ++r) {
                T acc = bb[r];
                for (index_t cidx = 0; cidx < q; ++cidx) acc += wb[r * q + cidx] * x[cidx];
                u0[r] = acc;
                e0[r] = acc > T(0) ? acc : T(0);
            }
            // vectors v_0 = bottom, v_1..k = field embeddings
            auto vec = [&](index_t v) -> const T* {
                return v == 0 ? e0 : c.embeddings.row(i * k + (v - 1));
            };
            T* z = c.interactions.data() + static_cast<std::size_t>(i) * nz_;
            index_t p = 0;
            for (index_t a = 0; a <= k; ++a)
                for (index_t b = a + 1; b <= k; ++b, ++p) {
                    const T* va = vec(a);
                    const T* vb = vec(b);
                    T dot = 0;
                    for (index_t r = 0; r < d; ++r) dot += va[r] * vb[r];
                    z[p] = dot;
                }
            T* h1p = c.h1_pre.data() + static_cast<std::size_t>(i) * cfg_.hidden1;
            T* h1 = c.h1.data() + static_cast<std::size_t>(i) * cfg_.hidden1;
            for (index_t r = 0; r < cfg_.hidden1; ++r) {
                T acc = b1[r];
                for (index_t cidx = 0; cidx < nz_; ++cidx) acc += w1[r * nz_ + cidx] * z[cidx];
                h1p[r] = acc;
                h1[r] = acc > T(0) ? acc : T(0);
            }
            T* h2p = c.h2_pre.data() + static_cast<std::size_t>(i) * cfg_.hidden2;
            T* h2 = c.h2.data() + static_cast<std::size_t>(i) * cfg_.hidden2;
            for (index_t r = 0; r < cfg_.hidden2; ++r) {
                T acc = b2[r];
                for (index_t cidx = 0; cidx < cfg_.hidden1; ++cidx)
                    acc += w2[r * cfg_.hidden1 + cidx] * h1[cidx];
                h2p[r] = acc;
                h2[r] = acc > T(0) ? acc : T(0);
            }
            T logit = b3;
            for (index_t r = 0; r < cfg_.hidden2; ++r) logit += w3[r] * h2[r];
            c.logits[i] = logit;
            c.predictions[i] = sigmoid(logit);
        }
        return c;
    }

    // Exact gradients of the mean BCE loss w.r.t. theta and the embedding rows.
    Gradients backward(const Cache& c, std::span<const float> labels) const {
        if (c.version != version_)
            throw state_error("dlrm: backward with a stale forward cache");
        if (labels.size() != static_cast<std::size_t>(c.batch))
            throw std::invalid_argument("dlrm: label count != batch size");
        const index_t k = cfg_.fields, d = cfg_.dim, q = cfg_.dense_width;
        const index_t B = c.batch;

        Gradients g;
        g.theta.assign(params_.size(), T(0));
        g.embeddings = MatrixT<T>(B * k, d);

        const T* w1 = params_.data() + offsets_.w1;
        const T* w2 = params_.data() + offsets_.w2;
        const T* w3 = params_.data() + offsets_.w3;
        T* gwb = g.theta.data() + offsets_.wb;
        T* gbb = g.theta.data() + offsets_.bb;
        T* gw1 = g.theta.data() + offsets_.w1;
        T* gb1 = g.theta.data() + offsets_.b1;
        T* gw2 = g.theta.data() + offsets_.w2;
        T* gb2 = g.theta.data() + offsets_.b2;
        T* gw3 = g.theta.data() + offsets_.w3;

        std::vector<T> dh2(cfg_.hidden2), dh1(cfg_.hidden1), dz(nz_), dv0(d);
        for (index_t i = 0; i < B; ++i) {
            const T dlogit =
                    (c.predictions[i] - static_cast<T>(labels[i])) / static_cast<T>(B);
            const T* h1 = c.h1.data() + static_cast<std::size_t>(i) * cfg_.hidden1;
            const T* h2 = c.h2.data() + static_cast<std::size_t>(i) * cfg_.hidden2;
            const T* h1p = c.h1_pre.data() + static_cast<std::size_t>(i) * cfg_.hidden1;
            const T* h2p = c.h2_pre.data() + static_cast<std::size_t>(i) * cfg_.hidden2;
            const T* z = c.interactions.data() + static_cast<std::size_t>(i) * nz_;
            const T* e0 = c.bottom.data() + static_cast<std::size_t>(i) * d;
            const T* u0 = c.bottom_pre.data() + static_cast<std::size_t>(i) * d;
            const T* x = c.dense.data() + static_cast<std::size_t>(i) * q;

            g.theta[offsets_.b3] += dlogit;
            for (index_t r = 0; r < cfg_.hidden2; ++r) {
                gw3[r] += dlogit * h2[r];
                const T dpost = dlogit * w3[r];
                dh2[r] = h2p[r] > T(0) ? dpost : T(0);
            }
            for (index_t r = 0; r < cfg_.hidden2; ++r) {
                gb2[r] += dh2[r];
                for (index_t cidx = 0; cidx < cfg_.hidden1; ++cidx)
                    gw2[r * cfg_.hidden1 + cidx] += dh2[r] * h1[cidx];
            }
            for (index_t cidx = 0; cidx < cfg_.hidden1; ++cidx) {
                T acc = 0;
                for (index_t r = 0; r < cfg_.hidden2; ++r)
                    acc += w2[r * cfg_.hidden1 + cidx] * dh2[r];
                dh1[cidx] = h1p[cidx] > T(0) ? acc : T(0);
            }
            for (index_t r = 0; r < cfg_.hidden1; ++r) {
                gb1[r] += dh1[r];
                for (index_t cidx = 0; cidx < nz_; ++cidx)
                    gw1[r * nz_ + cidx] += dh1[r] * z[cidx];
            }
            for (index_t cidx = 0; cidx < nz_; ++cidx) {
                T acc = 0;
                for (index_t r = 0; r < cfg_.hidden1; ++r) acc += w1[r * nz_ + cidx] * dh1[r];
                dz[cidx] = acc;
            }
            // interaction: dv_a += dz_p * v_b, dv_b += dz_p * v_a
            auto vec = [&](index_t v) -> const T* {
                return v == 0 ? e0 : c.embeddings.row(i * k + (v - 1));
            };
            auto dvec = [&](index_t v) -> T* {
                return v == 0 ? dv0.data() : g.embeddings.row(i * k + (v - 1));
            };
            std::fill(dv0.begin(), dv0.end(), T(0));
            index_t p = 0;
            for (index_t a = 0; a <= k; ++a)
                for (index_t b = a + 1; b <= k; ++b, ++p) {
                    const T* va = vec(a);
                    const T* vb = vec(b);
                    T* dva = dvec(a);
                    T* dvb = dvec(b);
                    const T dzp = dz[p];
                    for (index_t r = 0; r < d; ++r) {
                        dva[r] += dzp * vb[r];
                        dvb[r] += dzp * va[r];
                    }
                }
            for (index_t r = 0; r < d; ++r) {
                const T du = u0[r] > T(0) ? dv0[r] : T(0);
                gbb[r] += du;
                for (index_t cidx = 0; cidx < q; ++cidx) gwb[r * q + cidx] += du * x[cidx];
            }
        }
        return g;
    }

    void apply_gradients(const std::vector<T>& theta_grads, const OptimizerConfig& opt) {
        if (theta_grads.size() != params_.size())
            throw std::invalid_argument("dlrm: gradient size mismatch");
        ++step_;
        if (opt.kind == OptimizerConfig::Kind::kSgd) {
            for (std::size_t i = 0; i < params_.size(); ++i)
                params_[i] -= static_cast<T>(opt.lr) * theta_grads[i];
        } else {
            if (m1_.size() != params_.size()) {
                m1_.assign(params_.size(), T(0));
                m2_.assign(params_.size(), T(0));
            }
            for (std::size_t i = 0; i < params_.size(); ++i)
                detail::adam_element(params_[i], m1_[i], m2_[i], theta_grads[i], opt, step_);
        }
        ++version_;
    }

    std::uint64_t parameter_bytes() const {
        return MemoryModel::kF32 * static_cast<std::uint64_t>(params_.size());
    }
    // Adam keeps two moments per parameter.
    std::uint64_t training_bytes() const { return 3 * parameter_bytes(); }

    const std::vector<T>& params() const { return params_; }
    void set_params(std::vector<T> p) {
        if (p.size() != params_.size()) throw std::invalid_argument("dlrm: param size mismatch");
        params_ = std::move(p);
        ++version_;
    }

private:
    struct Layout {
        Layout() = default;
        Layout(const DlrmConfig& cfg, index_t nz) {
            wb = 0;
            bb = wb + cfg.dim * cfg.dense_width;
            w1 = bb + cfg.dim;
            b1 = w1 + cfg.hidden1 * nz;
            w2 = b1 + cfg.hidden1;
            b2 = w2 + cfg.hidden2 * cfg.hidden1;
            w3 = b2 + cfg.hidden2;
            b3 = w3 + cfg.hidden2;
            total = b3 + 1;
        }
        index_t wb = 0, bb = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, total = 0;
    };

    DlrmConfig cfg_;
    index_t nz_ = 0;
    Layout offsets_;
    std::vector<T> params_;
    std::vector<T> m1_, m2_;
    std::int64_t step_ = 0;
    std::int64_t version_ = 0;
};

using DlrmLite = DlrmLiteT<float>;

}  // namespace emsq
