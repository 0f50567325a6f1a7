#include "emsq/train.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "emsq/eval.hpp"

namespace emsq {

std::unique_ptr<Store> build_store(const CompressionPlan& plan, const FeatureSpace& space,
                                   index_t dim, std::uint64_t seed) {
    const index_t n = space.total_features();
    const std::string& m = plan.method;
    if (m == "full" || m == "mgqe" || m == "dedup")
        return std::make_unique<FullTable>(n, dim, seed);
    if (m == "double_hash") return std::make_unique<DoubleHashTable>(n, dim, plan.rows, seed);
    if (m == "compo") return std::make_unique<CompoTable>(n, dim, plan.m1, plan.m2, seed);
    if (m == "memcom") return std::make_unique<MEmComTable>(n, dim, plan.rows, seed);
    if (m == "robe")
        return std::make_unique<RobeArray>(n, dim, plan.robe_len, plan.robe_chunk, seed);
    if (m == "ttrec")
        return std::make_unique<TtRecTable>(n, dim, plan.tt_row_factors, plan.tt_col_factors,
                                            plan.tt_ranks, seed);
    if (m == "fp16")
        return std::make_unique<QuantizedTable>(n, dim, StorageType::kF16, plan.rounding,
                                                QuantGranularity::kPerTable, plan.clip, seed);
    if (m == "int8_16")
        return std::make_unique<QuantizedTable>(n, dim, plan.dtype, plan.rounding,
                                                plan.granularity, plan.clip, seed);
    if (m == "alpt") return std::make_unique<AlptTable>(n, dim, plan.dtype, seed);
    if (m == "mde")
        return std::make_unique<MixedDimTable>(space, dim, plan.mde_dims, plan.mde_alpha,
                                               plan.mde_lambda, seed);
    if (m == "deeplight") return std::make_unique<PrunedTable>(n, dim, plan.density, seed);
    if (m == "adaptemb")
        return std::make_unique<AdaptiveTable>(n, dim, plan.rows, plan.promote_threshold,
                                               plan.exclusive_capacity, seed);
    throw config_error("build_store: unknown method '" + m + "'");
}

Scheduler default_scheduler(const std::string& method, const TrainConfig& cfg) {
    Scheduler sched;
    sched.eval_every = cfg.eval_every;
    sched.stages.push_back({Stage::Kind::kWarmup, cfg.warmup_epochs, cfg.patience});
    if (method == "deeplight") {
        sched.stages.push_back({Stage::Kind::kSearch, cfg.search_epochs, cfg.patience});
        sched.stages.push_back({Stage::Kind::kRetrain, cfg.retrain_epochs, cfg.patience});
    } else if (is_posttrain_wrapped(method)) {
        sched.stages.push_back({Stage::Kind::kCompress, 0.0, cfg.patience});
    }
    return sched;
}

double evaluate_auc(const Store& store, const DlrmLite& model, const Dataset& data, Split split,
                    index_t batch_size) {
    const auto indices = data.split_indices(split);
    const index_t k = data.fields, q = data.dense_width;
    std::vector<float> scores;
    std::vector<float> labels;
    scores.reserve(indices.size());
    labels.reserve(indices.size());
    std::vector<index_t> ids;
    std::vector<float> dense;
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const std::size_t count = std::min<std::size_t>(batch_size, indices.size() - start);
        ids.clear();
        dense.clear();
        for (std::size_t i = 0; i < count; ++i) {
            const index_t s = indices[start + i];
            for (index_t f = 0; f < k; ++f) ids.push_back(data.ids[s * k + f]);
            for (index_t j = 0; j < q; ++j) dense.push_back(data.dense[s * q + j]);
            labels.push_back(static_cast<float>(data.labels[s]));
        }
        const auto cache = model.forward(store, ids, dense);
        scores.insert(scores.end(), cache.predictions.begin(), cache.predictions.end());
    }
    return auc(std::span<const float>(scores), std::span<const float>(labels));
}

TrainOutcome train(const CompressionPlan& plan, const Dataset& data, const Scheduler& sched,
                   const TrainConfig& cfg, std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    const auto wall_start = Clock::now();

    const FeatureSpace space = data.space();
    Rng root(seed);
    TrainOutcome out;
    out.store = build_store(plan, space, cfg.dim, root.fork(1).next_u64());

    DlrmConfig mc;
    mc.fields = data.fields;
    mc.dense_width = data.dense_width;
    mc.dim = cfg.dim;
    mc.hidden1 = cfg.hidden1;
    mc.hidden2 = cfg.hidden2;
    out.model = std::make_unique<DlrmLite>(mc, root.fork(2).next_u64());

    const auto train_indices = data.split_indices(Split::kTrain);
    const index_t k = data.fields, q = data.dense_width;
    const auto batches_per_epoch = static_cast<index_t>(
            (train_indices.size() + cfg.batch_size - 1) / cfg.batch_size);

    TrainReport report;
    report.seed = seed;
    report.plan = plan;
    report.training_bytes = out.store->training_bytes();

    std::vector<index_t> order(train_indices);
    std::vector<index_t> ids;
    std::vector<float> dense, labels;
    auto* pruned = dynamic_cast<PrunedTable*>(out.store.get());
    auto* adaptive = dynamic_cast<AdaptiveTable*>(out.store.get());
    Rng shuffle_rng = root.fork(3);
    std::uint64_t epoch_counter = 0;

    for (const Stage& stage : sched.stages) {
        const auto stage_start = Clock::now();
        StageReport sr;
        sr.stage = to_string(stage.kind);

        if (stage.kind == Stage::Kind::kCompress) {
            auto* full = dynamic_cast<FullTable*>(out.store.get());
            if (!full) throw state_error("train: compress stage expects a full table");
            full->freeze();
            const auto matrix = full->to_matrix();
            auto compressed = compress(matrix, plan, root.fork(4).next_u64());
            auto codec_store = std::make_unique<CodecStore>(
                    std::shared_ptr<Codec>(std::move(compressed.codec)), plan.method);
            report.training_bytes =
                    std::max(report.training_bytes, codec_store->training_bytes());
            out.store = std::move(codec_store);
            sr.val_auc = evaluate_auc(*out.store, *out.model, data, Split::kValidation);
            sr.seconds = std::chrono::duration<double>(Clock::now() - stage_start).count();
            report.stages.push_back(sr);
            continue;
        }

        double best_auc = -1;
        int stale_evals = 0;
        const auto stage_batches =
                static_cast<std::int64_t>(stage.epochs * batches_per_epoch);
        const auto eval_stride = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(sched.eval_every * batches_per_epoch));
        bool stop = false;
        std::int64_t batch_no = 0;
        while (batch_no < stage_batches && !stop) {
            // reshuffle at each epoch boundary
            if (batch_no % batches_per_epoch == 0) {
                Rng r = shuffle_rng.fork(++epoch_counter);
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[r.next_below(i)]);
            }
            const auto b = static_cast<std::size_t>(batch_no % batches_per_epoch);
            const std::size_t start = b * cfg.batch_size;
            const std::size_t count =
                    std::min<std::size_t>(cfg.batch_size, order.size() - start);
            if (count == 0) {
                ++batch_no;
                continue;
            }
            ids.clear();
            dense.clear();
            labels.clear();
            for (std::size_t i = 0; i < count; ++i) {
                const index_t s = order[start + i];
                for (index_t f = 0; f < k; ++f) ids.push_back(data.ids[s * k + f]);
                for (index_t j = 0; j < q; ++j) dense.push_back(data.dense[s * q + j]);
                labels.push_back(static_cast<float>(data.labels[s]));
            }
            if (adaptive) adaptive->observe_and_promote(ids);
            const auto cache = out.model->forward(*out.store, ids, dense);
            const auto grads = out.model->backward(cache, labels);
            out.store->apply_gradients(ids, grads.embeddings, cfg.optimizer);
            out.model->apply_gradients(grads.theta, cfg.optimizer);
            ++batch_no;

            if (batch_no % eval_stride == 0 || batch_no == stage_batches) {
                if (pruned && stage.kind == Stage::Kind::kSearch) {
                    const double pos = std::min(
                            1.0, static_cast<double>(batch_no) / std::max<std::int64_t>(
                                                                         1, stage_batches));
                    pruned->prune_step(plan.density, pos);
                }
                const double val =
                        evaluate_auc(*out.store, *out.model, data, Split::kValidation);
                sr.val_auc = val;
                if (val > best_auc + 1e-9) {
                    best_auc = val;
                    stale_evals = 0;
                } else if (++stale_evals >= stage.patience) {
                    stop = true;
                }
            }
        }
        if (pruned && stage.kind == Stage::Kind::kSearch)
            pruned->prune_step(plan.density, 1.0);  // schedule always completes
        sr.epochs_run = static_cast<double>(batch_no) / batches_per_epoch;
        sr.seconds = std::chrono::duration<double>(Clock::now() - stage_start).count();
        report.stages.push_back(sr);
        report.training_bytes = std::max(report.training_bytes, out.store->training_bytes());
    }

    if (!out.store->frozen()) out.store->freeze();
    report.val_auc = evaluate_auc(*out.store, *out.model, data, Split::kValidation);
    report.test_auc = evaluate_auc(*out.store, *out.model, data, Split::kTest);
    report.inference_bytes = out.store->inference_bytes();
    report.train_seconds = std::chrono::duration<double>(Clock::now() - wall_start).count();
    out.report = std::move(report);
    return out;
}

}  // namespace emsq
