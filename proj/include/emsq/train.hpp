#pragma once

#include <memory>
#include <string>
#include <vector>

#include "emsq/budget.hpp"
#include "emsq/data.hpp"
#include "emsq/model.hpp"
#include "emsq/posttrain.hpp"
#include "emsq/stores.hpp"

namespace emsq {

// Builds the trainable store a plan describes. Posttrain-wrapped methods
// (mgqe, dedup) train a FullTable and compress after training, so they build
// a FullTable here.
std::unique_ptr<Store> build_store(const CompressionPlan& plan, const FeatureSpace& space,
                                   index_t dim, std::uint64_t seed);

// Read-only store backed by a codec; stands in for the embedding layer after
// post-training compression.
class CodecStore final : public Store {
public:
    CodecStore(std::shared_ptr<Codec> codec, std::string method_tag)
            : Store(codec->rows(), codec->cols()),
              codec_(std::move(codec)),
              tag_(std::move(method_tag)) {
        frozen_ = true;
    }
    const char* method() const override { return tag_.c_str(); }
    ChunkType chunk_type() const override { return codec_->chunk_type(); }
    std::uint64_t inference_bytes() const override { return codec_->bytes(); }
    std::uint64_t training_bytes() const override {
        // full-table training plus the codec payload
        return 3 * MemoryModel::dense_bytes(features_, dim_) + codec_->bytes();
    }
    void save(Checkpoint& out) const override { codec_->save(out); }
    const Codec& codec() const { return *codec_; }

protected:
    void lookup_row(index_t id, float* out) const override {
        const auto row = codec_->decompress_batch(std::span<const index_t>(&id, 1));
        std::copy(row.values.begin(), row.values.end(), out);
    }
    void backward(std::span<const index_t>, const MatrixT<float>&,
                  GradSink<float>&) const override {
        throw state_error("codec store: gradients are not defined after compression");
    }

private:
    std::shared_ptr<Codec> codec_;
    std::string tag_;
};

struct Stage {
    enum class Kind { kWarmup, kSearch, kRetrain, kCompress };
    Kind kind = Kind::kWarmup;
    double epochs = 1.0;
    int patience = 3;
};

inline const char* to_string(Stage::Kind k) {
    switch (k) {
        case Stage::Kind::kWarmup: return "warmup";
        case Stage::Kind::kSearch: return "search";
        case Stage::Kind::kRetrain: return "retrain";
        case Stage::Kind::kCompress: return "compress";
    }
    return "?";
}

struct Scheduler {
    std::vector<Stage> stages;
    double eval_every = 0.25;  // epochs between validation evaluations
};

struct TrainConfig {
    OptimizerConfig optimizer;
    index_t batch_size = 128;
    index_t dim = 16;
    index_t hidden1 = 64;
    index_t hidden2 = 32;
    double warmup_epochs = 2.0;
    double search_epochs = 1.0;
    double retrain_epochs = 1.0;
    double eval_every = 0.25;
    int patience = 3;
};

// Stage list per method: pruning inserts a search stage that ramps the mask
// plus a retrain stage; posttrain-wrapped methods end with a compress stage.
Scheduler default_scheduler(const std::string& method, const TrainConfig& cfg);

struct StageReport {
    std::string stage;
    double epochs_run = 0;
    double seconds = 0;
    double val_auc = 0;
};

struct TrainReport {
    double val_auc = 0;
    double test_auc = 0;
    std::uint64_t inference_bytes = 0;
    std::uint64_t training_bytes = 0;  // peak across stages, MemoryModel accounting
    double train_seconds = 0;
    std::vector<StageReport> stages;
    std::uint64_t seed = 0;
    CompressionPlan plan;
};

struct TrainOutcome {
    std::unique_ptr<Store> store;  // frozen
    std::unique_ptr<DlrmLite> model;
    TrainReport report;
};

TrainOutcome train(const CompressionPlan& plan, const Dataset& data, const Scheduler& sched,
                   const TrainConfig& cfg, std::uint64_t seed);

// Validation/test AUC of a trained (store, model) pair over one split.
double evaluate_auc(const Store& store, const DlrmLite& model, const Dataset& data, Split split,
                    index_t batch_size = 1024);

}  // namespace emsq
