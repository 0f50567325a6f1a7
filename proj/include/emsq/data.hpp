#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emsq/checkpoint.hpp"
#include "emsq/core.hpp"

namespace emsq {

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

// In-memory CTR dataset: per sample, one global feature id per field, a dense
// feature vector and a binary label. Immutable once built; the split tag is
// seed-deterministic.
struct Dataset {
    index_t fields = 0;
    index_t dense_width = 0;
    std::vector<index_t> cardinalities;   // per field
    std::vector<index_t> ids;             // samples x fields
    std::vector<float> dense;             // samples x dense_width
    std::vector<std::uint8_t> labels;     // samples
    std::vector<std::uint8_t> split_tag;  // samples

    index_t samples() const { return static_cast<index_t>(labels.size()); }
    FeatureSpace space() const { return FeatureSpace(cardinalities); }
    std::vector<index_t> split_indices(Split s) const {
        std::vector<index_t> out;
        for (index_t i = 0; i < samples(); ++i)
            if (split_tag[i] == static_cast<std::uint8_t>(s)) out.push_back(i);
        return out;
    }
    double label_mean() const {
        double total = 0;
        for (auto l : labels) total += l;
        return labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
    }

    Checkpoint to_checkpoint() const;
    static Dataset from_checkpoint(const Checkpoint& c);
};

// Power-law synthetic CTR source with a planted logistic signal: labels are
// Bernoulli(sigmoid((sum of pairwise dots of hidden per-feature embeddings +
// dense contribution + bias) / temperature)) with the bias re-centered so the
// label balance stays away from degenerate.
struct SyntheticSpec {
    std::vector<index_t> cardinalities = {25000, 25000, 25000, 25000};
    double zipf_exponent = 1.4;
    index_t dense_width = 2;
    index_t true_dim = 8;
    double temperature = 1.0;
    index_t samples = 100000;
    std::uint64_t seed = 42;
    double train_fraction = 0.8;
    double validation_fraction = 0.1;
};

Dataset generate(const SyntheticSpec& spec);

struct SkewSummary {
    double top10_share = 0;     // share of occurrences held by the top-10% features
    double tail_lt5_share = 0;  // fraction of features with < 5 occurrences
    double label_balance = 0;
};

SkewSummary skew_summary(const Dataset& data);

// CSV ingestion: header row, comma separation, UTF-8. Categorical cells map
// to dense ids through a first-seen dictionary built on the train split; id 0
// of every field is reserved for unseen/empty values.
struct CsvSchema {
    std::string label_column;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> numeric_columns;
    bool log_transform = true;  // numeric v -> ln(1 + max(v, 0))
    double train_fraction = 0.8;
    double validation_fraction = 0.1;
    std::uint64_t seed = 42;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

}  // namespace emsq
