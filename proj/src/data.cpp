#include "emsq/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "emsq/model.hpp"

namespace emsq {

namespace {

std::uint8_t split_of(std::uint64_t seed, index_t sample, double train_frac, double val_frac) {
    Rng rng(seed ^ (0x5851f42d4c957f2dull + static_cast<std::uint64_t>(sample) * 0x14057b7ef767814full));
    const double u = rng.next_double();
    if (u < train_frac) return static_cast<std::uint8_t>(Split::kTrain);
    if (u < train_frac + val_frac) return static_cast<std::uint8_t>(Split::kValidation);
    return static_cast<std::uint8_t>(Split::kTest);
}

}  // namespace

Checkpoint Dataset::to_checkpoint() const {
    Checkpoint c(ChunkType::kDataset);
    c.meta()["fields"] = fields;
    c.meta()["dense_width"] = dense_width;
    c.meta()["cardinalities"] = cardinalities;
    c.meta()["samples"] = samples();
    std::vector<std::uint32_t> packed_ids(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        packed_ids[i] = static_cast<std::uint32_t>(ids[i]);
    c.append(std::span<const std::uint32_t>(packed_ids));
    c.append(std::span<const float>(dense));
    c.append(std::span<const std::uint8_t>(labels));
    c.append(std::span<const std::uint8_t>(split_tag));
    return c;
}

Dataset Dataset::from_checkpoint(const Checkpoint& c) {
    if (c.type() != ChunkType::kDataset) throw parse_error("checkpoint: not a dataset");
    Dataset d;
    d.fields = c.meta().at("fields").get<index_t>();
    d.dense_width = c.meta().at("dense_width").get<index_t>();
    d.cardinalities = c.meta().at("cardinalities").get<std::vector<index_t>>();
    const auto samples = c.meta().at("samples").get<index_t>();
    auto r = c.reader();
    const auto packed =
            r.read_vector<std::uint32_t>(static_cast<std::size_t>(samples) * d.fields);
    d.ids.assign(packed.begin(), packed.end());
    d.dense = r.read_vector<float>(static_cast<std::size_t>(samples) * d.dense_width);
    d.labels = r.read_vector<std::uint8_t>(samples);
    d.split_tag = r.read_vector<std::uint8_t>(samples);
    return d;
}

Dataset generate(const SyntheticSpec& spec) {
    if (spec.samples < 1) throw config_error("generate: sample count must be >= 1");
    for (index_t c : spec.cardinalities)
        if (c < 1) throw config_error("generate: cardinalities must be >= 1");

    FeatureSpace space(spec.cardinalities);
    const index_t k = space.field_count();
    const index_t n = space.total_features();
    Dataset d;
    d.fields = k;
    d.dense_width = spec.dense_width;
    d.cardinalities = spec.cardinalities;
    d.ids.resize(static_cast<std::size_t>(spec.samples) * k);
    d.dense.resize(static_cast<std::size_t>(spec.samples) * spec.dense_width);
    d.labels.resize(spec.samples);
    d.split_tag.resize(spec.samples);

    Rng root(spec.seed);

    // per-field Zipf cumulative weights over a seeded rank->id permutation
    std::vector<std::vector<double>> cdf(k);
    std::vector<std::vector<index_t>> rank_to_id(k);
    for (index_t f = 0; f < k; ++f) {
        const index_t nf = space.cardinality(f);
        Rng field_rng = root.fork(1000 + f);
        rank_to_id[f].resize(nf);
        std::iota(rank_to_id[f].begin(), rank_to_id[f].end(), index_t(0));
        for (index_t i = nf - 1; i > 0; --i)
            std::swap(rank_to_id[f][i], rank_to_id[f][field_rng.next_below(i + 1)]);
        cdf[f].resize(nf);
        double total = 0;
        for (index_t r = 0; r < nf; ++r) {
            total += std::pow(static_cast<double>(r + 1), -spec.zipf_exponent);
            cdf[f][r] = total;
        }
        for (auto& v : cdf[f]) v /= total;
    }

    // hidden per-feature embeddings carrying the planted signal
    Rng emb_rng = root.fork(2);
    const double emb_sd = 1.0 / std::sqrt(static_cast<double>(spec.true_dim));
    std::vector<double> true_emb(static_cast<std::size_t>(n) * spec.true_dim);
    for (auto& v : true_emb) v = emb_rng.next_normal() * emb_sd;
    std::vector<double> dense_weights(spec.dense_width);
    for (auto& v : dense_weights) v = emb_rng.next_normal();

    // draw features and the dense context, collect logits
    Rng draw_rng = root.fork(3);
    std::vector<double> logits(spec.samples, 0.0);
    for (index_t s = 0; s < spec.samples; ++s) {
        for (index_t f = 0; f < k; ++f) {
            const double u = draw_rng.next_double();
            const auto it = std::lower_bound(cdf[f].begin(), cdf[f].end(), u);
            const index_t rank = std::min<index_t>(
                    static_cast<index_t>(it - cdf[f].begin()), space.cardinality(f) - 1);
            d.ids[s * k + f] = space.global_id(f, rank_to_id[f][rank]);
        }
        double logit = 0;
        for (index_t a = 0; a < k; ++a)
            for (index_t b = a + 1; b < k; ++b) {
                const double* ua = true_emb.data() + d.ids[s * k + a] * spec.true_dim;
                const double* ub = true_emb.data() + d.ids[s * k + b] * spec.true_dim;
                double dot = 0;
                for (index_t t = 0; t < spec.true_dim; ++t) dot += ua[t] * ub[t];
                logit += dot;
            }
        for (index_t q = 0; q < spec.dense_width; ++q) {
            const double x = draw_rng.next_normal();
            d.dense[s * spec.dense_width + q] = static_cast<float>(x);
            logit += dense_weights[q] * x;
        }
        logits[s] = logit;
    }

    // re-center the planted bias so the label balance stays in [0.2, 0.8]
    const double bias =
            -std::accumulate(logits.begin(), logits.end(), 0.0) / double(spec.samples);
    Rng label_rng = root.fork(4);
    for (index_t s = 0; s < spec.samples; ++s) {
        const double p = sigmoid((logits[s] + bias) / spec.temperature);
        d.labels[s] = label_rng.next_double() < p ? 1 : 0;
        d.split_tag[s] =
                split_of(spec.seed, s, spec.train_fraction, spec.validation_fraction);
    }
    return d;
}

SkewSummary skew_summary(const Dataset& data) {
    const FeatureSpace space = data.space();
    std::vector<std::uint64_t> counts(space.total_features(), 0);
    for (index_t id : data.ids) ++counts[id];
    std::vector<std::uint64_t> sorted = counts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::uint64_t total = std::accumulate(sorted.begin(), sorted.end(), 0ull);
    const auto top = static_cast<std::size_t>(
            std::ceil(0.10 * static_cast<double>(space.total_features())));
    std::uint64_t top_occ = 0;
    for (std::size_t i = 0; i < top && i < sorted.size(); ++i) top_occ += sorted[i];
    std::uint64_t lt5 = 0;
    for (auto c : counts)
        if (c < 5) ++lt5;
    SkewSummary s;
    s.top10_share = total ? static_cast<double>(top_occ) / total : 0.0;
    s.tail_lt5_share = static_cast<double>(lt5) / static_cast<double>(counts.size());
    s.label_balance = data.label_mean();
    return s;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream is(path);
    if (!is) throw config_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw parse_error("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    std::unordered_map<std::string, index_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i)
        col_of[header[i]] = static_cast<index_t>(i);

    auto require = [&](const std::string& name) {
        const auto it = col_of.find(name);
        if (it == col_of.end())
            throw config_error("load_csv: column '" + name + "' missing from header");
        return it->second;
    };
    const index_t label_col = require(schema.label_column);
    std::vector<index_t> cat_cols, num_cols;
    for (const auto& c : schema.categorical_columns) cat_cols.push_back(require(c));
    for (const auto& c : schema.numeric_columns) num_cols.push_back(require(c));

    const index_t k = static_cast<index_t>(cat_cols.size());
    if (k < 1) throw config_error("load_csv: need at least one categorical column");

    struct Row {
        std::vector<std::string> cats;
        std::vector<float> nums;
        std::uint8_t label;
        std::uint8_t split;
    };
    std::vector<Row> rows;
    index_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw parse_error("load_csv: line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        Row row;
        const std::string& lab = cells[label_col];
        if (lab == "0")
            row.label = 0;
        else if (lab == "1")
            row.label = 1;
        else
            throw parse_error("load_csv: line " + std::to_string(line_no) +
                              ": label must be 0 or 1, got '" + lab + "'");
        for (index_t c : cat_cols) row.cats.push_back(cells[c]);
        for (index_t c : num_cols) {
            const std::string& cell = cells[c];
            float v = 0;
            if (!cell.empty()) {
                try {
                    std::size_t used = 0;
                    v = std::stof(cell, &used);
                    if (used != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw parse_error("load_csv: line " + std::to_string(line_no) +
                                      ": bad numeric cell '" + cell + "'");
                }
            }
            if (schema.log_transform) v = std::log1p(std::max(v, 0.0f));
            row.nums.push_back(v);
        }
        row.split = split_of(schema.seed, static_cast<index_t>(rows.size()),
                             schema.train_fraction, schema.validation_fraction);
        rows.push_back(std::move(row));
    }

    // first-seen dictionaries over the train split; id 0 per field = unseen
    std::vector<std::unordered_map<std::string, index_t>> dict(k);
    for (const auto& row : rows) {
        if (row.split != static_cast<std::uint8_t>(Split::kTrain)) continue;
        for (index_t f = 0; f < k; ++f) {
            if (row.cats[f].empty()) continue;
            auto& m = dict[f];
            m.emplace(row.cats[f], static_cast<index_t>(m.size() + 1));
        }
    }

    Dataset d;
    d.fields = k;
    d.dense_width = static_cast<index_t>(num_cols.size());
    for (index_t f = 0; f < k; ++f)
        d.cardinalities.push_back(static_cast<index_t>(dict[f].size() + 1));
    const FeatureSpace space(d.cardinalities);
    for (const auto& row : rows) {
        for (index_t f = 0; f < k; ++f) {
            index_t local = 0;  // reserved unseen/empty id
            if (!row.cats[f].empty()) {
                const auto it = dict[f].find(row.cats[f]);
                if (it != dict[f].end()) local = it->second;
            }
            d.ids.push_back(space.global_id(f, local));
        }
        d.dense.insert(d.dense.end(), row.nums.begin(), row.nums.end());
        d.labels.push_back(row.label);
        d.split_tag.push_back(row.split);
    }
    return d;
}

}  // namespace emsq
