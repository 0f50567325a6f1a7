#include <nlohmann/json.hpp>

#include "emsq/stores.hpp"

// Checkpoint layouts. The meta block carries shape and hyperparameters; the
// payload holds exactly the arrays the MemoryModel counts, in the order
// documented next to each save().

namespace emsq {

namespace {

template <class T>
std::vector<float> as_f32(const std::vector<T>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

void base_meta(nlohmann::json& meta, const char* method, index_t n, index_t d, bool frozen) {
    meta["method"] = method;
    meta["features"] = n;
    meta["dim"] = d;
    meta["frozen"] = frozen;
}

}  // namespace

// payload: table (n*d f32)
template <class T>
void FullTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kFullTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.append(std::span<const float>(as_f32(raw_values())));
}

// payload: table (m*d f32)
template <class T>
void DoubleHashTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kDoubleHashTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["rows"] = rows_;
    out.meta()["hash_seed"] = hashes_.seed();
    out.append(std::span<const float>(as_f32(table_.values)));
}

// payload: first (m1*d f32) | second (m2*d f32)
template <class T>
void CompoTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kCompoTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["m1"] = m1_;
    out.meta()["m2"] = m2_;
    out.append(std::span<const float>(as_f32(first_.values)));
    out.append(std::span<const float>(as_f32(second_.values)));
}

// payload: table (m*d f32) | scale (n f32) | bias (n f32)
template <class T>
void MEmComTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kMEmComTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["rows"] = rows_;
    out.meta()["hash_seed"] = hashes_.seed();
    out.append(std::span<const float>(as_f32(table_.values)));
    out.append(std::span<const float>(as_f32(scale_.values)));
    out.append(std::span<const float>(as_f32(bias_.values)));
}

// payload: array (Z f32)
template <class T>
void RobeArrayT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kRobeArray);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["array_len"] = len_;
    out.meta()["chunk"] = chunk_;
    out.meta()["hash_seed"] = hashes_.seed();
    out.append(std::span<const float>(as_f32(array_.values)));
}

// payload: cores in order, each (R_{i-1}*m_i*d_i*R_i f32)
template <class T>
void TtRecTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kTtRecTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["row_factors"] = row_factors_;
    out.meta()["col_factors"] = col_factors_;
    out.meta()["ranks"] = ranks_;
    for (const auto& core : cores_) out.append(std::span<const float>(as_f32(core.values)));
}

// payload: codes (n*d, dtype width) | per-row scales+biases (f32, per_row only).
// Per-table scale/bias live in the meta block as configuration constants.
template <class T>
void QuantizedTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kQuantizedTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["dtype"] = to_string(dtype_);
    out.meta()["rounding"] = rounding_ == Rounding::kStochastic ? "stochastic" : "nearest";
    out.meta()["granularity"] = gran_ == QuantGranularity::kPerRow ? "per_row" : "per_table";
    switch (dtype_) {
        case StorageType::kI8: out.append(std::span<const std::int8_t>(codes8_)); break;
        case StorageType::kI16: out.append(std::span<const std::int16_t>(codes16_)); break;
        case StorageType::kF16: out.append(std::span<const std::uint16_t>(half_)); break;
    }
    if (dtype_ != StorageType::kF16) {
        if (gran_ == QuantGranularity::kPerRow) {
            out.append(std::span<const float>(as_f32(scales_)));
            out.append(std::span<const float>(as_f32(biases_)));
        } else {
            out.meta()["scale"] = static_cast<double>(scales_[0]);
            out.meta()["bias"] = static_cast<double>(biases_[0]);
        }
    }
}

// payload: codes (n*d, dtype width) | scales (n f32)
template <class T>
void AlptTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kAlptTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["dtype"] = to_string(dtype_);
    if (dtype_ == StorageType::kI8)
        out.append(std::span<const std::int8_t>(codes8_));
    else
        out.append(std::span<const std::int16_t>(codes16_));
    out.append(std::span<const float>(as_f32(scales_.values)));
}

// payload: per field, table (n_f*d'_f f32); then per field, projection (d'_f*d f32)
template <class T>
void MixedDimTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kMixedDimTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["cardinalities"] = space_.cardinalities();
    out.meta()["field_dims"] = dims_;
    out.meta()["alpha"] = alpha_;
    out.meta()["lambda"] = lambda_;
    for (const auto& t : tables_) out.append(std::span<const float>(as_f32(t.values)));
    for (const auto& p : projections_) out.append(std::span<const float>(as_f32(p.values)));
}

// payload (csr): values (nnz f32) | cols (nnz u32) | row_ptr (n+1 u32)
// payload (coo): values (nnz f32) | rows (nnz u32) | cols (nnz u32)
template <class T>
void PrunedTableT<T>::save(Checkpoint& out) const {
    if (!this->frozen_)
        throw state_error("pruned: checkpointing requires freeze() first");
    out.set_type(ChunkType::kPrunedTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["format"] = to_string(format_);
    out.meta()["nnz"] = live_;
    out.meta()["target_density"] = target_density_;
    out.append(std::span<const float>(as_f32(values_)));
    if (format_ == SparseFormat::kCsr) {
        out.append(std::span<const std::uint32_t>(cols_));
        out.append(std::span<const std::uint32_t>(row_ptr_));
    } else {
        out.append(std::span<const std::uint32_t>(rows_));
        out.append(std::span<const std::uint32_t>(cols_));
    }
}

// payload: shared (m*d f32) | exclusive (used*d f32) | map (used * (id u32, slot u32))
template <class T>
void AdaptiveTableT<T>::save(Checkpoint& out) const {
    out.set_type(ChunkType::kAdaptiveTable);
    base_meta(out.meta(), method(), this->features_, this->dim_, this->frozen_);
    out.meta()["shared_rows"] = shared_rows_;
    out.meta()["threshold"] = threshold_;
    out.meta()["capacity"] = capacity_;
    out.meta()["promoted"] = promoted_count();
    out.meta()["hash_seed"] = hashes_.seed();
    out.append(std::span<const float>(as_f32(shared_.values)));
    const auto promos = sorted_promotions();
    std::vector<float> rows(static_cast<std::size_t>(promos.size()) * this->dim_);
    std::vector<std::uint32_t> map_pairs;
    map_pairs.reserve(promos.size() * 2);
    for (std::size_t i = 0; i < promos.size(); ++i) {
        const T* src = exclusive_.values.data() +
                       static_cast<std::size_t>(promos[i].second) * this->dim_;
        for (index_t j = 0; j < this->dim_; ++j)
            rows[i * this->dim_ + j] = static_cast<float>(src[j]);
        map_pairs.push_back(static_cast<std::uint32_t>(promos[i].first));
        map_pairs.push_back(static_cast<std::uint32_t>(promos[i].second));
    }
    out.append(std::span<const float>(rows));
    out.append(std::span<const std::uint32_t>(map_pairs));
}

template void FullTableT<float>::save(Checkpoint&) const;
template void FullTableT<double>::save(Checkpoint&) const;
template void DoubleHashTableT<float>::save(Checkpoint&) const;
template void DoubleHashTableT<double>::save(Checkpoint&) const;
template void CompoTableT<float>::save(Checkpoint&) const;
template void CompoTableT<double>::save(Checkpoint&) const;
template void MEmComTableT<float>::save(Checkpoint&) const;
template void MEmComTableT<double>::save(Checkpoint&) const;
template void RobeArrayT<float>::save(Checkpoint&) const;
template void RobeArrayT<double>::save(Checkpoint&) const;
template void TtRecTableT<float>::save(Checkpoint&) const;
template void TtRecTableT<double>::save(Checkpoint&) const;
template void QuantizedTableT<float>::save(Checkpoint&) const;
template void QuantizedTableT<double>::save(Checkpoint&) const;
template void AlptTableT<float>::save(Checkpoint&) const;
template void AlptTableT<double>::save(Checkpoint&) const;
template void MixedDimTableT<float>::save(Checkpoint&) const;
template void MixedDimTableT<double>::save(Checkpoint&) const;
template void PrunedTableT<float>::save(Checkpoint&) const;
template void PrunedTableT<double>::save(Checkpoint&) const;
template void AdaptiveTableT<float>::save(Checkpoint&) const;
template void AdaptiveTableT<double>::save(Checkpoint&) const;

// ---------------------------------------------------------------------------
// loading (float production path)
// ---------------------------------------------------------------------------

namespace {

std::vector<float> read_f32(Checkpoint::Reader& r, std::size_t count) {
    return r.read_vector<float>(count);
}

}  // namespace

std::unique_ptr<Store> store_from_checkpoint(const Checkpoint& c) {
    const auto& meta = c.meta();
    const auto n = meta.at("features").get<index_t>();
    const auto d = meta.at("dim").get<index_t>();
    const bool frozen = meta.value("frozen", false);
    auto r = c.reader();
    std::unique_ptr<Store> store;

    switch (c.type()) {
        case ChunkType::kFullTable: {
            auto s = std::make_unique<FullTable>(n, d, 0);
            s->raw_values() = read_f32(r, static_cast<std::size_t>(n) * d);
            store = std::move(s);
            break;
        }
        case ChunkType::kDoubleHashTable: {
            const auto rows = meta.at("rows").get<index_t>();
            auto s = std::make_unique<DoubleHashTable>(n, d, rows,
                                                       meta.at("hash_seed").get<std::uint64_t>());
            s->raw_values() = read_f32(r, static_cast<std::size_t>(rows) * d);
            store = std::move(s);
            break;
        }
        case ChunkType::kCompoTable: {
            const auto m1 = meta.at("m1").get<index_t>();
            const auto m2 = meta.at("m2").get<index_t>();
            auto s = std::make_unique<CompoTable>(n, d, m1, m2, 0);
            s->raw_first() = read_f32(r, static_cast<std::size_t>(m1) * d);
            s->raw_second() = read_f32(r, static_cast<std::size_t>(m2) * d);
            store = std::move(s);
            break;
        }
        case ChunkType::kQuantizedTable: {
            const auto dtype = storage_type_from(meta.at("dtype").get<std::string>());
            const auto gran = meta.at("granularity").get<std::string>() == "per_row"
                                      ? QuantGranularity::kPerRow
                                      : QuantGranularity::kPerTable;
            const auto rounding = meta.at("rounding").get<std::string>() == "nearest"
                                          ? Rounding::kNearest
                                          : Rounding::kStochastic;
            auto s = std::make_unique<QuantizedTable>(n, d, dtype, rounding, gran, 1.0, 0);
            const std::size_t nd = static_cast<std::size_t>(n) * d;
            switch (dtype) {
                case StorageType::kI8: r.read(std::span<std::int8_t>(s->codes8())); break;
                case StorageType::kI16: r.read(std::span<std::int16_t>(s->codes16())); break;
                case StorageType::kF16: r.read(std::span<std::uint16_t>(s->half_bits())); break;
            }
            (void)nd;
            if (dtype != StorageType::kF16) {
                if (gran == QuantGranularity::kPerRow) {
                    s->scales() = read_f32(r, static_cast<std::size_t>(n));
                    s->biases() = read_f32(r, static_cast<std::size_t>(n));
                } else {
                    s->scales() = {meta.at("scale").get<float>()};
                    s->biases() = {meta.at("bias").get<float>()};
                }
            }
            store = std::move(s);
            break;
        }
        case ChunkType::kAlptTable: {
            const auto dtype = storage_type_from(meta.at("dtype").get<std::string>());
            auto s = std::make_unique<AlptTable>(n, d, dtype, 0);
            if (dtype == StorageType::kI8)
                r.read(std::span<std::int8_t>(s->codes8()));
            else
                r.read(std::span<std::int16_t>(s->codes16()));
            s->scales() = read_f32(r, static_cast<std::size_t>(n));
            store = std::move(s);
            break;
        }
        case ChunkType::kMEmComTable: {
            const auto rows = meta.at("rows").get<index_t>();
            auto s = std::make_unique<MEmComTable>(n, d, rows,
                                                   meta.at("hash_seed").get<std::uint64_t>());
            s->raw_table() = read_f32(r, static_cast<std::size_t>(rows) * d);
            s->raw_scale() = read_f32(r, static_cast<std::size_t>(n));
            s->raw_bias() = read_f32(r, static_cast<std::size_t>(n));
            store = std::move(s);
            break;
        }
        case ChunkType::kRobeArray: {
            const auto len = meta.at("array_len").get<index_t>();
            auto s = std::make_unique<RobeArray>(n, d, len, meta.at("chunk").get<index_t>(),
                                                 meta.at("hash_seed").get<std::uint64_t>());
            s->raw_values() = read_f32(r, static_cast<std::size_t>(len));
            store = std::move(s);
            break;
        }
        case ChunkType::kTtRecTable: {
            const auto rf = meta.at("row_factors").get<std::vector<index_t>>();
            const auto cf = meta.at("col_factors").get<std::vector<index_t>>();
            const auto all_ranks = meta.at("ranks").get<std::vector<index_t>>();
            std::vector<index_t> inner(all_ranks.begin() + 1, all_ranks.end() - 1);
            auto s = std::make_unique<TtRecTable>(n, d, rf, cf, inner, 0);
            for (std::size_t i = 0; i < rf.size(); ++i)
                s->core_values(i) = read_f32(r, s->core_values(i).size());
            store = std::move(s);
            break;
        }
        case ChunkType::kMixedDimTable: {
            FeatureSpace space(meta.at("cardinalities").get<std::vector<index_t>>());
            auto s = std::make_unique<MixedDimTable>(
                    space, d, meta.at("field_dims").get<std::vector<index_t>>(),
                    meta.at("alpha").get<double>(), meta.at("lambda").get<double>(), 0);
            for (index_t f = 0; f < space.field_count(); ++f)
                s->raw_table(f) = read_f32(r, s->raw_table(f).size());
            for (index_t f = 0; f < space.field_count(); ++f)
                s->raw_projection(f) = read_f32(r, s->raw_projection(f).size());
            store = std::move(s);
            break;
        }
        case ChunkType::kPrunedTable: {
            const auto nnz = meta.at("nnz").get<std::uint64_t>();
            const bool csr = meta.at("format").get<std::string>() == "csr";
            auto values = read_f32(r, nnz);
            if (csr) {
                auto cols = r.read_vector<std::uint32_t>(nnz);
                auto row_ptr = r.read_vector<std::uint32_t>(static_cast<std::size_t>(n) + 1);
                store = std::make_unique<PrunedTable>(PrunedTable::restore_frozen(
                        n, d, meta.at("target_density").get<double>(), SparseFormat::kCsr,
                        std::move(values), std::move(cols), std::move(row_ptr)));
            } else {
                auto rows = r.read_vector<std::uint32_t>(nnz);
                auto cols = r.read_vector<std::uint32_t>(nnz);
                store = std::make_unique<PrunedTable>(PrunedTable::restore_frozen(
                        n, d, meta.at("target_density").get<double>(), SparseFormat::kCoo,
                        std::move(values), std::move(cols), std::move(rows)));
            }
            break;
        }
        case ChunkType::kAdaptiveTable: {
            const auto shared_rows = meta.at("shared_rows").get<index_t>();
            const auto promoted = meta.at("promoted").get<index_t>();
            auto s = std::make_unique<AdaptiveTable>(
                    n, d, shared_rows, meta.at("threshold").get<std::uint32_t>(),
                    meta.at("capacity").get<index_t>(),
                    meta.at("hash_seed").get<std::uint64_t>());
            s->shared_values() = read_f32(r, static_cast<std::size_t>(shared_rows) * d);
            auto rows = read_f32(r, static_cast<std::size_t>(promoted) * d);
            auto pairs = r.read_vector<std::uint32_t>(static_cast<std::size_t>(promoted) * 2);
            for (index_t i = 0; i < promoted; ++i)
                s->restore_promotion(
                        static_cast<index_t>(pairs[2 * i]), static_cast<index_t>(pairs[2 * i + 1]),
                        std::span<const float>(rows.data() + static_cast<std::size_t>(i) * d,
                                               static_cast<std::size_t>(d)));
            store = std::move(s);
            break;
        }
        default:
            throw parse_error(std::string("store_from_checkpoint: unsupported type ") +
                              chunk_type_name(c.type()));
    }
    if (frozen) store->freeze();
    return store;
}

}  // namespace emsq
