#include "emsq/checkpoint.hpp"

#include <bit>
#include <fstream>

#include <nlohmann/json.hpp>

namespace emsq {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'E', 'M', 'S', 'Q'};

template <class T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw parse_error("checkpoint: truncated header");
    return v;
}
}  // namespace

const char* chunk_type_name(ChunkType t) {
    switch (t) {
        case ChunkType::kDenseMatrix: return "dense_matrix";
        case ChunkType::kDataset: return "dataset";
        case ChunkType::kFullTable: return "full_table";
        case ChunkType::kDoubleHashTable: return "double_hash_table";
        case ChunkType::kCompoTable: return "compo_table";
        case ChunkType::kMEmComTable: return "memcom_table";
        case ChunkType::kRobeArray: return "robe_array";
        case ChunkType::kTtRecTable: return "ttrec_table";
        case ChunkType::kQuantizedTable: return "quantized_table";
        case ChunkType::kAlptTable: return "alpt_table";
        case ChunkType::kMixedDimTable: return "mixed_dim_table";
        case ChunkType::kPrunedTable: return "pruned_table";
        case ChunkType::kAdaptiveTable: return "adaptive_table";
        case ChunkType::kPqCodec: return "pq_codec";
        case ChunkType::kMagPqCodec: return "mag_pq_codec";
        case ChunkType::kSvdCodec: return "svd_codec";
        case ChunkType::kMagSvdCodec: return "mag_svd_codec";
        case ChunkType::kTtCodec: return "tt_codec";
        case ChunkType::kDedupCodec: return "dedup_codec";
        case ChunkType::kThresholdPrune: return "threshold_prune";
        case ChunkType::kIntCodec: return "int_codec";
        case ChunkType::kIdentityCodec: return "identity_codec";
    }
    return "unknown";
}

nlohmann::json& Checkpoint::meta() {
    if (!meta_) meta_ = std::make_shared<nlohmann::json>(nlohmann::json::object());
    return *meta_;
}

const nlohmann::json& Checkpoint::meta() const {
    static const nlohmann::json empty = nlohmann::json::object();
    return meta_ ? *meta_ : empty;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    const std::string meta_text = meta().dump();
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, kVersion);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(type_));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(meta_text.size()));
    write_pod<std::uint64_t>(os, data_.size());
    os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    os.write(reinterpret_cast<const char*>(data_.data()),
             static_cast<std::streamsize>(data_.size()));
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw parse_error("checkpoint: bad magic in " + path);
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion)
        throw parse_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c(static_cast<ChunkType>(read_pod<std::uint32_t>(is)));
    const auto meta_len = read_pod<std::uint32_t>(is);
    const auto data_len = read_pod<std::uint64_t>(is);
    std::string meta_text(meta_len, '\0');
    is.read(meta_text.data(), meta_len);
    c.data_.resize(data_len);
    is.read(reinterpret_cast<char*>(c.data_.data()), static_cast<std::streamsize>(data_len));
    if (!is) throw parse_error("checkpoint: truncated payload in " + path);
    c.meta() = nlohmann::json::parse(meta_text);
    return c;
}

bool Checkpoint::sniff(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    char magic[4] = {0, 0, 0, 0};
    is.read(magic, 4);
    return is && std::memcmp(magic, kMagic, 4) == 0;
}

Checkpoint matrix_to_checkpoint(const DenseMatrix& m) {
    Checkpoint c(ChunkType::kDenseMatrix);
    c.meta()["rows"] = m.rows;
    c.meta()["cols"] = m.cols;
    c.append(std::span<const float>(m.values));
    return c;
}

DenseMatrix matrix_from_checkpoint(const Checkpoint& c) {
    if (c.type() != ChunkType::kDenseMatrix)
        throw parse_error("checkpoint: not a dense matrix");
    DenseMatrix m(c.meta().at("rows").get<index_t>(), c.meta().at("cols").get<index_t>());
    auto r = c.reader();
    r.read(std::span<float>(m.values));
    return m;
}

DenseMatrix load_matrix_any(const std::string& path) {
    if (Checkpoint::sniff(path)) return matrix_from_checkpoint(Checkpoint::load(path));
    std::ifstream sidecar(path + ".shape");
    if (!sidecar)
        throw config_error("matrix: " + path +
                           " is not a checkpoint and has no .shape sidecar");
    nlohmann::json shape = nlohmann::json::parse(sidecar);
    DenseMatrix m(shape.at("rows").get<index_t>(), shape.at("cols").get<index_t>());
    std::ifstream is(path, std::ios::binary);
    is.read(reinterpret_cast<char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (!is) throw parse_error("matrix: raw payload shorter than sidecar shape: " + path);
    return m;
}

}  // namespace emsq
