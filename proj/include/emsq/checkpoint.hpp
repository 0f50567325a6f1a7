#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "emsq/core.hpp"

namespace emsq {

// Container type tags. Values are part of the on-disk format; never reuse.
enum class ChunkType : std::uint32_t {
    kDenseMatrix = 1,
    kDataset = 2,
    kFullTable = 10,
    kDoubleHashTable = 11,
    kCompoTable = 12,
    kMEmComTable = 13,
    kRobeArray = 14,
    kTtRecTable = 15,
    kQuantizedTable = 16,
    kAlptTable = 17,
    kMixedDimTable = 18,
    kPrunedTable = 19,
    kAdaptiveTable = 20,
    kPqCodec = 30,
    kMagPqCodec = 31,
    kSvdCodec = 32,
    kMagSvdCodec = 33,
    kTtCodec = 34,
    kDedupCodec = 35,
    kThresholdPrune = 36,
    kIntCodec = 37,
    kIdentityCodec = 38,
};

const char* chunk_type_name(ChunkType t);

// Little-endian binary container:
//   magic "EMSQ" | version u32 | type u32 | meta_len u32 | data_len u64
// followed by a JSON meta block (shape and hyperparameters) and the raw data
// payload. The payload holds only the value arrays, so its length equals the
// MemoryModel byte formula for the stored structure.
class Checkpoint {
public:
    static constexpr std::uint32_t kVersion = 1;

    Checkpoint() = default;
    explicit Checkpoint(ChunkType type) : type_(type) {}

    ChunkType type() const { return type_; }
    void set_type(ChunkType t) { type_ = t; }

    nlohmann::json& meta();
    const nlohmann::json& meta() const;

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::uint64_t data_bytes() const { return data_.size(); }

    // -- payload writing ----------------------------------------------------
    template <class T>
    void append(std::span<const T> values) {
        static_assert(std::is_trivially_copyable_v<T>);
        const std::size_t old = data_.size();
        data_.resize(old + values.size_bytes());
        if (!values.empty()) std::memcpy(data_.data() + old, values.data(), values.size_bytes());
    }
    template <class T>
    void append(const std::vector<T>& values) {
        append(std::span<const T>(values));
    }

    // -- payload reading ----------------------------------------------------
    class Reader {
    public:
        explicit Reader(const Checkpoint& c) : data_(c.data_) {}
        template <class T>
        void read(std::span<T> out) {
            static_assert(std::is_trivially_copyable_v<T>);
            if (pos_ + out.size_bytes() > data_.size())
                throw parse_error("checkpoint: payload truncated");
            if (!out.empty()) std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
            pos_ += out.size_bytes();
        }
        template <class T>
        std::vector<T> read_vector(std::size_t count) {
            std::vector<T> v(count);
            read(std::span<T>(v));
            return v;
        }
        std::size_t remaining() const { return data_.size() - pos_; }

    private:
        const std::vector<std::uint8_t>& data_;
        std::size_t pos_ = 0;
    };
    Reader reader() const { return Reader(*this); }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
    static bool sniff(const std::string& path);  // true if the file starts with the magic

private:
    ChunkType type_ = ChunkType::kDenseMatrix;
    std::shared_ptr<nlohmann::json> meta_;  // lazily created; keeps json out of this header
    std::vector<std::uint8_t> data_;
};

// Dense-matrix convenience wrappers used by the CLI and the posttrain module.
Checkpoint matrix_to_checkpoint(const DenseMatrix& m);
DenseMatrix matrix_from_checkpoint(const Checkpoint& c);

// Accepts either the container format or raw little-endian f32 with a
// sidecar "<path>.shape" holding {"rows": R, "cols": C}.
DenseMatrix load_matrix_any(const std::string& path);

}  // namespace emsq
