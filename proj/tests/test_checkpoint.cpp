#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emsq/checkpoint.hpp"

using namespace emsq;

TEST_SUITE_BEGIN("checkpoint");

namespace {
std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
std::vector<char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}
}  // namespace

TEST_CASE("dense matrix round trip is byte stable") {
    DenseMatrix m(3, 4);
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = float(i) * 0.5f;
    const auto path = temp_path("emsq_ckpt_matrix.bin");
    matrix_to_checkpoint(m).save(path);

    const auto loaded = Checkpoint::load(path);
    CHECK(loaded.type() == ChunkType::kDenseMatrix);
    CHECK(loaded.data_bytes() == m.values.size() * 4);  // payload = raw values
    const auto m2 = matrix_from_checkpoint(loaded);
    CHECK(m2.rows == 3);
    CHECK(m2.values == m.values);

    const auto path2 = temp_path("emsq_ckpt_matrix2.bin");
    matrix_to_checkpoint(m2).save(path2);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("raw matrix with shape sidecar") {
    const auto path = temp_path("emsq_raw_matrix.f32");
    {
        std::ofstream os(path, std::ios::binary);
        const float vals[6] = {1, 2, 3, 4, 5, 6};
        os.write(reinterpret_cast<const char*>(vals), sizeof(vals));
        std::ofstream side(path + ".shape");
        side << "{\"rows\": 2, \"cols\": 3}";
    }
    const auto m = load_matrix_any(path);
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    CHECK(m.at(1, 2) == 6.0f);
    std::remove(path.c_str());
    std::remove((path + ".shape").c_str());
}

TEST_CASE("bad magic is a parse error") {
    const auto path = temp_path("emsq_bad_magic.bin");
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPE and more";
    }
    CHECK_THROWS_AS(Checkpoint::load(path), parse_error);
    CHECK_FALSE(Checkpoint::sniff(path));
    std::remove(path.c_str());
}

TEST_SUITE_END();
