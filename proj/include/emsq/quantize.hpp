#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "emsq/common.hpp"

namespace emsq {

enum class Rounding { kNearest, kStochastic };

// Affine integer grid: value = code * scale + bias, code in [0, levels].
// i8 storage keeps code-128, i16 keeps code-32768, so the byte width matches
// the data type while bias = min stays exact.
namespace qz {

inline constexpr int kLevels8 = 255;
inline constexpr int kLevels16 = 65535;

template <class T, class RngT>
int encode(T value, T scale, T bias, int levels, Rounding rounding, RngT& rng) {
    if (scale <= T(0)) return 0;
    const T x = (value - bias) / scale;
    int code;
    if (rounding == Rounding::kNearest) {
        code = static_cast<int>(std::floor(static_cast<double>(x) + 0.5));
    } else {
        const double lo = std::floor(static_cast<double>(x));
        const double frac = static_cast<double>(x) - lo;
        code = static_cast<int>(lo) + (rng.next_double() < frac ? 1 : 0);
    }
    return std::clamp(code, 0, levels);
}

template <class T>
T decode(int code, T scale, T bias) {
    return static_cast<T>(code) * scale + bias;
}

// Exact per-row calibration: scale = (max - min) / levels, bias = min.
template <class T>
std::pair<T, T> calibrate(const T* row, std::int64_t count, int levels) {
    T lo = row[0], hi = row[0];
    for (std::int64_t i = 1; i < count; ++i) {
        lo = std::min(lo, row[i]);
        hi = std::max(hi, row[i]);
    }
    T scale = (hi - lo) / static_cast<T>(levels);
    if (scale <= T(0)) scale = T(1);
    return {scale, lo};
}

}  // namespace qz

// IEEE-754 binary16 conversion. Round-to-nearest-even on the way down; the
// way up is exact. Overflow clamps to the largest finite half.
namespace f16 {

inline std::uint16_t from_f32(float f) {
    std::uint32_t x;
    std::memcpy(&x, &f, 4);
    const std::uint32_t sign = (x >> 16) & 0x8000u;
    x &= 0x7fffffffu;
    if (x >= 0x47800000u) {                          // >= 2^16: clamp (or NaN)
        if (x > 0x7f800000u) return static_cast<std::uint16_t>(sign | 0x7e00u);  // NaN
        return static_cast<std::uint16_t>(sign | 0x7bffu);                       // 65504
    }
    if (x < 0x38800000u) {                           // below 2^-14: subnormal or zero
        if (x < 0x33000000u) return static_cast<std::uint16_t>(sign);  // < 2^-25 -> 0
        const std::uint32_t shift = 125u - (x >> 23);
        const std::uint32_t mant = (x & 0x7fffffu) | 0x800000u;
        std::uint32_t half = mant >> (shift + 1);
        const std::uint32_t rem = mant & ((1u << (shift + 1)) - 1);
        const std::uint32_t halfway = 1u << shift;
        if (rem > halfway || (rem == halfway && (half & 1u))) half += 1;
        return static_cast<std::uint16_t>(sign | half);
    }
    std::uint32_t half = (((x >> 23) - 112u) << 10) | ((x >> 13) & 0x3ffu);
    const std::uint32_t rem = x & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) half += 1;
    if (half >= 0x7c00u) half = 0x7bffu;             // rounding crossed into inf: clamp
    return static_cast<std::uint16_t>(sign | half);
}

inline float to_f32(std::uint16_t h) {
    const std::uint32_t sign = (static_cast<std::uint32_t>(h) & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1fu;
    const std::uint32_t mant = h & 0x3ffu;
    std::uint32_t bits;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // subnormal: value = mant * 2^-24; renormalize into f32
            int e = -1;
            std::uint32_t m = mant;
            while (!(m & 0x400u)) {
                m <<= 1;
                --e;
            }
            bits = sign | static_cast<std::uint32_t>((e + 114) << 23) | ((m & 0x3ffu) << 13);
        }
    } else if (exp == 31) {
        bits = sign | 0x7f800000u | (mant << 13);
    } else {
        bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

// Adjacent representable halves around a finite value (clamped to +-65504).
inline std::pair<float, float> bracket(float v) {
    const std::uint16_t h = from_f32(v);
    const float hv = to_f32(h);
    auto step = [](std::uint16_t bits, bool up) -> std::uint16_t {
        // walk the half lattice in value order across the sign boundary
        const bool negative = bits & 0x8000u;
        std::uint16_t mag = bits & 0x7fffu;
        if (up == !negative) {
            if (mag >= 0x7bffu) return static_cast<std::uint16_t>((bits & 0x8000u) | 0x7bffu);
            return static_cast<std::uint16_t>((bits & 0x8000u) | (mag + 1));
        }
        if (mag == 0) return up ? std::uint16_t(0x0001u) : std::uint16_t(0x8001u);
        return static_cast<std::uint16_t>((bits & 0x8000u) | (mag - 1));
    };
    if (hv <= v) return {hv, to_f32(step(h, true))};
    return {to_f32(step(h, false)), hv};
}

template <class RngT>
std::uint16_t round_stochastic(float v, RngT& rng) {
    const auto [lo, hi] = bracket(v);
    if (hi <= lo || v <= lo) return from_f32(lo);
    if (v >= hi) return from_f32(hi);
    const double frac = (static_cast<double>(v) - lo) / (static_cast<double>(hi) - lo);
    return from_f32(rng.next_double() < frac ? hi : lo);
}

}  // namespace f16
}  // namespace emsq
