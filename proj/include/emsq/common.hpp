#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace emsq {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. std::invalid_argument is used directly for precondition
// violations; the types below carry the remaining failure classes.
struct state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct capacity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct feasibility_error : std::runtime_error {
    feasibility_error(const std::string& msg, std::uint64_t nearest)
            : std::runtime_error(msg), nearest_bytes(nearest) {}
    std::uint64_t nearest_bytes = 0;
};
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct undefined_metric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic 64-bit generator (splitmix64). All randomness in the library
// flows through this type so that runs are reproducible across platforms;
// std::random distributions are not bit-stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) by rejection, bias-free.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller (cached spare kept for the next call).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Derives an independent stream, e.g. one per field or per PQ part.
    Rng fork(std::uint64_t stream) const {
        Rng child(state_ ^ (0xa0761d6478bd642full + stream * 0xe7037ed1a0b428dbull));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Percentage with one decimal, rounded half-up: 3.0625 -> "306.3%".
// printf("%.1f") rounds half-to-even and would print 306.2.
inline std::string format_percent(double fraction) {
    const double scaled = fraction * 1000.0;
    const long long tenths = static_cast<long long>(std::floor(scaled + 0.5));
    std::string sign = tenths < 0 ? "-" : "";
    const long long mag = tenths < 0 ? -tenths : tenths;
    return sign + std::to_string(mag / 10) + "." + std::to_string(mag % 10) + "%";
}

}  // namespace emsq
