#include "emsq/budget.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace emsq {

namespace {

std::uint64_t f32_bytes(std::uint64_t elements) { return elements * MemoryModel::kF32; }

// largest divisor of d that is <= limit (at least 1)
index_t divisor_at_most(index_t d, index_t limit) {
    index_t best = 1;
    for (index_t a = 1; a * a <= d; ++a) {
        if (d % a) continue;
        if (a <= limit) best = std::max(best, a);
        if (d / a <= limit) best = std::max(best, d / a);
    }
    return best;
}

std::pair<index_t, index_t> balanced_factor_pair(index_t d) {
    const index_t a = divisor_at_most(d, static_cast<index_t>(std::sqrt(double(d))));
    return {a, d / a};
}

std::vector<index_t> divisors_of(index_t d) {
    std::vector<index_t> out;
    for (index_t a = 1; a <= d; ++a)
        if (d % a == 0) out.push_back(a);
    return out;
}

struct MagPqLayout {
    std::vector<index_t> group_rows;
    std::vector<index_t> group_k;
    std::uint64_t bytes = 0;
    std::uint64_t code_width = 1;
};

// Byte cost of (Mag)PQ: centroids cost 4*d*K per group regardless of the part
// count; codes cost n*k'*w; grouped variants pay one u8 group id plus one u32
// in-group index per row.
constexpr index_t kMaxCentroids = kMaxPqCentroids;

MagPqLayout magpq_layout(index_t n, index_t d, index_t parts, index_t k0, index_t groups) {
    MagPqLayout lay;
    index_t kmax = 0;
    for (index_t g = 0; g < groups; ++g) {
        const index_t rows = n / groups + (g < n % groups ? 1 : 0);
        index_t k = std::min<index_t>(std::min<index_t>(k0 << g, kMaxCentroids), rows);
        k = std::max<index_t>(k, 1);
        lay.group_rows.push_back(rows);
        lay.group_k.push_back(k);
        kmax = std::max(kmax, k);
    }
    lay.code_width = kmax <= 256 ? 1 : 2;
    std::uint64_t bytes = 0;
    for (index_t g = 0; g < groups; ++g)
        bytes += f32_bytes(static_cast<std::uint64_t>(lay.group_k[g]) * d);
    bytes += static_cast<std::uint64_t>(n) * parts * lay.code_width;
    if (groups > 1) bytes += static_cast<std::uint64_t>(n) * 5;  // group u8 + local u32
    lay.bytes = bytes;
    return lay;
}

std::uint64_t tt_bytes(index_t m1, index_t d1, index_t m2, index_t d2, index_t r1, index_t r2,
                       index_t r3) {
    return f32_bytes(static_cast<std::uint64_t>(m1) * r1 +
                     static_cast<std::uint64_t>(r1) * d1 * r2 +
                     static_cast<std::uint64_t>(r2) * m2 * r3 +
                     static_cast<std::uint64_t>(r3) * d2);
}

struct TtRanks {
    index_t r1 = 1, r2 = 1, r3 = 1;
};

TtRanks tt_ranks_at(double rho, index_t m1, index_t d1, index_t m2, index_t d2) {
    TtRanks r;
    const index_t c1 = std::min<index_t>(m1, d1 * m2 * d2);
    r.r1 = std::clamp<index_t>(static_cast<index_t>(rho * c1), 1, c1);
    const index_t c2 = std::min<index_t>(r.r1 * d1, m2 * d2);
    r.r2 = std::clamp<index_t>(static_cast<index_t>(rho * c2), 1, c2);
    const index_t c3 = std::min<index_t>(r.r2 * m2, d2);
    r.r3 = std::clamp<index_t>(static_cast<index_t>(rho * c3), 1, c3);
    return r;
}

// Pruning population: the larger nnz allowed by either sparse format.
std::uint64_t prune_nnz(index_t n, index_t d, std::uint64_t budget) {
    const std::uint64_t nd = static_cast<std::uint64_t>(n) * d;
    std::uint64_t by_csr = 0;
    const std::uint64_t csr_fixed = (static_cast<std::uint64_t>(n) + 1) * 4;
    if (budget > csr_fixed) by_csr = (budget - csr_fixed) / 8;
    const std::uint64_t by_coo = budget / 12;
    return std::min(nd, std::max(by_csr, by_coo));
}

struct DiscreteGrid {
    std::vector<std::pair<double, StorageType>> points;  // fraction -> dtype
};

DiscreteGrid quant_grid(const std::string& method, index_t n, index_t d,
                        std::uint64_t baseline) {
    DiscreteGrid g;
    const std::uint64_t nd = static_cast<std::uint64_t>(n) * d;
    auto frac = [&](std::uint64_t bytes) { return double(bytes) / double(baseline); };
    if (method == "fp16") {
        g.points = {{frac(nd * 2), StorageType::kF16}};
    } else if (method == "int8_16") {
        g.points = {{frac(nd * 2), StorageType::kI16}, {frac(nd), StorageType::kI8}};
    } else if (method == "alpt") {
        g.points = {{frac(nd * 2 + 4ull * n), StorageType::kI16},
                    {frac(nd + 4ull * n), StorageType::kI8}};
    } else if (method == "int_codec") {
        g.points = {{frac(nd * 2 + 8ull * n), StorageType::kI16},
                    {frac(nd + 8ull * n), StorageType::kI8}};
    }
    return g;
}

}  // namespace

const std::vector<std::string>& train_methods() {
    static const std::vector<std::string> m = {
            "full",  "double_hash", "compo", "memcom", "robe", "ttrec",    "dedup",
            "mgqe",  "adaptemb",    "fp16",  "int8_16", "alpt", "mde",      "deeplight"};
    return m;
}

const std::vector<std::string>& posttrain_methods() {
    static const std::vector<std::string> m = {"tt",      "dedup",   "pq",    "mag_pq",
                                               "int8_16", "svd",     "mag_svd", "prune",
                                               "identity"};
    return m;
}

bool is_posttrain_wrapped(const std::string& method) {
    return method == "dedup" || method == "mgqe";
}

CompressionPlan solve(const std::string& method, double budget_fraction,
                      const FeatureSpace& space, index_t dim, const SolveOptions& opt) {
    if (budget_fraction <= 0.0)
        throw std::invalid_argument("solve: budget fraction must be positive");
    const index_t n = space.total_features();
    const index_t d = dim;
    const std::uint64_t baseline = MemoryModel::baseline_bytes(space, d);
    const auto budget = static_cast<std::uint64_t>(
            std::floor(budget_fraction * static_cast<double>(baseline)));

    CompressionPlan plan;
    plan.method = method;
    plan.budget_fraction = budget_fraction;
    plan.baseline_bytes = baseline;
    plan.target_bytes = budget;
    plan.promote_threshold = opt.promote_threshold;
    plan.lsh_projections = opt.lsh_projections;
    plan.lsh_width = opt.lsh_width;
    plan.mde_alpha = opt.mde_alpha;

    auto infeasible_at = [&](std::uint64_t nearest) {
        plan.feasible = false;
        plan.achieved_bytes = nearest;
    };

    if (method == "full" || method == "identity") {
        plan.achieved_bytes = baseline;
        plan.feasible = budget >= baseline;
        return plan;
    }

    if (method == "double_hash" || method == "memcom") {
        const std::uint64_t aux = method == "memcom" ? 8ull * n : 0ull;
        index_t rows = 0;
        if (budget > aux) rows = static_cast<index_t>((budget - aux) / f32_bytes(d));
        rows = std::min<index_t>(rows, n);
        if (rows < 1) {
            plan.rows = 1;
            infeasible_at(f32_bytes(d) + aux);
            return plan;
        }
        plan.rows = rows;
        plan.achieved_bytes = f32_bytes(static_cast<std::uint64_t>(rows) * d) + aux;
        return plan;
    }

    if (method == "compo") {
        const auto rows_budget = static_cast<index_t>(budget / f32_bytes(d));
        const auto sqrt_n = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
        auto fits = [&](index_t m1) {
            const index_t m2 = static_cast<index_t>((n + m1 - 1) / m1);
            return m1 + m2 <= rows_budget;
        };
        if (rows_budget >= n + 1) {
            plan.m1 = n;
            plan.m2 = 1;
        } else if (fits(sqrt_n)) {
            // largest remainder table that still fits with its quotient table
            index_t lo = sqrt_n, hi = std::min<index_t>(n, rows_budget - 1);
            while (lo < hi) {
                const index_t mid = lo + (hi - lo + 1) / 2;
                if (fits(mid))
                    lo = mid;
                else
                    hi = mid - 1;
            }
            plan.m1 = lo;
            plan.m2 = static_cast<index_t>((n + lo - 1) / lo);
        } else {
            plan.m1 = sqrt_n;
            plan.m2 = sqrt_n;
            infeasible_at(f32_bytes(static_cast<std::uint64_t>(2 * sqrt_n) * d));
            return plan;
        }
        plan.achieved_bytes = f32_bytes(static_cast<std::uint64_t>(plan.m1 + plan.m2) * d);
        return plan;
    }

    if (method == "robe") {
        plan.robe_chunk = divisor_at_most(d, std::max<index_t>(opt.robe_chunk, 1));
        auto len = static_cast<index_t>(budget / 4);
        len = std::min<index_t>(len, n * d);
        if (len < plan.robe_chunk) {
            plan.robe_len = plan.robe_chunk;
            infeasible_at(f32_bytes(plan.robe_chunk));
            return plan;
        }
        plan.robe_len = len;
        plan.achieved_bytes = f32_bytes(len);
        return plan;
    }

    if (method == "ttrec") {
        const int t = opt.tt_cores == 3 ? 3 : 2;
        if (t == 2) {
            const auto m1 = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
            const auto m2 = static_cast<index_t>((n + m1 - 1) / m1);
            const auto [d1, d2] = balanced_factor_pair(d);
            plan.tt_row_factors = {m1, m2};
            plan.tt_col_factors = {d1, d2};
            const std::uint64_t per_rank = f32_bytes(static_cast<std::uint64_t>(m1) * d1 +
                                                     static_cast<std::uint64_t>(m2) * d2);
            index_t r = static_cast<index_t>(budget / per_rank);
            r = std::min<index_t>(r, std::min(m1 * d1, m2 * d2));
            if (r < 1) {
                plan.tt_ranks = {1};
                infeasible_at(per_rank);
                return plan;
            }
            plan.tt_ranks = {r};
            plan.achieved_bytes = per_rank * static_cast<std::uint64_t>(r);
            return plan;
        }
        const auto m1 = static_cast<index_t>(std::ceil(std::cbrt(double(n))));
        const auto m2 = m1;
        const auto m3 = static_cast<index_t>(
                (n + static_cast<std::uint64_t>(m1) * m2 - 1) /
                (static_cast<std::uint64_t>(m1) * m2));
        const index_t d1 = divisor_at_most(d, static_cast<index_t>(std::cbrt(double(d))));
        const auto [d2, d3] = balanced_factor_pair(d / d1);
        plan.tt_row_factors = {m1, m2, m3};
        plan.tt_col_factors = {d1, d2, d3};
        auto bytes_at = [&](index_t r) {
            return f32_bytes(static_cast<std::uint64_t>(m1) * d1 * r +
                             static_cast<std::uint64_t>(r) * m2 * d2 * r +
                             static_cast<std::uint64_t>(r) * m3 * d3);
        };
        index_t lo = 1, hi = 4096;
        while (lo < hi) {
            const index_t mid = lo + (hi - lo + 1) / 2;
            if (bytes_at(mid) <= budget)
                lo = mid;
            else
                hi = mid - 1;
        }
        if (bytes_at(lo) > budget) {
            plan.tt_ranks = {1, 1};
            infeasible_at(bytes_at(1));
            return plan;
        }
        plan.tt_ranks = {lo, lo};
        plan.achieved_bytes = bytes_at(lo);
        return plan;
    }

    if (method == "fp16" || method == "int8_16" || method == "alpt" || method == "int_codec") {
        const auto grid = quant_grid(method, n, d, baseline);
        const double eps = 1e-9;
        const std::pair<double, StorageType>* exact = nullptr;
        const std::pair<double, StorageType>* nearest = &grid.points.front();
        for (const auto& p : grid.points) {
            if (std::abs(p.first - budget_fraction) < eps) exact = &p;
            if (std::abs(p.first - budget_fraction) <
                std::abs(nearest->first - budget_fraction))
                nearest = &p;
        }
        const auto& pick = exact ? *exact : *nearest;
        plan.dtype = pick.second;
        plan.granularity = method == "int_codec" ? QuantGranularity::kPerRow
                                                 : QuantGranularity::kPerTable;
        plan.feasible = exact != nullptr;
        plan.achieved_bytes = static_cast<std::uint64_t>(
                std::llround(pick.first * static_cast<double>(baseline)));
        return plan;
    }

    if (method == "mde") {
        const index_t k = space.field_count();
        auto dims_at = [&](double lambda) {
            std::vector<index_t> dims(k);
            for (index_t f = 0; f < k; ++f) {
                const double p = 1.0 / static_cast<double>(space.cardinality(f));
                const double raw = lambda * std::pow(p, opt.mde_alpha);
                dims[f] = std::clamp<index_t>(static_cast<index_t>(std::floor(raw + 0.5)), 1, d);
            }
            return dims;
        };
        auto bytes_of = [&](const std::vector<index_t>& dims) {
            std::uint64_t total = 0;
            for (index_t f = 0; f < k; ++f)
                total += f32_bytes(static_cast<std::uint64_t>(space.cardinality(f)) * dims[f] +
                                   static_cast<std::uint64_t>(dims[f]) * d);
            return total;
        };
        // candidate lambdas where any field dim steps
        std::vector<double> candidates = {0.0};
        for (index_t f = 0; f < k; ++f) {
            const double p = std::pow(1.0 / static_cast<double>(space.cardinality(f)),
                                      opt.mde_alpha);
            for (index_t j = 1; j <= d; ++j)
                candidates.push_back((static_cast<double>(j) - 0.5) / p + 1e-12);
        }
        std::sort(candidates.begin(), candidates.end());
        double best_lambda = -1;
        std::uint64_t best_bytes = 0;
        std::vector<index_t> best_dims;
        for (double lam : candidates) {
            auto dims = dims_at(lam);
            const auto b = bytes_of(dims);
            if (b <= budget && (best_lambda < 0 || b > best_bytes)) {
                best_lambda = lam;
                best_bytes = b;
                best_dims = std::move(dims);
            }
        }
        if (best_lambda < 0) {
            plan.mde_dims = dims_at(0.0);
            infeasible_at(bytes_of(plan.mde_dims));
            plan.mde_lambda = 0.0;
            return plan;
        }
        plan.mde_lambda = best_lambda;
        plan.mde_dims = best_dims;
        plan.achieved_bytes = best_bytes;
        return plan;
    }

    if (method == "deeplight" || method == "prune") {
        const std::uint64_t nnz = prune_nnz(n, d, budget);
        if (nnz < 1) {
            plan.nnz = 1;
            plan.density = 1.0 / (static_cast<double>(n) * d);
            infeasible_at(sparse_bytes(n, d, 1).second);
            return plan;
        }
        plan.nnz = nnz;
        plan.density = static_cast<double>(nnz) / (static_cast<double>(n) * d);
        plan.achieved_bytes = sparse_bytes(n, d, nnz).second;
        return plan;
    }

    if (method == "pq" || method == "mag_pq" || method == "mgqe") {
        const index_t groups = method == "pq" ? 1 : std::max<index_t>(opt.groups, 1);
        plan.groups = groups;
        index_t best_parts = 0, best_k0 = 0;
        double best_score = -1;
        std::uint64_t best_bytes = 0;
        for (index_t parts : divisors_of(d)) {
            for (index_t k0 = 1; k0 <= kMaxCentroids; k0 *= 2) {
                const auto lay = magpq_layout(n, d, parts, k0, groups);
                if (lay.bytes > budget) break;
                const double score =
                        static_cast<double>(parts) *
                        (std::log2(static_cast<double>(k0)) + 0.5 * (groups - 1) + 1.0);
                if (score > best_score ||
                    (score == best_score && lay.bytes > best_bytes)) {
                    best_score = score;
                    best_parts = parts;
                    best_k0 = k0;
                    best_bytes = lay.bytes;
                }
            }
        }
        if (best_parts == 0) {
            const auto lay = magpq_layout(n, d, 1, 1, groups);
            plan.pq_parts = 1;
            plan.pq_centroids = 1;
            infeasible_at(lay.bytes);
            return plan;
        }
        plan.pq_parts = best_parts;
        plan.pq_centroids = best_k0;
        plan.achieved_bytes = best_bytes;
        return plan;
    }

    if (method == "svd") {
        const std::uint64_t per_rank = f32_bytes(static_cast<std::uint64_t>(n) + d);
        index_t r = static_cast<index_t>(budget / per_rank);
        r = std::min<index_t>(r, std::min(n, d));
        if (r < 1) {
            plan.svd_rank = 1;
            infeasible_at(per_rank);
            return plan;
        }
        plan.svd_rank = r;
        plan.achieved_bytes = per_rank * static_cast<std::uint64_t>(r);
        return plan;
    }

    if (method == "mag_svd") {
        const index_t groups = std::max<index_t>(opt.groups, 1);
        plan.groups = groups;
        auto layout = [&](index_t base) {
            std::vector<index_t> ranks;
            std::uint64_t bytes = static_cast<std::uint64_t>(n) * 5;  // group u8 + local u32
            for (index_t g = 0; g < groups; ++g) {
                const index_t rows = n / groups + (g < n % groups ? 1 : 0);
                const index_t r = std::clamp<index_t>(base << g, 1, std::min<index_t>(rows, d));
                ranks.push_back(r);
                bytes += f32_bytes(static_cast<std::uint64_t>(r) *
                                   (static_cast<std::uint64_t>(rows) + d));
            }
            return std::make_pair(ranks, bytes);
        };
        index_t lo = 1, hi = d;
        if (layout(1).second > budget) {
            auto [ranks, bytes] = layout(1);
            plan.group_ranks = ranks;
            infeasible_at(bytes);
            return plan;
        }
        while (lo < hi) {
            const index_t mid = lo + (hi - lo + 1) / 2;
            if (layout(mid).second <= budget)
                lo = mid;
            else
                hi = mid - 1;
        }
        auto [ranks, bytes] = layout(lo);
        plan.group_ranks = ranks;
        plan.achieved_bytes = bytes;
        return plan;
    }

    if (method == "tt") {
        const auto m1 = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
        const auto m2 = static_cast<index_t>((n + m1 - 1) / m1);
        const auto [d1, d2] = balanced_factor_pair(d);
        plan.tt_row_factors = {m1, m2};
        plan.tt_col_factors = {d1, d2};
        const auto min_ranks = tt_ranks_at(0.0, m1, d1, m2, d2);
        if (tt_bytes(m1, d1, m2, d2, min_ranks.r1, min_ranks.r2, min_ranks.r3) > budget) {
            plan.tt_ranks = {1, 1, 1};
            infeasible_at(tt_bytes(m1, d1, m2, d2, 1, 1, 1));
            return plan;
        }
        double lo = 0.0, hi = 1.0;
        for (int iter = 0; iter < 60; ++iter) {
            const double mid = (lo + hi) / 2;
            const auto r = tt_ranks_at(mid, m1, d1, m2, d2);
            if (tt_bytes(m1, d1, m2, d2, r.r1, r.r2, r.r3) <= budget)
                lo = mid;
            else
                hi = mid;
        }
        const auto r = tt_ranks_at(lo, m1, d1, m2, d2);
        plan.tt_ranks = {r.r1, r.r2, r.r3};
        plan.achieved_bytes = tt_bytes(m1, d1, m2, d2, r.r1, r.r2, r.r3);
        return plan;
    }

    if (method == "dedup") {
        // block grid: divisors of a row, then whole-row multiples
        std::vector<index_t> grid = divisors_of(d);
        for (index_t mult = 2; static_cast<std::uint64_t>(mult) * d <=
                               static_cast<std::uint64_t>(n) * d;
             mult *= 2)
            grid.push_back(mult * d);
        const std::uint64_t nd = static_cast<std::uint64_t>(n) * d;
        for (index_t block : grid) {
            const std::uint64_t blocks = (nd + block - 1) / block;
            const std::uint64_t map_bytes = blocks * 4;
            if (map_bytes * 2 > budget) continue;  // mapping capped at half the budget
            if (map_bytes + f32_bytes(block) > budget) continue;  // room for one representative
            plan.dedup_block = block;
            plan.achieved_bytes = budget;  // data-dependent; compress() reports the real value
            plan.bytes_data_dependent = true;
            return plan;
        }
        // nearest: block at the byte-minimizing width ~ sqrt(n*d)
        index_t best = grid.back();
        std::uint64_t best_bytes = ~0ull;
        for (index_t block : grid) {
            const std::uint64_t blocks = (nd + block - 1) / block;
            const std::uint64_t bytes = blocks * 4 + f32_bytes(block);
            if (bytes < best_bytes) {
                best_bytes = bytes;
                best = block;
            }
        }
        plan.dedup_block = best;
        plan.bytes_data_dependent = true;
        infeasible_at(best_bytes);
        return plan;
    }

    if (method == "adaptemb") {
        const std::uint64_t half = budget / 2;
        const auto shared = static_cast<index_t>(half / f32_bytes(d));
        if (shared < 1) {
            plan.rows = 1;
            plan.exclusive_capacity = 0;
            infeasible_at(f32_bytes(d));
            return plan;
        }
        plan.rows = std::min<index_t>(shared, n);
        const std::uint64_t rest =
                budget - f32_bytes(static_cast<std::uint64_t>(plan.rows) * d);
        plan.exclusive_capacity =
                std::min<index_t>(static_cast<index_t>(rest / (f32_bytes(d) + 8)), n);
        plan.achieved_bytes =
                f32_bytes(static_cast<std::uint64_t>(plan.rows) * d) +
                static_cast<std::uint64_t>(plan.exclusive_capacity) * (f32_bytes(d) + 8);
        return plan;
    }

    throw config_error("solve: unknown method '" + method + "'");
}

FeasibleRange feasible_range(const std::string& method, const FeatureSpace& space, index_t dim,
                             const SolveOptions& opt) {
    const index_t n = space.total_features();
    const index_t d = dim;
    const std::uint64_t baseline = MemoryModel::baseline_bytes(space, d);
    FeasibleRange out;
    auto frac_points = [&](const std::string& m) {
        std::vector<double> fr;
        for (const auto& p : quant_grid(m, n, d, baseline).points) fr.push_back(p.first);
        std::sort(fr.begin(), fr.end());
        return fr;
    };

    if (method == "full" || method == "identity") {
        out.min_bytes = out.max_bytes = baseline;
        out.discrete_fractions = {1.0};
        return out;
    }
    if (method == "fp16" || method == "int8_16" || method == "alpt" || method == "int_codec") {
        out.discrete_fractions = frac_points(method);
        out.min_bytes = static_cast<std::uint64_t>(out.discrete_fractions.front() * baseline);
        out.max_bytes = static_cast<std::uint64_t>(out.discrete_fractions.back() * baseline);
        return out;
    }
    if (method == "double_hash") {
        out.min_bytes = f32_bytes(d);
        out.max_bytes = baseline;
        return out;
    }
    if (method == "memcom") {
        out.min_bytes = f32_bytes(d) + 8ull * n;
        out.max_bytes = baseline + 8ull * n;
        return out;
    }
    if (method == "compo") {
        const auto s = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
        out.min_bytes = f32_bytes(static_cast<std::uint64_t>(2 * s) * d);
        out.max_bytes = f32_bytes(static_cast<std::uint64_t>(n + 1) * d);
        return out;
    }
    if (method == "robe") {
        out.min_bytes = f32_bytes(divisor_at_most(d, std::max<index_t>(opt.robe_chunk, 1)));
        out.max_bytes = baseline;
        return out;
    }
    if (method == "ttrec" || method == "tt") {
        const auto m1 = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
        const auto m2 = static_cast<index_t>((n + m1 - 1) / m1);
        const auto [d1, d2] = balanced_factor_pair(d);
        if (method == "ttrec") {
            out.min_bytes = f32_bytes(static_cast<std::uint64_t>(m1) * d1 +
                                      static_cast<std::uint64_t>(m2) * d2);
            const index_t rmax = std::min(m1 * d1, m2 * d2);
            out.max_bytes = out.min_bytes * static_cast<std::uint64_t>(rmax);
        } else {
            out.min_bytes = tt_bytes(m1, d1, m2, d2, 1, 1, 1);
            const auto r = tt_ranks_at(1.0, m1, d1, m2, d2);
            out.max_bytes = tt_bytes(m1, d1, m2, d2, r.r1, r.r2, r.r3);
        }
        return out;
    }
    if (method == "deeplight" || method == "prune") {
        out.min_bytes = sparse_bytes(n, d, 1).second;
        out.max_bytes = sparse_bytes(n, d, static_cast<std::uint64_t>(n) * d).second;
        return out;
    }
    if (method == "mde") {
        const index_t k = space.field_count();
        out.min_bytes = f32_bytes(static_cast<std::uint64_t>(n) +
                                  static_cast<std::uint64_t>(k) * d);  // every dim at 1
        out.max_bytes = baseline + f32_bytes(static_cast<std::uint64_t>(k) * d * d);
        return out;
    }
    if (method == "pq" || method == "mag_pq" || method == "mgqe") {
        const index_t groups = method == "pq" ? 1 : std::max<index_t>(opt.groups, 1);
        out.min_bytes = magpq_layout(n, d, 1, 1, groups).bytes;
        out.max_bytes = magpq_layout(n, d, d, kMaxCentroids, groups).bytes;
        return out;
    }
    if (method == "svd") {
        out.min_bytes = f32_bytes(static_cast<std::uint64_t>(n) + d);
        out.max_bytes = out.min_bytes * static_cast<std::uint64_t>(std::min(n, d));
        return out;
    }
    if (method == "mag_svd") {
        const index_t groups = std::max<index_t>(opt.groups, 1);
        std::uint64_t lo = static_cast<std::uint64_t>(n) * 5;
        std::uint64_t hi = lo;
        for (index_t g = 0; g < groups; ++g) {
            const index_t rows = n / groups + (g < n % groups ? 1 : 0);
            lo += f32_bytes(static_cast<std::uint64_t>(rows) + d);
            hi += f32_bytes(static_cast<std::uint64_t>(std::min<index_t>(rows, d)) *
                            (static_cast<std::uint64_t>(rows) + d));
        }
        out.min_bytes = lo;
        out.max_bytes = hi;
        return out;
    }
    if (method == "dedup") {
        const std::uint64_t nd = static_cast<std::uint64_t>(n) * d;
        std::uint64_t best = ~0ull;
        std::vector<index_t> grid = divisors_of(d);
        for (index_t mult = 2; static_cast<std::uint64_t>(mult) * d <= nd; mult *= 2)
            grid.push_back(mult * d);
        for (index_t block : grid)
            best = std::min(best, ((nd + block - 1) / block) * 4 + f32_bytes(block));
        out.min_bytes = best;
        out.max_bytes = baseline + nd / grid.front() * 4;
        return out;
    }
    if (method == "adaptemb") {
        out.min_bytes = f32_bytes(d);
        out.max_bytes = baseline + static_cast<std::uint64_t>(n) * (f32_bytes(d) + 8);
        return out;
    }
    throw config_error("feasible_range: unknown method '" + method + "'");
}

// ---------------------------------------------------------------------------
// key-value serialization
// ---------------------------------------------------------------------------

namespace {
std::string join(const std::vector<index_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}
std::vector<index_t> split_ints(const std::string& s) {
    std::vector<index_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoll(tok));
    return out;
}
}  // namespace

std::string CompressionPlan::to_kv() const {
    std::ostringstream os;
    os << "method = " << method << "\n";
    os << "budget_fraction = " << budget_fraction << "\n";
    os << "baseline_bytes = " << baseline_bytes << "\n";
    os << "target_bytes = " << target_bytes << "\n";
    os << "achieved_bytes = " << achieved_bytes << "\n";
    os << "feasible = " << (feasible ? 1 : 0) << "\n";
    os << "bytes_data_dependent = " << (bytes_data_dependent ? 1 : 0) << "\n";
    if (rows) os << "rows = " << rows << "\n";
    if (m1) os << "m1 = " << m1 << "\n";
    if (m2) os << "m2 = " << m2 << "\n";
    if (robe_len) os << "robe_len = " << robe_len << "\n";
    if (robe_chunk) os << "robe_chunk = " << robe_chunk << "\n";
    if (!tt_row_factors.empty()) os << "tt_row_factors = " << join(tt_row_factors) << "\n";
    if (!tt_col_factors.empty()) os << "tt_col_factors = " << join(tt_col_factors) << "\n";
    if (!tt_ranks.empty()) os << "tt_ranks = " << join(tt_ranks) << "\n";
    os << "dtype = " << to_string(dtype) << "\n";
    os << "rounding = " << (rounding == Rounding::kStochastic ? "stochastic" : "nearest")
       << "\n";
    os << "granularity = "
       << (granularity == QuantGranularity::kPerRow ? "per_row" : "per_table") << "\n";
    os << "clip = " << clip << "\n";
    os << "mde_alpha = " << mde_alpha << "\n";
    if (mde_lambda) os << "mde_lambda = " << mde_lambda << "\n";
    if (!mde_dims.empty()) os << "mde_dims = " << join(mde_dims) << "\n";
    if (svd_rank) os << "svd_rank = " << svd_rank << "\n";
    if (!group_ranks.empty()) os << "group_ranks = " << join(group_ranks) << "\n";
    if (nnz) os << "nnz = " << nnz << "\n";
    if (density != 1.0) os << "density = " << density << "\n";
    if (pq_parts) os << "pq_parts = " << pq_parts << "\n";
    if (pq_centroids) os << "pq_centroids = " << pq_centroids << "\n";
    if (groups) os << "groups = " << groups << "\n";
    if (dedup_block) os << "dedup_block = " << dedup_block << "\n";
    os << "lsh_projections = " << lsh_projections << "\n";
    os << "lsh_width = " << lsh_width << "\n";
    os << "promote_threshold = " << promote_threshold << "\n";
    if (exclusive_capacity) os << "exclusive_capacity = " << exclusive_capacity << "\n";
    return os.str();
}

CompressionPlan CompressionPlan::from_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    CompressionPlan p;
    auto get = [&](const char* key, auto parse, auto& field) {
        if (auto it = kv.find(key); it != kv.end()) field = parse(it->second);
    };
    auto to_ll = [](const std::string& s) { return std::stoll(s); };
    auto to_ull = [](const std::string& s) { return std::stoull(s); };
    auto to_d = [](const std::string& s) { return std::stod(s); };
    auto to_s = [](const std::string& s) { return s; };
    get("method", to_s, p.method);
    get("budget_fraction", to_d, p.budget_fraction);
    get("baseline_bytes", to_ull, p.baseline_bytes);
    get("target_bytes", to_ull, p.target_bytes);
    get("achieved_bytes", to_ull, p.achieved_bytes);
    if (kv.count("feasible")) p.feasible = kv["feasible"] == "1";
    if (kv.count("bytes_data_dependent")) p.bytes_data_dependent = kv["bytes_data_dependent"] == "1";
    get("rows", to_ll, p.rows);
    get("m1", to_ll, p.m1);
    get("m2", to_ll, p.m2);
    get("robe_len", to_ll, p.robe_len);
    get("robe_chunk", to_ll, p.robe_chunk);
    get("tt_row_factors", split_ints, p.tt_row_factors);
    get("tt_col_factors", split_ints, p.tt_col_factors);
    get("tt_ranks", split_ints, p.tt_ranks);
    if (kv.count("dtype")) p.dtype = storage_type_from(kv["dtype"]);
    if (kv.count("rounding"))
        p.rounding = kv["rounding"] == "nearest" ? Rounding::kNearest : Rounding::kStochastic;
    if (kv.count("granularity"))
        p.granularity = kv["granularity"] == "per_row" ? QuantGranularity::kPerRow
                                                       : QuantGranularity::kPerTable;
    get("clip", to_d, p.clip);
    get("mde_alpha", to_d, p.mde_alpha);
    get("mde_lambda", to_d, p.mde_lambda);
    get("mde_dims", split_ints, p.mde_dims);
    get("svd_rank", to_ll, p.svd_rank);
    get("group_ranks", split_ints, p.group_ranks);
    get("nnz", to_ull, p.nnz);
    get("density", to_d, p.density);
    get("pq_parts", to_ll, p.pq_parts);
    get("pq_centroids", to_ll, p.pq_centroids);
    get("groups", to_ll, p.groups);
    get("dedup_block", to_ll, p.dedup_block);
    get("lsh_projections", to_ll, p.lsh_projections);
    get("lsh_width", to_d, p.lsh_width);
    if (kv.count("promote_threshold"))
        p.promote_threshold = static_cast<std::uint32_t>(std::stoul(kv["promote_threshold"]));
    get("exclusive_capacity", to_ll, p.exclusive_capacity);
    return p;
}

}  // namespace emsq
