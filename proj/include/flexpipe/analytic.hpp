#pragma once

// Closed-form cycle counts for a weight-stationary systolic array, in the
// conventional pipeline and with k-deep transparent pipelining.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "flexpipe/error.hpp"

namespace flexpipe {

using Cycles = std::uint64_t;

/// One layer's matrix multiplication X[T,M] = A[T,N] x B[N,M].
struct GemmShape {
    std::uint64_t m = 1;  ///< columns of B and of the output
    std::uint64_t n = 1;  ///< reduction depth
    std::uint64_t t = 1;  ///< rows of A and of the output

    static GemmShape make(std::uint64_t m, std::uint64_t n, std::uint64_t t) {
        GemmShape s{m, n, t};
        s.validate();
        return s;
    }

    void validate() const {
        if (m == 0 || n == 0 || t == 0)
            throw ShapeError("GEMM dimensions must be positive (M=" + std::to_string(m) +
                             ", N=" + std::to_string(n) + ", T=" + std::to_string(t) + ")");
    }

    friend bool operator==(const GemmShape&, const GemmShape&) = default;
};

/// A named GEMM executed `repeat` times back to back.
struct LayerGemm {
    std::string name;
    GemmShape shape;
    std::uint64_t repeat = 1;
};

/// Geometry of a single array tile pass: R x C PEs, T streamed rows.
struct TileDims {
    std::uint64_t rows = 1;
    std::uint64_t cols = 1;
    std::uint64_t t = 1;
};

inline bool divides(std::uint64_t k, std::uint64_t value) noexcept {
    return k != 0 && value % k == 0;
}

/// Array geometry and the pipeline depths it can be configured for.
struct ArrayConfig {
    std::uint64_t rows = 128;
    std::uint64_t cols = 128;
    std::vector<int> supported_depths{1};  // strictly increasing, contains 1
    int input_bits = 32;
    int accum_bits = 64;

    static ArrayConfig make(std::uint64_t rows, std::uint64_t cols, std::vector<int> depths = {1},
                            int input_bits = 32, int accum_bits = 64) {
        ArrayConfig cfg{rows, cols, std::move(depths), input_bits, accum_bits};
        cfg.validate();
        return cfg;
    }

    /// Config keeping only the candidate depths this geometry can host.
    static ArrayConfig with_divisible_depths(std::uint64_t rows, std::uint64_t cols,
                                             const std::vector<int>& candidates,
                                             int input_bits = 32, int accum_bits = 64) {
        std::vector<int> depths{1};
        for (int k : candidates)
            if (k > 1 && divides(static_cast<std::uint64_t>(k), rows) &&
                divides(static_cast<std::uint64_t>(k), cols))
                depths.push_back(k);
        std::sort(depths.begin(), depths.end());
        depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
        return make(rows, cols, std::move(depths), input_bits, accum_bits);
    }

    bool supports(int k) const noexcept {
        return std::find(supported_depths.begin(), supported_depths.end(), k) !=
               supported_depths.end();
    }

    void validate() const {
        if (rows == 0 || cols == 0) throw ConfigError("array rows and cols must be positive");
        if (supported_depths.empty() || supported_depths.front() != 1)
            throw ConfigError("supported depths must start with 1");
        for (std::size_t i = 1; i < supported_depths.size(); ++i)
            if (supported_depths[i] <= supported_depths[i - 1])
                throw ConfigError("supported depths must be strictly increasing");
        for (int k : supported_depths) {
            const auto uk = static_cast<std::uint64_t>(k);
            if (!divides(uk, rows) || !divides(uk, cols))
                throw DivisibilityError("depth k=" + std::to_string(k) + " does not divide the " +
                                        std::to_string(rows) + "x" + std::to_string(cols) + " array");
        }
        if (input_bits < 2 || accum_bits > 64 || accum_bits < 2 * input_bits)
            throw ConfigError("need 2 <= input_bits and 2*input_bits <= accum_bits <= 64");
    }

    TileDims tile(std::uint64_t t) const noexcept { return {rows, cols, t}; }
};

inline void require_divisible(int k, std::uint64_t rows, std::uint64_t cols) {
    if (k < 1 || !divides(static_cast<std::uint64_t>(k), rows) ||
        !divides(static_cast<std::uint64_t>(k), cols))
        throw DivisibilityError("depth k=" + std::to_string(k) + " does not divide the " +
                                std::to_string(rows) + "x" + std::to_string(cols) + " array");
}

/// Cycles for one tile on a conventional array: 2R + C + T - 2.
constexpr Cycles latency_conventional(const TileDims& d) noexcept {
    return 2 * d.rows + d.cols + d.t - 2;
}

/// Cycles for one tile with k-deep collapsing: R + R/k + C/k + T - 2.
///
/// The sum decomposes into weight preload (R), horizontal fill to the
/// rightmost column group (C/k - 1), streaming of the remaining T - 1 rows,
/// and the vertical drain through R/k row groups.
inline Cycles latency_shallow(int k, const TileDims& d) {
    require_divisible(k, d.rows, d.cols);
    const auto uk = static_cast<std::uint64_t>(k);
    return d.rows + d.rows / uk + d.cols / uk + d.t - 2;
}

/// Cycles spent after the weight preload finishes.
inline Cycles streaming_cycles(int k, const TileDims& d) { return latency_shallow(k, d) - d.rows; }

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) noexcept { return (a + b - 1) / b; }

/// Number of R x C tiles covering the B matrix: ceil(N/R) * ceil(M/C).
inline std::uint64_t tile_count(const GemmShape& s, const ArrayConfig& cfg) noexcept {
    return ceil_div(s.n, cfg.rows) * ceil_div(s.m, cfg.cols);
}

inline void require_supported(int k, const ArrayConfig& cfg) {
    if (!cfg.supports(k))
        throw UnsupportedModeError("depth k=" + std::to_string(k) + " is not supported by the array");
}

/// Cycles for the whole GEMM at depth k.
inline Cycles total_cycles(int k, const GemmShape& s, const ArrayConfig& cfg) {
    require_supported(k, cfg);
    return latency_shallow(k, cfg.tile(s.t)) * tile_count(s, cfg);
}

/// Cycles for the whole GEMM on the conventional, non-configurable array.
inline Cycles conventional_total_cycles(const GemmShape& s, const ArrayConfig& cfg) noexcept {
    return latency_conventional(cfg.tile(s.t)) * tile_count(s, cfg);
}

}  // namespace flexpipe
