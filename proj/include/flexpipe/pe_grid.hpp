#pragma once

#include <cstdint>

#include "flexpipe/analytic.hpp"
#include "flexpipe/matrix.hpp"

namespace flexpipe {

/// The two per-PE configuration bits.
struct PeConfig {
    bool h_transparent = false;  ///< east-going activation register bypassed
    bool v_transparent = false;  ///< south-going partial-sum register bypassed
    friend bool operator==(const PeConfig&, const PeConfig&) = default;
};

/// Configuration for depth k: only the last row (column) of each k-group keeps
/// its vertical (horizontal) register.
inline Matrix<PeConfig> build_pe_grid(int k, std::uint64_t rows, std::uint64_t cols) {
    require_divisible(k, rows, cols);
    const auto uk = static_cast<std::uint64_t>(k);
    Matrix<PeConfig> grid(rows, cols);
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c)
            grid(r, c) = {c % uk != uk - 1, r % uk != uk - 1};
    return grid;
}

inline Matrix<PeConfig> build_pe_grid(int k, const ArrayConfig& cfg) { return build_pe_grid(k, cfg.rows, cfg.cols); }

struct GridCensus {
    std::uint64_t h_transparent = 0;
    std::uint64_t v_transparent = 0;

    /// Bypassed pipeline registers; a PE's (sum, carry) pair counts as one stage.
    std::uint64_t transparent_registers() const noexcept { return h_transparent + v_transparent; }
};

inline GridCensus census(const Matrix<PeConfig>& grid) noexcept {
    GridCensus out;
    for (const auto& pe : grid.data()) {
        out.h_transparent += pe.h_transparent;
        out.v_transparent += pe.v_transparent;
    }
    return out;
}

}  // namespace flexpipe
