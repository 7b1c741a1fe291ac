#pragma once

#include <cstdint>

#include "flexpipe/analytic.hpp"

namespace flexpipe {

/// Switching activity gathered during streaming. Each PE owns two pipeline
/// registers: the horizontal activation register and the vertical
/// (sum, carry) stage.
struct ActivityCounters {
    Cycles cycles = 0;                  ///< preload + streaming
    Cycles streaming_cycles = 0;
    std::uint64_t mac_ops = 0;          ///< multiplies on valid activations
    std::uint64_t reg_writes = 0;       ///< opaque register latches carrying valid data
    std::uint64_t active_reg_cycles = 0;  ///< clocked (opaque) registers x streaming cycles
    std::uint64_t gated_reg_cycles = 0;   ///< bypassed registers x streaming cycles

    ActivityCounters& operator+=(const ActivityCounters& o) noexcept {
        cycles += o.cycles;
        streaming_cycles += o.streaming_cycles;
        mac_ops += o.mac_ops;
        reg_writes += o.reg_writes;
        active_reg_cycles += o.active_reg_cycles;
        gated_reg_cycles += o.gated_reg_cycles;
        return *this;
    }

    ActivityCounters scaled(std::uint64_t n) const noexcept {
        return {cycles * n, streaming_cycles * n, mac_ops * n, reg_writes * n, active_reg_cycles * n,
                gated_reg_cycles * n};
    }

    friend bool operator==(const ActivityCounters&, const ActivityCounters&) = default;
};

/// Closed-form counters for one tile pass; matches what the simulator counts.
inline ActivityCounters predict_tile_activity(int k, const TileDims& d) {
    const auto uk = static_cast<std::uint64_t>(k);
    const Cycles stream = streaming_cycles(k, d);
    const std::uint64_t pes = d.rows * d.cols;
    const std::uint64_t opaque = 2 * pes / uk;
    const std::uint64_t bypassed = 2 * pes - opaque;
    ActivityCounters a;
    a.cycles = d.rows + stream;
    a.streaming_cycles = stream;
    a.mac_ops = pes * d.t;
    // Every valid activation is latched by the R * C/k opaque horizontal
    // registers, every resolved partial sum by the C * R/k opaque vertical ones.
    a.reg_writes = opaque * d.t;
    a.active_reg_cycles = opaque * stream;
    a.gated_reg_cycles = bypassed * stream;
    return a;
}

/// Counters for a whole GEMM (all tiles, one repetition).
inline ActivityCounters predict_activity(int k, const GemmShape& s, const ArrayConfig& cfg) {
    return predict_tile_activity(k, cfg.tile(s.t)).scaled(tile_count(s, cfg));
}

}  // namespace flexpipe
