#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "flexpipe/analytic.hpp"
#include "flexpipe/clock.hpp"

namespace flexpipe {

struct ModeChoice {
    int k = 1;
    Cycles cycles = 0;
    Picoseconds period;
    Picoseconds time;
    double k_hat = std::numeric_limits<double>::quiet_NaN();  ///< continuous optimum, diagnostic only
};

/// Continuous minimiser of (R + T - 2 + (R + C)/k) * (fixed + k * per_stage):
/// sqrt((R + C) / (R + T - 2) * fixed / per_stage).
inline double optimal_k_analytic(const GemmShape& s, const ArrayConfig& cfg, const LinearTiming& timing) {
    const double denom = static_cast<double>(cfg.rows + s.t) - 2.0;
    if (denom <= 0) throw DomainError("optimal depth undefined for R + T - 2 = 0");
    if (!(timing.fixed_ns > 0 && timing.per_stage_ns > 0))
        throw DomainError("optimal depth needs positive delays");
    const double size_ratio = static_cast<double>(cfg.rows + cfg.cols) / denom;
    return std::sqrt(size_ratio * timing.delay_ratio());
}

inline double optimal_k_analytic(const GemmShape& s, const ArrayConfig& cfg, const DelayParams& delays) {
    delays.validate();
    return optimal_k_analytic(s, cfg, LinearTiming::from(delays));
}

namespace detail {
inline std::optional<LinearTiming> diagnostic_timing(const ClockModel& model) {
    if (!model.is_table() || model.table_depths().size() >= 2) {
        const auto t = linear_timing(model);
        if (t.fixed_ns > 0 && t.per_stage_ns > 0) return t;
    }
    return std::nullopt;
}

inline ModeChoice select_mode(const GemmShape& s, const ArrayConfig& cfg, const ClockModel& model,
                              const std::optional<LinearTiming>& timing) {
    std::optional<ModeChoice> best;
    for (int k : cfg.supported_depths) {
        if (!model.available(k)) continue;
        ModeChoice c;
        c.k = k;
        c.cycles = total_cycles(k, s, cfg);
        c.period = model.period(k);
        c.time = c.cycles * c.period;
        // Depths are visited in increasing order, so ties stay on the smaller k.
        if (!best || c.time < best->time) best = c;
    }
    if (!best) throw UnsupportedModeError("no supported depth has a clock period");
    if (timing && cfg.rows + s.t > 2) best->k_hat = optimal_k_analytic(s, cfg, *timing);
    return *best;
}
}  // namespace detail

/// Depth with the smallest absolute execution time, by exhaustive search over
/// the supported depths (ties toward the smaller k).
inline ModeChoice select_mode(const GemmShape& s, const ArrayConfig& cfg, const ClockModel& model) {
    return detail::select_mode(s, cfg, model, detail::diagnostic_timing(model));
}

struct LayerSchedule {
    LayerGemm layer;
    ModeChoice choice;
    Cycles conventional_cycles = 0;
    Picoseconds conventional_time;

    /// Time over all repetitions.
    Picoseconds total_time() const { return layer.repeat * choice.time; }
    Picoseconds total_conventional_time() const { return layer.repeat * conventional_time; }
    double savings() const { return 1.0 - static_cast<double>(choice.time.count) / conventional_time.count; }
};

struct NetworkSchedule {
    std::vector<LayerSchedule> layers;
    Picoseconds flex_time;
    Picoseconds conventional_time;

    /// Configurable-array time over conventional time.
    double ratio() const { return static_cast<double>(flex_time.count) / conventional_time.count; }
    double savings() const { return 1.0 - ratio(); }

    std::vector<int> depth_sequence() const {
        std::vector<int> ks;
        for (const auto& l : layers) ks.push_back(l.choice.k);
        return ks;
    }
};

/// Independent per-layer mode selection plus the conventional baseline.
inline NetworkSchedule schedule_network(std::span<const LayerGemm> layers, const ArrayConfig& cfg,
                                        const ClockModel& model) {
    if (layers.empty()) throw ConfigError("network has no layers");
    const auto timing = detail::diagnostic_timing(model);
    NetworkSchedule out;
    out.layers.reserve(layers.size());
    for (const auto& layer : layers) {
        LayerSchedule ls{layer, detail::select_mode(layer.shape, cfg, model, timing), 0, {}};
        ls.conventional_cycles = conventional_total_cycles(layer.shape, cfg);
        ls.conventional_time = ls.conventional_cycles * model.conventional_period();
        out.flex_time += ls.total_time();
        out.conventional_time += ls.total_conventional_time();
        out.layers.push_back(std::move(ls));
    }
    return out;
}

inline NetworkSchedule schedule_network(std::span<const GemmShape> shapes, const ArrayConfig& cfg,
                                        const ClockModel& model) {
    std::vector<LayerGemm> layers;
    layers.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i)
        layers.push_back({"layer" + std::to_string(i + 1), shapes[i], 1});
    return schedule_network(std::span<const LayerGemm>(layers), cfg, model);
}

inline bool non_decreasing(std::span<const int> ks) noexcept {
    for (std::size_t i = 1; i < ks.size(); ++i)
        if (ks[i] < ks[i - 1]) return false;
    return true;
}

}  // namespace flexpipe
