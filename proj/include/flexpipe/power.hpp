#pragma once

// Activity-based energy and power. Coefficient defaults are engineering
// estimates, not silicon measurements.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "flexpipe/activity.hpp"
#include "flexpipe/clock.hpp"
#include "flexpipe/kv_file.hpp"
#include "flexpipe/optimizer.hpp"

namespace flexpipe {

struct EnergyCoefficients {
    double e_mac = 1.0;   ///< pJ per multiply-accumulate
    double e_reg = 0.5;   ///< pJ per register write
    double e_clk = 0.3;   ///< pJ per clocked register per cycle
    double p_static = 0;  ///< mW
    /// Switched-capacitance multiplier of the configurable PE (carry-save
    /// stage and bypass multiplexers). 1.17 puts the configurable array at k=1 about 5%
    /// above the conventional array in power at equal work.
    double flex_overhead = 1.17;

    void validate() const {
        if (e_mac < 0 || e_reg < 0 || e_clk < 0 || p_static < 0 || flex_overhead < 0)
            throw ConfigError("energy coefficients must be non-negative");
    }

    EnergyCoefficients scaled(double f) const {
        return {e_mac * f, e_reg * f, e_clk * f, p_static * f, flex_overhead};
    }
};

inline EnergyCoefficients parse_coefficients(const std::vector<KeyValue>& kvs, const std::string& source) {
    EnergyCoefficients c;
    const std::map<std::string, double EnergyCoefficients::*> fields{
        {"e_mac", &EnergyCoefficients::e_mac},     {"e_reg", &EnergyCoefficients::e_reg},
        {"e_clk", &EnergyCoefficients::e_clk},     {"p_static", &EnergyCoefficients::p_static},
        {"flex_overhead", &EnergyCoefficients::flex_overhead},
    };
    for (const auto& kv : kvs) {
        auto it = fields.find(kv.key);
        if (it == fields.end()) throw ParseError(source, kv.line, 1, "unknown coefficient '" + kv.key + "'");
        c.*(it->second) = parse_value<double>(kv, source);
    }
    c.validate();
    return c;
}

inline EnergyCoefficients load_coefficients(const std::string& path) {
    return parse_coefficients(read_key_values_file(path), path);
}

struct CostReport {
    Cycles cycles = 0;
    Picoseconds period;
    Picoseconds time;
    double energy_pj = 0;  ///< dynamic plus static
    double avg_power_mw = 0;
    double edp = 0;  ///< pJ * ns

    double time_ns() const noexcept { return time.ns(); }

    /// Sequential composition: times and energies add.
    CostReport& operator+=(const CostReport& o) {
        cycles += o.cycles;
        time += o.time;
        energy_pj += o.energy_pj;
        period = cycles ? Picoseconds{time.count / static_cast<std::int64_t>(cycles)} : Picoseconds{};
        finish();
        return *this;
    }

    void finish() noexcept {
        avg_power_mw = time.count > 0 ? energy_pj / time.ns() : 0.0;
        edp = energy_pj * time.ns();
    }
};

inline double dynamic_energy(const ActivityCounters& a, Mode mode, const EnergyCoefficients& c) {
    const double e = c.e_mac * static_cast<double>(a.mac_ops) + c.e_reg * static_cast<double>(a.reg_writes) +
                     c.e_clk * static_cast<double>(a.active_reg_cycles);
    return mode.conventional ? e : e * c.flex_overhead;
}

/// Cost of a run described by its counters. Bypassed registers draw no clock energy.
inline CostReport estimate(const ActivityCounters& a, Mode mode, const ClockModel& model,
                           const EnergyCoefficients& c) {
    CostReport r;
    r.cycles = a.cycles;
    r.period = clock_period(mode, model);
    r.time = a.cycles * r.period;
    r.energy_pj = dynamic_energy(a, mode, c) + c.p_static * r.time.ns();
    r.finish();
    return r;
}

/// Baseline EDP over candidate EDP; above 1 means the candidate is more efficient.
inline double edp_ratio(const CostReport& baseline, const CostReport& candidate) {
    if (!(baseline.edp > 0)) throw DomainError("baseline EDP must be positive");
    if (!(candidate.edp > 0)) throw DomainError("candidate EDP must be positive");
    return baseline.edp / candidate.edp;
}

struct LayerCost {
    CostReport flex;
    CostReport conventional;
};

struct NetworkCost {
    std::vector<LayerCost> layers;
    CostReport flex;
    CostReport conventional;
    std::map<int, CostReport> flex_by_mode;  ///< aggregated over layers that chose each depth

    double edp_ratio() const { return flexpipe::edp_ratio(conventional, flex); }
    double power_ratio() const { return flex.avg_power_mw / conventional.avg_power_mw; }
};

/// Costs of a schedule from closed-form activity; the conventional baseline
/// runs the k=1 dataflow at its own clock without the configurability overhead.
inline NetworkCost estimate_network(const NetworkSchedule& sched, const ArrayConfig& cfg, const ClockModel& model,
                                    const EnergyCoefficients& c) {
    NetworkCost out;
    for (const auto& l : sched.layers) {
        const auto rep = l.layer.repeat;
        LayerCost lc{estimate(predict_activity(l.choice.k, l.layer.shape, cfg).scaled(rep), Mode::shallow(l.choice.k),
                              model, c),
                     estimate(predict_activity(1, l.layer.shape, cfg).scaled(rep), Mode::baseline(), model, c)};
        out.flex += lc.flex;
        out.conventional += lc.conventional;
        out.flex_by_mode[l.choice.k] += lc.flex;
        out.layers.push_back(lc);
    }
    return out;
}

/// Every layer forced to one configurable-array depth.
inline CostReport estimate_fixed_depth(std::span<const LayerGemm> layers, int k, const ArrayConfig& cfg,
                                       const ClockModel& model, const EnergyCoefficients& c) {
    CostReport total;
    for (const auto& l : layers)
        total += estimate(predict_activity(k, l.shape, cfg).scaled(l.repeat), Mode::shallow(k), model, c);
    return total;
}

}  // namespace flexpipe
