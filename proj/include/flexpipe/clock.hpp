#pragma once

// Clock-period models: a measured per-depth table and the linear delay model
// T(k) = d_ff + d_mul + d_add + k * (d_csa + 2 * d_mux).

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "flexpipe/analytic.hpp"
#include "flexpipe/error.hpp"
#include "flexpipe/kv_file.hpp"

namespace flexpipe {

/// Integer picoseconds; exact under multiplication by cycle counts.
struct Picoseconds {
    std::int64_t count = 0;

    constexpr double ns() const noexcept { return static_cast<double>(count) / 1000.0; }

    static Picoseconds from_ns(double ns) { return {static_cast<std::int64_t>(std::llround(ns * 1000.0))}; }

    constexpr Picoseconds& operator+=(Picoseconds o) noexcept {
        count += o.count;
        return *this;
    }
    friend constexpr Picoseconds operator+(Picoseconds a, Picoseconds b) noexcept { return {a.count + b.count}; }
    friend constexpr Picoseconds operator*(Cycles n, Picoseconds p) noexcept {
        return {static_cast<std::int64_t>(n) * p.count};
    }
    friend constexpr Picoseconds operator*(Picoseconds p, Cycles n) noexcept { return n * p; }
    friend constexpr auto operator<=>(Picoseconds, Picoseconds) = default;
};

/// Gate delays of one PE in nanoseconds.
struct DelayParams {
    double d_ff = 0;
    double d_mul = 0;
    double d_add = 0;
    double d_csa = 0;
    double d_mux = 0;

    void validate() const {
        if (!(d_ff > 0 && d_mul > 0 && d_add > 0 && d_csa > 0 && d_mux > 0))
            throw ConfigError("all delay parameters must be strictly positive");
    }
};

/// T(k) = fixed + k * per_stage, in nanoseconds.
struct LinearTiming {
    double fixed_ns = 0;      ///< d_ff + d_mul + d_add
    double per_stage_ns = 0;  ///< d_csa + 2 d_mux

    static LinearTiming from(const DelayParams& d) {
        return {d.d_ff + d.d_mul + d.d_add, d.d_csa + 2.0 * d.d_mux};
    }

    double period_ns(double k) const noexcept { return fixed_ns + k * per_stage_ns; }

    /// fixed / per_stage: the delay ratio that enters the optimal-depth formula.
    double delay_ratio() const noexcept { return fixed_ns / per_stage_ns; }
};

struct LinearClock {
    LinearTiming timing;
    Picoseconds conventional;  ///< period of the non-configurable array
};

struct ClockTable {
    Picoseconds conventional;
    std::map<int, Picoseconds> periods;

    void validate() const {
        if (conventional.count <= 0) throw ConfigError("conventional period must be positive");
        Picoseconds prev{0};
        for (const auto& [k, p] : periods) {
            if (k < 1) throw ConfigError("clock table depth must be >= 1");
            if (p.count <= 0) throw ConfigError("clock table periods must be positive");
            if (p < prev) throw ConfigError("clock table periods must be non-decreasing in k");
            prev = p;
        }
        if (auto it = periods.find(1); it != periods.end() && conventional > it->second)
            throw ConfigError("conventional period cannot exceed the k=1 period");
    }
};

/// Either flavour of clock model; `paper()` is the default measured table.
class ClockModel {
public:
    using Variant = std::variant<LinearClock, ClockTable>;

    explicit ClockModel(ClockTable table) : v_(std::move(table)) { std::get<ClockTable>(v_).validate(); }
    explicit ClockModel(LinearClock linear) : v_(linear) {
        const auto& t = std::get<LinearClock>(v_).timing;
        if (!(t.fixed_ns > 0 && t.per_stage_ns >= 0))
            throw ConfigError("linear clock needs a positive fixed delay and a non-negative per-stage delay");
        if (linear.conventional.count <= 0 || linear.conventional > Picoseconds::from_ns(t.period_ns(1)))
            throw ConfigError("conventional period must be positive and no larger than T(1)");
    }

    /// Linear model built from raw gate delays; the conventional array pays
    /// only d_ff + d_mul + d_add.
    static ClockModel linear(const DelayParams& d) {
        d.validate();
        const auto timing = LinearTiming::from(d);
        return ClockModel(LinearClock{timing, Picoseconds::from_ns(timing.fixed_ns)});
    }

    /// 2.0 GHz conventional; 1.8, 1.7 and 1.4 GHz for k = 1, 2 and 4.
    static ClockModel paper() {
        return ClockModel(ClockTable{{500}, {{1, {556}}, {2, {588}}, {4, {714}}}});
    }

    bool is_table() const noexcept { return std::holds_alternative<ClockTable>(v_); }
    const Variant& variant() const noexcept { return v_; }

    bool available(int k) const noexcept {
        if (k < 1) return false;
        if (auto* t = std::get_if<ClockTable>(&v_)) return t->periods.contains(k);
        return true;
    }

    Picoseconds period(int k) const {
        if (k < 1) throw UnsupportedModeError("depth must be >= 1");
        if (auto* t = std::get_if<ClockTable>(&v_)) {
            auto it = t->periods.find(k);
            if (it == t->periods.end())
                throw UnsupportedModeError("clock table has no entry for k=" + std::to_string(k));
            return it->second;
        }
        return Picoseconds::from_ns(std::get<LinearClock>(v_).timing.period_ns(k));
    }

    Picoseconds conventional_period() const noexcept {
        if (auto* t = std::get_if<ClockTable>(&v_)) return t->conventional;
        return std::get<LinearClock>(v_).conventional;
    }

    /// Depths the table lists; empty for the linear model (any depth).
    std::vector<int> table_depths() const {
        std::vector<int> ks;
        if (auto* t = std::get_if<ClockTable>(&v_))
            for (const auto& [k, p] : t->periods) ks.push_back(k);
        return ks;
    }

private:
    Variant v_;
};

/// Either the conventional array or the configurable array at a given depth.
struct Mode {
    int depth = 1;
    bool conventional = false;

    static constexpr Mode baseline() noexcept { return {1, true}; }
    static constexpr Mode shallow(int k) noexcept { return {k, false}; }

    std::string label() const { return conventional ? std::string("conventional") : "k=" + std::to_string(depth); }
    friend bool operator==(const Mode&, const Mode&) = default;
};

inline Picoseconds clock_period(Mode mode, const ClockModel& model) {
    return mode.conventional ? model.conventional_period() : model.period(mode.depth);
}

inline Picoseconds clock_period(int k, const ClockModel& model) { return model.period(k); }

/// Absolute time of the GEMM at depth k: total cycles times the clock period.
inline Picoseconds exec_time(int k, const GemmShape& s, const ArrayConfig& cfg, const ClockModel& model) {
    return total_cycles(k, s, cfg) * model.period(k);
}

inline Picoseconds conventional_exec_time(const GemmShape& s, const ArrayConfig& cfg, const ClockModel& model) {
    return conventional_total_cycles(s, cfg) * model.conventional_period();
}

/// Least-squares fit of fixed + k * per_stage to the table's depth points.
inline LinearTiming fit_linear(const ClockTable& table) {
    if (table.periods.size() < 2) throw ConfigError("fitting a linear clock needs at least two depths");
    double sk = 0, sp = 0, skk = 0, skp = 0;
    const auto n = static_cast<double>(table.periods.size());
    for (const auto& [k, p] : table.periods) {
        const double x = k, y = p.ns();
        sk += x;
        sp += y;
        skk += x * x;
        skp += x * y;
    }
    const double slope = (n * skp - sk * sp) / (n * skk - sk * sk);
    return {(sp - slope * sk) / n, slope};
}

/// Linear timing behind a model: the model itself, or a fit of its table.
inline LinearTiming linear_timing(const ClockModel& model) {
    if (auto* t = std::get_if<ClockTable>(&model.variant())) return fit_linear(*t);
    return std::get<LinearClock>(model.variant()).timing;
}

/// The fitted linear model, keeping the table's conventional period.
inline ClockModel fitted_linear(const ClockModel& model) {
    return ClockModel(LinearClock{linear_timing(model), model.conventional_period()});
}

/// Clock table file: `conventional = <ps>` plus `k<depth> = <ps>` lines.
inline ClockTable parse_clock_table(const std::vector<KeyValue>& kvs, const std::string& source) {
    ClockTable table;
    bool have_conventional = false;
    for (const auto& kv : kvs) {
        const auto ps = parse_value<std::int64_t>(kv, source);
        if (kv.key == "conventional") {
            table.conventional = {ps};
            have_conventional = true;
        } else if (kv.key.size() > 1 && kv.key[0] == 'k') {
            int k = 0;
            if (!parse_number(std::string_view(kv.key).substr(1), k) || k < 1)
                throw ParseError(source, kv.line, 1, "bad depth key '" + kv.key + "'");
            table.periods[k] = {ps};
        } else {
            throw ParseError(source, kv.line, 1, "unknown clock table key '" + kv.key + "'");
        }
    }
    if (!have_conventional) throw ParseError(source, kvs.empty() ? 0 : kvs.back().line, 1, "missing 'conventional'");
    table.validate();
    return table;
}

inline ClockModel load_clock_table(const std::string& path) {
    return ClockModel(parse_clock_table(read_key_values_file(path), path));
}

}  // namespace flexpipe
