#pragma once

// Command-line front end: simulate, optimize, sweep and report.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "flexpipe/analytic.hpp"
#include "flexpipe/clock.hpp"
#include "flexpipe/networks.hpp"
#include "flexpipe/optimizer.hpp"
#include "flexpipe/power.hpp"
#include "flexpipe/records.hpp"
#include "flexpipe/svg.hpp"
#include "flexpipe/systolic.hpp"
#include "flexpipe/workloads.hpp"

namespace flexpipe::cli {

/// Bad flags or flag combinations; exit status 2.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::uint64_t rows = 128;
    std::uint64_t cols = 128;
    std::vector<int> depths;
    std::string clock_table;
    std::string clock_linear;
    std::string coeffs;
    std::string out;
    std::string format = "text";
    std::string gemm;
    std::string network;
    std::string builtin;
    std::string depthwise = "packed";
    std::string k_list = "1,2,4";
    std::vector<std::uint64_t> sizes;
    int k = 1;
    std::uint64_t seed = 1;
    double budget = 1e9;
    unsigned jobs = 1;
    std::string trace;
    std::vector<std::string> probes;
};

struct Workload {
    std::string name;
    std::vector<ConvLayer> convs;  ///< empty for an explicit GEMM
    std::optional<GemmShape> gemm;

    std::vector<LayerGemm> lower(const ArrayConfig& cfg, GroupedLowering policy) const {
        if (gemm) return {{"gemm", *gemm, 1}};
        return lower_network(convs, cfg, policy);
    }
};

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.emplace_back(trim(item));
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, std::string_view flag) {
    std::vector<T> out;
    for (const auto& item : split_list(text)) {
        T v{};
        if (!parse_number(item, v)) throw UsageError(std::string(flag) + ": bad number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

inline GemmShape parse_gemm(const std::string& text) {
    const auto v = parse_list<std::uint64_t>(text, "--gemm");
    if (v.size() != 3) throw UsageError("--gemm expects M,N,T");
    return GemmShape::make(v[0], v[1], v[2]);
}

inline ClockModel make_clock(const Options& o) {
    if (!o.clock_table.empty() && !o.clock_linear.empty())
        throw UsageError("--clock-table and --clock-linear are mutually exclusive");
    if (!o.clock_linear.empty()) {
        if (o.clock_linear == "fit") return fitted_linear(ClockModel::paper());
        const auto d = parse_list<double>(o.clock_linear, "--clock-linear");
        if (d.size() != 5) throw UsageError("--clock-linear expects dff,dmul,dadd,dcsa,dmux (ns) or 'fit'");
        return ClockModel::linear({d[0], d[1], d[2], d[3], d[4]});
    }
    if (o.clock_table.empty() || o.clock_table == "paper") return ClockModel::paper();
    return load_clock_table(o.clock_table);
}

inline ArrayConfig make_array(const Options& o, std::uint64_t rows, std::uint64_t cols) {
    if (o.depths.empty()) return ArrayConfig::with_divisible_depths(rows, cols, {1, 2, 4});
    auto ds = o.depths;
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
    if (ds.front() != 1) ds.insert(ds.begin(), 1);
    return ArrayConfig::make(rows, cols, ds);
}

inline GroupedLowering make_policy(const Options& o) {
    if (o.depthwise == "packed") return GroupedLowering::packed;
    if (o.depthwise == "per-channel") return GroupedLowering::per_channel;
    throw UsageError("--depthwise expects packed or per-channel");
}

inline std::vector<Workload> make_workloads(const Options& o) {
    const int sources = !o.gemm.empty() + !o.network.empty() + !o.builtin.empty();
    if (sources != 1) throw UsageError("give exactly one of --gemm, --network, --builtin");
    if (!o.gemm.empty()) return {{"gemm", {}, parse_gemm(o.gemm)}};
    if (!o.network.empty()) return {{o.network, load_network(o.network), std::nullopt}};
    std::vector<Workload> out;
    const auto names = o.builtin == "all" ? builtin_network_names() : split_list(o.builtin);
    for (const auto& n : names) out.push_back({n, builtin_network(n), std::nullopt});
    return out;
}

inline double pct(double fraction) { return 100.0 * fraction; }

/// Writes records (or the chart, for svg) to --out or the given stream.
inline void emit(const Options& o, std::ostream& out, std::span<const Record> records,
                 const std::optional<BarChart>& chart) {
    const Format f = parse_format(o.format);
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) throw Error("cannot write " + o.out);
    }
    std::ostream& os = o.out.empty() ? out : file;
    switch (f) {
        case Format::csv: write_csv(os, records); break;
        case Format::jsonl: write_jsonl(os, records); break;
        case Format::text: write_text(os, records); break;
        case Format::svg:
            if (!chart) throw UsageError("this command has no svg output");
            write_svg(os, *chart);
            break;
    }
}

// --- simulate -------------------------------------------------------------

inline int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.gemm.empty() || !o.network.empty() || !o.builtin.empty())
        throw UsageError("simulate takes an explicit --gemm M,N,T");
    const GemmShape s = parse_gemm(o.gemm);
    const auto cfg = ArrayConfig::make(o.rows, o.cols, o.k == 1 ? std::vector<int>{1} : std::vector<int>{1, o.k});
    const auto model = make_clock(o);
    const Cycles predicted = total_cycles(o.k, s, cfg);
    const double work = static_cast<double>(cfg.rows) * static_cast<double>(cfg.cols) * static_cast<double>(predicted);
    if (work > o.budget)
        throw Error("simulation needs " + format_double(work) + " PE-updates, over the budget of " +
                    format_double(o.budget) + "; use 'optimize' for an analytic estimate or raise --budget");

    std::mt19937_64 rng(o.seed);
    const std::int64_t lo = signed_min(cfg.input_bits), hi = signed_max(cfg.input_bits);
    std::uniform_int_distribution<std::int64_t> dist(lo, hi);
    Matrix<std::int64_t> a(s.t, s.n), b(s.n, s.m);
    for (auto& v : a.data()) v = dist(rng);
    for (auto& v : b.data()) v = dist(rng);

    SimOptions sim;
    std::ofstream trace;
    if (!o.trace.empty()) {
        trace.open(o.trace);
        if (!trace) throw Error("cannot write " + o.trace);
        sim.trace = &trace;
        for (const auto& p : o.probes) {
            const auto rc = parse_list<std::uint64_t>(p, "--probe");
            if (rc.size() != 2 || rc[0] >= cfg.rows || rc[1] >= cfg.cols)
                throw UsageError("--probe expects ROW,COL inside the array");
            sim.probes.emplace_back(rc[0], rc[1]);
        }
    }
    const auto res = simulate_gemm(a, b, o.k, cfg, sim);
    const bool pass = res.output == reference_matmul(a, b, cfg.accum_bits);

    Record r;
    r.set("rows", cfg.rows).set("cols", cfg.cols).set("k", o.k);
    r.set("M", s.m).set("N", s.n).set("T", s.t).set("seed", o.seed);
    r.set("tiles", res.tiles).set("cycles", res.totals.cycles).set("predicted_cycles", predicted);
    r.set("mac_ops", res.totals.mac_ops).set("reg_writes", res.totals.reg_writes);
    r.set("active_reg_cycles", res.totals.active_reg_cycles).set("gated_reg_cycles", res.totals.gated_reg_cycles);
    if (model.available(o.k)) {
        const auto period = model.period(o.k);
        r.set("period_ps", period.count).set("time_ns", (res.totals.cycles * period).ns());
    }
    r.set("verdict", pass ? "PASS" : "FAIL");
    const std::vector<Record> records{r};
    emit(o, out, records, std::nullopt);
    if (!pass) {
        err << "error: simulator output differs from the reference product\n";
        return 1;
    }
    return 0;
}

// --- optimize -------------------------------------------------------------

inline int cmd_optimize(const Options& o, std::ostream& out) {
    const auto cfg = make_array(o, o.rows, o.cols);
    const auto model = make_clock(o);
    const auto policy = make_policy(o);
    std::vector<Record> records;
    BarChart chart{"Execution time normalized to the conventional array", "normalized time", {},
                   ReferenceLine{"conventional", 1.0}};
    for (const auto& w : make_workloads(o)) {
        const auto layers = w.lower(cfg, policy);
        const auto sched = schedule_network(layers, cfg, model);
        for (const auto& l : sched.layers) {
            Record r;
            r.set("record", "layer").set("network", w.name).set("layer", l.layer.name);
            r.set("M", l.layer.shape.m).set("N", l.layer.shape.n).set("T", l.layer.shape.t);
            r.set("repeat", l.layer.repeat).set("k", l.choice.k);
            if (std::isfinite(l.choice.k_hat)) r.set("k_hat", l.choice.k_hat);
            r.set("cycles", l.choice.cycles).set("period_ps", l.choice.period.count);
            r.set("time_ns", l.total_time().ns()).set("conventional_cycles", l.conventional_cycles);
            r.set("conventional_time_ns", l.total_conventional_time().ns()).set("savings_pct", pct(l.savings()));
            records.push_back(std::move(r));
        }
        const auto ks = sched.depth_sequence();
        Record t;
        t.set("record", "network").set("network", w.name).set("layers", sched.layers.size());
        t.set("rows", cfg.rows).set("cols", cfg.cols);
        t.set("time_ns", sched.flex_time.ns()).set("conventional_time_ns", sched.conventional_time.ns());
        t.set("normalized_time", sched.ratio()).set("savings_pct", pct(sched.savings()));
        t.set("k_non_decreasing", non_decreasing(ks));
        t.set("depthwise", std::string(to_string(policy))).set("reconfig_cycles", 0);
        records.push_back(std::move(t));
        chart.bars.push_back({w.name, sched.ratio(), true});
    }
    emit(o, out, records, chart);
    return 0;
}

// --- sweep ----------------------------------------------------------------

struct SweepPoint {
    std::string network;
    LayerGemm layer;
    std::uint64_t rows, cols;
    int k;
};

inline Record evaluate_point(const SweepPoint& p, const ClockModel& model) {
    Record r;
    r.set("network", p.network).set("layer", p.layer.name).set("rows", p.rows).set("cols", p.cols).set("k", p.k);
    r.set("M", p.layer.shape.m).set("N", p.layer.shape.n).set("T", p.layer.shape.t);
    if (p.k < 1 || p.rows % p.k || p.cols % p.k) {
        r.set("status", "unsupported: k must divide rows and cols");
        return r;
    }
    if (!model.available(p.k)) {
        r.set("status", "unsupported: no clock period for k=" + std::to_string(p.k));
        return r;
    }
    const auto cfg = ArrayConfig::make(p.rows, p.cols, p.k == 1 ? std::vector<int>{1} : std::vector<int>{1, p.k});
    const auto time = p.layer.repeat * exec_time(p.k, p.layer.shape, cfg, model);
    const auto conv = p.layer.repeat * conventional_exec_time(p.layer.shape, cfg, model);
    r.set("status", "ok").set("cycles", p.layer.repeat * total_cycles(p.k, p.layer.shape, cfg));
    r.set("period_ps", model.period(p.k).count).set("time_ns", time.ns());
    r.set("conventional_time_ns", conv.ns());
    r.set("normalized_time", static_cast<double>(time.count) / static_cast<double>(conv.count));
    return r;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
    const auto ks = parse_list<int>(o.k_list, "--k");
    if (ks.empty()) throw UsageError("--k needs at least one depth");
    const auto model = make_clock(o);
    const auto policy = make_policy(o);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> arrays;
    if (o.sizes.empty()) arrays.emplace_back(o.rows, o.cols);
    for (auto n : o.sizes) arrays.emplace_back(n, n);

    std::vector<SweepPoint> points;
    for (const auto& [rows, cols] : arrays) {
        const auto cfg = ArrayConfig::make(rows, cols);
        for (const auto& w : make_workloads(o))
            for (const auto& l : w.lower(cfg, policy))
                for (int k : ks) points.push_back({w.name, l, rows, cols, k});
    }

    std::vector<Record> records(points.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < points.size();) records[i] = evaluate_point(points[i], model);
    };
    const unsigned jobs = std::clamp<unsigned>(o.jobs, 1, 256);
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    pool.clear();

    BarChart chart{"Execution time by pipeline depth", "time (ns)", {}, std::nullopt};
    const bool single = points.size() == ks.size();
    for (const auto& r : records) {
        const auto* t = r.get("time_ns");
        std::string label = "k=" + to_text(*r.get("k"));
        if (!single) label = to_text(*r.get("layer")) + " " + label;
        chart.bars.push_back({label, t ? std::get<double>(*t) : 0.0, t != nullptr});
        if (single && !chart.reference)
            if (const auto* c = r.get("conventional_time_ns"))
                chart.reference = ReferenceLine{"conventional", std::get<double>(*c)};
    }
    if (single) chart.title = "Execution time by pipeline depth: " + points.front().layer.name;
    emit(o, out, records, chart);
    return 0;
}

// --- report ---------------------------------------------------------------

inline int cmd_report(const Options& o, std::ostream& out) {
    const auto cfg = make_array(o, o.rows, o.cols);
    const auto model = make_clock(o);
    const auto policy = make_policy(o);
    const auto coeffs = o.coeffs.empty() ? EnergyCoefficients{} : load_coefficients(o.coeffs);
    std::vector<Record> records;
    BarChart chart{"Energy-delay product gain over the conventional array", "EDP ratio", {},
                   ReferenceLine{"conventional", 1.0}};
    for (const auto& w : make_workloads(o)) {
        const auto layers = w.lower(cfg, policy);
        const auto sched = schedule_network(layers, cfg, model);
        const auto cost = estimate_network(sched, cfg, model, coeffs);
        for (std::size_t i = 0; i < sched.layers.size(); ++i) {
            const auto& l = sched.layers[i];
            const auto& c = cost.layers[i];
            Record r;
            r.set("record", "layer").set("network", w.name).set("layer", l.layer.name);
            r.set("repeat", l.layer.repeat).set("k", l.choice.k);
            r.set("time_ns", c.flex.time_ns()).set("energy_pj", c.flex.energy_pj);
            r.set("avg_power_mw", c.flex.avg_power_mw);
            r.set("conventional_time_ns", c.conventional.time_ns());
            r.set("conventional_energy_pj", c.conventional.energy_pj);
            records.push_back(std::move(r));
        }
        for (const auto& [k, c] : cost.flex_by_mode) {
            Record r;
            r.set("record", "mode").set("network", w.name).set("k", k);
            r.set("time_ns", c.time_ns()).set("energy_pj", c.energy_pj).set("avg_power_mw", c.avg_power_mw);
            records.push_back(std::move(r));
        }
        const auto k1 = estimate_fixed_depth(layers, 1, cfg, model, coeffs);
        Record t;
        t.set("record", "network").set("network", w.name).set("rows", cfg.rows).set("cols", cfg.cols);
        t.set("time_ns", cost.flex.time_ns()).set("conventional_time_ns", cost.conventional.time_ns());
        t.set("normalized_time", sched.ratio());
        t.set("energy_pj", cost.flex.energy_pj).set("conventional_energy_pj", cost.conventional.energy_pj);
        t.set("avg_power_mw", cost.flex.avg_power_mw).set("conventional_power_mw", cost.conventional.avg_power_mw);
        t.set("k1_power_mw", k1.avg_power_mw).set("power_ratio", cost.power_ratio());
        t.set("edp_ratio", cost.edp_ratio());
        t.set("coefficients", o.coeffs.empty() ? std::string("default estimates") : o.coeffs);
        t.set("depthwise", std::string(to_string(policy))).set("reconfig_cycles", 0);
        records.push_back(std::move(t));
        chart.bars.push_back({w.name, cost.edp_ratio(), true});
    }
    emit(o, out, records, chart);
    return 0;
}

// --- entry point ----------------------------------------------------------

inline void add_array_flags(CLI::App* app, Options& o) {
    app->add_option("--rows", o.rows, "array rows (R)")->check(CLI::PositiveNumber);
    app->add_option("--cols", o.cols, "array columns (C)")->check(CLI::PositiveNumber);
}

inline void add_clock_flags(CLI::App* app, Options& o) {
    app->add_option("--clock-table", o.clock_table, "'paper' (default) or a key=value file of periods in ps");
    app->add_option("--clock-linear", o.clock_linear,
                    "dff,dmul,dadd,dcsa,dmux delays in ns, or 'fit' for a linear fit of the built-in table");
}

inline void add_workload_flags(CLI::App* app, Options& o) {
    app->add_option("--gemm", o.gemm, "explicit GEMM shape M,N,T");
    app->add_option("--network", o.network, "network CSV file");
    app->add_option("--builtin", o.builtin, "resnet34, mobilenet, convnext, a comma list, or 'all'");
    app->add_option("--depthwise", o.depthwise, "grouped convolution lowering: packed or per-channel")
        ->check(CLI::IsMember({"packed", "per-channel"}));
    app->add_option("--depths", o.depths, "supported depths (default 1,2,4 where they divide the array)")
        ->delimiter(',');
}

inline void add_output_flags(CLI::App* app, Options& o) {
    app->add_option("--out", o.out, "output path (default stdout)");
    app->add_option("--format", o.format, "csv, jsonl, text or svg")
        ->check(CLI::IsMember({"csv", "jsonl", "text", "svg"}));
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Systolic array pipeline-depth simulator and optimizer", "flexpipe"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "cycle-accurate simulation of one GEMM with an oracle check");
    add_array_flags(sim, o);
    sim->add_option("--k", o.k, "pipeline depth")->check(CLI::PositiveNumber);
    sim->add_option("--gemm", o.gemm, "GEMM shape M,N,T")->required();
    add_clock_flags(sim, o);
    sim->add_option("--seed", o.seed, "random matrix seed");
    sim->add_option("--budget", o.budget, "maximum R*C*cycles to simulate");
    sim->add_option("--trace", o.trace, "per-cycle PE trace file");
    sim->add_option("--probe", o.probes, "PE to trace as ROW,COL (repeatable; default all)");
    add_output_flags(sim, o);

    auto* opt = app.add_subcommand("optimize", "per-layer depth selection");
    add_array_flags(opt, o);
    add_clock_flags(opt, o);
    add_workload_flags(opt, o);
    add_output_flags(opt, o);

    auto* swp = app.add_subcommand("sweep", "time for every depth in a list");
    add_array_flags(swp, o);
    add_clock_flags(swp, o);
    add_workload_flags(swp, o);
    swp->add_option("--k", o.k_list, "comma list of depths (default 1,2,4)");
    swp->add_option("--sizes", o.sizes, "square array sizes, overriding --rows/--cols")->delimiter(',');
    swp->add_option("--jobs", o.jobs, "concurrent points")->check(CLI::PositiveNumber);
    add_output_flags(swp, o);

    auto* rep = app.add_subcommand("report", "time, energy, power and EDP per network");
    add_array_flags(rep, o);
    add_clock_flags(rep, o);
    add_workload_flags(rep, o);
    rep->add_option("--coeffs", o.coeffs, "energy coefficient key=value file");
    add_output_flags(rep, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (sim->parsed()) return cmd_simulate(o, out, err);
        if (opt->parsed()) return cmd_optimize(o, out);
        if (swp->parsed()) return cmd_sweep(o, out);
        return cmd_report(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace flexpipe::cli
