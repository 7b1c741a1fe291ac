#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flexpipe/cli.hpp"

using namespace flexpipe;
using Catch::Approx;

namespace {
struct Run {
    int status;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "flexpipe");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::vector<nlohmann::json> jsonl(const std::string& text) {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line));
    return out;
}

std::vector<std::map<std::string, std::string>> csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    const auto header = cli::split_list(line);
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        const auto cells = cli::split_list(line);
        auto& row = rows.emplace_back();
        for (std::size_t i = 0; i < header.size(); ++i)
            if (i < cells.size() && !cells[i].empty()) row[header[i]] = cells[i];
    }
    return rows;
}

std::string data(const std::string& rel) { return std::string(FLEXPIPE_DATA_DIR) + "/" + rel; }

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("flexpipe_test_" + name);
}
}  // namespace

TEST_CASE("simulate runs the oracle check", "[cli]") {
    const auto r = run({"simulate", "--rows", "8", "--cols", "8", "--k", "2", "--gemm", "6,16,10", "--format", "jsonl"});
    REQUIRE(r.status == 0);
    CHECK(r.err.empty());
    const auto j = jsonl(r.out);
    REQUIRE(j.size() == 1);
    CHECK(j[0]["verdict"] == "PASS");
    CHECK(j[0]["tiles"] == 2);
    CHECK(j[0]["cycles"] == 48);  // two tiles of 8 + 4 + 10 - 2
    CHECK(j[0]["predicted_cycles"] == 48);
    CHECK(j[0]["period_ps"] == 588);

    const auto small = run({"simulate", "--rows", "4", "--cols", "4", "--k", "1", "--gemm", "1,4,4", "--format", "jsonl"});
    REQUIRE(small.status == 0);
    CHECK(jsonl(small.out)[0]["cycles"] == 14);
}

TEST_CASE("simulate errors", "[cli]") {
    const auto bad_k = run({"simulate", "--rows", "8", "--cols", "8", "--k", "3", "--gemm", "6,16,10"});
    CHECK(bad_k.status != 0);
    CHECK(bad_k.err.find("error:") != std::string::npos);

    const auto budget =
        run({"simulate", "--rows", "128", "--cols", "128", "--gemm", "512,2304,196", "--budget", "1e6"});
    CHECK(budget.status != 0);
    CHECK(budget.err.find("optimize") != std::string::npos);

    CHECK(run({"simulate", "--gemm", "1,2"}).status == 2);
    CHECK(run({"simulate"}).status != 0);
    CHECK(run({"simulate", "--gemm", "4,4,4", "--format", "svg"}).status == 2);
    CHECK(run({"bogus"}).status != 0);
}

TEST_CASE("simulate is reproducible and traces probed PEs", "[cli]") {
    const auto trace = temp_file("trace.csv");
    const std::vector<std::string> args{"simulate", "--rows",  "4",        "--cols",  "4",
                                        "--k",      "2",       "--gemm",   "4,4,3",   "--seed",
                                        "99",       "--trace", trace.string(), "--probe", "1,1"};
    const auto a = run(args);
    REQUIRE(a.status == 0);
    std::ifstream in(trace);
    std::string first_trace((std::istreambuf_iterator<char>(in)), {});
    CHECK(first_trace.rfind("cycle,row,col,weight,activation,sum,carry\n", 0) == 0);
    std::istringstream lines(first_trace);
    std::string line;
    std::getline(lines, line);
    std::size_t records = 0;
    for (; std::getline(lines, line); ++records) CHECK(line.find(",1,1,") == line.find(','));
    CHECK(records == 5);  // one per streaming cycle: T + (R + C)/k - 2

    const auto b = run(args);
    std::ifstream in2(trace);
    std::string second_trace((std::istreambuf_iterator<char>(in2)), {});
    CHECK(a.out == b.out);
    CHECK(first_trace == second_trace);
    std::filesystem::remove(trace);

    auto other = args;
    other[9] = "100";
    run(other);
    std::ifstream in3(trace);
    std::string third_trace((std::istreambuf_iterator<char>(in3)), {});
    CHECK(third_trace != first_trace);
    std::filesystem::remove(trace);
}

TEST_CASE("optimize on explicit shapes and built-in networks", "[cli]") {
    const auto r = run({"optimize", "--gemm", "256,2304,196", "--rows", "132", "--cols", "132", "--format", "jsonl"});
    REQUIRE(r.status == 0);
    const auto j = jsonl(r.out);
    REQUIRE(j.size() == 2);
    CHECK(j[0]["k"] == 2);
    CHECK(j[0]["savings_pct"].get<double>() == Approx(100.0 * (1 - 16488.0 * 588 / 10'620'000)));
    CHECK(j[0]["savings_pct"].get<double>() == Approx(8.7).margin(0.1));
    CHECK(j[1]["record"] == "network");

    const auto net = run({"optimize", "--builtin", "resnet34", "--rows", "132", "--cols", "132", "--clock-table",
                          "paper", "--format", "jsonl"});
    REQUIRE(net.status == 0);
    std::map<std::string, int> chosen;
    for (const auto& rec : jsonl(net.out))
        if (rec["record"] == "layer") chosen[rec["layer"]] = rec["k"];
    CHECK(chosen.at("layer20") == 2);
    CHECK(chosen.at("layer28") == 4);

    const auto cx = run({"optimize", "--builtin", "convnext", "--rows", "128", "--cols", "128", "--format", "jsonl"});
    REQUIRE(cx.status == 0);
    const auto last = jsonl(cx.out).back();
    CHECK(last["record"] == "network");
    CHECK(last["k_non_decreasing"].is_boolean());

    const auto file = run({"optimize", "--network", data("networks/resnet34.csv"), "--rows", "132", "--cols", "132",
                           "--format", "jsonl"});
    REQUIRE(file.status == 0);
    CHECK(jsonl(file.out).size() == jsonl(net.out).size());
}

TEST_CASE("optimize usage errors", "[cli]") {
    CHECK(run({"optimize"}).status == 2);
    CHECK(run({"optimize", "--gemm", "1,1,1", "--builtin", "resnet34"}).status == 2);
    CHECK(run({"optimize", "--builtin", "vgg"}).status == 1);
    CHECK(run({"optimize", "--gemm", "1,1,1", "--clock-table", "paper", "--clock-linear", "fit"}).status == 2);
    CHECK(run({"optimize", "--gemm", "1,1,1", "--clock-linear", "1,2"}).status == 2);
    CHECK(run({"optimize", "--gemm", "1,1,1", "--format", "xml"}).status != 0);
    const auto missing = run({"optimize", "--network", "/nonexistent.csv"});
    CHECK(missing.status == 1);
    CHECK(missing.out.empty());
}

TEST_CASE("sweep", "[cli]") {
    const auto r = run({"sweep", "--gemm", "256,2304,196", "--rows", "132", "--cols", "132", "--k", "1,2,3,4",
                        "--clock-linear", "fit", "--format", "jsonl"});
    REQUIRE(r.status == 0);
    const auto j = jsonl(r.out);
    REQUIRE(j.size() == 4);
    int best = 0;
    double best_time = INFINITY;
    for (const auto& rec : j) {
        CHECK(rec["status"] == "ok");
        CHECK(rec["conventional_time_ns"].get<double>() == Approx(10620));
        if (rec["time_ns"].get<double>() < best_time) {
            best_time = rec["time_ns"];
            best = rec["k"];
        }
    }
    CHECK(best >= 2);
    CHECK(best <= 4);

    const auto table = run({"sweep", "--gemm", "256,2304,196", "--rows", "132", "--cols", "132", "--k", "1,2,3,4",
                            "--format", "jsonl"});
    REQUIRE(table.status == 0);
    const auto t = jsonl(table.out);
    REQUIRE(t.size() == 4);
    CHECK(t[2]["k"] == 3);
    CHECK(t[2]["status"].get<std::string>().rfind("unsupported", 0) == 0);
    CHECK_FALSE(t[2].contains("time_ns"));
    CHECK(t[3]["status"] == "ok");

    CHECK(run({"sweep", "--gemm", "1,1,1", "--k", ""}).status == 2);
    CHECK(run({"sweep", "--gemm", "1,1,1", "--k", "x"}).status == 2);
}

TEST_CASE("sweep output order does not depend on --jobs", "[cli]") {
    const std::vector<std::string> base{"sweep", "--builtin", "resnet34,mobilenet", "--sizes", "64,128,256",
                                        "--k",   "1,2,4,8",   "--format",           "csv"};
    auto parallel = base;
    parallel.insert(parallel.end(), {"--jobs", "8"});
    const auto a = run(base), b = run(parallel);
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("svg plots", "[cli]") {
    const auto svg = temp_file("sweep.svg");
    const auto r = run({"sweep", "--gemm", "256,2304,196", "--rows", "132", "--cols", "132", "--k", "1,2,3,4",
                        "--format", "svg", "--out", svg.string()});
    REQUIRE(r.status == 0);
    CHECK(r.out.empty());
    std::ifstream in(svg);
    const std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
    CHECK(text.find("conventional 10620") != std::string::npos);
    CHECK(text.find("n/a") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
    CHECK(text.find("href") == std::string::npos);
    std::filesystem::remove(svg);

    CHECK(run({"report", "--builtin", "all", "--format", "svg"}).status == 0);
}

TEST_CASE("report formats agree", "[cli]") {
    const std::vector<std::string> base{"report", "--builtin", "all", "--rows", "128", "--cols", "128"};
    auto as_csv = base, as_jsonl = base;
    as_csv.insert(as_csv.end(), {"--format", "csv"});
    as_jsonl.insert(as_jsonl.end(), {"--format", "jsonl"});
    const auto c = run(as_csv), j = run(as_jsonl);
    REQUIRE(c.status == 0);
    REQUIRE(j.status == 0);
    const auto rows = csv(c.out);
    const auto objs = jsonl(j.out);
    REQUIRE(rows.size() == objs.size());
    std::size_t networks = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == objs[i].size());
        for (const auto& [key, value] : objs[i].items()) {
            INFO(key);
            REQUIRE(rows[i].count(key));
            const auto& cell = rows[i].at(key);
            if (value.is_string()) CHECK(cell == value.get<std::string>());
            else if (value.is_boolean()) CHECK(cell == (value.get<bool>() ? "true" : "false"));
            else if (value.is_number_integer()) CHECK(std::stoll(cell) == value.get<std::int64_t>());
            else CHECK(std::stod(cell) == value.get<double>());
        }
        if (objs[i]["record"] == "network") {
            ++networks;
            CHECK(objs[i]["edp_ratio"].get<double>() > 1.0);
            CHECK(objs[i]["avg_power_mw"].get<double>() < objs[i]["k1_power_mw"].get<double>());
        }
    }
    CHECK(networks == 3);

    const auto text = run(base);
    CHECK(text.status == 0);
    CHECK(text.out.find("edp_ratio") != std::string::npos);
}

TEST_CASE("report with static-only coefficients", "[cli]") {
    const auto coeffs = temp_file("coeffs.txt");
    {
        std::ofstream f(coeffs);
        f << "e_mac=0\ne_reg=0\ne_clk=0\np_static=10\n";
    }
    const auto r = run({"report", "--builtin", "resnet34", "--coeffs", coeffs.string(), "--format", "jsonl"});
    std::filesystem::remove(coeffs);
    REQUIRE(r.status == 0);
    const auto last = jsonl(r.out).back();
    const double time_ratio = last["normalized_time"].get<double>();
    CHECK(last["edp_ratio"].get<double>() == Approx(1.0 / (time_ratio * time_ratio)));

    CHECK(run({"report", "--builtin", "resnet34", "--coeffs", data("coeffs_default.txt")}).status == 0);
    CHECK(run({"report", "--builtin", "resnet34", "--coeffs", "/nonexistent"}).status == 1);
}

TEST_CASE("clock table file", "[cli]") {
    const auto a = run({"optimize", "--builtin", "resnet34", "--clock-table", data("clock_table.txt"), "--format",
                        "csv"});
    const auto b = run({"optimize", "--builtin", "resnet34", "--format", "csv"});
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
}
