// End-to-end checks of the command-line tool: exit codes, golden help text,
// file outputs and byte-stable reports.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "edgesched/metrics.hpp"
#include "edgesched/trace.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    std::string cmd = std::string(EDGESCHED_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch_dir() {
    fs::path dir = fs::temp_directory_path() / "edgesched_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("help text names the subcommands") {
    CmdResult r = run_cli("--help");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("trace") != std::string::npos);
    CHECK(r.output.find("run") != std::string::npos);
    CHECK(r.output.find("verify") != std::string::npos);
}

TEST_CASE("missing subcommand or bad flags exit with usage code 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("trace gen --kind nosuch").exit_code == 2);
    CHECK(run_cli("run --trace a.csv --gen uniform").exit_code == 2);
    CHECK(run_cli("run").exit_code == 2);
    CHECK(run_cli("run --matrix nosuch").exit_code == 2);
}

TEST_CASE("trace gen writes the file and a stats sidecar") {
    fs::path dir = scratch_dir();
    fs::path out = dir / "w4.csv";
    CmdResult r = run_cli("trace gen --kind weighted4 --frames 1296 --seed 7 -o " +
                          out.string());
    REQUIRE(r.exit_code == 0);
    auto trace = edgesched::parse(slurp(out));
    CHECK(trace.frames.size() == 1296);
    auto stats = nlohmann::json::parse(slurp(dir / "w4.csv.stats.json"));
    CHECK(stats["frames"] == 1296);
    double lp = stats["potential_lp"].get<double>();
    double hp = stats["potential_hp"].get<double>();
    CHECK(std::abs(lp - 13941) / 13941 < 0.05);
    CHECK(std::abs(hp - 4901) / 4901 < 0.05);
}

TEST_CASE("trace gen with zero frames writes an empty trace with zero stats") {
    fs::path dir = scratch_dir();
    fs::path out = dir / "empty.csv";
    CmdResult r = run_cli("trace gen --frames 0 --seed 1 -o " + out.string());
    REQUIRE(r.exit_code == 0);
    auto stats = nlohmann::json::parse(slurp(dir / "empty.csv.stats.json"));
    CHECK(stats["frames"] == 0);
    CHECK(stats["potential_hp"] == 0);
    CHECK(stats["potential_lp"] == 0);
}

TEST_CASE("the seed falls back to EDGESCHED_SEED") {
    fs::path dir = scratch_dir();
    fs::path out = dir / "env.csv";
    CmdResult r = run_cli("trace gen --frames 4 -o " + out.string() + " ");
    REQUIRE(r.exit_code == 0);
    // explicit env beats the built-in default
    std::string cmd = "EDGESCHED_SEED=99 " + std::string(EDGESCHED_CLI_PATH) +
                      " trace gen --frames 4 -o " + out.string() + " >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    auto stats = nlohmann::json::parse(slurp(dir / "env.csv.stats.json"));
    CHECK(stats["seed"] == 99);
}

TEST_CASE("run produces a deterministic report and the documented csv header") {
    fs::path dir = scratch_dir();
    fs::path trace = dir / "small.csv";
    REQUIRE(run_cli("trace gen --kind weighted2 --frames 40 --seed 5 -o " +
                    trace.string())
                .exit_code == 0);
    std::string base = "run --algo scheduler --preemption on --trace " + trace.string() +
                       " --seed 7 -o ";
    REQUIRE(run_cli(base + (dir / "out1").string()).exit_code == 0);
    REQUIRE(run_cli(base + (dir / "out2").string()).exit_code == 0);
    std::string a = slurp(dir / "out1" / "report.json");
    std::string b = slurp(dir / "out2" / "report.json");
    CHECK(a == b);  // byte-identical
    std::string csv = slurp(dir / "out1" / "report.csv");
    CHECK(csv.rfind(edgesched::csv_header() + "\n", 0) == 0);
    CHECK(fs::exists(dir / "out1" / "latency.json"));
}

TEST_CASE("run accepts a config file with flag overrides") {
    fs::path dir = scratch_dir();
    fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"algorithm":"scheduler","preemption":true,"seed":3})";
    fs::path trace = dir / "t.csv";
    REQUIRE(run_cli("trace gen --kind uniform --frames 20 --seed 5 -o " + trace.string())
                .exit_code == 0);
    CmdResult r = run_cli("run --config " + cfg.string() + " --preemption off --trace " +
                          trace.string() + " -o " + (dir / "out").string());
    REQUIRE(r.exit_code == 0);
    auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report["preemption"] == false);  // flag overrode the file
    CHECK(report["seed"] == 3);            // file value kept
}

TEST_CASE("reps vary seeds and emit a mean/stddev summary") {
    fs::path dir = scratch_dir();
    fs::path trace = dir / "t.csv";
    REQUIRE(run_cli("trace gen --kind weighted1 --frames 20 --seed 5 -o " + trace.string())
                .exit_code == 0);
    CmdResult r = run_cli("run --gen weighted1 --reps 2 --seed 5 --algo scheduler -o " +
                          (dir / "reps").string());
    REQUIRE(r.exit_code == 0);
    auto summary = nlohmann::json::parse(slurp(dir / "reps" / "summary.json"));
    CHECK(summary["reps"] == 2);
    CHECK(summary["frame_completion_rate"].contains("mean"));
    CHECK(summary["frame_completion_rate"].contains("stddev"));
    CHECK(fs::exists(dir / "reps" / "rep0" / "report.json"));
    CHECK(fs::exists(dir / "reps" / "rep1" / "report.json"));
}

TEST_CASE("matrix writes eight labeled reports and verify reads them") {
    fs::path dir = scratch_dir();
    // Small traces keep this test quick; verify only checks mechanics here.
    for (const char* kind : {"uniform", "weighted4"})
        REQUIRE(run_cli("trace gen --kind " + std::string(kind) +
                        " --frames 24 --seed 5 -o " +
                        (dir / (std::string(kind) + ".csv")).string())
                    .exit_code == 0);
    CmdResult r = run_cli("run --matrix paper --trace-dir " + dir.string() + " --seed 5 -o " +
                          (dir / "matrix").string());
    REQUIRE(r.exit_code == 0);
    for (const char* label : {"UPS", "UNPS", "WPS_4", "WNPS_4", "DPW", "DNPW", "CPW", "CNPW"})
        CHECK(fs::exists(dir / "matrix" / label / "report.json"));
    std::string csv = slurp(dir / "matrix" / "matrix.csv");
    CHECK(csv.rfind("label," + edgesched::csv_header() + "\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

    CmdResult v = run_cli("verify " + (dir / "matrix").string());
    CHECK(v.output.find("hp completion WPS_4") != std::string::npos);
    CHECK(v.output.find("frame completion") != std::string::npos);

    // Partial matrix: drop a cell, its rows flip to skipped.
    fs::remove_all(dir / "matrix" / "CNPW");
    CmdResult p = run_cli("verify " + (dir / "matrix").string());
    CHECK(p.output.find("SKIP") != std::string::npos);
    CHECK(p.output.find("missing report: CNPW") != std::string::npos);

    CHECK(run_cli("verify " + (dir / "nosuch").string()).exit_code == 1);
}
