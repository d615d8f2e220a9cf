// edgesched: trace generation, scenario runs, the eight-cell comparison
// matrix, and report verification. Exit codes: 0 ok, 1 runtime failure,
// 2 usage error.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "edgesched/engine.hpp"
#include "edgesched/matrix.hpp"

namespace fs = std::filesystem;
using namespace edgesched;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

nlohmann::json stats_json(const TraceFile& trace) {
    TraceStats s = stats(trace);
    return nlohmann::json{{"scenario", trace.scenario},
                          {"seed", trace.seed},
                          {"frames", s.frames},
                          {"potential_hp", s.potential_hp},
                          {"potential_lp", s.potential_lp}};
}

struct RunSpec {
    std::string config_path;
    std::string trace_path;
    std::string gen_kind;
    std::string out_dir = ".";
    std::string algo;
    std::string preemption;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int reps = 1;
    std::string matrix;
    std::string trace_dir;
};

ScenarioConfig make_config(const RunSpec& spec) {
    ScenarioConfig cfg;
    if (!spec.config_path.empty())
        cfg = config_from_json(nlohmann::json::parse(read_file(spec.config_path)));
    if (!spec.algo.empty() && !parse_algorithm(spec.algo, cfg.algorithm))
        throw CLI::ValidationError("--algo", "unknown algorithm " + spec.algo);
    if (!spec.preemption.empty()) cfg.preemption = spec.preemption == "on";
    if (spec.seed_set) cfg.seed = spec.seed;
    return cfg;
}

TraceFile load_trace(const RunSpec& spec, const ScenarioConfig& cfg) {
    if (!spec.trace_path.empty()) {
        TraceFile t = parse(read_file(spec.trace_path));
        if (t.scenario.empty()) t.scenario = fs::path(spec.trace_path).stem().string();
        return t;
    }
    TraceKind kind;
    if (!parse_trace_kind(spec.gen_kind, kind))
        throw CLI::ValidationError("--gen", "unknown trace kind " + spec.gen_kind);
    return generate(kind, 1296, cfg.seed);
}

void write_report(const fs::path& dir, const MetricsReport& report) {
    write_file(dir / "report.json", report_json(report).dump(2) + "\n");
    write_file(dir / "report.csv", csv_header() + "\n" + csv_row(report) + "\n");
    write_file(dir / "latency.json", latency_json(report).dump(2) + "\n");
}

int cmd_run_single(const RunSpec& spec) {
    ScenarioConfig cfg = make_config(spec);
    TraceFile trace = load_trace(spec, cfg);
    fs::path out(spec.out_dir);
    if (spec.reps <= 1) {
        MetricsReport report = run_scenario(cfg, trace);
        write_report(out, report);
        std::cout << render(report, RenderFormat::table);
        return 0;
    }
    // Repetitions vary only the stagger and noise streams; everything else,
    // including the trace, stays fixed. Mean and stddev per headline metric.
    std::vector<MetricsReport> reports;
    for (int k = 0; k < spec.reps; ++k) {
        ScenarioConfig rep = cfg;
        rep.stagger_seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(k));
        rep.noise_seed = mix_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(k));
        MetricsReport report = run_scenario(rep, trace);
        write_report(out / ("rep" + std::to_string(k)), report);
        reports.push_back(std::move(report));
    }
    nlohmann::json summary;
    auto stat = [&](const char* key, auto field) {
        double mean = 0.0;
        for (const MetricsReport& r : reports) mean += field(r);
        mean /= static_cast<double>(reports.size());
        double var = 0.0;
        for (const MetricsReport& r : reports) {
            double d = field(r) - mean;
            var += d * d;
        }
        var /= static_cast<double>(reports.size());
        summary[key] = {{"mean", mean}, {"stddev", std::sqrt(var)}};
    };
    stat("frame_completion_rate",
         [](const MetricsReport& r) { return r.frame_completion_rate.value_or(0.0); });
    stat("hp_completion_rate",
         [](const MetricsReport& r) { return r.hp_completion_rate.value_or(0.0); });
    stat("lp_completion_rate",
         [](const MetricsReport& r) { return r.lp_completion_rate.value_or(0.0); });
    stat("per_request_completion_mean",
         [](const MetricsReport& r) { return r.per_request_completion_mean.value_or(0.0); });
    stat("preemptions",
         [](const MetricsReport& r) { return static_cast<double>(r.preemptions()); });
    stat("violations",
         [](const MetricsReport& r) { return static_cast<double>(r.violations); });
    summary["reps"] = spec.reps;
    write_file(out / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_run_matrix(const RunSpec& spec) {
    if (spec.matrix != "paper")
        throw CLI::ValidationError("--matrix", "unknown matrix " + spec.matrix);
    ScenarioConfig base = make_config(spec);
    std::map<TraceKind, TraceFile> traces;
    for (TraceKind kind : {TraceKind::uniform, TraceKind::weighted4}) {
        fs::path candidate = fs::path(spec.trace_dir) / (std::string(to_string(kind)) + ".csv");
        if (!spec.trace_dir.empty() && fs::exists(candidate)) {
            traces[kind] = parse(read_file(candidate));
            if (traces[kind].scenario.empty()) traces[kind].scenario = to_string(kind);
        } else {
            std::cerr << "note: generating " << to_string(kind) << " trace (seed "
                      << base.seed << ")\n";
            traces[kind] = generate(kind, 1296, base.seed);
        }
    }
    std::vector<MatrixResult> results = run_matrix(base, traces);
    fs::path out(spec.out_dir);
    for (const MatrixResult& r : results) write_report(out / r.cell.label, r.report);
    write_file(out / "matrix.csv", matrix_csv(results));
    std::cout << matrix_table(results);
    return 0;
}

int cmd_verify(const std::string& dir) {
    std::map<std::string, VerifyInput> inputs;
    if (!fs::exists(dir)) {
        std::cerr << "verify: no such directory: " << dir << "\n";
        return 1;
    }
    std::vector<fs::path> entries;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "report.json"))
            entries.push_back(entry.path());
    std::sort(entries.begin(), entries.end());
    for (const fs::path& p : entries)
        inputs[p.filename().string()] =
            verify_input(nlohmann::json::parse(read_file(p / "report.json")));
    std::vector<VerifyRow> rows = verify_reports(inputs);
    std::cout << verify_table(rows);
    if (!verify_passed(rows)) {
        std::cerr << "verify: failed (or nothing to check) over " << inputs.size()
                  << " reports\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preemption-aware deadline-constrained task offloading simulator"};
    app.require_subcommand(1);

    // trace gen
    auto* trace_cmd = app.add_subcommand("trace", "trace file utilities");
    trace_cmd->require_subcommand(1);
    auto* gen = trace_cmd->add_subcommand("gen", "generate a workload trace");
    std::string gen_kind = "uniform", gen_out = "trace.csv";
    int gen_frames = 1296;
    std::uint64_t gen_seed = 2;
    gen->add_option("--kind", gen_kind,
                    "uniform|weighted1|weighted2|weighted3|weighted4")
        ->capture_default_str();
    gen->add_option("--frames", gen_frames, "number of rows")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")
        ->envname("EDGESCHED_SEED")
        ->capture_default_str();
    gen->add_option("-o,--out", gen_out, "output path")->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "run one scenario or the paper matrix");
    RunSpec spec;
    run->add_option("--config", spec.config_path, "scenario config JSON");
    auto* opt_trace = run->add_option("--trace", spec.trace_path, "trace CSV path");
    auto* opt_gen = run->add_option("--gen", spec.gen_kind, "generate this trace kind");
    auto* opt_matrix = run->add_option("--matrix", spec.matrix, "matrix name (paper)");
    run->add_option("--trace-dir", spec.trace_dir, "directory of <kind>.csv traces");
    run->add_option("--algo", spec.algo, "scheduler|centralized_ws|decentralized_ws");
    run->add_option("--preemption", spec.preemption, "on|off")
        ->check(CLI::IsMember({"on", "off"}));
    auto* opt_seed = run->add_option("--seed", spec.seed, "master seed")
                         ->envname("EDGESCHED_SEED");
    run->add_option("--reps", spec.reps, "repetitions (vary stagger/noise seeds)")
        ->check(CLI::PositiveNumber);
    run->add_option("-o,--out", spec.out_dir, "output directory")->capture_default_str();
    opt_trace->excludes(opt_gen);
    opt_matrix->excludes(opt_trace);
    opt_matrix->excludes(opt_gen);

    // verify
    auto* verify = app.add_subcommand("verify", "check orderings across matrix reports");
    std::string verify_dir;
    verify->add_option("dir", verify_dir, "matrix output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            TraceKind kind;
            if (!parse_trace_kind(gen_kind, kind))
                throw CLI::ValidationError("--kind", "unknown trace kind " + gen_kind);
            if (gen_frames < 0)
                throw CLI::ValidationError("--frames", "must be non-negative");
            TraceFile t = generate(kind, gen_frames, gen_seed);
            write_file(gen_out, render(t));
            write_file(gen_out + ".stats.json", stats_json(t).dump(2) + "\n");
            std::cout << stats_json(t).dump(2) << "\n";
            return 0;
        }
        if (run->parsed()) {
            spec.seed_set = opt_seed->count() > 0 || std::getenv("EDGESCHED_SEED");
            if (!spec.matrix.empty()) return cmd_run_matrix(spec);
            if (spec.trace_path.empty() == spec.gen_kind.empty())
                throw CLI::ValidationError("--trace",
                                           "exactly one of --trace/--gen is required");
            return cmd_run_single(spec);
        }
        if (verify->parsed()) return cmd_verify(verify_dir);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
