// matrix.hpp: the eight-cell comparison matrix (two scheduler arms on the
// uniform trace, both schedulers and both workstealers on weighted-4) and the
// ordering checks the reports are expected to satisfy.
#pragma once

#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgesched/engine.hpp"

namespace edgesched {

struct MatrixCell {
    std::string label;
    TraceKind kind;
    Algorithm algo;
    bool preemption;
};

// Legend order: UPS, UNPS, WPS_4, WNPS_4, DPW, DNPW, CPW, CNPW.
inline std::vector<MatrixCell> paper_matrix() {
    return {
        {"UPS", TraceKind::uniform, Algorithm::scheduler, true},
        {"UNPS", TraceKind::uniform, Algorithm::scheduler, false},
        {"WPS_4", TraceKind::weighted4, Algorithm::scheduler, true},
        {"WNPS_4", TraceKind::weighted4, Algorithm::scheduler, false},
        {"DPW", TraceKind::weighted4, Algorithm::decentralized_ws, true},
        {"DNPW", TraceKind::weighted4, Algorithm::decentralized_ws, false},
        {"CPW", TraceKind::weighted4, Algorithm::centralized_ws, true},
        {"CNPW", TraceKind::weighted4, Algorithm::centralized_ws, false},
    };
}

struct MatrixResult {
    MatrixCell cell;
    MetricsReport report;
};

// Runs every cell against the supplied traces. Cells share nothing mutable,
// so they may run on worker threads; results keep legend order either way.
inline std::vector<MatrixResult> run_matrix(const ScenarioConfig& base,
                                            const std::map<TraceKind, TraceFile>& traces,
                                            bool parallel = true) {
    std::vector<MatrixCell> cells = paper_matrix();
    std::vector<MatrixResult> results(cells.size());
    auto run_cell = [&](std::size_t i) {
        const MatrixCell& cell = cells[i];
        ScenarioConfig cfg = base;
        cfg.algorithm = cell.algo;
        cfg.preemption = cell.preemption;
        MetricsReport report = run_scenario(cfg, traces.at(cell.kind));
        results[i] = MatrixResult{cell, std::move(report)};
    };
    if (parallel) {
        std::vector<std::future<void>> jobs;
        for (std::size_t i = 0; i < cells.size(); ++i)
            jobs.push_back(std::async(std::launch::async, run_cell, i));
        for (auto& j : jobs) j.get();
    } else {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    }
    return results;
}

inline std::string matrix_csv(const std::vector<MatrixResult>& results) {
    std::string out = "label," + csv_header() + "\n";
    for (const MatrixResult& r : results) out += r.cell.label + "," + csv_row(r.report) + "\n";
    return out;
}

inline std::string matrix_table(const std::vector<MatrixResult>& results) {
    std::string out;
    for (const MatrixResult& r : results)
        out += "[" + r.cell.label + "] " + render(r.report, RenderFormat::table);
    return out;
}

// ---- verification of the expected orderings over a report set -------------

struct VerifyRow {
    std::string check;
    std::string status;  // "pass", "fail" or "insufficient data"
    std::string detail;
};

// The subset of the report that verification needs, loadable from report.json.
struct VerifyInput {
    std::optional<double> frame_rate;
    std::optional<double> hp_rate;
    std::optional<double> per_request;
    std::optional<double> realloc_rate;
    std::int64_t realloc_total{0};
    std::int64_t preempted_two{0};
    std::int64_t preempted_four{0};
    std::int64_t core_two{0};
    std::int64_t core_four{0};
};

inline VerifyInput verify_input(const MetricsReport& r) {
    VerifyInput v;
    v.frame_rate = r.frame_completion_rate;
    v.hp_rate = r.hp_completion_rate;
    v.per_request = r.per_request_completion_mean;
    v.realloc_rate = r.realloc_success_rate;
    v.realloc_total = r.realloc_success + r.realloc_failure;
    v.preempted_two = r.preempted_two_core;
    v.preempted_four = r.preempted_four_core;
    v.core_two = r.core_local_two + r.core_offloaded_two;
    v.core_four = r.core_local_four + r.core_offloaded_four;
    return v;
}

inline VerifyInput verify_input(const nlohmann::json& j) {
    VerifyInput v;
    auto opt = [](const nlohmann::json& x) -> std::optional<double> {
        if (x.is_null()) return std::nullopt;
        return x.get<double>();
    };
    v.frame_rate = opt(j.at("frames").at("completion_rate"));
    v.hp_rate = opt(j.at("hp").at("completion_rate"));
    v.per_request = opt(j.at("lp").at("per_request_completion_mean"));
    v.realloc_rate = opt(j.at("realloc").at("success_rate"));
    v.realloc_total = j.at("realloc").at("success").get<std::int64_t>() +
                      j.at("realloc").at("failure").get<std::int64_t>();
    v.preempted_two = j.at("preempted_by_config").at("two_core").get<std::int64_t>();
    v.preempted_four = j.at("preempted_by_config").at("four_core").get<std::int64_t>();
    v.core_two = j.at("core_allocation").at("local_two_core").get<std::int64_t>() +
                 j.at("core_allocation").at("offloaded_two_core").get<std::int64_t>();
    v.core_four = j.at("core_allocation").at("local_four_core").get<std::int64_t>() +
                  j.at("core_allocation").at("offloaded_four_core").get<std::int64_t>();
    return v;
}

// Checks the cross-report orderings on whatever labels are present. Missing
// labels mark their rows "insufficient data" rather than failing.
inline std::vector<VerifyRow> verify_reports(const std::map<std::string, VerifyInput>& in) {
    std::vector<VerifyRow> rows;
    auto get = [&](const std::string& label) -> const VerifyInput* {
        auto it = in.find(label);
        return it == in.end() ? nullptr : &it->second;
    };
    auto fmt = [](std::optional<double> v) {
        if (!v) return std::string("null");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return std::string(buf);
    };
    auto ordering = [&](const std::string& name, const std::string& a_label,
                        const std::string& b_label, auto field, bool strict) {
        const VerifyInput* a = get(a_label);
        const VerifyInput* b = get(b_label);
        VerifyRow row{name, "insufficient data", ""};
        if (a && b) {
            auto va = field(*a);
            auto vb = field(*b);
            if (!va || !vb) {
                row.detail = "rate undefined";
            } else {
                bool ok = strict ? *va > *vb : *va >= *vb;
                row.status = ok ? "pass" : "fail";
                row.detail = a_label + "=" + fmt(va) + (strict ? " > " : " >= ") + b_label +
                             "=" + fmt(vb);
            }
        } else {
            row.detail = std::string("missing report: ") + (a ? b_label : a_label);
        }
        rows.push_back(row);
    };
    auto frame = [](const VerifyInput& v) { return v.frame_rate; };
    auto hp = [](const VerifyInput& v) { return v.hp_rate; };
    auto preq = [](const VerifyInput& v) { return v.per_request; };

    // High-priority completion endpoints.
    if (const VerifyInput* w = get("WPS_4")) {
        bool ok = w->hp_rate && *w->hp_rate >= 0.97;
        rows.push_back({"hp completion WPS_4 >= 97%", ok ? "pass" : "fail",
                        "hp=" + fmt(w->hp_rate)});
    } else {
        rows.push_back({"hp completion WPS_4 >= 97%", "insufficient data",
                        "missing report: WPS_4"});
    }
    if (const VerifyInput* w = get("WNPS_4")) {
        bool ok = w->hp_rate && *w->hp_rate <= 0.85;
        rows.push_back({"hp completion WNPS_4 <= 85%", ok ? "pass" : "fail",
                        "hp=" + fmt(w->hp_rate)});
    } else {
        rows.push_back({"hp completion WNPS_4 <= 85%", "insufficient data",
                        "missing report: WNPS_4"});
    }
    ordering("hp completion WPS_4 > WNPS_4", "WPS_4", "WNPS_4", hp, true);

    // Preemption frame ordering.
    ordering("frame completion UPS >= UNPS", "UPS", "UNPS", frame, false);
    ordering("frame completion WPS_4 > WNPS_4", "WPS_4", "WNPS_4", frame, true);

    // Algorithm ordering under weighted-4, both preemption settings.
    ordering("frame completion WPS_4 > CPW", "WPS_4", "CPW", frame, true);
    ordering("frame completion CPW > DPW", "CPW", "DPW", frame, true);
    ordering("frame completion WNPS_4 > CNPW", "WNPS_4", "CNPW", frame, true);
    ordering("frame completion CNPW > DNPW", "CNPW", "DNPW", frame, true);

    // Per-request completion penalty of preemption.
    ordering("per-request completion UNPS > UPS", "UNPS", "UPS", preq, true);

    // Reallocation scarcity on the weighted preemption scheduler.
    if (const VerifyInput* w = get("WPS_4")) {
        VerifyRow row{"realloc success rate WPS_4 < 2%", "insufficient data", ""};
        if (w->realloc_total == 0) {
            row.detail = "no preemptions recorded";
        } else {
            double rate = w->realloc_rate.value_or(0.0);
            row.status = rate < 0.02 ? "pass" : "fail";
            row.detail = "rate=" + fmt(rate);
        }
        rows.push_back(row);
    } else {
        rows.push_back({"realloc success rate WPS_4 < 2%", "insufficient data",
                        "missing report: WPS_4"});
    }

    // Preempted-configuration skew on weighted-4.
    if (const VerifyInput* w = get("WPS_4")) {
        VerifyRow row{"preempted 4-core share exceeds 4-core allocation share", "insufficient data",
                      ""};
        std::int64_t pre = w->preempted_two + w->preempted_four;
        std::int64_t alloc = w->core_two + w->core_four;
        if (pre > 0 && alloc > 0) {
            double pre4 = static_cast<double>(w->preempted_four) / static_cast<double>(pre);
            double alloc4 = static_cast<double>(w->core_four) / static_cast<double>(alloc);
            row.status = pre4 > alloc4 ? "pass" : "fail";
            row.detail = "preempted=" + fmt(pre4) + " allocated=" + fmt(alloc4);
        } else {
            row.detail = "no preemptions recorded";
        }
        rows.push_back(row);
    } else {
        rows.push_back({"preempted 4-core share exceeds 4-core allocation share",
                        "insufficient data", "missing report: WPS_4"});
    }
    return rows;
}

inline bool verify_passed(const std::vector<VerifyRow>& rows) {
    bool any_ran = false;
    for (const VerifyRow& r : rows) {
        if (r.status == "fail") return false;
        if (r.status == "pass") any_ran = true;
    }
    return any_ran;
}

inline std::string verify_table(const std::vector<VerifyRow>& rows) {
    std::string out;
    for (const VerifyRow& r : rows) {
        std::string status = r.status == "pass" ? "PASS" :
                             r.status == "fail" ? "FAIL" : "SKIP";
        out += status + "  " + r.check;
        if (!r.detail.empty()) out += "  (" + r.detail + ")";
        out += "\n";
    }
    return out;
}

}  // namespace edgesched
