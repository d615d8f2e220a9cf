// metrics.hpp: run measurement suite. The engine emits typed events with
// unique ids; the collector counts them idempotently and finalizes into an
// immutable report. Host-measured latencies live in a separate section so the
// deterministic renders stay byte-stable across runs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "edgesched/time.hpp"

namespace edgesched {

enum class MetricsEventType : int {
    frame_generated = 0,   // entity=frame, a=trace value, b=deadline us
    detector_done,         // entity=frame, b=time us
    stage2_done,           // entity=frame, b=time us
    stage3_done,           // entity=frame, b=time us
    frame_completed,       // entity=frame (engine stage-flag view)
    hp_generated,          // entity=task
    hp_completed,          // entity=task, a=1 if via preemption
    lp_generated,          // entity=task, a=request id
    lp_completed,          // entity=task, a=request id
    lp_allocated,          // entity=task, a=cores, b=1 if offloaded
    lp_resolved,           // entity=task, a=1 if ever offloaded, b=1 if completed offloaded
    preemption,            // entity=victim task, a=victim core config
    realloc_decided,       // entity=victim task, a=1 on success, x=interval sec
    violation,             // entity=task
    latency_hp_initial,    // x=sec
    latency_hp_preempt,    // x=sec
    latency_lp_set,        // x=sec
    counters_sample,       // a=tasks scanned, b=windows probed
};

struct MetricsEvent {
    std::uint64_t id{0};
    MetricsEventType type{MetricsEventType::frame_generated};
    std::uint64_t entity{0};
    std::int64_t a{0};
    std::int64_t b{0};
    double x{0.0};
};

struct LatencySummary {
    std::int64_t count{0};
    double mean_ms{0.0};
    double p50_ms{0.0};
    double p95_ms{0.0};
};

struct MetricsReport {
    std::string scenario;
    std::string algorithm;
    bool preemption{false};
    std::uint64_t seed{0};
    std::string realloc_semantics;  // "decision" (scheduler) or "requeue" (workstealer)

    std::int64_t frames_total{0};
    std::int64_t frames_completed{0};
    std::int64_t frames_completed_reconstructed{0};
    std::int64_t hp_generated{0};
    std::int64_t hp_completed{0};
    std::int64_t hp_completed_via_preemption{0};
    std::int64_t lp_generated{0};
    std::int64_t lp_completed{0};
    std::int64_t lp_offloaded_generated{0};
    std::int64_t lp_offloaded_completed{0};
    std::int64_t preempted_two_core{0};
    std::int64_t preempted_four_core{0};
    std::int64_t realloc_success{0};
    std::int64_t realloc_failure{0};
    std::int64_t core_local_two{0};
    std::int64_t core_local_four{0};
    std::int64_t core_offloaded_two{0};
    std::int64_t core_offloaded_four{0};
    std::int64_t violations{0};
    std::int64_t tasks_scanned_total{0};
    std::int64_t windows_probed_total{0};

    std::optional<double> frame_completion_rate;
    std::optional<double> hp_completion_rate;
    std::optional<double> lp_completion_rate;
    std::optional<double> lp_offloaded_completion_rate;
    std::optional<double> per_request_completion_mean;
    std::optional<double> realloc_success_rate;

    LatencySummary latency_hp_initial;
    LatencySummary latency_hp_preempt;
    LatencySummary latency_lp_set;
    LatencySummary latency_realloc;

    std::int64_t preemptions() const { return preempted_two_core + preempted_four_core; }
};

class MetricsCollector {
  public:
    // Counters update exactly once per event id; replays are no-ops.
    void record(const MetricsEvent& ev) {
        const int t = static_cast<int>(ev.type);
        if (t < 0 || t > static_cast<int>(MetricsEventType::counters_sample))
            throw std::invalid_argument("metrics: unknown event type " + std::to_string(t));
        if (!seen_.insert(ev.id).second) return;
        switch (ev.type) {
            case MetricsEventType::frame_generated: {
                FrameTrack& f = frames_[ev.entity];
                f.value = static_cast<int>(ev.a);
                f.deadline = SimTime{ev.b};
                ++frames_total_;
                break;
            }
            case MetricsEventType::detector_done:
                frames_[ev.entity].detector_done = SimTime{ev.b};
                break;
            case MetricsEventType::stage2_done:
                frames_[ev.entity].stage2_done = SimTime{ev.b};
                break;
            case MetricsEventType::stage3_done:
                frames_[ev.entity].stage3_done = SimTime{ev.b};
                break;
            case MetricsEventType::frame_completed: ++frames_completed_; break;
            case MetricsEventType::hp_generated: ++hp_generated_; break;
            case MetricsEventType::hp_completed:
                ++hp_completed_;
                if (ev.a) ++hp_via_preemption_;
                break;
            case MetricsEventType::lp_generated:
                ++lp_generated_;
                ++requests_[static_cast<std::uint64_t>(ev.a)].size;
                break;
            case MetricsEventType::lp_completed:
                ++lp_completed_;
                ++requests_[static_cast<std::uint64_t>(ev.a)].completed;
                break;
            case MetricsEventType::lp_allocated:
                if (ev.b)
                    ++(ev.a == 4 ? core_offloaded_four_ : core_offloaded_two_);
                else
                    ++(ev.a == 4 ? core_local_four_ : core_local_two_);
                break;
            case MetricsEventType::lp_resolved:
                if (ev.a) ++lp_offloaded_generated_;
                if (ev.b) ++lp_offloaded_completed_;
                break;
            case MetricsEventType::preemption:
                ++(ev.a == 4 ? preempted_four_ : preempted_two_);
                break;
            case MetricsEventType::realloc_decided:
                ++(ev.a ? realloc_success_ : realloc_failure_);
                latency_realloc_.push_back(ev.x);
                break;
            case MetricsEventType::violation: ++violations_; break;
            case MetricsEventType::latency_hp_initial: lat_hp_init_.push_back(ev.x); break;
            case MetricsEventType::latency_hp_preempt: lat_hp_pre_.push_back(ev.x); break;
            case MetricsEventType::latency_lp_set: lat_lp_set_.push_back(ev.x); break;
            case MetricsEventType::counters_sample:
                tasks_scanned_ += ev.a;
                windows_probed_ += ev.b;
                break;
        }
    }

    MetricsReport finalize() const {
        MetricsReport r;
        r.frames_total = frames_total_;
        r.frames_completed = frames_completed_;
        r.hp_generated = hp_generated_;
        r.hp_completed = hp_completed_;
        r.hp_completed_via_preemption = hp_via_preemption_;
        r.lp_generated = lp_generated_;
        r.lp_completed = lp_completed_;
        r.lp_offloaded_generated = lp_offloaded_generated_;
        r.lp_offloaded_completed = lp_offloaded_completed_;
        r.preempted_two_core = preempted_two_;
        r.preempted_four_core = preempted_four_;
        r.realloc_success = realloc_success_;
        r.realloc_failure = realloc_failure_;
        r.core_local_two = core_local_two_;
        r.core_local_four = core_local_four_;
        r.core_offloaded_two = core_offloaded_two_;
        r.core_offloaded_four = core_offloaded_four_;
        r.violations = violations_;
        r.tasks_scanned_total = tasks_scanned_;
        r.windows_probed_total = windows_probed_;

        // Independent frame-completion reconstruction from stage events.
        for (const auto& [id, f] : frames_) {
            if (!f.detector_done || *f.detector_done > f.deadline) continue;
            if (f.value == -1) {
                ++r.frames_completed_reconstructed;
                continue;
            }
            if (!f.stage2_done || *f.stage2_done > f.deadline) continue;
            if (f.value == 0) {
                ++r.frames_completed_reconstructed;
                continue;
            }
            if (f.stage3_done && *f.stage3_done <= f.deadline)
                ++r.frames_completed_reconstructed;
        }

        auto rate = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
            if (den == 0) return std::nullopt;  // reported as null, never zero
            return static_cast<double>(num) / static_cast<double>(den);
        };
        r.frame_completion_rate = rate(r.frames_completed, r.frames_total);
        r.hp_completion_rate = rate(r.hp_completed, r.hp_generated);
        r.lp_completion_rate = rate(r.lp_completed, r.lp_generated);
        r.lp_offloaded_completion_rate =
            rate(r.lp_offloaded_completed, r.lp_offloaded_generated);
        r.realloc_success_rate =
            rate(r.realloc_success, r.realloc_success + r.realloc_failure);
        if (!requests_.empty()) {
            double acc = 0.0;
            for (const auto& [id, req] : requests_)
                acc += req.size ? static_cast<double>(req.completed) /
                                      static_cast<double>(req.size)
                                : 0.0;
            r.per_request_completion_mean = acc / static_cast<double>(requests_.size());
        }

        r.latency_hp_initial = summarize(lat_hp_init_);
        r.latency_hp_preempt = summarize(lat_hp_pre_);
        r.latency_lp_set = summarize(lat_lp_set_);
        r.latency_realloc = summarize(latency_realloc_);
        return r;
    }

  private:
    struct FrameTrack {
        int value{-1};
        SimTime deadline;
        std::optional<SimTime> detector_done;
        std::optional<SimTime> stage2_done;
        std::optional<SimTime> stage3_done;
    };
    struct RequestTrack {
        int size{0};
        int completed{0};
    };

    static LatencySummary summarize(std::vector<double> v) {
        LatencySummary s;
        s.count = static_cast<std::int64_t>(v.size());
        if (v.empty()) return s;
        std::sort(v.begin(), v.end());
        double sum = 0.0;
        for (double d : v) sum += d;
        s.mean_ms = sum / static_cast<double>(v.size()) * 1e3;
        auto pct = [&](double p) {
            std::size_t i = static_cast<std::size_t>(
                p * static_cast<double>(v.size() - 1) + 0.5);
            return v[i] * 1e3;
        };
        s.p50_ms = pct(0.50);
        s.p95_ms = pct(0.95);
        return s;
    }

    std::unordered_set<std::uint64_t> seen_;
    std::map<std::uint64_t, FrameTrack> frames_;
    std::map<std::uint64_t, RequestTrack> requests_;
    std::int64_t frames_total_{0}, frames_completed_{0};
    std::int64_t hp_generated_{0}, hp_completed_{0}, hp_via_preemption_{0};
    std::int64_t lp_generated_{0}, lp_completed_{0};
    std::int64_t lp_offloaded_generated_{0}, lp_offloaded_completed_{0};
    std::int64_t preempted_two_{0}, preempted_four_{0};
    std::int64_t realloc_success_{0}, realloc_failure_{0};
    std::int64_t core_local_two_{0}, core_local_four_{0};
    std::int64_t core_offloaded_two_{0}, core_offloaded_four_{0};
    std::int64_t violations_{0};
    std::int64_t tasks_scanned_{0}, windows_probed_{0};
    std::vector<double> lat_hp_init_, lat_hp_pre_, lat_lp_set_, latency_realloc_;
};

// Deterministic report body: everything except host-measured latency.
inline nlohmann::json report_json(const MetricsReport& r) {
    nlohmann::json j;
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    j["scenario"] = r.scenario;
    j["algorithm"] = r.algorithm;
    j["preemption"] = r.preemption;
    j["seed"] = r.seed;
    j["realloc_semantics"] = r.realloc_semantics;
    j["frames"] = {{"total", r.frames_total},
                   {"completed", r.frames_completed},
                   {"completion_rate", opt(r.frame_completion_rate)}};
    j["hp"] = {{"generated", r.hp_generated},
               {"completed", r.hp_completed},
               {"completed_via_preemption", r.hp_completed_via_preemption},
               {"completion_rate", opt(r.hp_completion_rate)}};
    j["lp"] = {{"generated", r.lp_generated},
               {"completed", r.lp_completed},
               {"completion_rate", opt(r.lp_completion_rate)},
               {"offloaded_generated", r.lp_offloaded_generated},
               {"offloaded_completed", r.lp_offloaded_completed},
               {"offloaded_completion_rate", opt(r.lp_offloaded_completion_rate)},
               {"per_request_completion_mean", opt(r.per_request_completion_mean)}};
    j["preempted_by_config"] = {{"two_core", r.preempted_two_core},
                                {"four_core", r.preempted_four_core}};
    j["realloc"] = {{"success", r.realloc_success},
                    {"failure", r.realloc_failure},
                    {"success_rate", opt(r.realloc_success_rate)}};
    j["core_allocation"] = {{"local_two_core", r.core_local_two},
                            {"local_four_core", r.core_local_four},
                            {"offloaded_two_core", r.core_offloaded_two},
                            {"offloaded_four_core", r.core_offloaded_four}};
    j["violations"] = r.violations;
    j["counters"] = {{"tasks_scanned", r.tasks_scanned_total},
                     {"windows_probed", r.windows_probed_total}};
    return j;
}

// Host wall-clock latencies, rendered separately (not byte-stable).
inline nlohmann::json latency_json(const MetricsReport& r) {
    auto block = [](const LatencySummary& s) {
        return nlohmann::json{{"count", s.count},
                              {"mean_ms", s.mean_ms},
                              {"p50_ms", s.p50_ms},
                              {"p95_ms", s.p95_ms}};
    };
    return nlohmann::json{{"hp_initial", block(r.latency_hp_initial)},
                          {"hp_preemption_path", block(r.latency_hp_preempt)},
                          {"lp_set", block(r.latency_lp_set)},
                          {"realloc_interval", block(r.latency_realloc)}};
}

inline std::string csv_header() {
    return "scenario,algorithm,preemption,seed,frames_total,frames_completed,"
           "frame_completion_rate,hp_generated,hp_completed,hp_completion_rate,"
           "hp_completed_via_preemption,lp_generated,lp_completed,lp_completion_rate,"
           "lp_offloaded_generated,lp_offloaded_completed,per_request_completion_mean,"
           "preempted_two_core,preempted_four_core,realloc_success,realloc_failure,"
           "core_local_two,core_local_four,core_offloaded_two,core_offloaded_four,"
           "violations,tasks_scanned,windows_probed";
}

inline std::string csv_row(const MetricsReport& r) {
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) {
        if (!v) return std::string();
        std::ostringstream o;
        o.precision(6);
        o << std::fixed << *v;
        return o.str();
    };
    out << r.scenario << ',' << r.algorithm << ',' << (r.preemption ? "on" : "off") << ','
        << r.seed << ',' << r.frames_total << ',' << r.frames_completed << ','
        << opt(r.frame_completion_rate) << ',' << r.hp_generated << ',' << r.hp_completed
        << ',' << opt(r.hp_completion_rate) << ',' << r.hp_completed_via_preemption << ','
        << r.lp_generated << ',' << r.lp_completed << ',' << opt(r.lp_completion_rate)
        << ',' << r.lp_offloaded_generated << ',' << r.lp_offloaded_completed << ','
        << opt(r.per_request_completion_mean) << ',' << r.preempted_two_core << ','
        << r.preempted_four_core << ',' << r.realloc_success << ',' << r.realloc_failure
        << ',' << r.core_local_two << ',' << r.core_local_four << ','
        << r.core_offloaded_two << ',' << r.core_offloaded_four << ',' << r.violations
        << ',' << r.tasks_scanned_total << ',' << r.windows_probed_total;
    return out.str();
}

enum class RenderFormat { json, csv, table };

inline std::string render(const MetricsReport& r, RenderFormat format) {
    switch (format) {
        case RenderFormat::json: return report_json(r).dump(2) + "\n";
        case RenderFormat::csv: return csv_header() + "\n" + csv_row(r) + "\n";
        case RenderFormat::table: {
            std::ostringstream out;
            auto pct = [](const std::optional<double>& v) {
                if (!v) return std::string("   n/a");
                char buf[16];
                std::snprintf(buf, sizeof buf, "%5.1f%%", *v * 100.0);
                return std::string(buf);
            };
            out << "scenario " << r.scenario << " | " << r.algorithm << " | preemption "
                << (r.preemption ? "on" : "off") << "\n";
            out << "  frames    " << r.frames_completed << "/" << r.frames_total << "  "
                << pct(r.frame_completion_rate) << "\n";
            out << "  hp        " << r.hp_completed << "/" << r.hp_generated << "  "
                << pct(r.hp_completion_rate) << "  via preemption "
                << r.hp_completed_via_preemption << "\n";
            out << "  lp        " << r.lp_completed << "/" << r.lp_generated << "  "
                << pct(r.lp_completion_rate) << "  per-request "
                << pct(r.per_request_completion_mean) << "\n";
            out << "  offloaded " << r.lp_offloaded_completed << "/"
                << r.lp_offloaded_generated << "  "
                << pct(r.lp_offloaded_completion_rate) << "\n";
            out << "  preempted 2c " << r.preempted_two_core << ", 4c "
                << r.preempted_four_core << " | realloc " << r.realloc_success << "+/"
                << r.realloc_failure << "- | violations " << r.violations << "\n";
            out << "  latency ms (mean/p50/p95): hp "
                << r.latency_hp_initial.mean_ms << "/" << r.latency_hp_initial.p50_ms
                << "/" << r.latency_hp_initial.p95_ms << ", preempt "
                << r.latency_hp_preempt.mean_ms << "/" << r.latency_hp_preempt.p50_ms
                << "/" << r.latency_hp_preempt.p95_ms << ", lp "
                << r.latency_lp_set.mean_ms << "/" << r.latency_lp_set.p50_ms << "/"
                << r.latency_lp_set.p95_ms << ", realloc "
                << r.latency_realloc.mean_ms << "/" << r.latency_realloc.p50_ms << "/"
                << r.latency_realloc.p95_ms << "\n";
            return out.str();
        }
    }
    return "";
}

}  // namespace edgesched
