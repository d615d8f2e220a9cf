#include <doctest.h>

#include <algorithm>

#include "edgesched/metrics.hpp"

using namespace edgesched;

namespace {

MetricsEvent ev(std::uint64_t id, MetricsEventType type, std::uint64_t entity = 0,
                std::int64_t a = 0, std::int64_t b = 0, double x = 0.0) {
    return MetricsEvent{id, type, entity, a, b, x};
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("record updates counters once per event id") {
    MetricsCollector c;
    c.record(ev(1, MetricsEventType::hp_completed, 10, 0));
    c.record(ev(1, MetricsEventType::hp_completed, 10, 0));  // replay: no change
    c.record(ev(2, MetricsEventType::preemption, 11, 4));
    MetricsReport r = c.finalize();
    CHECK(r.hp_completed == 1);
    CHECK(r.preempted_four_core == 1);
    CHECK(r.preempted_two_core == 0);
    CHECK(r.preemptions() == 1);
}

TEST_CASE("unknown event type is rejected") {
    MetricsCollector c;
    MetricsEvent bad = ev(1, static_cast<MetricsEventType>(99));
    CHECK_THROWS_AS(c.record(bad), std::invalid_argument);
}

TEST_CASE("finalize computes the published rate arithmetic") {
    MetricsCollector c;
    for (int i = 0; i < 1296; ++i)
        c.record(ev(1000 + static_cast<std::uint64_t>(i), MetricsEventType::frame_generated,
                    static_cast<std::uint64_t>(i), 1, 100));
    for (int i = 0; i < 420; ++i)
        c.record(ev(10000 + static_cast<std::uint64_t>(i),
                    MetricsEventType::frame_completed, static_cast<std::uint64_t>(i)));
    MetricsReport r = c.finalize();
    CHECK(r.frames_total == 1296);
    CHECK(r.frames_completed == 420);
    CHECK(*r.frame_completion_rate == doctest::Approx(0.324).epsilon(0.001));
}

TEST_CASE("division by zero reports null, not zero") {
    MetricsCollector c;
    MetricsReport r = c.finalize();
    CHECK(!r.frame_completion_rate);
    CHECK(!r.hp_completion_rate);
    CHECK(!r.per_request_completion_mean);
    CHECK(!r.realloc_success_rate);
    nlohmann::json j = report_json(r);
    CHECK(j["frames"]["completion_rate"].is_null());
    CHECK(j["lp"]["per_request_completion_mean"].is_null());
}

TEST_CASE("per request completion mean averages fractions over requests") {
    MetricsCollector c;
    std::uint64_t id = 1;
    // Request 1: 4 tasks, 2 complete. Request 2: 1 task, 1 complete.
    for (int i = 0; i < 4; ++i)
        c.record(ev(id++, MetricsEventType::lp_generated, 100 + static_cast<std::uint64_t>(i), 1));
    for (int i = 0; i < 2; ++i)
        c.record(ev(id++, MetricsEventType::lp_completed, 100 + static_cast<std::uint64_t>(i), 1));
    c.record(ev(id++, MetricsEventType::lp_generated, 200, 2));
    c.record(ev(id++, MetricsEventType::lp_completed, 200, 2));
    MetricsReport r = c.finalize();
    CHECK(*r.per_request_completion_mean == doctest::Approx(0.75));
    CHECK(r.lp_generated == 5);
    CHECK(r.lp_completed == 3);
}

TEST_CASE("no preemption means no completion via preemption") {
    MetricsCollector c;
    c.record(ev(1, MetricsEventType::hp_generated, 1));
    c.record(ev(2, MetricsEventType::hp_completed, 1, 0));
    MetricsReport r = c.finalize();
    CHECK(r.hp_completed_via_preemption == 0);
    CHECK(r.preemptions() == 0);
}

TEST_CASE("stage-event reconstruction matches flag-based frame completion") {
    MetricsCollector c;
    std::uint64_t id = 1;
    // Frame 0: value -1, detector done in time.
    c.record(ev(id++, MetricsEventType::frame_generated, 0, -1, 1000000));
    c.record(ev(id++, MetricsEventType::detector_done, 0, 0, 100000));
    c.record(ev(id++, MetricsEventType::frame_completed, 0));
    // Frame 1: value 2, all stages in time.
    c.record(ev(id++, MetricsEventType::frame_generated, 1, 2, 2000000));
    c.record(ev(id++, MetricsEventType::detector_done, 1, 0, 100000));
    c.record(ev(id++, MetricsEventType::stage2_done, 1, 0, 900000));
    c.record(ev(id++, MetricsEventType::stage3_done, 1, 0, 1900000));
    c.record(ev(id++, MetricsEventType::frame_completed, 1));
    // Frame 2: value 0, stage 2 after the deadline.
    c.record(ev(id++, MetricsEventType::frame_generated, 2, 0, 500000));
    c.record(ev(id++, MetricsEventType::detector_done, 2, 0, 100000));
    c.record(ev(id++, MetricsEventType::stage2_done, 2, 0, 600000));
    // Frame 3: value 3, stage 3 never finishes.
    c.record(ev(id++, MetricsEventType::frame_generated, 3, 3, 9000000));
    c.record(ev(id++, MetricsEventType::detector_done, 3, 0, 100000));
    c.record(ev(id++, MetricsEventType::stage2_done, 3, 0, 900000));
    MetricsReport r = c.finalize();
    CHECK(r.frames_completed == 2);
    CHECK(r.frames_completed_reconstructed == 2);
}

TEST_CASE("json render sorts keys and is stable") {
    MetricsCollector c;
    c.record(ev(1, MetricsEventType::frame_generated, 0, 1, 100));
    MetricsReport r = c.finalize();
    r.scenario = "uniform";
    r.algorithm = "scheduler";
    std::string a = render(r, RenderFormat::json);
    std::string b = render(r, RenderFormat::json);
    CHECK(a == b);
    // nlohmann objects iterate lexicographically.
    std::size_t pos_alg = a.find("\"algorithm\"");
    std::size_t pos_cnt = a.find("\"counters\"");
    std::size_t pos_vio = a.find("\"violations\"");
    REQUIRE(pos_alg != std::string::npos);
    CHECK(pos_alg < pos_cnt);
    CHECK(pos_cnt < pos_vio);
}

TEST_CASE("csv header matches the documented schema") {
    std::string header = csv_header();
    CHECK(header.substr(0, 9) == "scenario,");
    CHECK(header.find("per_request_completion_mean") != std::string::npos);
    CHECK(header.find("windows_probed") != std::string::npos);
    // Column count equals row field count.
    MetricsReport r;
    auto count_commas = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    CHECK(count_commas(header) == count_commas(csv_row(r)));
    std::string rendered = render(r, RenderFormat::csv);
    CHECK(rendered.find(header) == 0);
}

TEST_CASE("table render carries the headline counters") {
    MetricsReport r;
    r.scenario = "weighted4";
    r.algorithm = "scheduler";
    r.preemption = true;
    r.frames_total = 10;
    r.frames_completed = 3;
    r.frame_completion_rate = 0.3;
    std::string t = render(r, RenderFormat::table);
    CHECK(t.find("weighted4") != std::string::npos);
    CHECK(t.find("3/10") != std::string::npos);
    CHECK(t.find("30.0%") != std::string::npos);
}

TEST_CASE("latency json is separate from the deterministic report") {
    MetricsCollector c;
    c.record(ev(1, MetricsEventType::latency_hp_initial, 0, 0, 0, 0.008));
    c.record(ev(2, MetricsEventType::latency_hp_initial, 0, 0, 0, 0.012));
    MetricsReport r = c.finalize();
    CHECK(r.latency_hp_initial.count == 2);
    CHECK(r.latency_hp_initial.mean_ms == doctest::Approx(10.0));
    nlohmann::json lat = latency_json(r);
    CHECK(lat["hp_initial"]["count"] == 2);
    CHECK(report_json(r).dump().find("latency") == std::string::npos);
}

}  // TEST_SUITE
