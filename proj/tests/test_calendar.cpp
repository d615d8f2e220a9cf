#include <doctest.h>

#include <random>

#include "edgesched/calendar.hpp"
#include "edgesched/comm.hpp"

using namespace edgesched;

namespace {

Reservation proc_slot(DeviceId dev, SimTime start, Duration len, int cores, TaskId owner) {
    return Reservation{0, Resource::on_device(dev), ReservationKind::processing,
                       {start, start + len}, cores, owner};
}

Reservation link_slot(SimTime start, Duration len, TaskId owner,
                      ReservationKind kind = ReservationKind::state_update) {
    return Reservation{0, Resource::link(), kind, {start, start + len}, 0, owner};
}

// Brute-force reference for earliest_link_window: scan every microsecond.
std::optional<Interval> link_window_oracle(const NetworkCalendar& cal, Duration d,
                                           SimTime not_before, SimTime deadline) {
    for (std::int64_t s = not_before.us; s + d.us <= deadline.us; ++s) {
        Interval w{{s}, {s + d.us}};
        bool free = true;
        for (const Reservation& r : cal.link())
            if (r.interval.overlaps(w)) free = false;
        if (free) return w;
    }
    return std::nullopt;
}

// Brute-force reference for find_processing_window: try earliest_start and
// every reservation end as a candidate start, checking capacity by usage scan.
std::optional<Interval> proc_window_oracle(const NetworkCalendar& cal, DeviceId dev,
                                           int cores, Duration d, SimTime earliest,
                                           SimTime deadline) {
    std::vector<SimTime> starts{earliest};
    for (const Reservation& r : cal.device(dev))
        if (r.interval.end > earliest) starts.push_back(r.interval.end);
    std::sort(starts.begin(), starts.end());
    for (SimTime s : starts) {
        Interval w{s, s + d};
        if (w.end > deadline) continue;
        bool ok = true;
        // Usage is piecewise constant; probing every boundary instant inside
        // the window is exact.
        std::vector<SimTime> instants{w.start};
        for (const Reservation& r : cal.device(dev)) {
            if (r.interval.start > w.start && r.interval.start < w.end)
                instants.push_back(r.interval.start);
            if (r.interval.end > w.start && r.interval.end < w.end)
                instants.push_back(r.interval.end);
        }
        for (SimTime t : instants) {
            int usage = 0;
            for (const Reservation& r : cal.device(dev))
                if (r.interval.contains(t)) usage += r.cores;
            if (usage + cores > cal.device_capacity()) ok = false;
        }
        if (ok) return w;
    }
    return std::nullopt;
}

}  // namespace

TEST_SUITE("calendar") {

TEST_CASE("link slot duration from message size, throughput and jitter") {
    CommTiming t;
    t.throughput_Bps = 16.3e6;
    t.jitter_padding = msec(5);
    // 700 B at 16.3 MB/s is 42.94us, rounded up to 43us, plus 5ms jitter.
    CHECK(link_slot_duration(ReservationKind::alloc_msg_hp, t).us == 5043);

    t.jitter_padding = usec(0);
    CHECK(link_slot_duration(ReservationKind::image_transfer, t).us == 1320);

    CommTiming slow;
    slow.throughput_Bps = 1.0;
    slow.jitter_padding = usec(0);
    slow.message_sizes[ReservationKind::state_update] = 1;
    CHECK(link_slot_duration(ReservationKind::state_update, slow).us == 1000000);

    CommTiming missing;
    missing.message_sizes.erase(ReservationKind::poll_msg);
    CHECK_THROWS_AS(link_slot_duration(ReservationKind::poll_msg, missing), ConfigError);
}

TEST_CASE("comm timing validation") {
    CommTiming t;
    t.throughput_Bps = 0.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = CommTiming{};
    t.message_sizes[ReservationKind::alloc_msg_lp] = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("earliest link window") {
    NetworkCalendar cal(4);

    SUBCASE("empty calendar starts at not_before") {
        auto w = cal.earliest_link_window(msec(2), at_usec(700), SimTime::horizon());
        REQUIRE(w);
        CHECK(w->start.us == 700);
        CHECK(w->end.us == 2700);
    }
    SUBCASE("skips a busy prefix") {
        REQUIRE(cal.reserve({link_slot(at_usec(0), msec(10), 1)}).ok);
        auto w = cal.earliest_link_window(msec(2), at_usec(0), SimTime::horizon());
        REQUIRE(w);
        CHECK(w->start.us == 10000);
        CHECK(w->end.us == 12000);
    }
    SUBCASE("short gap and deadline cut") {
        REQUIRE(cal.reserve({link_slot(at_usec(0), msec(10), 1)}).ok);
        REQUIRE(cal.reserve({link_slot(at_usec(11000), msec(9), 2)}).ok);
        // Gap [10,11)ms is too short for 2ms; the next fit would end at 22ms.
        CHECK(!cal.earliest_link_window(msec(2), at_usec(0), at_usec(13000)));
    }
}

TEST_CASE("earliest link window matches the microsecond-scan oracle") {
    std::mt19937_64 rng(42);
    for (int iter = 0; iter < 200; ++iter) {
        NetworkCalendar cal(1);
        TaskId owner = 1;
        int slots = static_cast<int>(rng() % 6);
        SimTime cursor{static_cast<std::int64_t>(rng() % 20)};
        for (int i = 0; i < slots; ++i) {
            Duration len{static_cast<std::int64_t>(1 + rng() % 40)};
            cursor = cursor + Duration{static_cast<std::int64_t>(rng() % 30)};
            if (cal.reserve({link_slot(cursor, len, owner++)}).ok) cursor = cursor + len;
        }
        Duration want{static_cast<std::int64_t>(1 + rng() % 25)};
        SimTime nb{static_cast<std::int64_t>(rng() % 60)};
        SimTime deadline{nb.us + static_cast<std::int64_t>(rng() % 150)};
        auto got = cal.earliest_link_window(want, nb, deadline);
        auto expect = link_window_oracle(cal, want, nb, deadline);
        REQUIRE(got.has_value() == expect.has_value());
        if (got) CHECK(*got == *expect);
    }
}

TEST_CASE("find processing window") {
    NetworkCalendar cal(4);
    const SimTime t = at_usec(1000);

    SUBCASE("idle device starts immediately") {
        auto w = cal.find_processing_window(0, 2, sec(1), t, SimTime::horizon());
        REQUIRE(w);
        CHECK(w->start == t);
    }
    SUBCASE("saturated device yields nothing before the deadline") {
        REQUIRE(cal.reserve({proc_slot(0, t, usec(16862000), 4, 1)}).ok);
        CHECK(!cal.find_processing_window(0, 1, usec(980000), t, t + sec(1)));
    }
    SUBCASE("two two-core tasks share the device") {
        REQUIRE(cal.reserve({proc_slot(0, t, usec(16862000), 2, 1)}).ok);
        auto w = cal.find_processing_window(0, 2, usec(16862000), t, SimTime::horizon());
        REQUIRE(w);
        CHECK(w->start == t);
        CHECK(w->end == t + usec(16862000));
    }
}

TEST_CASE("find processing window matches the candidate-start oracle") {
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 300; ++iter) {
        NetworkCalendar cal(1);
        int n = static_cast<int>(rng() % 9);  // up to 8 reservations
        TaskId owner = 1;
        for (int i = 0; i < n; ++i) {
            SimTime start{static_cast<std::int64_t>(rng() % 200)};
            Duration len{static_cast<std::int64_t>(1 + rng() % 80)};
            int cores = std::array{1, 2, 4}[rng() % 3];
            cal.reserve({proc_slot(0, start, len, cores, owner++)});  // may reject; fine
        }
        int cores = std::array{1, 2, 4}[rng() % 3];
        Duration len{static_cast<std::int64_t>(1 + rng() % 60)};
        SimTime earliest{static_cast<std::int64_t>(rng() % 120)};
        SimTime deadline{earliest.us + static_cast<std::int64_t>(rng() % 300)};
        auto got = cal.find_processing_window(0, cores, len, earliest, deadline);
        auto expect = proc_window_oracle(cal, 0, cores, len, earliest, deadline);
        REQUIRE(got.has_value() == expect.has_value());
        if (got) CHECK(*got == *expect);
    }
}

TEST_CASE("conflicting tasks") {
    NetworkCalendar cal(4);
    const SimTime t = at_usec(0);
    Interval window{t + msec(1), t + msec(2)};

    SUBCASE("idle device has no conflicts") {
        CHECK(cal.conflicting_tasks(0, window, 1).empty());
    }
    SUBCASE("single four-core occupant is the only candidate") {
        REQUIRE(cal.reserve({proc_slot(0, t, sec(16), 4, 11)}).ok);
        auto ids = cal.conflicting_tasks(0, window, 1);
        REQUIRE(ids.size() == 1);
        CHECK(ids[0] == 11);
    }
    SUBCASE("either of two two-core tasks frees capacity") {
        REQUIRE(cal.reserve({proc_slot(0, t, sec(16), 2, 11)}).ok);
        REQUIRE(cal.reserve({proc_slot(0, t, sec(16), 2, 12)}).ok);
        auto ids = cal.conflicting_tasks(0, window, 1);
        REQUIRE(ids.size() == 2);
        CHECK(ids[0] == 11);
        CHECK(ids[1] == 12);
    }
    SUBCASE("task outside the blocked instants is not a candidate") {
        // Saturating pair in the first half; a 1-core task rides along the
        // second half where capacity is fine.
        REQUIRE(cal.reserve({proc_slot(0, t, msec(1500), 4, 21)}).ok);
        REQUIRE(cal.reserve({proc_slot(0, t + msec(1500), msec(500), 1, 22)}).ok);
        auto ids = cal.conflicting_tasks(0, window, 1);
        REQUIRE(ids.size() == 1);
        CHECK(ids[0] == 21);
    }
}

TEST_CASE("atomic reserve") {
    NetworkCalendar cal(4);
    CommTiming timing;

    SUBCASE("hp triple commits on an empty calendar") {
        Duration d_alloc = link_slot_duration(ReservationKind::alloc_msg_hp, timing);
        Duration d_update = link_slot_duration(ReservationKind::state_update, timing);
        SimTime t0 = at_usec(0);
        SimTime t1 = t0 + d_alloc;
        SimTime t2 = t1 + usec(985000);
        ReserveResult rr = cal.reserve({
            link_slot(t0, d_alloc, 1, ReservationKind::alloc_msg_hp),
            proc_slot(0, t1, usec(985000), 1, 1),
            link_slot(t2, d_update, 1, ReservationKind::state_update),
        });
        REQUIRE(rr.ok);
        CHECK(rr.ids.size() == 3);
        cal.check_invariants();
    }
    SUBCASE("overlapping link slots in one batch reject all") {
        NetworkCalendar before = cal;
        ReserveResult rr = cal.reserve({
            link_slot(at_usec(0), msec(5), 1),
            link_slot(at_usec(3000), msec(5), 1),
        });
        CHECK(!rr.ok);
        CHECK(cal.identical_to(before));
        CHECK(rr.conflict.find("overlap") != std::string::npos);
    }
    SUBCASE("over-capacity processing slot rejects and names the blocker") {
        ReserveResult first = cal.reserve({proc_slot(0, at_usec(0), sec(10), 4, 1)});
        REQUIRE(first.ok);
        NetworkCalendar before = cal;
        ReserveResult rr = cal.reserve({proc_slot(0, at_usec(100), sec(1), 1, 2)});
        CHECK(!rr.ok);
        CHECK(cal.identical_to(before));
        CHECK(rr.conflict.find(std::to_string(first.ids[0])) != std::string::npos);
    }
}

TEST_CASE("release task") {
    NetworkCalendar cal(4);
    REQUIRE(cal.reserve({link_slot(at_usec(0), msec(1), 7, ReservationKind::alloc_msg_lp),
                         proc_slot(0, at_usec(1000), sec(10), 2, 7),
                         link_slot(at_usec(10001000), msec(1), 7)})
                .ok);

    SUBCASE("release before all reservations removes all three") {
        CHECK(cal.release_task(7, at_usec(0)) == 3);
        CHECK(cal.device(0).empty());
        CHECK(cal.link().empty());
    }
    SUBCASE("mid-processing release truncates the running slot") {
        CHECK(cal.release_task(7, at_usec(5000000)) == 2);  // processing + state update
        REQUIRE(cal.device(0).size() == 1);
        CHECK(cal.device(0)[0].interval.end.us == 5000000);
        CHECK(cal.device(0)[0].interval.start.us == 1000);
    }
    SUBCASE("release after completion is a no-op") {
        CHECK(cal.release_task(7, at_usec(20000000)) == 0);
    }
    SUBCASE("unknown task throws") {
        CHECK_THROWS_AS(cal.release_task(999, at_usec(0)), CalendarError);
    }
}

TEST_CASE("random reserve and release keep the calendar invariants") {
    std::mt19937_64 rng(2026);
    NetworkCalendar cal(4);
    std::vector<TaskId> live;
    TaskId next = 1;
    for (int step = 0; step < 2000; ++step) {
        SimTime now{static_cast<std::int64_t>(step) * 500};
        if (rng() % 3 != 0 || live.empty()) {
            TaskId id = next++;
            DeviceId dev = static_cast<DeviceId>(rng() % 4);
            Duration len{static_cast<std::int64_t>(1000 + rng() % 50000)};
            int cores = std::array{1, 2, 4}[rng() % 3];
            SimTime start = now + Duration{static_cast<std::int64_t>(rng() % 20000)};
            std::vector<Reservation> batch{proc_slot(dev, start, len, cores, id)};
            if (rng() % 2)
                batch.push_back(link_slot(start, usec(100 + rng() % 500), id));
            if (cal.reserve(batch).ok) live.push_back(id);
        } else {
            std::size_t pick = rng() % live.size();
            cal.release_task(live[pick], now);
            live.erase(live.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        if (step % 50 == 0) cal.check_invariants();
    }
    cal.check_invariants();
}

TEST_CASE("resize processing validates capacity") {
    NetworkCalendar cal(4);
    ReserveResult a = cal.reserve({proc_slot(0, at_usec(0), sec(16), 2, 1)});
    REQUIRE(a.ok);
    ReserveResult b = cal.reserve({proc_slot(0, at_usec(0), sec(16), 2, 2)});
    REQUIRE(b.ok);
    // Upgrading either to four cores alongside the other must fail.
    CHECK_THROWS_AS(cal.resize_processing(a.ids[0], 4, at_usec(11611000)), CalendarError);
    cal.release_task(2, at_usec(0));
    cal.resize_processing(a.ids[0], 4, at_usec(11611000));
    CHECK(cal.device(0)[0].cores == 4);
    cal.check_invariants();
}

}  // TEST_SUITE
