#include <doctest.h>

#include <map>

#include "edgesched/engine.hpp"
#include "edgesched/workstealer.hpp"

using namespace edgesched;

TEST_SUITE("workstealer") {

TEST_CASE("queues are FIFO and a task sits in at most one queue") {
    WorkstealerState ws(4);
    ws.enqueue_device(0, 11);
    ws.enqueue_device(0, 12);
    ws.enqueue_device(0, 13);
    ws.enqueue_device(0, 14);
    CHECK(ws.device_queue(0).size() == 4);

    SUBCASE("duplicate enqueue is an invariant violation") {
        CHECK_THROWS_AS(ws.enqueue_device(1, 12), QueueError);
        CHECK_THROWS_AS(ws.enqueue_controller(12), QueueError);
    }
    SUBCASE("pop order and membership release") {
        CHECK(*ws.pop_device(0) == 11);
        CHECK(*ws.pop_device(0) == 12);
        CHECK(ws.queued(13));
        CHECK(!ws.queued(12));
        ws.enqueue_controller(12);  // legal again after the pop
        CHECK(*ws.pop_controller() == 12);
        CHECK(!ws.pop_controller());
    }
}

TEST_CASE("centralized enqueue lands on the controller queue") {
    WorkstealerState ws(4);
    ws.enqueue_controller(21);
    CHECK(ws.controller_queue().size() == 1);
    CHECK(ws.device_queue(0).empty());
}

TEST_CASE("empty pops return nothing") {
    WorkstealerState ws(2);
    CHECK(!ws.pop_controller());
    CHECK(!ws.pop_device(1));
}

TEST_CASE("poll order is a fresh uniform permutation each round") {
    PollPolicy policy(42);
    std::map<std::vector<DeviceId>, int> counts;
    const int rounds = 6000;
    for (int i = 0; i < rounds; ++i) {
        std::vector<DeviceId> order = policy.draw_order(0, 4);
        REQUIRE(order.size() == 3);
        for (DeviceId d : order) CHECK(d != 0);
        ++counts[order];
    }
    // Chi-square over the 3! permutations; df=5, 20.5 is the 0.1% cut.
    REQUIRE(counts.size() == 6);
    double expected = rounds / 6.0;
    double chi2 = 0.0;
    for (const auto& [perm, n] : counts) {
        double d = n - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 20.5);
}

TEST_CASE("poll order is reproducible for a fixed seed") {
    PollPolicy a(7), b(7), c(8);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 50; ++i) {
        auto oa = a.draw_order(2, 4);
        if (oa != b.draw_order(2, 4)) all_equal = false;
        if (oa != c.draw_order(2, 4)) any_diff = true;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("ws preemption victim is the farthest-deadline running task") {
    NetworkCalendar cal(4);
    TaskTable tasks;
    auto add_running = [&](DeviceId dev, int cores, SimTime deadline, SimTime arrival) {
        TaskRecord& t = tasks.create(TaskPriority::low, dev, arrival, deadline);
        ReserveResult rr = cal.reserve({{0, Resource::on_device(dev),
                                         ReservationKind::processing,
                                         {at_usec(0), at_usec(20000000)}, cores, t.id}});
        REQUIRE(rr.ok);
        t.allocated_device = dev;
        t.core_config = cores;
        t.reservations = rr.ids;
        tasks.set_state(t.id, TaskState::allocated);
        return t.id;
    };
    Interval window{at_usec(1000), at_usec(986000)};

    SUBCASE("single running task is preempted") {
        TaskId only = add_running(0, 4, at_usec(30000000), at_usec(0));
        CHECK(ws_preemption_victim(cal, tasks, 0, window) == only);
    }
    SUBCASE("no low-priority work means no victim") {
        // Cores held by high-priority work cannot be stolen back.
        TaskRecord& hp = tasks.create(TaskPriority::high, 0, at_usec(0), at_usec(1000000));
        ReserveResult rr = cal.reserve({{0, Resource::on_device(0),
                                         ReservationKind::processing,
                                         {at_usec(0), at_usec(985000)}, 4, hp.id}});
        REQUIRE(rr.ok);
        tasks.set_state(hp.id, TaskState::allocated);
        CHECK(!ws_preemption_victim(cal, tasks, 0, window));
    }
    SUBCASE("farthest deadline matches a brute-force argmax") {
        TaskId a = add_running(0, 2, at_usec(25000000), at_usec(10));
        TaskId b = add_running(0, 2, at_usec(31000000), at_usec(5));
        auto got = ws_preemption_victim(cal, tasks, 0, window);
        TaskId expect = tasks.at(a).deadline > tasks.at(b).deadline ? a : b;
        CHECK(got == expect);
    }
}

TEST_CASE("surplus tasks are stolen over the link, one per able device") {
    // Device 0 spawns two DNN tasks while still running its classifier; idle
    // peers poll, pay link round-trips, transfer the images and run them.
    // Each thief commits to one task: a freshly made steal reserves cores
    // only from the transfer end, and those cores must already count.
    ScenarioConfig cfg;
    cfg.algorithm = Algorithm::decentralized_ws;
    cfg.preemption = false;
    cfg.stagger_offset_max = usec(0);
    cfg.seed = 3;
    TraceFile t = parse("2,-1,-1,-1\n");
    t.scenario = "steal";
    Simulation sim(cfg, t);
    MetricsReport r = sim.run();
    CHECK(r.lp_generated == 2);
    CHECK(r.lp_completed == 2);
    CHECK(r.lp_offloaded_generated == 2);
    CHECK(r.lp_offloaded_completed == 2);
    CHECK(r.core_offloaded_four == 2);  // both thieves fully idle: four cores

    const TaskRecord* a = nullptr;
    const TaskRecord* b = nullptr;
    for (const TaskRecord& task : sim.tasks().all()) {
        if (task.internal || task.priority != TaskPriority::low) continue;
        (a ? b : a) = &task;
    }
    REQUIRE(b);
    CHECK(*a->allocated_device != *b->allocated_device);  // no over-steal

    int polls = 0, transfers = 0;
    for (const Reservation& res : sim.calendar().link()) {
        if (res.kind == ReservationKind::poll_msg) ++polls;
        if (res.kind == ReservationKind::image_transfer) ++transfers;
    }
    CHECK(polls > 0);
    CHECK(transfers == 2);
}

}  // TEST_SUITE
