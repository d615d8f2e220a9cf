// scheduler.hpp: the controller's two allocation algorithms. High-priority
// tasks are placed on their source device at the instant they arrive, evicting
// the farthest-deadline conflicting low-priority task when preemption is
// enabled. Low-priority request sets are placed over the completion time
// points of existing tasks with source-device preference, even distribution
// and a core-upgrade pass.
#pragma once

#include <algorithm>
#include <cassert>
#include <chrono>
#include <numeric>
#include <optional>
#include <vector>

#include "edgesched/calendar.hpp"
#include "edgesched/comm.hpp"
#include "edgesched/plan.hpp"
#include "edgesched/task.hpp"
#include "edgesched/time.hpp"

namespace edgesched {

// Padded slot lengths per task class (benchmark duration plus padding).
struct SchedulerParams {
    Duration hp_slot;
    Duration lp2_slot;
    Duration lp4_slot;
    bool preemption{true};
};

class Scheduler {
  public:
    Scheduler(NetworkCalendar& cal, TaskTable& tasks, CommTiming timing,
              SchedulerParams params)
        : cal_(cal), tasks_(tasks), timing_(std::move(timing)), params_(params) {
        timing_.validate();
        if (!params_.hp_slot.positive() || !params_.lp2_slot.positive() ||
            !params_.lp4_slot.positive())
            throw ConfigError("scheduler: slot durations must be positive");
    }

    bool preemption_enabled() const { return params_.preemption; }
    // Instrumentation for the last top-level scheduler call; the embedded
    // reallocation of a preemption victim is accounted separately, matching
    // how the two costs scale.
    const CostCounters& allocation_cost_counters() const { return counters_; }
    const CostCounters& reallocation_cost_counters() const { return realloc_counters_; }

    // High-priority placement. The processing slot is pinned to the arrival
    // time of the allocation message; if it does not fit there, no later start
    // is searched. With preemption enabled a single conflicting task may be
    // evicted to make room.
    HpOutcome allocate_high_priority(TaskId task_id, SimTime now) {
        WallTimer timer(counters_);
        TaskRecord& task = tasks_.at(task_id);
        assert(task.priority == TaskPriority::high);
        if (now > task.deadline)
            return HpOutcome::rejected("deadline already passed");

        auto draft = draft_hp_plan(task, now);
        if (draft.plan) {
            commit_hp(task, *draft.plan);
            HpOutcome out;
            out.kind = HpOutcome::Kind::allocated;
            out.plan = *draft.plan;
            return out;
        }
        if (!params_.preemption || !draft.processing)
            return HpOutcome::rejected(draft.reason);

        auto victim = select_preemption_victim(task.source_device, *draft.processing, 1);
        if (!victim)
            return HpOutcome::rejected("no viable preemption victim");
        return preempt_and_allocate(task_id, *victim, now);
    }

    // Farthest-deadline conflicting live low-priority task on `device`; ties
    // broken by later arrival, then larger id.
    std::optional<TaskId> select_preemption_victim(DeviceId device, Interval window,
                                                   int cores_needed) {
        int scanned = 0;
        std::vector<TaskId> conflicts = cal_.conflicting_tasks(device, window,
                                                               cores_needed, &scanned);
        counters_.tasks_scanned += scanned;
        std::optional<TaskId> best;
        for (TaskId id : conflicts) {
            const TaskRecord& t = tasks_.at(id);
            if (t.priority != TaskPriority::low || !t.live()) continue;
            if (!best) {
                best = id;
                continue;
            }
            const TaskRecord& b = tasks_.at(*best);
            if (t.deadline > b.deadline ||
                (t.deadline == b.deadline && t.arrival > b.arrival) ||
                (t.deadline == b.deadline && t.arrival == b.arrival && t.id > b.id))
                best = id;
        }
        return best;
    }

    // Evict `victim_id`, notify its device, re-run the high-priority search
    // and try to reallocate the victim. Exactly one task is preempted per
    // attempt; if its removal is not enough the whole step is rolled back.
    HpOutcome preempt_and_allocate(TaskId hp_id, TaskId victim_id, SimTime now) {
        TaskRecord& hp = tasks_.at(hp_id);
        TaskRecord& victim = tasks_.at(victim_id);
        assert(victim.priority == TaskPriority::low && victim.live());

        const int victim_config = victim.core_config;
        std::vector<Reservation> snapshot = snapshot_task(victim_id);
        cal_.release_task(victim_id, now);

        auto draft = draft_hp_plan(hp, now);
        if (!draft.plan) {
            // The freed cores were not enough; undo the eviction.
            restore_task(victim_id, snapshot);
            return HpOutcome::rejected("infeasible after single preemption: " + draft.reason);
        }
        commit_hp(hp, *draft.plan);

        // Halt order to the victim's device. It takes the next free link gap
        // and does not gate the high-priority processing start.
        Duration d_pre = link_slot_duration(ReservationKind::preemption_msg, timing_);
        auto w_pre = cal_.earliest_link_window(d_pre, now, SimTime::horizon());
        assert(w_pre);
        Reservation pre_msg{0, Resource::link(), ReservationKind::preemption_msg,
                            *w_pre, 0, hp_id};
        ReserveResult pre_rr = cal_.reserve({pre_msg});
        assert(pre_rr.ok);
        (void)pre_rr;

        victim.epoch += 1;
        tasks_.set_state(victim_id, TaskState::preempted);

        const auto realloc_begin = std::chrono::steady_clock::now();
        ReallocOutcome realloc = reallocate_preempted(victim_id, now);
        realloc.decision_wall_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - realloc_begin)
                .count();

        HpOutcome out;
        out.kind = HpOutcome::Kind::preempted_and_allocated;
        out.plan = *draft.plan;
        out.victim = victim_id;
        out.victim_config = victim_config;
        out.victim_realloc = std::move(realloc);
        return out;
    }

    // Single-task low-priority allocation for a preempted victim: all devices,
    // minimum configuration first, upgrade pass after, everything before the
    // victim's original deadline. Its input image stays on the device it was
    // evicted from.
    ReallocOutcome reallocate_preempted(TaskId victim_id, SimTime now) {
        WallTimer timer(realloc_counters_);
        TaskRecord& victim = tasks_.at(victim_id);
        assert(victim.state == TaskState::preempted);
        std::vector<LpTaskOutcome> outcomes =
            lp_allocate_tasks(realloc_counters_, {victim_id}, victim.deadline, now);
        if (outcomes.front().allocated)
            return ReallocOutcome::success(*outcomes.front().plan);
        tasks_.set_state(victim_id, TaskState::cancelled);
        return ReallocOutcome::cancelled();
    }

    // Set allocation for one low-priority request. Unallocated tasks are
    // failed; committed siblings are not rolled back.
    std::vector<LpTaskOutcome> allocate_low_priority_set(RequestId request_id, SimTime now) {
        WallTimer timer(counters_);
        LowPriorityRequest& req = tasks_.request(request_id);
        if (now > req.deadline) {
            std::vector<LpTaskOutcome> outcomes;
            for (TaskId id : req.tasks) {
                tasks_.set_state(id, TaskState::failed);
                outcomes.push_back({id, false, std::nullopt});
            }
            return outcomes;
        }
        std::vector<LpTaskOutcome> outcomes =
            lp_allocate_tasks(counters_, req.tasks, req.deadline, now);
        for (const LpTaskOutcome& o : outcomes)
            if (!o.allocated) tasks_.set_state(o.task_id, TaskState::failed);
        return outcomes;
    }

  private:
    struct WallTimer {
        explicit WallTimer(CostCounters& c) : counters(c) {
            counters = CostCounters{};
            begin = std::chrono::steady_clock::now();
        }
        ~WallTimer() {
            counters.wall_time_sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
        }
        CostCounters& counters;
        std::chrono::steady_clock::time_point begin;
    };

    struct HpDraft {
        std::optional<AllocationPlan> plan;
        std::optional<Interval> processing;  // attempted window, for victim selection
        std::string reason;
    };

    // Pure search for a high-priority plan; commits nothing.
    HpDraft draft_hp_plan(const TaskRecord& task, SimTime now) {
        HpDraft draft;
        Duration d_alloc = link_slot_duration(ReservationKind::alloc_msg_hp, timing_);
        Duration d_update = link_slot_duration(ReservationKind::state_update, timing_);

        auto w_alloc = cal_.earliest_link_window(d_alloc, now, task.deadline);
        if (!w_alloc) {
            draft.reason = "no link window for the allocation message";
            return draft;
        }
        Interval proc{w_alloc->end, w_alloc->end + params_.hp_slot};
        draft.processing = proc;
        if (proc.end > task.deadline) {
            draft.reason = "deadline unsatisfiable by message timing";
            draft.processing.reset();  // no later start exists either
            return draft;
        }
        FitProbe probe = cal_.probe_device_window(task.source_device, proc, 1);
        counters_.tasks_scanned += probe.tasks_scanned;
        if (!probe.fits) {
            draft.reason = "insufficient cores on source device";
            return draft;
        }
        auto w_update = cal_.earliest_link_window(d_update, proc.end, task.deadline);
        if (!w_update) {
            draft.reason = "no link window for the state update before the deadline";
            return draft;
        }
        AllocationPlan plan;
        plan.task_id = task.id;
        plan.offloaded = false;
        plan.alloc_msg = *w_alloc;
        plan.processing = proc;
        plan.state_update = *w_update;
        plan.device = task.source_device;
        plan.cores = 1;
        draft.plan = plan;
        return draft;
    }

    void commit_hp(TaskRecord& task, AllocationPlan& plan) {
        assert(plan.ordered() && plan.meets(task.deadline));
        std::vector<Reservation> batch{
            {0, Resource::link(), ReservationKind::alloc_msg_hp, plan.alloc_msg, 0, task.id},
            {0, Resource::on_device(plan.device), ReservationKind::processing,
             plan.processing, plan.cores, task.id},
            {0, Resource::link(), ReservationKind::state_update, plan.state_update, 0, task.id},
        };
        ReserveResult rr = cal_.reserve(std::move(batch));
        if (!rr.ok) throw CalendarError("hp commit failed: " + rr.conflict);
        plan.committed = rr.ids;
        plan.processing_res = rr.ids[1];
        task.allocated_device = plan.device;
        task.core_config = 1;
        task.reservations.insert(task.reservations.end(), rr.ids.begin(), rr.ids.end());
        tasks_.set_state(task.id, TaskState::allocated);
    }

    struct LpSlotState {
        LpTaskOutcome outcome;
        DeviceId input_before{0};  // input image location before this call
        bool state_updated{false};
        bool upgraded{false};
    };

    // Shared core of the set allocation and victim reallocation: iterate the
    // initially computed time points, attempt partial allocations, then the
    // upgrade pass, then the state updates.
    std::vector<LpTaskOutcome> lp_allocate_tasks(CostCounters& cost,
                                                 const std::vector<TaskId>& ids,
                                                 SimTime deadline, SimTime now) {
        std::vector<LpSlotState> slots(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            slots[i].outcome.task_id = ids[i];
            slots[i].input_before = tasks_.at(ids[i]).input_location;
        }

        std::vector<SimTime> points = cal_.processing_end_points(now, deadline);
        points.insert(points.begin(), now);

        for (SimTime point : points) {
            for (LpSlotState& slot : slots)
                if (!slot.outcome.allocated) try_partial(cost, slot, point, deadline, now);
            for (LpSlotState& slot : slots)
                if (slot.outcome.allocated && !slot.state_updated && !slot.upgraded)
                    try_upgrade(cost, slot);
            for (LpSlotState& slot : slots)
                if (slot.outcome.allocated && !slot.state_updated)
                    reserve_state_update(slot, deadline, now);
            bool done = true;
            for (const LpSlotState& slot : slots)
                if (!slot.outcome.allocated || !slot.state_updated) done = false;
            if (done) break;
        }
        std::vector<LpTaskOutcome> out;
        out.reserve(slots.size());
        for (LpSlotState& slot : slots) out.push_back(std::move(slot.outcome));
        return out;
    }

    // Devices in preference order: the device holding the task's input first
    // (no image transfer needed), then the rest by ascending live low-priority
    // task count, ties by device id.
    std::vector<DeviceId> device_preference(DeviceId input_location) const {
        std::vector<DeviceId> order{input_location};
        std::vector<DeviceId> rest;
        for (DeviceId d = 0; d < cal_.device_count(); ++d)
            if (d != input_location) rest.push_back(d);
        std::stable_sort(rest.begin(), rest.end(), [this](DeviceId a, DeviceId b) {
            int ca = tasks_.live_lp_on(a), cb = tasks_.live_lp_on(b);
            if (ca != cb) return ca < cb;
            return a < b;
        });
        order.insert(order.end(), rest.begin(), rest.end());
        return order;
    }

    bool try_partial(CostCounters& cost, LpSlotState& slot, SimTime point, SimTime deadline,
                     SimTime now) {
        TaskRecord& task = tasks_.at(slot.outcome.task_id);
        Duration d_alloc = link_slot_duration(ReservationKind::alloc_msg_lp, timing_);
        Duration d_transfer = link_slot_duration(ReservationKind::image_transfer, timing_);

        for (DeviceId dev : device_preference(task.input_location)) {
            const bool offload = dev != task.input_location;
            auto w_alloc = cal_.earliest_link_window(d_alloc, now, deadline);
            if (!w_alloc) return false;  // link saturated until the deadline
            std::optional<Interval> w_transfer;
            SimTime msgs_end = w_alloc->end;
            if (offload) {
                w_transfer = cal_.earliest_link_window(d_transfer, w_alloc->end, deadline);
                if (!w_transfer) continue;
                msgs_end = w_transfer->end;
            }
            for (int cores : {2, 4}) {
                Duration slot_len = cores == 2 ? params_.lp2_slot : params_.lp4_slot;
                Interval proc{max(point, msgs_end), max(point, msgs_end) + slot_len};
                if (proc.end > deadline) continue;
                ++cost.windows_probed;
                FitProbe probe = cal_.probe_device_window(dev, proc, cores);
                cost.tasks_scanned += probe.tasks_scanned;
                if (!probe.fits) continue;

                std::vector<Reservation> batch{
                    {0, Resource::link(), ReservationKind::alloc_msg_lp, *w_alloc, 0, task.id}};
                if (offload)
                    batch.push_back({0, Resource::link(), ReservationKind::image_transfer,
                                     *w_transfer, 0, task.id});
                batch.push_back({0, Resource::on_device(dev), ReservationKind::processing,
                                 proc, cores, task.id});
                ReserveResult rr = cal_.reserve(std::move(batch));
                if (!rr.ok) throw CalendarError("lp commit failed: " + rr.conflict);

                AllocationPlan plan;
                plan.task_id = task.id;
                plan.offloaded = dev != task.source_device;
                plan.alloc_msg = *w_alloc;
                plan.image_transfer = w_transfer;
                plan.processing = proc;
                plan.device = dev;
                plan.cores = cores;
                plan.committed = rr.ids;
                plan.processing_res = rr.ids.back();

                task.allocated_device = dev;
                task.core_config = cores;
                task.reservations.insert(task.reservations.end(), rr.ids.begin(), rr.ids.end());
                if (offload) task.input_location = dev;
                tasks_.set_state(task.id, TaskState::allocated);

                slot.outcome.allocated = true;
                slot.outcome.plan = std::move(plan);
                return true;
            }
        }
        return false;
    }

    // Replace a two-core slot with a four-core slot at the same start when the
    // device can support it; the completion time can only shrink.
    void try_upgrade(CostCounters& cost, LpSlotState& slot) {
        slot.upgraded = true;  // one check per task per call
        AllocationPlan& plan = *slot.outcome.plan;
        if (plan.cores != 2 || params_.lp4_slot >= params_.lp2_slot) return;
        TaskRecord& task = tasks_.at(plan.task_id);
        Interval w4{plan.processing.start, plan.processing.start + params_.lp4_slot};
        ++cost.windows_probed;
        FitProbe probe = cal_.probe_device_window(plan.device, w4, 4, kNoTask,
                                                  plan.processing_res);
        cost.tasks_scanned += probe.tasks_scanned;
        if (!probe.fits) return;
        cal_.resize_processing(plan.processing_res, 4, w4.end);
        plan.processing = w4;
        plan.cores = 4;
        task.core_config = 4;
    }

    void reserve_state_update(LpSlotState& slot, SimTime deadline, SimTime now) {
        AllocationPlan& plan = *slot.outcome.plan;
        TaskRecord& task = tasks_.at(plan.task_id);
        Duration d_update = link_slot_duration(ReservationKind::state_update, timing_);
        auto w = cal_.earliest_link_window(d_update, plan.processing.end, deadline);
        if (!w) {
            // No room to report the result before the deadline: undo and let
            // the task retry at a later point (or fail with the set).
            cal_.release_task(task.id, now);
            task.reservations.clear();
            task.allocated_device.reset();
            task.input_location = slot.input_before;
            tasks_.set_state(task.id, TaskState::pending);
            slot.outcome = LpTaskOutcome{task.id, false, std::nullopt};
            slot.upgraded = false;
            return;
        }
        Reservation update{0, Resource::link(), ReservationKind::state_update, *w, 0, task.id};
        ReserveResult rr = cal_.reserve({update});
        assert(rr.ok);
        plan.state_update = *w;
        plan.committed.push_back(rr.ids[0]);
        task.reservations.push_back(rr.ids[0]);
        slot.state_updated = true;
        assert(plan.ordered() && plan.meets(deadline));
    }

    std::vector<Reservation> snapshot_task(TaskId id) const {
        std::vector<Reservation> out;
        auto collect = [&](const std::vector<Reservation>& vec) {
            for (const Reservation& r : vec)
                if (r.owner == id) out.push_back(r);
        };
        collect(cal_.link());
        for (DeviceId d = 0; d < cal_.device_count(); ++d) collect(cal_.device(d));
        return out;
    }

    void restore_task(TaskId id, const std::vector<Reservation>& snapshot) {
        cal_.restore(id, snapshot);
    }

    NetworkCalendar& cal_;
    TaskTable& tasks_;
    CommTiming timing_;
    SchedulerParams params_;
    CostCounters counters_;
    CostCounters realloc_counters_;
};

}  // namespace edgesched
