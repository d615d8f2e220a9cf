// engine.hpp: deterministic discrete-event simulation of the four-device
// network: staggered frame generation, the detector/high-priority/low-priority
// pipeline, task execution with optional runtime-variance injection, and
// metric accounting. One Simulation instance runs one scenario to completion.
#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "edgesched/calendar.hpp"
#include "edgesched/config.hpp"
#include "edgesched/metrics.hpp"
#include "edgesched/scheduler.hpp"
#include "edgesched/task.hpp"
#include "edgesched/trace.hpp"
#include "edgesched/workstealer.hpp"

namespace edgesched {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Standard normal via Box-Muller on the bit-stable canonical draw.
inline double gaussian(std::mt19937_64& rng) {
    double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    double u2 = canonical(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Actual duration of one execution: the benchmark plus a gaussian sample
// clipped at zero. The reservation is benchmark + padding long; an actual
// beyond the slot is a violation.
inline Duration actual_duration(Duration benchmark, Duration sigma, bool noise_on,
                                std::mt19937_64& rng) {
    if (!noise_on || sigma.us <= 0) return benchmark;
    double sample = gaussian(rng) * static_cast<double>(sigma.us);
    if (sample <= 0.0) return benchmark;
    return benchmark + Duration{static_cast<std::int64_t>(std::llround(sample))};
}

enum class EventKind : std::uint8_t {
    frame_generated,
    detector_done,
    proc_end,            // processing finished at its actual end
    slot_violation,      // execution overran the padded slot; terminated
    transfer_violation,  // image transfer overran its slot
    state_update_done,   // controller informed; completion instant
    ws_check,
    ws_poll_arrive,
};

struct Event {
    SimTime time;
    std::uint64_t seq{0};
    EventKind kind{EventKind::frame_generated};
    std::uint64_t entity{0};  // frame id, task id or device id
    std::uint32_t epoch{0};   // guards stale task events after preemption
};

class EventQueue {
  public:
    void push(SimTime t, EventKind kind, std::uint64_t entity, std::uint32_t epoch = 0) {
        queue_.push(Event{t, next_seq_++, kind, entity, epoch});
    }
    bool empty() const { return queue_.empty(); }
    Event pop() {
        Event e = queue_.top();
        queue_.pop();
        return e;
    }

  private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return b.time < a.time;
            return b.seq < a.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t next_seq_{1};
};

// Generation instant of frame `k` on `device`: pairs start staggered, two
// devices at cycle start and two at mid-cycle, plus a per-device offset.
inline SimTime frame_generation(std::size_t k, DeviceId device, Duration period,
                                Duration offset) {
    Duration base{static_cast<std::int64_t>(k) * period.us +
                  (device >= 2 ? period.us / 2 : 0)};
    return SimTime::zero() + base + offset;
}

class Simulation {
  public:
    Simulation(ScenarioConfig config, TraceFile trace)
        : cfg_(std::move(config)),
          trace_(std::move(trace)),
          cal_(cfg_.devices, cfg_.cores_per_device),
          sched_(cal_, tasks_, cfg_.comm,
                 SchedulerParams{cfg_.hp_slot(), cfg_.lp2_slot(), cfg_.lp4_slot(),
                                 cfg_.preemption}),
          ws_(cfg_.devices),
          poll_policy_(effective_poll_seed(cfg_)),
          stagger_rng_(effective_stagger_seed(cfg_)),
          noise_rng_(effective_noise_seed(cfg_)) {
        cfg_.validate();
        if (!trace_.frames.empty() && cfg_.devices != kTraceDevices)
            throw ConfigError("engine: trace files describe exactly 4 devices");
        chains_.resize(static_cast<std::size_t>(cfg_.devices));
    }

    // Drives all events to the last frame deadline and returns the finalized
    // report. Deterministic for a fixed config and trace.
    MetricsReport run() {
        setup_frames();
        if (cfg_.algorithm != Algorithm::scheduler) setup_pollers();

        std::uint64_t processed = 0;
        try {
            while (!events_.empty()) {
                Event ev = events_.pop();
                if (ev.time > horizon_) break;
                now_ = ev.time;
                dispatch(ev);
                if (++processed % 4096 == 0) cal_.check_invariants();
            }
            cal_.check_invariants();
        } catch (const CalendarError& e) {
            throw EngineError(std::string("calendar violation: ") + e.what() + "\n" +
                              dump_event_log());
        }
        settle_stragglers();

        MetricsReport report = metrics_.finalize();
        report.scenario = trace_.scenario.empty() ? "unnamed" : trace_.scenario;
        report.algorithm = to_string(cfg_.algorithm);
        report.preemption = cfg_.preemption;
        report.seed = cfg_.seed;
        report.realloc_semantics =
            cfg_.algorithm == Algorithm::scheduler ? "decision" : "requeue";
        if (report.frames_completed != report.frames_completed_reconstructed)
            throw EngineError("frame completion accounting mismatch: " +
                              std::to_string(report.frames_completed) + " vs " +
                              std::to_string(report.frames_completed_reconstructed) +
                              "\n" + dump_event_log());
        return report;
    }

    const NetworkCalendar& calendar() const { return cal_; }
    const TaskTable& tasks() const { return tasks_; }
    std::string dump_event_log() const {
        std::string out = "last events:\n";
        for (const std::string& line : event_log_) out += "  " + line + "\n";
        return out;
    }

  private:
    // ---- setup -----------------------------------------------------------

    struct FrameState {
        std::uint64_t id{0};
        DeviceId device{0};
        int value{-1};
        SimTime generated;
        SimTime deadline;
        bool detector_ok{false};
        bool stage2_ok{false};
        bool stage3_ok{false};
        bool completed{false};
        RequestId request{kNoRequest};
    };

    struct ExecPlan {
        ReservationId proc_res{0};
        SimTime proc_slot_end;
        SimTime completion_at;  // state update end; zero (=proc end) for ws mode
        bool via_preemption{false};
    };

    struct RequestTrack {
        int remaining{0};
        bool any_failed{false};
        std::uint64_t frame{0};
    };

    struct WsChain {
        bool active{false};
        std::vector<DeviceId> order;
        std::size_t next{0};
        DeviceId pending_victim{-1};
        SimTime cursor;
    };

    void setup_frames() {
        std::vector<Duration> offsets;
        for (DeviceId d = 0; d < cfg_.devices; ++d)
            offsets.push_back(Duration{static_cast<std::int64_t>(
                canonical(stagger_rng_) *
                static_cast<double>(cfg_.stagger_offset_max.us))});
        SimTime last_deadline = SimTime::zero();
        for (std::size_t k = 0; k < trace_.frames.size(); ++k) {
            for (DeviceId d = 0; d < kTraceDevices; ++d) {
                FrameState f;
                f.id = frames_.size();
                f.device = d;
                f.value = trace_.frames[k][static_cast<std::size_t>(d)];
                f.generated = frame_generation(k, d, cfg_.frame_period,
                                               offsets[static_cast<std::size_t>(d)]);
                f.deadline = f.generated + cfg_.frame_period;
                last_deadline = max(last_deadline, f.deadline);
                events_.push(f.generated, EventKind::frame_generated, f.id);
                frames_.push_back(f);
            }
        }
        horizon_ = last_deadline;
    }

    void setup_pollers() {
        for (DeviceId d = 0; d < cfg_.devices; ++d) {
            TaskRecord& agent =
                tasks_.create(TaskPriority::high, d, SimTime::zero(), horizon_ + sec(1));
            agent.internal = true;
            poll_agents_.push_back(agent.id);
            events_.push(SimTime::zero(), EventKind::ws_check,
                         static_cast<std::uint64_t>(d));
        }
    }

    // ---- dispatch --------------------------------------------------------

    void dispatch(const Event& ev) {
        log_event(ev);
        switch (ev.kind) {
            case EventKind::frame_generated: on_frame_generated(frames_[ev.entity]); break;
            case EventKind::detector_done: on_detector_done(frames_[ev.entity]); break;
            case EventKind::proc_end: on_proc_end(ev.entity, ev.epoch); break;
            case EventKind::slot_violation: on_slot_violation(ev.entity, ev.epoch); break;
            case EventKind::transfer_violation:
                on_transfer_violation(ev.entity, ev.epoch);
                break;
            case EventKind::state_update_done:
                on_state_update_done(ev.entity, ev.epoch);
                break;
            case EventKind::ws_check: ws_check(static_cast<DeviceId>(ev.entity)); break;
            case EventKind::ws_poll_arrive:
                ws_poll_arrive(static_cast<DeviceId>(ev.entity));
                break;
        }
    }

    void on_frame_generated(FrameState& f) {
        emit(MetricsEventType::frame_generated, f.id, f.value, f.deadline.us);
        // Detection is constant overhead at the sampling rate: it always runs
        // over [generation, generation + duration). It holds a core when the
        // calendar has one free for that window; on a saturated device it runs
        // unreserved, absorbed by the running slots' padding. It is local
        // work, never a controller placement, never offloaded or preempted.
        Interval window{f.generated, f.generated + cfg_.detector_duration};
        if (cal_.probe_device_window(f.device, window, 1).fits) {
            TaskRecord& det = tasks_.create(TaskPriority::high, f.device, f.generated,
                                            horizon_ + sec(1));
            det.internal = true;
            ReserveResult rr = cal_.reserve({{0, Resource::on_device(f.device),
                                              ReservationKind::processing, window, 1,
                                              det.id}});
            if (!rr.ok) throw EngineError("detector reservation failed: " + rr.conflict);
            det.allocated_device = f.device;
            det.reservations = rr.ids;
            tasks_.set_state(det.id, TaskState::allocated);
        }
        events_.push(window.end, EventKind::detector_done, f.id);
    }

    void on_detector_done(FrameState& f) {
        emit(MetricsEventType::detector_done, f.id, 0, now_.us);
        f.detector_ok = true;
        if (f.value < 0) {
            try_complete_frame(f);
            return;
        }
        TaskRecord& hp = tasks_.create(TaskPriority::high, f.device, now_,
                                       now_ + cfg_.hp_deadline_budget);
        hp_frame_[hp.id] = f.id;
        emit(MetricsEventType::hp_generated, hp.id);
        if (cfg_.algorithm == Algorithm::scheduler)
            hp_via_scheduler(hp.id);
        else
            hp_via_workstealer(f, hp.id);
    }

    // ---- scheduler mode --------------------------------------------------

    void hp_via_scheduler(TaskId hp_id) {
        HpOutcome out = sched_.allocate_high_priority(hp_id, now_);
        const CostCounters& cost = sched_.allocation_cost_counters();
        emit(MetricsEventType::counters_sample, 0, cost.tasks_scanned, cost.windows_probed);
        emit_latency(out.kind == HpOutcome::Kind::preempted_and_allocated
                         ? MetricsEventType::latency_hp_preempt
                         : MetricsEventType::latency_hp_initial,
                     cost.wall_time_sec);
        if (!out.allocated()) {
            tasks_.set_state(hp_id, TaskState::failed);
            return;  // stage 2 failed; the frame can no longer complete
        }
        if (out.kind == HpOutcome::Kind::preempted_and_allocated) {
            emit(MetricsEventType::preemption, out.victim, out.victim_config);
            const ReallocOutcome& re = *out.victim_realloc;
            emit_event(MetricsEventType::realloc_decided, out.victim,
                       re.reallocated ? 1 : 0, 0, re.decision_wall_sec);
            const CostCounters& rcost = sched_.reallocation_cost_counters();
            emit(MetricsEventType::counters_sample, 0, rcost.tasks_scanned,
                 rcost.windows_probed);
            if (re.reallocated)
                start_lp_execution(out.victim, *re.plan);
            else
                resolve_lp(out.victim);
        }
        start_hp_execution(hp_id, *out.plan, out.kind);
    }

    void start_hp_execution(TaskId id, const AllocationPlan& plan, HpOutcome::Kind kind) {
        ExecPlan ep;
        ep.proc_res = plan.processing_res;
        ep.proc_slot_end = plan.processing.end;
        ep.completion_at = plan.state_update.end;
        ep.via_preemption = kind == HpOutcome::Kind::preempted_and_allocated;
        exec_[id] = ep;
        Duration actual = actual_duration(cfg_.hp_duration, cfg_.noise.sigma_proc_hp,
                                          cfg_.noise.enabled, noise_rng_);
        schedule_execution(id, plan.processing.start, actual, plan.processing.end);
    }

    void start_lp_execution(TaskId id, const AllocationPlan& plan) {
        TaskRecord& t = tasks_.at(id);
        emit_event(MetricsEventType::lp_allocated, id, plan.cores,
                   plan.device != t.source_device ? 1 : 0, 0.0);
        if (plan.device != t.source_device) ever_offloaded_.insert(id);
        ExecPlan ep;
        ep.proc_res = plan.processing_res;
        ep.proc_slot_end = plan.processing.end;
        ep.completion_at = plan.state_update.end;
        exec_[id] = ep;
        if (plan.image_transfer && cfg_.noise.enabled && cfg_.noise.sigma_comm.us > 0) {
            Duration base = transfer_time(
                cfg_.comm.message_sizes.at(ReservationKind::image_transfer), cfg_.comm);
            Duration actual =
                actual_duration(base, cfg_.noise.sigma_comm, true, noise_rng_);
            if (plan.image_transfer->start + actual > plan.image_transfer->end) {
                events_.push(plan.image_transfer->end, EventKind::transfer_violation, id,
                             t.epoch);
                return;  // the input never arrives in its slot; task dies there
            }
        }
        Duration bench = plan.cores == 4 ? cfg_.lp4_duration : cfg_.lp2_duration;
        Duration actual = actual_duration(bench, cfg_.noise.sigma_proc_lp,
                                          cfg_.noise.enabled, noise_rng_);
        schedule_execution(id, plan.processing.start, actual, plan.processing.end);
    }

    void schedule_execution(TaskId id, SimTime start, Duration actual, SimTime slot_end) {
        TaskRecord& t = tasks_.at(id);
        if (start + actual > slot_end)
            events_.push(slot_end, EventKind::slot_violation, id, t.epoch);
        else
            events_.push(start + actual, EventKind::proc_end, id, t.epoch);
    }

    void spawn_lp_request(FrameState& f) {
        LowPriorityRequest& req = tasks_.create_request(f.device, f.deadline, kNoTask);
        f.request = req.id;
        RequestTrack track;
        track.remaining = f.value;
        track.frame = f.id;
        if (now_ >= f.deadline) {
            // The pipeline already overran the frame deadline; the request is
            // generated but unservable.
            track.any_failed = true;
            requests_[req.id] = track;
            for (int i = 0; i < f.value; ++i)
                emit(MetricsEventType::lp_generated, 0x100000000000ull + synth_lp_++,
                     static_cast<std::int64_t>(req.id));
            return;
        }
        for (int i = 0; i < f.value; ++i) {
            TaskRecord& t =
                tasks_.create(TaskPriority::low, f.device, now_, f.deadline, req.id);
            req.tasks.push_back(t.id);
            emit(MetricsEventType::lp_generated, t.id, static_cast<std::int64_t>(req.id));
        }
        requests_[req.id] = track;

        if (cfg_.algorithm == Algorithm::scheduler) {
            auto outcomes = sched_.allocate_low_priority_set(req.id, now_);
            const CostCounters& cost = sched_.allocation_cost_counters();
            emit(MetricsEventType::counters_sample, 0, cost.tasks_scanned,
                 cost.windows_probed);
            emit_latency(MetricsEventType::latency_lp_set, cost.wall_time_sec);
            for (const LpTaskOutcome& o : outcomes) {
                if (o.allocated)
                    start_lp_execution(o.task_id, *o.plan);
                else
                    resolve_lp(o.task_id);
            }
        } else {
            for (TaskId id : req.tasks) {
                if (cfg_.algorithm == Algorithm::centralized_ws)
                    ws_.enqueue_controller(id);
                else
                    ws_.enqueue_device(f.device, id);
            }
        }
    }

    // ---- shared lifecycle ------------------------------------------------

    bool stale(TaskId id, std::uint32_t epoch) const {
        const TaskRecord& t = tasks_.at(id);
        return t.epoch != epoch || !t.live();
    }

    void on_proc_end(TaskId id, std::uint32_t epoch) {
        if (stale(id, epoch)) return;
        TaskRecord& t = tasks_.at(id);
        ExecPlan& ep = exec_.at(id);
        if (now_ < ep.proc_slot_end) cal_.truncate_reservation(ep.proc_res, now_);
        if (cfg_.algorithm == Algorithm::scheduler) {
            events_.push(ep.completion_at, EventKind::state_update_done, id, t.epoch);
        } else {
            // No controller round-trip: the task resolves at its actual end.
            complete_task(t, ep);
            events_.push(now_, EventKind::ws_check,
                         static_cast<std::uint64_t>(*t.allocated_device));
        }
    }

    void on_state_update_done(TaskId id, std::uint32_t epoch) {
        if (stale(id, epoch)) return;
        complete_task(tasks_.at(id), exec_.at(id));
    }

    void complete_task(TaskRecord& t, const ExecPlan& ep) {
        if (t.priority == TaskPriority::high) {
            if (now_ > t.deadline)
                throw EngineError("hp completion after deadline\n" + dump_event_log());
            tasks_.set_state(t.id, TaskState::completed);
            t.completion_time = now_;
            emit(MetricsEventType::hp_completed, t.id, ep.via_preemption ? 1 : 0);
            FrameState& f = frames_[hp_frame_.at(t.id)];
            f.stage2_ok = true;
            emit(MetricsEventType::stage2_done, f.id, 0, now_.us);
            if (f.value == 0)
                try_complete_frame(f);
            else
                spawn_lp_request(f);
            return;
        }
        // Workstealers are myopic: a stolen task may finish past its deadline,
        // which counts as a failure, not a completion.
        if (now_ > t.deadline) {
            tasks_.set_state(t.id, TaskState::failed);
            resolve_lp(t.id);
            return;
        }
        tasks_.set_state(t.id, TaskState::completed);
        t.completion_time = now_;
        emit(MetricsEventType::lp_completed, t.id,
             static_cast<std::int64_t>(t.request_id));
        resolve_lp(t.id);
        auto rit = requests_.find(t.request_id);
        if (rit != requests_.end() && --rit->second.remaining == 0 &&
            !rit->second.any_failed) {
            FrameState& f = frames_[rit->second.frame];
            f.stage3_ok = true;
            emit(MetricsEventType::stage3_done, f.id, 0, now_.us);
            try_complete_frame(f);
        }
    }

    void on_slot_violation(TaskId id, std::uint32_t epoch) {
        if (stale(id, epoch)) return;
        TaskRecord& t = tasks_.at(id);
        emit(MetricsEventType::violation, id);
        cal_.release_task(id, now_);
        tasks_.set_state(id, TaskState::failed);
        fail_stage_of(t);
        if (cfg_.algorithm != Algorithm::scheduler && t.allocated_device)
            events_.push(now_, EventKind::ws_check,
                         static_cast<std::uint64_t>(*t.allocated_device));
    }

    void on_transfer_violation(TaskId id, std::uint32_t epoch) {
        if (stale(id, epoch)) return;
        TaskRecord& t = tasks_.at(id);
        emit(MetricsEventType::violation, id);
        cal_.release_task(id, now_);
        tasks_.set_state(id, TaskState::failed);
        fail_stage_of(t);
    }

    void fail_stage_of(TaskRecord& t) {
        // A failed high-priority task simply leaves stage 2 unfinished; a
        // failed low-priority task resolves its request bookkeeping.
        if (t.priority == TaskPriority::low) resolve_lp(t.id);
    }

    // Terminal accounting for a low-priority task: offloaded classification
    // and request bookkeeping.
    void resolve_lp(TaskId id) {
        if (!resolved_.insert(id).second) return;
        TaskRecord& t = tasks_.at(id);
        bool offloaded = ever_offloaded_.count(id) > 0;
        bool completed_off = offloaded && t.state == TaskState::completed;
        emit_event(MetricsEventType::lp_resolved, id, offloaded ? 1 : 0,
                   completed_off ? 1 : 0, 0.0);
        if (t.state != TaskState::completed) {
            auto rit = requests_.find(t.request_id);
            if (rit != requests_.end()) rit->second.any_failed = true;
        }
    }

    void try_complete_frame(FrameState& f) {
        if (f.completed || now_ > f.deadline) return;
        bool done = f.detector_ok && (f.value == -1 || (f.stage2_ok &&
                    (f.value == 0 || f.stage3_ok)));
        if (!done) return;
        f.completed = true;
        emit(MetricsEventType::frame_completed, f.id);
    }

    // ---- workstealer mode --------------------------------------------------

    // Can the device take stolen work? Two cores must be free not just at
    // this instant but through the commitment horizon: a steal it just made
    // reserves cores only from the image-transfer end, and those cores are
    // spoken for.
    bool ws_can_take(DeviceId d) const {
        Duration ahead = link_slot_duration(ReservationKind::image_transfer, cfg_.comm);
        return cal_.probe_device_window(d, {now_, now_ + ahead + msec(1)}, 2).fits;
    }

    void hp_via_workstealer(FrameState& f, TaskId hp_id) {
        TaskRecord& hp = tasks_.at(hp_id);
        Interval window{now_, now_ + cfg_.hp_slot()};
        bool via_preemption = false;
        if (!cal_.probe_device_window(f.device, window, 1).fits && cfg_.preemption) {
            if (auto victim = ws_preemption_victim(cal_, tasks_, f.device, window)) {
                ws_preempt(*victim, f.device);
                via_preemption = true;
            }
        }
        if (!cal_.probe_device_window(f.device, window, 1).fits) {
            tasks_.set_state(hp_id, TaskState::failed);
            return;
        }
        ReserveResult rr = cal_.reserve({{0, Resource::on_device(f.device),
                                          ReservationKind::processing, window, 1, hp_id}});
        if (!rr.ok) throw EngineError("ws hp reservation failed: " + rr.conflict);
        hp.allocated_device = f.device;
        hp.reservations = rr.ids;
        tasks_.set_state(hp_id, TaskState::allocated);
        ExecPlan ep;
        ep.proc_res = rr.ids[0];
        ep.proc_slot_end = window.end;
        ep.via_preemption = via_preemption;
        exec_[hp_id] = ep;
        Duration actual = actual_duration(cfg_.hp_duration, cfg_.noise.sigma_proc_hp,
                                          cfg_.noise.enabled, noise_rng_);
        schedule_execution(hp_id, window.start, actual, window.end);
    }

    // Preempted stolen work goes back to the tail of its queue for a
    // possible re-steal before its deadline.
    void ws_preempt(TaskId victim_id, DeviceId device) {
        TaskRecord& victim = tasks_.at(victim_id);
        emit(MetricsEventType::preemption, victim_id, victim.core_config);
        ws_victims_.insert(victim_id);
        cal_.release_task(victim_id, now_);
        victim.epoch += 1;
        victim.allocated_device.reset();
        tasks_.set_state(victim_id, TaskState::pending);
        if (cfg_.algorithm == Algorithm::centralized_ws)
            ws_.enqueue_controller(victim_id);
        else
            ws_.enqueue_device(victim.source_device, victim_id);
        events_.push(now_, EventKind::ws_check, static_cast<std::uint64_t>(device));
    }

    void ws_check(DeviceId d) {
        if (now_ > horizon_) return;
        WsChain& chain = chains_[static_cast<std::size_t>(d)];
        if (chain.active || !ws_can_take(d)) return;
        if (cfg_.algorithm == Algorithm::decentralized_ws) {
            if (auto own = ws_.pop_device(d)) {
                ws_begin_execution(d, *own);
                events_.push(now_, EventKind::ws_check, static_cast<std::uint64_t>(d));
                return;
            }
            chain.active = true;
            chain.order = poll_policy_.draw_order(d, cfg_.devices);
            chain.next = 0;
            chain.cursor = now_;
            ws_issue_poll(d);
        } else {
            chain.active = true;
            chain.order.clear();
            chain.cursor = now_;
            ws_issue_controller_poll(d);
        }
    }

    Duration poll_round_trip() const {
        return link_slot_duration(ReservationKind::poll_msg, cfg_.comm) * 2;
    }

    void ws_issue_poll(DeviceId d) {
        WsChain& chain = chains_[static_cast<std::size_t>(d)];
        if (chain.next >= chain.order.size()) {
            chain.active = false;
            SimTime retry = chain.cursor + cfg_.poll_interval;
            if (retry <= horizon_)
                events_.push(retry, EventKind::ws_check, static_cast<std::uint64_t>(d));
            return;
        }
        chain.pending_victim = chain.order[chain.next++];
        auto w = cal_.earliest_link_window(poll_round_trip(), chain.cursor,
                                           SimTime::horizon());
        ReserveResult rr =
            cal_.reserve({{0, Resource::link(), ReservationKind::poll_msg, *w, 0,
                           poll_agents_[static_cast<std::size_t>(d)]}});
        if (!rr.ok) throw EngineError("poll reservation failed: " + rr.conflict);
        chain.cursor = w->end;
        events_.push(w->end, EventKind::ws_poll_arrive, static_cast<std::uint64_t>(d));
    }

    void ws_issue_controller_poll(DeviceId d) {
        WsChain& chain = chains_[static_cast<std::size_t>(d)];
        auto w = cal_.earliest_link_window(poll_round_trip(), chain.cursor,
                                           SimTime::horizon());
        ReserveResult rr =
            cal_.reserve({{0, Resource::link(), ReservationKind::poll_msg, *w, 0,
                           poll_agents_[static_cast<std::size_t>(d)]}});
        if (!rr.ok) throw EngineError("poll reservation failed: " + rr.conflict);
        chain.cursor = w->end;
        events_.push(w->end, EventKind::ws_poll_arrive, static_cast<std::uint64_t>(d));
    }

    void ws_poll_arrive(DeviceId d) {
        WsChain& chain = chains_[static_cast<std::size_t>(d)];
        std::optional<TaskId> got;
        if (cfg_.algorithm == Algorithm::centralized_ws)
            got = ws_.pop_controller();
        else
            got = ws_.pop_device(chain.pending_victim);
        if (got) {
            chain.active = false;
            ws_begin_execution(d, *got);
            events_.push(now_, EventKind::ws_check, static_cast<std::uint64_t>(d));
            return;
        }
        if (cfg_.algorithm == Algorithm::centralized_ws) {
            chain.active = false;
            SimTime retry = now_ + cfg_.poll_interval;
            if (retry <= horizon_)
                events_.push(retry, EventKind::ws_check, static_cast<std::uint64_t>(d));
        } else {
            ws_issue_poll(d);  // next victim in this round
        }
    }

    void ws_begin_execution(DeviceId d, TaskId id) {
        TaskRecord& t = tasks_.at(id);
        SimTime start = now_;
        std::optional<Interval> transfer;
        if (t.source_device != d) {
            Duration len = link_slot_duration(ReservationKind::image_transfer, cfg_.comm);
            transfer = cal_.earliest_link_window(len, now_, SimTime::horizon());
            ReserveResult rr = cal_.reserve({{0, Resource::link(),
                                              ReservationKind::image_transfer, *transfer,
                                              0, id}});
            if (!rr.ok) throw EngineError("ws transfer failed: " + rr.conflict);
            t.reservations.push_back(rr.ids[0]);
            Duration base = transfer_time(
                cfg_.comm.message_sizes.at(ReservationKind::image_transfer), cfg_.comm);
            Duration actual = actual_duration(base, cfg_.noise.sigma_comm,
                                              cfg_.noise.enabled, noise_rng_);
            ever_offloaded_.insert(id);
            if (transfer->start + actual > transfer->end) {
                t.allocated_device = d;  // it was headed here
                tasks_.set_state(id, TaskState::allocated);
                events_.push(transfer->end, EventKind::transfer_violation, id, t.epoch);
                return;
            }
            start = transfer->start + actual;  // data arrives, execution begins
        }
        // Full horizontal partitioning when alone on the device, else the
        // two-core configuration. Myopic: no admission test against the
        // deadline.
        int cores = cal_.usage_at(d, start) == 0 ? 4 : 2;
        Duration slot = cores == 4 ? cfg_.lp4_slot() : cfg_.lp2_slot();
        auto w = cal_.find_processing_window(d, cores, slot, start, SimTime::horizon());
        ReserveResult rr = cal_.reserve({{0, Resource::on_device(d),
                                          ReservationKind::processing, *w, cores, id}});
        if (!rr.ok) throw EngineError("ws execution failed: " + rr.conflict);
        t.allocated_device = d;
        t.core_config = cores;
        t.reservations.push_back(rr.ids[0]);
        tasks_.set_state(id, TaskState::allocated);
        emit_event(MetricsEventType::lp_allocated, id, cores,
                   t.source_device != d ? 1 : 0, 0.0);
        ExecPlan ep;
        ep.proc_res = rr.ids[0];
        ep.proc_slot_end = w->end;
        exec_[id] = ep;
        // Steal-to-execution-start latency stands in for allocation time.
        emit_latency(MetricsEventType::latency_lp_set, (w->start - now_).seconds());
        Duration bench = cores == 4 ? cfg_.lp4_duration : cfg_.lp2_duration;
        Duration actual = actual_duration(bench, cfg_.noise.sigma_proc_lp,
                                          cfg_.noise.enabled, noise_rng_);
        schedule_execution(id, w->start, actual, w->end);
    }

    // ---- wrap-up -----------------------------------------------------------

    void settle_stragglers() {
        now_ = horizon_;
        for (const TaskRecord& t : tasks_.all()) {
            if (t.internal || t.priority != TaskPriority::low) continue;
            if (t.state == TaskState::completed) continue;
            if (t.state != TaskState::failed && t.state != TaskState::cancelled)
                tasks_.set_state(t.id, TaskState::failed);
            resolve_lp(t.id);
        }
        // Workstealer reallocation statistic: a preempted victim succeeded if
        // it was re-stolen and still completed in time.
        for (TaskId id : ws_victims_) {
            bool ok = tasks_.at(id).state == TaskState::completed;
            emit_event(MetricsEventType::realloc_decided, id, ok ? 1 : 0, 0, 0.0);
        }
    }

    // ---- plumbing ----------------------------------------------------------

    void emit(MetricsEventType type, std::uint64_t entity, std::int64_t a = 0,
              std::int64_t b = 0) {
        emit_event(type, entity, a, b, 0.0);
    }
    void emit_latency(MetricsEventType type, double seconds) {
        emit_event(type, 0, 0, 0, seconds);
    }
    void emit_event(MetricsEventType type, std::uint64_t entity, std::int64_t a,
                    std::int64_t b, double x) {
        metrics_.record(MetricsEvent{next_metric_id_++, type, entity, a, b, x});
    }

    void log_event(const Event& ev) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "t=%lld kind=%d entity=%llu",
                      static_cast<long long>(ev.time.us), static_cast<int>(ev.kind),
                      static_cast<unsigned long long>(ev.entity));
        if (event_log_.size() >= 64) event_log_.pop_front();
        event_log_.push_back(buf);
    }

    ScenarioConfig cfg_;
    TraceFile trace_;
    NetworkCalendar cal_;
    TaskTable tasks_;
    Scheduler sched_;
    WorkstealerState ws_;
    PollPolicy poll_policy_;
    std::mt19937_64 stagger_rng_;
    std::mt19937_64 noise_rng_;
    MetricsCollector metrics_;
    EventQueue events_;

    std::vector<FrameState> frames_;
    std::unordered_map<TaskId, std::uint64_t> hp_frame_;
    std::unordered_map<RequestId, RequestTrack> requests_;
    std::unordered_map<TaskId, ExecPlan> exec_;
    std::unordered_set<TaskId> ever_offloaded_;
    std::unordered_set<TaskId> resolved_;
    std::unordered_set<TaskId> ws_victims_;
    std::vector<WsChain> chains_;
    std::vector<TaskId> poll_agents_;
    std::deque<std::string> event_log_;

    SimTime now_;
    SimTime horizon_;
    std::uint64_t next_metric_id_{1};
    std::uint64_t synth_lp_{0};
};

// Convenience wrapper used by the CLI and tests.
inline MetricsReport run_scenario(const ScenarioConfig& cfg, const TraceFile& trace) {
    Simulation sim(cfg, trace);
    return sim.run();
}

}  // namespace edgesched
