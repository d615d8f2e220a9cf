// task.hpp: task and request records shared by schedulers, workstealers and
// the simulation engine.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "edgesched/reservation.hpp"
#include "edgesched/time.hpp"

namespace edgesched {

enum class TaskPriority : std::uint8_t { high, low };

enum class TaskState : std::uint8_t {
    pending,
    allocated,
    running,
    completed,
    preempted,
    failed,
    cancelled,
};

inline const char* to_string(TaskState s) {
    switch (s) {
        case TaskState::pending: return "pending";
        case TaskState::allocated: return "allocated";
        case TaskState::running: return "running";
        case TaskState::completed: return "completed";
        case TaskState::preempted: return "preempted";
        case TaskState::failed: return "failed";
        case TaskState::cancelled: return "cancelled";
    }
    return "?";
}

constexpr RequestId kNoRequest = 0;

// One unit of work. High-priority tasks run on their source device with one
// core; low-priority tasks run anywhere in a two- or four-core configuration.
struct TaskRecord {
    TaskId id{kNoTask};
    TaskPriority priority{TaskPriority::high};
    DeviceId source_device{0};
    std::optional<DeviceId> allocated_device;
    int core_config{1};
    SimTime arrival;
    SimTime deadline;
    RequestId request_id{kNoRequest};
    TaskState state{TaskState::pending};
    std::vector<ReservationId> reservations;

    // Artifact plumbing beyond the wire-level fields above.
    DeviceId input_location{0};   // where the input image currently lives
    bool internal{false};         // detector / poll agent, excluded from metrics
    bool completed_via_preemption{false};
    std::uint32_t epoch{0};       // bumped on preemption; stale events check it
    SimTime completion_time;

    bool live() const {
        return state == TaskState::allocated || state == TaskState::running;
    }
};

// The 1..4 low-priority DNN tasks spawned by one completed high-priority
// task. Complete only if every member completes before the shared deadline.
struct LowPriorityRequest {
    RequestId id{kNoRequest};
    DeviceId source_device{0};
    std::vector<TaskId> tasks;
    SimTime deadline;
    TaskId spawned_by{kNoTask};
};

class TaskTable {
  public:
    TaskRecord& create(TaskPriority prio, DeviceId source, SimTime arrival,
                       SimTime deadline, RequestId request = kNoRequest) {
        if (deadline <= arrival) throw std::invalid_argument("task deadline must follow arrival");
        TaskRecord rec;
        rec.id = next_id_++;
        rec.priority = prio;
        rec.source_device = source;
        rec.input_location = source;
        rec.arrival = arrival;
        rec.deadline = deadline;
        rec.request_id = request;
        rec.core_config = prio == TaskPriority::high ? 1 : 2;
        tasks_.push_back(rec);
        return tasks_.back();
    }

    TaskRecord& at(TaskId id) {
        if (id == kNoTask || id > tasks_.size()) throw std::out_of_range("unknown task id");
        return tasks_[id - 1];
    }
    const TaskRecord& at(TaskId id) const {
        return const_cast<TaskTable*>(this)->at(id);
    }
    bool contains(TaskId id) const { return id != kNoTask && id <= tasks_.size(); }
    std::size_t size() const { return tasks_.size(); }
    const std::deque<TaskRecord>& all() const { return tasks_; }

    LowPriorityRequest& create_request(DeviceId source, SimTime deadline, TaskId spawned_by) {
        LowPriorityRequest req;
        req.id = next_request_++;
        req.source_device = source;
        req.deadline = deadline;
        req.spawned_by = spawned_by;
        requests_.push_back(req);
        return requests_.back();
    }
    LowPriorityRequest& request(RequestId id) {
        if (id == kNoRequest || id > requests_.size())
            throw std::out_of_range("unknown request id");
        return requests_[id - 1];
    }
    const LowPriorityRequest& request(RequestId id) const {
        return const_cast<TaskTable*>(this)->request(id);
    }
    const std::deque<LowPriorityRequest>& all_requests() const { return requests_; }

    // All state changes go through here so the per-device live count stays
    // consistent. allocated_device must be set before entering a live state.
    void set_state(TaskId id, TaskState next) {
        TaskRecord& t = at(id);
        adjust_live(t, -1);
        t.state = next;
        adjust_live(t, +1);
    }

    // Count of live (allocated or running) low-priority tasks per device; the
    // even-distribution key of the low-priority scheduler.
    int live_lp_on(DeviceId d) const {
        auto it = live_lp_.find(d);
        return it == live_lp_.end() ? 0 : it->second;
    }

  private:
    void adjust_live(const TaskRecord& t, int delta) {
        if (t.priority == TaskPriority::low && t.live() && t.allocated_device)
            live_lp_[*t.allocated_device] += delta;
    }

    std::deque<TaskRecord> tasks_;
    std::deque<LowPriorityRequest> requests_;
    std::map<DeviceId, int> live_lp_;
    TaskId next_id_{1};
    RequestId next_request_{1};
};

}  // namespace edgesched
