// workstealer.hpp: queue and polling primitives for the two workstealing
// baselines. A centralized stealer posts every generated task to a controller
// queue; a decentralized stealer keeps per-device queues and polls peers in a
// freshly drawn random order each round. The engine drives both.
#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "edgesched/calendar.hpp"
#include "edgesched/reservation.hpp"
#include "edgesched/task.hpp"

namespace edgesched {

struct QueueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FIFO of low-priority task ids. Membership is tracked across all queues of
// one run: a task sits in at most one queue at any instant.
class StealQueue {
  public:
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    void push_back(TaskId id) { entries_.push_back(id); }
    TaskId pop_front() {
        TaskId id = entries_.front();
        entries_.pop_front();
        return id;
    }

  private:
    std::deque<TaskId> entries_;
};

// Victim polling order: a seeded permutation of the other devices, re-drawn
// for every poll round.
class PollPolicy {
  public:
    explicit PollPolicy(std::uint64_t seed) : rng_(seed) {}

    std::vector<DeviceId> draw_order(DeviceId self, int device_count) {
        std::vector<DeviceId> order;
        order.reserve(static_cast<std::size_t>(device_count) - 1);
        for (DeviceId d = 0; d < device_count; ++d)
            if (d != self) order.push_back(d);
        // Fisher-Yates with the policy stream.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng_() % i);
            std::swap(order[i - 1], order[j]);
        }
        return order;
    }

  private:
    std::mt19937_64 rng_;
};

// Queue state for one run: the controller queue (centralized mode) plus one
// queue per device (decentralized mode).
class WorkstealerState {
  public:
    explicit WorkstealerState(int device_count)
        : device_queues_(static_cast<std::size_t>(device_count)) {}

    StealQueue& controller_queue() { return controller_; }
    StealQueue& device_queue(DeviceId d) {
        return device_queues_.at(static_cast<std::size_t>(d));
    }

    void enqueue_controller(TaskId id) {
        claim(id);
        controller_.push_back(id);
    }
    void enqueue_device(DeviceId d, TaskId id) {
        claim(id);
        device_queue(d).push_back(id);
    }

    std::optional<TaskId> pop_controller() { return pop(controller_); }
    std::optional<TaskId> pop_device(DeviceId d) { return pop(device_queue(d)); }

    bool queued(TaskId id) const { return members_.count(id) > 0; }

  private:
    void claim(TaskId id) {
        if (!members_.insert(id).second)
            throw QueueError("task " + std::to_string(id) + " already queued");
    }
    std::optional<TaskId> pop(StealQueue& q) {
        if (q.empty()) return std::nullopt;
        TaskId id = q.pop_front();
        members_.erase(id);
        return id;
    }

    StealQueue controller_;
    std::vector<StealQueue> device_queues_;
    std::unordered_set<TaskId> members_;
};

// Farthest-deadline live low-priority task whose reservations conflict with
// `window` on `device`; the same eviction rule the scheduler uses. Ties break
// to later arrival, then larger id.
inline std::optional<TaskId> ws_preemption_victim(const NetworkCalendar& cal,
                                                  const TaskTable& tasks, DeviceId device,
                                                  Interval window) {
    std::optional<TaskId> best;
    for (TaskId id : cal.conflicting_tasks(device, window, 1)) {
        const TaskRecord& t = tasks.at(id);
        if (t.priority != TaskPriority::low || !t.live()) continue;
        if (!best) {
            best = id;
            continue;
        }
        const TaskRecord& b = tasks.at(*best);
        if (std::tuple(t.deadline.us, t.arrival.us, t.id) >
            std::tuple(b.deadline.us, b.arrival.us, b.id))
            best = id;
    }
    return best;
}

}  // namespace edgesched
