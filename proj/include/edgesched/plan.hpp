// plan.hpp: allocation plans and scheduler outcome types.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgesched/reservation.hpp"
#include "edgesched/task.hpp"
#include "edgesched/time.hpp"

namespace edgesched {

// The slot set backing one task placement: an allocation message, an optional
// input image transfer (offloaded tasks only), a processing slot and a state
// update, in that time order, all before the task deadline.
struct AllocationPlan {
    TaskId task_id{kNoTask};
    bool offloaded{false};
    Interval alloc_msg;
    std::optional<Interval> image_transfer;
    Interval processing;
    Interval state_update;
    DeviceId device{0};
    int cores{0};
    std::vector<ReservationId> committed;       // filled in commit order
    ReservationId processing_res{0};            // the processing slot's id

    bool ordered() const {
        SimTime cursor = alloc_msg.end;
        if (!alloc_msg.valid()) return false;
        if (image_transfer) {
            if (!image_transfer->valid() || image_transfer->start < cursor) return false;
            cursor = image_transfer->end;
        }
        if (!processing.valid() || processing.start < cursor) return false;
        if (!state_update.valid() || state_update.start < processing.end) return false;
        return true;
    }
    bool meets(SimTime deadline) const { return state_update.end <= deadline; }
};

struct ReallocOutcome {
    bool reallocated{false};
    std::optional<AllocationPlan> plan;
    double decision_wall_sec{0.0};  // preemption instant to placement decision

    static ReallocOutcome cancelled() { return {}; }
    static ReallocOutcome success(AllocationPlan p) { return {true, std::move(p), 0.0}; }
};

struct HpOutcome {
    enum class Kind { allocated, rejected, preempted_and_allocated };

    Kind kind{Kind::rejected};
    std::optional<AllocationPlan> plan;
    TaskId victim{kNoTask};
    int victim_config{0};  // victim core configuration at the preemption instant
    std::optional<ReallocOutcome> victim_realloc;
    std::string reject_reason;

    bool allocated() const { return kind != Kind::rejected; }
    static HpOutcome rejected(std::string why) {
        HpOutcome o;
        o.reject_reason = std::move(why);
        return o;
    }
};

// Per-task result of a low-priority set allocation.
struct LpTaskOutcome {
    TaskId task_id{kNoTask};
    bool allocated{false};
    std::optional<AllocationPlan> plan;
};

// Instrumentation captured during the most recent scheduler invocation.
struct CostCounters {
    std::int64_t tasks_scanned{0};
    std::int64_t windows_probed{0};
    double wall_time_sec{0.0};
};

}  // namespace edgesched
