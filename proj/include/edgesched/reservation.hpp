// reservation.hpp: time-slotted reservations on the shared link and device cores.
#pragma once

#include <cstdint>
#include <string>

#include "edgesched/time.hpp"

namespace edgesched {

using TaskId = std::uint64_t;
using ReservationId = std::uint64_t;
using RequestId = std::uint64_t;
using DeviceId = int;

constexpr TaskId kNoTask = 0;  // task ids start at 1

enum class ReservationKind : std::uint8_t {
    alloc_msg_hp,    // controller -> device, high-priority placement notice
    alloc_msg_lp,    // controller -> device, low-priority placement notice
    image_transfer,  // device -> device input image for an offloaded task
    state_update,    // device -> controller result/status message
    preemption_msg,  // controller -> device halt order
    poll_msg,        // workstealer poll round-trip
    processing,      // cores on one device
};

inline const char* to_string(ReservationKind k) {
    switch (k) {
        case ReservationKind::alloc_msg_hp: return "alloc_msg_hp";
        case ReservationKind::alloc_msg_lp: return "alloc_msg_lp";
        case ReservationKind::image_transfer: return "image_transfer";
        case ReservationKind::state_update: return "state_update";
        case ReservationKind::preemption_msg: return "preemption_msg";
        case ReservationKind::poll_msg: return "poll_msg";
        case ReservationKind::processing: return "processing";
    }
    return "?";
}

// The shared wireless link or one device's core pool.
struct Resource {
    DeviceId device{-1};  // -1 designates the link

    static constexpr Resource link() { return Resource{-1}; }
    static constexpr Resource on_device(DeviceId d) { return Resource{d}; }
    constexpr bool is_link() const { return device < 0; }
    constexpr bool operator==(const Resource&) const = default;
};

// One variable-length time slot on one resource, owned by a task.
// Link slots carry cores == 0; processing slots carry 1, 2 or 4 cores.
struct Reservation {
    ReservationId id{0};
    Resource resource{};
    ReservationKind kind{ReservationKind::processing};
    Interval interval{};
    int cores{0};
    TaskId owner{kNoTask};

    bool well_formed() const {
        if (!interval.valid()) return false;
        if (resource.is_link())
            return cores == 0 && kind != ReservationKind::processing;
        return (cores == 1 || cores == 2 || cores == 4) &&
               kind == ReservationKind::processing;
    }
};

}  // namespace edgesched
