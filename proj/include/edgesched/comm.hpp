// comm.hpp: link throughput model and per-message slot sizing.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "edgesched/reservation.hpp"
#include "edgesched/time.hpp"

namespace edgesched {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Benchmarked maximum message sizes, bytes.
constexpr std::int64_t kHpAllocMsgBytes = 700;
constexpr std::int64_t kLpAllocMsgBytes = 2250;
constexpr std::int64_t kStateUpdateBytes = 550;
constexpr std::int64_t kPreemptionMsgBytes = 550;
constexpr std::int64_t kImageTransferBytes = 21500;

// Link timing parameters. Every link slot is padded with the measured
// network jitter so in-slot variance does not spill into the next slot.
struct CommTiming {
    double throughput_Bps{16.3e6};
    Duration jitter_padding{msec(5)};
    std::map<ReservationKind, std::int64_t> message_sizes{
        {ReservationKind::alloc_msg_hp, kHpAllocMsgBytes},
        {ReservationKind::alloc_msg_lp, kLpAllocMsgBytes},
        {ReservationKind::state_update, kStateUpdateBytes},
        {ReservationKind::preemption_msg, kPreemptionMsgBytes},
        {ReservationKind::poll_msg, kStateUpdateBytes},
        {ReservationKind::image_transfer, kImageTransferBytes},
    };

    void validate() const {
        if (throughput_Bps <= 0.0)
            throw ConfigError("comm: throughput must be positive");
        if (jitter_padding.us < 0)
            throw ConfigError("comm: jitter padding must be non-negative");
        for (const auto& [kind, size] : message_sizes)
            if (size <= 0)
                throw ConfigError(std::string("comm: message size must be positive for ") +
                                  to_string(kind));
    }
};

// Raw transfer time of `bytes` at the configured throughput, rounded up to
// the 1us grid.
inline Duration transfer_time(std::int64_t bytes, const CommTiming& timing) {
    const double us = static_cast<double>(bytes) * 1e6 / timing.throughput_Bps;
    return Duration{static_cast<std::int64_t>(std::ceil(us))};
}

// Slot length for one message kind: transfer time plus jitter padding.
inline Duration link_slot_duration(ReservationKind kind, const CommTiming& timing) {
    auto it = timing.message_sizes.find(kind);
    if (it == timing.message_sizes.end())
        throw ConfigError(std::string("comm: no message size configured for ") +
                          to_string(kind));
    Duration d = transfer_time(it->second, timing) + timing.jitter_padding;
    if (!d.positive())
        throw ConfigError("comm: computed slot duration is not positive");
    return d;
}

}  // namespace edgesched
