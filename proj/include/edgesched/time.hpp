// time.hpp: integer-microsecond simulation clock types.
#pragma once

#include <cassert>
#include <cstdint>
#include <limits>
#include <string>

namespace edgesched {

// Length of a time interval, in whole microseconds. May be negative as an
// intermediate (e.g. deadline slack); reservations require positive lengths.
struct Duration {
    std::int64_t us{0};

    constexpr bool positive() const { return us > 0; }
    constexpr auto operator<=>(const Duration&) const = default;

    constexpr Duration operator+(Duration o) const { return {us + o.us}; }
    constexpr Duration operator-(Duration o) const { return {us - o.us}; }
    constexpr Duration operator*(std::int64_t k) const { return {us * k}; }

    double seconds() const { return static_cast<double>(us) / 1e6; }
};

constexpr Duration usec(std::int64_t n) { return {n}; }
constexpr Duration msec(std::int64_t n) { return {n * 1000}; }
constexpr Duration sec(std::int64_t n) { return {n * 1000000}; }

// Instant in microseconds since the simulation epoch. Never negative.
struct SimTime {
    std::int64_t us{0};

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(Duration d) const {
        assert(us + d.us >= 0);
        return {us + d.us};
    }
    constexpr Duration operator-(SimTime o) const { return {us - o.us}; }

    static constexpr SimTime zero() { return {0}; }
    // Far-future sentinel used as "no deadline"; safe to add small durations to.
    static constexpr SimTime horizon() {
        return {std::numeric_limits<std::int64_t>::max() / 4};
    }

    double seconds() const { return static_cast<double>(us) / 1e6; }
};

constexpr SimTime at_usec(std::int64_t n) { return {n}; }

inline SimTime max(SimTime a, SimTime b) { return a < b ? b : a; }
inline SimTime min(SimTime a, SimTime b) { return a < b ? a : b; }

// Half-open interval [start, end).
struct Interval {
    SimTime start;
    SimTime end;

    constexpr bool valid() const { return start < end; }
    constexpr Duration length() const { return end - start; }
    constexpr bool overlaps(const Interval& o) const {
        return start < o.end && o.start < end;
    }
    constexpr bool contains(SimTime t) const { return start <= t && t < end; }
    constexpr bool operator==(const Interval&) const = default;
};

inline std::string to_string(SimTime t) { return std::to_string(t.us) + "us"; }
inline std::string to_string(Interval w) {
    return "[" + std::to_string(w.start.us) + "," + std::to_string(w.end.us) + ")";
}

}  // namespace edgesched
