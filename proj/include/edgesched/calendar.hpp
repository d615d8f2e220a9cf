// calendar.hpp: time-slotted reservation ledger for the shared link and the
// per-device core pools. All scheduler feasibility questions bottom out here.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgesched/comm.hpp"
#include "edgesched/reservation.hpp"
#include "edgesched/time.hpp"

namespace edgesched {

struct CalendarError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Result of a capacity probe over one window.
struct FitProbe {
    bool fits{false};
    int tasks_scanned{0};
};

// Result of an atomic batch reservation.
struct ReserveResult {
    bool ok{false};
    std::vector<ReservationId> ids;
    std::string conflict;  // names the first conflicting pair when !ok
};

class NetworkCalendar {
  public:
    explicit NetworkCalendar(int device_count, int device_capacity = 4)
        : devices_(static_cast<std::size_t>(device_count)),
          capacity_(device_capacity) {
        if (device_count <= 0 || device_capacity <= 0)
            throw ConfigError("calendar: device count and capacity must be positive");
    }

    int device_count() const { return static_cast<int>(devices_.size()); }
    int device_capacity() const { return capacity_; }
    const std::vector<Reservation>& link() const { return link_; }
    const std::vector<Reservation>& device(DeviceId d) const { return devices_.at(checked(d)); }

    // Earliest gap of at least `duration` in the link sequence starting at or
    // after `not_before`, ending by `deadline`. Absence is a valid result.
    std::optional<Interval> earliest_link_window(Duration duration, SimTime not_before,
                                                 SimTime deadline) const {
        if (!duration.positive() || not_before > deadline) return std::nullopt;
        SimTime cursor = not_before;
        for (std::size_t i = first_candidate(link_, not_before); i < link_.size(); ++i) {
            const Reservation& r = link_[i];
            if (r.interval.end <= cursor) continue;
            if (r.interval.start.us - cursor.us >= duration.us) break;  // gap found
            cursor = max(cursor, r.interval.end);
        }
        Interval w{cursor, cursor + duration};
        if (w.end > deadline) return std::nullopt;
        return w;
    }

    // Earliest [s, s+duration) on `device` with s >= earliest_start and
    // s+duration <= deadline such that existing usage plus `cores` stays within
    // capacity at every instant. Candidate starts are earliest_start and the
    // end times of existing reservations; occupancy is piecewise constant, so
    // intermediate starts cannot do better.
    std::optional<Interval> find_processing_window(DeviceId device, int cores,
                                                   Duration duration, SimTime earliest_start,
                                                   SimTime deadline,
                                                   int* probes = nullptr) const {
        if (!duration.positive() || cores <= 0) return std::nullopt;
        const auto& vec = devices_.at(checked(device));
        std::vector<SimTime> starts{earliest_start};
        for (const Reservation& r : vec)
            if (r.interval.end > earliest_start) starts.push_back(r.interval.end);
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        for (SimTime s : starts) {
            Interval w{s, s + duration};
            if (w.end > deadline) break;  // ascending candidates: later ones only worse
            if (probes) ++(*probes);
            if (probe_device_window(device, w, cores).fits) return w;
        }
        return std::nullopt;
    }

    // Capacity probe: would `cores` more fit on `device` throughout `window`,
    // ignoring reservations owned by `exclude` and the one listed in
    // `exclude_res` (0 = none)?
    FitProbe probe_device_window(DeviceId device, Interval window, int cores,
                                 TaskId exclude = kNoTask,
                                 ReservationId exclude_res = 0) const {
        const auto& vec = devices_.at(checked(device));
        std::vector<const Reservation*> overlap;
        int scanned = 0;
        for (std::size_t i = first_candidate(vec, window.start); i < vec.size(); ++i) {
            const Reservation& r = vec[i];
            if (r.interval.start >= window.end) break;
            if (!r.interval.overlaps(window)) continue;
            ++scanned;
            if (r.owner == exclude || r.id == exclude_res) continue;
            overlap.push_back(&r);
        }
        return FitProbe{max_usage(overlap, window) + cores <= capacity_, scanned};
    }

    // Owners of processing reservations on `device` overlapping `window` whose
    // removal would repair at least one instant where usage + cores_needed
    // exceeds capacity. Ordered by first overlapping reservation start, then
    // owner id.
    std::vector<TaskId> conflicting_tasks(DeviceId device, Interval window,
                                          int cores_needed, int* scanned = nullptr) const {
        const auto& vec = devices_.at(checked(device));
        std::vector<const Reservation*> overlap;
        for (std::size_t i = first_candidate(vec, window.start); i < vec.size(); ++i) {
            const Reservation& r = vec[i];
            if (r.interval.start >= window.end) break;
            if (r.interval.overlaps(window)) overlap.push_back(&r);
        }
        if (scanned) *scanned += static_cast<int>(overlap.size());

        // Instants where the usage profile can change inside the window.
        std::vector<SimTime> points{window.start};
        for (const Reservation* r : overlap) {
            if (r->interval.start > window.start && r->interval.start < window.end)
                points.push_back(r->interval.start);
            if (r->interval.end > window.start && r->interval.end < window.end)
                points.push_back(r->interval.end);
        }
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());

        struct Candidate {
            SimTime first_start;
            TaskId owner;
        };
        std::vector<Candidate> out;
        for (const Reservation* r : overlap) {
            bool seen = false;
            for (auto& c : out)
                if (c.owner == r->owner) {
                    c.first_start = min(c.first_start, r->interval.start);
                    seen = true;
                }
            if (seen) continue;
            bool helps = false;
            for (SimTime t : points) {
                int usage = 0, own = 0;
                for (const Reservation* o : overlap) {
                    if (!o->interval.contains(t)) continue;
                    usage += o->cores;
                    if (o->owner == r->owner) own += o->cores;
                }
                if (usage + cores_needed > capacity_ &&
                    usage - own + cores_needed <= capacity_) {
                    helps = true;
                    break;
                }
            }
            if (helps) out.push_back({r->interval.start, r->owner});
        }
        std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
            if (a.first_start != b.first_start) return a.first_start < b.first_start;
            return a.owner < b.owner;
        });
        std::vector<TaskId> ids;
        ids.reserve(out.size());
        for (const auto& c : out) ids.push_back(c.owner);
        return ids;
    }

    // Atomic batch insert: either every reservation is committed or none is.
    // Reservation ids are assigned by the calendar.
    ReserveResult reserve(std::vector<Reservation> batch) {
        ReserveResult res;
        // Validate each entry against the current calendar and the rest of
        // the batch before touching any state.
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Reservation& r = batch[i];
            if (!r.well_formed()) {
                res.conflict = "batch entry " + std::to_string(i) + " malformed";
                return res;
            }
            if (!r.resource.is_link()) checked(r.resource.device);
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const Reservation& r = batch[i];
            if (r.resource.is_link()) {
                if (auto hit = link_overlap(r.interval)) {
                    res.conflict = "link slot " + to_string(r.interval) +
                                   " overlaps reservation " + std::to_string(*hit);
                    return res;
                }
                for (std::size_t j = 0; j < i; ++j)
                    if (batch[j].resource.is_link() &&
                        batch[j].interval.overlaps(r.interval)) {
                        res.conflict = "batch entries " + std::to_string(j) + " and " +
                                       std::to_string(i) + " overlap on the link";
                        return res;
                    }
            } else {
                int extra = 0;
                for (std::size_t j = 0; j < i; ++j)
                    if (batch[j].resource == r.resource &&
                        batch[j].interval.overlaps(r.interval))
                        extra += batch[j].cores;  // conservative within the batch window
                if (!probe_device_window(r.resource.device, r.interval, r.cores + extra).fits) {
                    res.conflict = "device " + std::to_string(r.resource.device) +
                                   " over capacity for " + to_string(r.interval) +
                                   saturating_note(r.resource.device, r.interval);
                    return res;
                }
            }
        }
        for (Reservation& r : batch) {
            r.id = next_id_++;
            insert_sorted(r.resource.is_link() ? link_ : devices_[checked(r.resource.device)], r);
            locate_[r.id] = Loc{r.resource.device, r.interval.start};
            owner_index_[r.owner].push_back(r.id);
            res.ids.push_back(r.id);
        }
        res.ok = true;
        return res;
    }

    // Drop all of `task`'s reservations still open at `from`: future slots are
    // removed, in-progress slots truncated to [start, from). Returns the
    // number of reservations affected.
    int release_task(TaskId task, SimTime from) {
        auto it = owner_index_.find(task);
        if (it == owner_index_.end()) throw CalendarError("release of unknown task");
        int affected = 0;
        std::vector<ReservationId> keep;
        for (ReservationId id : it->second) {
            Reservation* r = find(id);
            if (!r || r->interval.end <= from) {
                if (r) keep.push_back(id);
                continue;
            }
            ++affected;
            if (r->interval.start < from) {
                r->interval.end = from;  // truncate the in-progress portion
                keep.push_back(id);
            } else {
                erase(id);
            }
        }
        it->second = std::move(keep);
        return affected;
    }

    // Shorten one reservation (early completion under runtime variance).
    void truncate_reservation(ReservationId id, SimTime new_end) {
        Reservation* r = find(id);
        if (!r) throw CalendarError("truncate of unknown reservation");
        if (new_end <= r->interval.start || new_end > r->interval.end)
            throw CalendarError("truncate outside reservation bounds");
        r->interval.end = new_end;
    }

    // In-place reshape of a processing slot (the upgrade pass). Validates the
    // new footprint against everything else first.
    void resize_processing(ReservationId id, int new_cores, SimTime new_end) {
        Reservation* r = find(id);
        if (!r || r->resource.is_link())
            throw CalendarError("resize of unknown processing reservation");
        Interval shape{r->interval.start, new_end};
        if (!shape.valid()) throw CalendarError("resize to empty interval");
        if (!probe_device_window(r->resource.device, shape, new_cores, kNoTask, id).fits)
            throw CalendarError("resize exceeds device capacity");
        r->interval.end = new_end;
        r->cores = new_cores;
        max_proc_len_ = std::max(max_proc_len_, shape.length());
    }

    // Remove one reservation outright.
    void remove(ReservationId id) {
        Reservation* r = find(id);
        if (!r) throw CalendarError("remove of unknown reservation");
        auto oi = owner_index_.find(r->owner);
        if (oi != owner_index_.end())
            oi->second.erase(std::remove(oi->second.begin(), oi->second.end(), id),
                             oi->second.end());
        erase(id);
    }

    // Put a task's reservations back exactly as captured in `snapshot`
    // (preemption rollback). Original ids are kept.
    void restore(TaskId task, const std::vector<Reservation>& snapshot) {
        auto oi = owner_index_.find(task);
        if (oi != owner_index_.end()) {
            std::vector<ReservationId> current = oi->second;
            for (ReservationId id : current) erase(id);
            oi->second.clear();
        }
        for (const Reservation& r : snapshot) {
            insert_sorted(r.resource.is_link() ? link_ : devices_[checked(r.resource.device)], r);
            locate_[r.id] = Loc{r.resource.device, r.interval.start};
            owner_index_[task].push_back(r.id);
        }
    }

    const Reservation* lookup(ReservationId id) const {
        return const_cast<NetworkCalendar*>(this)->find(id);
    }

    // Ends of processing reservations in (after, until], ascending, distinct.
    // These are the candidate time points of the low-priority scheduler.
    std::vector<SimTime> processing_end_points(SimTime after, SimTime until) const {
        std::vector<SimTime> pts;
        for (const auto& vec : devices_)
            for (std::size_t i = first_candidate(vec, after); i < vec.size(); ++i) {
                const Reservation& r = vec[i];
                if (r.interval.start >= until) break;
                if (r.interval.end > after && r.interval.end <= until)
                    pts.push_back(r.interval.end);
            }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

    // Occupied cores on `device` at instant t.
    int usage_at(DeviceId device, SimTime t) const {
        const auto& vec = devices_.at(checked(device));
        int usage = 0;
        for (std::size_t i = first_candidate(vec, t); i < vec.size(); ++i) {
            if (vec[i].interval.start > t) break;
            if (vec[i].interval.contains(t)) usage += vec[i].cores;
        }
        return usage;
    }

    // Full structural audit; throws CalendarError on the first violation.
    void check_invariants() const {
        for (std::size_t i = 1; i < link_.size(); ++i)
            if (link_[i - 1].interval.end > link_[i].interval.start)
                throw CalendarError("link reservations overlap: " +
                                    std::to_string(link_[i - 1].id) + " and " +
                                    std::to_string(link_[i].id));
        for (const Reservation& r : link_)
            if (!r.well_formed()) throw CalendarError("malformed link reservation");
        for (DeviceId d = 0; d < device_count(); ++d) {
            const auto& vec = devices_[static_cast<std::size_t>(d)];
            for (const Reservation& r : vec) {
                if (!r.well_formed() || r.resource.device != d)
                    throw CalendarError("malformed device reservation");
                // Capacity must hold at every usage-change boundary.
                for (SimTime t : {r.interval.start}) {
                    if (usage_at(d, t) > capacity_)
                        throw CalendarError("device " + std::to_string(d) +
                                            " over capacity at " + to_string(t));
                }
            }
        }
    }

    // Deep equality, used by atomicity tests.
    bool identical_to(const NetworkCalendar& o) const {
        auto eq = [](const Reservation& a, const Reservation& b) {
            return a.id == b.id && a.resource == b.resource && a.kind == b.kind &&
                   a.interval == b.interval && a.cores == b.cores && a.owner == b.owner;
        };
        if (link_.size() != o.link_.size() || devices_.size() != o.devices_.size())
            return false;
        for (std::size_t i = 0; i < link_.size(); ++i)
            if (!eq(link_[i], o.link_[i])) return false;
        for (std::size_t d = 0; d < devices_.size(); ++d) {
            if (devices_[d].size() != o.devices_[d].size()) return false;
            for (std::size_t i = 0; i < devices_[d].size(); ++i)
                if (!eq(devices_[d][i], o.devices_[d][i])) return false;
        }
        return true;
    }

  private:
    struct Loc {
        DeviceId device;  // -1 = link
        SimTime start;
    };

    std::size_t checked(DeviceId d) const {
        if (d < 0 || d >= device_count())
            throw CalendarError("unknown device " + std::to_string(d));
        return static_cast<std::size_t>(d);
    }

    // Index of the first reservation that could overlap an interval starting
    // at `t`, given sorted-by-start storage and the longest slot seen so far
    // on that resource.
    std::size_t first_candidate(const std::vector<Reservation>& vec, SimTime t) const {
        Duration bound = (&vec == &link_) ? max_link_len_ : max_proc_len_;
        SimTime floor{t.us - bound.us};
        if (floor.us < 0) floor = SimTime::zero();
        auto it = std::lower_bound(vec.begin(), vec.end(), floor,
                                   [](const Reservation& r, SimTime v) {
                                       return r.interval.start < v;
                                   });
        return static_cast<std::size_t>(it - vec.begin());
    }

    static int max_usage(const std::vector<const Reservation*>& overlap, Interval window) {
        int best = 0;
        std::vector<SimTime> points{window.start};
        for (const Reservation* r : overlap)
            if (r->interval.start > window.start && r->interval.start < window.end)
                points.push_back(r->interval.start);
        for (SimTime t : points) {
            int usage = 0;
            for (const Reservation* r : overlap)
                if (r->interval.contains(t)) usage += r->cores;
            best = std::max(best, usage);
        }
        return best;
    }

    std::optional<ReservationId> link_overlap(Interval w) const {
        for (std::size_t i = first_candidate(link_, w.start); i < link_.size(); ++i) {
            if (link_[i].interval.start >= w.end) break;
            if (link_[i].interval.overlaps(w)) return link_[i].id;
        }
        return std::nullopt;
    }

    std::string saturating_note(DeviceId d, Interval w) const {
        for (const Reservation& r : devices_[static_cast<std::size_t>(d)])
            if (r.interval.overlaps(w))
                return " (existing reservation " + std::to_string(r.id) + ")";
        return "";
    }

    void insert_sorted(std::vector<Reservation>& vec, const Reservation& r) {
        auto it = std::lower_bound(vec.begin(), vec.end(), r,
                                   [](const Reservation& a, const Reservation& b) {
                                       if (a.interval.start != b.interval.start)
                                           return a.interval.start < b.interval.start;
                                       return a.id < b.id;
                                   });
        vec.insert(it, r);
        Duration& bound = r.resource.is_link() ? max_link_len_ : max_proc_len_;
        bound = std::max(bound, r.interval.length());
    }

    Reservation* find(ReservationId id) {
        auto it = locate_.find(id);
        if (it == locate_.end()) return nullptr;
        auto& vec = it->second.device < 0 ? link_ : devices_[checked(it->second.device)];
        auto lo = std::lower_bound(vec.begin(), vec.end(), it->second.start,
                                   [](const Reservation& r, SimTime v) {
                                       return r.interval.start < v;
                                   });
        for (; lo != vec.end() && lo->interval.start == it->second.start; ++lo)
            if (lo->id == id) return &*lo;
        return nullptr;
    }

    void erase(ReservationId id) {
        auto it = locate_.find(id);
        if (it == locate_.end()) return;
        auto& vec = it->second.device < 0 ? link_ : devices_[checked(it->second.device)];
        for (auto i = vec.begin(); i != vec.end(); ++i)
            if (i->id == id) {
                vec.erase(i);
                break;
            }
        locate_.erase(it);
    }

    std::vector<Reservation> link_;
    std::vector<std::vector<Reservation>> devices_;
    int capacity_;
    Duration max_link_len_{0};
    Duration max_proc_len_{0};
    ReservationId next_id_{1};
    std::unordered_map<ReservationId, Loc> locate_;
    std::unordered_map<TaskId, std::vector<ReservationId>> owner_index_;
};

}  // namespace edgesched
