// config.hpp: all scenario constants in one document, with JSON load/save for
// the CLI. Defaults follow the benchmarked system: 0.98s high-priority /
// 16.862s two-core / 11.611s four-core stages, ~18.86s frame period, 16.3 MB/s
// shared link.
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "edgesched/comm.hpp"
#include "edgesched/time.hpp"

namespace edgesched {

enum class Algorithm { scheduler, centralized_ws, decentralized_ws };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::scheduler: return "scheduler";
        case Algorithm::centralized_ws: return "centralized_ws";
        case Algorithm::decentralized_ws: return "decentralized_ws";
    }
    return "?";
}

inline bool parse_algorithm(const std::string& name, Algorithm& out) {
    for (Algorithm a : {Algorithm::scheduler, Algorithm::centralized_ws,
                        Algorithm::decentralized_ws})
        if (name == to_string(a)) {
            out = a;
            return true;
        }
    return false;
}

// Runtime-variance model. Processing noise is specified per task class so
// DNN-stage deviations do not swamp the 0.98s stage; each sigma is sized
// against its class padding (low-priority sigma equals the padding, putting
// the one-sided violation tail at ~16%).
struct NoiseConfig {
    bool enabled{false};
    Duration sigma_proc_hp{msec(2)};
    Duration sigma_proc_lp{usec(400000)};
    Duration sigma_comm{msec(2)};
};

struct ScenarioConfig {
    int devices{4};
    int cores_per_device{4};
    Duration frame_period{usec(18860000)};
    Duration detector_duration{msec(100)};
    Duration hp_duration{usec(980000)};
    Duration lp2_duration{usec(16862000)};
    Duration lp4_duration{usec(11611000)};
    // The frame period is the minimum viable completion time of the
    // detector + high-priority + two-core chain; the paddings are sized so
    // that chain still fits inside one period with the message slots.
    Duration hp_padding{msec(5)};
    Duration lp_padding{usec(400000)};
    Duration hp_deadline_budget{sec(1)};
    Duration stagger_offset_max{sec(1)};
    CommTiming comm{};
    Algorithm algorithm{Algorithm::scheduler};
    bool preemption{true};
    NoiseConfig noise{};
    Duration poll_interval{msec(100)};
    std::uint64_t seed{2};
    std::uint64_t stagger_seed{0};  // 0: derived from seed
    std::uint64_t noise_seed{0};    // 0: derived from seed
    std::uint64_t poll_seed{0};     // 0: derived from seed

    Duration hp_slot() const { return hp_duration + hp_padding; }
    Duration lp2_slot() const { return lp2_duration + lp_padding; }
    Duration lp4_slot() const { return lp4_duration + lp_padding; }

    void validate() const {
        comm.validate();
        if (devices <= 0 || cores_per_device <= 0)
            throw ConfigError("config: devices and cores must be positive");
        for (Duration d : {frame_period, detector_duration, hp_duration, lp2_duration,
                           lp4_duration, hp_deadline_budget, poll_interval})
            if (!d.positive()) throw ConfigError("config: durations must be positive");
        if (hp_padding.us < 0 || lp_padding.us < 0 || stagger_offset_max.us < 0)
            throw ConfigError("config: paddings and offsets must be non-negative");
        if (frame_period.us <= detector_duration.us + hp_deadline_budget.us)
            throw ConfigError(
                "config: frame period must exceed detector duration plus hp budget");
        if (noise.enabled &&
            (noise.sigma_proc_hp.us < 0 || noise.sigma_proc_lp.us < 0 ||
             noise.sigma_comm.us < 0))
            throw ConfigError("config: noise sigmas must be non-negative");
    }
};

// splitmix64; used to derive independent stream seeds from the master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t effective_stagger_seed(const ScenarioConfig& c) {
    return c.stagger_seed ? c.stagger_seed : mix_seed(c.seed, 1);
}
inline std::uint64_t effective_noise_seed(const ScenarioConfig& c) {
    return c.noise_seed ? c.noise_seed : mix_seed(c.seed, 2);
}
inline std::uint64_t effective_poll_seed(const ScenarioConfig& c) {
    return c.poll_seed ? c.poll_seed : mix_seed(c.seed, 3);
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["devices"] = c.devices;
    j["cores_per_device"] = c.cores_per_device;
    j["frame_period_us"] = c.frame_period.us;
    j["detector_duration_us"] = c.detector_duration.us;
    j["hp_duration_us"] = c.hp_duration.us;
    j["lp2_duration_us"] = c.lp2_duration.us;
    j["lp4_duration_us"] = c.lp4_duration.us;
    j["hp_padding_us"] = c.hp_padding.us;
    j["lp_padding_us"] = c.lp_padding.us;
    j["hp_deadline_budget_us"] = c.hp_deadline_budget.us;
    j["stagger_offset_max_us"] = c.stagger_offset_max.us;
    j["throughput_Bps"] = c.comm.throughput_Bps;
    j["jitter_padding_us"] = c.comm.jitter_padding.us;
    j["algorithm"] = to_string(c.algorithm);
    j["preemption"] = c.preemption;
    j["noise"] = c.noise.enabled ? "gaussian" : "off";
    j["noise_sigma_hp_us"] = c.noise.sigma_proc_hp.us;
    j["noise_sigma_lp_us"] = c.noise.sigma_proc_lp.us;
    j["noise_sigma_comm_us"] = c.noise.sigma_comm.us;
    j["poll_interval_us"] = c.poll_interval.us;
    j["seed"] = c.seed;
    j["stagger_seed"] = c.stagger_seed;
    j["noise_seed"] = c.noise_seed;
    j["poll_seed"] = c.poll_seed;
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    auto dur = [&](const char* key, Duration fallback) {
        return j.contains(key) ? Duration{j.at(key).get<std::int64_t>()} : fallback;
    };
    if (j.contains("devices")) c.devices = j.at("devices").get<int>();
    if (j.contains("cores_per_device"))
        c.cores_per_device = j.at("cores_per_device").get<int>();
    c.frame_period = dur("frame_period_us", c.frame_period);
    c.detector_duration = dur("detector_duration_us", c.detector_duration);
    c.hp_duration = dur("hp_duration_us", c.hp_duration);
    c.lp2_duration = dur("lp2_duration_us", c.lp2_duration);
    c.lp4_duration = dur("lp4_duration_us", c.lp4_duration);
    c.hp_padding = dur("hp_padding_us", c.hp_padding);
    c.lp_padding = dur("lp_padding_us", c.lp_padding);
    c.hp_deadline_budget = dur("hp_deadline_budget_us", c.hp_deadline_budget);
    c.stagger_offset_max = dur("stagger_offset_max_us", c.stagger_offset_max);
    if (j.contains("throughput_Bps"))
        c.comm.throughput_Bps = j.at("throughput_Bps").get<double>();
    c.comm.jitter_padding = dur("jitter_padding_us", c.comm.jitter_padding);
    if (j.contains("algorithm")) {
        if (!parse_algorithm(j.at("algorithm").get<std::string>(), c.algorithm))
            throw ConfigError("config: unknown algorithm " +
                              j.at("algorithm").get<std::string>());
    }
    if (j.contains("preemption")) c.preemption = j.at("preemption").get<bool>();
    if (j.contains("noise")) {
        std::string mode = j.at("noise").get<std::string>();
        if (mode == "gaussian")
            c.noise.enabled = true;
        else if (mode == "off")
            c.noise.enabled = false;
        else
            throw ConfigError("config: unknown noise mode " + mode);
    }
    c.noise.sigma_proc_hp = dur("noise_sigma_hp_us", c.noise.sigma_proc_hp);
    c.noise.sigma_proc_lp = dur("noise_sigma_lp_us", c.noise.sigma_proc_lp);
    c.noise.sigma_comm = dur("noise_sigma_comm_us", c.noise.sigma_comm);
    c.poll_interval = dur("poll_interval_us", c.poll_interval);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("stagger_seed")) c.stagger_seed = j.at("stagger_seed").get<std::uint64_t>();
    if (j.contains("noise_seed")) c.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    if (j.contains("poll_seed")) c.poll_seed = j.at("poll_seed").get<std::uint64_t>();
    return c;
}

}  // namespace edgesched
