#pragma once

// Scenario construction: builds a simulation world from a config file.
// Trajectories and station positions come from files when paths are
// configured; otherwise synthetic generators stand in (vehicles orbiting a
// center, stations on a ring, a sinusoidal sweep for predictor work).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <tppd/config.hpp>
#include <tppd/data.hpp>
#include <tppd/error.hpp>
#include <tppd/geo.hpp>
#include <tppd/rng.hpp>
#include <tppd/simenv.hpp>

namespace tppd {

namespace detail {
constexpr double pi = 3.14159265358979323846;
constexpr double meters_per_deg_lat = earth_radius_m * pi / 180.0;
} // namespace detail

/// Point `east_m` / `north_m` meters from `origin` on the local tangent
/// plane. Good to well under a meter at the few-kilometer scales scenarios
/// use; the environment always measures the result geodesically anyway.
inline geo_point offset_point(const geo_point& origin, double east_m, double north_m) {
    geo_point p;
    p.lat_deg = origin.lat_deg + north_m / detail::meters_per_deg_lat;
    const double lat_rad = origin.lat_deg * detail::pi / 180.0;
    p.lon_deg = origin.lon_deg + east_m / (detail::meters_per_deg_lat * std::cos(lat_rad));
    return p;
}

/// Circular track around `center`: radius `radius_m`, `step_m` meters of arc
/// per slot starting at `phase_rad`, one record per slot.
inline trajectory orbit_track(std::string id, const geo_point& center, double radius_m,
                              double step_m, double phase_rad, int slots) {
    require(radius_m > 0.0, "orbit_track: radius must be positive");
    require(slots >= 1, "orbit_track: need at least one slot");
    trajectory t;
    t.vehicle_id = std::move(id);
    t.records.reserve(static_cast<std::size_t>(slots));
    const double dtheta = step_m / radius_m;
    for (int j = 0; j < slots; ++j) {
        const double a = phase_rad + dtheta * j;
        t.records.push_back({offset_point(center, radius_m * std::cos(a), radius_m * std::sin(a)),
                             static_cast<double>(j)});
    }
    return t;
}

/// Sinusoidal sweep: longitude advances linearly across `extent_m` while
/// latitude oscillates with `amplitude_m` over `periods` full cycles, plus
/// uniform noise of `noise_frac` times the amplitude. Deterministic in
/// `seed`.
inline trajectory sinusoid_track(std::string id, const geo_point& center, double extent_m,
                                 double amplitude_m, double periods, int points,
                                 double noise_frac, std::uint64_t seed) {
    require(points >= 2, "sinusoid_track: need at least two points");
    require(extent_m > 0.0 && amplitude_m > 0.0, "sinusoid_track: extent and amplitude must be positive");
    rng r = rng::substream(seed, "sinusoid");
    trajectory t;
    t.vehicle_id = std::move(id);
    t.records.reserve(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) {
        const double u = static_cast<double>(j) / static_cast<double>(points - 1);
        const double east = (u - 0.5) * extent_m;
        double north = amplitude_m * std::sin(2.0 * detail::pi * periods * u);
        if (noise_frac > 0.0)
            north += r.uniform(-noise_frac * amplitude_m, noise_frac * amplitude_m);
        t.records.push_back({offset_point(center, east, north), static_cast<double>(j)});
    }
    return t;
}

/// `count` servers evenly spaced on a circle of `radius_m` around `center`,
/// ids "s0".."s<count-1>".
inline std::vector<mec_server> ring_stations(const geo_point& center, double radius_m, int count,
                                             double capacity_hz, double service_range_m) {
    require(count >= 1, "ring_stations: need at least one station");
    require(radius_m > 0.0, "ring_stations: radius must be positive");
    std::vector<mec_server> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double a = 2.0 * detail::pi * k / count;
        mec_server s;
        s.id = "s" + std::to_string(k);
        s.position = offset_point(center, radius_m * std::cos(a), radius_m * std::sin(a));
        s.capacity_hz = capacity_hz;
        s.service_range_m = service_range_m;
        out.push_back(std::move(s));
    }
    return out;
}

/// Assembles a scenario from a config. Recognized keys (all optional; the
/// defaults give the stock 4-vehicle / 6-server world):
///
///   [world]    center_lat, center_lon, slots
///   [channel]  bandwidth_hz, subchannels, noise_w, ref_gain, ref_distance_m,
///              path_loss_exp
///   [weights]  alpha, beta, lambda
///   [tasks]    data_bits_min/max, cycles_min/max, deadline_min/max, seed
///   [sim]      slot_len_s, penalty_miss, slots_per_episode
///   [vehicles] count, local_capacity_hz, tx_power_w, comm_range_m,
///              orbit_radius_m, orbit_step_m, max_speed_mps,
///              tracks = ["a.plt", ...]       (files replace orbits)
///   [servers]  count, capacity_hz, service_range_m, ring_radius_m,
///              stations_file = "bs.csv"      (file replaces the ring)
inline scenario load_scenario(const config& cfg) {
    scenario sc;

    geo_point center{cfg.get_double("world.center_lat", 39.90),
                     cfg.get_double("world.center_lon", 116.30)};

    sc.slot_len_s = cfg.get_double("sim.slot_len_s", 1.0);
    sc.penalty_miss = cfg.get_double("sim.penalty_miss", 0.0);
    sc.slots_per_episode = static_cast<int>(cfg.get_int("sim.slots_per_episode", 100));
    require(sc.slots_per_episode >= 1, "load_scenario: slots_per_episode must be >= 1");
    sc.task_seed = static_cast<std::uint64_t>(cfg.get_int("tasks.seed", 1));

    sc.channel.bandwidth_hz = cfg.get_double("channel.bandwidth_hz", 20e6);
    sc.channel.noise_w = cfg.get_double("channel.noise_w", 1e-13);
    sc.channel.ref_gain = cfg.get_double("channel.ref_gain", 1e-4);
    sc.channel.ref_distance_m = cfg.get_double("channel.ref_distance_m", 100.0);
    sc.channel.path_loss_exp = cfg.get_double("channel.path_loss_exp", 2.0);

    sc.weights.alpha = cfg.get_double("weights.alpha", 0.5);
    sc.weights.beta = cfg.get_double("weights.beta", 0.3);
    sc.weights.lambda = cfg.get_double("weights.lambda", 0.2);

    sc.ranges.data_bits_min = cfg.get_double("tasks.data_bits_min", 0.2e6);
    sc.ranges.data_bits_max = cfg.get_double("tasks.data_bits_max", 2e6);
    sc.ranges.cycles_min = cfg.get_double("tasks.cycles_min", 0.2e9);
    sc.ranges.cycles_max = cfg.get_double("tasks.cycles_max", 1e9);
    sc.ranges.deadline_min = cfg.get_double("tasks.deadline_min", 0.5);
    sc.ranges.deadline_max = cfg.get_double("tasks.deadline_max", 3.0);

    const double local_cap = cfg.get_double("vehicles.local_capacity_hz", 1e9);
    const double tx_power = cfg.get_double("vehicles.tx_power_w", 0.5);
    const double comm_range = cfg.get_double("vehicles.comm_range_m", 800.0);

    const int world_slots =
        static_cast<int>(cfg.get_int("world.slots", sc.slots_per_episode));
    require(world_slots >= 1, "load_scenario: world.slots must be >= 1");

    if (cfg.has("vehicles.tracks")) {
        const double max_speed = cfg.get_double("vehicles.max_speed_mps", 50.0);
        for (const std::string& path : cfg.get_string_list("vehicles.tracks")) {
            vehicle v;
            v.local_capacity_hz = local_cap;
            v.tx_power_w = tx_power;
            v.comm_range_m = comm_range;
            v.track = clean(load_plt(path), max_speed);
            v.id = "v" + std::to_string(sc.vehicles.size());
            sc.vehicles.push_back(std::move(v));
        }
        require(!sc.vehicles.empty(), "load_scenario: vehicles.tracks is empty");
    } else {
        const int n = static_cast<int>(cfg.get_int("vehicles.count", 4));
        require(n >= 1, "load_scenario: vehicles.count must be >= 1");
        const double orbit_r = cfg.get_double("vehicles.orbit_radius_m", 400.0);
        const double orbit_step = cfg.get_double("vehicles.orbit_step_m", 15.0);
        for (int i = 0; i < n; ++i) {
            vehicle v;
            v.id = "v" + std::to_string(i);
            v.local_capacity_hz = local_cap;
            v.tx_power_w = tx_power;
            v.comm_range_m = comm_range;
            v.track = orbit_track(v.id, center, orbit_r, orbit_step,
                                  2.0 * detail::pi * i / n, world_slots);
            sc.vehicles.push_back(std::move(v));
        }
    }

    for (const vehicle& v : sc.vehicles)
        require(static_cast<int>(v.track.records.size()) >= sc.slots_per_episode,
                "load_scenario: track for '" + v.id + "' has " +
                    std::to_string(v.track.records.size()) + " slots, episode needs " +
                    std::to_string(sc.slots_per_episode));

    const double server_cap = cfg.get_double("servers.capacity_hz", 10e9);
    const double server_range = cfg.get_double("servers.service_range_m", 1000.0);
    if (cfg.has("servers.stations_file")) {
        station_snapshot snap =
            load_stations(cfg.get_string("servers.stations_file"), {server_cap, server_range});
        for (const station& st : snap.stations) {
            mec_server s;
            s.id = st.id;
            s.position = st.position;
            s.capacity_hz = st.capacity_hz;
            s.service_range_m = st.service_range_m;
            sc.servers.push_back(std::move(s));
        }
    } else {
        const int m = static_cast<int>(cfg.get_int("servers.count", 6));
        const double ring_r = cfg.get_double("servers.ring_radius_m", 500.0);
        sc.servers = ring_stations(center, ring_r, m, server_cap, server_range);
    }

    sc.channel.subchannels = static_cast<int>(
        cfg.get_int("channel.subchannels", static_cast<std::int64_t>(sc.vehicles.size())));

    return sc;
}

} // namespace tppd
