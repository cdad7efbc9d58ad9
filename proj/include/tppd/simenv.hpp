#pragma once

// Slot-stepped vehicular edge-computing environment: tasks, channel model,
// delays, server availability filtering, priority-proportional allocation,
// and commitment/release of server shares across slots.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <tppd/data.hpp>
#include <tppd/error.hpp>
#include <tppd/geo.hpp>
#include <tppd/predictor.hpp>
#include <tppd/rng.hpp>

namespace tppd {

struct task {
    double data_bits = 0.0;    // l
    double cycles = 1.0;       // c
    double deadline_s = 1.0;   // nu
    std::array<double, 3> features{0.0, 0.0, 0.0};   // raw z1..z3
    double priority = 0.0;     // Z in [0,1]
};

struct vehicle {
    std::string id;
    double local_capacity_hz = 1e9;   // F^l
    double tx_power_w = 0.5;          // p_i
    double comm_range_m = 800.0;      // d^v_max
    trajectory track;                 // true position per slot
    std::shared_ptr<const trained_predictor> predictor;   // optional
};

struct mec_server {
    struct commitment {
        double share = 0.0;
        long release_slot = 0;
    };

    std::string id;
    geo_point position;
    double capacity_hz = 10e9;        // F_k
    double service_range_m = 1000.0;  // d^s_max
    std::map<std::string, commitment> committed;

    double committed_share() const {
        double s = 0.0;
        for (const auto& [_, c] : committed) s += c.share;
        return s;
    }
    double uncommitted_share() const { return std::max(0.0, 1.0 - committed_share()); }
};

struct channel_params {
    double bandwidth_hz = 20e6;       // B
    int subchannels = 1;              // N, >= vehicle count
    double noise_w = 1e-13;           // sigma^2
    double ref_gain = 1e-4;           // h0
    double ref_distance_m = 100.0;    // d0
    double path_loss_exp = 2.0;       // r
};

struct priority_weights {
    double alpha = 0.5;
    double beta = 0.3;
    double lambda = 0.2;
};

/// Uniform sampling ranges for spawned tasks; the feature ranges double as
/// the standardization bounds for priority scoring.
struct task_ranges {
    double data_bits_min = 0.2e6, data_bits_max = 2e6;
    double cycles_min = 0.2e9, cycles_max = 1e9;
    double deadline_min = 0.5, deadline_max = 3.0;
    std::array<double, 3> feat_min{0.0, 0.0, 0.0};
    std::array<double, 3> feat_max{1.0, 1.0, 1.0};
};

/// Per-vehicle choice: 0 = local, k in [1..K] = server k-1.
struct joint_action {
    std::vector<int> choice;
};

struct slot_outcome {
    std::vector<double> delay_s;
    std::vector<bool> deadline_met;
    std::vector<double> share;      // omega granted this slot (0 when local)
    std::vector<int> executed;      // choice after fallback
    std::vector<bool> fallback;     // offload infeasible, ran locally
    double total_delay_s = 0.0;
    int misses = 0;
};

struct scenario {
    std::vector<vehicle> vehicles;
    std::vector<mec_server> servers;
    channel_params channel;
    priority_weights weights;
    task_ranges ranges;
    double slot_len_s = 1.0;
    double penalty_miss = 0.0;        // <= 0: derived as 2 * deadline_max
    std::uint64_t task_seed = 1;
    int slots_per_episode = 100;
};

/// Mutable part of the world; copyable snapshot.
struct env_state {
    long slot = 0;
    std::vector<mec_server> servers;
};

enum class position_mode { actual, predicted };

/// Decision-time snapshot handed to policies.
struct slot_view {
    long slot = 0;
    std::vector<task> tasks;                        // per vehicle
    std::vector<geo_point> positions;               // decision positions
    std::vector<std::vector<double>> distance_m;    // vehicle x server
    std::vector<std::vector<bool>> available;       // vehicle x server
    std::vector<double> uncommitted;                // per server
};

// ---------------------------------------------------------------------------
// Physics

inline double local_delay(const task& t, const vehicle& v) {
    require(v.local_capacity_hz > 0.0, "local_delay: vehicle capacity must be positive");
    return t.cycles / v.local_capacity_hz;
}

/// Path-loss gain h0 * (d0/d)^r. The d = 0 singularity is clamped to d0/100;
/// `clamped` reports when that happened.
inline double channel_gain(double d, const channel_params& ch, bool* clamped = nullptr) {
    const double floor_d = ch.ref_distance_m / 100.0;
    if (clamped) *clamped = d < floor_d;
    const double dd = std::max(d, floor_d);
    return ch.ref_gain * std::pow(ch.ref_distance_m / dd, ch.path_loss_exp);
}

inline double transmission_rate(const vehicle& v, const mec_server&, double d,
                                const channel_params& ch) {
    const double snr = v.tx_power_w * channel_gain(d, ch) / ch.noise_w;
    return ch.bandwidth_hz / static_cast<double>(ch.subchannels) * std::log2(1.0 + snr);
}

/// Transfer plus edge-compute delay; zero rate or zero share is infeasible
/// and reported as an infinite delay, not an error.
inline double offload_delay(const task& t, double rate, double share, const mec_server& s) {
    if (rate <= 0.0 || share <= 0.0) return std::numeric_limits<double>::infinity();
    require(s.capacity_hz > 0.0, "offload_delay: server capacity must be positive");
    return t.data_bits / rate + t.cycles / (share * s.capacity_hz);
}

/// Indices of servers within min(server range, vehicle range), input order.
inline std::vector<std::size_t> filter_servers(const geo_point& position, const vehicle& v,
                                               const std::vector<mec_server>& servers) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < servers.size(); ++k) {
        const double d = haversine_distance(position, servers[k].position);
        if (d <= std::min(servers[k].service_range_m, v.comm_range_m)) out.push_back(k);
    }
    return out;
}

/// Min-max standardizes each feature then applies the weighted sum.
/// Degenerate bounds give that feature the tie value 0.5; standardized
/// values are clamped so Z stays in [0,1] for out-of-range inputs.
inline double priority_score(const std::array<double, 3>& feats, const std::array<double, 3>& lo,
                             const std::array<double, 3>& hi, const priority_weights& w) {
    std::array<double, 3> z;
    for (std::size_t j = 0; j < 3; ++j) {
        if (hi[j] > lo[j])
            z[j] = std::clamp((feats[j] - lo[j]) / (hi[j] - lo[j]), 0.0, 1.0);
        else
            z[j] = 0.5;
    }
    return w.alpha * z[0] + w.beta * z[1] + w.lambda * z[2];
}

/// Splits each server's uncommitted share among this slot's claimants in
/// proportion to task priority (equal split when all priorities are zero).
/// The last claimant takes the exact remainder so claimed shares sum to the
/// free portion with no rounding drift. choices must already be range-valid;
/// a fully committed server yields zero shares (callers fall back to local).
inline std::vector<double> allocate(const std::vector<int>& choices, const std::vector<task>& tasks,
                                    const std::vector<mec_server>& servers) {
    require(choices.size() == tasks.size(), "allocate: choice/task count mismatch");
    std::vector<double> share(choices.size(), 0.0);
    for (std::size_t k = 0; k < servers.size(); ++k) {
        std::vector<std::size_t> claimants;
        double z_sum = 0.0;
        for (std::size_t i = 0; i < choices.size(); ++i) {
            if (choices[i] == static_cast<int>(k) + 1) {
                claimants.push_back(i);
                z_sum += tasks[i].priority;
            }
        }
        if (claimants.empty()) continue;
        const double u = servers[k].uncommitted_share();
        if (u <= 0.0) continue;
        double handed = 0.0;
        for (std::size_t c = 0; c + 1 < claimants.size(); ++c) {
            const std::size_t i = claimants[c];
            const double w = z_sum > 0.0 ? tasks[i].priority / z_sum
                                         : 1.0 / static_cast<double>(claimants.size());
            share[i] = u * w;
            handed += share[i];
        }
        share[claimants.back()] = std::max(0.0, u - handed);
    }
    return share;
}

inline double reward(const slot_outcome& out, double penalty_miss) {
    return -(out.total_delay_s + penalty_miss * static_cast<double>(out.misses));
}

// ---------------------------------------------------------------------------
// Environment

class environment {
public:
    explicit environment(scenario sc) : sc_(std::move(sc)) {
        require(!sc_.vehicles.empty(), "scenario: needs at least one vehicle");
        require(sc_.channel.bandwidth_hz > 0 && sc_.channel.noise_w > 0 && sc_.channel.ref_gain > 0 &&
                    sc_.channel.ref_distance_m > 0 && sc_.channel.path_loss_exp > 0,
                "scenario: channel parameters must be positive");
        require(sc_.channel.subchannels >= static_cast<int>(sc_.vehicles.size()),
                "scenario: subchannels must cover the vehicle count");
        const priority_weights& w = sc_.weights;
        require(w.alpha >= 0 && w.beta >= 0 && w.lambda >= 0 &&
                    std::abs(w.alpha + w.beta + w.lambda - 1.0) < 1e-9,
                "scenario: priority weights must be nonnegative and sum to 1");
        const task_ranges& r = sc_.ranges;
        require(r.data_bits_min >= 0 && r.data_bits_max >= r.data_bits_min,
                "scenario: bad data size range");
        require(r.cycles_min > 0 && r.cycles_max >= r.cycles_min, "scenario: bad cycle range");
        require(r.deadline_min > 0 && r.deadline_max >= r.deadline_min,
                "scenario: bad deadline range");
        for (std::size_t j = 0; j < 3; ++j)
            require(r.feat_max[j] >= r.feat_min[j], "scenario: bad feature range");
        require(sc_.slot_len_s > 0, "scenario: slot length must be positive");
        for (const auto& v : sc_.vehicles) {
            require(v.local_capacity_hz > 0 && v.tx_power_w > 0 && v.comm_range_m > 0,
                    "scenario: vehicle '" + v.id + "' parameters must be positive");
            require(v.track.records.size() >= 1, "scenario: vehicle '" + v.id + "' has no track");
        }
        for (const auto& s : sc_.servers)
            require(s.capacity_hz > 0 && s.service_range_m > 0,
                    "scenario: server '" + s.id + "' parameters must be positive");
        if (sc_.penalty_miss <= 0.0) sc_.penalty_miss = 2.0 * sc_.ranges.deadline_max;
    }

    const scenario& world() const { return sc_; }
    std::size_t vehicle_count() const { return sc_.vehicles.size(); }
    std::size_t server_count() const { return sc_.servers.size(); }

    env_state initial_state() const {
        env_state st;
        st.slot = 0;
        st.servers = sc_.servers;
        for (auto& s : st.servers) s.committed.clear();
        return st;
    }

    geo_point true_position(std::size_t i, long slot) const {
        const auto& recs = sc_.vehicles.at(i).track.records;
        require(slot >= 0 && static_cast<std::size_t>(slot) < recs.size(),
                "environment: vehicle '" + sc_.vehicles[i].id + "' track has no slot " +
                    std::to_string(slot));
        return recs[static_cast<std::size_t>(slot)].position;
    }

    /// Position the decider believes the vehicle will occupy at `slot`.
    /// actual: the true position (decided on the spot). predicted: the
    /// LSTM's one-step-ahead estimate from positions up to slot-1; before
    /// enough history exists (or without a predictor) the last known true
    /// position stands in.
    geo_point position_for_decision(std::size_t i, long slot, position_mode mode) const {
        if (mode == position_mode::actual) return true_position(i, slot);
        const vehicle& v = sc_.vehicles.at(i);
        const int seq = v.predictor ? v.predictor->cfg.seq_len : 0;
        if (v.predictor && slot >= seq) {
            std::vector<geo_point> window;
            window.reserve(static_cast<std::size_t>(seq));
            for (long t = slot - seq; t < slot; ++t) window.push_back(true_position(i, t));
            return predict_next(*v.predictor, window);
        }
        return true_position(i, std::max<long>(0, slot - 1));
    }

    /// Deterministic per (seed, slot, vehicle); the one-argument forms use
    /// the scenario's task seed (the shared evaluation stream), the seeded
    /// forms let training draw varied streams per episode.
    task spawn_task(long slot, std::size_t i) const {
        return spawn_task_seeded(sc_.task_seed, slot, i);
    }

    task spawn_task_seeded(std::uint64_t seed, long slot, std::size_t i) const {
        rng r = rng::substream(seed, "tasks", static_cast<std::uint64_t>(slot),
                               static_cast<std::uint64_t>(i));
        const task_ranges& tr = sc_.ranges;
        task t;
        t.data_bits = r.uniform(tr.data_bits_min, tr.data_bits_max);
        t.cycles = r.uniform(tr.cycles_min, tr.cycles_max);
        t.deadline_s = r.uniform(tr.deadline_min, tr.deadline_max);
        for (std::size_t j = 0; j < 3; ++j) t.features[j] = r.uniform(tr.feat_min[j], tr.feat_max[j]);
        t.priority = priority_score(t.features, tr.feat_min, tr.feat_max, sc_.weights);
        return t;
    }

    std::vector<task> tasks_for_slot(long slot) const {
        return tasks_for_slot_seeded(sc_.task_seed, slot);
    }

    std::vector<task> tasks_for_slot_seeded(std::uint64_t seed, long slot) const {
        std::vector<task> out;
        out.reserve(sc_.vehicles.size());
        for (std::size_t i = 0; i < sc_.vehicles.size(); ++i)
            out.push_back(spawn_task_seeded(seed, slot, i));
        return out;
    }

    slot_view observe(const env_state& st, const std::vector<task>& tasks,
                      position_mode mode) const {
        require(tasks.size() == sc_.vehicles.size(), "observe: task count mismatch");
        slot_view view;
        view.slot = st.slot;
        view.tasks = tasks;
        const std::size_t n = sc_.vehicles.size(), m = st.servers.size();
        view.positions.reserve(n);
        view.distance_m.assign(n, std::vector<double>(m, 0.0));
        view.available.assign(n, std::vector<bool>(m, false));
        for (std::size_t i = 0; i < n; ++i) {
            const geo_point pos = position_for_decision(i, st.slot, mode);
            view.positions.push_back(pos);
            for (std::size_t k = 0; k < m; ++k) {
                const double d = haversine_distance(pos, st.servers[k].position);
                view.distance_m[i][k] = d;
                view.available[i][k] =
                    d <= std::min(st.servers[k].service_range_m, sc_.vehicles[i].comm_range_m);
            }
        }
        view.uncommitted.reserve(m);
        for (const auto& s : st.servers) view.uncommitted.push_back(s.uncommitted_share());
        return view;
    }

    /// Advances one slot. Shares whose tasks finished are released first;
    /// offloads that are out of true range or hit a fully committed server
    /// fall back to local (flagged). Realized delays always use true
    /// positions, whatever position source the decider used.
    slot_outcome step(env_state& st, const joint_action& a, const std::vector<task>& tasks) const {
        const std::size_t n = sc_.vehicles.size();
        require(a.choice.size() == n, "step: action vector has " + std::to_string(a.choice.size()) +
                                          " entries for " + std::to_string(n) + " vehicles");
        require(tasks.size() == n, "step: task count mismatch");
        const int k_max = static_cast<int>(st.servers.size());
        for (int c : a.choice)
            require(c >= 0 && c <= k_max, "step: action entry " + std::to_string(c) + " out of range");

        for (auto& s : st.servers) {
            for (auto it = s.committed.begin(); it != s.committed.end();) {
                if (it->second.release_slot <= st.slot)
                    it = s.committed.erase(it);
                else
                    ++it;
            }
        }

        slot_outcome out;
        out.delay_s.assign(n, 0.0);
        out.deadline_met.assign(n, true);
        out.share.assign(n, 0.0);
        out.executed.assign(n, 0);
        out.fallback.assign(n, false);

        std::vector<int> feasible(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int c = a.choice[i];
            if (c == 0) continue;
            const mec_server& srv = st.servers[static_cast<std::size_t>(c - 1)];
            const geo_point pos = true_position(i, st.slot);
            const double d = haversine_distance(pos, srv.position);
            const bool in_range =
                d <= std::min(srv.service_range_m, sc_.vehicles[i].comm_range_m);
            if (in_range && srv.uncommitted_share() > 0.0)
                feasible[i] = c;
            else
                out.fallback[i] = true;
        }

        const std::vector<double> shares = allocate(feasible, tasks, st.servers);

        for (std::size_t i = 0; i < n; ++i) {
            const vehicle& v = sc_.vehicles[i];
            double delay;
            if (feasible[i] == 0) {
                delay = local_delay(tasks[i], v);
            } else {
                const auto k = static_cast<std::size_t>(feasible[i] - 1);
                mec_server& srv = st.servers[k];
                const double d = haversine_distance(true_position(i, st.slot), srv.position);
                const double rate = transmission_rate(v, srv, d, sc_.channel);
                delay = offload_delay(tasks[i], rate, shares[i], srv);
                out.share[i] = shares[i];
                const long held = std::max<long>(1, static_cast<long>(std::ceil(delay / sc_.slot_len_s)));
                srv.committed[std::to_string(st.slot) + ":" + v.id] = {shares[i], st.slot + held};
            }
            out.executed[i] = feasible[i];
            out.delay_s[i] = delay;
            out.deadline_met[i] = delay <= tasks[i].deadline_s;
            out.total_delay_s += delay;
            if (!out.deadline_met[i]) ++out.misses;
        }
        st.slot += 1;
        return out;
    }

private:
    scenario sc_;
};

} // namespace tppd
