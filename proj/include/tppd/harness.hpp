#pragma once

// Experiment orchestration: runs the algorithm comparison over common random
// numbers (identical task streams and trajectories per seed), accounts for
// decision time through the penalty factor and for power through the station
// wattage, and emits the comparison/summary CSV files.

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <tppd/config.hpp>
#include <tppd/error.hpp>
#include <tppd/policies.hpp>
#include <tppd/rng.hpp>
#include <tppd/simenv.hpp>

namespace tppd {

struct experiment_config {
    std::vector<std::string> algorithms = known_algorithms();
    std::vector<std::uint64_t> seeds{1};
    std::map<std::string, double> psi;   // per-algorithm penalty factor
    double station_power_w = 10.0;       // J
    double synthetic_decision_s = -1.0;  // >= 0: fixed per-decision time instead of wall clock
    int episodes = 1;
    int threads = 1;
    std::string output_dir = ".";

    static const std::vector<std::string>& known_algorithms() {
        static const std::vector<std::string> k{"tppd",   "ddqn_rt",   "dqn_rt",    "exhaustive_rt",
                                                "random", "all_local", "all_offload"};
        return k;
    }

    /// tppd decides ahead of the slot (penalty-free); real-time learned and
    /// exhaustive deciders pay the default 0.5; static rules are instant.
    static double default_psi(const std::string& algo) {
        if (algo == "ddqn_rt" || algo == "dqn_rt" || algo == "exhaustive_rt") return 0.5;
        return 0.0;
    }

    void validate() const {
        require(!algorithms.empty(), "experiment: algorithm list is empty");
        require(!seeds.empty(), "experiment: seeds must be non-empty");
        require(episodes >= 1, "experiment: episodes must be >= 1");
        require(threads >= 1, "experiment: threads must be >= 1");
        require(station_power_w >= 0.0, "experiment: station power must be >= 0");
        const auto& known = known_algorithms();
        for (const std::string& a : algorithms) {
            bool ok = false;
            for (const std::string& k : known) ok = ok || k == a;
            require(ok, "experiment: unknown algorithm '" + a + "'");
            const auto it = psi.find(a);
            const double p = it == psi.end() ? default_psi(a) : it->second;
            require(p >= 0.0 && p <= 1.0, "experiment: psi for '" + a + "' must be in [0,1]");
        }
    }

    double psi_for(const std::string& algo) const {
        const auto it = psi.find(algo);
        return it == psi.end() ? default_psi(algo) : it->second;
    }
};

inline experiment_config experiment_config_from(const config& cfg) {
    experiment_config ec;
    ec.algorithms = cfg.get_string_list("experiment.algorithms",
                                        experiment_config::known_algorithms());
    if (cfg.has("experiment.seeds")) {
        ec.seeds.clear();
        for (double s : cfg.get_double_list("experiment.seeds"))
            ec.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    for (const std::string& a : experiment_config::known_algorithms())
        if (cfg.has("psi." + a)) ec.psi[a] = cfg.get_double("psi." + a);
    ec.station_power_w = cfg.get_double("experiment.station_power_w", ec.station_power_w);
    ec.synthetic_decision_s =
        cfg.get_double("experiment.synthetic_decision_s", ec.synthetic_decision_s);
    ec.episodes = static_cast<int>(cfg.get_int("experiment.episodes", ec.episodes));
    ec.threads = static_cast<int>(cfg.get_int("experiment.threads", ec.threads));
    ec.output_dir = cfg.get_string("experiment.output_dir", ec.output_dir);
    ec.validate();
    return ec;
}

struct run_result {
    std::string algorithm;
    std::uint64_t seed = 0;
    double completion_s = 0.0;   // C, realized delay over all slots
    double decision_s = 0.0;     // total decision time
    double psi = 0.0;
    double penalized_s = 0.0;    // C + decision_s * psi
    double power = 0.0;          // penalized_s * J
    long misses = 0;
    std::uint64_t task_digest = 0;   // common-random-numbers witness (not emitted)
};

/// Trained policies the learned algorithms evaluate; tppd and ddqn_rt share
/// the DDQN network (tppd differs only in deciding on predicted positions).
struct policy_set {
    std::shared_ptr<const trained_agent> ddqn;
    std::shared_ptr<const trained_agent> dqn;
};

namespace detail {

inline std::uint64_t fold_bits(std::uint64_t digest, double v) {
    return splitmix64(digest ^ std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t fold_tasks(std::uint64_t digest, const std::vector<task>& tasks) {
    for (const task& t : tasks) {
        digest = fold_bits(digest, t.data_bits);
        digest = fold_bits(digest, t.cycles);
        digest = fold_bits(digest, t.deadline_s);
        digest = fold_bits(digest, t.priority);
    }
    return digest;
}

inline std::uint64_t episode_task_seed(std::uint64_t run_seed, int episode) {
    return splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(episode) + 0x5157));
}

} // namespace detail

/// Applies the penalty and power formulas; every emitted row satisfies them
/// bit-exactly by construction.
inline run_result make_run_result(std::string algorithm, std::uint64_t seed, double completion_s,
                                  double decision_s, double psi, double station_power_w,
                                  long misses, std::uint64_t digest = 0) {
    run_result r;
    r.algorithm = std::move(algorithm);
    r.seed = seed;
    r.completion_s = completion_s;
    r.decision_s = decision_s;
    r.psi = psi;
    r.penalized_s = completion_s + decision_s * psi;
    r.power = r.penalized_s * station_power_w;
    r.misses = misses;
    r.task_digest = digest;
    return r;
}

/// Observer for per-slot trace emission; unused by the comparison itself.
using slot_sink =
    std::function<void(int episode, long slot, const joint_action&, const slot_outcome&)>;

/// One algorithm x seed evaluation rollout.
inline run_result run_single(const environment& env, const std::string& algo, std::uint64_t seed,
                             const experiment_config& cfg, const policy_set& policies,
                             const slot_sink& sink = {}) {
    const scenario& sc = env.world();
    if ((algo == "tppd" || algo == "ddqn_rt") && !policies.ddqn)
        throw error("run_comparison: no trained policy for '" + algo + "'");
    if (algo == "dqn_rt" && !policies.dqn)
        throw error("run_comparison: no trained policy for '" + algo + "'");

    const action_codec codec(env.vehicle_count(), env.server_count());
    rng r_rand = rng::substream(seed, "random-policy");
    const position_mode mode =
        algo == "tppd" ? position_mode::predicted : position_mode::actual;

    double completion = 0.0;
    double decision = 0.0;
    long misses = 0;
    long decisions = 0;
    std::uint64_t digest = 0;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        const std::uint64_t task_seed = detail::episode_task_seed(seed, ep);
        env_state st = env.initial_state();
        for (long j = 0; j < sc.slots_per_episode; ++j) {
            const std::vector<task> tasks = env.tasks_for_slot_seeded(task_seed, st.slot);
            digest = detail::fold_tasks(digest, tasks);
            for (std::size_t i = 0; i < env.vehicle_count(); ++i) {
                const geo_point p = env.true_position(i, st.slot);
                digest = detail::fold_bits(digest, p.lat_deg);
                digest = detail::fold_bits(digest, p.lon_deg);
            }

            const auto t0 = cfg.synthetic_decision_s >= 0.0
                                ? std::chrono::steady_clock::time_point{}
                                : std::chrono::steady_clock::now();
            joint_action a;
            if (algo == "all_local") {
                a = all_local_policy(env.vehicle_count());
            } else if (algo == "all_offload") {
                a = all_offload_policy(env, env.observe(st, tasks, mode));
            } else if (algo == "random") {
                a = random_policy(env.observe(st, tasks, mode), codec, r_rand);
            } else if (algo == "exhaustive_rt") {
                a = exhaustive_policy(env, st, tasks);
            } else if (algo == "dqn_rt") {
                a = policies.dqn->greedy_action(env.observe(st, tasks, mode), sc);
            } else {   // tppd, ddqn_rt
                a = policies.ddqn->greedy_action(env.observe(st, tasks, mode), sc);
            }
            ++decisions;
            if (cfg.synthetic_decision_s < 0.0) {
                const auto t1 = std::chrono::steady_clock::now();
                decision += std::chrono::duration<double>(t1 - t0).count();
            }

            const slot_outcome out = env.step(st, a, tasks);
            completion += out.total_delay_s;
            misses += out.misses;
            if (sink) sink(ep, j, a, out);
        }
    }
    if (cfg.synthetic_decision_s >= 0.0)
        decision = cfg.synthetic_decision_s * static_cast<double>(decisions);

    return make_run_result(algo, seed, completion, decision, cfg.psi_for(algo),
                           cfg.station_power_w, misses, digest);
}

/// Evaluates every configured algorithm x seed pair. Runs fan out across
/// worker threads; results come back sorted by (algorithm order, seed
/// order). The common-random-numbers guarantee is asserted: per seed, every
/// algorithm must have observed the same task/trajectory stream.
inline std::vector<run_result> run_comparison(const environment& env,
                                              const experiment_config& cfg,
                                              const policy_set& policies) {
    cfg.validate();
    struct job {
        std::size_t algo_idx;
        std::size_t seed_idx;
    };
    std::vector<job> jobs;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({a, s});

    std::vector<run_result> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            try {
                results[j] = run_single(env, cfg.algorithms[jobs[j].algo_idx],
                                        cfg.seeds[jobs[j].seed_idx], cfg, policies);
            } catch (const std::exception& e) {
                failures[j] = e.what();
            }
        }
    };

    const std::size_t nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), jobs.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const std::string& f : failures)
        if (!f.empty()) throw error(f);

    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        const std::uint64_t expect = results[s].task_digest;
        for (std::size_t a = 1; a < cfg.algorithms.size(); ++a)
            require(results[a * cfg.seeds.size() + s].task_digest == expect,
                    "run_comparison: task stream diverged between algorithms for seed " +
                        std::to_string(cfg.seeds[s]));
    }
    return results;
}

// ---------------------------------------------------------------------------
// CSV emission

namespace detail {

struct summary_stat {
    double mean = 0.0;
    double stddev = 0.0;   // sample (n-1); 0 for a single observation
};

inline summary_stat stat_of(const std::vector<double>& xs) {
    summary_stat st;
    if (xs.empty()) return st;
    double sum = 0.0;
    for (double x : xs) sum += x;
    st.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - st.mean) * (x - st.mean);
        st.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return st;
}

} // namespace detail

/// Writes comparison.csv (one row per run) and summary.csv (per-algorithm
/// mean and sample standard deviation over seeds), returning the two paths.
inline std::pair<std::string, std::string> emit_csv(const std::vector<run_result>& results,
                                                    const std::string& output_dir) {
    require(!results.empty(), "emit_csv: no results");
    const std::string comparison_path = output_dir + "/comparison.csv";
    const std::string summary_path = output_dir + "/summary.csv";

    std::ofstream comp(comparison_path);
    if (!comp) throw error("emit_csv: cannot write '" + comparison_path + "'");
    comp << "algorithm,seed,completion_s,decision_s,psi,penalized_s,power,misses\n";
    char buf[320];
    for (const run_result& r : results) {
        std::snprintf(buf, sizeof buf, "%s,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n",
                      r.algorithm.c_str(), static_cast<unsigned long long>(r.seed),
                      r.completion_s, r.decision_s, r.psi, r.penalized_s, r.power, r.misses);
        comp << buf;
    }
    comp.close();

    // Group by algorithm, preserving first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const run_result*>> grouped;
    for (const run_result& r : results) {
        if (!grouped.count(r.algorithm)) order.push_back(r.algorithm);
        grouped[r.algorithm].push_back(&r);
    }

    std::ofstream summ(summary_path);
    if (!summ) throw error("emit_csv: cannot write '" + summary_path + "'");
    summ << "algorithm,runs,mean_completion_s,std_completion_s,mean_penalized_s,"
            "std_penalized_s,mean_power,std_power,mean_misses,std_misses\n";
    for (const std::string& algo : order) {
        std::vector<double> c, p, w, m;
        for (const run_result* r : grouped[algo]) {
            c.push_back(r->completion_s);
            p.push_back(r->penalized_s);
            w.push_back(r->power);
            m.push_back(static_cast<double>(r->misses));
        }
        const auto sc = detail::stat_of(c), sp = detail::stat_of(p), sw = detail::stat_of(w),
                   sm = detail::stat_of(m);
        std::snprintf(buf, sizeof buf,
                      "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", algo.c_str(),
                      grouped[algo].size(), sc.mean, sc.stddev, sp.mean, sp.stddev, sw.mean,
                      sw.stddev, sm.mean, sm.stddev);
        summ << buf;
    }
    summ.close();
    return {comparison_path, summary_path};
}

} // namespace tppd
