// Command-line front end: trajectory-predictor and value-network training,
// single-algorithm traces, the multi-algorithm comparison, and a
// finite-difference audit of the network gradients.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <tppd/config.hpp>
#include <tppd/data.hpp>
#include <tppd/harness.hpp>
#include <tppd/nn.hpp>
#include <tppd/policies.hpp>
#include <tppd/predictor.hpp>
#include <tppd/scenario.hpp>
#include <tppd/simenv.hpp>

namespace {

using tppd::config;

struct cli_options {
    std::string config_path;
    std::uint64_t seed = 1;
};

config load_config(const cli_options& opt) {
    if (opt.config_path.empty()) return config::parse("");
    return config::parse_file(opt.config_path);
}

std::string ensure_output_dir(const config& cfg) {
    const std::string dir = cfg.get_string("experiment.output_dir", ".");
    std::filesystem::create_directories(dir);
    return dir;
}

bool contains(const std::vector<std::string>& xs, const std::string& x) {
    return std::find(xs.begin(), xs.end(), x) != xs.end();
}

/// The world is normally described by the same file as everything else; an
/// `experiment.scenario` key points at a separate scenario file instead.
tppd::scenario load_world(const config& cfg) {
    const std::string path = cfg.get_string("experiment.scenario", "");
    if (path.empty()) return tppd::load_scenario(cfg);
    return tppd::load_scenario(config::parse_file(path));
}

// ---------------------------------------------------------------------------
// grad-check

int cmd_grad_check(const cli_options& opt) {
    const config cfg = load_config(opt);
    const int seeds = static_cast<int>(cfg.get_int("grad_check.seeds", 20));
    const int hidden = static_cast<int>(cfg.get_int("grad_check.hidden", 8));
    const int steps = static_cast<int>(cfg.get_int("grad_check.steps", 5));
    const int batch = static_cast<int>(cfg.get_int("grad_check.batch", 4));
    const double h = cfg.get_double("grad_check.step", 1e-6);
    const double threshold = cfg.get_double("grad_check.threshold", 1e-4);
    tppd::require(seeds >= 1 && hidden >= 1 && steps >= 1 && batch >= 1,
                  "grad-check: sizes must be positive");

    double worst = 0.0;
    for (int k = 0; k < seeds; ++k) {
        tppd::rng r = tppd::rng::substream(opt.seed, "grad-check", static_cast<std::uint64_t>(k));
        auto model = tppd::make_lstm_regressor<double>(2, hidden, 2, 2, r);
        std::vector<tppd::mat<double>> xs(static_cast<std::size_t>(steps));
        for (auto& x : xs) {
            x.resize(batch, 2);
            for (Eigen::Index c = 0; c < x.cols(); ++c)
                for (Eigen::Index row = 0; row < x.rows(); ++row)
                    x(row, c) = r.uniform(-1.0, 1.0);
        }
        tppd::regressor_tape<double> tape;
        const tppd::mat<double> y = model.forward(xs, tape);
        // Targets close to the outputs keep the loss small, so the central
        // difference's rounding noise stays below the relative threshold.
        tppd::mat<double> target = y;
        for (Eigen::Index c = 0; c < target.cols(); ++c)
            for (Eigen::Index row = 0; row < target.rows(); ++row)
                target(row, c) += r.uniform(-0.05, 0.05);
        auto ts = model.tensors();
        tppd::zero_grads(ts);
        const auto lg = tppd::mse_loss(y, target);
        model.backward(tape, lg.second);
        const double err = tppd::grad_check(
            ts, [&] { return tppd::mse_loss(model.forward(xs), target).first; }, h);
        worst = std::max(worst, err);
    }
    const bool pass = worst < threshold;
    std::printf("max_rel_err=%.17g seeds=%d threshold=%g status=%s\n", worst, seeds, threshold,
                pass ? "pass" : "fail");
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Predictor commands

/// Track to learn from: a configured PLT file, else a synthetic sinusoidal
/// sweep whose noise stream derives from the root seed (overridable so a
/// fixed dataset can be shared across seeds).
tppd::trajectory predictor_track(const config& cfg, std::uint64_t seed) {
    const std::string plt = cfg.get_string("predictor_data.plt", "");
    if (!plt.empty()) {
        const double max_speed = cfg.get_double("predictor_data.max_speed_mps", 50.0);
        return tppd::clean(tppd::load_plt(plt), max_speed);
    }
    const tppd::geo_point center{cfg.get_double("world.center_lat", 39.90),
                                 cfg.get_double("world.center_lon", 116.30)};
    const int points = static_cast<int>(cfg.get_int("predictor_data.points", 2400));
    const double extent = cfg.get_double("predictor_data.extent_m", 2000.0);
    const double amplitude = cfg.get_double("predictor_data.amplitude_m", 300.0);
    const double periods = cfg.get_double("predictor_data.periods", 6.0);
    const double noise = cfg.get_double("predictor_data.noise_frac", 0.01);
    const std::uint64_t track_seed =
        cfg.has("predictor_data.seed")
            ? static_cast<std::uint64_t>(cfg.get_int("predictor_data.seed", 0))
            : tppd::rng::substream(seed, "track").next();
    return tppd::sinusoid_track("p0", center, extent, amplitude, periods, points, noise,
                                track_seed);
}

void write_eval_csv(const std::string& path, const tppd::eval_report& rep) {
    std::ofstream out(path);
    if (!out) throw tppd::error("eval: cannot write '" + path + "'");
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", rep.mae, rep.mse, rep.rmse,
                  rep.accuracy);
    out << "mae,mse,rmse,accuracy\n" << buf;
}

int cmd_train_predictor(const cli_options& opt) {
    const config cfg = load_config(opt);
    const std::string out_dir = ensure_output_dir(cfg);
    tppd::predictor_config base;
    base.seed = opt.seed;
    const tppd::predictor_config pc = tppd::predictor_config_from(cfg, base);
    const tppd::trajectory track = predictor_track(cfg, opt.seed);
    const auto windows = tppd::build_windows(track, pc.seq_len);
    const double test_fraction = cfg.get_double("predictor_data.test_fraction", 0.2);
    const auto [train_set, test_set] = tppd::split(windows, 1.0 - test_fraction);
    tppd::trained_predictor p = tppd::train(train_set, pc);
    const tppd::eval_report rep = tppd::evaluate(p, test_set);

    const std::string ckpt = cfg.get_string("predictor.checkpoint", out_dir + "/predictor.ckpt");
    tppd::save_predictor(ckpt, p);
    const std::string eval_path = out_dir + "/predictor_eval.csv";
    write_eval_csv(eval_path, rep);
    std::printf("checkpoint=%s eval_csv=%s mae=%.17g mse=%.17g rmse=%.17g accuracy=%.17g\n",
                ckpt.c_str(), eval_path.c_str(), rep.mae, rep.mse, rep.rmse, rep.accuracy);
    return 0;
}

int cmd_eval_predictor(const cli_options& opt) {
    const config cfg = load_config(opt);
    const std::string out_dir = ensure_output_dir(cfg);
    const std::string ckpt = cfg.get_string("predictor.checkpoint", "");
    tppd::require(!ckpt.empty(), "eval-predictor: set predictor.checkpoint in the config");
    const tppd::trained_predictor p = tppd::load_predictor(ckpt);

    const tppd::trajectory track = predictor_track(cfg, opt.seed);
    const auto windows = tppd::build_windows(track, p.cfg.seq_len);
    const double test_fraction = cfg.get_double("predictor_data.test_fraction", 0.2);
    const auto [train_set, test_set] = tppd::split(windows, 1.0 - test_fraction);
    (void)train_set;
    const tppd::eval_report rep = tppd::evaluate(p, test_set);
    write_eval_csv(out_dir + "/predictor_eval.csv", rep);
    std::printf("%.17g,%.17g,%.17g,%.17g\n", rep.mae, rep.mse, rep.rmse, rep.accuracy);
    return 0;
}

// ---------------------------------------------------------------------------
// Agent training and policy assembly

tppd::agent_variant parse_variant(const std::string& name) {
    if (name == "ddqn") return tppd::agent_variant::ddqn;
    if (name == "dqn") return tppd::agent_variant::dqn;
    throw tppd::error("agent.variant must be 'ddqn' or 'dqn', got '" + name + "'");
}

int cmd_train_agent(const cli_options& opt) {
    const config cfg = load_config(opt);
    const std::string out_dir = ensure_output_dir(cfg);
    const tppd::scenario sc = load_world(cfg);
    const tppd::environment env(sc);
    tppd::agent_config base;
    base.seed = opt.seed;
    const tppd::agent_config ac = tppd::agent_config_from(cfg, base);
    const std::string variant_name = cfg.get_string("agent.variant", "ddqn");
    tppd::train_result tr = tppd::train_agent(env, ac, parse_variant(variant_name));

    const std::string ckpt = cfg.get_string("agent.checkpoint", out_dir + "/agent.ckpt");
    tppd::save_agent(ckpt, tr.agent);
    const std::string curve = out_dir + "/learning_curve.csv";
    tppd::write_learning_curve(curve, tr.curve);
    std::printf("checkpoint=%s curve=%s variant=%s episodes=%zu\n", ckpt.c_str(), curve.c_str(),
                variant_name.c_str(), tr.curve.size());
    return 0;
}

/// Fits one next-position predictor per vehicle on that vehicle's own track
/// and hangs it on the scenario; pre-decided offloading reads positions
/// through these.
void attach_predictors(const config& cfg, tppd::scenario& sc, std::uint64_t root) {
    tppd::predictor_config base;
    base.hidden_size = 32;   // per-vehicle tracks are short; keep the nets light
    base.epochs = 200;       // short tracks need the extra passes for metre-level error
    base.learning_rate = 3e-3;
    tppd::predictor_config pc = tppd::predictor_config_from(cfg, base);
    for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
        tppd::vehicle& v = sc.vehicles[i];
        if (v.predictor) continue;
        pc.seed = tppd::rng::substream(root, "predictor", i).next();
        const auto windows = tppd::build_windows(v.track, pc.seq_len);
        v.predictor =
            std::make_shared<const tppd::trained_predictor>(tppd::train(windows, pc));
    }
}

std::shared_ptr<const tppd::trained_agent> obtain_agent(const config& cfg,
                                                        const tppd::scenario& sc,
                                                        std::uint64_t root,
                                                        tppd::agent_variant variant,
                                                        const std::string& checkpoint_key,
                                                        const std::string& curve_path) {
    const std::string ckpt = cfg.get_string(checkpoint_key, "");
    std::shared_ptr<const tppd::trained_agent> agent;
    if (!ckpt.empty()) {
        agent = std::make_shared<const tppd::trained_agent>(tppd::load_agent(ckpt));
    } else {
        tppd::agent_config base;
        base.seed = tppd::rng::substream(
                        root, variant == tppd::agent_variant::ddqn ? "agent" : "agent-dqn")
                        .next();
        const tppd::agent_config ac = tppd::agent_config_from(cfg, base);
        const tppd::environment env(sc);
        tppd::train_result tr = tppd::train_agent(env, ac, variant);
        if (!curve_path.empty()) tppd::write_learning_curve(curve_path, tr.curve);
        agent = std::make_shared<const tppd::trained_agent>(std::move(tr.agent));
    }
    tppd::require(agent->codec.vehicles == sc.vehicles.size() &&
                      agent->codec.servers == sc.servers.size(),
                  "policy checkpoint shape mismatch: trained for " +
                      std::to_string(agent->codec.vehicles) + " vehicles x " +
                      std::to_string(agent->codec.servers) + " servers");
    return agent;
}

/// Readies everything the requested algorithms need: predictors on the
/// scenario for the pre-decided mode, value networks (loaded from configured
/// checkpoints or trained in place) for the learned ones.
tppd::policy_set prepare_policies(const config& cfg, tppd::scenario& sc,
                                  const std::vector<std::string>& algorithms,
                                  std::uint64_t root, const std::string& out_dir,
                                  bool write_curves) {
    if (contains(algorithms, "tppd")) attach_predictors(cfg, sc, root);
    tppd::policy_set ps;
    if (contains(algorithms, "tppd") || contains(algorithms, "ddqn_rt"))
        ps.ddqn = obtain_agent(cfg, sc, root, tppd::agent_variant::ddqn, "agent.checkpoint",
                               write_curves ? out_dir + "/learning_curve_ddqn.csv" : "");
    if (contains(algorithms, "dqn_rt"))
        ps.dqn = obtain_agent(cfg, sc, root, tppd::agent_variant::dqn, "agent.dqn_checkpoint",
                              write_curves ? out_dir + "/learning_curve_dqn.csv" : "");
    return ps;
}

// ---------------------------------------------------------------------------
// simulate / compare

int cmd_simulate(const cli_options& opt) {
    const config cfg = load_config(opt);
    const std::string out_dir = ensure_output_dir(cfg);
    tppd::scenario sc = load_world(cfg);
    const std::string algo = cfg.get_string("simulate.algorithm", "all_local");
    tppd::require(contains(tppd::experiment_config::known_algorithms(), algo),
                  "simulate: unknown algorithm '" + algo + "'");

    tppd::experiment_config ec = tppd::experiment_config_from(cfg);
    const tppd::policy_set ps = prepare_policies(cfg, sc, {algo}, opt.seed, out_dir, false);
    const tppd::environment env(sc);

    const std::string trace_path = out_dir + "/trace.csv";
    std::ofstream trace(trace_path);
    if (!trace) throw tppd::error("simulate: cannot write '" + trace_path + "'");
    trace << "episode,slot,vehicle,choice,executed,share,delay_s,deadline_met,fallback\n";
    char buf[256];
    const auto sink = [&](int ep, long slot, const tppd::joint_action& a,
                          const tppd::slot_outcome& out) {
        for (std::size_t i = 0; i < a.choice.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%d,%ld,%zu,%d,%d,%.17g,%.17g,%d,%d\n", ep, slot, i,
                          a.choice[i], out.executed[i], out.share[i], out.delay_s[i],
                          out.deadline_met[i] ? 1 : 0, out.fallback[i] ? 1 : 0);
            trace << buf;
        }
    };
    const tppd::run_result r = tppd::run_single(env, algo, opt.seed, ec, ps, sink);
    trace.close();

    std::printf("algorithm=%s trace=%s completion_s=%.17g decision_s=%.17g penalized_s=%.17g "
                "power=%.17g misses=%ld\n",
                r.algorithm.c_str(), trace_path.c_str(), r.completion_s, r.decision_s,
                r.penalized_s, r.power, r.misses);
    return 0;
}

int cmd_compare(const cli_options& opt) {
    const config cfg = load_config(opt);
    const std::string out_dir = ensure_output_dir(cfg);
    tppd::scenario sc = load_world(cfg);
    tppd::experiment_config ec = tppd::experiment_config_from(cfg);
    if (!cfg.has("experiment.seeds")) ec.seeds = {opt.seed};

    const tppd::policy_set ps = prepare_policies(cfg, sc, ec.algorithms, opt.seed, out_dir, true);
    const tppd::environment env(sc);
    const auto results = tppd::run_comparison(env, ec, ps);
    const auto [comparison_path, summary_path] = tppd::emit_csv(results, out_dir);
    std::printf("comparison=%s summary=%s rows=%zu\n", comparison_path.c_str(),
                summary_path.c_str(), results.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vehicular edge offloading: trajectory prediction, value-network "
                 "pre-offloading, and algorithm comparison"};
    app.require_subcommand(1);

    cli_options opt;
    int rc = 0;
    const auto add = [&](const char* name, const char* desc,
                         std::function<int(const cli_options&)> fn) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opt.config_path, "configuration file");
        sub->add_option("--seed", opt.seed, "root random seed");
        sub->callback([&opt, &rc, fn] { rc = fn(opt); });
    };
    add("train-predictor", "train the next-position predictor, report held-out error",
        cmd_train_predictor);
    add("eval-predictor", "evaluate a predictor checkpoint (prints mae,mse,rmse,accuracy)",
        cmd_eval_predictor);
    add("train-agent", "train the offloading value network", cmd_train_agent);
    add("simulate", "roll one algorithm and write a per-slot trace", cmd_simulate);
    add("compare", "run the algorithm comparison and emit result CSVs", cmd_compare);
    add("grad-check", "finite-difference audit of the network gradients", cmd_grad_check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
