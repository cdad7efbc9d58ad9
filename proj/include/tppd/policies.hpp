#pragma once

// Decision-makers over the environment: a DDQN agent (flat joint action
// space with validity masking, experience replay, periodic target sync), a
// DQN variant that takes its argmax on the target network, an exhaustive
// oracle, and the static baselines (all-local, all-offload, random).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <tppd/checkpoint.hpp>
#include <tppd/config.hpp>
#include <tppd/error.hpp>
#include <tppd/nn.hpp>
#include <tppd/rng.hpp>
#include <tppd/simenv.hpp>

namespace tppd {

// ---------------------------------------------------------------------------
// Joint action codec

/// Mixed-radix codec between joint actions (one choice in [0..K] per
/// vehicle, 0 = local) and flat indices in [0, (K+1)^N). Vehicle 0 is the
/// least significant digit, so index 0 is the all-local action.
struct action_codec {
    std::size_t vehicles = 0;
    std::size_t servers = 0;
    std::size_t total = 0;

    action_codec() = default;
    action_codec(std::size_t n, std::size_t k) : vehicles(n), servers(k) {
        require(n >= 1, "action_codec: need at least one vehicle");
        const std::size_t arity = k + 1;
        std::size_t t = 1;
        for (std::size_t i = 0; i < n; ++i) {
            require(t <= (std::size_t{1} << 20) / arity,
                    "action_codec: joint action space exceeds 2^20; reduce vehicles or servers");
            t *= arity;
        }
        total = t;
    }

    std::size_t encode(const joint_action& a) const {
        require(a.choice.size() == vehicles, "action_codec: wrong action length");
        std::size_t idx = 0;
        const std::size_t arity = servers + 1;
        for (std::size_t i = vehicles; i-- > 0;) {
            const int c = a.choice[i];
            require(c >= 0 && c <= static_cast<int>(servers), "action_codec: choice out of range");
            idx = idx * arity + static_cast<std::size_t>(c);
        }
        return idx;
    }

    joint_action decode(std::size_t idx) const {
        require(idx < total, "action_codec: index out of range");
        joint_action a;
        a.choice.resize(vehicles);
        const std::size_t arity = servers + 1;
        for (std::size_t i = 0; i < vehicles; ++i) {
            a.choice[i] = static_cast<int>(idx % arity);
            idx /= arity;
        }
        return a;
    }
};

// ---------------------------------------------------------------------------
// State encoding

namespace detail {
inline double norm01(double v, double lo, double hi) {
    if (hi <= lo) return 0.5;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}
} // namespace detail

/// Fixed-length [0,1] feature vector: per-vehicle task features (data size,
/// cycles, deadline, priority), then per vehicle x server an availability
/// bit and a range-normalized distance (unavailable: bit 0, distance 1.0),
/// then per-server uncommitted capacity. Length N*4 + N*M*2 + M.
inline std::vector<double> encode_state(const slot_view& view, const scenario& sc) {
    const std::size_t n = sc.vehicles.size();
    const std::size_t m = sc.servers.size();
    require(view.tasks.size() == n, "encode_state: task count mismatch");
    std::vector<double> s;
    s.reserve(n * 4 + n * m * 2 + m);
    const task_ranges& tr = sc.ranges;
    for (const task& t : view.tasks) {
        s.push_back(detail::norm01(t.data_bits, tr.data_bits_min, tr.data_bits_max));
        s.push_back(detail::norm01(t.cycles, tr.cycles_min, tr.cycles_max));
        s.push_back(detail::norm01(t.deadline_s, tr.deadline_min, tr.deadline_max));
        s.push_back(std::clamp(t.priority, 0.0, 1.0));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            const bool avail = view.available[i][k];
            s.push_back(avail ? 1.0 : 0.0);
            if (avail) {
                const double limit =
                    std::min(sc.servers[k].service_range_m, sc.vehicles[i].comm_range_m);
                s.push_back(detail::norm01(view.distance_m[i][k], 0.0, limit));
            } else {
                s.push_back(1.0);
            }
        }
    }
    for (double u : view.uncommitted) s.push_back(std::clamp(u, 0.0, 1.0));
    return s;
}

inline std::size_t state_dim(std::size_t vehicles, std::size_t servers) {
    return vehicles * 4 + vehicles * servers * 2 + servers;
}

// ---------------------------------------------------------------------------
// Action validity and selection

/// Marks the joint actions whose every offload target is available to its
/// vehicle. The all-local action (index 0) is always valid.
inline std::vector<std::uint8_t> valid_actions(const slot_view& view, const action_codec& codec) {
    std::vector<std::uint8_t> mask(codec.total, 0);
    for (std::size_t idx = 0; idx < codec.total; ++idx) {
        const std::size_t arity = codec.servers + 1;
        std::size_t rest = idx;
        bool ok = true;
        for (std::size_t i = 0; i < codec.vehicles && ok; ++i) {
            const std::size_t c = rest % arity;
            rest /= arity;
            if (c != 0) ok = view.available[i][c - 1];
        }
        mask[idx] = ok ? 1 : 0;
    }
    return mask;
}

/// Highest-value valid action, ties to the lowest index.
inline std::size_t masked_argmax(const std::vector<double>& q,
                                 const std::vector<std::uint8_t>& mask) {
    require(q.size() == mask.size(), "masked_argmax: size mismatch");
    std::size_t best = q.size();
    for (std::size_t a = 0; a < q.size(); ++a) {
        if (!mask[a]) continue;
        if (best == q.size() || q[a] > q[best]) best = a;
    }
    require(best < q.size(), "masked_argmax: no valid action");
    return best;
}

/// Epsilon-greedy over the valid set: explore uniformly with probability
/// eps, otherwise exploit via masked_argmax.
inline std::size_t select_action(const std::vector<double>& q,
                                 const std::vector<std::uint8_t>& mask, double eps, rng& r) {
    require(q.size() == mask.size(), "select_action: size mismatch");
    if (r.uniform() < eps) {
        std::size_t count = 0;
        for (std::uint8_t v : mask) count += v;
        require(count > 0, "select_action: no valid action");
        std::size_t pick = static_cast<std::size_t>(
            r.uniform_int(0, static_cast<std::int64_t>(count) - 1));
        for (std::size_t a = 0; a < mask.size(); ++a) {
            if (!mask[a]) continue;
            if (pick == 0) return a;
            --pick;
        }
    }
    return masked_argmax(q, mask);
}

// ---------------------------------------------------------------------------
// Replay

struct transition {
    std::vector<double> state;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    std::vector<std::uint8_t> next_mask;
    bool terminal = false;
};

/// Fixed-capacity FIFO: when full, each insertion evicts the oldest entry.
class replay_buffer {
public:
    explicit replay_buffer(std::size_t capacity) : capacity_(capacity) {
        require(capacity >= 1, "replay_buffer: capacity must be >= 1");
        data_.reserve(capacity);
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return data_.size() == capacity_; }

    void push(transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    /// Entries in insertion order, oldest first.
    const transition& at(std::size_t i) const {
        require(i < data_.size(), "replay_buffer: index out of range");
        return data_[(head_ + i) % data_.size()];
    }

    std::vector<std::size_t> sample_indices(rng& r, std::size_t batch) const {
        require(!data_.empty(), "replay_buffer: cannot sample while empty");
        std::vector<std::size_t> idx(batch);
        for (auto& i : idx)
            i = static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(size()) - 1));
        return idx;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<transition> data_;
};

// ---------------------------------------------------------------------------
// Q targets

namespace detail {

inline matf batch_rows(const std::vector<const transition*>& batch, bool next) {
    const auto& first = next ? batch.front()->next_state : batch.front()->state;
    matf x(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(first.size()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& src = next ? batch[b]->next_state : batch[b]->state;
        require(src.size() == first.size(), "q targets: ragged batch");
        for (std::size_t j = 0; j < src.size(); ++j)
            x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) =
                static_cast<float>(src[j]);
    }
    return x;
}

inline std::vector<double> row_values(const matf& m, Eigen::Index b) {
    std::vector<double> q(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index a = 0; a < m.cols(); ++a)
        q[static_cast<std::size_t>(a)] = static_cast<double>(m(b, a));
    return q;
}

} // namespace detail

/// Double-estimator targets: y = r + gamma * Q_target(s', a*) with a* the
/// online network's best valid action at s'; terminal transitions use y = r.
inline std::vector<double> ddqn_targets(const std::vector<const transition*>& batch,
                                        const mlp<float>& online, const mlp<float>& target_net,
                                        double gamma) {
    require(!batch.empty(), "ddqn_targets: empty batch");
    const matf next = detail::batch_rows(batch, true);
    const matf q_online = online.forward(next);
    const matf q_target = target_net.forward(next);
    std::vector<double> y(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const transition& t = *batch[b];
        if (t.terminal) {
            y[b] = t.reward;
            continue;
        }
        const auto bi = static_cast<Eigen::Index>(b);
        const std::size_t a_star = masked_argmax(detail::row_values(q_online, bi), t.next_mask);
        y[b] = t.reward +
               gamma * static_cast<double>(q_target(bi, static_cast<Eigen::Index>(a_star)));
    }
    return y;
}

/// Single-estimator targets: y = r + gamma * max over valid actions of
/// Q_target(s', .).
inline std::vector<double> dqn_targets(const std::vector<const transition*>& batch,
                                       const mlp<float>& target_net, double gamma) {
    require(!batch.empty(), "dqn_targets: empty batch");
    const matf next = detail::batch_rows(batch, true);
    const matf q_target = target_net.forward(next);
    std::vector<double> y(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const transition& t = *batch[b];
        if (t.terminal) {
            y[b] = t.reward;
            continue;
        }
        const auto bi = static_cast<Eigen::Index>(b);
        const std::size_t a_star = masked_argmax(detail::row_values(q_target, bi), t.next_mask);
        y[b] = t.reward +
               gamma * static_cast<double>(q_target(bi, static_cast<Eigen::Index>(a_star)));
    }
    return y;
}

// ---------------------------------------------------------------------------
// Agent

enum class agent_variant { ddqn, dqn };

struct agent_config {
    double gamma = 0.95;
    double eps_start = 1.0;
    double eps_end = 0.05;
    long eps_decay_steps = 5000;
    int batch_size = 64;
    long target_sync = 200;
    double learning_rate = 1e-3;
    double grad_clip = 5.0;      // <= 0 disables
    std::size_t buffer_capacity = 10000;
    long train_steps = 10000;    // acting steps after the buffer fills
    int hidden = 128;
    std::uint64_t seed = 1;
    position_mode mode = position_mode::actual;

    void validate() const {
        require(gamma >= 0.0 && gamma < 1.0, "agent: gamma must be in [0,1)");
        require(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0,
                "agent: epsilon must stay in [0,1]");
        require(eps_decay_steps >= 1, "agent: eps_decay_steps must be >= 1");
        require(batch_size >= 1, "agent: batch_size must be >= 1");
        require(target_sync >= 1, "agent: target_sync must be >= 1");
        require(learning_rate > 0.0, "agent: learning_rate must be positive");
        require(buffer_capacity >= static_cast<std::size_t>(batch_size),
                "agent: buffer must hold at least one batch");
        require(train_steps >= 0, "agent: train_steps must be >= 0");
        require(hidden >= 1, "agent: hidden width must be >= 1");
    }
};

inline agent_config agent_config_from(const config& cfg, agent_config base = {}) {
    base.gamma = cfg.get_double("agent.gamma", base.gamma);
    base.eps_start = cfg.get_double("agent.eps_start", base.eps_start);
    base.eps_end = cfg.get_double("agent.eps_end", base.eps_end);
    base.eps_decay_steps = cfg.get_int("agent.eps_decay_steps", base.eps_decay_steps);
    base.batch_size = static_cast<int>(cfg.get_int("agent.batch_size", base.batch_size));
    base.target_sync = cfg.get_int("agent.target_sync", base.target_sync);
    base.learning_rate = cfg.get_double("agent.learning_rate", base.learning_rate);
    base.grad_clip = cfg.get_double("agent.grad_clip", base.grad_clip);
    base.buffer_capacity = static_cast<std::size_t>(
        cfg.get_int("agent.buffer_capacity", static_cast<std::int64_t>(base.buffer_capacity)));
    base.train_steps = cfg.get_int("agent.train_steps", base.train_steps);
    base.hidden = static_cast<int>(cfg.get_int("agent.hidden", base.hidden));
    base.seed = static_cast<std::uint64_t>(cfg.get_int("agent.seed", static_cast<std::int64_t>(base.seed)));
    if (cfg.has("agent.position_mode")) {
        const std::string m = cfg.get_string("agent.position_mode");
        if (m == "actual")
            base.mode = position_mode::actual;
        else if (m == "predicted")
            base.mode = position_mode::predicted;
        else
            throw error("agent: position_mode must be 'actual' or 'predicted', got '" + m + "'");
    }
    base.validate();
    return base;
}

/// Frozen greedy policy: the online network plus the codec it indexes.
struct trained_agent {
    mlp<float> online;
    action_codec codec;
    agent_config cfg;
    agent_variant variant = agent_variant::ddqn;

    std::vector<double> q_values(const slot_view& view, const scenario& sc) const {
        const std::vector<double> s = encode_state(view, sc);
        matf x(1, static_cast<Eigen::Index>(s.size()));
        for (std::size_t j = 0; j < s.size(); ++j)
            x(0, static_cast<Eigen::Index>(j)) = static_cast<float>(s[j]);
        return detail::row_values(online.forward(x), 0);
    }

    joint_action greedy_action(const slot_view& view, const scenario& sc) const {
        return codec.decode(masked_argmax(q_values(view, sc), valid_actions(view, codec)));
    }
};

struct curve_point {
    long step = 0;            // acting steps so far (including the fill phase)
    double episode_reward = 0.0;
    double loss = 0.0;        // mean TD loss over the episode (0 while filling)
    double epsilon = 0.0;
};

struct train_result {
    trained_agent agent;
    std::vector<curve_point> curve;
};

namespace detail {

/// One minibatch update; returns the TD loss. The gradient flows only
/// through the taken action's output.
inline double q_update(mlp<float>& online, const mlp<float>& target_net,
                       const std::vector<const transition*>& batch, const agent_config& cfg,
                       agent_variant variant, adam_state<float>& opt) {
    const std::vector<double> y = variant == agent_variant::ddqn
                                      ? ddqn_targets(batch, online, target_net, cfg.gamma)
                                      : dqn_targets(batch, target_net, cfg.gamma);
    const matf x = batch_rows(batch, false);
    mlp_tape<float> tape;
    const matf q = online.forward(x, tape);
    matf dy = matf::Zero(q.rows(), q.cols());
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto bi = static_cast<Eigen::Index>(b);
        const auto ai = static_cast<Eigen::Index>(batch[b]->action);
        require(ai < q.cols(), "q_update: action index outside the network head");
        const double diff = static_cast<double>(q(bi, ai)) - y[b];
        loss += diff * diff * inv_b;
        dy(bi, ai) = static_cast<float>(2.0 * diff * inv_b);
    }
    auto ts = online.tensors();
    zero_grads(ts);
    online.backward(tape, dy);
    if (cfg.grad_clip > 0.0) clip_global_norm(ts, cfg.grad_clip);
    adam_step(ts, opt);
    return loss;
}

} // namespace detail

/// Trains a value network against the environment: random-policy experience
/// collection until the replay buffer is full, then interleaved epsilon-
/// greedy acting and minibatch learning with periodic bit-exact target
/// sync. Tasks are drawn from a fresh substream each episode. Deterministic
/// per seed.
inline train_result train_agent(const environment& env, const agent_config& cfg,
                                agent_variant variant) {
    cfg.validate();
    const std::size_t n = env.vehicle_count();
    const std::size_t m = env.server_count();
    const action_codec codec(n, m);
    const scenario& sc = env.world();
    const auto dim = static_cast<int>(state_dim(n, m));

    rng r_init = rng::substream(cfg.seed, "agent-init");
    rng r_act = rng::substream(cfg.seed, "agent-act");
    rng r_replay = rng::substream(cfg.seed, "agent-replay");

    mlp<float> online = make_mlp<float>(
        {dim, cfg.hidden, cfg.hidden, static_cast<int>(codec.total)}, r_init);
    mlp<float> target_net = online;
    adam_state<float> opt;
    opt.lr = static_cast<float>(cfg.learning_rate);

    replay_buffer buffer(cfg.buffer_capacity);
    std::vector<curve_point> curve;

    long act_steps = 0;        // total environment steps
    long learn_steps = 0;
    long steps_after_fill = 0;
    std::uint64_t episode = 0;
    const long slots = sc.slots_per_episode;

    while (buffer.size() < buffer.capacity() || steps_after_fill < cfg.train_steps) {
        const std::uint64_t ep_seed = splitmix64(cfg.seed ^ splitmix64(episode + 1));
        env_state st = env.initial_state();
        double ep_reward = 0.0;
        double ep_loss = 0.0;
        long ep_learned = 0;
        double eps = cfg.eps_start;

        for (long j = 0; j < slots; ++j) {
            const std::vector<task> tasks = env.tasks_for_slot_seeded(ep_seed, st.slot);
            const slot_view view = env.observe(st, tasks, cfg.mode);
            std::vector<double> s = encode_state(view, sc);
            std::vector<std::uint8_t> mask = valid_actions(view, codec);

            const bool filling = !buffer.full();
            if (filling) {
                eps = cfg.eps_start;
            } else {
                const double frac = std::min(
                    1.0, static_cast<double>(steps_after_fill) /
                             static_cast<double>(cfg.eps_decay_steps));
                eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
            }

            std::size_t a;
            if (r_act.uniform() < eps) {
                std::size_t count = 0;
                for (std::uint8_t v : mask) count += v;
                std::size_t pick = static_cast<std::size_t>(
                    r_act.uniform_int(0, static_cast<std::int64_t>(count) - 1));
                a = 0;
                for (std::size_t i = 0; i < mask.size(); ++i) {
                    if (!mask[i]) continue;
                    if (pick == 0) {
                        a = i;
                        break;
                    }
                    --pick;
                }
            } else {
                matf x(1, dim);
                for (std::size_t k = 0; k < s.size(); ++k)
                    x(0, static_cast<Eigen::Index>(k)) = static_cast<float>(s[k]);
                a = masked_argmax(detail::row_values(online.forward(x), 0), mask);
            }

            const slot_outcome out = env.step(st, codec.decode(a), tasks);
            const double rwd = reward(out, sc.penalty_miss);
            ep_reward += rwd;

            transition t;
            t.state = std::move(s);
            t.action = a;
            t.reward = rwd;
            t.terminal = j + 1 == slots;
            if (t.terminal) {
                t.next_state.assign(static_cast<std::size_t>(dim), 0.0);
                t.next_mask.assign(codec.total, 0);
                t.next_mask[0] = 1;
            } else {
                const std::vector<task> next_tasks = env.tasks_for_slot_seeded(ep_seed, st.slot);
                const slot_view next_view = env.observe(st, next_tasks, cfg.mode);
                t.next_state = encode_state(next_view, sc);
                t.next_mask = valid_actions(next_view, codec);
            }
            buffer.push(std::move(t));
            ++act_steps;
            if (!filling) {
                ++steps_after_fill;
                const auto idx = buffer.sample_indices(r_replay, static_cast<std::size_t>(cfg.batch_size));
                std::vector<const transition*> batch;
                batch.reserve(idx.size());
                for (std::size_t i : idx) batch.push_back(&buffer.at(i));
                const double loss = detail::q_update(online, target_net, batch, cfg, variant, opt);
                if (!std::isfinite(loss))
                    throw error("train_agent: non-finite loss at step " +
                                std::to_string(steps_after_fill));
                ep_loss += loss;
                ++ep_learned;
                ++learn_steps;
                if (learn_steps % cfg.target_sync == 0) target_net = online;
            }
        }

        curve.push_back({act_steps, ep_reward,
                         ep_learned > 0 ? ep_loss / static_cast<double>(ep_learned) : 0.0, eps});
        ++episode;
    }

    return {trained_agent{std::move(online), codec, cfg, variant}, std::move(curve)};
}

/// Learning-curve CSV: one row per episode.
inline void write_learning_curve(const std::string& path, const std::vector<curve_point>& curve) {
    std::ofstream out(path);
    if (!out) throw error("learning curve: cannot write '" + path + "'");
    out << "step,episode_reward,loss,epsilon\n";
    char buf[160];
    for (const curve_point& c : curve) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", c.step, c.episode_reward,
                      c.loss, c.epsilon);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Agent checkpoints

inline void save_agent(const std::string& path, trained_agent& agent) {
    auto ck = snapshot_tensors(agent.online.tensors(), "tppd agent v1");
    matd sizes(1, static_cast<Eigen::Index>(agent.online.layers.size()) + 1);
    sizes(0, 0) = agent.online.in_size();
    for (std::size_t l = 0; l < agent.online.layers.size(); ++l)
        sizes(0, static_cast<Eigen::Index>(l) + 1) = agent.online.layers[l].out_size();
    ck.tensors.push_back({"meta.sizes", sizes});
    matd codec(1, 2);
    codec << static_cast<double>(agent.codec.vehicles), static_cast<double>(agent.codec.servers);
    ck.tensors.push_back({"meta.codec", codec});
    matd meta(1, 13);
    meta << agent.cfg.gamma, agent.cfg.eps_start, agent.cfg.eps_end,
        static_cast<double>(agent.cfg.eps_decay_steps), static_cast<double>(agent.cfg.batch_size),
        static_cast<double>(agent.cfg.target_sync), agent.cfg.learning_rate, agent.cfg.grad_clip,
        static_cast<double>(agent.cfg.buffer_capacity), static_cast<double>(agent.cfg.train_steps),
        static_cast<double>(agent.cfg.hidden), static_cast<double>(agent.cfg.seed),
        agent.variant == agent_variant::ddqn ? 0.0 : 1.0;
    ck.tensors.push_back({"meta.agent", meta});
    save_checkpoint(path, ck);
}

inline trained_agent load_agent(const std::string& path) {
    const checkpoint ck = load_checkpoint(path);
    const matd& sizes = ck.find("meta.sizes");
    std::vector<int> dims;
    for (Eigen::Index j = 0; j < sizes.cols(); ++j)
        dims.push_back(static_cast<int>(sizes(0, j)));
    const matd& codec = ck.find("meta.codec");
    const matd& meta = ck.find("meta.agent");

    trained_agent agent;
    rng r(0);
    agent.online = make_mlp<float>(dims, r);
    restore_tensors(ck, agent.online.tensors());
    agent.codec = action_codec(static_cast<std::size_t>(codec(0, 0)),
                               static_cast<std::size_t>(codec(0, 1)));
    agent.cfg.gamma = meta(0, 0);
    agent.cfg.eps_start = meta(0, 1);
    agent.cfg.eps_end = meta(0, 2);
    agent.cfg.eps_decay_steps = static_cast<long>(meta(0, 3));
    agent.cfg.batch_size = static_cast<int>(meta(0, 4));
    agent.cfg.target_sync = static_cast<long>(meta(0, 5));
    agent.cfg.learning_rate = meta(0, 6);
    agent.cfg.grad_clip = meta(0, 7);
    agent.cfg.buffer_capacity = static_cast<std::size_t>(meta(0, 8));
    agent.cfg.train_steps = static_cast<long>(meta(0, 9));
    agent.cfg.hidden = static_cast<int>(meta(0, 10));
    agent.cfg.seed = static_cast<std::uint64_t>(meta(0, 11));
    agent.variant = meta(0, 12) == 0.0 ? agent_variant::ddqn : agent_variant::dqn;
    return agent;
}

// ---------------------------------------------------------------------------
// Baselines

/// Tries every valid joint action against a copy of the state and returns
/// the one with the smallest realized total delay; ties go to the lowest
/// action index.
inline joint_action exhaustive_policy(const environment& env, const env_state& st,
                                      const std::vector<task>& tasks) {
    const action_codec codec(env.vehicle_count(), env.server_count());
    const slot_view view = env.observe(st, tasks, position_mode::actual);
    const std::vector<std::uint8_t> mask = valid_actions(view, codec);
    std::size_t best = 0;
    double best_delay = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < codec.total; ++a) {
        if (!mask[a]) continue;
        env_state trial = st;
        const slot_outcome out = env.step(trial, codec.decode(a), tasks);
        if (out.total_delay_s < best_delay) {
            best_delay = out.total_delay_s;
            best = a;
        }
    }
    return codec.decode(best);
}

inline joint_action all_local_policy(std::size_t vehicles) {
    joint_action a;
    a.choice.assign(vehicles, 0);
    return a;
}

/// Offloads every vehicle to its highest-rate available server; vehicles
/// with no server in range run locally.
inline joint_action all_offload_policy(const environment& env, const slot_view& view) {
    const scenario& sc = env.world();
    joint_action a;
    a.choice.assign(sc.vehicles.size(), 0);
    for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
        double best_rate = -1.0;
        for (std::size_t k = 0; k < sc.servers.size(); ++k) {
            if (!view.available[i][k]) continue;
            const double rate =
                transmission_rate(sc.vehicles[i], sc.servers[k], view.distance_m[i][k], sc.channel);
            if (rate > best_rate) {
                best_rate = rate;
                a.choice[i] = static_cast<int>(k) + 1;
            }
        }
    }
    return a;
}

/// Uniformly random valid joint action.
inline joint_action random_policy(const slot_view& view, const action_codec& codec, rng& r) {
    const std::vector<std::uint8_t> mask = valid_actions(view, codec);
    std::size_t count = 0;
    for (std::uint8_t v : mask) count += v;
    std::size_t pick =
        static_cast<std::size_t>(r.uniform_int(0, static_cast<std::int64_t>(count) - 1));
    for (std::size_t a = 0; a < mask.size(); ++a) {
        if (!mask[a]) continue;
        if (pick == 0) return codec.decode(a);
        --pick;
    }
    return codec.decode(0);
}

} // namespace tppd
