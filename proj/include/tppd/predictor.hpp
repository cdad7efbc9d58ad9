#pragma once

// Trajectory predictor: a stacked LSTM plus linear head mapping seq_len
// recent normalized positions to the next one, trained with Adam on MSE.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <tppd/checkpoint.hpp>
#include <tppd/config.hpp>
#include <tppd/data.hpp>
#include <tppd/nn.hpp>

namespace tppd {

struct predictor_config {
    int seq_len = 8;
    int num_layers = 2;
    int hidden_size = 64;
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double grad_clip = 5.0;   // <= 0 disables clipping
    std::uint64_t seed = 1;
};

inline predictor_config predictor_config_from(const config& c,
                                              const predictor_config& base = {}) {
    predictor_config p = base;
    p.seq_len = c.get_int("predictor.seq_len", p.seq_len);
    p.num_layers = c.get_int("predictor.num_layers", p.num_layers);
    p.hidden_size = c.get_int("predictor.hidden_size", p.hidden_size);
    p.epochs = c.get_int("predictor.epochs", p.epochs);
    p.batch_size = c.get_int("predictor.batch_size", p.batch_size);
    p.learning_rate = c.get_double("predictor.learning_rate", p.learning_rate);
    p.grad_clip = c.get_double("predictor.grad_clip", p.grad_clip);
    return p;
}

inline void validate(const predictor_config& c) {
    require(c.seq_len >= 1, "predictor: seq_len must be >= 1");
    require(c.num_layers >= 1, "predictor: num_layers must be >= 1");
    require(c.hidden_size >= 1, "predictor: hidden_size must be >= 1");
    require(c.epochs >= 1 && c.batch_size >= 1, "predictor: epochs and batch_size must be >= 1");
    require(c.learning_rate > 0.0, "predictor: learning_rate must be positive");
}

/// Error metrics over normalized coordinates. rmse = sqrt(mse) and
/// accuracy = 1 - rmse hold exactly by construction.
struct eval_report {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double accuracy = 0.0;
};

struct trained_predictor {
    lstm_regressor<double> model;
    coordinate_bounds bounds{normalization_bounds(0.0, 1.0), normalization_bounds(0.0, 1.0)};
    predictor_config cfg;
};

namespace detail {

/// Gathers dataset windows idx[lo..hi) into a time-major batch.
inline void assemble_batch(const windowed_dataset& d, const std::vector<std::size_t>& idx,
                           std::size_t lo, std::size_t hi, std::vector<matd>& xs, matd& target) {
    const auto batch = static_cast<Eigen::Index>(hi - lo);
    const int seq = d.seq_len;
    xs.assign(static_cast<std::size_t>(seq), matd(batch, 2));
    target.resize(batch, 2);
    for (std::size_t k = lo; k < hi; ++k) {
        const window_sample& w = d.windows[idx[k]];
        const auto row = static_cast<Eigen::Index>(k - lo);
        for (int t = 0; t < seq; ++t) xs[static_cast<std::size_t>(t)].row(row) = w.input.row(t);
        target.row(row) = w.target.transpose();
    }
}

inline bool same_bounds(const coordinate_bounds& a, const coordinate_bounds& b) {
    return a.lat.min() == b.lat.min() && a.lat.max() == b.lat.max() &&
           a.lon.min() == b.lon.min() && a.lon.max() == b.lon.max();
}

} // namespace detail

inline trained_predictor train(const windowed_dataset& data, const predictor_config& cfg) {
    validate(cfg);
    require(!data.windows.empty(), "train: empty dataset");
    require(data.seq_len == cfg.seq_len,
            "train: dataset seq_len " + std::to_string(data.seq_len) + " != config seq_len " +
                std::to_string(cfg.seq_len));

    rng r = rng::substream(cfg.seed, "predictor");
    trained_predictor out{make_lstm_regressor<double>(2, cfg.hidden_size, 2, cfg.num_layers, r),
                          data.bounds, cfg};
    auto ts = out.model.tensors();
    adam_state<double> opt;
    opt.lr = cfg.learning_rate;

    std::vector<std::size_t> order(data.windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<matd> xs;
    matd target;
    regressor_tape<double> tape;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        r.shuffle(order);
        int step = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));
            detail::assemble_batch(data, order, lo, hi, xs, target);
            zero_grads(ts);
            matd pred = out.model.forward(xs, tape);
            auto [loss, dy] = mse_loss(pred, target);
            if (!std::isfinite(loss))
                throw error("train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(step));
            out.model.backward(tape, dy);
            if (cfg.grad_clip > 0.0) clip_global_norm(ts, cfg.grad_clip);
            adam_step(ts, opt);
            ++step;
        }
    }
    return out;
}

inline geo_point predict_next(const trained_predictor& p, const std::vector<geo_point>& window) {
    require(window.size() == static_cast<std::size_t>(p.cfg.seq_len),
            "predict_next: window length " + std::to_string(window.size()) + " != seq_len " +
                std::to_string(p.cfg.seq_len));
    std::vector<matd> xs(static_cast<std::size_t>(p.cfg.seq_len), matd(1, 2));
    for (int t = 0; t < p.cfg.seq_len; ++t) {
        xs[static_cast<std::size_t>(t)](0, 0) = normalize(window[static_cast<std::size_t>(t)].lat_deg, p.bounds.lat);
        xs[static_cast<std::size_t>(t)](0, 1) = normalize(window[static_cast<std::size_t>(t)].lon_deg, p.bounds.lon);
    }
    matd y = p.model.forward(xs);
    return {denormalize(y(0, 0), p.bounds.lat), denormalize(y(0, 1), p.bounds.lon)};
}

inline eval_report evaluate(const trained_predictor& p, const windowed_dataset& test) {
    require(!test.windows.empty(), "evaluate: empty test set");
    require(test.seq_len == p.cfg.seq_len, "evaluate: seq_len mismatch");

    std::vector<std::size_t> idx(test.windows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<matd> xs;
    matd target;
    detail::assemble_batch(test, idx, 0, idx.size(), xs, target);

    // A dataset normalized against other bounds is remapped through raw
    // coordinates into the predictor's space; metrics stay in that space.
    if (!detail::same_bounds(test.bounds, p.bounds)) {
        auto remap = [&](double v, const normalization_bounds& from, const normalization_bounds& to) {
            return normalize(denormalize(v, from), to);
        };
        for (auto& x : xs)
            for (Eigen::Index row = 0; row < x.rows(); ++row) {
                x(row, 0) = remap(x(row, 0), test.bounds.lat, p.bounds.lat);
                x(row, 1) = remap(x(row, 1), test.bounds.lon, p.bounds.lon);
            }
        for (Eigen::Index row = 0; row < target.rows(); ++row) {
            target(row, 0) = remap(target(row, 0), test.bounds.lat, p.bounds.lat);
            target(row, 1) = remap(target(row, 1), test.bounds.lon, p.bounds.lon);
        }
    }

    matd pred = p.model.forward(xs);
    matd diff = pred - target;
    eval_report rep;
    rep.mae = diff.cwiseAbs().mean();
    rep.mse = diff.squaredNorm() / static_cast<double>(diff.size());
    rep.rmse = std::sqrt(rep.mse);
    rep.accuracy = 1.0 - rep.rmse;
    return rep;
}

inline void save_predictor(const std::string& path, trained_predictor& p) {
    checkpoint ck = snapshot_tensors(p.model.tensors(), "tppd predictor v1");
    matd meta(1, 7);
    meta << p.cfg.seq_len, p.cfg.num_layers, p.cfg.hidden_size, p.cfg.epochs, p.cfg.batch_size,
        p.cfg.learning_rate, p.cfg.grad_clip;
    ck.tensors.push_back({"meta.config", meta});
    matd b(1, 4);
    b << p.bounds.lat.min(), p.bounds.lat.max(), p.bounds.lon.min(), p.bounds.lon.max();
    ck.tensors.push_back({"meta.bounds", b});
    save_checkpoint(path, ck);
}

inline trained_predictor load_predictor(const std::string& path) {
    checkpoint ck = load_checkpoint(path);
    const matd& m = ck.find("meta.config");
    require(m.size() == 7, "predictor checkpoint: bad config block");
    predictor_config cfg;
    cfg.seq_len = static_cast<int>(m(0, 0));
    cfg.num_layers = static_cast<int>(m(0, 1));
    cfg.hidden_size = static_cast<int>(m(0, 2));
    cfg.epochs = static_cast<int>(m(0, 3));
    cfg.batch_size = static_cast<int>(m(0, 4));
    cfg.learning_rate = m(0, 5);
    cfg.grad_clip = m(0, 6);
    validate(cfg);

    const matd& b = ck.find("meta.bounds");
    require(b.size() == 4, "predictor checkpoint: bad bounds block");

    rng dummy(0);
    trained_predictor p{make_lstm_regressor<double>(2, cfg.hidden_size, 2, cfg.num_layers, dummy),
                        {normalization_bounds(b(0, 0), b(0, 1)), normalization_bounds(b(0, 2), b(0, 3))},
                        cfg};
    restore_tensors(ck, p.model.tensors());
    return p;
}

} // namespace tppd
