#pragma once

// Minimal neural toolkit: dense layers, LSTM with backpropagation through
// time, MSE loss, Adam, global-norm clipping, and a finite-difference
// gradient checker. Everything is batched: activations are (batch x features)
// row-major matrices, sequences are time-major vectors of such matrices.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <tppd/error.hpp>
#include <tppd/rng.hpp>

namespace tppd {

template <class T>
using mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using matd = mat<double>;
using matf = mat<float>;

/// Named handle onto one parameter tensor and its gradient accumulator.
/// Optimizers, checkpoints, and the gradient checker all walk these lists.
template <class T>
struct tensor_view {
    std::string name;
    mat<T>* value = nullptr;
    mat<T>* grad = nullptr;
};

template <class T>
void zero_grads(const std::vector<tensor_view<T>>& ts) {
    for (const auto& t : ts) t.grad->setZero();
}

template <class T>
double global_grad_norm(const std::vector<tensor_view<T>>& ts) {
    double sq = 0.0;
    for (const auto& t : ts) sq += t.grad->template cast<double>().squaredNorm();
    return std::sqrt(sq);
}

/// Scales all gradients so their global norm is at most max_norm.
/// Returns the pre-clip norm.
template <class T>
double clip_global_norm(const std::vector<tensor_view<T>>& ts, double max_norm) {
    const double norm = global_grad_norm(ts);
    if (norm > max_norm && norm > 0.0) {
        const T scale = static_cast<T>(max_norm / norm);
        for (const auto& t : ts) *t.grad *= scale;
    }
    return norm;
}

namespace detail {

template <class T>
mat<T> sigmoid(const mat<T>& x) {
    return (T(1) / (T(1) + (-x.array()).exp())).matrix();
}

template <class T>
void uniform_fill(mat<T>& m, double lo, double hi, rng& r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index rr = 0; rr < m.rows(); ++rr)
            m(rr, c) = static_cast<T>(r.uniform(lo, hi));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dense layer

template <class T>
struct dense_params {
    mat<T> w;   // out x in
    mat<T> b;   // 1 x out
    mat<T> dw, db;

    int in_size() const { return static_cast<int>(w.cols()); }
    int out_size() const { return static_cast<int>(w.rows()); }

    std::vector<tensor_view<T>> tensors(const std::string& prefix = "") {
        return {{prefix + "w", &w, &dw}, {prefix + "b", &b, &db}};
    }
};

/// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], bias zero.
template <class T>
dense_params<T> make_dense(int in, int out, rng& r) {
    require(in >= 1 && out >= 1, "make_dense: sizes must be positive");
    dense_params<T> p;
    p.w.resize(out, in);
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    detail::uniform_fill(p.w, -s, s, r);
    p.b = mat<T>::Zero(1, out);
    p.dw = mat<T>::Zero(out, in);
    p.db = mat<T>::Zero(1, out);
    return p;
}

template <class T>
mat<T> dense_forward(const mat<T>& x, const dense_params<T>& p) {
    require(x.cols() == p.w.cols(), "dense_forward: input width " + std::to_string(x.cols()) +
                                        " != " + std::to_string(p.w.cols()));
    mat<T> y = x * p.w.transpose();
    y.rowwise() += p.b.row(0);
    return y;
}

/// Accumulates dw/db; returns gradient wrt the input.
template <class T>
mat<T> dense_backward(const mat<T>& x, const mat<T>& dy, dense_params<T>& p) {
    require(dy.cols() == p.w.rows() && x.rows() == dy.rows(),
            "dense_backward: shape mismatch");
    p.dw.noalias() += dy.transpose() * x;
    p.db.row(0) += dy.colwise().sum();
    return dy * p.w;
}

// ---------------------------------------------------------------------------
// LSTM

template <class T>
struct lstm_params {
    mat<T> w_i, w_f, w_g, w_o;   // hidden x in
    mat<T> u_i, u_f, u_g, u_o;   // hidden x hidden
    mat<T> b_i, b_f, b_g, b_o;   // 1 x hidden
    mat<T> dw_i, dw_f, dw_g, dw_o;
    mat<T> du_i, du_f, du_g, du_o;
    mat<T> db_i, db_f, db_g, db_o;

    int in_size() const { return static_cast<int>(w_i.cols()); }
    int hidden_size() const { return static_cast<int>(w_i.rows()); }

    std::vector<tensor_view<T>> tensors(const std::string& prefix = "") {
        return {
            {prefix + "w_i", &w_i, &dw_i}, {prefix + "w_f", &w_f, &dw_f},
            {prefix + "w_g", &w_g, &dw_g}, {prefix + "w_o", &w_o, &dw_o},
            {prefix + "u_i", &u_i, &du_i}, {prefix + "u_f", &u_f, &du_f},
            {prefix + "u_g", &u_g, &du_g}, {prefix + "u_o", &u_o, &du_o},
            {prefix + "b_i", &b_i, &db_i}, {prefix + "b_f", &b_f, &db_f},
            {prefix + "b_g", &b_g, &db_g}, {prefix + "b_o", &b_o, &db_o},
        };
    }
};

/// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per matrix; biases
/// zero except the forget gate, which starts at 1 so early training keeps
/// memory open.
template <class T>
lstm_params<T> make_lstm(int in, int hidden, rng& r) {
    require(in >= 1 && hidden >= 1, "make_lstm: sizes must be positive");
    lstm_params<T> p;
    const double sw = 1.0 / std::sqrt(static_cast<double>(in));
    const double su = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (mat<T>* m : {&p.w_i, &p.w_f, &p.w_g, &p.w_o}) {
        m->resize(hidden, in);
        detail::uniform_fill(*m, -sw, sw, r);
    }
    for (mat<T>* m : {&p.u_i, &p.u_f, &p.u_g, &p.u_o}) {
        m->resize(hidden, hidden);
        detail::uniform_fill(*m, -su, su, r);
    }
    for (mat<T>* m : {&p.b_i, &p.b_g, &p.b_o}) *m = mat<T>::Zero(1, hidden);
    p.b_f = mat<T>::Constant(1, hidden, T(1));
    for (mat<T>* m : {&p.dw_i, &p.dw_f, &p.dw_g, &p.dw_o}) *m = mat<T>::Zero(hidden, in);
    for (mat<T>* m : {&p.du_i, &p.du_f, &p.du_g, &p.du_o}) *m = mat<T>::Zero(hidden, hidden);
    for (mat<T>* m : {&p.db_i, &p.db_f, &p.db_g, &p.db_o}) *m = mat<T>::Zero(1, hidden);
    return p;
}

/// One time step of recorded activations (batch x hidden unless noted).
template <class T>
struct lstm_step {
    mat<T> x;        // batch x in
    mat<T> h_prev, c_prev;
    mat<T> i, f, g, o;
    mat<T> c, tanh_c, h;
};

/// Full tape across a sequence; index t holds step t's activations.
template <class T>
using tape_cache = std::vector<lstm_step<T>>;

template <class T>
lstm_step<T> lstm_cell_forward(const mat<T>& x, const mat<T>& h_prev, const mat<T>& c_prev,
                               const lstm_params<T>& p) {
    require(x.cols() == p.w_i.cols(), "lstm_cell_forward: input width mismatch");
    require(h_prev.cols() == p.w_i.rows() && c_prev.cols() == p.w_i.rows(),
            "lstm_cell_forward: state width mismatch");
    require(x.rows() == h_prev.rows() && x.rows() == c_prev.rows(),
            "lstm_cell_forward: batch size mismatch");

    lstm_step<T> s;
    s.x = x;
    s.h_prev = h_prev;
    s.c_prev = c_prev;

    auto gate = [&](const mat<T>& w, const mat<T>& u, const mat<T>& b) {
        mat<T> pre = x * w.transpose();
        pre.noalias() += h_prev * u.transpose();
        pre.rowwise() += b.row(0);
        return pre;
    };
    s.i = detail::sigmoid<T>(gate(p.w_i, p.u_i, p.b_i));
    s.f = detail::sigmoid<T>(gate(p.w_f, p.u_f, p.b_f));
    s.g = gate(p.w_g, p.u_g, p.b_g).array().tanh().matrix();
    s.o = detail::sigmoid<T>(gate(p.w_o, p.u_o, p.b_o));
    s.c = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
    s.tanh_c = s.c.array().tanh().matrix();
    s.h = (s.o.array() * s.tanh_c.array()).matrix();
    return s;
}

/// Runs the cell over a time-major batched sequence (xs[t] is batch x in),
/// starting from zero state. Returns the tape; last step's h is the output.
template <class T>
tape_cache<T> lstm_forward_batched(const std::vector<mat<T>>& xs, const lstm_params<T>& p) {
    require(!xs.empty(), "lstm_forward: empty sequence");
    const Eigen::Index batch = xs[0].rows();
    const int hidden = p.hidden_size();
    tape_cache<T> tape;
    tape.reserve(xs.size());
    mat<T> h = mat<T>::Zero(batch, hidden);
    mat<T> c = mat<T>::Zero(batch, hidden);
    for (const auto& x : xs) {
        tape.push_back(lstm_cell_forward(x, h, c, p));
        h = tape.back().h;
        c = tape.back().c;
    }
    return tape;
}

/// Single-sequence convenience: seq is T x in (one row per time step).
/// Returns (hidden sequence T x hidden, final h, final c, tape).
template <class T>
struct lstm_forward_result {
    mat<T> hidden_seq;
    mat<T> h, c;   // 1 x hidden
    tape_cache<T> tape;
};

template <class T>
lstm_forward_result<T> lstm_forward(const mat<T>& seq, const lstm_params<T>& p,
                                    const mat<T>& h0, const mat<T>& c0) {
    require(seq.rows() >= 1, "lstm_forward: empty sequence");
    lstm_forward_result<T> out;
    out.tape.reserve(static_cast<std::size_t>(seq.rows()));
    out.hidden_seq.resize(seq.rows(), p.hidden_size());
    mat<T> h = h0, c = c0;
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        out.tape.push_back(lstm_cell_forward<T>(seq.row(t), h, c, p));
        h = out.tape.back().h;
        c = out.tape.back().c;
        out.hidden_seq.row(t) = h.row(0);
    }
    out.h = h;
    out.c = c;
    return out;
}

template <class T>
lstm_forward_result<T> lstm_forward(const mat<T>& seq, const lstm_params<T>& p) {
    const mat<T> z = mat<T>::Zero(1, p.hidden_size());
    return lstm_forward(seq, p, z, z);
}

/// Backpropagation through time. dh_seq[t] is the upstream gradient arriving
/// at step t's hidden output (zero matrices where nothing arrives).
/// Accumulates parameter gradients; returns per-step input gradients.
template <class T>
std::vector<mat<T>> lstm_backward(const tape_cache<T>& tape, const std::vector<mat<T>>& dh_seq,
                                  lstm_params<T>& p) {
    require(tape.size() == dh_seq.size(), "lstm_backward: tape/gradient length mismatch");
    require(!tape.empty(), "lstm_backward: empty tape");

    const Eigen::Index batch = tape[0].x.rows();
    const int hidden = p.hidden_size();
    std::vector<mat<T>> dx(tape.size());

    mat<T> dh_carry = mat<T>::Zero(batch, hidden);
    mat<T> dc_carry = mat<T>::Zero(batch, hidden);

    for (std::size_t ti = tape.size(); ti-- > 0;) {
        const lstm_step<T>& s = tape[ti];
        mat<T> dh = dh_seq[ti] + dh_carry;

        mat<T> dpre_o = (dh.array() * s.tanh_c.array() * s.o.array() * (T(1) - s.o.array())).matrix();
        mat<T> dc = dc_carry;
        dc.array() += dh.array() * s.o.array() * (T(1) - s.tanh_c.array().square());

        mat<T> dpre_f = (dc.array() * s.c_prev.array() * s.f.array() * (T(1) - s.f.array())).matrix();
        mat<T> dpre_i = (dc.array() * s.g.array() * s.i.array() * (T(1) - s.i.array())).matrix();
        mat<T> dpre_g = (dc.array() * s.i.array() * (T(1) - s.g.array().square())).matrix();

        p.dw_i.noalias() += dpre_i.transpose() * s.x;
        p.dw_f.noalias() += dpre_f.transpose() * s.x;
        p.dw_g.noalias() += dpre_g.transpose() * s.x;
        p.dw_o.noalias() += dpre_o.transpose() * s.x;
        p.du_i.noalias() += dpre_i.transpose() * s.h_prev;
        p.du_f.noalias() += dpre_f.transpose() * s.h_prev;
        p.du_g.noalias() += dpre_g.transpose() * s.h_prev;
        p.du_o.noalias() += dpre_o.transpose() * s.h_prev;
        p.db_i.row(0) += dpre_i.colwise().sum();
        p.db_f.row(0) += dpre_f.colwise().sum();
        p.db_g.row(0) += dpre_g.colwise().sum();
        p.db_o.row(0) += dpre_o.colwise().sum();

        dx[ti] = dpre_i * p.w_i + dpre_f * p.w_f + dpre_g * p.w_g + dpre_o * p.w_o;
        dh_carry = dpre_i * p.u_i + dpre_f * p.u_f + dpre_g * p.u_g + dpre_o * p.u_o;
        dc_carry = (dc.array() * s.f.array()).matrix();
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Loss

/// Mean squared error over every scalar element; grad is wrt pred.
template <class T>
std::pair<double, mat<T>> mse_loss(const mat<T>& pred, const mat<T>& target) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(),
            "mse_loss: shape mismatch");
    require(pred.size() >= 1, "mse_loss: empty input");
    const double n = static_cast<double>(pred.size());
    mat<T> diff = pred - target;
    const double loss = diff.template cast<double>().squaredNorm() / n;
    mat<T> grad = diff * static_cast<T>(2.0 / n);
    return {loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Adam

template <class T>
struct adam_state {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<mat<T>> m, v;
};

/// Standard Adam with bias correction over a fixed tensor list. Moment
/// buffers are sized on the first call; the list order must stay stable.
template <class T>
void adam_step(const std::vector<tensor_view<T>>& ts, adam_state<T>& st) {
    if (st.m.empty()) {
        st.m.reserve(ts.size());
        st.v.reserve(ts.size());
        for (const auto& tv : ts) {
            st.m.push_back(mat<T>::Zero(tv.value->rows(), tv.value->cols()));
            st.v.push_back(mat<T>::Zero(tv.value->rows(), tv.value->cols()));
        }
    }
    require(st.m.size() == ts.size(), "adam_step: tensor count changed");
    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const mat<T>& g = *ts[k].grad;
        require(g.rows() == st.m[k].rows() && g.cols() == st.m[k].cols(),
                "adam_step: shape changed for " + ts[k].name);
        st.m[k] = static_cast<T>(st.beta1) * st.m[k] + static_cast<T>(1.0 - st.beta1) * g;
        st.v[k] = (static_cast<T>(st.beta2) * st.v[k].array() +
                   static_cast<T>(1.0 - st.beta2) * g.array().square())
                      .matrix();
        auto mhat = st.m[k].array() / static_cast<T>(bc1);
        auto vhat = st.v[k].array() / static_cast<T>(bc2);
        ts[k].value->array() -=
            static_cast<T>(st.lr) * mhat / (vhat.sqrt() + static_cast<T>(st.eps));
    }
}

// ---------------------------------------------------------------------------
// Stacked LSTM regressor (LSTM layers + linear head on the last hidden state)

template <class T>
struct regressor_tape {
    std::vector<tape_cache<T>> layer_tapes;
    mat<T> head_in;   // batch x hidden
};

template <class T>
struct lstm_regressor {
    std::vector<lstm_params<T>> layers;
    dense_params<T> head;

    int in_size() const { return layers.front().in_size(); }
    int hidden_size() const { return layers.front().hidden_size(); }

    std::vector<tensor_view<T>> tensors() {
        std::vector<tensor_view<T>> ts;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto lt = layers[l].tensors("lstm" + std::to_string(l) + ".");
            ts.insert(ts.end(), lt.begin(), lt.end());
        }
        auto ht = head.tensors("head.");
        ts.insert(ts.end(), ht.begin(), ht.end());
        return ts;
    }

    /// xs is time-major, xs[t] batch x in. Output batch x out.
    mat<T> forward(const std::vector<mat<T>>& xs, regressor_tape<T>& tape) const {
        require(!layers.empty(), "lstm_regressor: no layers");
        tape.layer_tapes.clear();
        tape.layer_tapes.reserve(layers.size());
        std::vector<mat<T>> cur = xs;
        for (const auto& layer : layers) {
            tape.layer_tapes.push_back(lstm_forward_batched(cur, layer));
            const tape_cache<T>& tc = tape.layer_tapes.back();
            for (std::size_t t = 0; t < cur.size(); ++t) cur[t] = tc[t].h;
        }
        tape.head_in = cur.back();
        return dense_forward(tape.head_in, head);
    }

    mat<T> forward(const std::vector<mat<T>>& xs) const {
        regressor_tape<T> tape;
        return forward(xs, tape);
    }

    /// Accumulates gradients for every layer; upstream dy is batch x out.
    void backward(const regressor_tape<T>& tape, const mat<T>& dy) {
        require(tape.layer_tapes.size() == layers.size(), "lstm_regressor: stale tape");
        const std::size_t steps = tape.layer_tapes[0].size();
        const Eigen::Index batch = dy.rows();
        const int hidden = hidden_size();

        mat<T> dh_last = dense_backward(tape.head_in, dy, head);
        std::vector<mat<T>> dh_seq(steps, mat<T>::Zero(batch, hidden));
        dh_seq.back() = dh_last;
        for (std::size_t l = layers.size(); l-- > 0;) {
            std::vector<mat<T>> dx = lstm_backward(tape.layer_tapes[l], dh_seq, layers[l]);
            if (l > 0) dh_seq = std::move(dx);
        }
    }
};

template <class T>
lstm_regressor<T> make_lstm_regressor(int in, int hidden, int out, int num_layers, rng& r) {
    require(num_layers >= 1, "make_lstm_regressor: need at least one layer");
    lstm_regressor<T> m;
    m.layers.reserve(static_cast<std::size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l)
        m.layers.push_back(make_lstm<T>(l == 0 ? in : hidden, hidden, r));
    m.head = make_dense<T>(hidden, out, r);
    return m;
}

// ---------------------------------------------------------------------------
// MLP (ReLU hidden layers, linear output) for value networks

template <class T>
struct mlp_tape {
    std::vector<mat<T>> inputs;   // input to each layer (post-activation of previous)
};

template <class T>
struct mlp {
    std::vector<dense_params<T>> layers;

    int in_size() const { return layers.front().in_size(); }
    int out_size() const { return layers.back().out_size(); }

    std::vector<tensor_view<T>> tensors() {
        std::vector<tensor_view<T>> ts;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto lt = layers[l].tensors("fc" + std::to_string(l) + ".");
            ts.insert(ts.end(), lt.begin(), lt.end());
        }
        return ts;
    }

    mat<T> forward(const mat<T>& x, mlp_tape<T>& tape) const {
        require(!layers.empty(), "mlp: no layers");
        tape.inputs.clear();
        tape.inputs.reserve(layers.size());
        mat<T> cur = x;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            tape.inputs.push_back(cur);
            cur = dense_forward(cur, layers[l]);
            if (l + 1 < layers.size()) cur = cur.array().max(T(0)).matrix();
        }
        return cur;
    }

    mat<T> forward(const mat<T>& x) const {
        mlp_tape<T> tape;
        return forward(x, tape);
    }

    mat<T> backward(const mlp_tape<T>& tape, const mat<T>& dy) {
        require(tape.inputs.size() == layers.size(), "mlp: stale tape");
        mat<T> cur = dy;
        for (std::size_t l = layers.size(); l-- > 0;) {
            cur = dense_backward(tape.inputs[l], cur, layers[l]);
            if (l > 0) {
                // ReLU mask: the input to layer l is the post-ReLU output of
                // layer l-1, so positive entries mark active units.
                cur = (cur.array() * (tape.inputs[l].array() > T(0)).template cast<T>()).matrix();
            }
        }
        return cur;
    }
};

/// sizes = {in, hidden..., out}
template <class T>
mlp<T> make_mlp(const std::vector<int>& sizes, rng& r) {
    require(sizes.size() >= 2, "make_mlp: need at least input and output sizes");
    mlp<T> m;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        m.layers.push_back(make_dense<T>(sizes[l], sizes[l + 1], r));
    return m;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification

/// Compares analytic gradients (already accumulated in the tensor list) with
/// central finite differences of loss_fn. Returns the maximum relative error
/// |a - f| / max(|a|, |f|, 1e-8). loss_fn must be a deterministic pure
/// function of the parameters. Double precision only.
inline double grad_check(const std::vector<tensor_view<double>>& ts,
                         const std::function<double()>& loss_fn, double h = 1e-6) {
    double worst = 0.0;
    for (const auto& tv : ts) {
        mat<double>& p = *tv.value;
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                const double saved = p(r, c);
                p(r, c) = saved + h;
                const double up = loss_fn();
                p(r, c) = saved - h;
                const double down = loss_fn();
                p(r, c) = saved;
                const double fd = (up - down) / (2.0 * h);
                const double an = (*tv.grad)(r, c);
                const double rel =
                    std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
                worst = std::max(worst, rel);
            }
        }
    }
    return worst;
}

} // namespace tppd
