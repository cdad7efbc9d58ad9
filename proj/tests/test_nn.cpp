#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <tppd/checkpoint.hpp>
#include <tppd/nn.hpp>
#include <tppd/rng.hpp>

using namespace tppd;

namespace {

matd random_mat(Eigen::Index rows, Eigen::Index cols, rng& r, double lo = -1.0, double hi = 1.0) {
    matd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index rr = 0; rr < rows; ++rr)
            m(rr, c) = r.uniform(lo, hi);
    return m;
}

lstm_params<double> zero_lstm(int in, int hidden) {
    rng r(0);
    auto p = make_lstm<double>(in, hidden, r);
    for (auto& tv : p.tensors()) tv.value->setZero();
    return p;
}

bool bit_equal(const matd& a, const matd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

} // namespace

TEST_CASE("lstm cell: zero parameters and zero state give zero output", "[nn]") {
    auto p = zero_lstm(3, 4);
    matd z14 = matd::Zero(1, 4);
    auto s = lstm_cell_forward<double>(matd::Zero(1, 3), z14, z14, p);
    CHECK(s.c.isZero(0.0));
    CHECK(s.h.isZero(0.0));
    // sigma(0) = 0.5 for every gate, tanh(0) = 0 for the candidate.
    CHECK(s.i(0, 0) == 0.5);
    CHECK(s.f(0, 0) == 0.5);
    CHECK(s.o(0, 0) == 0.5);
    CHECK(s.g(0, 0) == 0.0);
}

TEST_CASE("lstm cell: zero parameters halve the carried cell state", "[nn]") {
    auto p = zero_lstm(3, 4);
    matd ones = matd::Ones(1, 4);
    auto s = lstm_cell_forward<double>(matd::Zero(1, 3), matd::Zero(1, 4), ones, p);
    const double expect_h = 0.5 * std::tanh(0.5);
    for (int k = 0; k < 4; ++k) {
        CHECK(s.c(0, k) == Catch::Approx(0.5).epsilon(1e-12));
        CHECK(s.h(0, k) == Catch::Approx(expect_h).epsilon(1e-12));
    }
    CHECK(expect_h == Catch::Approx(0.2311).margin(5e-5));
}

TEST_CASE("lstm cell: saturated gates act as pure memory", "[nn]") {
    rng r(1);
    auto p = make_lstm<double>(2, 5, r);
    p.b_f.setConstant(30.0);    // forget gate ~1
    p.b_i.setConstant(-30.0);   // input gate ~0
    matd c_prev = random_mat(3, 5, r);
    auto s = lstm_cell_forward<double>(random_mat(3, 2, r), random_mat(3, 5, r), c_prev, p);
    CHECK((s.c - c_prev).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("lstm cell: gate ranges", "[nn]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        rng r(seed);
        auto p = make_lstm<double>(3, 6, r);
        auto s = lstm_cell_forward<double>(random_mat(4, 3, r, -2, 2), random_mat(4, 6, r, -2, 2),
                                           random_mat(4, 6, r, -2, 2), p);
        CHECK(s.i.minCoeff() > 0.0);
        CHECK(s.i.maxCoeff() < 1.0);
        CHECK(s.f.minCoeff() > 0.0);
        CHECK(s.f.maxCoeff() < 1.0);
        CHECK(s.o.minCoeff() > 0.0);
        CHECK(s.o.maxCoeff() < 1.0);
        CHECK(s.g.minCoeff() > -1.0);
        CHECK(s.g.maxCoeff() < 1.0);
    }
}

TEST_CASE("lstm_forward: one step equals one cell call", "[nn]") {
    rng r(2);
    auto p = make_lstm<double>(3, 4, r);
    matd seq = random_mat(1, 3, r);
    auto full = lstm_forward(seq, p);
    auto cell = lstm_cell_forward<double>(seq, matd::Zero(1, 4), matd::Zero(1, 4), p);
    CHECK(bit_equal(full.h, cell.h));
    CHECK(bit_equal(full.c, cell.c));
    CHECK(full.hidden_seq.rows() == 1);
}

TEST_CASE("lstm_forward: zero recurrence makes repeated input stationary", "[nn]") {
    rng r(3);
    auto p = make_lstm<double>(2, 4, r);
    p.u_i.setZero();
    p.u_f.setZero();
    p.u_g.setZero();
    p.u_o.setZero();
    matd seq(6, 2);
    matd one_row = random_mat(1, 2, r);
    for (int t = 0; t < 6; ++t) seq.row(t) = one_row;
    auto out = lstm_forward(seq, p);
    // With no recurrent path each step sees identical inputs... except the
    // cell state still accumulates, so only gate activations repeat; check h
    // converges rather than diverges, and the i/f/o gates are step-invariant.
    for (std::size_t t = 1; t < out.tape.size(); ++t) {
        CHECK(bit_equal(out.tape[t].i, out.tape[0].i));
        CHECK(bit_equal(out.tape[t].f, out.tape[0].f));
        CHECK(bit_equal(out.tape[t].o, out.tape[0].o));
        CHECK(bit_equal(out.tape[t].g, out.tape[0].g));
    }
    CHECK(out.tape.size() == 6);
}

TEST_CASE("lstm_forward: zero parameters give a zero hidden sequence", "[nn]") {
    auto p = zero_lstm(2, 3);
    rng r(4);
    auto out = lstm_forward(random_mat(5, 2, r), p);
    CHECK(out.hidden_seq.isZero(0.0));
    CHECK(out.tape.size() == 5);
}

TEST_CASE("dense_forward: closed forms", "[nn]") {
    dense_params<double> p;
    p.w = matd::Identity(3, 3);
    p.b = matd::Zero(1, 3);
    p.dw = matd::Zero(3, 3);
    p.db = matd::Zero(1, 3);
    rng r(5);
    matd x = random_mat(2, 3, r);
    CHECK(bit_equal(dense_forward(x, p), x));

    p.w.setZero();
    p.b << 1.0, -2.0, 3.0;
    matd y = dense_forward(x, p);
    for (int row = 0; row < 2; ++row) {
        CHECK(y(row, 0) == 1.0);
        CHECK(y(row, 1) == -2.0);
        CHECK(y(row, 2) == 3.0);
    }

    dense_params<double> q;
    q.w.resize(1, 2);
    q.w << 1.0, 1.0;
    q.b = matd::Zero(1, 1);
    q.dw = matd::Zero(1, 2);
    q.db = matd::Zero(1, 1);
    matd in(1, 2);
    in << 0.25, 0.75;
    CHECK(dense_forward(in, q)(0, 0) == 1.0);

    matd wrong = matd::Zero(1, 3);
    CHECK_THROWS_AS(dense_forward(wrong, q), tppd::error);
}

TEST_CASE("mse_loss: closed forms", "[nn]") {
    matd a(1, 2), b(1, 2);
    a << 1.0, 1.0;
    b << 0.0, 0.0;
    auto [l1, g1] = mse_loss(a, b);
    CHECK(l1 == 1.0);
    CHECK(g1(0, 0) == 1.0);   // 2*(1-0)/2

    auto [l0, g0] = mse_loss(a, a);
    CHECK(l0 == 0.0);
    CHECK(g0.isZero(0.0));

    matd c(1, 1), d(1, 1);
    c << 0.3;
    d << 0.1;
    auto [l2, g2] = mse_loss(c, d);
    CHECK(l2 == Catch::Approx(0.04).epsilon(1e-12));
    CHECK(g2(0, 0) == Catch::Approx(0.4).epsilon(1e-12));

    CHECK_THROWS_AS(mse_loss(a, c), tppd::error);
}

TEST_CASE("backward: zero upstream gradient leaves parameter gradients zero", "[nn]") {
    rng r(6);
    auto model = make_lstm_regressor<double>(2, 4, 2, 2, r);
    auto ts = model.tensors();
    zero_grads(ts);
    std::vector<matd> xs(5, matd());
    for (auto& x : xs) x = random_mat(3, 2, r);
    regressor_tape<double> tape;
    matd y = model.forward(xs, tape);
    model.backward(tape, matd::Zero(y.rows(), y.cols()));
    for (const auto& tv : ts) CHECK(tv.grad->isZero(0.0));
}

TEST_CASE("backward: linear layer gradient is the outer product", "[nn]") {
    rng r(7);
    auto p = make_dense<double>(3, 2, r);
    matd x = random_mat(1, 3, r);
    matd dy = random_mat(1, 2, r);
    dense_backward(x, dy, p);
    matd outer = dy.transpose() * x;
    CHECK((p.dw - outer).cwiseAbs().maxCoeff() == 0.0);
    CHECK(bit_equal(p.db, dy));
}

TEST_CASE("grad_check: linear layer with mse", "[nn]") {
    rng r(8);
    auto p = make_dense<double>(3, 2, r);
    matd x = random_mat(4, 3, r);
    matd target = random_mat(4, 2, r);
    auto ts = p.tensors();
    zero_grads(ts);
    matd y = dense_forward(x, p);
    auto lg = mse_loss(y, target);
    dense_backward(x, lg.second, p);
    const double err = grad_check(ts, [&] { return mse_loss(dense_forward(x, p), target).first; });
    CHECK(err < 1e-7);
}

TEST_CASE("grad_check: two-layer lstm regressor", "[nn]") {
    rng r(9);
    auto model = make_lstm_regressor<double>(2, 8, 2, 2, r);
    std::vector<matd> xs(5, matd());
    for (auto& x : xs) x = random_mat(3, 2, r);
    matd target = random_mat(3, 2, r);
    auto ts = model.tensors();
    zero_grads(ts);
    regressor_tape<double> tape;
    matd y = model.forward(xs, tape);
    auto lg = mse_loss(y, target);
    model.backward(tape, lg.second);
    // Recurrent weights deep in the stack carry gradients near 1e-9; with a
    // 1e-6 step the central difference bottoms out at ~1e-11 of rounding
    // noise, so a wider step is needed there (truncation stays negligible).
    const double err =
        grad_check(ts, [&] { return mse_loss(model.forward(xs), target).first; }, 1e-4);
    CHECK(err < 1e-4);
}

TEST_CASE("grad_check: randomized small networks across seeds", "[nn]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        rng r(seed);
        auto model = make_lstm_regressor<double>(2, 4, 1, 2, r);
        std::vector<matd> xs(3, matd());
        for (auto& x : xs) x = random_mat(2, 2, r);
        matd target = random_mat(2, 1, r);
        auto ts = model.tensors();
        zero_grads(ts);
        regressor_tape<double> tape;
        matd y = model.forward(xs, tape);
        auto lg = mse_loss(y, target);
        model.backward(tape, lg.second);
        const double err =
            grad_check(ts, [&] { return mse_loss(model.forward(xs), target).first; }, 1e-4);
        INFO("seed " << seed);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("grad_check: mlp with relu", "[nn]") {
    rng r(10);
    auto net = make_mlp<double>({3, 8, 8, 4}, r);
    matd x = random_mat(5, 3, r);
    matd target = random_mat(5, 4, r);
    auto ts = net.tensors();
    zero_grads(ts);
    mlp_tape<double> tape;
    matd y = net.forward(x, tape);
    auto lg = mse_loss(y, target);
    net.backward(tape, lg.second);
    const double err = grad_check(ts, [&] { return mse_loss(net.forward(x), target).first; });
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check: empty parameter list is defined", "[nn]") {
    const double err = grad_check({}, [] { return 1.0; });
    CHECK(err == 0.0);
    CHECK(std::isfinite(err));
}

TEST_CASE("adam: zero gradient and zero learning rate leave parameters fixed", "[nn]") {
    rng r(11);
    auto p = make_dense<double>(3, 3, r);
    matd before = p.w;
    auto ts = p.tensors();
    adam_state<double> st;
    zero_grads(ts);
    for (int k = 0; k < 5; ++k) adam_step(ts, st);
    CHECK(bit_equal(p.w, before));

    adam_state<double> st2;
    st2.lr = 0.0;
    p.dw.setConstant(0.7);
    for (int k = 0; k < 5; ++k) adam_step(ts, st2);
    CHECK(bit_equal(p.w, before));
    CHECK(st2.t == 5);
}

TEST_CASE("adam: constant gradient step approaches lr * sign(g)", "[nn]") {
    matd p0(1, 1), g0(1, 1);
    p0 << 0.0;
    g0 << 0.3;
    std::vector<tensor_view<double>> ts{{"p", &p0, &g0}};
    adam_state<double> st;
    st.lr = 1e-3;
    for (int k = 0; k < 1000; ++k) adam_step(ts, st);
    const double before = p0(0, 0);
    adam_step(ts, st);
    const double step = before - p0(0, 0);
    CHECK(step == Catch::Approx(st.lr).epsilon(0.01));

    g0 << -0.3;   // sign flips the step direction; magnitude needs re-settling
    for (int k = 0; k < 1000; ++k) adam_step(ts, st);
    const double b2 = p0(0, 0);
    adam_step(ts, st);
    CHECK(p0(0, 0) - b2 == Catch::Approx(st.lr).epsilon(0.01));
}

TEST_CASE("adam: deterministic across identical runs", "[nn]") {
    auto run = [] {
        rng r(12);
        auto model = make_lstm_regressor<double>(2, 6, 2, 2, r);
        std::vector<matd> xs(4, matd());
        for (auto& x : xs) x = random_mat(5, 2, r);
        matd target = random_mat(5, 2, r);
        auto ts = model.tensors();
        adam_state<double> st;
        for (int k = 0; k < 50; ++k) {
            zero_grads(ts);
            regressor_tape<double> tape;
            matd y = model.forward(xs, tape);
            auto lg = mse_loss(y, target);
            model.backward(tape, lg.second);
            clip_global_norm(ts, 5.0);
            adam_step(ts, st);
        }
        return model;
    };
    auto a = run();
    auto b = run();
    auto ta = a.tensors(), tb = b.tensors();
    REQUIRE(ta.size() == tb.size());
    for (std::size_t k = 0; k < ta.size(); ++k) CHECK(bit_equal(*ta[k].value, *tb[k].value));
}

TEST_CASE("clip_global_norm: scales only above the threshold", "[nn]") {
    matd v1(1, 1), g1(1, 1), v2(1, 1), g2(1, 1);
    g1 << 3.0;
    g2 << 4.0;
    std::vector<tensor_view<double>> ts{{"a", &v1, &g1}, {"b", &v2, &g2}};
    CHECK(clip_global_norm(ts, 10.0) == Catch::Approx(5.0));
    CHECK(g1(0, 0) == 3.0);

    CHECK(clip_global_norm(ts, 2.5) == Catch::Approx(5.0));
    CHECK(g1(0, 0) == Catch::Approx(1.5));
    CHECK(g2(0, 0) == Catch::Approx(2.0));
}

TEST_CASE("training: sinusoid loss decreases under adam", "[nn]") {
    // 20-point noiseless sinusoid, windows of 8 -> 12 samples, full batch.
    const int seq = 8;
    std::vector<double> pts;
    for (int t = 0; t < 20; ++t) pts.push_back(std::sin(0.3 * t));

    const int n = static_cast<int>(pts.size()) - seq;
    std::vector<matd> xs(seq, matd(n, 1));
    matd target(n, 1);
    for (int w = 0; w < n; ++w) {
        for (int t = 0; t < seq; ++t) xs[t](w, 0) = pts[w + t];
        target(w, 0) = pts[w + seq];
    }

    rng r(13);
    auto model = make_lstm_regressor<double>(1, 8, 1, 2, r);
    auto ts = model.tensors();
    adam_state<double> st;
    st.lr = 1e-2;

    std::vector<double> losses;
    for (int k = 0; k < 200; ++k) {
        zero_grads(ts);
        regressor_tape<double> tape;
        matd y = model.forward(xs, tape);
        auto lg = mse_loss(y, target);
        model.backward(tape, lg.second);
        clip_global_norm(ts, 5.0);
        adam_step(ts, st);
        losses.push_back(lg.first);
    }
    auto block = [&](int b) {
        double s = 0.0;
        for (int k = 50 * b; k < 50 * (b + 1); ++k) s += losses[static_cast<std::size_t>(k)];
        return s / 50.0;
    };
    CHECK(block(1) < block(0));
    CHECK(block(2) < block(1));
    CHECK(block(3) < block(2));
    CHECK(losses.back() < 0.1 * losses.front());
}

TEST_CASE("init: documented constants", "[nn]") {
    rng r(14);
    auto p = make_lstm<double>(4, 16, r);
    CHECK((p.b_f.array() == 1.0).all());
    CHECK(p.b_i.isZero(0.0));
    const double sw = 1.0 / std::sqrt(4.0);
    const double su = 1.0 / std::sqrt(16.0);
    CHECK(p.w_g.cwiseAbs().maxCoeff() <= sw);
    CHECK(p.u_g.cwiseAbs().maxCoeff() <= su);

    rng r2(14);
    auto q = make_lstm<double>(4, 16, r2);
    CHECK(bit_equal(p.w_i, q.w_i));   // deterministic given the stream
}

TEST_CASE("checkpoint: bit-exact round trip", "[nn]") {
    rng r(15);
    auto model = make_lstm_regressor<double>(2, 6, 2, 2, r);
    auto ck = snapshot_tensors(model.tensors(), "unit test");
    const std::string path = "ckpt_roundtrip.bin";
    save_checkpoint(path, ck);
    auto back = load_checkpoint(path);
    CHECK(back.note == "unit test");
    REQUIRE(back.tensors.size() == ck.tensors.size());
    for (std::size_t k = 0; k < ck.tensors.size(); ++k) {
        CHECK(back.tensors[k].name == ck.tensors[k].name);
        CHECK(bit_equal(back.tensors[k].value, ck.tensors[k].value));
    }

    rng r2(99);
    auto other = make_lstm_regressor<double>(2, 6, 2, 2, r2);
    restore_tensors(back, other.tensors());
    auto ta = model.tensors(), tb = other.tensors();
    for (std::size_t k = 0; k < ta.size(); ++k) CHECK(bit_equal(*ta[k].value, *tb[k].value));
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: malformed files are rejected", "[nn]") {
    const std::string path = "ckpt_bad.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPT restoffile";
    }
    CHECK_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("not a checkpoint"));
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write("TPPDCKPT", 8);   // header only, then EOF
    }
    CHECK_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("truncated"));
    CHECK_THROWS_AS(load_checkpoint("does_not_exist.bin"), tppd::error);
    std::remove(path.c_str());

    checkpoint ck;
    ck.tensors.push_back({"w", matd::Zero(2, 2)});
    CHECK_THROWS_WITH(ck.find("missing"), Catch::Matchers::ContainsSubstring("missing"));

    matd v = matd::Zero(3, 3), g = matd::Zero(3, 3);
    std::vector<tensor_view<double>> ts{{"w", &v, &g}};
    CHECK_THROWS_WITH(restore_tensors(ck, ts), Catch::Matchers::ContainsSubstring("shape"));
}
