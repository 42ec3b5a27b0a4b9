#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fd_check.hpp"
#include "vano/adam.hpp"
#include "vano/checkpoint.hpp"
#include "vano/tape.hpp"

using namespace vano;

namespace {

Mat vec(std::initializer_list<double> xs) {
    Mat m(static_cast<int>(xs.size()), 1);
    std::copy(xs.begin(), xs.end(), m.v.begin());
    return m;
}

} // namespace

TEST(ForwardDense, IdentityCase) {
    Mat w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    Mat b(2, 1);
    Mat y = forward_dense(w, b, vec({1.0, 2.0}), Activation::identity);
    EXPECT_EQ(y.v[0], 1.0);
    EXPECT_EQ(y.v[1], 2.0);
}

TEST(ForwardDense, SoftplusBiasOnly) {
    Mat w(1, 3); // zero weights
    Mat b = vec({3.0});
    Mat y = forward_dense(w, b, vec({5.0, -2.0, 0.5}), Activation::softplus);
    EXPECT_NEAR(y.v[0], 3.048587351573742, 1e-12);
}

TEST(ForwardDense, SigmoidRow) {
    Mat w(1, 2, 1.0);
    Mat b = vec({0.0});
    Mat y = forward_dense(w, b, vec({0.5, 0.5}), Activation::sigmoid);
    EXPECT_NEAR(y.v[0], 0.7310585786300049, 1e-12);
}

TEST(ForwardDense, ShapeMismatchThrows) {
    Mat w(2, 3);
    Mat b(2, 1);
    EXPECT_THROW(forward_dense(w, b, vec({1.0, 2.0}), Activation::identity), DimError);
}

TEST(Backward, SquareAnalytic) {
    ParamStore ps;
    ps.add("w", {1});
    ps.tensor("w")[0] = 3.0;
    Tape t;
    NodeId w = t.param(ps, "w");
    NodeId loss = t.sum_all(t.hadamard(w, w));
    ps.zero_grads();
    t.backward(loss, &ps);
    EXPECT_DOUBLE_EQ(ps.grad("w")[0], 6.0);
}

TEST(Backward, ConstantLossZeroGrads) {
    ParamStore ps;
    ps.add("w", {3});
    Tape t;
    t.param(ps, "w"); // on tape but not on the loss path
    NodeId c = t.constant(Mat(1, 1, 5.0));
    NodeId loss = t.sum_all(c);
    ps.zero_grads();
    t.backward(loss, &ps);
    for (double g : ps.grads) EXPECT_EQ(g, 0.0);
}

TEST(Backward, NonScalarLossThrows) {
    Tape t;
    NodeId x = t.input(Mat(2, 2, 1.0), true);
    EXPECT_THROW(t.backward(x), ContractError);
}

namespace {

// Random 3-layer MLP loss for the finite-difference oracle.
double mlp_loss(ParamStore& ps, const Mat& x, const Mat& target, Activation act) {
    Tape t;
    NodeId h = t.input(x, false);
    for (const char* base : {"l0", "l1", "l2"}) {
        h = t.matmul(h, t.param(ps, std::string(base) + ".W"), false, true);
        h = t.add_rowvec(h, t.param(ps, std::string(base) + ".b"));
        h = t.act(h, act);
    }
    NodeId d = t.sub(h, t.input(target, false));
    return t.val(t.mean_all(t.hadamard(d, d))).v[0];
}

double mlp_loss_grad(ParamStore& ps, const Mat& x, const Mat& target, Activation act) {
    Tape t;
    NodeId h = t.input(x, false);
    for (const char* base : {"l0", "l1", "l2"}) {
        h = t.matmul(h, t.param(ps, std::string(base) + ".W"), false, true);
        h = t.add_rowvec(h, t.param(ps, std::string(base) + ".b"));
        h = t.act(h, act);
    }
    NodeId d = t.sub(h, t.input(target, false));
    NodeId loss = t.mean_all(t.hadamard(d, d));
    ps.zero_grads();
    t.backward(loss, &ps);
    return t.val(loss).v[0];
}

} // namespace

TEST(Backward, MlpMatchesFiniteDifferences) {
    for (Activation act : {Activation::gelu, Activation::tanh, Activation::softplus,
                           Activation::sigmoid, Activation::identity}) {
        ParamStore ps;
        ps.add("l0.W", {5, 4});
        ps.add("l0.b", {5});
        ps.add("l1.W", {4, 5});
        ps.add("l1.b", {4});
        ps.add("l2.W", {3, 4});
        ps.add("l2.b", {3});
        RngStream rng(11, StreamPurpose::init, static_cast<uint64_t>(act));
        for (double& v : ps.values) v = rng.normal() * 0.7;
        Mat x(2, 4);
        for (double& v : x.v) v = rng.normal();
        Mat target(2, 3);
        for (double& v : target.v) v = rng.normal();

        mlp_loss_grad(ps, x, target, act);
        check_grads_fd(ps, [&](ParamStore& p) { return mlp_loss(p, x, target, act); });
    }
}

TEST(Backward, StructuralOpsMatchFiniteDifferences) {
    // Chain through slice/concat/repeat/tile/segment/reshape/row sums.
    ParamStore ps;
    ps.add("a", {3, 4});
    ps.add("w", {2, 6});
    RngStream rng(5, StreamPurpose::init, 0);
    for (double& v : ps.values) v = rng.normal();
    Mat g(2, 2);
    for (double& v : g.v) v = rng.normal();

    auto build = [&](ParamStore& p, bool grad) {
        Tape t;
        NodeId a = t.param(p, "a");
        NodeId left = t.slice_cols(a, 0, 2);
        NodeId right = t.slice_cols(a, 2, 4);
        NodeId cat = t.concat_cols(t.repeat_rows(left, 2), t.tile_rows(right, 2)); // (6,4)
        NodeId mixed = t.concat_cols(cat, t.tile_rows(t.constant(g), 3));          // (6,6)
        NodeId h = t.matmul(mixed, t.param(p, "w"), false, true);                  // (6,2)
        h = t.act(h, Activation::gelu);
        NodeId seg = t.segment_mean_rows(h, 3);                     // (2,2)
        NodeId flat = t.reshape(seg, 4, 1);                         // (4,1)
        NodeId r = t.row_weighted_sum(t.reshape(flat, 1, 4), {0.5, -1.0, 2.0, 0.25});
        NodeId loss = t.mean_all(t.exp_elem(t.scale(r, 0.1)));
        if (grad) {
            p.zero_grads();
            t.backward(loss, &p);
        }
        return t.val(loss).v[0];
    };
    build(ps, true);
    check_grads_fd(ps, [&](ParamStore& p) { return build(p, false); });
}

TEST(Backward, RwfWeightMatchesFiniteDifferences) {
    ParamStore ps;
    ps.add("l.s", {3});
    ps.add("l.V", {3, 2});
    RngStream rng(8, StreamPurpose::init, 0);
    for (double& v : ps.values) v = 0.3 * rng.normal() + 0.4;
    Mat x(2, 2);
    for (double& v : x.v) v = rng.normal();

    auto build = [&](ParamStore& p, bool grad) {
        Tape t;
        NodeId w = t.rwf_weight(t.param(p, "l.s"), t.param(p, "l.V"));
        NodeId y = t.act(t.matmul(t.input(x, false), w, false, true), Activation::tanh);
        NodeId loss = t.mean_all(t.hadamard(y, y));
        if (grad) {
            p.zero_grads();
            t.backward(loss, &p);
        }
        return t.val(loss).v[0];
    };
    build(ps, true);
    check_grads_fd(ps, [&](ParamStore& p) { return build(p, false); });
}

TEST(Backward, MatmulTransposeCombos) {
    for (bool ta : {false, true}) {
        for (bool tb : {false, true}) {
            ParamStore ps;
            ps.add("A", {3, 4});
            ps.add("B", {4, 3});
            RngStream rng(7, StreamPurpose::init, static_cast<uint64_t>(2 * ta + tb));
            for (double& v : ps.values) v = rng.normal();
            auto build = [&](ParamStore& p, bool grad) {
                Tape t;
                // shapes: pick operand orientation so the product is defined
                NodeId a = t.param(p, "A"); // (3,4)
                NodeId b = t.param(p, "B"); // (4,3)
                NodeId c;
                if (!ta && !tb) c = t.matmul(a, b, false, false);      // (3,3)
                else if (!ta && tb) c = t.matmul(a, t.reshape(b, 3, 4), false, true);
                else if (ta && !tb) c = t.matmul(a, t.reshape(b, 3, 4), true, false);
                else c = t.matmul(t.reshape(a, 4, 3), t.reshape(b, 3, 4), true, true);
                NodeId loss = t.mean_all(t.hadamard(c, c));
                if (grad) {
                    p.zero_grads();
                    t.backward(loss, &p);
                }
                return t.val(loss).v[0];
            };
            build(ps, true);
            check_grads_fd(ps, [&](ParamStore& p) { return build(p, false); });
        }
    }
}

TEST(ParamStore, LayoutCoversValuesExactly) {
    ParamStore ps;
    ps.add("a", {3, 4});
    ps.add("b", {5});
    ps.add("c", {2, 2, 2});
    size_t total = 0;
    size_t expected_offset = 0;
    for (const auto& r : ps.records()) {
        EXPECT_EQ(r.offset, expected_offset);
        expected_offset += r.len;
        total += r.len;
    }
    EXPECT_EQ(total, ps.values.size());
    EXPECT_EQ(ps.grads.size(), ps.values.size());
    EXPECT_THROW(ps.add("a", {1}), ConfigError);
}

TEST(Adam, LrScheduleExactPlateaus) {
    AdamState st = AdamState::make(1, 1e-3, 0.9, 1000);
    st.step = 0;
    EXPECT_DOUBLE_EQ(effective_lr(st), 1e-3);
    st.step = 999;
    EXPECT_DOUBLE_EQ(effective_lr(st), 1e-3);
    st.step = 1000;
    EXPECT_DOUBLE_EQ(effective_lr(st), 1e-3 * 0.9);
    st.step = 1999;
    EXPECT_DOUBLE_EQ(effective_lr(st), 1e-3 * 0.9);
    st.step = 2000;
    EXPECT_DOUBLE_EQ(effective_lr(st), (1e-3 * 0.9) * 0.9);
    // boundary multiplication is exact across many plateaus
    for (int k = 1; k < 40; ++k) {
        st.step = 1000LL * k;
        const double lr_k = effective_lr(st);
        st.step = 1000LL * (k + 1);
        EXPECT_DOUBLE_EQ(effective_lr(st), lr_k * 0.9);
    }
}

TEST(Adam, ZeroGradsNoChange) {
    ParamStore ps;
    ps.add("w", {4});
    auto w = ps.tensor("w");
    for (int i = 0; i < 4; ++i) w[i] = i + 1.0;
    AdamState st = AdamState::make(ps.values.size(), 1e-3, 0.9, 1000);
    ps.zero_grads();
    adam_step(st, ps);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(ps.tensor("w")[i], i + 1.0);
    for (double m : st.m) EXPECT_EQ(m, 0.0);
    for (double v : st.v) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepApproxLr) {
    ParamStore ps;
    ps.add("w", {1});
    ps.tensor("w")[0] = 0.5;
    ps.grads[0] = 1.0;
    AdamState st = AdamState::make(1, 1e-3, 0.9, 1000);
    adam_step(st, ps);
    // bias-corrected first step: mhat = 1, vhat = 1 -> delta = lr / (1 + eps)
    EXPECT_NEAR(0.5 - ps.tensor("w")[0], 1e-3, 1e-8);
}

TEST(Adam, NanGradNamesTensor) {
    ParamStore ps;
    ps.add("fine", {2});
    ps.add("broken", {2});
    ps.grads[2] = std::nan("");
    AdamState st = AdamState::make(ps.values.size(), 1e-3, 0.9, 1000);
    try {
        adam_step(st, ps);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
    }
}

TEST(Rwf, DisabledIsIdentity) {
    ParamStore ps;
    ps.add("l.W", {2, 2});
    ParamStore same = rwf_reparameterize(ps, false, 0.1, 0);
    EXPECT_TRUE(same.has("l.W"));
    EXPECT_EQ(same.values, ps.values);
}

TEST(Rwf, ZeroScaleMeansWEqualsV) {
    ParamStore ps;
    ps.add("l.W", {3, 2});
    RngStream rng(4, StreamPurpose::init, 0);
    for (double& v : ps.values) v = rng.normal();
    ParamStore rp = rwf_reparameterize(ps, true, 0.1, 7);
    auto s = rp.tensor("l.s");
    for (double& x : s) x = 0.0;
    Tape t;
    NodeId w = t.rwf_weight(t.param(rp, "l.s"), t.param(rp, "l.V"));
    const Mat& W = t.val(w);
    const Mat V = rp.tensor_mat("l.V");
    for (size_t i = 0; i < W.size(); ++i) EXPECT_EQ(W.v[i], V.v[i]);
}

TEST(Rwf, InitialFactorizationReproducesW) {
    ParamStore ps;
    ps.add("l.W", {3, 5});
    RngStream rng(4, StreamPurpose::init, 1);
    for (double& v : ps.values) v = rng.normal();
    ParamStore rp = rwf_reparameterize(ps, true, 0.1, 7);
    Tape t;
    NodeId w = t.rwf_weight(t.param(rp, "l.s"), t.param(rp, "l.V"));
    const Mat& W = t.val(w);
    const Mat orig = ps.tensor_mat("l.W");
    for (size_t i = 0; i < W.size(); ++i) EXPECT_NEAR(W.v[i], orig.v[i], 1e-14);
}

namespace {

// Tiny 1-D regression y = sin(2x) fit with a 2-layer net, with and without
// the factorized parameterization.
double train_tiny_regression(bool rwf) {
    ParamStore ps;
    ps.add("l0.W", {16, 1});
    ps.add("l0.b", {16});
    ps.add("out.W", {1, 16});
    ps.add("out.b", {1});
    RngStream rng(2, StreamPurpose::init, 0);
    glorot_init(ps.tensor("l0.W"), 16, 1, rng);
    glorot_init(ps.tensor("out.W"), 1, 16, rng);
    ps = rwf_reparameterize(ps, rwf, 0.1, 3);

    Mat x(32, 1), y(32, 1);
    for (int i = 0; i < 32; ++i) {
        x(i, 0) = -1.0 + 2.0 * i / 31.0;
        y(i, 0) = std::sin(2.0 * x(i, 0));
    }
    AdamState st = AdamState::make(ps.values.size(), 1e-2, 0.9, 2000);
    double loss = 1.0;
    for (int step = 0; step < 2000; ++step) {
        Tape t;
        NodeId h = t.input(x, false);
        auto dense = [&](NodeId in, const std::string& base, Activation a) {
            NodeId w = ps.has(base + ".W")
                           ? t.param(ps, base + ".W")
                           : t.rwf_weight(t.param(ps, base + ".s"), t.param(ps, base + ".V"));
            return t.act(t.add_rowvec(t.matmul(in, w, false, true), t.param(ps, base + ".b")), a);
        };
        h = dense(h, "l0", Activation::tanh);
        h = dense(h, "out", Activation::identity);
        NodeId d = t.sub(h, t.input(y, false));
        NodeId l = t.mean_all(t.hadamard(d, d));
        ps.zero_grads();
        t.backward(l, &ps);
        adam_step(st, ps);
        loss = t.val(l).v[0];
    }
    return loss;
}

} // namespace

TEST(Rwf, FactorizationDoesNotBreakOptimization) {
    EXPECT_LE(train_tiny_regression(false), 1e-3);
    EXPECT_LE(train_tiny_regression(true), 1e-3);
}

TEST(Checkpoint, RoundTrip) {
    ParamStore ps;
    ps.add("enc.l0.W", {3, 2});
    ps.add("enc.l0.b", {3});
    RngStream rng(1, StreamPurpose::init, 0);
    for (double& v : ps.values) v = rng.normal();
    AdamState st = AdamState::make(ps.values.size(), 1e-3, 0.9, 1000);
    st.step = 123;
    for (double& m : st.m) m = rng.normal();
    for (double& v : st.v) v = std::abs(rng.normal());

    const std::string path = std::filesystem::temp_directory_path() / "vano_test.ckpt";
    save_checkpoint(path, ps, st, "iterations = 5\n");
    Checkpoint ck = load_checkpoint(path);
    EXPECT_EQ(ck.params.values, ps.values);
    EXPECT_EQ(ck.adam.m, st.m);
    EXPECT_EQ(ck.adam.v, st.v);
    EXPECT_EQ(ck.adam.step, 123);
    EXPECT_EQ(ck.config_text, "iterations = 5\n");

    // byte-identical re-save
    const std::string path2 = std::filesystem::temp_directory_path() / "vano_test2.ckpt";
    save_checkpoint(path2, ck.params, ck.adam, ck.config_text);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_EQ(s1, s2);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST(Checkpoint, BadMagicRejected) {
    const std::string path = std::filesystem::temp_directory_path() / "vano_bad.ckpt";
    std::ofstream(path, std::ios::binary) << "NOTMAGIC blah";
    EXPECT_THROW(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
