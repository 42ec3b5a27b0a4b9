#include <gtest/gtest.h>

#include <cmath>

#include "vano/encodings.hpp"

using namespace vano;

TEST(Periodic, AtZero) {
    PeriodicEncoding enc{2, 1.0, PeriodicMode::full};
    auto g = periodic_encode(enc, 0.0);
    ASSERT_EQ(g.size(), 5u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_DOUBLE_EQ(g[1], 1.0);
    EXPECT_DOUBLE_EQ(g[2], 0.0);
    EXPECT_DOUBLE_EQ(g[3], 1.0);
    EXPECT_DOUBLE_EQ(g[4], 0.0);
}

TEST(Periodic, QuarterPeriod) {
    PeriodicEncoding enc{1, 1.0, PeriodicMode::full};
    auto g = periodic_encode(enc, 0.25);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_NEAR(g[1], 0.0, 1e-15);
    EXPECT_NEAR(g[2], 1.0, 1e-15);
}

TEST(Periodic, Periodicity) {
    PeriodicEncoding enc{1, 1.0, PeriodicMode::full};
    for (double x : {-0.3, 0.0, 0.123, 0.9}) {
        auto a = periodic_encode(enc, x);
        auto b = periodic_encode(enc, x + 1.0);
        for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    }
}

TEST(Periodic, Modes) {
    PeriodicEncoding full{3, 2.0, PeriodicMode::full};
    PeriodicEncoding nc{3, 2.0, PeriodicMode::no_const};
    PeriodicEncoding so{3, 2.0, PeriodicMode::sin_only};
    EXPECT_EQ(full.out_dim(), 7);
    EXPECT_EQ(nc.out_dim(), 6);
    EXPECT_EQ(so.out_dim(), 3);
    auto g = periodic_encode(so, 0.0);
    for (double v : g) EXPECT_DOUBLE_EQ(v, 0.0);
    auto ge = periodic_encode(so, 2.0); // x = L
    for (double v : ge) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Periodic, NegativeKThrows) {
    PeriodicEncoding enc{-1, 1.0, PeriodicMode::full};
    double buf[1];
    EXPECT_THROW(periodic_encode(enc, 0.5, buf), ConfigError);
}

TEST(Periodic, BoundedComponents) {
    PeriodicEncoding enc{8, 3.0, PeriodicMode::full};
    for (double x = -5.0; x < 5.0; x += 0.37) {
        for (double v : periodic_encode(enc, x)) {
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Rff, AtZero) {
    RFFEncoding enc = build_rff(13, 4, 2, 1.0);
    auto g = rff_encode(enc, {0.0, 0.0});
    ASSERT_EQ(g.size(), 8u);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g[i], 1.0);
    for (int i = 4; i < 8; ++i) EXPECT_DOUBLE_EQ(g[i], 0.0);
}

TEST(Rff, DirectEvaluation) {
    RFFEncoding enc;
    enc.q = 1;
    enc.d = 2;
    enc.B = Mat(1, 2);
    enc.B(0, 0) = 1.0;
    enc.B(0, 1) = 0.0;
    auto g = rff_encode(enc, {0.5, 7.0}); // 2*pi*B*x = pi
    EXPECT_NEAR(g[0], -1.0, 1e-12);
    EXPECT_NEAR(g[1], 0.0, 1e-12);
}

TEST(Rff, Deterministic) {
    RFFEncoding a = build_rff(99, 8, 3, 2.0);
    RFFEncoding b = build_rff(99, 8, 3, 2.0);
    EXPECT_EQ(a.B.v, b.B.v);
}

TEST(Rff, TinySigmaAllowedZeroRejected) {
    EXPECT_THROW(build_rff(1, 2, 1, 0.0), ConfigError);
    RFFEncoding enc = build_rff(1, 2, 1, 1e-12);
    auto g0 = rff_encode(enc, {0.0});
    auto g1 = rff_encode(enc, {1.0});
    for (size_t i = 0; i < g0.size(); ++i) EXPECT_NEAR(g0[i], g1[i], 1e-9);
}

TEST(Rff, MomentOracle) {
    // sample variance of B entries within 5% of sigma^2
    const double sigma = 1.7;
    RFFEncoding enc = build_rff(5, 1000, 100, sigma); // 1e5 entries
    double sum = 0.0, sumsq = 0.0;
    for (double b : enc.B.v) {
        sum += b;
        sumsq += b * b;
    }
    const double n = static_cast<double>(enc.B.size());
    const double var = sumsq / n - (sum / n) * (sum / n);
    EXPECT_NEAR(var, sigma * sigma, 0.05 * sigma * sigma);
}

TEST(Rff, UnitNormPerFeaturePair) {
    RFFEncoding enc = build_rff(3, 6, 2, 3.0);
    auto g = rff_encode(enc, {0.3, -1.2});
    for (int i = 0; i < enc.q; ++i)
        EXPECT_NEAR(g[i] * g[i] + g[enc.q + i] * g[enc.q + i], 1.0, 1e-12);
}

TEST(Rff, DimensionMismatchThrows) {
    RFFEncoding enc = build_rff(1, 2, 3, 1.0);
    EXPECT_THROW(rff_encode(enc, {1.0, 2.0}), DimError);
}

TEST(EncodePoints, PureFunction) {
    EncodingSpec spec;
    spec.kind = EncodingKind::periodic;
    spec.periodic = {4, 1.0, PeriodicMode::full};
    Mat pts(3, 1);
    pts(0, 0) = 0.1;
    pts(1, 0) = 0.5;
    pts(2, 0) = 0.9;
    Mat a = encode_points(spec, pts);
    Mat b = encode_points(spec, pts);
    EXPECT_EQ(a.v, b.v);
}
