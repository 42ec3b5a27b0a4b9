#include <gtest/gtest.h>

#include <cmath>

#include "fd_check.hpp"
#include "vano/data.hpp"
#include "vano/objective.hpp"

using namespace vano;

namespace {

Quadrature quad1d(int m) {
    return Quadrature::uniform(uniform_grid_1d(m), 1.0);
}

double norm2_q(const std::vector<double>& v, const Quadrature& q) {
    double acc = 0.0;
    for (size_t i = 0; i < v.size(); ++i) acc += q.weights[i] * v[i] * v[i];
    return acc;
}

} // namespace

TEST(WhiteNoiseLoglik, MaximizedAtData) {
    Quadrature q = quad1d(16);
    std::vector<double> v(16);
    RngStream rng(3, StreamPurpose::data, 0);
    for (double& x : v) x = rng.normal();
    const double at_u = white_noise_loglik(v, v, q);
    EXPECT_NEAR(at_u, 0.5 * norm2_q(v, q), 1e-14);
    // any other candidate scores lower
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> d(16);
        for (double& x : d) x = rng.normal();
        EXPECT_LE(white_noise_loglik(d, v, q), at_u + 1e-12);
    }
}

TEST(WhiteNoiseLoglik, ZeroFieldScoresZero) {
    Quadrature q = quad1d(8);
    std::vector<double> d(8, 0.0), u{1.0, -2.0, 3.0, 0.5, 0.0, 2.0, -1.0, 4.0};
    EXPECT_EQ(white_noise_loglik(d, u, q), 0.0);
}

TEST(WhiteNoiseLoglik, GaussianCompletionIdentity) {
    // loglik(d, u) - 1/2||u||^2 == -1/2||d - u||^2, computed independently.
    Quadrature q = quad1d(64);
    RngStream rng(4, StreamPurpose::data, 1);
    std::vector<double> d(64), u(64);
    for (double& x : d) x = rng.normal();
    for (double& x : u) x = rng.normal();
    std::vector<double> diff(64);
    for (int i = 0; i < 64; ++i) diff[i] = d[i] - u[i];
    const double lhs = white_noise_loglik(d, u, q);
    const double rhs = -0.5 * norm2_q(diff, q) + 0.5 * norm2_q(u, q);
    EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(WhiteNoiseLoglik, LengthMismatchThrows) {
    Quadrature q = quad1d(4);
    std::vector<double> d(4, 0.0), u(3, 0.0);
    EXPECT_THROW(white_noise_loglik(d, u, q), DimError);
}

TEST(WhiteNoiseLoglik, RawSumMode) {
    Quadrature q = quad1d(4);
    std::vector<double> d{1.0, 1.0, 1.0, 1.0}, u{2.0, 2.0, 2.0, 2.0};
    // raw: -0.5*4 + 8 = 6; weighted (w = 1/4): -0.5 + 2 = 1.5
    EXPECT_DOUBLE_EQ(white_noise_loglik(d, u, q, QuadMode::raw_sum), 6.0);
    EXPECT_DOUBLE_EQ(white_noise_loglik(d, u, q, QuadMode::weighted), 1.5);
}

TEST(KlGaussian, AnalyticCases) {
    EXPECT_EQ(kl_gaussian({{0.0, 0.0}, {0.0, 0.0}}), 0.0);
    EXPECT_DOUBLE_EQ(kl_gaussian({{1.0}, {0.0}}), 0.5);
    // nonnegative over random posteriors
    RngStream rng(5, StreamPurpose::data, 0);
    for (int trial = 0; trial < 100; ++trial) {
        LatentGaussian p{{rng.normal()}, {rng.normal()}};
        EXPECT_GE(kl_gaussian(p), 0.0);
    }
}

TEST(KlGaussian, MatchesMonteCarlo) {
    // MC estimate of E_q[log q - log p] with 1e5 draws, within 3 SE.
    const int n = 8;
    RngStream rng(6, StreamPurpose::data, 2);
    LatentGaussian post;
    for (int j = 0; j < n; ++j) {
        post.mu.push_back(rng.normal());
        post.log_sigma.push_back(0.5 * rng.normal());
    }
    const double closed = kl_gaussian(post);
    RngStream noise(7, StreamPurpose::latent_noise, 0);
    const int draws = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < draws; ++s) {
        double logq = 0.0, logp = 0.0;
        for (int j = 0; j < n; ++j) {
            const double eps = noise.normal();
            const double sigma = std::exp(post.log_sigma[j]);
            const double z = post.mu[j] + sigma * eps;
            logq += -post.log_sigma[j] - 0.5 * eps * eps;
            logp += -0.5 * z * z;
        }
        const double x = logq - logp;
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
    EXPECT_NEAR(closed, mean, 3.0 * se);
}

namespace {

Model toy_model(DecoderKind kind, int m, int n, bool rwf, Activation out_act,
                EncodingKind ek = EncodingKind::periodic) {
    EncoderSpec enc;
    enc.input_dim = m;
    enc.hidden = {2, 2};
    enc.latent_dim = n;
    DecoderSpec dec;
    dec.kind = kind;
    dec.hidden = {2, 2};
    dec.latent_dim = n;
    dec.output_activation = out_act;
    dec.encoding.kind = ek;
    dec.encoding.coord_dim = 1;
    if (ek == EncodingKind::periodic) dec.encoding.periodic = {2, 1.0, PeriodicMode::full};
    if (ek == EncodingKind::rff) {
        dec.encoding.rff.q = 2;
        dec.encoding.rff.d = 1;
        dec.encoding.rff.sigma = 1.5;
    }
    return build_model(enc, dec, rwf, 31);
}

Mat toy_batch(int B, int m, uint64_t seed) {
    Mat u(B, m);
    RngStream rng(seed, StreamPurpose::data, 3);
    for (double& x : u.v) x = rng.normal();
    return u;
}

} // namespace

TEST(ElboLoss, FrozenPerfectDecoderHitsQuadraticMinimum) {
    // With beta = 0 and D(z) = u the reconstruction equals -1/2 ||u||^2_q.
    Quadrature q = quad1d(6);
    Mat u = toy_batch(1, 6, 9);
    std::vector<double> uv(u.v);
    const double direct = -0.5 * norm2_q(uv, q);
    // evaluate the integrand identity through white_noise_loglik
    EXPECT_NEAR(-white_noise_loglik(uv, uv, q), direct, 1e-14);
}

TEST(ElboLoss, ConfigValidation) {
    Model mdl = toy_model(DecoderKind::concat, 4, 2, false, Activation::identity);
    Quadrature q = quad1d(4);
    ELBOConfig cfg;
    cfg.mc_samples = 0;
    EXPECT_THROW(elbo_loss(mdl, toy_batch(2, 4, 1), cfg, q, 0, 0), ConfigError);
    cfg.mc_samples = 1;
    EXPECT_THROW(elbo_loss(mdl, Mat(0, 4), cfg, q, 0, 0), ConfigError);
}

TEST(ElboLoss, ReportInvariant) {
    Model mdl = toy_model(DecoderKind::concat, 5, 2, false, Activation::identity);
    Quadrature q = quad1d(5);
    ELBOConfig cfg{0.37, 3, true, QuadMode::weighted};
    Mat u = toy_batch(4, 5, 2);
    LossReport rep = elbo_loss(mdl, u, cfg, q, 11, 0);
    double total = 0.0;
    for (auto& [r, k] : rep.per_example) total += r + cfg.beta * k;
    total /= rep.per_example.size();
    EXPECT_NEAR(rep.total, total, 1e-12);
}

TEST(ElboLoss, EvalMatchesLossOnSameSeeds) {
    for (DecoderKind kind :
         {DecoderKind::linear, DecoderKind::concat, DecoderKind::split_concat}) {
        Model mdl = toy_model(kind, 5, 2, false, Activation::identity);
        Quadrature q = quad1d(5);
        ELBOConfig cfg{1e-3, 2, true, QuadMode::weighted};
        Mat u = toy_batch(3, 5, 4);
        LossReport a = elbo_loss(mdl, u, cfg, q, 13, 5);
        LossReport b = elbo_eval(mdl, u, cfg, q, 13, 5);
        EXPECT_EQ(a.total, b.total) << to_string(kind);
        EXPECT_EQ(a.recon, b.recon);
        EXPECT_EQ(a.kl, b.kl);
    }
}

TEST(ElboLoss, QuadraturePermutationInvariant) {
    // The objective's quadrature sums do not care about point order when the
    // weights travel with the points: for any fixed latent draw, the
    // reconstruction term is identical under a grid permutation.
    Model mdl = toy_model(DecoderKind::concat, 6, 2, false, Activation::identity);
    Quadrature q = quad1d(6);
    Mat u = toy_batch(1, 6, 5);

    std::vector<int> perm{4, 0, 5, 2, 1, 3};
    Quadrature qp;
    qp.points = Mat(6, 1);
    qp.weights.resize(6);
    qp.domain_measure = q.domain_measure;
    std::vector<double> uv(u.v), upv(6);
    for (int j = 0; j < 6; ++j) {
        qp.points(j, 0) = q.points(perm[j], 0);
        qp.weights[j] = q.weights[perm[j]];
        upv[j] = uv[perm[j]];
    }
    std::vector<double> z{0.4, -1.1};
    auto d = decode_field(mdl, z, q.points);
    auto dp = decode_field(mdl, z, qp.points);
    EXPECT_NEAR(white_noise_loglik(d, uv, q), white_noise_loglik(dp, upv, qp), 1e-12);
    EXPECT_NEAR(norm2_q(d, q), norm2_q(dp, qp), 1e-12);
}

TEST(ElboLoss, McSamplesAgreeInExpectation) {
    // S=1 and S=16 estimates share the same expectation: over 200 resampled
    // evaluations the means agree within 3 combined standard errors.
    Model mdl = toy_model(DecoderKind::concat, 5, 2, false, Activation::identity);
    Quadrature q = quad1d(5);
    Mat u = toy_batch(2, 5, 6);
    auto run = [&](int S, uint64_t idx) {
        ELBOConfig cfg{0.0, S, false, QuadMode::weighted};
        return elbo_eval(mdl, u, cfg, q, 23, idx).total;
    };
    double m1 = 0.0, s1 = 0.0, m16 = 0.0, s16 = 0.0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        const double a = run(1, r);
        const double b = run(16, 1000 + r);
        m1 += a;
        s1 += a * a;
        m16 += b;
        s16 += b * b;
    }
    m1 /= reps;
    m16 /= reps;
    s1 = (s1 / reps - m1 * m1) / reps;
    s16 = (s16 / reps - m16 * m16) / reps;
    EXPECT_NEAR(m1, m16, 3.0 * std::sqrt(s1 + s16));
}

TEST(ElboLoss, GradientsMatchFiniteDifferencesAllDecoders) {
    for (DecoderKind kind :
         {DecoderKind::linear, DecoderKind::concat, DecoderKind::split_concat}) {
        for (bool rwf : {false, true}) {
            Model mdl = toy_model(kind, 4, 2, rwf, Activation::identity);
            Quadrature q = quad1d(4);
            ELBOConfig cfg{0.05, 2, true, QuadMode::weighted};
            Mat u = toy_batch(2, 4, 7);
            elbo_loss(mdl, u, cfg, q, 29, 3);
            check_grads_fd(
                mdl.params,
                [&](ParamStore&) { return elbo_eval(mdl, u, cfg, q, 29, 3).total; },
                1e-5, 1e-4, 1e-3);
        }
    }
}

TEST(ElboLoss, SoftplusHeadGradientsMatchFiniteDifferences) {
    Model mdl = toy_model(DecoderKind::concat, 4, 2, false, Activation::softplus,
                          EncodingKind::rff);
    Quadrature q = quad1d(4);
    ELBOConfig cfg{0.01, 2, true, QuadMode::weighted};
    Mat u = toy_batch(2, 4, 8);
    elbo_loss(mdl, u, cfg, q, 31, 4);
    check_grads_fd(mdl.params,
                   [&](ParamStore&) { return elbo_eval(mdl, u, cfg, q, 31, 4).total; }, 1e-5,
                   1e-4, 1e-3);
}

TEST(Reparameterization, IdentityDecoderGradientMatchesAnalytic) {
    // For D(z) = z (one latent, one grid point, unit weight) the expected
    // reconstruction gradient w.r.t. mu is mu - u.
    const double mu = 0.7, u = -0.4;
    RngStream rng(37, StreamPurpose::latent_noise, 0);
    const int draws = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < draws; ++s) {
        const double sigma = 0.3;
        const double z = mu + sigma * rng.normal();
        // d/dmu [ 1/2 z^2 - z u ] with dz/dmu = 1
        const double g = z - u;
        sum += g;
        sumsq += g * g;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
    EXPECT_NEAR(mean, mu - u, 3.0 * se);
}

TEST(Quadrature, WeightedStableRawScalesAcrossResolutions) {
    // The same continuous function measured on 32- vs 64-point grids of one
    // domain: the weighted objective barely moves, the raw sum roughly
    // doubles. Samples share the per-sample data stream, so the 64-point set
    // is the same function on a finer grid.
    GRFParams p;
    p.m = 32;
    Dataset d32 = sample_grf(p, 4, 77);
    p.m = 64;
    Dataset d64 = sample_grf(p, 4, 77);
    Quadrature q32 = Quadrature::uniform(d32.grid, 1.0);
    Quadrature q64 = Quadrature::uniform(d64.grid, 1.0);
    for (int s = 0; s < 4; ++s) {
        std::vector<double> u32 = d32.sample(s).values;
        std::vector<double> u64 = d64.sample(s).values;
        const double w32 = white_noise_loglik(u32, u32, q32);
        const double w64 = white_noise_loglik(u64, u64, q64);
        const double r32 = white_noise_loglik(u32, u32, q32, QuadMode::raw_sum);
        const double r64 = white_noise_loglik(u64, u64, q64, QuadMode::raw_sum);
        EXPECT_NEAR(w64, w32, 0.05 * std::abs(w32));
        EXPECT_NEAR(r64 / r32, 2.0, 0.15);
    }
}
