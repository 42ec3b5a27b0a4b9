#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "vano/blas.hpp"
#include "vano/data.hpp"
#include "vano/mat.hpp"
#include "vano/model.hpp"

namespace vano {

// ---- covariance operators on a grid ----

// C = sum_i lambda_i phi_i phi_i^T with the first n_eig scaled eigenfunction
// evaluations on the given grid.
inline Mat covariance_analytic(const GRFParams& p, const Mat& grid) {
    const int m = grid.rows;
    Mat phi(m, p.n_eig);
    for (int i = 1; i <= p.n_eig; ++i) {
        const double sl = std::sqrt(grf_lambda(i, p));
        for (int j = 0; j < m; ++j)
            phi(j, i - 1) = sl * std::sqrt(2.0) * std::sin(2.0 * M_PI * i * grid(j, 0));
    }
    Mat c;
    gemm(phi, false, phi, true, c);
    return c;
}

// C_hat = sum_i tau_i tau_i^T from a linear decoder's basis on the grid.
// Only meaningful with an identity output head.
inline Mat covariance_model_linear(const Model& mdl, const Mat& grid) {
    if (mdl.dec.kind != DecoderKind::linear ||
        mdl.dec.output_activation != Activation::identity)
        throw UnsupportedError(
            "covariance_model_linear: needs a linear decoder with identity output");
    Mat gamma = encode_points(mdl.dec.encoding, grid);
    Mat basis = eval_linear_basis(mdl, gamma); // (m, n)
    Mat c;
    gemm(basis, false, basis, true, c);
    return c;
}

// Normalized squared Hilbert-Schmidt distance, ||C - Chat||_F^2 / ||C||_F^2.
inline double hs_error(const Mat& c, const Mat& chat) {
    require_same_shape(c, chat, "hs_error");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < c.size(); ++i) {
        const double d = c.v[i] - chat.v[i];
        num += d * d;
        den += c.v[i] * c.v[i];
    }
    if (den == 0.0) throw ContractError("hs_error: reference operator has zero norm");
    return num / den;
}

// ---- maximum mean discrepancy over function samples ----

struct KernelFamily {
    double sigma_min = 0.1;
    double sigma_max = 20.0;
    int grid_size = 64; // log-spaced, endpoints included
};

namespace metricdetail {

// Pairwise squared distances d2(i,j) = sum_k w_k (a_ik - b_jk)^2, computed as
// |a|^2 + |b|^2 - 2 a.Wb via one GEMM on the sqrt(w)-scaled samples.
inline Mat pairwise_sqdist(const Mat& a, const Mat& b, const std::vector<double>& w) {
    if (a.cols != b.cols || static_cast<size_t>(a.cols) != w.size())
        throw DimError("pairwise_sqdist: grids disagree");
    Mat as(a.rows, a.cols), bs(b.rows, b.cols);
    std::vector<double> sw(w.size());
    for (size_t k = 0; k < w.size(); ++k) sw[k] = std::sqrt(w[k]);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) as(i, k) = a(i, k) * sw[k];
    for (int i = 0; i < b.rows; ++i)
        for (int k = 0; k < b.cols; ++k) bs(i, k) = b(i, k) * sw[k];
    std::vector<double> na(a.rows, 0.0), nb(b.rows, 0.0);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) na[i] += as(i, k) * as(i, k);
    for (int i = 0; i < b.rows; ++i)
        for (int k = 0; k < b.cols; ++k) nb[i] += bs(i, k) * bs(i, k);
    Mat g;
    gemm(as, false, bs, true, g);
    Mat d2(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j)
            d2(i, j) = std::max(0.0, na[i] + nb[j] - 2.0 * g(i, j));
    return d2;
}

// Biased (V-statistic) MMD^2 from precomputed squared distances.
inline double mmd_from_dists(const Mat& daa, const Mat& dbb, const Mat& dab, double sigma) {
    const double c = -0.5 / (sigma * sigma);
    auto mean_kernel = [c](const Mat& d) {
        double acc = 0.0;
        for (double x : d.v) acc += std::exp(c * x);
        return acc / static_cast<double>(d.size());
    };
    return mean_kernel(daa) + mean_kernel(dbb) - 2.0 * mean_kernel(dab);
}

} // namespace metricdetail

// MMD^2 between two sample sets under a Gaussian kernel
// k(x,y) = exp(-||x-y||^2_q / (2 sigma^2)), with the quadrature-weighted L2
// distance on the shared grid (pass unit weights for the raw distance).
inline double mmd(const Mat& a, const Mat& b, double sigma, const std::vector<double>& w) {
    if (a.rows < 1 || b.rows < 1) throw ContractError("mmd: empty sample set");
    Mat daa = metricdetail::pairwise_sqdist(a, a, w);
    Mat dbb = metricdetail::pairwise_sqdist(b, b, w);
    Mat dab = metricdetail::pairwise_sqdist(a, b, w);
    return metricdetail::mmd_from_dists(daa, dbb, dab, sigma);
}

struct GMMDResult {
    double value = 0.0;
    double argmax_sigma = 0.0;
};

inline std::vector<double> kernel_sigma_grid(const KernelFamily& fam) {
    if (!(fam.sigma_min < fam.sigma_max) || fam.grid_size < 2)
        throw ConfigError("kernel family: need sigma_min < sigma_max and grid_size >= 2");
    std::vector<double> sigmas(fam.grid_size);
    const double l0 = std::log(fam.sigma_min), l1 = std::log(fam.sigma_max);
    for (int i = 0; i < fam.grid_size; ++i)
        sigmas[i] = std::exp(l0 + (l1 - l0) * i / (fam.grid_size - 1));
    sigmas.front() = fam.sigma_min;
    sigmas.back() = fam.sigma_max;
    return sigmas;
}

// sup over the kernel family of MMD; ties resolved toward smaller sigma.
inline GMMDResult gmmd(const Mat& a, const Mat& b, const KernelFamily& fam,
                       const std::vector<double>& w) {
    if (a.rows < 1 || b.rows < 1) throw ContractError("gmmd: empty sample set");
    Mat daa = metricdetail::pairwise_sqdist(a, a, w);
    Mat dbb = metricdetail::pairwise_sqdist(b, b, w);
    Mat dab = metricdetail::pairwise_sqdist(a, b, w);
    GMMDResult best;
    bool first = true;
    for (double sigma : kernel_sigma_grid(fam)) {
        const double v = metricdetail::mmd_from_dists(daa, dbb, dab, sigma);
        if (first || v > best.value) {
            best.value = v;
            best.argmax_sigma = sigma;
            first = false;
        }
    }
    return best;
}

// ---- circular statistics ----

struct CircularStats {
    double variance = 0.0;
    double skewness = 0.0;
    bool skewness_defined = true;
};

// Moments of angle-valued data: z_p = sum_j exp(i p theta_j), R_p = |z_p|/N,
// phi_p = arg z_p; variance = 1 - R_1, skewness = R_2 sin(phi_2 - 2 phi_1) /
// (1 - R_1)^(3/2). Skewness is undefined when R_1 -> 1 (all angles equal).
inline CircularStats circular_stats(const std::vector<double>& thetas) {
    if (thetas.empty()) throw ContractError("circular_stats: empty angle set");
    const double n = static_cast<double>(thetas.size());
    std::complex<double> z1(0.0, 0.0), z2(0.0, 0.0);
    for (double th : thetas) {
        z1 += std::complex<double>(std::cos(th), std::sin(th));
        z2 += std::complex<double>(std::cos(2.0 * th), std::sin(2.0 * th));
    }
    const double r1 = std::abs(z1) / n;
    const double r2 = std::abs(z2) / n;
    CircularStats out;
    out.variance = 1.0 - r1;
    if (out.variance <= 1e-12) {
        out.variance = std::max(0.0, out.variance);
        out.skewness_defined = false;
        out.skewness = 0.0;
        return out;
    }
    const double phi1 = std::arg(z1);
    const double phi2 = std::arg(z2);
    out.skewness = r2 * std::sin(phi2 - 2.0 * phi1) / std::pow(1.0 - r1, 1.5);
    return out;
}

// Wrap an angle to [-pi, pi).
inline double wrap_angle(double th) {
    th = std::fmod(th + M_PI, 2.0 * M_PI);
    if (th < 0.0) th += 2.0 * M_PI;
    return th - M_PI;
}

} // namespace vano
