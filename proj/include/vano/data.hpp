#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "vano/checkpoint.hpp"
#include "vano/errors.hpp"
#include "vano/mat.hpp"
#include "vano/rng.hpp"

namespace vano {

// One function's point-wise measurements; coordinates live on the Dataset.
struct FunctionSample {
    std::vector<double> values;
};

// N aligned samples on a shared grid over a box domain.
struct Dataset {
    int dim = 1;
    std::vector<double> extents; // min, max per axis
    Mat grid;                    // (m, dim), point-major
    Mat values;                  // (N, m), sample-major
    std::string provenance;      // JSON: generator, seed, params

    int n_samples() const { return values.rows; }
    int n_points() const { return grid.rows; }

    double domain_measure() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= extents[2 * a + 1] - extents[2 * a];
        return v;
    }

    FunctionSample sample(int i) const {
        FunctionSample s;
        s.values.assign(&values(i, 0), &values(i, 0) + values.cols);
        return s;
    }
};

// Uniform endpoint-included grid on [0,1].
inline Mat uniform_grid_1d(int m) {
    if (m < 2) throw ConfigError("grid needs at least 2 points");
    Mat g(m, 1);
    for (int i = 0; i < m; ++i) g(i, 0) = static_cast<double>(i) / (m - 1);
    return g;
}

// Uniform endpoint-included grid on [0,1]^2, row-major with x fastest.
inline Mat uniform_grid_2d(int side) {
    if (side < 2) throw ConfigError("grid needs at least 2 points per side");
    Mat g(side * side, 2);
    for (int iy = 0; iy < side; ++iy)
        for (int ix = 0; ix < side; ++ix) {
            g(iy * side + ix, 0) = static_cast<double>(ix) / (side - 1);
            g(iy * side + ix, 1) = static_cast<double>(iy) / (side - 1);
        }
    return g;
}

// ---- Gaussian random field on [0,1], zero boundary ----

struct GRFParams {
    double alpha = 2.0;  // spectral decay exponent, > 1/2
    double tau = 3.0;    // inverse length scale, >= 0
    int n_eig = 32;      // truncation
    int m = 128;         // grid size
};

inline double grf_lambda(int i, const GRFParams& p) {
    if (i < 1) throw ConfigError("grf eigenpair index must be >= 1");
    const double w = 2.0 * M_PI * i;
    return std::pow(w * w + p.tau * p.tau, -p.alpha);
}

struct GrfEigenfunction {
    int i = 1;
    double operator()(double x) const { return std::sqrt(2.0) * std::sin(2.0 * M_PI * i * x); }
};

// (lambda_i, phi_i) with lambda_i = ((2 pi i)^2 + tau^2)^(-alpha) and
// phi_i(x) = sqrt(2) sin(2 pi i x).
inline std::pair<double, GrfEigenfunction> grf_eigpair(int i, const GRFParams& p) {
    return {grf_lambda(i, p), GrfEigenfunction{i}};
}

// Karhunen-Loeve samples u = sum_i xi_i sqrt(lambda_i) phi_i on a uniform
// grid, xi drawn per-sample from the data stream (index = sample id).
inline Dataset sample_grf(const GRFParams& p, int N, uint64_t seed) {
    if (N < 1) throw ConfigError("sample_grf: N must be >= 1");
    Dataset ds;
    ds.dim = 1;
    ds.extents = {0.0, 1.0};
    ds.grid = uniform_grid_1d(p.m);
    ds.values = Mat(N, p.m);

    Mat phi(p.m, p.n_eig); // scaled eigenfunctions sqrt(lambda_i) phi_i
    for (int i = 1; i <= p.n_eig; ++i) {
        const double sl = std::sqrt(grf_lambda(i, p));
        for (int j = 0; j < p.m; ++j)
            phi(j, i - 1) = sl * std::sqrt(2.0) * std::sin(2.0 * M_PI * i * ds.grid(j, 0));
    }
    for (int s = 0; s < N; ++s) {
        RngStream rng(seed, StreamPurpose::data, static_cast<uint64_t>(s));
        std::vector<double> xi(p.n_eig);
        for (double& x : xi) x = rng.normal();
        for (int j = 0; j < p.m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < p.n_eig; ++i) acc += xi[i] * phi(j, i);
            ds.values(s, j) = acc;
        }
    }
    ds.provenance = std::string("{\"generator\":\"grf\",\"seed\":") + std::to_string(seed) +
                    ",\"alpha\":" + std::to_string(p.alpha) + ",\"tau\":" + std::to_string(p.tau) +
                    ",\"n_eig\":" + std::to_string(p.n_eig) + ",\"m\":" + std::to_string(p.m) +
                    ",\"N\":" + std::to_string(N) + "}";
    return ds;
}

// ---- 2D Gaussian density bumps on [0,1]^2 ----

// U(x) = (2 pi)^(-1/2) det(Sigma)^(-1/2) exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)),
// Sigma = sigma I, mu ~ U(0,1)^2, sigma ~ U(0, 0.1) + 0.01. The (2 pi)^(-1/2)
// prefactor is used as written in the source experiment; pass
// standard_normalization to use the bivariate (2 pi)^(-1) instead.
inline Dataset sample_bumps(int N, int m_side, uint64_t seed, bool standard_normalization = false) {
    if (N < 1) throw ConfigError("sample_bumps: N must be >= 1");
    if (m_side < 2) throw ConfigError("sample_bumps: side must be >= 2");
    Dataset ds;
    ds.dim = 2;
    ds.extents = {0.0, 1.0, 0.0, 1.0};
    ds.grid = uniform_grid_2d(m_side);
    const int m = m_side * m_side;
    ds.values = Mat(N, m);
    const double two_pi_pow = standard_normalization ? 1.0 / (2.0 * M_PI)
                                                     : 1.0 / std::sqrt(2.0 * M_PI);
    for (int s = 0; s < N; ++s) {
        RngStream rng(seed, StreamPurpose::data, static_cast<uint64_t>(s));
        const double mux = rng.uniform();
        const double muy = rng.uniform();
        const double sigma = rng.uniform() * 0.1 + 0.01; // covariance scale, Sigma = sigma I
        const double amp = two_pi_pow / sigma;           // det(sigma I_2)^(-1/2) = 1/sigma
        const double inv2s = 0.5 / sigma;
        for (int j = 0; j < m; ++j) {
            const double dx = ds.grid(j, 0) - mux;
            const double dy = ds.grid(j, 1) - muy;
            ds.values(s, j) = amp * std::exp(-(dx * dx + dy * dy) * inv2s);
        }
    }
    ds.provenance = std::string("{\"generator\":\"bumps\",\"seed\":") + std::to_string(seed) +
                    ",\"side\":" + std::to_string(m_side) + ",\"N\":" + std::to_string(N) +
                    ",\"standard_normalization\":" + (standard_normalization ? "true" : "false") +
                    "}";
    return ds;
}

// ---- file format ----
// "VANOFDS1", u32 dim, u32 m, u32 N, f64 extents (2*dim), f64 grid (m*dim,
// point-major), f64 values (N*m, sample-major), u32 provenance length, bytes.
// Little-endian throughout.

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open dataset for writing: " + path, 0);
    os.write("VANOFDS1", 8);
    ckptio::put_u32(os, static_cast<uint32_t>(ds.dim));
    ckptio::put_u32(os, static_cast<uint32_t>(ds.grid.rows));
    ckptio::put_u32(os, static_cast<uint32_t>(ds.values.rows));
    ckptio::put_f64(os, ds.extents.data(), ds.extents.size());
    ckptio::put_f64(os, ds.grid.data(), ds.grid.size());
    ckptio::put_f64(os, ds.values.data(), ds.values.size());
    ckptio::put_u32(os, static_cast<uint32_t>(ds.provenance.size()));
    os.write(ds.provenance.data(), static_cast<std::streamsize>(ds.provenance.size()));
    if (!os) throw FormatError("write failure on dataset: " + path, 0);
}

inline Dataset load_dataset(const std::string& path) {
    ckptio::Reader r(path);
    if (!r.in) throw FormatError("cannot open dataset: " + path, 0);
    char magic[8];
    r.need(magic, 8, "magic");
    if (std::memcmp(magic, "VANOFDS1", 8) != 0)
        throw FormatError("bad magic, expected \"VANOFDS1\"", 0);
    Dataset ds;
    ds.dim = static_cast<int>(r.u32("dim"));
    if (ds.dim < 1 || ds.dim > 3) throw FormatError("unsupported domain dimension", r.at - 4);
    const uint32_t m = r.u32("point count");
    const uint32_t N = r.u32("sample count");
    if (N < 1) throw FormatError("dataset must contain at least one sample", r.at - 4);
    if (m < 1) throw FormatError("dataset must contain at least one grid point", r.at - 8);
    ds.extents.resize(2 * static_cast<size_t>(ds.dim));
    r.f64(ds.extents.data(), ds.extents.size(), "extents");
    ds.grid = Mat(static_cast<int>(m), ds.dim);
    r.f64(ds.grid.data(), ds.grid.size(), "grid");
    ds.values = Mat(static_cast<int>(N), static_cast<int>(m));
    r.f64(ds.values.data(), ds.values.size(), "values");
    const uint32_t plen = r.u32("provenance length");
    ds.provenance = r.str(plen, "provenance");
    return ds;
}

// Deterministic disjoint split by shuffled indices.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, int n_train,
                                                    uint64_t seed) {
    const int N = ds.n_samples();
    if (n_train < 1 || n_train >= N)
        throw ConfigError("train_test_split: need 1 <= n_train < N");
    std::vector<int> idx(N);
    for (int i = 0; i < N; ++i) idx[i] = i;
    RngStream rng(seed, StreamPurpose::shuffle, 0);
    shuffle(idx, rng);
    auto take = [&](int from, int count) {
        Dataset out;
        out.dim = ds.dim;
        out.extents = ds.extents;
        out.grid = ds.grid;
        out.values = Mat(count, ds.values.cols);
        for (int i = 0; i < count; ++i)
            std::copy(&ds.values(idx[from + i], 0), &ds.values(idx[from + i], 0) + ds.values.cols,
                      &out.values(i, 0));
        out.provenance = ds.provenance;
        return out;
    };
    return {take(0, n_train), take(n_train, N - n_train)};
}

} // namespace vano
