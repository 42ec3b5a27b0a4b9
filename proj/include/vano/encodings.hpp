#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "vano/errors.hpp"
#include "vano/mat.hpp"
#include "vano/rng.hpp"

namespace vano {

enum class EncodingKind { none, periodic, rff };

// Which terms of the periodic encoding to emit. `full` is
// [1, cos, sin, ..., cos(k.), sin(k.)]; `no_const` drops the leading 1;
// `sin_only` keeps just the sine harmonics, which vanish at x = 0 and x = L.
enum class PeriodicMode { full, no_const, sin_only };

struct PeriodicEncoding {
    int k = 0;        // harmonic count
    double L = 1.0;   // domain length; omega = 2*pi / L
    PeriodicMode mode = PeriodicMode::full;

    int out_dim() const {
        switch (mode) {
            case PeriodicMode::full: return 2 * k + 1;
            case PeriodicMode::no_const: return 2 * k;
            case PeriodicMode::sin_only: return k;
        }
        return 0;
    }
};

struct RFFEncoding {
    Mat B;              // (q, d), frozen after construction
    double sigma = 1.0; // sampling std of B entries
    int q = 0;
    int d = 0;

    int out_dim() const { return 2 * q; }
};

struct EncodingSpec {
    EncodingKind kind = EncodingKind::none;
    PeriodicEncoding periodic;
    RFFEncoding rff;
    int coord_dim = 1;

    int out_dim() const {
        switch (kind) {
            case EncodingKind::none: return coord_dim;
            case EncodingKind::periodic: return periodic.out_dim();
            case EncodingKind::rff: return rff.out_dim();
        }
        return 0;
    }
};

// gamma(x) = [1, cos(wx), sin(wx), ..., cos(kwx), sin(kwx)], w = 2*pi/L,
// restricted per `mode`. 1-D coordinates only.
inline void periodic_encode(const PeriodicEncoding& enc, double x, double* out) {
    if (enc.k < 0) throw ConfigError("periodic_encode: k must be >= 0");
    if (enc.L <= 0.0) throw ConfigError("periodic_encode: L must be > 0");
    const double xl = x / enc.L;
    int at = 0;
    if (enc.mode == PeriodicMode::full) out[at++] = 1.0;
    for (int h = 1; h <= enc.k; ++h) {
        // Reduce the phase first so whole periods (x = 0 and x = L in
        // particular) hit sin(0) exactly.
        const double t = static_cast<double>(h) * xl;
        const double a = 2.0 * M_PI * (t - std::floor(t));
        if (enc.mode != PeriodicMode::sin_only) out[at++] = std::cos(a);
        out[at++] = std::sin(a);
    }
}

inline std::vector<double> periodic_encode(const PeriodicEncoding& enc, double x) {
    std::vector<double> out(enc.out_dim());
    periodic_encode(enc, x, out.data());
    return out;
}

// gamma(x) = [cos(2*pi*Bx), sin(2*pi*Bx)], all cosines then all sines.
inline void rff_encode(const RFFEncoding& enc, const double* x, int d, double* out) {
    if (d != enc.d) throw DimError("rff_encode: coordinate dimension mismatch");
    for (int i = 0; i < enc.q; ++i) {
        double a = 0.0;
        for (int j = 0; j < enc.d; ++j) a += enc.B(i, j) * x[j];
        a *= 2.0 * M_PI;
        out[i] = std::cos(a);
        out[enc.q + i] = std::sin(a);
    }
}

inline std::vector<double> rff_encode(const RFFEncoding& enc, const std::vector<double>& x) {
    std::vector<double> out(enc.out_dim());
    rff_encode(enc, x.data(), static_cast<int>(x.size()), out.data());
    return out;
}

// B entries drawn i.i.d. N(0, sigma^2) from the rff_matrix stream.
inline RFFEncoding build_rff(uint64_t seed, int q, int d, double sigma) {
    if (q < 1 || d < 1) throw ConfigError("build_rff: q and d must be >= 1");
    if (sigma <= 0.0) throw ConfigError("build_rff: sigma must be > 0");
    RFFEncoding enc;
    enc.q = q;
    enc.d = d;
    enc.sigma = sigma;
    enc.B = Mat(q, d);
    RngStream rng(seed, StreamPurpose::rff_matrix, 0);
    for (double& b : enc.B.v) b = sigma * rng.normal();
    return enc;
}

// Encode a whole set of query points: (m, d) -> (m, out_dim).
inline Mat encode_points(const EncodingSpec& enc, const Mat& points) {
    const int m = points.rows;
    Mat out(m, enc.out_dim());
    switch (enc.kind) {
        case EncodingKind::none:
            if (points.cols != enc.coord_dim)
                throw DimError("encode_points: coordinate dimension mismatch");
            out = points;
            break;
        case EncodingKind::periodic:
            if (points.cols != 1) throw DimError("encode_points: periodic encoding is 1-D");
            for (int i = 0; i < m; ++i) periodic_encode(enc.periodic, points(i, 0), &out(i, 0));
            break;
        case EncodingKind::rff:
            for (int i = 0; i < m; ++i)
                rff_encode(enc.rff, &points(i, 0), points.cols, &out(i, 0));
            break;
    }
    return out;
}

} // namespace vano
