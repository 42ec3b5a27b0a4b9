#pragma once

#include <string>
#include <vector>

#include "vano/encodings.hpp"
#include "vano/params.hpp"
#include "vano/tape.hpp"

namespace vano {

struct EncoderSpec {
    int input_dim = 0;             // measurement count m
    std::vector<int> hidden;       // hidden layer widths
    int latent_dim = 0;            // n
    Activation act = Activation::gelu;
};

enum class DecoderKind { linear, concat, split_concat };

inline const char* to_string(DecoderKind k) {
    switch (k) {
        case DecoderKind::linear: return "linear";
        case DecoderKind::concat: return "concat";
        case DecoderKind::split_concat: return "split_concat";
    }
    return "?";
}

inline DecoderKind decoder_kind_from_string(const std::string& s) {
    if (s == "linear") return DecoderKind::linear;
    if (s == "concat") return DecoderKind::concat;
    if (s == "split_concat") return DecoderKind::split_concat;
    throw ConfigError("unknown decoder kind: " + s);
}

struct DecoderSpec {
    DecoderKind kind = DecoderKind::linear;
    EncodingSpec encoding;
    std::vector<int> hidden;
    int latent_dim = 0;
    Activation act = Activation::gelu;
    Activation output_activation = Activation::identity;
    // Bias-free layers keep the map zero-preserving, so sin-only encodings
    // yield outputs that vanish exactly on the domain boundary.
    bool use_bias = true;
    // Multiplier on the output layer's Glorot init. Starting the decoder near
    // zero lets basis columns grow only where the data asks for them; a plain
    // init leaves unused columns inflating the generative covariance long
    // after the posterior noise channel has collapsed.
    double out_init_scale = 1.0;
};

// Diagonal Gaussian posterior over the latent space.
struct LatentGaussian {
    std::vector<double> mu;
    std::vector<double> log_sigma;
};

// Standard normal prior on R^n.
struct Prior {
    int dim = 0;
};

struct Model {
    EncoderSpec enc;
    DecoderSpec dec;
    bool rwf = false;
    ParamStore params;
};

constexpr double kLogSigmaClamp = 10.0;

// Latent chunk sizes for the split-concat decoder: floor(n/H) each, last
// chunk absorbs the remainder.
inline std::vector<int> split_chunk_sizes(int n, int H) {
    if (H < 1) throw ConfigError("split_concat requires at least one hidden layer");
    if (n < H) throw ConfigError("split_concat requires latent_dim >= hidden layer count");
    std::vector<int> sizes(H, n / H);
    sizes.back() = n - (n / H) * (H - 1);
    return sizes;
}

namespace modeldetail {

inline void add_mlp_params(ParamStore& ps, const std::string& prefix,
                           const std::vector<int>& dims, bool bias) {
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const bool last = (l + 2 == dims.size());
        const std::string name = prefix + (last ? ".out" : ".l" + std::to_string(l));
        ps.add(name + ".W", {dims[l + 1], dims[l]});
        if (bias) ps.add(name + ".b", {dims[l + 1]});
    }
}

inline std::vector<int> encoder_dims(const EncoderSpec& e) {
    std::vector<int> dims{e.input_dim};
    dims.insert(dims.end(), e.hidden.begin(), e.hidden.end());
    dims.push_back(2 * e.latent_dim);
    return dims;
}

// Weight matrix for a layer, combining the factorized form when present.
inline Mat weight_mat(const ParamStore& ps, const std::string& base) {
    if (ps.has(base + ".W")) return ps.tensor_mat(base + ".W");
    Mat s = ps.tensor_mat(base + ".s");
    Mat v = ps.tensor_mat(base + ".V");
    Mat w(v.rows, v.cols);
    for (int i = 0; i < v.rows; ++i) {
        const double e = std::exp(s.v[i]);
        for (int j = 0; j < v.cols; ++j) w(i, j) = e * v(i, j);
    }
    return w;
}

inline NodeId weight_node(Tape& t, const ParamStore& ps, const std::string& base) {
    if (ps.has(base + ".W")) return t.param(ps, base + ".W");
    return t.rwf_weight(t.param(ps, base + ".s"), t.param(ps, base + ".V"));
}

// One dense layer on the tape: act(X W^T + b).
inline NodeId tape_dense(Tape& t, const ParamStore& ps, const std::string& base, NodeId x,
                         Activation a, bool bias) {
    NodeId y = t.matmul(x, weight_node(t, ps, base), false, true);
    if (bias && (ps.has(base + ".b"))) y = t.add_rowvec(y, t.param(ps, base + ".b"));
    return t.act(y, a);
}

inline Mat eval_dense(const ParamStore& ps, const std::string& base, const Mat& x, Activation a,
                      bool bias) {
    Mat w = weight_mat(ps, base);
    Mat y;
    gemm(x, false, w, true, y);
    if (bias && ps.has(base + ".b")) {
        Mat b = ps.tensor_mat(base + ".b");
        for (int i = 0; i < y.rows; ++i)
            for (int j = 0; j < y.cols; ++j) y(i, j) += b.v[j];
    }
    if (a != Activation::identity) {
        const size_t n = y.size();
#pragma omp parallel for schedule(static) if (threads() > 1 && n > 16384)
        for (size_t i = 0; i < n; ++i) y.v[i] = act_apply(a, y.v[i]);
    }
    return y;
}

} // namespace modeldetail

// Parameter layout + Glorot/zero init; one init stream per tensor, indexed in
// layout order so the draw sequence is independent of tensor sizes.
inline Model build_model(const EncoderSpec& enc, const DecoderSpec& dec, bool rwf,
                         uint64_t init_seed, double rwf_init_std = 0.1) {
    Model mdl;
    mdl.enc = enc;
    mdl.dec = dec;
    mdl.rwf = rwf;
    ParamStore& ps = mdl.params;

    const auto edims = modeldetail::encoder_dims(enc);
    modeldetail::add_mlp_params(ps, "enc", edims, true);

    const int f = dec.encoding.out_dim();
    if (f <= 0) throw ConfigError("decoder encoding has empty output");
    switch (dec.kind) {
        case DecoderKind::linear: {
            std::vector<int> dims{f};
            dims.insert(dims.end(), dec.hidden.begin(), dec.hidden.end());
            dims.push_back(dec.latent_dim);
            modeldetail::add_mlp_params(ps, "dec", dims, dec.use_bias);
            break;
        }
        case DecoderKind::concat: {
            std::vector<int> dims{dec.latent_dim + f};
            dims.insert(dims.end(), dec.hidden.begin(), dec.hidden.end());
            dims.push_back(1);
            modeldetail::add_mlp_params(ps, "dec", dims, dec.use_bias);
            break;
        }
        case DecoderKind::split_concat: {
            const auto chunks =
                split_chunk_sizes(dec.latent_dim, static_cast<int>(dec.hidden.size()));
            int in = chunks[0] + f;
            for (size_t h = 0; h < dec.hidden.size(); ++h) {
                const std::string name = "dec.l" + std::to_string(h);
                ps.add(name + ".W", {dec.hidden[h], in});
                if (dec.use_bias) ps.add(name + ".b", {dec.hidden[h]});
                if (h + 1 < dec.hidden.size()) in = chunks[h + 1] + dec.hidden[h];
            }
            ps.add("dec.out.W", {1, dec.hidden.back()});
            if (dec.use_bias) ps.add("dec.out.b", {1});
            break;
        }
    }
    if (dec.encoding.kind == EncodingKind::rff)
        ps.add("dec.enc.B", {dec.encoding.rff.q, dec.encoding.rff.d});

    // init
    uint64_t tensor_idx = 0;
    for (const auto& r : ps.records()) {
        RngStream rng(init_seed, StreamPurpose::init, tensor_idx++);
        if (r.shape.size() == 2 && r.name != "dec.enc.B") {
            glorot_init(ps.tensor(r.name), r.shape[0], r.shape[1], rng);
            if (r.name == "dec.out.W" && dec.out_init_scale != 1.0)
                for (double& w : ps.tensor(r.name)) w *= dec.out_init_scale;
        }
        // biases stay zero
    }
    if (dec.encoding.kind == EncodingKind::rff) {
        RFFEncoding built = build_rff(init_seed, dec.encoding.rff.q, dec.encoding.rff.d,
                                      dec.encoding.rff.sigma);
        mdl.dec.encoding.rff = built;
        ps.set_tensor("dec.enc.B", built.B);
    }
    if (rwf) mdl.params = rwf_reparameterize(ps, true, rwf_init_std, init_seed);
    return mdl;
}

// ---- encoder ----

// Tape version over a batch of measurement rows: returns (mu, log_sigma),
// each (batch, n); log_sigma hard-clamped to [-10, 10].
inline std::pair<NodeId, NodeId> tape_encode(Tape& t, const Model& mdl, NodeId u_batch) {
    NodeId x = u_batch;
    for (size_t l = 0; l < mdl.enc.hidden.size(); ++l)
        x = modeldetail::tape_dense(t, mdl.params, "enc.l" + std::to_string(l), x, mdl.enc.act,
                                    true);
    x = modeldetail::tape_dense(t, mdl.params, "enc.out", x, Activation::identity, true);
    const int n = mdl.enc.latent_dim;
    NodeId mu = t.slice_cols(x, 0, n);
    NodeId ls = t.clamp(t.slice_cols(x, n, 2 * n), -kLogSigmaClamp, kLogSigmaClamp);
    return {mu, ls};
}

inline std::pair<Mat, Mat> encode_batch(const Model& mdl, const Mat& u_batch) {
    if (u_batch.cols != mdl.enc.input_dim)
        throw DimError("encode: expected " + std::to_string(mdl.enc.input_dim) +
                       " measurements, got " + std::to_string(u_batch.cols));
    if (!u_batch.all_finite()) throw InputError("encode: non-finite measurement values");
    Mat x = u_batch;
    for (size_t l = 0; l < mdl.enc.hidden.size(); ++l)
        x = modeldetail::eval_dense(mdl.params, "enc.l" + std::to_string(l), x, mdl.enc.act, true);
    x = modeldetail::eval_dense(mdl.params, "enc.out", x, Activation::identity, true);
    const int n = mdl.enc.latent_dim;
    Mat mu(x.rows, n), ls(x.rows, n);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < n; ++j) {
            mu(i, j) = x(i, j);
            ls(i, j) = std::min(std::max(x(i, j + n), -kLogSigmaClamp), kLogSigmaClamp);
        }
    return {mu, ls};
}

inline LatentGaussian encode(const Model& mdl, const std::vector<double>& u_values) {
    Mat u(1, static_cast<int>(u_values.size()));
    u.v = u_values;
    auto [mu, ls] = encode_batch(mdl, u);
    return LatentGaussian{mu.v, ls.v};
}

// Reparameterized draw: z = mu + exp(log_sigma) * eps.
inline std::vector<double> sample_latent(const LatentGaussian& post,
                                         const std::vector<double>& eps) {
    if (eps.size() != post.mu.size()) throw DimError("sample_latent: eps length mismatch");
    std::vector<double> z(post.mu.size());
    for (size_t i = 0; i < z.size(); ++i)
        z[i] = post.mu[i] + std::exp(post.log_sigma[i]) * eps[i];
    return z;
}

// ---- decoder ----

// Decoder basis on a set of query points (linear kind): rows are grid points,
// columns are the n basis functions tau_i.
inline Mat eval_linear_basis(const Model& mdl, const Mat& gamma) {
    if (mdl.dec.kind != DecoderKind::linear)
        throw UnsupportedError("linear basis requested from a nonlinear decoder");
    Mat x = gamma;
    for (size_t l = 0; l < mdl.dec.hidden.size(); ++l)
        x = modeldetail::eval_dense(mdl.params, "dec.l" + std::to_string(l), x, mdl.dec.act,
                                    mdl.dec.use_bias);
    return modeldetail::eval_dense(mdl.params, "dec.out", x, Activation::identity,
                                   mdl.dec.use_bias);
}

// Tape decoder over all (sample, query point) pairs. Z is (R, n), gamma is
// the encoded grid (m, f); result is (R, m) with the output activation applied.
inline NodeId tape_decode_field(Tape& t, const Model& mdl, NodeId z, const Mat& gamma) {
    const int R = t.val(z).rows;
    const int m = gamma.rows;
    const DecoderSpec& d = mdl.dec;
    NodeId out = -1;
    switch (d.kind) {
        case DecoderKind::linear: {
            NodeId g = t.constant(gamma);
            NodeId basis = g;
            for (size_t l = 0; l < d.hidden.size(); ++l)
                basis = modeldetail::tape_dense(t, mdl.params, "dec.l" + std::to_string(l), basis,
                                                d.act, d.use_bias);
            basis = modeldetail::tape_dense(t, mdl.params, "dec.out", basis, Activation::identity,
                                            d.use_bias);
            out = t.matmul(z, basis, false, true); // (R, m)
            break;
        }
        case DecoderKind::concat: {
            NodeId zx = t.repeat_rows(z, m);
            NodeId g = t.tile_rows(t.constant(gamma), R);
            NodeId x = t.concat_cols(zx, g);
            for (size_t l = 0; l < d.hidden.size(); ++l)
                x = modeldetail::tape_dense(t, mdl.params, "dec.l" + std::to_string(l), x, d.act,
                                            d.use_bias);
            x = modeldetail::tape_dense(t, mdl.params, "dec.out", x, Activation::identity,
                                        d.use_bias);
            out = t.reshape(x, R, m);
            break;
        }
        case DecoderKind::split_concat: {
            const auto chunks = split_chunk_sizes(d.latent_dim, static_cast<int>(d.hidden.size()));
            NodeId g = t.tile_rows(t.constant(gamma), R);
            NodeId x = -1;
            int c0 = 0;
            for (size_t h = 0; h < d.hidden.size(); ++h) {
                NodeId chunk = t.repeat_rows(t.slice_cols(z, c0, c0 + chunks[h]), m);
                c0 += chunks[h];
                NodeId in = t.concat_cols(chunk, h == 0 ? g : x);
                x = modeldetail::tape_dense(t, mdl.params, "dec.l" + std::to_string(h), in, d.act,
                                            d.use_bias);
            }
            x = modeldetail::tape_dense(t, mdl.params, "dec.out", x, Activation::identity,
                                        d.use_bias);
            out = t.reshape(x, R, m);
            break;
        }
    }
    return t.act(out, d.output_activation);
}

// Plain evaluation mirroring tape_decode_field.
inline Mat decode_field_batch(const Model& mdl, const Mat& Z, const Mat& gamma) {
    const int R = Z.rows;
    const int m = gamma.rows;
    const DecoderSpec& d = mdl.dec;
    if (Z.cols != d.latent_dim) throw DimError("decode: latent dimension mismatch");
    Mat out;
    switch (d.kind) {
        case DecoderKind::linear: {
            Mat basis = eval_linear_basis(mdl, gamma); // (m, n)
            gemm(Z, false, basis, true, out);
            break;
        }
        case DecoderKind::concat: {
            Mat x(static_cast<int>(R) * m, d.latent_dim + gamma.cols);
            for (int r = 0; r < R; ++r)
                for (int i = 0; i < m; ++i) {
                    double* dst = &x(r * m + i, 0);
                    std::copy(&Z(r, 0), &Z(r, 0) + Z.cols, dst);
                    std::copy(&gamma(i, 0), &gamma(i, 0) + gamma.cols, dst + Z.cols);
                }
            for (size_t l = 0; l < d.hidden.size(); ++l)
                x = modeldetail::eval_dense(mdl.params, "dec.l" + std::to_string(l), x, d.act,
                                            d.use_bias);
            x = modeldetail::eval_dense(mdl.params, "dec.out", x, Activation::identity,
                                        d.use_bias);
            out = Mat(R, m);
            out.v = x.v;
            break;
        }
        case DecoderKind::split_concat: {
            const auto chunks = split_chunk_sizes(d.latent_dim, static_cast<int>(d.hidden.size()));
            Mat x;
            int c0 = 0;
            for (size_t h = 0; h < d.hidden.size(); ++h) {
                const int base_cols = h == 0 ? gamma.cols : x.cols;
                Mat in(R * m, chunks[h] + base_cols);
                for (int r = 0; r < R; ++r)
                    for (int i = 0; i < m; ++i) {
                        double* dst = &in(r * m + i, 0);
                        std::copy(&Z(r, c0), &Z(r, c0) + chunks[h], dst);
                        const double* src = h == 0 ? &gamma(i, 0) : &x(r * m + i, 0);
                        std::copy(src, src + base_cols, dst + chunks[h]);
                    }
                c0 += chunks[h];
                x = modeldetail::eval_dense(mdl.params, "dec.l" + std::to_string(h), in, d.act,
                                            d.use_bias);
            }
            x = modeldetail::eval_dense(mdl.params, "dec.out", x, Activation::identity,
                                        d.use_bias);
            out = Mat(R, m);
            out.v = x.v;
            break;
        }
    }
    const size_t total = out.size();
    if (d.output_activation != Activation::identity)
        for (size_t i = 0; i < total; ++i) out.v[i] = act_apply(d.output_activation, out.v[i]);
    return out;
}

// Vectorized decode at arbitrary query points; order-preserving.
inline std::vector<double> decode_field(const Model& mdl, const std::vector<double>& z,
                                        const Mat& xs) {
    if (xs.rows == 0) return {};
    Mat Z(1, static_cast<int>(z.size()));
    Z.v = z;
    Mat gamma = encode_points(mdl.dec.encoding, xs);
    Mat out = decode_field_batch(mdl, Z, gamma);
    return out.v;
}

inline double decode_at(const Model& mdl, const std::vector<double>& z,
                        const std::vector<double>& x) {
    Mat xs(1, static_cast<int>(x.size()));
    xs.v = x;
    return decode_field(mdl, z, xs)[0];
}

// Spec-facing aliases: the three decoder variants share the query-point path.
inline double decode_linear(const Model& mdl, const std::vector<double>& z,
                            const std::vector<double>& x) {
    if (mdl.dec.kind != DecoderKind::linear) throw ConfigError("decode_linear: wrong decoder kind");
    return decode_at(mdl, z, x);
}

inline double decode_concat(const Model& mdl, const std::vector<double>& z,
                            const std::vector<double>& x) {
    if (mdl.dec.kind != DecoderKind::concat) throw ConfigError("decode_concat: wrong decoder kind");
    return decode_at(mdl, z, x);
}

inline double decode_split_concat(const Model& mdl, const std::vector<double>& z,
                                  const std::vector<double>& x) {
    if (mdl.dec.kind != DecoderKind::split_concat)
        throw ConfigError("decode_split_concat: wrong decoder kind");
    return decode_at(mdl, z, x);
}

} // namespace vano
