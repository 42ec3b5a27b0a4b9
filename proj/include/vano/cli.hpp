#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vano/data.hpp"
#include "vano/metrics.hpp"
#include "vano/objective.hpp"
#include "vano/train.hpp"

namespace vano::cli {

// Exit codes: 0 success, 2 usage/config error, 3 data-format error,
// 4 numerical failure.
constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kFormat = 3;
constexpr int kNumerical = 4;

inline int gen_grf(double alpha, double tau, int n_eig, int m, int N, uint64_t seed,
                   const std::string& out) {
    GRFParams p;
    p.alpha = alpha;
    p.tau = tau;
    p.n_eig = n_eig;
    p.m = m;
    Dataset ds = sample_grf(p, N, seed);
    save_dataset(ds, out);
    std::cout << "wrote " << out << ": " << ds.provenance << "\n";
    return kOk;
}

inline int gen_bumps(int N, int side, uint64_t seed, bool standard_normalization,
                     const std::string& out) {
    Dataset ds = sample_bumps(N, side, seed, standard_normalization);
    save_dataset(ds, out);
    std::cout << "wrote " << out << ": " << ds.provenance << "\n";
    return kOk;
}

inline int train(const std::string& preset, const std::string& config_path,
                 const std::vector<std::string>& overrides, const std::string& data_path,
                 const std::string& out_dir) {
    TrainConfig cfg;
    if (preset == "grf") cfg = preset_grf();
    else if (preset == "bumps") cfg = preset_bumps();
    else if (!preset.empty()) throw ConfigError("unknown preset: " + preset);
    ConfigMap m = to_config_map(cfg);
    if (!config_path.empty()) {
        ConfigMap file = load_config_file(config_path);
        for (auto& [k, v] : file) {
            if (!m.count(k)) throw ConfigError("unknown config key: " + k);
            m[k] = v;
        }
    }
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("override must be key=value: " + ov);
        const std::string k = trim(ov.substr(0, eq));
        if (!m.count(k)) throw ConfigError("unknown config key: " + k);
        m[k] = trim(ov.substr(eq + 1));
    }
    cfg = from_config_map(m);
    Dataset data = load_dataset(data_path);
    RunArtifacts art = run_training(cfg, data, out_dir);
    if (art.aborted_nonfinite) {
        std::cerr << "training aborted at step " << art.steps_run
                  << ": non-finite loss or gradient; last finite checkpoint written to "
                  << art.checkpoint_path << "\n";
        return kNumerical;
    }
    std::cout << "trained " << art.steps_run << " steps, final loss "
              << fmt_double(art.final_total) << "\n"
              << "checkpoint: " << art.checkpoint_path << "\n"
              << "log: " << art.log_path << "\n";
    return kOk;
}

// Uniform sampling grid at a requested resolution for the checkpoint's
// domain; `resolution` counts points per axis.
inline Mat sampling_grid(const LoadedModel& lm, int resolution) {
    if (resolution < 2) throw ConfigError("resolution must be >= 2");
    if (lm.data_dim == 1) return uniform_grid_1d(resolution);
    if (lm.data_dim == 2) return uniform_grid_2d(resolution);
    throw ConfigError("sampling supports 1-D and 2-D domains");
}

inline Dataset decode_dataset(const LoadedModel& lm, const Mat& z_rows, const Mat& grid,
                              const std::string& provenance) {
    Dataset out;
    out.dim = lm.data_dim;
    out.extents = lm.data_extents;
    out.grid = grid;
    Mat gamma = encode_points(lm.model.dec.encoding, grid);
    out.values = Mat(z_rows.rows, grid.rows);
    // Decode in chunks to bound the working set for nonlinear decoders.
    const int chunk = std::max(1, 16 * 1024 * 1024 / std::max(1, grid.rows) / 8);
    for (int at = 0; at < z_rows.rows; at += chunk) {
        const int bs = std::min(chunk, z_rows.rows - at);
        Mat z(bs, z_rows.cols);
        std::copy(&z_rows(at, 0), &z_rows(at, 0) + static_cast<size_t>(bs) * z_rows.cols,
                  z.data());
        Mat d = decode_field_batch(lm.model, z, gamma);
        std::copy(d.v.begin(), d.v.end(), out.values.v.begin() + static_cast<size_t>(at) * grid.rows);
    }
    out.provenance = provenance;
    return out;
}

// Prior samples decoded on a grid of arbitrary resolution.
inline int sample(const std::string& ckpt_path, int count, int resolution, uint64_t seed,
                  const std::string& out) {
    LoadedModel lm = model_from_checkpoint(ckpt_path);
    if (count < 1) throw ConfigError("count must be >= 1");
    Mat grid = sampling_grid(lm, resolution);
    const int n = lm.cfg.latent_dim;
    Mat z(count, n);
    for (int i = 0; i < count; ++i) {
        RngStream rng(seed, StreamPurpose::latent_noise, static_cast<uint64_t>(i));
        for (int j = 0; j < n; ++j) z(i, j) = rng.normal();
    }
    std::ostringstream prov;
    prov << "{\"generator\":\"vano_sample\",\"checkpoint\":\"" << ckpt_path << "\",\"seed\":"
         << seed << ",\"count\":" << count << ",\"resolution\":" << resolution << "}";
    Dataset ds = decode_dataset(lm, z, grid, prov.str());
    save_dataset(ds, out);
    std::cout << "wrote " << out << ": " << ds.n_samples() << " samples at resolution "
              << resolution << "\n";
    return kOk;
}

// Posterior-mean reconstructions. Writes <prefix>_input.fds (original data),
// <prefix>_recon.fds (decoded at the requested resolution, 0 = data grid) and
// <prefix>_abserr.fds (|recon - input| on the data grid).
inline int reconstruct(const std::string& ckpt_path, const std::string& data_path, int resolution,
                       const std::string& prefix) {
    LoadedModel lm = model_from_checkpoint(ckpt_path);
    Dataset data = load_dataset(data_path);
    if (data.n_points() != lm.data_m)
        throw ConfigError("reconstruct: data grid (" + std::to_string(data.n_points()) +
                          " points) does not match the checkpoint's training grid (" +
                          std::to_string(lm.data_m) + ")");
    auto [mu, ls] = encode_batch(lm.model, data.values);
    (void)ls; // z = posterior mean, no noise
    std::ostringstream prov;
    prov << "{\"generator\":\"vano_reconstruct\",\"checkpoint\":\"" << ckpt_path
         << "\",\"data\":\"" << data_path << "\"}";

    Dataset on_data_grid = decode_dataset(lm, mu, data.grid, prov.str());
    Dataset abserr = on_data_grid;
    for (size_t i = 0; i < abserr.values.size(); ++i)
        abserr.values.v[i] = std::abs(on_data_grid.values.v[i] - data.values.v[i]);

    Dataset input = data;
    input.provenance = prov.str();
    save_dataset(input, prefix + "_input.fds");
    if (resolution > 0 && resolution != (lm.data_dim == 2
                                             ? static_cast<int>(std::lround(std::sqrt(
                                                   static_cast<double>(lm.data_m))))
                                             : lm.data_m)) {
        Mat grid = sampling_grid(lm, resolution);
        Dataset recon = decode_dataset(lm, mu, grid, prov.str());
        save_dataset(recon, prefix + "_recon.fds");
    } else {
        save_dataset(on_data_grid, prefix + "_recon.fds");
    }
    save_dataset(abserr, prefix + "_abserr.fds");
    std::cout << "wrote " << prefix << "_{input,recon,abserr}.fds for " << data.n_samples()
              << " samples\n";
    return kOk;
}

inline void append_metric_row(const std::string& csv_path, const std::string& metric, double value,
                              const std::string& aux, const std::string& a, const std::string& b,
                              uint64_t seed) {
    const bool fresh = !std::filesystem::exists(csv_path);
    std::ofstream out(csv_path, std::ios::app);
    if (fresh) out << "metric_name,value,aux,dataset_a,dataset_b,seed\n";
    out << metric << ',' << fmt_double(value) << ',' << aux << ',' << a << ',' << b << ',' << seed
        << "\n";
}

inline void require_aligned(const Dataset& a, const Dataset& b) {
    if (a.n_points() != b.n_points() || a.dim != b.dim)
        throw ConfigError("grid mismatch: A has " + std::to_string(a.n_points()) + " points (dim " +
                          std::to_string(a.dim) + "), B has " + std::to_string(b.n_points()) +
                          " points (dim " + std::to_string(b.dim) + ")");
}

inline Mat head_rows(const Mat& m, int count) {
    if (count <= 0 || count >= m.rows) return m;
    Mat out(count, m.cols);
    std::copy(m.v.begin(), m.v.begin() + static_cast<size_t>(count) * m.cols, out.v.begin());
    return out;
}

inline int eval_gmmd(const std::string& file_a, const std::string& file_b, int samples,
                     bool raw_distance, const std::string& csv) {
    Dataset a = load_dataset(file_a);
    Dataset b = load_dataset(file_b);
    require_aligned(a, b);
    Quadrature q = Quadrature::uniform(a.grid, a.domain_measure());
    std::vector<double> w = raw_distance ? std::vector<double>(q.weights.size(), 1.0) : q.weights;
    KernelFamily fam;
    GMMDResult r = gmmd(head_rows(a.values, samples), head_rows(b.values, samples), fam, w);
    std::cout << "gmmd = " << fmt_double(r.value) << " (argmax sigma = " << r.argmax_sigma
              << ")\n";
    if (!csv.empty())
        append_metric_row(csv, "gmmd", r.value, fmt_double(r.argmax_sigma), file_a, file_b, 0);
    return kOk;
}

inline int eval_mmd(const std::string& file_a, const std::string& file_b, double sigma,
                    int samples, bool raw_distance, const std::string& csv) {
    Dataset a = load_dataset(file_a);
    Dataset b = load_dataset(file_b);
    require_aligned(a, b);
    Quadrature q = Quadrature::uniform(a.grid, a.domain_measure());
    std::vector<double> w = raw_distance ? std::vector<double>(q.weights.size(), 1.0) : q.weights;
    const double v = mmd(head_rows(a.values, samples), head_rows(b.values, samples), sigma, w);
    std::cout << "mmd = " << fmt_double(v) << " (sigma = " << sigma << ")\n";
    if (!csv.empty()) append_metric_row(csv, "mmd", v, fmt_double(sigma), file_a, file_b, 0);
    return kOk;
}

// Parses "grf:alpha=2,tau=3,n_eig=32".
inline GRFParams parse_analytic_spec(const std::string& s) {
    if (s.rfind("grf:", 0) != 0 && s != "grf")
        throw ConfigError("analytic covariance spec must start with grf:");
    GRFParams p;
    if (s == "grf") return p;
    std::istringstream ss(s.substr(4));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ConfigError("bad analytic spec token: " + tok);
        const std::string k = trim(tok.substr(0, eq));
        const std::string v = trim(tok.substr(eq + 1));
        if (k == "alpha") p.alpha = std::stod(v);
        else if (k == "tau") p.tau = std::stod(v);
        else if (k == "n_eig") p.n_eig = static_cast<int>(std::stoll(v));
        else throw ConfigError("unknown analytic spec key: " + k);
    }
    return p;
}

inline int eval_hs(const std::string& analytic, const std::string& ckpt_path,
                   const std::string& csv) {
    GRFParams p = parse_analytic_spec(analytic);
    LoadedModel lm = model_from_checkpoint(ckpt_path);
    if (lm.data_dim != 1) throw ConfigError("hs evaluation needs a 1-D model");
    Mat grid = uniform_grid_1d(lm.data_m);
    p.m = lm.data_m;
    Mat c = covariance_analytic(p, grid);
    Mat chat = covariance_model_linear(lm.model, grid);
    const double err = hs_error(c, chat);
    std::cout << "hs_error = " << fmt_double(err) << "\n";
    if (!csv.empty()) append_metric_row(csv, "hs_error", err, "n/a", analytic, ckpt_path, 0);
    return kOk;
}

// Treats every value in the file as one angle; wraps to [-pi, pi).
inline int eval_circular(const std::string& file_a, const std::string& csv) {
    Dataset a = load_dataset(file_a);
    std::vector<double> th(a.values.v);
    for (double& x : th) x = wrap_angle(x);
    CircularStats st = circular_stats(th);
    std::cout << "circular_variance = " << fmt_double(st.variance) << "\n";
    if (st.skewness_defined) std::cout << "circular_skewness = " << fmt_double(st.skewness) << "\n";
    else std::cout << "circular_skewness = undefined (all angles identical)\n";
    if (!csv.empty()) {
        append_metric_row(csv, "circular_variance", st.variance, "n/a", file_a, "", 0);
        if (st.skewness_defined)
            append_metric_row(csv, "circular_skewness", st.skewness, "n/a", file_a, "", 0);
    }
    return kOk;
}

// A run directory must carry its config snapshot, version string, training
// log and final checkpoint.
inline int self_audit(const std::string& run_dir) {
    namespace fs = std::filesystem;
    bool ok = true;
    for (const char* f : {"config.snapshot", "VERSION", "train_log.csv", "checkpoint.ckpt"}) {
        const std::string path = run_dir + "/" + f;
        if (!fs::exists(path)) {
            std::cerr << "self-audit: missing " << path << "\n";
            ok = false;
        }
    }
    if (ok) std::cout << "self-audit: " << run_dir << " ok\n";
    return ok ? kOk : 1;
}

} // namespace vano::cli
