// vano: train, sample and evaluate variational autoencoding neural operators
// on functional datasets (.fds files).
//
// Exit codes: 0 success, 2 usage/config error, 3 data-format error,
// 4 numerical failure. VANO_THREADS caps worker threads (default 1);
// VANO_DETERMINISTIC=1 pins everything to one thread.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "vano/cli.hpp"
#include "vano/version.hpp"

namespace {

constexpr const char* kFormatsFooter = R"(File formats:
  .fds dataset: magic VANOFDS1; u32 dim, m, N; f64 extents (min,max per axis);
     f64 grid (m*dim, point-major); f64 values (N*m, sample-major);
     u32 provenance length + JSON. Little-endian.
  .ckpt checkpoint: magic VANOCKP1; u32 tensor count; per tensor u32 name len,
     name, u32 rank, u32 dims..., f64 data; adam.m/adam.v/adam.scalars in the
     same encoding; u32 config length + key=value snapshot.

CSV schemas:
  train_log.csv: step,total,recon,kl,effective_lr,wall_ms
  metrics csv:   metric_name,value,aux,dataset_a,dataset_b,seed
)";

constexpr const char* kConfigHelp = R"(Config keys (flat `key = value`, '#' comments):
  experiment (grf|bumps|custom), latent_dim, beta, mc_samples,
  decoder (linear|concat|split_concat), activation, output_activation,
  enc_hidden, dec_hidden (comma lists), dec_bias,
  encoding (none|periodic|rff), periodic_k, periodic_L (0 = domain length),
  periodic_mode (full|no_const|sin_only), rff_q (0 = latent_dim/2), rff_sigma2,
  batch_size, iterations, base_lr, decay_rate, decay_every,
  seed_data, seed_init, seed_noise, norm_rescale,
  quadrature (weighted|raw_sum), rwf, rwf_init_std, checkpoint_every
)";

} // namespace

int main(int argc, char** argv) {
    vano::init_threads_from_env();

    CLI::App app{"variational autoencoding neural operators"};
    app.set_version_flag("--version", vano::version_string());
    app.footer(kFormatsFooter);
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic functional dataset");
    gen->require_subcommand(1);
    std::string out_path;
    uint64_t seed = 0;

    auto* gen_grf = gen->add_subcommand("grf", "Gaussian random field on [0,1]");
    double alpha = 2.0, tau = 3.0;
    int n_eig = 32, grf_m = 128, grf_n = 2048;
    gen_grf->add_option("--alpha", alpha, "spectral decay exponent")->capture_default_str();
    gen_grf->add_option("--tau", tau, "inverse length scale")->capture_default_str();
    gen_grf->add_option("--n-eig", n_eig, "eigenpair truncation")->capture_default_str();
    gen_grf->add_option("--m", grf_m, "grid points")->capture_default_str();
    gen_grf->add_option("--n", grf_n, "sample count")->capture_default_str();
    gen_grf->add_option("--seed", seed, "data seed")->capture_default_str();
    gen_grf->add_option("-o,--out", out_path, "output .fds path")->required();

    auto* gen_bumps = gen->add_subcommand("bumps", "2D Gaussian densities on [0,1]^2");
    int side = 48, bumps_n = 2048;
    bool std_norm = false;
    gen_bumps->add_option("--n", bumps_n, "sample count")->capture_default_str();
    gen_bumps->add_option("--side", side, "grid side (side x side points)")->capture_default_str();
    gen_bumps->add_option("--seed", seed, "data seed")->capture_default_str();
    gen_bumps->add_flag("--standard-normalization", std_norm,
                        "use the bivariate (2 pi)^-1 prefactor instead of (2 pi)^-1/2");
    gen_bumps->add_option("-o,--out", out_path, "output .fds path")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    tr->footer(kConfigHelp);
    std::string preset, config_path, data_path, out_dir;
    std::vector<std::string> overrides;
    tr->add_option("--preset", preset, "grf or bumps (fills every config key)");
    tr->add_option("--config", config_path, "config file overriding the preset");
    tr->add_option("--set", overrides, "key=value override (repeatable)");
    tr->add_option("--data", data_path, "training .fds file")->required();
    tr->add_option("--out", out_dir, "run directory")->required();

    // sample
    auto* sm = app.add_subcommand("sample", "decode prior samples at any resolution");
    std::string ckpt;
    int count = 16, resolution = 128;
    sm->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    sm->add_option("--count", count, "number of samples")->capture_default_str();
    sm->add_option("--resolution", resolution, "grid points per axis")->capture_default_str();
    sm->add_option("--seed", seed, "latent sampling seed")->capture_default_str();
    sm->add_option("-o,--out", out_path, "output .fds path")->required();

    // reconstruct
    auto* rc = app.add_subcommand("reconstruct", "posterior-mean reconstructions of a dataset");
    std::string rc_prefix;
    int rc_resolution = 0;
    rc->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    rc->add_option("--data", data_path, "input .fds on the training grid")->required();
    rc->add_option("--resolution", rc_resolution, "recon grid points per axis (0 = data grid)")
        ->capture_default_str();
    rc->add_option("--out-prefix", rc_prefix, "writes <prefix>_{input,recon,abserr}.fds")
        ->required();

    // eval
    auto* ev = app.add_subcommand("eval", "functional-distribution metrics");
    ev->require_subcommand(1);
    std::string file_a, file_b, csv_path, analytic;
    int samples = 0;
    bool raw_distance = false;
    double sigma = 1.0;

    auto* ev_gmmd = ev->add_subcommand("gmmd", "generalized MMD between two .fds files");
    ev_gmmd->add_option("a", file_a, "first dataset")->required();
    ev_gmmd->add_option("b", file_b, "second dataset")->required();
    ev_gmmd->add_option("--samples", samples, "use only the first k samples of each (0 = all)");
    ev_gmmd->add_flag("--raw-distance", raw_distance, "unweighted L2 distance between value vectors");
    ev_gmmd->add_option("--csv", csv_path, "append a row to this metrics CSV");

    auto* ev_mmd = ev->add_subcommand("mmd", "single-kernel MMD between two .fds files");
    ev_mmd->add_option("a", file_a, "first dataset")->required();
    ev_mmd->add_option("b", file_b, "second dataset")->required();
    ev_mmd->add_option("--sigma", sigma, "kernel length scale")->capture_default_str();
    ev_mmd->add_option("--samples", samples, "use only the first k samples of each (0 = all)");
    ev_mmd->add_flag("--raw-distance", raw_distance, "unweighted L2 distance");
    ev_mmd->add_option("--csv", csv_path, "append a row to this metrics CSV");

    auto* ev_hs = ev->add_subcommand("hs", "normalized HS error vs an analytic covariance");
    ev_hs->add_option("--analytic", analytic, "grf:alpha=..,tau=..,n_eig=..")->required();
    ev_hs->add_option("--checkpoint", ckpt, "linear-decoder checkpoint")->required();
    ev_hs->add_option("--csv", csv_path, "append a row to this metrics CSV");

    auto* ev_circ = ev->add_subcommand("circular", "circular variance/skewness of angle values");
    ev_circ->add_option("a", file_a, "angle .fds (all values, wrapped to [-pi,pi))")->required();
    ev_circ->add_option("--csv", csv_path, "append a row to this metrics CSV");

    // self-audit
    auto* audit = app.add_subcommand("self-audit", "verify a run directory is complete");
    std::string run_dir;
    audit->add_option("dir", run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc2 = app.exit(e);
        return rc2 == 0 ? 0 : vano::cli::kUsage;
    }

    try {
        if (gen_grf->parsed()) return vano::cli::gen_grf(alpha, tau, n_eig, grf_m, grf_n, seed, out_path);
        if (gen_bumps->parsed()) return vano::cli::gen_bumps(bumps_n, side, seed, std_norm, out_path);
        if (tr->parsed()) return vano::cli::train(preset, config_path, overrides, data_path, out_dir);
        if (sm->parsed()) return vano::cli::sample(ckpt, count, resolution, seed, out_path);
        if (rc->parsed()) return vano::cli::reconstruct(ckpt, data_path, rc_resolution, rc_prefix);
        if (ev_gmmd->parsed()) return vano::cli::eval_gmmd(file_a, file_b, samples, raw_distance, csv_path);
        if (ev_mmd->parsed()) return vano::cli::eval_mmd(file_a, file_b, sigma, samples, raw_distance, csv_path);
        if (ev_hs->parsed()) return vano::cli::eval_hs(analytic, ckpt, csv_path);
        if (ev_circ->parsed()) return vano::cli::eval_circular(file_a, csv_path);
        if (audit->parsed()) return vano::cli::self_audit(run_dir);
    } catch (const vano::FormatError& e) {
        std::cerr << "data format error: " << e.what() << "\n";
        return vano::cli::kFormat;
    } catch (const vano::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return vano::cli::kNumerical;
    } catch (const vano::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return vano::cli::kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return vano::cli::kUsage;
}
