#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vano/adam.hpp"
#include "vano/checkpoint.hpp"
#include "vano/config.hpp"
#include "vano/data.hpp"
#include "vano/model.hpp"
#include "vano/objective.hpp"
#include "vano/version.hpp"

namespace vano {

enum class Experiment { grf, bumps, custom };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::grf: return "grf";
        case Experiment::bumps: return "bumps";
        case Experiment::custom: return "custom";
    }
    return "?";
}

struct TrainConfig {
    Experiment experiment = Experiment::custom;
    int latent_dim = 16;
    double beta = 1e-5;
    int mc_samples = 1;
    DecoderKind decoder = DecoderKind::concat;
    Activation activation = Activation::gelu;
    Activation output_activation = Activation::identity;
    std::vector<int> enc_hidden{128, 128, 128};
    std::vector<int> dec_hidden{128, 128, 128};
    bool dec_bias = true;
    EncodingKind encoding = EncodingKind::none;
    int periodic_k = 32;
    double periodic_L = 0.0; // 0 = use the dataset's domain length
    PeriodicMode periodic_mode = PeriodicMode::full;
    int rff_q = 0;           // 0 = latent_dim / 2
    double rff_sigma2 = 10.0;
    int batch_size = 32;
    int64_t iterations = 1000;
    double base_lr = 1e-3;
    double decay_rate = 0.9;
    int64_t decay_every = 1000;
    uint64_t seed_data = 0;
    uint64_t seed_init = 0;
    uint64_t seed_noise = 0;
    bool norm_rescale = false;
    QuadMode quadrature = QuadMode::weighted;
    bool rwf = false;
    double rwf_init_std = 0.1;
    double dec_out_init_scale = 1.0;
    int64_t checkpoint_every = 2000;
};

// Appendix-style presets: all per-experiment training choices in one place.
inline TrainConfig preset_grf() {
    TrainConfig c;
    c.experiment = Experiment::grf;
    c.latent_dim = 64;
    c.beta = 5e-6;
    c.mc_samples = 16;
    c.decoder = DecoderKind::linear;
    c.output_activation = Activation::identity;
    c.encoding = EncodingKind::periodic;
    c.periodic_k = 32;
    c.periodic_mode = PeriodicMode::sin_only;
    c.dec_bias = false; // zero-preserving trunk keeps boundary values exactly 0
    c.batch_size = 32;
    c.iterations = 40000;
    c.norm_rescale = true;
    c.rwf = true;
    c.dec_out_init_scale = 0.01;
    return c;
}

inline TrainConfig preset_bumps() {
    TrainConfig c;
    c.experiment = Experiment::bumps;
    c.latent_dim = 32;
    c.beta = 1e-5;
    c.mc_samples = 4;
    c.decoder = DecoderKind::concat;
    c.output_activation = Activation::softplus;
    c.encoding = EncodingKind::rff;
    c.rff_q = 0; // -> n/2
    c.rff_sigma2 = 10.0;
    c.batch_size = 32;
    c.iterations = 20000;
    c.norm_rescale = true;
    c.rwf = true;
    return c;
}

inline const char* to_string(PeriodicMode m) {
    switch (m) {
        case PeriodicMode::full: return "full";
        case PeriodicMode::no_const: return "no_const";
        case PeriodicMode::sin_only: return "sin_only";
    }
    return "?";
}

inline PeriodicMode periodic_mode_from_string(const std::string& s) {
    if (s == "full") return PeriodicMode::full;
    if (s == "no_const") return PeriodicMode::no_const;
    if (s == "sin_only") return PeriodicMode::sin_only;
    throw ConfigError("unknown periodic mode: " + s);
}

inline const char* to_string(EncodingKind k) {
    switch (k) {
        case EncodingKind::none: return "none";
        case EncodingKind::periodic: return "periodic";
        case EncodingKind::rff: return "rff";
    }
    return "?";
}

inline EncodingKind encoding_kind_from_string(const std::string& s) {
    if (s == "none") return EncodingKind::none;
    if (s == "periodic") return EncodingKind::periodic;
    if (s == "rff") return EncodingKind::rff;
    throw ConfigError("unknown encoding kind: " + s);
}

inline ConfigMap to_config_map(const TrainConfig& c) {
    ConfigMap m;
    m["experiment"] = to_string(c.experiment);
    m["latent_dim"] = std::to_string(c.latent_dim);
    m["beta"] = fmt_double(c.beta);
    m["mc_samples"] = std::to_string(c.mc_samples);
    m["decoder"] = to_string(c.decoder);
    m["activation"] = to_string(c.activation);
    m["output_activation"] = to_string(c.output_activation);
    m["enc_hidden"] = fmt_int_list(c.enc_hidden);
    m["dec_hidden"] = fmt_int_list(c.dec_hidden);
    m["dec_bias"] = c.dec_bias ? "true" : "false";
    m["encoding"] = to_string(c.encoding);
    m["periodic_k"] = std::to_string(c.periodic_k);
    m["periodic_L"] = fmt_double(c.periodic_L);
    m["periodic_mode"] = to_string(c.periodic_mode);
    m["rff_q"] = std::to_string(c.rff_q);
    m["rff_sigma2"] = fmt_double(c.rff_sigma2);
    m["batch_size"] = std::to_string(c.batch_size);
    m["iterations"] = std::to_string(c.iterations);
    m["base_lr"] = fmt_double(c.base_lr);
    m["decay_rate"] = fmt_double(c.decay_rate);
    m["decay_every"] = std::to_string(c.decay_every);
    m["seed_data"] = std::to_string(c.seed_data);
    m["seed_init"] = std::to_string(c.seed_init);
    m["seed_noise"] = std::to_string(c.seed_noise);
    m["norm_rescale"] = c.norm_rescale ? "true" : "false";
    m["quadrature"] = to_string(c.quadrature);
    m["rwf"] = c.rwf ? "true" : "false";
    m["rwf_init_std"] = fmt_double(c.rwf_init_std);
    m["dec_out_init_scale"] = fmt_double(c.dec_out_init_scale);

    m["checkpoint_every"] = std::to_string(c.checkpoint_every);
    return m;
}

inline TrainConfig from_config_map(const ConfigMap& m) {
    TrainConfig c;
    const std::string exp = cfg_str(m, "experiment");
    if (exp == "grf") c.experiment = Experiment::grf;
    else if (exp == "bumps") c.experiment = Experiment::bumps;
    else if (exp == "custom") c.experiment = Experiment::custom;
    else throw ConfigError("unknown experiment: " + exp);
    c.latent_dim = static_cast<int>(cfg_int(m, "latent_dim"));
    c.beta = cfg_double(m, "beta");
    c.mc_samples = static_cast<int>(cfg_int(m, "mc_samples"));
    c.decoder = decoder_kind_from_string(cfg_str(m, "decoder"));
    c.activation = activation_from_string(cfg_str(m, "activation"));
    c.output_activation = activation_from_string(cfg_str(m, "output_activation"));
    c.enc_hidden = cfg_int_list(m, "enc_hidden");
    c.dec_hidden = cfg_int_list(m, "dec_hidden");
    c.dec_bias = cfg_bool(m, "dec_bias");
    c.encoding = encoding_kind_from_string(cfg_str(m, "encoding"));
    c.periodic_k = static_cast<int>(cfg_int(m, "periodic_k"));
    c.periodic_L = cfg_double(m, "periodic_L");
    c.periodic_mode = periodic_mode_from_string(cfg_str(m, "periodic_mode"));
    c.rff_q = static_cast<int>(cfg_int(m, "rff_q"));
    c.rff_sigma2 = cfg_double(m, "rff_sigma2");
    c.batch_size = static_cast<int>(cfg_int(m, "batch_size"));
    c.iterations = cfg_int(m, "iterations");
    c.base_lr = cfg_double(m, "base_lr");
    c.decay_rate = cfg_double(m, "decay_rate");
    c.decay_every = cfg_int(m, "decay_every");
    c.seed_data = static_cast<uint64_t>(cfg_int(m, "seed_data"));
    c.seed_init = static_cast<uint64_t>(cfg_int(m, "seed_init"));
    c.seed_noise = static_cast<uint64_t>(cfg_int(m, "seed_noise"));
    c.norm_rescale = cfg_bool(m, "norm_rescale");
    c.quadrature = quad_mode_from_string(cfg_str(m, "quadrature"));
    c.rwf = cfg_bool(m, "rwf");
    c.rwf_init_std = cfg_double(m, "rwf_init_std");
    c.dec_out_init_scale = cfg_double(m, "dec_out_init_scale");

    c.checkpoint_every = cfg_int(m, "checkpoint_every");
    return c;
}

// Resolved architecture for a config against a concrete dataset geometry.
inline Model build_model_for(const TrainConfig& cfg, int data_dim, int data_m,
                             double domain_length) {
    EncoderSpec enc;
    enc.input_dim = data_m;
    enc.hidden = cfg.enc_hidden;
    enc.latent_dim = cfg.latent_dim;
    enc.act = cfg.activation;

    DecoderSpec dec;
    dec.kind = cfg.decoder;
    dec.hidden = cfg.dec_hidden;
    dec.latent_dim = cfg.latent_dim;
    dec.act = cfg.activation;
    dec.output_activation = cfg.output_activation;
    dec.use_bias = cfg.dec_bias;
    dec.out_init_scale = cfg.dec_out_init_scale;
    dec.encoding.kind = cfg.encoding;
    dec.encoding.coord_dim = data_dim;
    switch (cfg.encoding) {
        case EncodingKind::none: break;
        case EncodingKind::periodic:
            if (data_dim != 1) throw ConfigError("periodic encoding needs a 1-D domain");
            dec.encoding.periodic.k = cfg.periodic_k;
            dec.encoding.periodic.L = cfg.periodic_L > 0.0 ? cfg.periodic_L : domain_length;
            dec.encoding.periodic.mode = cfg.periodic_mode;
            break;
        case EncodingKind::rff:
            dec.encoding.rff.q = cfg.rff_q > 0 ? cfg.rff_q : cfg.latent_dim / 2;
            dec.encoding.rff.d = data_dim;
            dec.encoding.rff.sigma = std::sqrt(cfg.rff_sigma2);
            break;
    }
    return build_model(enc, dec, cfg.rwf, cfg.seed_init, cfg.rwf_init_std);
}



// Snapshot = config plus the dataset geometry needed to rebuild the model
// from a checkpoint alone.
inline ConfigMap snapshot_map(const TrainConfig& cfg, const Dataset& ds) {
    ConfigMap m = to_config_map(cfg);
    m["data_dim"] = std::to_string(ds.dim);
    m["data_m"] = std::to_string(ds.n_points());
    std::ostringstream ext;
    for (size_t i = 0; i < ds.extents.size(); ++i) ext << (i ? "," : "") << fmt_double(ds.extents[i]);
    m["data_extents"] = ext.str();
    return m;
}

struct LoadedModel {
    Model model;
    AdamState adam;
    TrainConfig cfg;
    int data_dim = 1;
    int data_m = 0;
    std::vector<double> data_extents;
};

inline LoadedModel model_from_checkpoint(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    ConfigMap m = parse_config_text(ck.config_text);
    LoadedModel lm;
    lm.cfg = from_config_map(m);
    lm.data_dim = static_cast<int>(cfg_int(m, "data_dim"));
    lm.data_m = static_cast<int>(cfg_int(m, "data_m"));
    {
        std::istringstream ss(cfg_str(m, "data_extents"));
        std::string tok;
        while (std::getline(ss, tok, ',')) lm.data_extents.push_back(std::stod(tok));
    }
    double domain_length = lm.data_extents.size() >= 2 ? lm.data_extents[1] - lm.data_extents[0]
                                                       : 1.0;
    lm.model = build_model_for(lm.cfg, lm.data_dim, lm.data_m, domain_length);
    if (lm.model.params.values.size() != ck.params.values.size())
        throw FormatError("checkpoint parameter layout does not match its config", 0);
    lm.model.params = std::move(ck.params);
    if (lm.model.dec.encoding.kind == EncodingKind::rff)
        lm.model.dec.encoding.rff.B = lm.model.params.tensor_mat("dec.enc.B");
    lm.adam = std::move(ck.adam);
    return lm;
}

struct RunArtifacts {
    std::string out_dir;
    std::string checkpoint_path;
    std::string log_path;
    std::string config_path;
    int64_t steps_run = 0;
    double final_total = 0.0;
    bool aborted_nonfinite = false;
};

// Full training loop: epoch-shuffled minibatches, Adam with the exponential
// schedule, CSV logging, periodic + final checkpoints. On a non-finite loss
// or gradient the last finite parameters are persisted and the run is marked
// aborted.
inline RunArtifacts run_training(const TrainConfig& cfg, const Dataset& data,
                                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    RunArtifacts art;
    art.out_dir = out_dir;
    art.config_path = out_dir + "/config.snapshot";
    art.log_path = out_dir + "/train_log.csv";
    art.checkpoint_path = out_dir + "/checkpoint.ckpt";

    const ConfigMap snap = snapshot_map(cfg, data);
    const std::string snap_text = serialize_config(snap);
    {
        std::ofstream cf(art.config_path);
        cf << snap_text;
        std::ofstream vf(out_dir + "/VERSION");
        vf << version_string() << "\n";
    }

    const int N = data.n_samples();
    const int B = std::min(cfg.batch_size, N);
    if (B < 1) throw ConfigError("train: empty dataset");
    Quadrature quad = Quadrature::uniform(data.grid, data.domain_measure());
    Model mdl = build_model_for(cfg, data.dim, data.n_points(),
                                data.extents[1] - data.extents[0]);
    AdamState adam = AdamState::make(mdl.params.values.size(), cfg.base_lr, cfg.decay_rate,
                                     cfg.decay_every);
    ELBOConfig ec{cfg.beta, cfg.mc_samples, cfg.norm_rescale, cfg.quadrature};
    const Mat gamma = encode_points(mdl.dec.encoding, quad.points);

    std::ofstream log(art.log_path);
    log << "step,total,recon,kl,effective_lr,wall_ms\n";

    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    int64_t epoch = -1;
    int cursor = N; // force shuffle on first step

    Mat batch(B, data.values.cols);
    const int m = data.values.cols;
    for (int64_t step = 0; step < cfg.iterations; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        if (cursor + B > N) {
            ++epoch;
            RngStream rng(cfg.seed_data, StreamPurpose::shuffle,
                          static_cast<uint64_t>(1 + epoch));
            shuffle(order, rng);
            cursor = 0;
        }
        for (int i = 0; i < B; ++i) {
            const int src = order[cursor + i];
            std::copy(&data.values(src, 0), &data.values(src, 0) + m, &batch(i, 0));
        }
        cursor += B;

        bool bad = false;
        LossReport rep;
        try {
            rep = elbo_loss(mdl, batch, ec, quad, cfg.seed_noise, static_cast<uint64_t>(step),
                            &gamma);
            if (!std::isfinite(rep.total)) bad = true;
            if (!bad) adam_step(adam, mdl.params);
        } catch (const NumericalError&) {
            bad = true;
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        log << step << ',' << fmt_double(rep.total) << ',' << fmt_double(rep.recon) << ','
            << fmt_double(rep.kl) << ',' << fmt_double(effective_lr(adam)) << ',' << ms << "\n";
        if (bad) {
            // Parameters predate the failed update and are still finite.
            save_checkpoint(art.checkpoint_path, mdl.params, adam, snap_text);
            art.aborted_nonfinite = true;
            art.steps_run = step;
            return art;
        }
        art.final_total = rep.total;
        art.steps_run = step + 1;
        if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
            step + 1 < cfg.iterations)
            save_checkpoint(out_dir + "/ckpt_step_" + std::to_string(step + 1) + ".ckpt",
                            mdl.params, adam, snap_text);
    }
    save_checkpoint(art.checkpoint_path, mdl.params, adam, snap_text);
    return art;
}

} // namespace vano
