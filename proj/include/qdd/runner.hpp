#pragma once

// Experiment driver behind the CLI: configuration resolution, subcommand
// execution, artifact emission, and manifest-based replay.
//
// Every run writes its artifacts plus manifest.qdd (canonical config
// snapshot, command, effective seed, parameter content hash, artifact
// hashes). `replay` re-executes a manifest into a fresh directory and
// verifies the artifact hashes byte for byte.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qdd/checkpoint.hpp"
#include "qdd/circuit_io.hpp"
#include "qdd/config.hpp"
#include "qdd/data.hpp"
#include "qdd/diffusion.hpp"
#include "qdd/manifest.hpp"
#include "qdd/metrics.hpp"
#include "qdd/models.hpp"
#include "qdd/png.hpp"
#include "qdd/rng.hpp"
#include "qdd/uss.hpp"

namespace qdd {

namespace fs = std::filesystem;

struct RunOptions {
    std::string command;
    std::string config_path;            // --config
    std::string preset;                 // --preset
    std::string out_dir;                // --out-dir
    std::optional<std::uint64_t> seed;  // --seed
    std::optional<int> tau;             // --tau
    std::string manifest_path;          // replay input
};

namespace detail {

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string index_name(const std::string& stem, int index, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", index);
    return stem + buf + ext;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config-driven construction

inline DiffusionSchedule schedule_from_config(const Config& cfg) {
    const int tau = cfg.get_int("schedule", "tau");
    const double b0 = cfg.get_double_or("schedule", "beta_start", 0.05);
    const double b1 = cfg.get_double_or("schedule", "beta_end", 0.5);
    const std::string target = cfg.get_or("schedule", "target", "data");
    if (target != "data" && target != "noise")
        throw std::invalid_argument("config: schedule.target must be 'data' or 'noise'");
    return DiffusionSchedule::linear(tau, b0, b1,
                                     target == "noise" ? TargetMode::Noise : TargetMode::Data);
}

struct BuiltModel {
    std::string type;  // qdense | qunet | uss
    std::optional<QDenseModel> qdense;
    std::optional<QUNetModel> qunet;
    std::optional<USSModel> uss;

    std::size_t param_count() const {
        if (qdense) return qdense->param_count();
        if (qunet) return qunet->param_count();
        return uss->param_count();
    }
    bool guided() const {
        if (qdense) return qdense->config().guided;
        if (qunet) return qunet->config().guided;
        return uss->config().guided;
    }
};

inline BuiltModel build_model(const Config& cfg) {
    BuiltModel out;
    out.type = cfg.get("model", "type");
    if (out.type == "qdense") {
        QDenseConfig m;
        m.n_image_qubits = cfg.get_int("model", "image_qubits");
        m.n_layers = cfg.get_int("model", "layers");
        m.guided = cfg.get_bool_or("model", "guided", false);
        m.n_reuploads = cfg.get_int_or("model", "reuploads", 0);
        m.n_classes = cfg.get_int_or("model", "classes", 2);
        out.qdense.emplace(m);
    } else if (out.type == "qunet") {
        QUNetConfig m;
        m.ladder = cfg.get_int_list("model", "ladder");
        m.conv_layers = cfg.get_int_or("model", "conv_layers", 8);
        m.kernel = cfg.get_int_or("model", "kernel", 3);
        m.guided = cfg.get_bool_or("model", "guided", false);
        m.n_classes = cfg.get_int_or("model", "classes", 2);
        out.qunet.emplace(m);
    } else if (out.type == "uss") {
        USSConfig m;
        m.n_image_qubits = cfg.get_int("model", "image_qubits");
        m.n_layers = cfg.get_int("model", "layers");
        m.with_ancilla = cfg.get_bool_or("model", "ancilla", false);
        m.guided = cfg.get_bool_or("model", "guided", false);
        m.n_reuploads = cfg.get_int_or("model", "reuploads", 0);
        m.n_classes = cfg.get_int_or("model", "classes", 2);
        out.uss.emplace(m);
    } else {
        throw std::invalid_argument("config: model.type must be qdense, qunet, or uss");
    }
    return out;
}

inline fs::path data_cache_dir() {
    if (const char* env = std::getenv("QDD_DATA_DIR")) return fs::path(env);
    return fs::path(".");
}

inline Dataset load_dataset(const Config& cfg, std::uint64_t seed) {
    const std::string source = cfg.get("data", "source");
    PreprocessOptions opts;
    opts.target_size = cfg.get_int_or("data", "image_size", 0);
    if (cfg.has("data", "classes")) opts.classes = cfg.get_int_list("data", "classes");
    Dataset raw;
    if (source == "synthetic") {
        // Dataset generation uses its own engine so the training stream does
        // not depend on the dataset size.
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        raw = synthetic_digits(cfg.get_int_or("data", "count", 64), rng);
    } else if (source == "idx") {
        raw = load_idx((data_cache_dir() / cfg.get("data", "images")).string(),
                       (data_cache_dir() / cfg.get("data", "labels")).string());
    } else if (source == "cifar") {
        raw = load_cifar_batch((data_cache_dir() / cfg.get("data", "batch")).string());
        opts.grayscale_average = true;
    } else {
        throw std::invalid_argument("config: data.source must be synthetic, idx, or cifar");
    }
    Dataset ds = preprocess(raw, opts);
    const int count = cfg.get_int_or("data", "count", int(ds.images.size()));
    if (count > 0 && std::size_t(count) < ds.images.size()) {
        ds.images.resize(std::size_t(count));
        ds.labels.resize(std::size_t(count));
    }
    return ds;
}

inline GradientMethod gradient_from_config(const Config& cfg) {
    const std::string g = cfg.get_or("optimizer", "gradient", "adjoint");
    if (g == "shift") return GradientMethod::ParameterShift;
    if (g == "adjoint") return GradientMethod::Adjoint;
    throw std::invalid_argument("config: optimizer.gradient must be 'shift' or 'adjoint'");
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns the artifact names (relative to out_dir) it wrote.

struct RunContext {
    Config cfg;
    fs::path out_dir;
    std::uint64_t seed = 1;
    std::string params_hash;
};

inline std::vector<std::string> cmd_train(RunContext& ctx, std::ostream& log) {
    const Config& cfg = ctx.cfg;
    BuiltModel model = build_model(cfg);
    const DiffusionSchedule schedule = schedule_from_config(cfg);
    const Dataset ds = load_dataset(cfg, ctx.seed);
    const double lr = cfg.get_double("optimizer", "lr");
    const int batch_size = cfg.get_int_or("optimizer", "batch_size", model.qunet ? 10 : 20);
    const int epochs = cfg.get_int_or("optimizer", "epochs", 30);
    const GradientMethod method = gradient_from_config(cfg);

    Rng rng(ctx.seed);
    ParamStore params = ParamStore::random_uniform(model.param_count(), rng);
    log << "training " << model.type << " with " << params.size() << " parameters on "
        << ds.images.size() << " images\n";

    std::ostringstream losses;
    losses << "epoch,step,loss\n";
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        double epoch_loss = 0.0;
        int step = 0;
        for (std::size_t begin = 0; begin < ds.images.size(); begin += std::size_t(batch_size)) {
            const std::size_t end = std::min(ds.images.size(), begin + std::size_t(batch_size));
            const std::span<const ImageTensor> batch(ds.images.data() + begin, end - begin);
            const std::span<const int> labels =
                model.guided() ? std::span<const int>(ds.labels.data() + begin, end - begin)
                               : std::span<const int>();
            TrainStepResult r{};
            if (model.qdense)
                r = train_step(*model.qdense, params, batch, labels, schedule, lr, rng, method);
            else if (model.qunet)
                r = train_step(*model.qunet, params, batch, labels, schedule, lr, rng, method);
            else
                r = train_uss_step(*model.uss, params, batch, labels, schedule, lr, rng, method);
            epoch_loss += r.loss;
            losses << epoch << "," << step << "," << detail::format_double(r.loss) << "\n";
            ++step;
        }
        log << "epoch " << epoch << "/" << epochs << " summed loss " << epoch_loss << "\n";
    }

    {
        std::ofstream f(ctx.out_dir / "loss.csv", std::ios::binary);
        f << losses.str();
    }
    save_checkpoint((ctx.out_dir / "checkpoint.qdk").string(),
                    {params, schedule, rng_state_string(rng)});
    ctx.params_hash = params_content_hash(params.values);
    return {"loss.csv", "checkpoint.qdk"};
}

inline ParamStore checkpoint_params(const Config& cfg, std::size_t expected) {
    if (!cfg.has("run", "checkpoint"))
        throw std::invalid_argument("missing model checkpoint: set run.checkpoint");
    Checkpoint ckpt = load_checkpoint(cfg.get("run", "checkpoint"));
    if (ckpt.params.size() != expected)
        throw std::invalid_argument("checkpoint parameter count " + std::to_string(ckpt.params.size()) +
                                    " does not match the configured model (" + std::to_string(expected) +
                                    ")");
    return std::move(ckpt.params);
}

inline std::vector<std::string> cmd_sample(RunContext& ctx, std::ostream& log) {
    const Config& cfg = ctx.cfg;
    BuiltModel model = build_model(cfg);
    const DiffusionSchedule schedule = schedule_from_config(cfg);
    const int n_images = cfg.get_int_or("run", "samples", 8);
    const int scale = cfg.get_int_or("run", "scale", 8);
    const int size = cfg.get_int("data", "image_size");
    const std::optional<int> label =
        model.guided() ? std::optional<int>(cfg.get_int_or("run", "label", 0)) : std::nullopt;
    ParamStore params = checkpoint_params(cfg, model.param_count());
    ctx.params_hash = params_content_hash(params.values);
    Rng rng(ctx.seed);
    std::vector<std::string> artifacts;
    std::vector<ImageTensor> finals;

    if (model.uss) {
        const int shots = cfg.get_int_or("run", "shots", 0);
        const CircuitSpec& circuit = model.uss->circuit(label);
        UnitaryMatrix u;
        if (cfg.has("run", "unitary")) {
            LoadedUnitary lu = load_unitary(cfg.get("run", "unitary"));
            u = std::move(lu.matrix);
        } else {
            u = compose_diffusion_unitary(circuit, params.values, schedule.tau);
        }
        finals = shots > 0 ? uss_sample_shots(u, n_images, size, size, shots,
                                              model.uss->config().has_ancilla(), rng)
                           : uss_sample(u, n_images, size, size, model.uss->config().has_ancilla(), rng);
        for (int i = 0; i < n_images; ++i) {
            const std::string name = detail::index_name("sample_", i, ".png");
            write_image_png((ctx.out_dir / name).string(), finals[std::size_t(i)], scale);
            artifacts.push_back(name);
        }
    } else {
        std::vector<SampleTrajectory> trajs;
        if (model.qdense)
            trajs = sample(*model.qdense, params.values, schedule, n_images, size, size, label, rng);
        else
            trajs = sample(*model.qunet, params.values, schedule, n_images, size, size, label, rng);
        for (int i = 0; i < n_images; ++i) {
            const std::string name = detail::index_name("sample_", i, "_strip.png");
            write_strip_png((ctx.out_dir / name).string(), trajs[std::size_t(i)].steps, scale);
            artifacts.push_back(name);
            finals.push_back(trajs[std::size_t(i)].final_image());
        }
    }
    write_strip_png((ctx.out_dir / "samples_grid.png").string(), finals, scale);
    artifacts.push_back("samples_grid.png");
    write_qimg((ctx.out_dir / "samples.qimg").string(), finals);
    artifacts.push_back("samples.qimg");
    log << "wrote " << n_images << " samples\n";
    return artifacts;
}

inline std::vector<std::string> cmd_compose(RunContext& ctx, std::ostream& log) {
    const Config& cfg = ctx.cfg;
    BuiltModel model = build_model(cfg);
    if (!model.uss) throw std::invalid_argument("compose requires model.type = uss");
    const DiffusionSchedule schedule = schedule_from_config(cfg);
    const std::optional<int> label =
        model.guided() ? std::optional<int>(cfg.get_int_or("run", "label", 0)) : std::nullopt;
    ParamStore params = checkpoint_params(cfg, model.param_count());
    ctx.params_hash = params_content_hash(params.values);
    const auto start = std::chrono::steady_clock::now();
    const UnitaryMatrix u = compose_diffusion_unitary(model.uss->circuit(label), params.values,
                                                      schedule.tau);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_unitary((ctx.out_dir / "unitary.qdu").string(), u, schedule.tau);
    log << "composed " << u.dim << "x" << u.dim << " unitary for tau=" << schedule.tau << " in "
        << seconds << " s\n";
    return {"unitary.qdu"};
}

inline std::vector<std::string> cmd_eval(RunContext& ctx, std::ostream& log) {
    const Config& cfg = ctx.cfg;
    const std::string run_id = ctx.out_dir.filename().string();
    const int tau = cfg.get_int("schedule", "tau");
    std::vector<ImageTensor> samples = read_qimg(cfg.get("run", "eval_samples"));
    std::vector<ImageTensor> reference;
    const std::string ref = cfg.get("run", "eval_reference");
    if (ref == "dataset") {
        Dataset ds = load_dataset(cfg, ctx.seed);
        reference = std::move(ds.images);
    } else {
        reference = read_qimg(ref);
    }
    if (cfg.get_bool_or("run", "eval_normalize", true))
        for (auto& img : samples) img = rescale_minmax(std::move(img));

    const std::size_t pairs = std::min(samples.size(), reference.size());
    double ssim_sum = 0.0, psnr_sum = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        ssim_sum += ssim(samples[i], reference[i]);
        psnr_sum += psnr(samples[i], reference[i]);
    }
    const int feature_dim = cfg.get_int_or("run", "feature_dim", 16);
    const double fid = frechet_distance(samples, reference, feature_dim);

    std::ostringstream csv;
    csv << "run_id,tau,metric,value\n";
    csv << run_id << "," << tau << ",ssim_mean," << detail::format_double(ssim_sum / double(pairs)) << "\n";
    csv << run_id << "," << tau << ",psnr_mean," << detail::format_double(psnr_sum / double(pairs)) << "\n";
    csv << run_id << "," << tau << ",fid_proxy," << detail::format_double(fid) << "\n";
    std::ofstream f(ctx.out_dir / "metrics.csv", std::ios::binary);
    f << csv.str();
    log << csv.str();
    return {"metrics.csv"};
}

inline std::vector<std::uint8_t> known_mask_from_name(const std::string& name, int h, int w) {
    std::vector<std::uint8_t> mask(std::size_t(h) * std::size_t(w), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool known = false;
            if (name == "bottom-half") known = y >= h / 2;
            else if (name == "top-half") known = y < h / 2;
            else if (name == "left-half") known = x < w / 2;
            else if (name == "right-half") known = x >= w / 2;
            else throw std::invalid_argument("config: run.mask must be one of bottom-half, top-half, left-half, right-half");
            mask[std::size_t(y) * std::size_t(w) + std::size_t(x)] = known ? 1 : 0;
        }
    return mask;
}

inline std::vector<std::string> cmd_inpaint(RunContext& ctx, std::ostream& log) {
    const Config& cfg = ctx.cfg;
    BuiltModel model = build_model(cfg);
    if (model.uss) throw std::invalid_argument("inpaint requires an iterative model (qdense or qunet)");
    const DiffusionSchedule schedule = schedule_from_config(cfg);
    const Dataset ds = load_dataset(cfg, ctx.seed);
    const bool reset = cfg.get_bool_or("run", "reset_each_step", true);
    const int count = std::min<int>(cfg.get_int_or("run", "inpaint_count", 50), int(ds.images.size()));
    ParamStore params = checkpoint_params(cfg, model.param_count());
    ctx.params_hash = params_content_hash(params.values);
    Rng rng(ctx.seed);

    const int h = ds.images[0].height, w = ds.images[0].width;
    const auto mask = known_mask_from_name(cfg.get_or("run", "mask", "bottom-half"), h, w);
    std::ostringstream csv;
    csv << "image,unknown_mse,baseline_mse\n";
    std::vector<std::string> artifacts;
    int below_baseline = 0;
    for (int i = 0; i < count; ++i) {
        const ImageTensor& original = ds.images[std::size_t(i)];
        const std::optional<int> label =
            model.guided() ? std::optional<int>(ds.labels[std::size_t(i)]) : std::nullopt;
        InpaintResult r;
        if (model.qdense)
            r = inpaint(*model.qdense, params.values, original, mask, schedule, reset, label, rng);
        else
            r = inpaint(*model.qunet, params.values, original, mask, schedule, reset, label, rng);
        // Baseline: fresh clipped noise in the unknown region.
        double base = 0.0;
        std::size_t unknown = 0;
        for (std::size_t p = 0; p < mask.size(); ++p) {
            if (mask[p]) continue;
            const double noise =
                std::clamp(normal(rng), original.value_range[0], original.value_range[1]);
            const double d = noise - original.values[p];
            base += d * d;
            ++unknown;
        }
        base /= double(unknown);
        if (r.unknown_mse < base) ++below_baseline;
        csv << i << "," << detail::format_double(r.unknown_mse) << "," << detail::format_double(base)
            << "\n";
        if (i < 8) {
            ImageTensor masked = original;
            for (std::size_t p = 0; p < mask.size(); ++p)
                if (!mask[p]) masked.values[p] = 0.0;
            const std::string name = detail::index_name("inpaint_", i, ".png");
            write_strip_png((ctx.out_dir / name).string(), {original, masked, r.image},
                            cfg.get_int_or("run", "scale", 8));
            artifacts.push_back(name);
        }
    }
    std::ofstream f(ctx.out_dir / "inpaint.csv", std::ios::binary);
    f << csv.str();
    artifacts.push_back("inpaint.csv");
    log << below_baseline << "/" << count << " images beat the fresh-noise baseline\n";
    return artifacts;
}

// ---------------------------------------------------------------------------
// Dispatch, manifest emission, replay

inline Config resolve_config(const RunOptions& opts) {
    Config cfg;
    if (!opts.preset.empty() && !opts.config_path.empty())
        throw std::invalid_argument("pass either --preset or --config, not both");
    if (!opts.preset.empty()) {
        cfg = load_preset(opts.preset);
    } else if (!opts.config_path.empty()) {
        std::ifstream f(opts.config_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open config: " + opts.config_path);
        std::ostringstream os;
        os << f.rdbuf();
        cfg = parse_config(os.str());
        cfg.sections.erase("manifest");
        cfg.sections.erase("artifacts");
        validate_config(cfg);
    } else {
        throw std::invalid_argument("missing --preset or --config");
    }
    if (opts.tau) {
        cfg.set("schedule", "tau", std::to_string(*opts.tau));
    }
    return cfg;
}

inline int execute(const std::string& command, Config cfg, const fs::path& out_dir,
                   std::uint64_t seed, std::ostream& log) {
    validate_config(cfg);
    fs::create_directories(out_dir);
    cfg.set("run", "seed", std::to_string(seed));
    RunContext ctx{std::move(cfg), out_dir, seed, ""};
    std::vector<std::string> artifacts;
    if (command == "train") artifacts = cmd_train(ctx, log);
    else if (command == "sample") artifacts = cmd_sample(ctx, log);
    else if (command == "compose") artifacts = cmd_compose(ctx, log);
    else if (command == "eval") artifacts = cmd_eval(ctx, log);
    else if (command == "inpaint") artifacts = cmd_inpaint(ctx, log);
    else throw std::invalid_argument("unknown command: " + command);

    Manifest m;
    m.config = ctx.cfg;
    m.command = command;
    m.seed = seed;
    m.params_hash = ctx.params_hash;
    for (const std::string& name : artifacts)
        m.artifacts.emplace_back(name, sha1_of_file((out_dir / name).string()));
    write_manifest((out_dir / "manifest.qdd").string(), m);
    log << "manifest: " << (out_dir / "manifest.qdd").string() << "\n";
    return 0;
}

/// Re-runs a manifest into out_dir and verifies artifact hashes; returns 0
/// only if every artifact matches byte for byte.
inline int replay_manifest(const std::string& manifest_path, const fs::path& out_dir,
                           std::ostream& log) {
    const Manifest m = read_manifest(manifest_path);
    execute(m.command, m.config, out_dir, m.seed, log);
    int mismatches = 0;
    for (const auto& [name, want] : m.artifacts) {
        const std::string got = sha1_of_file((out_dir / name).string());
        const bool ok = got == want;
        log << (ok ? "match    " : "MISMATCH ") << name << "\n";
        if (!ok) ++mismatches;
    }
    return mismatches == 0 ? 0 : 1;
}

inline int run_command(const RunOptions& opts, std::ostream& log = std::cout) {
    if (opts.command == "replay") {
        if (opts.manifest_path.empty()) throw std::invalid_argument("replay requires a manifest path");
        fs::path out = opts.out_dir.empty()
                           ? fs::path(opts.manifest_path).parent_path() / "replay"
                           : fs::path(opts.out_dir);
        return replay_manifest(opts.manifest_path, out, log);
    }
    if (opts.out_dir.empty()) throw std::invalid_argument("missing --out-dir");
    Config cfg = resolve_config(opts);
    const std::uint64_t seed =
        opts.seed ? *opts.seed : std::uint64_t(cfg.get_int_or("run", "seed", 1));
    return execute(opts.command, std::move(cfg), fs::path(opts.out_dir), seed, log);
}

}  // namespace qdd
