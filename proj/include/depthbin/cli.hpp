#pragma once

// Command-line surface: degrade / refine / eval / gradcheck / errmap.
// Exit codes: 0 success, 1 validation error, 2 I/O error. Every stochastic
// path takes --seed (or the config seed) and defaults to 0, so identical
// invocations are byte-identical in all outputs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "depthbin/binning.hpp"
#include "depthbin/degrade.hpp"
#include "depthbin/gradcheck.hpp"
#include "depthbin/io.hpp"
#include "depthbin/losses.hpp"
#include "depthbin/model_io.hpp"
#include "depthbin/refine.hpp"
#include "json.hpp"

namespace depthbin {

struct RunConfig {
    HyperParams hyper;
    DegradeSpec degrade;
    std::string provider = "small-encoder";  // or "external-file"
    int encoder_channels = 16;
    int smooth_k = 3;
    std::string weights_path;   // empty: derive per-stage weights from the seed
    std::string features_path;  // tensor container for the external-file provider
};

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad config JSON: " + std::string(e.what()));
    }
    RunConfig cfg;
    cfg.hyper.n_bins = j.value("n_bins", cfg.hyper.n_bins);
    cfg.hyper.n_stages = j.value("n_stages", cfg.hyper.n_stages);
    cfg.hyper.gamma = j.value("gamma", cfg.hyper.gamma);
    cfg.hyper.neighborhood_k = j.value("neighborhood_k", cfg.hyper.neighborhood_k);
    cfg.hyper.alpha = j.value("alpha", cfg.hyper.alpha);
    cfg.hyper.hidden_channels = j.value("hidden_channels", cfg.hyper.hidden_channels);
    cfg.hyper.seed = j.value("seed", cfg.hyper.seed);
    cfg.provider = j.value("provider", cfg.provider);
    cfg.encoder_channels = j.value("encoder_channels", cfg.encoder_channels);
    cfg.smooth_k = j.value("smooth_k", cfg.smooth_k);
    cfg.weights_path = j.value("weights", cfg.weights_path);
    cfg.features_path = j.value("features", cfg.features_path);
    require_valid(check_hyper_params(cfg.hyper));
    if (cfg.provider != "small-encoder" && cfg.provider != "external-file")
        throw ValidationFailure(ValidationError::bad_hyper_params, "unknown provider: " + cfg.provider);
    if (cfg.provider == "external-file" && cfg.features_path.empty())
        throw ValidationFailure(ValidationError::bad_hyper_params,
                                "external-file provider requires a features path");
    return cfg;
}

namespace cli_detail {

inline int run_degrade(const std::string& in_path, const std::string& out_path, const DegradeSpec& spec) {
    const DepthMap gt = read_depth(in_path);
    write_depth(make_lr(gt, spec), out_path);
    return 0;
}

inline Grid<double> probability_entropy(const ProbabilityVolume& probs) {
    Grid<double> entropy(probs.height(), probs.width(), 0.0);
    for (int y = 0; y < probs.height(); ++y) {
        for (int x = 0; x < probs.width(); ++x) {
            double h = 0.0;
            for (int n = 0; n < probs.n_bins(); ++n) {
                const double p = probs.prob(n, y, x);
                if (p > 0.0) h -= p * std::log(p);
            }
            entropy.at(y, x) = std::max(0.0, h);
        }
    }
    return entropy;
}

inline int run_refine(const std::string& lr_path, const std::string& color_path,
                      const std::string& config_path, const std::string& out_path,
                      const std::string& trace_dir) {
    const RunConfig cfg = load_run_config(config_path);
    const DepthMap lr = read_depth(lr_path);
    const FeatureMap color = read_ppm_color(color_path);

    std::unique_ptr<FeatureProvider> fp;
    int context_channels = 0;
    int layer_channels = 0;
    if (cfg.provider == "small-encoder") {
        fp = std::make_unique<SmallEncoderProvider>(cfg.hyper.seed, cfg.encoder_channels);
        context_channels = cfg.encoder_channels;
        layer_channels = cfg.encoder_channels;
    } else {
        auto external = std::make_unique<ExternalFileProvider>(cfg.features_path);
        context_channels = external->context_channels();
        layer_channels = external->layer_channels();
        fp = std::move(external);
    }
    const ResidualDegradationProvider dp(cfg.smooth_k);

    std::vector<ProbHeadWeights> weights;
    if (!cfg.weights_path.empty()) {
        weights = load_stage_weights(cfg.weights_path, cfg.hyper.n_stages);
    } else {
        for (int i = 0; i < cfg.hyper.n_stages; ++i)
            weights.push_back(make_prob_head_weights(cfg.hyper.n_bins, context_channels,
                                                     context_channels + layer_channels,
                                                     cfg.hyper.hidden_channels,
                                                     cfg.hyper.seed + static_cast<std::uint64_t>(i)));
    }

    const RefineResult result = refine_multistage(color, lr, *fp, dp, weights, cfg.hyper);
    write_depth(result.depth, out_path);

    if (!trace_dir.empty()) {
        std::filesystem::create_directories(trace_dir);
        for (std::size_t i = 0; i < result.trace.per_stage_depths.size(); ++i) {
            const std::string stem = trace_dir + "/stage" + std::to_string(i + 1);
            write_raw_depth(result.trace.per_stage_depths[i], stem + "_depth.raw");
            write_raw_depth(DepthMap(probability_entropy(result.trace.per_stage_probs[i])),
                            stem + "_entropy.raw");
        }
    }
    return 0;
}

inline int run_eval(const std::string& pred_path, const std::string& gt_path, bool json,
                    std::ostream& out) {
    const DepthMap pred = read_depth(pred_path);
    const DepthMap gt = read_depth(gt_path);
    if (!pred.same_shape(gt))
        throw ValidationFailure(ValidationError::shape_mismatch,
                                "prediction is " + std::to_string(pred.height()) + "x" +
                                    std::to_string(pred.width()) + ", GT is " +
                                    std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
    const MetricReport report = metrics(pred, gt);
    if (json) {
        out << to_json_line(report) << "\n";
    } else {
        out.precision(6);
        out << "rmse(cm):   " << report.rmse << "\n"
            << "mae(cm):    " << report.mae << "\n"
            << "delta1(%):  " << report.delta[0] << "\n"
            << "delta2(%):  " << report.delta[1] << "\n"
            << "delta3(%):  " << report.delta[2] << "\n"
            << "valid:      " << report.valid_pixels << "\n";
    }
    return 0;
}

inline int run_gradcheck(int trials, double step, std::uint64_t seed, double tolerance,
                         std::ostream& out) {
    if (trials < 1) throw ValidationFailure(ValidationError::bad_hyper_params, "trials must be >= 1");
    constexpr int kBins = 8;
    constexpr int kSide = 4;
    Rng rng(seed);
    GradReport aggregate;
    aggregate.step = step;
    for (int trial = 0; trial < trials; ++trial) {
        const double lo = rng.next_uniform(0.0, 5.0);
        const double hi = lo + rng.next_uniform(1.0, 10.0);
        const BinPartition partition =
            partition_uniform(Grid<double>(kSide, kSide, lo), Grid<double>(kSide, kSide, hi), kBins);
        const CandidateVolume centers = bin_centers(partition);

        Volume<double> logits(kBins, kSide, kSide);
        for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = rng.next_uniform(-2.0, 2.0);
        const FeatureMap logit_map{Volume<double>(logits)};

        // Construct GT away from the L1 kink: |X - Z| >= 5e-3 per pixel.
        const ProbabilityVolume probs = softmax_bins(logit_map);
        const DepthMap combined = combine(centers, probs);
        Grid<double> gt_values(kSide, kSide);
        for (int y = 0; y < kSide; ++y) {
            for (int x = 0; x < kSide; ++x) {
                const double delta = 0.005 + 0.2 * rng.next_uniform();
                const bool add = rng.next_u64() & 1;
                const double v = combined.value(y, x);
                gt_values.at(y, x) = (add || v < delta) ? v + delta : v - delta;
            }
        }
        const DepthMap gt(std::move(gt_values));

        const FeatureMap analytic = grad_combine_l1(logit_map, centers, gt);
        const std::vector<double> params(logits.data(), logits.data() + logits.size());
        const std::vector<double> grad(analytic.values().data(),
                                       analytic.values().data() + analytic.values().size());
        const auto f = [&](const std::vector<double>& p) {
            return combine_l1_loss(FeatureMap(Volume<double>(kBins, kSide, kSide, p)), centers, gt);
        };
        const GradReport report = finite_diff_check(f, params, grad, step);
        aggregate.max_rel_error = std::max(aggregate.max_rel_error, report.max_rel_error);
        aggregate.max_abs_error = std::max(aggregate.max_abs_error, report.max_abs_error);
        aggregate.n_params_checked += report.n_params_checked;
    }
    out << to_json_line(aggregate) << "\n";
    return aggregate.max_rel_error <= tolerance ? 0 : 1;
}

inline int run_errmap(const std::string& pred_path, const std::string& gt_path,
                      const std::string& out_path) {
    write_error_heatmap(read_depth(pred_path), read_depth(gt_path), out_path);
    return 0;
}

}  // namespace cli_detail

/// Runs the CLI on pre-split arguments (excluding the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"Degradation-aware binning depth super-resolution toolkit"};
    app.require_subcommand(1);

    // degrade
    auto* degrade_cmd = app.add_subcommand("degrade", "Synthesize an LR depth map from GT");
    std::string degrade_in, degrade_out;
    DegradeSpec spec;
    spec.scale = 4.0;
    degrade_cmd->add_option("--in", degrade_in, "GT depth (pgm/pfm/raw)")->required();
    degrade_cmd->add_option("--out", degrade_out, "output LR depth")->required();
    degrade_cmd->add_option("--scale", spec.scale, "downscale factor (> 0, non-integer allowed)")
        ->required();
    degrade_cmd->add_option("--blur-sigma", spec.blur_sigma, "Gaussian blur sigma (0 = off)");
    degrade_cmd->add_option("--noise-sigma", spec.noise_sigma, "Gaussian noise sigma (0 = off)");
    degrade_cmd->add_option("--noise-mean", spec.noise_mean, "Gaussian noise mean");
    degrade_cmd->add_option("--seed", spec.seed, "noise seed");

    // refine
    auto* refine_cmd = app.add_subcommand("refine", "Multi-stage depth refinement");
    std::string refine_lr, refine_color, refine_cfg, refine_out, refine_trace;
    refine_cmd->add_option("--lr", refine_lr, "LR depth input")->required();
    refine_cmd->add_option("--color", refine_color, "HR color guide (ppm)")->required();
    refine_cmd->add_option("--config", refine_cfg, "run configuration (json)")->required();
    refine_cmd->add_option("--out", refine_out, "output depth")->required();
    refine_cmd->add_option("--trace", refine_trace, "directory for per-stage diagnostics");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a prediction against GT");
    std::string eval_pred, eval_gt;
    bool eval_json = false;
    eval_cmd->add_option("--pred", eval_pred, "predicted depth")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth depth")->required();
    eval_cmd->add_flag("--json", eval_json, "emit a single-line JSON record");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "Analytic-vs-numeric gradient verification");
    int grad_trials = 100;
    double grad_step = 1e-4;
    std::uint64_t grad_seed = 0;
    double grad_tol = 1e-5;
    grad_cmd->add_option("--trials", grad_trials, "number of random instances");
    grad_cmd->add_option("--step", grad_step, "central-difference step");
    grad_cmd->add_option("--seed", grad_seed, "instance seed");
    grad_cmd->add_option("--tol", grad_tol, "max relative error accepted");

    // errmap
    auto* errmap_cmd = app.add_subcommand("errmap", "Render an |pred - gt| heatmap");
    std::string errmap_pred, errmap_gt, errmap_out;
    errmap_cmd->add_option("--pred", errmap_pred, "predicted depth")->required();
    errmap_cmd->add_option("--gt", errmap_gt, "ground-truth depth")->required();
    errmap_cmd->add_option("--out", errmap_out, "output heatmap (ppm)")->required();

    try {
        // CLI11 parses argv-style vectors in reverse order.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "argument error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (degrade_cmd->parsed()) return cli_detail::run_degrade(degrade_in, degrade_out, spec);
        if (refine_cmd->parsed())
            return cli_detail::run_refine(refine_lr, refine_color, refine_cfg, refine_out, refine_trace);
        if (eval_cmd->parsed()) return cli_detail::run_eval(eval_pred, eval_gt, eval_json, out);
        if (grad_cmd->parsed())
            return cli_detail::run_gradcheck(grad_trials, grad_step, grad_seed, grad_tol, out);
        if (errmap_cmd->parsed()) return cli_detail::run_errmap(errmap_pred, errmap_gt, errmap_out);
    } catch (const ValidationFailure& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace depthbin
