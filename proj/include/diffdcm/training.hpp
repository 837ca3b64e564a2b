#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "diffdcm/adam.hpp"
#include "diffdcm/data.hpp"
#include "diffdcm/error.hpp"
#include "diffdcm/model.hpp"
#include "diffdcm/rng.hpp"

namespace diffdcm {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 50;
    double weight_decay = 0.0; // 1e-2 for synthetic runs, 0 for real-world
    bool simplify = false;
    std::uint64_t seed = 0;
    std::size_t nodes = 10; // 10 for synthetic runs, 24 for real-world

    void validate() const {
        if (!(learning_rate > 0.0)) throw invalid_input_error("TrainConfig: learning_rate <= 0");
        if (batch_size < 1) throw invalid_input_error("TrainConfig: batch_size < 1");
        if (weight_decay < 0.0) throw invalid_input_error("TrainConfig: weight_decay < 0");
        if (nodes < 1) throw invalid_input_error("TrainConfig: nodes < 1");
    }
};

struct TrainReport {
    std::vector<double> loss_history; // per-epoch mean training loss
    ModelParams final_params;
    double wall_clock_seconds = 0.0;
};

namespace detail {

inline void require_trainable(const Dataset& ds) {
    ds.validate();
    for (std::size_t i = 0; i < ds.num_samples(); ++i)
        for (std::size_t j = 0; j < ds.num_features(); ++j)
            if (!(ds.features(i, j) > 0.0))
                throw domain_error("train: feature '" + ds.feature_names[j] +
                                   "' has non-positive value at row " + std::to_string(i) +
                                   "; normalize the dataset first");
}

// One pass of shuffled mini-batch Adam over the dataset. freeze_w1 skips the
// first-layer update (used by the fine-tuning stage). Returns per-epoch mean
// losses.
inline std::vector<double> run_epochs(ModelParams& params, const Dataset& ds,
                                      const TrainConfig& cfg, std::size_t epochs, Rng& rng,
                                      bool freeze_w1) {
    const std::size_t N = ds.num_samples();
    const std::size_t B = std::min(cfg.batch_size, N);

    AdamState st_w1(params.w1.rows(), params.w1.cols());
    AdamState st_w2(params.w2.rows(), params.w2.cols());
    AdamState st_b2(params.b2.rows(), params.b2.cols());

    Matrix xbatch(B, ds.num_features());
    std::vector<std::size_t> ybatch(B);
    ForwardTrace trace;
    ParamGradients grads;
    BackwardScratch scratch;

    std::vector<double> history;
    history.reserve(epochs);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        const std::vector<std::size_t> perm = rng.permutation(N);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < N; start += B) {
            const std::size_t bs = std::min(B, N - start);
            if (xbatch.rows() != bs) xbatch = Matrix(bs, ds.num_features());
            ybatch.resize(bs);
            for (std::size_t r = 0; r < bs; ++r) {
                const std::size_t src = perm[start + r];
                for (std::size_t j = 0; j < ds.num_features(); ++j)
                    xbatch(r, j) = ds.features(src, j);
                ybatch[r] = static_cast<std::size_t>(ds.labels[src] - 1);
            }
            forward_into(params, xbatch, trace);
            const double batch_loss = backward_params_into(params, trace, ybatch, grads, scratch);
            loss_sum += batch_loss * static_cast<double>(bs);
            if (!freeze_w1)
                adam_step(params.w1, grads.w1, st_w1, cfg.learning_rate, cfg.weight_decay);
            adam_step(params.w2, grads.w2, st_w2, cfg.learning_rate, cfg.weight_decay);
            adam_step(params.b2, grads.b2, st_b2, cfg.learning_rate, cfg.weight_decay);
        }
        const double epoch_loss = loss_sum / static_cast<double>(N);
        if (!std::isfinite(epoch_loss))
            throw numerical_error("train: non-finite loss at epoch " + std::to_string(epoch));
        history.push_back(epoch_loss);
    }
    return history;
}

} // namespace detail

// Rounds the exponent matrix to the nearest integers (ties away from zero),
// freezes it, and re-trains the second layer from scratch-initialised Adam
// moments for cfg.epochs more epochs. Shuffling restarts from a fresh
// generator seeded with cfg.seed, so the call is deterministic on its own.
inline ModelParams simplify_and_finetune(const ModelParams& trained, const Dataset& ds,
                                         const TrainConfig& cfg,
                                         std::vector<double>* loss_history = nullptr) {
    cfg.validate();
    detail::require_trainable(ds);
    ModelParams params = trained;
    for (double& w : params.w1.raw()) w = std::round(w);
    Rng rng(cfg.seed);
    std::vector<double> hist = detail::run_epochs(params, ds, cfg, cfg.epochs, rng, true);
    if (loss_history)
        loss_history->insert(loss_history->end(), hist.begin(), hist.end());
    return params;
}

// Mini-batch training from a seeded initialisation. The sample order is a
// fresh full permutation per epoch; the last batch of an epoch may be short.
inline TrainReport train(const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    detail::require_trainable(ds);
    const auto t0 = std::chrono::steady_clock::now();

    Rng rng(cfg.seed);
    TrainReport report;
    report.final_params = init_params(ds.num_features(), cfg.nodes, ds.num_alternatives(), rng,
                                      ds.feature_names, ds.alt_names);
    report.final_params.normalization = ds.normalization;
    report.loss_history =
        detail::run_epochs(report.final_params, ds, cfg, cfg.epochs, rng, false);
    if (cfg.simplify)
        report.final_params =
            simplify_and_finetune(report.final_params, ds, cfg, &report.loss_history);

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

inline void write_loss_history_csv(const std::vector<double>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << "epoch,mean_loss\n";
    char buf[32];
    for (std::size_t e = 0; e < history.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%.17g", history[e]);
        out << (e + 1) << ',' << buf << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

} // namespace diffdcm
