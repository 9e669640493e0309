#pragma once

#include <algorithm>
#include <numeric>
#include <random>

#include "drymask/dataset.hpp"
#include "drymask/loss.hpp"
#include "drymask/unet.hpp"

namespace drymask {

struct TrainConfig {
    int batch_size = 8;
    double learning_rate = 1e-4;
    int epochs = 125;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 42;

    void validate() const {
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (!(learning_rate > 0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (!(adam_beta1 > 0 && adam_beta1 < 1 && adam_beta2 > 0 && adam_beta2 < 1))
            throw std::invalid_argument("TrainConfig: betas must lie in (0, 1)");
    }
};

// Per-pair tensors precomputed once per training run.
template <class T>
struct TrainingExample {
    SpectrogramT<T> reverb_spec;
    Grid<T> reverb_mag;
    Grid<T> target_mask;
    AudioBufferT<T> clean;
};

template <class T>
TrainingExample<T> make_example(const TrainingPairT<T>& pair, const StftConfigT<T>& stft_cfg,
                                const MaskConfigT<T>& mask_cfg = {}) {
    TrainingExample<T> ex;
    ex.reverb_spec = stft(pair.reverberant, stft_cfg);
    ex.reverb_mag = magnitude(ex.reverb_spec);
    const Grid<T> clean_mag = magnitude(stft(pair.clean, stft_cfg));
    ex.target_mask = oracle_mask(ex.reverb_mag, clean_mag, mask_cfg);
    ex.clean = pair.clean;
    return ex;
}

template <class T>
struct BackwardResult {
    LossReport report;
    UNetWeights<T> grads;
};

// Forward pass with cached activations, hybrid loss, and exact reverse-mode
// gradients of the scalar total w.r.t. every parameter tensor.
template <class T>
BackwardResult<T> backward(const UNetWeights<T>& weights, const TrainingExample<T>& ex,
                           const LossConfig& loss_cfg, int epoch) {
    UNetCache<T> cache;
    const Grid<T> predicted = unet_forward(weights, ex.reverb_mag, &cache, /*check_finite=*/true);

    BackwardResult<T> result;
    result.report = hybrid_loss(ex.target_mask, predicted, ex.reverb_spec, ex.clean, loss_cfg, epoch);
    if (!std::isfinite(result.report.total))
        throw NumericError("non-finite values in layer loss");
    const Grid<T> gmask =
        hybrid_loss_grad(ex.target_mask, predicted, ex.reverb_spec, ex.clean, loss_cfg, epoch);
    result.grads = unet_backward(weights, cache, gmask);
    return result;
}

template <class T>
struct OptimizerState {
    UNetWeights<T> m;  // first moments
    UNetWeights<T> v;  // second moments
    long step = 0;

    static OptimizerState zeros_like(const UNetWeights<T>& w) {
        return {zero_like(w), zero_like(w), 0};
    }
};

// Bias-corrected Adam update, in place.
template <class T>
void adam_step(UNetWeights<T>& weights, const UNetWeights<T>& grads, OptimizerState<T>& state,
               const TrainConfig& cfg) {
    cfg.validate();
    state.step += 1;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    auto wp = weights.params();
    auto gp = grads.params();
    auto mp = state.m.params();
    auto vp = state.v.params();
    for (std::size_t i = 0; i < wp.size(); ++i) {
        Tensor<T>& w = *wp[i].tensor;
        const Tensor<T>& g = *gp[i].tensor;
        Tensor<T>& m = *mp[i].tensor;
        Tensor<T>& v = *vp[i].tensor;
        if (!w.same_shape(g) || !w.same_shape(m) || !w.same_shape(v))
            throw std::invalid_argument("adam_step: shape mismatch for " + wp[i].name);
        for (std::size_t k = 0; k < w.data.size(); ++k) {
            const double gk = static_cast<double>(g.data[k]);
            const double mk = b1 * static_cast<double>(m.data[k]) + (1.0 - b1) * gk;
            const double vk = b2 * static_cast<double>(v.data[k]) + (1.0 - b2) * gk * gk;
            m.data[k] = static_cast<T>(mk);
            v.data[k] = static_cast<T>(vk);
            const double mhat = mk / bc1;
            const double vhat = vk / bc2;
            w.data[k] = static_cast<T>(static_cast<double>(w.data[k]) -
                                       cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps));
        }
    }
}

struct EpochLog {
    int epoch = 0;
    double bce = 0.0;
    double mag = 0.0;
    double td = 0.0;
    double total = 0.0;
    double val_total = 0.0;
    double lambda = 0.0;

    std::string to_line() const {
        char buf[224];
        std::snprintf(buf, sizeof(buf), "%d %.6g %.6g %.6g %.6g %.6g %.6g", epoch, bce, mag, td,
                      total, val_total, lambda);
        return buf;
    }
};

template <class T>
struct TrainResult {
    UNetWeights<T> best_weights;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val = 0.0;
};

// Epoch loop: seeded 90/10 train/validation split, shuffled mini-batches,
// per-batch Adam updates on gradients accumulated in double, and best-epoch
// checkpoint retention by validation loss.
template <class T>
TrainResult<T> train(const std::vector<TrainingPairT<T>>& dataset, const TrainConfig& cfg,
                     const LossConfig& loss_cfg, const StftConfigT<T>& stft_cfg,
                     const UNetConfig& unet_cfg) {
    cfg.validate();
    loss_cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

    std::vector<TrainingExample<T>> examples;
    examples.reserve(dataset.size());
    for (const auto& pair : dataset) examples.push_back(make_example(pair, stft_cfg));
    for (const auto& ex : examples)
        if (ex.reverb_mag.rows != unet_cfg.freq_bins)
            throw std::invalid_argument("train: stft rows do not match network freq_bins");

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n = examples.size();
    const std::size_t val_count = n >= 2 ? std::max<std::size_t>(1, n / 10) : 0;
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + val_count);
    std::vector<std::size_t> train_idx(order.begin() + val_count, order.end());

    UNetWeights<T> weights = init_weights<T>(unet_cfg, cfg.seed);
    OptimizerState<T> opt = OptimizerState<T>::zeros_like(weights);

    TrainResult<T> result;
    result.best_val = std::numeric_limits<double>::infinity();

    UNetWeights<double> batch_grads;  // double accumulation, fixed summation order
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);

        EpochLog log;
        log.epoch = epoch;
        log.lambda = loss_cfg.td_weight_schedule(epoch);
        std::size_t seen = 0;

        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch_grads = zero_like(weights.template cast<double>());
            auto acc_params = batch_grads.params();

            for (std::size_t k = start; k < stop; ++k) {
                BackwardResult<T> br = backward(weights, examples[train_idx[k]], loss_cfg, epoch);
                log.bce += br.report.bce;
                log.mag += br.report.weighted_mag;
                log.td += br.report.time_domain;
                log.total += br.report.total;
                ++seen;
                auto gp = br.grads.params();
                for (std::size_t i = 0; i < gp.size(); ++i) {
                    const auto& src = gp[i].tensor->data;
                    auto& dst = acc_params[i].tensor->data;
                    for (std::size_t j = 0; j < src.size(); ++j)
                        dst[j] += static_cast<double>(src[j]);
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto& np : acc_params)
                for (double& x : np.tensor->data) x *= inv;
            const UNetWeights<T> mean_grads = batch_grads.template cast<T>();
            adam_step(weights, mean_grads, opt, cfg);
        }

        if (seen > 0) {
            log.bce /= static_cast<double>(seen);
            log.mag /= static_cast<double>(seen);
            log.td /= static_cast<double>(seen);
            log.total /= static_cast<double>(seen);
        }

        if (!val_idx.empty()) {
            double val = 0.0;
            for (std::size_t k : val_idx) {
                const TrainingExample<T>& ex = examples[k];
                const Grid<T> predicted = unet_forward(weights, ex.reverb_mag);
                val += hybrid_loss(ex.target_mask, predicted, ex.reverb_spec, ex.clean, loss_cfg,
                                   epoch)
                           .total;
            }
            log.val_total = val / static_cast<double>(val_idx.size());
        } else {
            log.val_total = log.total;
        }

        if (log.val_total < result.best_val) {
            result.best_val = log.val_total;
            result.best_epoch = epoch;
            result.best_weights = weights;
        }
        result.log.push_back(log);
    }
    return result;
}

}  // namespace drymask
