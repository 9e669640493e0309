#pragma once

#include <functional>

#include "drymask/mask.hpp"
#include "drymask/stft.hpp"

namespace drymask {

// Hybrid objective: binary cross-entropy on masks, Gaussian-frequency-weighted
// residual magnitude loss, and a time-domain MSE whose weight grows over
// training.
struct LossConfig {
    double gauss_center = 2000.0;  // Hz
    double gauss_sigma = 500.0;    // Hz
    double gauss_gain = 1.0;
    double bce_weight = 1.0;
    double mag_weight = 1.0;
    double clamp_eps = 1e-7;
    std::function<double(int)> td_weight_schedule;

    LossConfig() { td_weight_schedule = linear_td_schedule(1.0, 125); }

    // 0 at epoch 0, td_max at final_epoch, linear in between.
    static std::function<double(int)> linear_td_schedule(double td_max, int final_epoch) {
        const int last = final_epoch > 0 ? final_epoch : 1;
        return [td_max, last](int epoch) {
            int e = epoch < 0 ? 0 : (epoch > last ? last : epoch);
            return td_max * static_cast<double>(e) / static_cast<double>(last);
        };
    }

    void validate() const {
        if (bce_weight < 0 || mag_weight < 0)
            throw std::invalid_argument("LossConfig: weights must be >= 0");
        if (!(gauss_sigma > 0)) throw std::invalid_argument("LossConfig: gauss_sigma must be > 0");
        if (!(clamp_eps > 0 && clamp_eps < 0.5))
            throw std::invalid_argument("LossConfig: clamp_eps must lie in (0, 0.5)");
        if (!td_weight_schedule) throw std::invalid_argument("LossConfig: missing td schedule");
    }

    double freq_weight(double freq_hz) const {
        const double d = freq_hz - gauss_center;
        return 1.0 + gauss_gain * std::exp(-d * d / (2.0 * gauss_sigma * gauss_sigma));
    }
};

struct LossReport {
    double bce = 0.0;
    double weighted_mag = 0.0;
    double time_domain = 0.0;
    double lambda = 0.0;
    double total = 0.0;
    int epoch = 0;

    std::string to_line() const {
        char buf[192];
        std::snprintf(buf, sizeof(buf), "epoch %d bce %.6g mag %.6g td %.6g lambda %.6g total %.6g",
                      epoch, bce, weighted_mag, time_domain, lambda, total);
        return buf;
    }
};

// Center frequency of each STFT row in Hz.
template <class T>
std::vector<double> bin_frequencies(const StftConfigT<T>& cfg, int sample_rate) {
    std::vector<double> freqs(static_cast<std::size_t>(cfg.bins()));
    for (int f = 0; f < cfg.bins(); ++f)
        freqs[f] = static_cast<double>(f) * sample_rate / cfg.fft_size;
    return freqs;
}

// Mean over all bins of -[m log m^ + (1-m) log(1-m^)], prediction clamped to
// [clamp_eps, 1-clamp_eps] before the logarithms.
template <class T>
double bce_loss(const Grid<T>& target, const Grid<T>& predicted, double clamp_eps) {
    require_same_shape(target, predicted, "bce_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < target.v.size(); ++i) {
        const double m = static_cast<double>(target.v[i]);
        double p = static_cast<double>(predicted.v[i]);
        p = std::min(std::max(p, clamp_eps), 1.0 - clamp_eps);
        acc -= m * std::log(p) + (1.0 - m) * std::log(1.0 - p);
    }
    return acc / static_cast<double>(target.v.size());
}

template <class T>
Grid<T> bce_loss_grad(const Grid<T>& target, const Grid<T>& predicted, double clamp_eps) {
    require_same_shape(target, predicted, "bce_loss_grad");
    Grid<T> g(target.rows, target.cols);
    const double inv_n = 1.0 / static_cast<double>(target.v.size());
    for (std::size_t i = 0; i < target.v.size(); ++i) {
        const double m = static_cast<double>(target.v[i]);
        const double p = static_cast<double>(predicted.v[i]);
        if (p <= clamp_eps || p >= 1.0 - clamp_eps) continue;  // clamp is locally flat
        g.v[i] = static_cast<T>((-m / p + (1.0 - m) / (1.0 - p)) * inv_n);
    }
    return g;
}

// Mean over all bins of w(f) * (M * (1 - M^))^2 with a Gaussian bump around
// gauss_center. Penalizes under-suppression only, matching the residual-mask
// objective.
template <class T>
double weighted_mag_loss(const Grid<T>& target, const Grid<T>& predicted, const LossConfig& cfg,
                         const std::vector<double>& freqs) {
    require_same_shape(target, predicted, "weighted_mag_loss");
    if (freqs.size() != static_cast<std::size_t>(target.rows))
        throw std::invalid_argument("weighted_mag_loss: freqs length must equal rows");
    double acc = 0.0;
    for (int f = 0; f < target.rows; ++f) {
        const double w = cfg.freq_weight(freqs[static_cast<std::size_t>(f)]);
        for (int t = 0; t < target.cols; ++t) {
            const double r = static_cast<double>(target.at(f, t)) *
                             (1.0 - static_cast<double>(predicted.at(f, t)));
            acc += w * r * r;
        }
    }
    return acc / static_cast<double>(target.v.size());
}

template <class T>
Grid<T> weighted_mag_loss_grad(const Grid<T>& target, const Grid<T>& predicted,
                               const LossConfig& cfg, const std::vector<double>& freqs) {
    require_same_shape(target, predicted, "weighted_mag_loss_grad");
    Grid<T> g(target.rows, target.cols);
    const double inv_n = 1.0 / static_cast<double>(target.v.size());
    for (int f = 0; f < target.rows; ++f) {
        const double w = cfg.freq_weight(freqs[static_cast<std::size_t>(f)]);
        for (int t = 0; t < target.cols; ++t) {
            const double m = static_cast<double>(target.at(f, t));
            const double p = static_cast<double>(predicted.at(f, t));
            g.at(f, t) = static_cast<T>(-2.0 * w * m * m * (1.0 - p) * inv_n);
        }
    }
    return g;
}

namespace detail {

// Clean samples aligned (trimmed or zero-padded) to the ISTFT output length.
template <class T>
std::vector<T> align_clean(const AudioBufferT<T>& clean, std::size_t out_len, int fft_size) {
    const std::size_t diff = clean.size() > out_len ? clean.size() - out_len
                                                    : out_len - clean.size();
    if (diff > static_cast<std::size_t>(fft_size))
        throw std::invalid_argument("time_domain_loss: clean length mismatch after alignment");
    std::vector<T> c(out_len, static_cast<T>(0));
    std::copy_n(clean.samples.begin(), std::min(out_len, clean.size()), c.begin());
    return c;
}

}  // namespace detail

// MSE between the ISTFT of the masked spectrogram and the clean signal.
template <class T>
double time_domain_loss(const SpectrogramT<T>& reverb_spec, const Grid<T>& predicted_mask,
                        const AudioBufferT<T>& clean_audio) {
    const AudioBufferT<T> y = istft(apply_mask(reverb_spec, predicted_mask));
    const std::vector<T> c =
        detail::align_clean(clean_audio, y.size(), reverb_spec.config.fft_size);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = static_cast<double>(y.samples[i]) - static_cast<double>(c[i]);
        acc += d * d;
    }
    return y.size() ? acc / static_cast<double>(y.size()) : 0.0;
}

template <class T>
Grid<T> time_domain_loss_grad(const SpectrogramT<T>& reverb_spec, const Grid<T>& predicted_mask,
                              const AudioBufferT<T>& clean_audio) {
    const AudioBufferT<T> y = istft(apply_mask(reverb_spec, predicted_mask));
    const std::vector<T> c =
        detail::align_clean(clean_audio, y.size(), reverb_spec.config.fft_size);
    std::vector<T> gy(y.size());
    const double inv_n = y.size() ? 1.0 / static_cast<double>(y.size()) : 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        gy[i] = static_cast<T>(2.0 * inv_n *
                               (static_cast<double>(y.samples[i]) - static_cast<double>(c[i])));

    const Grid<std::complex<T>> gbins =
        istft_adjoint(gy, reverb_spec.config, reverb_spec.frames());

    // masked bin = (1 - M) * R, so d/dM = -(Re R * Re g + Im R * Im g)
    Grid<T> g(predicted_mask.rows, predicted_mask.cols);
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        const std::complex<T>& r = reverb_spec.bins.v[i];
        const std::complex<T>& gb = gbins.v[i];
        g.v[i] = -(r.real() * gb.real() + r.imag() * gb.imag());
    }
    return g;
}

template <class T>
LossReport hybrid_loss(const Grid<T>& target, const Grid<T>& predicted,
                       const SpectrogramT<T>& reverb_spec, const AudioBufferT<T>& clean_audio,
                       const LossConfig& cfg, int epoch) {
    cfg.validate();
    const std::vector<double> freqs = bin_frequencies(reverb_spec.config, reverb_spec.sample_rate);
    LossReport rep;
    rep.epoch = epoch;
    rep.lambda = cfg.td_weight_schedule(epoch);
    rep.bce = bce_loss(target, predicted, cfg.clamp_eps);
    rep.weighted_mag = weighted_mag_loss(target, predicted, cfg, freqs);
    rep.time_domain = time_domain_loss(reverb_spec, predicted, clean_audio);
    rep.total = cfg.bce_weight * rep.bce + cfg.mag_weight * rep.weighted_mag +
                rep.lambda * rep.time_domain;
    return rep;
}

// dTotal/dPredictedMask for the hybrid objective.
template <class T>
Grid<T> hybrid_loss_grad(const Grid<T>& target, const Grid<T>& predicted,
                         const SpectrogramT<T>& reverb_spec, const AudioBufferT<T>& clean_audio,
                         const LossConfig& cfg, int epoch) {
    cfg.validate();
    const std::vector<double> freqs = bin_frequencies(reverb_spec.config, reverb_spec.sample_rate);
    const double lambda = cfg.td_weight_schedule(epoch);

    Grid<T> g = bce_loss_grad(target, predicted, cfg.clamp_eps);
    const Grid<T> gm = weighted_mag_loss_grad(target, predicted, cfg, freqs);
    for (std::size_t i = 0; i < g.v.size(); ++i)
        g.v[i] = static_cast<T>(cfg.bce_weight * g.v[i] + cfg.mag_weight * gm.v[i]);
    if (lambda != 0.0) {
        const Grid<T> gt = time_domain_loss_grad(reverb_spec, predicted, clean_audio);
        for (std::size_t i = 0; i < g.v.size(); ++i)
            g.v[i] += static_cast<T>(lambda * gt.v[i]);
    }
    return g;
}

}  // namespace drymask
