#pragma once

#include <limits>
#include <vector>

#include "drymask/audio.hpp"
#include "drymask/rir.hpp"
#include "drymask/stft.hpp"

namespace drymask {

struct SrmrConfig {
    int acoustic_bands = 23;
    double band_lo = 125.0;        // Hz
    double band_hi = 7500.0;       // Hz
    int modulation_bands = 8;
    double mod_lo = 4.0;           // Hz
    double mod_hi = 128.0;         // Hz
    double envelope_lowpass = 128.0;

    void validate(int sample_rate) const {
        if (acoustic_bands < 1 || modulation_bands < 2)
            throw std::invalid_argument("SrmrConfig: band counts too small");
        const double nyq = sample_rate / 2.0;
        if (!(band_lo > 0 && band_lo < band_hi && band_hi < nyq))
            throw std::invalid_argument("SrmrConfig: acoustic band range out of (0, nyquist)");
        if (!(mod_lo > 0 && mod_lo < mod_hi && mod_hi < nyq))
            throw std::invalid_argument("SrmrConfig: modulation band range out of (0, nyquist)");
        if (!(envelope_lowpass > 0 && envelope_lowpass < nyq))
            throw std::invalid_argument("SrmrConfig: envelope_lowpass out of range");
    }
};

namespace detail {

// One biquad section, transposed direct form II, double state.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

    static Biquad bandpass(double f0, double q, double fs) {
        const double w0 = 2.0 * kPi * f0 / fs;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double a0 = 1.0 + alpha;
        Biquad b;
        b.b0 = alpha / a0;
        b.b1 = 0.0;
        b.b2 = -alpha / a0;
        b.a1 = -2.0 * std::cos(w0) / a0;
        b.a2 = (1.0 - alpha) / a0;
        return b;
    }

    static Biquad lowpass(double f0, double q, double fs) {
        const double w0 = 2.0 * kPi * f0 / fs;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double c = std::cos(w0);
        const double a0 = 1.0 + alpha;
        Biquad b;
        b.b0 = (1.0 - c) / 2.0 / a0;
        b.b1 = (1.0 - c) / a0;
        b.b2 = (1.0 - c) / 2.0 / a0;
        b.a1 = -2.0 * c / a0;
        b.a2 = (1.0 - alpha) / a0;
        return b;
    }

    void apply(std::vector<double>& x) const {
        double s1 = 0.0, s2 = 0.0;
        for (double& v : x) {
            const double y = b0 * v + s1;
            s1 = b1 * v - a1 * y + s2;
            s2 = b2 * v - a2 * y;
            v = y;
        }
    }
};

// Log-spaced center frequencies.
inline std::vector<double> log_centers(double lo, double hi, int count) {
    std::vector<double> centers(static_cast<std::size_t>(count));
    if (count == 1) {
        centers[0] = std::sqrt(lo * hi);
        return centers;
    }
    const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
    double f = lo;
    for (int i = 0; i < count; ++i, f *= ratio) centers[static_cast<std::size_t>(i)] = f;
    return centers;
}

// Q matched to the log spacing so adjacent bands tile.
inline double spacing_q(double lo, double hi, int count) {
    if (count < 2) return 2.0;
    const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
    const double bw = std::sqrt(ratio) - 1.0 / std::sqrt(ratio);
    return 1.0 / bw;
}

}  // namespace detail

// Speech-to-reverberation modulation energy ratio. The signal is split into
// log-spaced 4th-order band-pass channels, each channel's rectified envelope
// is low-passed and analyzed by a bank of modulation-rate band-pass filters;
// the result is the energy in the lowest 4 modulation bands over the energy
// in the remaining higher ones. Absolute values depend on this filterbank;
// comparisons between signals are what the metric is used for here.
template <class T>
double srmr(const AudioBufferT<T>& audio, const SrmrConfig& cfg = {}) {
    cfg.validate(audio.sample_rate);
    const double fs = audio.sample_rate;
    if (audio.duration_s() < 0.5)
        throw std::invalid_argument("srmr: need at least 0.5 s of audio");
    if (!all_finite(audio.samples)) throw std::invalid_argument("srmr: non-finite samples");

    const std::vector<double> centers =
        detail::log_centers(cfg.band_lo, cfg.band_hi, cfg.acoustic_bands);
    const double q_ac = detail::spacing_q(cfg.band_lo, cfg.band_hi, cfg.acoustic_bands);
    const std::vector<double> mod_centers =
        detail::log_centers(cfg.mod_lo, cfg.mod_hi, cfg.modulation_bands);
    const double q_mod = detail::spacing_q(cfg.mod_lo, cfg.mod_hi, cfg.modulation_bands);
    const detail::Biquad env_lp = detail::Biquad::lowpass(cfg.envelope_lowpass, 0.70710678, fs);

    std::vector<double> mod_energy(static_cast<std::size_t>(cfg.modulation_bands), 0.0);
    std::vector<double> band(audio.size()), envelope(audio.size()), mod(audio.size());

    for (double fc : centers) {
        for (std::size_t i = 0; i < audio.size(); ++i)
            band[i] = static_cast<double>(audio.samples[i]);
        const detail::Biquad bp = detail::Biquad::bandpass(fc, q_ac, fs);
        bp.apply(band);
        bp.apply(band);  // cascade to 4th order

        for (std::size_t i = 0; i < band.size(); ++i) envelope[i] = std::abs(band[i]);
        env_lp.apply(envelope);

        for (int m = 0; m < cfg.modulation_bands; ++m) {
            mod = envelope;
            const detail::Biquad mb =
                detail::Biquad::bandpass(mod_centers[static_cast<std::size_t>(m)], q_mod, fs);
            mb.apply(mod);
            double e = 0.0;
            for (double v : mod) e += v * v;
            mod_energy[static_cast<std::size_t>(m)] += e;
        }
    }

    const int split = std::min(4, cfg.modulation_bands - 1);
    double low = 0.0, high = 0.0;
    for (int m = 0; m < cfg.modulation_bands; ++m)
        (m < split ? low : high) += mod_energy[static_cast<std::size_t>(m)];
    if (high <= 0.0) return std::numeric_limits<double>::infinity();
    return low / high;
}

// Direct-to-reverberant ratio of an impulse response in dB: energy within
// +/- direct_window_ms of the direct-path peak over the energy of everything
// after the window. All-late-silence returns +infinity.
template <class T>
double drr(const RoomImpulseResponseT<T>& rir, double direct_window_ms = 2.5) {
    const std::size_t peak = rir.direct_path_index();
    const auto win = static_cast<std::size_t>(
        std::llround(direct_window_ms * 1e-3 * rir.sample_rate));
    const std::size_t lo = peak > win ? peak - win : 0;
    const std::size_t hi = std::min(rir.samples.size(), peak + win + 1);

    double direct = 0.0, late = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
        direct += static_cast<double>(rir.samples[i]) * rir.samples[i];
    for (std::size_t i = hi; i < rir.samples.size(); ++i)
        late += static_cast<double>(rir.samples[i]) * rir.samples[i];
    if (late <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(direct / late);
}

// Mean squared magnitude difference over all bins.
template <class T>
double spectral_mse(const SpectrogramT<T>& a, const SpectrogramT<T>& b) {
    if (a.bins.rows != b.bins.rows || a.bins.cols != b.bins.cols)
        throw std::invalid_argument("spectral_mse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.bins.v.size(); ++i) {
        const double d = static_cast<double>(std::abs(a.bins.v[i])) -
                         static_cast<double>(std::abs(b.bins.v[i]));
        acc += d * d;
    }
    return a.bins.v.empty() ? 0.0 : acc / static_cast<double>(a.bins.v.size());
}

}  // namespace drymask
