#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "drymask/audio.hpp"
#include "drymask/fft.hpp"
#include "drymask/grid.hpp"

namespace drymask {

// Periodic Hann: w[k] = 0.5 * (1 - cos(2*pi*k/n)). Satisfies constant
// overlap-add at hop n/2, which the ISTFT normalization relies on.
template <class T = Real>
std::vector<T> hann_window(int n) {
    if (n < 2) throw std::invalid_argument("hann_window: n must be >= 2");
    std::vector<T> w(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        w[k] = static_cast<T>(0.5 * (1.0 - std::cos(2.0 * kPi * k / n)));
    return w;
}

template <class T>
struct StftConfigT {
    int fft_size = 512;
    int hop = 256;
    std::vector<T> window;  // length fft_size, values in [0, 1]

    StftConfigT() : window(hann_window<T>(512)) {}
    StftConfigT(int fft, int hop_len)
        : fft_size(fft), hop(hop_len), window(hann_window<T>(fft)) {
        validate();
    }
    StftConfigT(int fft, int hop_len, std::vector<T> win)
        : fft_size(fft), hop(hop_len), window(std::move(win)) {
        validate();
    }

    void validate() const {
        if (fft_size < 2 || fft_size % 2 != 0)
            throw std::invalid_argument("StftConfig: fft_size must be even and >= 2");
        if (hop <= 0 || hop > fft_size || fft_size % hop != 0)
            throw std::invalid_argument("StftConfig: hop must divide fft_size");
        if (static_cast<int>(window.size()) != fft_size)
            throw std::invalid_argument("StftConfig: window length must equal fft_size");
        for (const T& w : window)
            if (!(w >= static_cast<T>(0) && w <= static_cast<T>(1)))
                throw std::invalid_argument("StftConfig: window values must lie in [0, 1]");
    }

    int bins() const { return fft_size / 2 + 1; }
    int pad() const { return fft_size - hop; }
};

using StftConfig = StftConfigT<Real>;

// Complex frequency x time matrix. F = fft_size/2 + 1 rows (non-negative bins).
template <class T>
struct SpectrogramT {
    Grid<std::complex<T>> bins;
    StftConfigT<T> config;
    int sample_rate = 16000;

    int freq_bins() const { return bins.rows; }
    int frames() const { return bins.cols; }
};

using Spectrogram = SpectrogramT<Real>;

// Frame count for a given original signal length under the edge padding used
// here (fft_size - hop zeros on each side).
template <class T>
int stft_frame_count(std::size_t length, const StftConfigT<T>& cfg) {
    const std::size_t padded = length + 2 * static_cast<std::size_t>(cfg.pad());
    if (padded < static_cast<std::size_t>(cfg.fft_size)) return 0;
    return 1 + static_cast<int>((padded - cfg.fft_size) / cfg.hop);
}

template <class T>
SpectrogramT<T> stft(const AudioBufferT<T>& audio, const StftConfigT<T>& cfg) {
    cfg.validate();
    if (audio.size() < static_cast<std::size_t>(cfg.fft_size))
        throw std::invalid_argument("stft: audio shorter than one frame");

    const int n = cfg.fft_size;
    const int pad = cfg.pad();
    const int frames = stft_frame_count(audio.size(), cfg);
    const int bins = cfg.bins();

    std::vector<T> padded(audio.size() + 2 * pad, static_cast<T>(0));
    std::copy(audio.samples.begin(), audio.samples.end(), padded.begin() + pad);

    SpectrogramT<T> spec;
    spec.bins = Grid<std::complex<T>>(bins, frames);
    spec.config = cfg;
    spec.sample_rate = audio.sample_rate;

    std::vector<std::complex<T>> frame(static_cast<std::size_t>(n));
    for (int t = 0; t < frames; ++t) {
        const std::size_t off = static_cast<std::size_t>(t) * cfg.hop;
        for (int k = 0; k < n; ++k)
            frame[k] = std::complex<T>(padded[off + k] * cfg.window[k], 0);
        fft(frame);
        for (int f = 0; f < bins; ++f) spec.bins.at(f, t) = frame[f];
    }
    return spec;
}

namespace detail {

// Summed squared-window envelope over the padded signal extent.
template <class T>
std::vector<T> ola_envelope(const StftConfigT<T>& cfg, int frames) {
    const std::size_t padded_len =
        static_cast<std::size_t>(frames - 1) * cfg.hop + cfg.fft_size;
    std::vector<T> env(padded_len, static_cast<T>(0));
    for (int t = 0; t < frames; ++t) {
        const std::size_t off = static_cast<std::size_t>(t) * cfg.hop;
        for (int k = 0; k < cfg.fft_size; ++k)
            env[off + k] += cfg.window[k] * cfg.window[k];
    }
    return env;
}

inline constexpr double kEnvelopeFloor = 1e-8;

}  // namespace detail

// Overlap-add inverse with the analysis window reused for synthesis and the
// summed squared-window envelope divided out. Output length is
// (frames-1)*hop + fft_size - 2*pad; interior samples reconstruct exactly.
template <class T>
AudioBufferT<T> istft(const SpectrogramT<T>& spec) {
    const StftConfigT<T>& cfg = spec.config;
    cfg.validate();
    const int n = cfg.fft_size;
    const int frames = spec.frames();
    if (spec.freq_bins() != cfg.bins())
        throw std::invalid_argument("istft: spectrogram rows != fft_size/2 + 1");
    if (frames == 0) return AudioBufferT<T>({}, spec.sample_rate);

    const std::size_t padded_len = static_cast<std::size_t>(frames - 1) * cfg.hop + n;
    std::vector<T> acc(padded_len, static_cast<T>(0));
    const std::vector<T> env = detail::ola_envelope(cfg, frames);

    std::vector<std::complex<T>> full(static_cast<std::size_t>(n));
    for (int t = 0; t < frames; ++t) {
        full[0] = spec.bins.at(0, t);
        full[n / 2] = spec.bins.at(n / 2, t);
        for (int f = 1; f < n / 2; ++f) {
            full[f] = spec.bins.at(f, t);
            full[n - f] = std::conj(full[f]);
        }
        ifft(full);
        const std::size_t off = static_cast<std::size_t>(t) * cfg.hop;
        for (int k = 0; k < n; ++k)
            acc[off + k] += full[k].real() * cfg.window[k];
    }
    for (std::size_t i = 0; i < padded_len; ++i) {
        const T e = env[i] > static_cast<T>(detail::kEnvelopeFloor)
                        ? env[i]
                        : static_cast<T>(detail::kEnvelopeFloor);
        acc[i] /= e;
    }

    const int pad = cfg.pad();
    std::vector<T> out;
    if (padded_len > static_cast<std::size_t>(2 * pad))
        out.assign(acc.begin() + pad, acc.end() - pad);
    return AudioBufferT<T>(std::move(out), spec.sample_rate);
}

// Adjoint of istft as a linear map: pulls a gradient w.r.t. the time-domain
// output back to a gradient w.r.t. the complex bins. Mirrors istft step by
// step (pad, envelope division, window, transform, Hermitian fold).
template <class T>
Grid<std::complex<T>> istft_adjoint(const std::vector<T>& grad_out,
                                    const StftConfigT<T>& cfg, int frames) {
    const int n = cfg.fft_size;
    const int pad = cfg.pad();
    const std::size_t padded_len = static_cast<std::size_t>(frames - 1) * cfg.hop + n;
    if (grad_out.size() + 2 * static_cast<std::size_t>(pad) != padded_len)
        throw std::invalid_argument("istft_adjoint: gradient length mismatch");

    std::vector<T> g(padded_len, static_cast<T>(0));
    std::copy(grad_out.begin(), grad_out.end(), g.begin() + pad);
    const std::vector<T> env = detail::ola_envelope(cfg, frames);
    for (std::size_t i = 0; i < padded_len; ++i) {
        const T e = env[i] > static_cast<T>(detail::kEnvelopeFloor)
                        ? env[i]
                        : static_cast<T>(detail::kEnvelopeFloor);
        g[i] /= e;
    }

    Grid<std::complex<T>> grad_bins(cfg.bins(), frames);
    std::vector<std::complex<T>> frame(static_cast<std::size_t>(n));
    const T inv_n = static_cast<T>(1.0 / static_cast<double>(n));
    for (int t = 0; t < frames; ++t) {
        const std::size_t off = static_cast<std::size_t>(t) * cfg.hop;
        for (int k = 0; k < n; ++k)
            frame[k] = std::complex<T>(g[off + k] * cfg.window[k], 0);
        fft(frame);
        // d/dbin for the two self-conjugate bins; interior bins pick up both
        // halves of the Hermitian completion (factor 2 since the frame is real).
        grad_bins.at(0, t) = frame[0] * inv_n;
        grad_bins.at(n / 2, t) = frame[n / 2] * inv_n;
        for (int f = 1; f < n / 2; ++f)
            grad_bins.at(f, t) = frame[f] * (static_cast<T>(2) * inv_n);
    }
    return grad_bins;
}

// Element-wise modulus and argument. Phase of a zero bin is 0 by convention;
// phase range is (-pi, pi].
template <class T>
std::pair<Grid<T>, Grid<T>> magnitude_phase(const SpectrogramT<T>& spec) {
    Grid<T> mag(spec.bins.rows, spec.bins.cols);
    Grid<T> phase(spec.bins.rows, spec.bins.cols);
    for (std::size_t i = 0; i < spec.bins.v.size(); ++i) {
        const std::complex<T>& z = spec.bins.v[i];
        mag.v[i] = std::abs(z);
        T p = (z == std::complex<T>(0, 0)) ? static_cast<T>(0)
                                           : std::atan2(z.imag(), z.real());
        if (p <= static_cast<T>(-kPi)) p = static_cast<T>(kPi);
        phase.v[i] = p;
    }
    return {std::move(mag), std::move(phase)};
}

template <class T>
Grid<T> magnitude(const SpectrogramT<T>& spec) {
    Grid<T> mag(spec.bins.rows, spec.bins.cols);
    for (std::size_t i = 0; i < spec.bins.v.size(); ++i)
        mag.v[i] = std::abs(spec.bins.v[i]);
    return mag;
}

}  // namespace drymask
