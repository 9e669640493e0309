#pragma once

#include <algorithm>
#include <utility>

#include "drymask/audio.hpp"
#include "drymask/fft.hpp"
#include "drymask/stft.hpp"

namespace drymask {

struct PostprocConfig {
    double gate_threshold_db = 6.0;      // above the per-row noise floor
    double gate_floor_percentile = 0.10;
    double eq_shelf_freq = 2000.0;       // Hz
    double eq_shelf_gain_db = 3.0;
    double chunk_overlap = 0.25;         // fraction of chunk length

    void validate() const {
        if (!(gate_floor_percentile > 0.0 && gate_floor_percentile < 1.0))
            throw std::invalid_argument("PostprocConfig: gate_floor_percentile must lie in (0,1)");
        if (!(chunk_overlap > 0.0 && chunk_overlap < 0.5))
            throw std::invalid_argument("PostprocConfig: chunk_overlap must lie in (0, 0.5)");
        if (!std::isfinite(eq_shelf_gain_db) || !std::isfinite(gate_threshold_db))
            throw std::invalid_argument("PostprocConfig: gains must be finite");
        if (!(eq_shelf_freq > 0.0))
            throw std::invalid_argument("PostprocConfig: eq_shelf_freq must be positive");
    }
};

namespace detail {

// Nearest-rank order statistic; monotone under element-wise decrease, which
// makes the gate idempotent.
template <class T>
T percentile(std::vector<T> values, double p) {
    if (values.empty()) return static_cast<T>(0);
    std::sort(values.begin(), values.end());
    const auto idx = static_cast<std::size_t>(
        std::llround(p * static_cast<double>(values.size() - 1)));
    return values[std::min(idx, values.size() - 1)];
}

}  // namespace detail

// Zero out every bin whose magnitude falls below the per-frequency noise
// floor (a percentile over time) raised by gate_threshold_db. Surviving bins
// keep magnitude and phase untouched.
template <class T>
SpectrogramT<T> spectral_gate(const SpectrogramT<T>& spec, const PostprocConfig& cfg) {
    cfg.validate();
    SpectrogramT<T> out = spec;
    const double gain = db_to_lin(cfg.gate_threshold_db);
    std::vector<T> row(static_cast<std::size_t>(spec.frames()));
    for (int f = 0; f < spec.freq_bins(); ++f) {
        for (int t = 0; t < spec.frames(); ++t) row[t] = std::abs(spec.bins.at(f, t));
        const double threshold =
            static_cast<double>(detail::percentile(row, cfg.gate_floor_percentile)) * gain;
        for (int t = 0; t < spec.frames(); ++t)
            if (static_cast<double>(std::abs(out.bins.at(f, t))) < threshold)
                out.bins.at(f, t) = std::complex<T>(0, 0);
    }
    return out;
}

namespace detail {

// High-shelf gain in dB at a given frequency: flat 0 below shelf/2, flat
// gain_db above shelf, linear in log2(f) across the octave between.
inline double shelf_gain_db(double freq, double shelf_freq, double gain_db) {
    if (freq <= shelf_freq / 2.0) return 0.0;
    if (freq >= shelf_freq) return gain_db;
    return gain_db * std::log2(2.0 * freq / shelf_freq);
}

}  // namespace detail

// Whole-buffer high-shelf EQ: transform (power-of-two padded), scale each bin
// by the shelf curve, inverse transform, trim back to the input length.
template <class T>
AudioBufferT<T> eq_boost(const AudioBufferT<T>& audio, const PostprocConfig& cfg) {
    cfg.validate();
    if (audio.samples.empty()) return audio;
    if (!all_finite(audio.samples)) throw std::invalid_argument("eq_boost: non-finite samples");

    const std::size_t n = audio.size();
    const std::size_t m = detail::next_pow2(n);
    std::vector<std::complex<double>> buf(m);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<double>(audio.samples[i]);
    detail::fft_radix2(buf, false);

    for (std::size_t k = 0; k <= m / 2; ++k) {
        const double freq = static_cast<double>(k) * audio.sample_rate / static_cast<double>(m);
        const double g = db_to_lin(detail::shelf_gain_db(freq, cfg.eq_shelf_freq, cfg.eq_shelf_gain_db));
        buf[k] *= g;
        if (k != 0 && k != m - k) buf[m - k] *= g;
    }
    detail::fft_radix2(buf, true);

    AudioBufferT<T> out;
    out.sample_rate = audio.sample_rate;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<T>(buf[i].real());
    return out;
}

// Complementary raised-cosine crossfade gains for an overlap of `overlap`
// samples: fade_in[k] + fade_out[k] == 1 to machine precision.
inline std::pair<std::vector<double>, std::vector<double>> stitch_fades(std::size_t overlap) {
    std::vector<double> fade_in(overlap), fade_out(overlap);
    for (std::size_t k = 0; k < overlap; ++k) {
        const double s = std::sin(kPi * (static_cast<double>(k) + 0.5) / (2.0 * overlap));
        fade_in[k] = s * s;
        fade_out[k] = 1.0 - s * s;
    }
    return {std::move(fade_in), std::move(fade_out)};
}

// Cross-fade equal-length chunks over `overlap` samples. Output length is
// n*L - (n-1)*overlap; chunks cut with the same overlap from one continuous
// signal reassemble exactly.
template <class T>
AudioBufferT<T> stitch_chunks(const std::vector<AudioBufferT<T>>& chunks, std::size_t overlap) {
    if (chunks.empty()) return {};
    const std::size_t L = chunks.front().size();
    for (const auto& c : chunks)
        if (c.size() != L || c.sample_rate != chunks.front().sample_rate)
            throw std::invalid_argument("stitch_chunks: inconsistent chunk lengths");
    if (chunks.size() == 1) return chunks.front();
    if (overlap == 0 || overlap >= (L + 1) / 2)
        throw std::invalid_argument("stitch_chunks: overlap must lie in (0, L/2)");

    const auto [fade_in, fade_out] = stitch_fades(overlap);
    const std::size_t step = L - overlap;
    AudioBufferT<T> out;
    out.sample_rate = chunks.front().sample_rate;
    out.samples.assign(chunks.size() * L - (chunks.size() - 1) * overlap, static_cast<T>(0));

    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const std::size_t off = i * step;
        for (std::size_t k = 0; k < L; ++k) {
            double g = 1.0;
            if (i > 0 && k < overlap) g *= fade_in[k];
            if (i + 1 < chunks.size() && k >= L - overlap) g *= fade_out[k - (L - overlap)];
            out.samples[off + k] += static_cast<T>(g * static_cast<double>(chunks[i].samples[k]));
        }
    }
    return out;
}

}  // namespace drymask
