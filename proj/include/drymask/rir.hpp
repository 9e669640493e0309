#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "drymask/audio.hpp"
#include "drymask/fft.hpp"

namespace drymask {

template <class T>
struct RoomImpulseResponseT {
    std::vector<T> samples;
    int sample_rate = 16000;
    std::string label;

    std::size_t direct_path_index() const {
        if (samples.empty()) throw std::invalid_argument("RIR: empty impulse response");
        std::size_t best = 0;
        T best_abs = std::abs(samples[0]);
        for (std::size_t i = 1; i < samples.size(); ++i) {
            const T a = std::abs(samples[i]);
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (best_abs == static_cast<T>(0))
            throw std::invalid_argument("RIR: all-zero impulse response");
        return best;
    }
};

using RoomImpulseResponse = RoomImpulseResponseT<Real>;

// Synthetic RIR: unit direct-path impulse at index 0 followed by Gaussian
// noise under an exponential envelope whose energy decays 60 dB over t60.
// The tail amplitude is scaled so total tail energy is ~t60 (in units of the
// direct-path energy), giving realistic DRRs that fall monotonically with t60.
template <class T = Real>
RoomImpulseResponseT<T> synth_rir(double t60, std::size_t length, std::uint64_t seed,
                                  int sample_rate = 16000) {
    if (!(t60 > 0.0)) throw std::invalid_argument("synth_rir: t60 must be positive");
    if (length == 0) throw std::invalid_argument("synth_rir: length must be positive");

    // -60 dB amplitude over t60 seconds
    const double decay = std::log(1000.0) / t60;
    const double tail_amp = std::sqrt(2.0 * std::log(1000.0) / sample_rate);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    RoomImpulseResponseT<T> rir;
    rir.sample_rate = sample_rate;
    rir.samples.resize(length, static_cast<T>(0));
    rir.samples[0] = static_cast<T>(1);
    for (std::size_t i = 1; i < length; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        rir.samples[i] = static_cast<T>(tail_amp * gauss(rng) * std::exp(-decay * t));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "rir_t60_%.2f_s%llu", t60,
                  static_cast<unsigned long long>(seed));
    rir.label = buf;
    return rir;
}

// Reverberate: full linear convolution, shifted left by the RIR's
// direct-path index so the direct sound lines up with the dry signal,
// truncated to the dry length and peak-normalized.
template <class T>
AudioBufferT<T> convolve_rir(const AudioBufferT<T>& clean, const RoomImpulseResponseT<T>& rir) {
    if (clean.samples.empty() || rir.samples.empty())
        throw std::invalid_argument("convolve_rir: empty input");
    if (clean.sample_rate != rir.sample_rate)
        throw std::invalid_argument("convolve_rir: sample-rate mismatch");

    const std::vector<T> full = convolve(clean.samples, rir.samples);
    const std::size_t shift = rir.direct_path_index();

    std::vector<T> out(clean.size(), static_cast<T>(0));
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const std::size_t j = i + shift;
        if (j < full.size()) out[i] = full[j];
    }
    AudioBufferT<T> result(std::move(out), clean.sample_rate);
    result.normalize_peak();
    return result;
}

}  // namespace drymask
