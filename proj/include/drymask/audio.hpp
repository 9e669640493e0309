#pragma once

#include <cstdint>
#include <vector>

#include "drymask/common.hpp"

namespace drymask {

// Time-domain signal: samples nominally in [-1, 1] plus a sample rate.
template <class T>
struct AudioBufferT {
    std::vector<T> samples;
    int sample_rate = 16000;

    AudioBufferT() = default;
    AudioBufferT(std::vector<T> s, int sr) : samples(std::move(s)), sample_rate(sr) {
        if (sample_rate <= 0) throw std::invalid_argument("AudioBuffer: sample_rate must be positive");
    }

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }

    T peak() const { return peak_abs(samples); }

    double rms() const {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (const T& s : samples) acc += static_cast<double>(s) * s;
        return std::sqrt(acc / samples.size());
    }

    // In-place peak normalization to max |sample| = 1; silent buffers untouched.
    void normalize_peak(T silence_floor = static_cast<T>(0)) {
        T p = peak();
        if (p <= silence_floor || p == static_cast<T>(0)) return;
        const T inv = static_cast<T>(1) / p;
        for (T& s : samples) s *= inv;
    }
};

using AudioBuffer = AudioBufferT<Real>;

}  // namespace drymask
