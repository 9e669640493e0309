#pragma once

#include "drymask/grid.hpp"
#include "drymask/stft.hpp"

namespace drymask {

template <class T>
struct MaskConfigT {
    T epsilon = static_cast<T>(1e-8);  // division guard, magnitudes normalized to peak 1

    void validate() const {
        if (!(epsilon > static_cast<T>(0)))
            throw std::invalid_argument("MaskConfig: epsilon must be positive");
    }
};

using MaskConfig = MaskConfigT<Real>;

// Ground-truth residual mask: the fraction of each bin's reverberant
// magnitude attributable to reverb. M = clip(max(R - C, 0) / (R + eps), 0, 1).
// Bins where the clean magnitude exceeds the reverberant one clamp to 0.
template <class T>
Grid<T> oracle_mask(const Grid<T>& reverb_mag, const Grid<T>& clean_mag,
                    const MaskConfigT<T>& cfg = {}) {
    cfg.validate();
    require_same_shape(reverb_mag, clean_mag, "oracle_mask");
    Grid<T> mask(reverb_mag.rows, reverb_mag.cols);
    for (std::size_t i = 0; i < mask.v.size(); ++i) {
        const T r = reverb_mag.v[i];
        const T c = clean_mag.v[i];
        if (!(r >= static_cast<T>(0)) || !(c >= static_cast<T>(0)) ||
            !std::isfinite(static_cast<double>(r)) || !std::isfinite(static_cast<double>(c)))
            throw std::invalid_argument("oracle_mask: magnitudes must be finite and >= 0");
        T delta = r - c;
        if (delta < static_cast<T>(0)) delta = static_cast<T>(0);
        T m = delta / (r + cfg.epsilon);
        if (m < static_cast<T>(0)) m = static_cast<T>(0);
        if (m > static_cast<T>(1)) m = static_cast<T>(1);
        mask.v[i] = m;
    }
    return mask;
}

// Subtract the masked residual from the reverberant spectrogram:
// output magnitude R * (1 - M), reverberant phase kept verbatim. Since the
// mask scales magnitude only, each bin is the complex bin scaled by (1 - M).
template <class T>
SpectrogramT<T> apply_mask(const SpectrogramT<T>& reverb_spec, const Grid<T>& mask) {
    if (reverb_spec.bins.rows != mask.rows || reverb_spec.bins.cols != mask.cols)
        throw std::invalid_argument("apply_mask: shape mismatch");
    SpectrogramT<T> out = reverb_spec;
    for (std::size_t i = 0; i < out.bins.v.size(); ++i) {
        const T m = mask.v[i];
        if (!(m >= static_cast<T>(0) && m <= static_cast<T>(1)))
            throw std::invalid_argument("apply_mask: mask entries must lie in [0, 1]");
        out.bins.v[i] *= (static_cast<T>(1) - m);
    }
    return out;
}

}  // namespace drymask
