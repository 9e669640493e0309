#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace drymask {

// Default scalar for the processing pipeline. Every numeric component is
// templated; tests instantiate double where tighter tolerances are needed.
using Real = float;

inline constexpr double kPi = 3.14159265358979323846;

// File/content problems (bad WAV, bad weight file, missing manifest).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Malformed container (header/manifest does not parse or does not match payload).
struct FormatError : DataError {
    using DataError::DataError;
};
// Recognized container, unsupported encoding (e.g. non-PCM WAV).
struct UnsupportedFormatError : DataError {
    using DataError::DataError;
};
// Well-formed file whose contents violate a structural constraint.
struct ValidationError : DataError {
    using DataError::DataError;
};
// Non-finite values produced mid-computation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
bool all_finite(const std::vector<T>& v) {
    for (const T& x : v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

template <class T>
T peak_abs(const std::vector<T>& v) {
    T p = 0;
    for (const T& x : v) {
        T a = std::abs(x);
        if (a > p) p = a;
    }
    return p;
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 20.0); }
inline double lin_to_db(double lin) { return 20.0 * std::log10(lin); }

}  // namespace drymask
