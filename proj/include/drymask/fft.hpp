#pragma once

#include <complex>
#include <vector>

#include "drymask/common.hpp"

namespace drymask {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey. Twiddles are evaluated in double and
// narrowed, which keeps the float instantiation near 1e-7 round-trip error.
template <class T>
void fft_radix2(std::vector<std::complex<T>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<T> wlen(static_cast<T>(std::cos(ang)), static_cast<T>(std::sin(ang)));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<T> w(1, 0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<T> u = a[i + k];
                std::complex<T> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const T inv_n = static_cast<T>(1.0 / static_cast<double>(n));
        for (auto& x : a) x *= inv_n;
    }
}

// O(n^2) fallback for non-power-of-two sizes (toy configurations only).
template <class T>
void dft_direct(std::vector<std::complex<T>>& a, bool inverse) {
    const std::size_t n = a.size();
    std::vector<std::complex<T>> out(n);
    const double sign = inverse ? 2.0 : -2.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * kPi * static_cast<double>(k * j % n) / static_cast<double>(n);
            acc += std::complex<double>(a[j].real(), a[j].imag()) *
                   std::complex<double>(std::cos(ang), std::sin(ang));
        }
        if (inverse) acc /= static_cast<double>(n);
        out[k] = std::complex<T>(static_cast<T>(acc.real()), static_cast<T>(acc.imag()));
    }
    a = std::move(out);
}

}  // namespace detail

namespace detail {

// Transforms always run in double; narrower inputs are promoted at the
// boundary so storage precision is the only rounding the caller sees.
template <class T>
void transform(std::vector<std::complex<T>>& a, bool inverse) {
    if constexpr (std::is_same_v<T, double>) {
        if (is_pow2(a.size()))
            fft_radix2(a, inverse);
        else
            dft_direct(a, inverse);
    } else {
        std::vector<std::complex<double>> wide(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            wide[i] = {static_cast<double>(a[i].real()), static_cast<double>(a[i].imag())};
        transform(wide, inverse);
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = {static_cast<T>(wide[i].real()), static_cast<T>(wide[i].imag())};
    }
}

}  // namespace detail

template <class T>
void fft(std::vector<std::complex<T>>& a) {
    detail::transform(a, false);
}

template <class T>
void ifft(std::vector<std::complex<T>>& a) {
    detail::transform(a, true);
}

// Full linear convolution, FFT-based with double internals. Length n + m - 1.
// Matches the direct sum within 1e-6 on inputs up to ~1e4 samples.
template <class T>
std::vector<T> convolve(const std::vector<T>& x, const std::vector<T>& h) {
    if (x.empty() || h.empty()) throw std::invalid_argument("convolve: empty input");
    const std::size_t out_len = x.size() + h.size() - 1;
    const std::size_t n = detail::next_pow2(out_len);
    std::vector<std::complex<double>> a(n), b(n);
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = static_cast<double>(x[i]);
    for (std::size_t i = 0; i < h.size(); ++i) b[i] = static_cast<double>(h[i]);
    detail::fft_radix2(a, false);
    detail::fft_radix2(b, false);
    for (std::size_t i = 0; i < n; ++i) a[i] *= b[i];
    detail::fft_radix2(a, true);
    std::vector<T> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = static_cast<T>(a[i].real());
    return out;
}

}  // namespace drymask
