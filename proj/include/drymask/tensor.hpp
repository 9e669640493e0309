#pragma once

#include <array>
#include <numeric>
#include <vector>

#include "drymask/common.hpp"

namespace drymask {

// Dense 4-axis array, layout (batch, freq, time, channels), channels fastest.
// Convolution kernels reuse the same type with axes (kf, kt, in_ch, out_ch).
template <class T>
struct Tensor {
    std::array<int, 4> shape{0, 0, 0, 0};
    std::vector<T> data;

    Tensor() = default;
    Tensor(int b, int f, int t, int c, T fill = T{})
        : shape{b, f, t, c},
          data(static_cast<std::size_t>(b) * f * t * c, fill) {
        if (b < 0 || f < 0 || t < 0 || c < 0)
            throw std::invalid_argument("Tensor: negative dimension");
    }

    int batch() const { return shape[0]; }
    int freq() const { return shape[1]; }
    int time() const { return shape[2]; }
    int channels() const { return shape[3]; }
    std::size_t size() const { return data.size(); }

    std::size_t index(int b, int f, int t, int c) const {
        return ((static_cast<std::size_t>(b) * shape[1] + f) * shape[2] + t) * shape[3] + c;
    }
    T& at(int b, int f, int t, int c) { return data[index(b, f, t, c)]; }
    const T& at(int b, int f, int t, int c) const { return data[index(b, f, t, c)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool finite() const { return all_finite(data); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(shape[0], shape[1], shape[2], shape[3]);
        for (std::size_t i = 0; i < data.size(); ++i)
            out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <class T>
void require_finite(const Tensor<T>& t, const char* layer) {
    if (!t.finite())
        throw NumericError(std::string("non-finite values in layer ") + layer);
}

}  // namespace drymask
