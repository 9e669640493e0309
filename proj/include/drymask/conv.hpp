#pragma once

#include <utility>

#include "drymask/tensor.hpp"

namespace drymask {

struct Dilation {
    int freq = 1;
    int time = 1;
};

// Same-padding cross-correlation with dilation. Kernel axes are
// (kf, kt, in_ch, out_ch); kernel spatial dims must be odd so the output
// keeps the input's spatial dims. Bias is one value per output channel,
// stored as a (1,1,1,out_ch) tensor.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Dilation dil = {1, 1}) {
    const int kf = kernel.shape[0], kt = kernel.shape[1];
    const int ic = kernel.shape[2], oc = kernel.shape[3];
    if (kf % 2 == 0 || kt % 2 == 0)
        throw std::invalid_argument("conv2d: kernel spatial dims must be odd");
    if (input.channels() != ic)
        throw std::invalid_argument("conv2d: input channel count does not match kernel");
    if (bias.size() != static_cast<std::size_t>(oc))
        throw std::invalid_argument("conv2d: bias length does not match output channels");
    if (dil.freq < 1 || dil.time < 1) throw std::invalid_argument("conv2d: dilation must be >= 1");

    const int B = input.batch(), F = input.freq(), Tm = input.time();
    const int rf = kf / 2, rt = kt / 2;
    Tensor<T> out(B, F, Tm, oc);

    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int t = 0; t < Tm; ++t) {
                T* orow = &out.at(b, f, t, 0);
                for (int o = 0; o < oc; ++o) orow[o] = bias.data[o];
                for (int u = 0; u < kf; ++u) {
                    const int fi = f + (u - rf) * dil.freq;
                    if (fi < 0 || fi >= F) continue;
                    for (int v = 0; v < kt; ++v) {
                        const int ti = t + (v - rt) * dil.time;
                        if (ti < 0 || ti >= Tm) continue;
                        const T* irow = &input.at(b, fi, ti, 0);
                        const T* krow = &kernel.at(u, v, 0, 0);
                        for (int i = 0; i < ic; ++i) {
                            const T x = irow[i];
                            const T* kr = krow + static_cast<std::size_t>(i) * oc;
                            for (int o = 0; o < oc; ++o) orow[o] += x * kr[o];
                        }
                    }
                }
            }
    return out;
}

template <class T>
struct ConvGrads {
    Tensor<T> input;
    Tensor<T> kernel;
    Tensor<T> bias;
};

// Reverse-mode gradients for conv2d w.r.t. input, kernel and bias.
template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                             const Tensor<T>& grad_out, Dilation dil = {1, 1}) {
    const int kf = kernel.shape[0], kt = kernel.shape[1];
    const int ic = kernel.shape[2], oc = kernel.shape[3];
    const int B = input.batch(), F = input.freq(), Tm = input.time();
    if (grad_out.batch() != B || grad_out.freq() != F || grad_out.time() != Tm ||
        grad_out.channels() != oc)
        throw std::invalid_argument("conv2d_backward: grad shape mismatch");
    const int rf = kf / 2, rt = kt / 2;

    ConvGrads<T> g{Tensor<T>(B, F, Tm, ic), Tensor<T>(kf, kt, ic, oc), Tensor<T>(1, 1, 1, oc)};

    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int t = 0; t < Tm; ++t) {
                const T* grow = &grad_out.at(b, f, t, 0);
                for (int o = 0; o < oc; ++o) g.bias.data[o] += grow[o];
                for (int u = 0; u < kf; ++u) {
                    const int fi = f + (u - rf) * dil.freq;
                    if (fi < 0 || fi >= F) continue;
                    for (int v = 0; v < kt; ++v) {
                        const int ti = t + (v - rt) * dil.time;
                        if (ti < 0 || ti >= Tm) continue;
                        const T* irow = &input.at(b, fi, ti, 0);
                        T* girow = &g.input.at(b, fi, ti, 0);
                        T* gkrow = &g.kernel.at(u, v, 0, 0);
                        const T* krow = &kernel.at(u, v, 0, 0);
                        for (int i = 0; i < ic; ++i) {
                            const T x = irow[i];
                            const T* kr = krow + static_cast<std::size_t>(i) * oc;
                            T* gkr = gkrow + static_cast<std::size_t>(i) * oc;
                            T acc = 0;
                            for (int o = 0; o < oc; ++o) {
                                gkr[o] += x * grow[o];
                                acc += kr[o] * grow[o];
                            }
                            girow[i] += acc;
                        }
                    }
                }
            }
    return g;
}

// 2x2 max pooling over freq and time; both spatial dims must be even.
template <class T>
Tensor<T> maxpool2(const Tensor<T>& input) {
    const int B = input.batch(), F = input.freq(), Tm = input.time(), C = input.channels();
    if (F % 2 != 0 || Tm % 2 != 0)
        throw std::invalid_argument("maxpool2: freq and time dims must be even");
    Tensor<T> out(B, F / 2, Tm / 2, C);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F / 2; ++f)
            for (int t = 0; t < Tm / 2; ++t)
                for (int c = 0; c < C; ++c) {
                    T m = input.at(b, 2 * f, 2 * t, c);
                    m = std::max(m, input.at(b, 2 * f, 2 * t + 1, c));
                    m = std::max(m, input.at(b, 2 * f + 1, 2 * t, c));
                    m = std::max(m, input.at(b, 2 * f + 1, 2 * t + 1, c));
                    out.at(b, f, t, c) = m;
                }
    return out;
}

// Routes each output gradient to the first element of the 2x2 block that
// attains the max (same traversal order as the forward pass).
template <class T>
Tensor<T> maxpool2_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
    const int B = input.batch(), F = input.freq(), Tm = input.time(), C = input.channels();
    if (grad_out.freq() != F / 2 || grad_out.time() != Tm / 2)
        throw std::invalid_argument("maxpool2_backward: grad shape mismatch");
    Tensor<T> g(B, F, Tm, C);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F / 2; ++f)
            for (int t = 0; t < Tm / 2; ++t)
                for (int c = 0; c < C; ++c) {
                    int bf = 2 * f, bt = 2 * t;
                    T m = input.at(b, bf, bt, c);
                    if (input.at(b, 2 * f, 2 * t + 1, c) > m) { m = input.at(b, 2 * f, 2 * t + 1, c); bf = 2 * f; bt = 2 * t + 1; }
                    if (input.at(b, 2 * f + 1, 2 * t, c) > m) { m = input.at(b, 2 * f + 1, 2 * t, c); bf = 2 * f + 1; bt = 2 * t; }
                    if (input.at(b, 2 * f + 1, 2 * t + 1, c) > m) { bf = 2 * f + 1; bt = 2 * t + 1; }
                    g.at(b, bf, bt, c) += grad_out.at(b, f, t, c);
                }
    return g;
}

// Nearest-neighbor 2x upsampling over freq and time.
template <class T>
Tensor<T> upsample2(const Tensor<T>& input) {
    const int B = input.batch(), F = input.freq(), Tm = input.time(), C = input.channels();
    Tensor<T> out(B, 2 * F, 2 * Tm, C);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < 2 * F; ++f)
            for (int t = 0; t < 2 * Tm; ++t)
                for (int c = 0; c < C; ++c)
                    out.at(b, f, t, c) = input.at(b, f / 2, t / 2, c);
    return out;
}

template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out) {
    const int B = grad_out.batch(), F = grad_out.freq(), Tm = grad_out.time(), C = grad_out.channels();
    if (F % 2 != 0 || Tm % 2 != 0)
        throw std::invalid_argument("upsample2_backward: grad dims must be even");
    Tensor<T> g(B, F / 2, Tm / 2, C);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int t = 0; t < Tm; ++t)
                for (int c = 0; c < C; ++c)
                    g.at(b, f / 2, t / 2, c) += grad_out.at(b, f, t, c);
    return g;
}

template <class T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out = input;
    for (T& x : out.data)
        if (x < static_cast<T>(0)) x = static_cast<T>(0);
    return out;
}

// Gradient masked on the post-activation values (zero where the unit was off).
template <class T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        if (!(output.data[i] > static_cast<T>(0))) g.data[i] = static_cast<T>(0);
    return g;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& input) {
    Tensor<T> out = input;
    for (T& x : out.data) {
        if (x >= static_cast<T>(0))
            x = static_cast<T>(1) / (static_cast<T>(1) + std::exp(-x));
        else {
            const T e = std::exp(x);
            x = e / (static_cast<T>(1) + e);
        }
    }
    return out;
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] *= output.data[i] * (static_cast<T>(1) - output.data[i]);
    return g;
}

// Concatenate along the channel axis (skip connections).
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.batch() != b.batch() || a.freq() != b.freq() || a.time() != b.time())
        throw std::invalid_argument("concat_channels: spatial shape mismatch");
    Tensor<T> out(a.batch(), a.freq(), a.time(), a.channels() + b.channels());
    for (int bb = 0; bb < a.batch(); ++bb)
        for (int f = 0; f < a.freq(); ++f)
            for (int t = 0; t < a.time(); ++t) {
                T* orow = &out.at(bb, f, t, 0);
                const T* ar = &a.at(bb, f, t, 0);
                const T* br = &b.at(bb, f, t, 0);
                std::copy(ar, ar + a.channels(), orow);
                std::copy(br, br + b.channels(), orow + a.channels());
            }
    return out;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> concat_channels_backward(const Tensor<T>& grad_out,
                                                         int channels_a) {
    const int B = grad_out.batch(), F = grad_out.freq(), Tm = grad_out.time();
    const int channels_b = grad_out.channels() - channels_a;
    if (channels_b < 0) throw std::invalid_argument("concat_channels_backward: bad split");
    Tensor<T> ga(B, F, Tm, channels_a), gb(B, F, Tm, channels_b);
    for (int b = 0; b < B; ++b)
        for (int f = 0; f < F; ++f)
            for (int t = 0; t < Tm; ++t) {
                const T* grow = &grad_out.at(b, f, t, 0);
                std::copy(grow, grow + channels_a, &ga.at(b, f, t, 0));
                std::copy(grow + channels_a, grow + channels_a + channels_b, &gb.at(b, f, t, 0));
            }
    return {std::move(ga), std::move(gb)};
}

}  // namespace drymask
