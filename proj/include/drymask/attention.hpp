#pragma once

#include <limits>
#include <vector>

#include "drymask/conv.hpp"
#include "drymask/grid.hpp"

namespace drymask {

struct AttentionConfig {
    int heads = 4;
    int key_dim = 32;

    void validate() const {
        if (heads < 1 || key_dim < 1)
            throw std::invalid_argument("AttentionConfig: heads and key_dim must be >= 1");
    }
};

// Kernel + bias parameter bundle (convolutions and token-wise projections).
template <class T>
struct ConvParam {
    Tensor<T> kernel;
    Tensor<T> bias;

    template <class U>
    ConvParam<U> cast() const {
        return {kernel.template cast<U>(), bias.template cast<U>()};
    }
};

template <class T>
struct MhaParams {
    ConvParam<T> query, key, value, out;  // projections as 1x1 kernels (1,1,in,out)
};

template <class T>
struct MhaCache {
    Tensor<T> tokens;                 // (1,1,T',D)
    Tensor<T> q, k, v;                // (1,1,T',heads*key_dim)
    std::vector<Grid<T>> attn;        // per head, T' x T' softmax rows
    Tensor<T> context;                // (1,1,T',heads*key_dim)
};

namespace detail {

// One token per time frame; features are the flattened (freq, channel) slice.
template <class T>
Tensor<T> to_tokens(const Tensor<T>& x) {
    const int F = x.freq(), Tm = x.time(), C = x.channels();
    Tensor<T> tok(1, 1, Tm, F * C);
    for (int t = 0; t < Tm; ++t)
        for (int f = 0; f < F; ++f)
            for (int c = 0; c < C; ++c)
                tok.at(0, 0, t, f * C + c) = x.at(0, f, t, c);
    return tok;
}

template <class T>
Tensor<T> from_tokens(const Tensor<T>& tok, int F, int C) {
    const int Tm = tok.time();
    Tensor<T> x(1, F, Tm, C);
    for (int t = 0; t < Tm; ++t)
        for (int f = 0; f < F; ++f)
            for (int c = 0; c < C; ++c)
                x.at(0, f, t, c) = tok.at(0, 0, t, f * C + c);
    return x;
}

}  // namespace detail

// Scaled dot-product attention over time tokens with a residual connection.
// Input is the bottleneck feature map (1, F', T', C); each time frame becomes
// a token of dimension F'*C. Heads are packed side by side in the projection
// outputs. Pass a cache to keep intermediates for the backward pass.
template <class T>
Tensor<T> multi_head_attention(const Tensor<T>& input, const AttentionConfig& cfg,
                               const MhaParams<T>& p, MhaCache<T>* cache = nullptr) {
    cfg.validate();
    if (input.batch() != 1)
        throw std::invalid_argument("multi_head_attention: batch must be 1");
    const int F = input.freq(), Tm = input.time(), C = input.channels();
    const int D = F * C;
    const int hk = cfg.heads * cfg.key_dim;
    if (p.query.kernel.shape[2] != D || p.query.kernel.shape[3] != hk ||
        p.key.kernel.shape[3] != hk || p.value.kernel.shape[3] != hk)
        throw std::invalid_argument(
            "multi_head_attention: projection dims do not match heads * key_dim");

    Tensor<T> tokens = detail::to_tokens(input);
    Tensor<T> q = conv2d(tokens, p.query.kernel, p.query.bias);
    Tensor<T> k = conv2d(tokens, p.key.kernel, p.key.bias);
    Tensor<T> v = conv2d(tokens, p.value.kernel, p.value.bias);

    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.key_dim)));
    Tensor<T> context(1, 1, Tm, hk);
    std::vector<Grid<T>> attn(static_cast<std::size_t>(cfg.heads));

    std::vector<T> row(static_cast<std::size_t>(Tm));
    for (int h = 0; h < cfg.heads; ++h) {
        const int off = h * cfg.key_dim;
        Grid<T>& a = attn[h];
        a = Grid<T>(Tm, Tm);
        for (int i = 0; i < Tm; ++i) {
            T mx = std::numeric_limits<T>::lowest();
            for (int j = 0; j < Tm; ++j) {
                T s = 0;
                for (int d = 0; d < cfg.key_dim; ++d)
                    s += q.at(0, 0, i, off + d) * k.at(0, 0, j, off + d);
                row[j] = s * scale;
                if (row[j] > mx) mx = row[j];
            }
            T denom = 0;
            for (int j = 0; j < Tm; ++j) {
                row[j] = std::exp(row[j] - mx);
                denom += row[j];
            }
            for (int j = 0; j < Tm; ++j) a.at(i, j) = row[j] / denom;
            for (int d = 0; d < cfg.key_dim; ++d) {
                T acc = 0;
                for (int j = 0; j < Tm; ++j) acc += a.at(i, j) * v.at(0, 0, j, off + d);
                context.at(0, 0, i, off + d) = acc;
            }
        }
    }

    Tensor<T> projected = conv2d(context, p.out.kernel, p.out.bias);
    for (std::size_t i = 0; i < projected.data.size(); ++i)
        projected.data[i] += tokens.data[i];

    if (cache) {
        cache->tokens = std::move(tokens);
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->attn = std::move(attn);
        cache->context = context;
    }
    return detail::from_tokens(projected, F, C);
}

template <class T>
struct MhaGrads {
    Tensor<T> input;
    MhaParams<T> params;
};

template <class T>
MhaGrads<T> multi_head_attention_backward(const AttentionConfig& cfg, const MhaParams<T>& p,
                                          const MhaCache<T>& cache, const Tensor<T>& grad_out) {
    const int Tm = cache.tokens.time();
    const int D = cache.tokens.channels();
    const int F = grad_out.freq(), C = grad_out.channels();
    if (F * C != D) throw std::invalid_argument("attention backward: shape mismatch");

    Tensor<T> g_tokens = detail::to_tokens(grad_out);  // gradient w.r.t. tokens + projected

    // output projection
    ConvGrads<T> go = conv2d_backward(cache.context, p.out.kernel, g_tokens);
    Tensor<T>& g_context = go.input;

    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg.key_dim)));
    Tensor<T> gq(1, 1, Tm, cfg.heads * cfg.key_dim);
    Tensor<T> gk(1, 1, Tm, cfg.heads * cfg.key_dim);
    Tensor<T> gv(1, 1, Tm, cfg.heads * cfg.key_dim);

    std::vector<T> ga(static_cast<std::size_t>(Tm));
    for (int h = 0; h < cfg.heads; ++h) {
        const int off = h * cfg.key_dim;
        const Grid<T>& a = cache.attn[h];
        for (int i = 0; i < Tm; ++i) {
            // context = A V : accumulate dL/dA row i and dL/dV
            for (int j = 0; j < Tm; ++j) {
                T acc = 0;
                for (int d = 0; d < cfg.key_dim; ++d) {
                    const T gc = g_context.at(0, 0, i, off + d);
                    acc += gc * cache.v.at(0, 0, j, off + d);
                    gv.at(0, 0, j, off + d) += a.at(i, j) * gc;
                }
                ga[j] = acc;
            }
            // softmax backward: gs = a * (ga - sum_j ga*a)
            T dot = 0;
            for (int j = 0; j < Tm; ++j) dot += ga[j] * a.at(i, j);
            for (int j = 0; j < Tm; ++j) {
                const T gs = a.at(i, j) * (ga[j] - dot) * scale;
                for (int d = 0; d < cfg.key_dim; ++d) {
                    gq.at(0, 0, i, off + d) += gs * cache.k.at(0, 0, j, off + d);
                    gk.at(0, 0, j, off + d) += gs * cache.q.at(0, 0, i, off + d);
                }
            }
        }
    }

    ConvGrads<T> gqp = conv2d_backward(cache.tokens, p.query.kernel, gq);
    ConvGrads<T> gkp = conv2d_backward(cache.tokens, p.key.kernel, gk);
    ConvGrads<T> gvp = conv2d_backward(cache.tokens, p.value.kernel, gv);

    // residual + three projection paths into the token gradient
    for (std::size_t i = 0; i < g_tokens.data.size(); ++i)
        g_tokens.data[i] += gqp.input.data[i] + gkp.input.data[i] + gvp.input.data[i];

    MhaGrads<T> out;
    out.input = detail::from_tokens(g_tokens, F, C);
    out.params.query = {std::move(gqp.kernel), std::move(gqp.bias)};
    out.params.key = {std::move(gkp.kernel), std::move(gkp.bias)};
    out.params.value = {std::move(gvp.kernel), std::move(gvp.bias)};
    out.params.out = {std::move(go.kernel), std::move(go.bias)};
    return out;
}

}  // namespace drymask
