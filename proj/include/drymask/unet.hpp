#pragma once

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drymask/attention.hpp"
#include "drymask/conv.hpp"
#include "drymask/grid.hpp"

namespace drymask {

// Mask predictor: 3 conv/pool encoder blocks, TCN + multi-head attention
// bottleneck, 3 upsample/skip/conv decoder blocks, sigmoid 1x1 head.
struct UNetConfig {
    int freq_bins = 257;                        // unpadded input rows (fft_size/2 + 1)
    std::array<int, 3> channels{16, 32, 64};    // encoder widths, mirrored in the decoder
    AttentionConfig attention{4, 32};

    static constexpr std::array<int, 4> kTcnDilations{1, 2, 4, 8};

    int padded_freq() const { return ((freq_bins + 7) / 8) * 8; }
    int bottleneck_freq() const { return padded_freq() / 8; }
    int model_dim() const { return bottleneck_freq() * channels[2]; }

    void validate() const {
        if (freq_bins < 8) throw std::invalid_argument("UNetConfig: freq_bins must be >= 8");
        for (int c : channels)
            if (c < 1) throw std::invalid_argument("UNetConfig: channel widths must be >= 1");
        attention.validate();
    }
};

template <class T>
struct UNetWeights {
    UNetConfig config;
    ConvParam<T> enc1, enc2, enc3;
    std::array<ConvParam<T>, 4> tcn;
    MhaParams<T> attn;
    ConvParam<T> dec1, dec2, dec3;
    ConvParam<T> out;

    struct NamedParam {
        std::string name;
        Tensor<T>* tensor;
    };

    std::vector<NamedParam> params() {
        std::vector<NamedParam> list;
        auto add = [&](const std::string& n, ConvParam<T>& p) {
            list.push_back({n + ".kernel", &p.kernel});
            list.push_back({n + ".bias", &p.bias});
        };
        add("enc1", enc1);
        add("enc2", enc2);
        add("enc3", enc3);
        for (int i = 0; i < 4; ++i) add("tcn" + std::to_string(i + 1), tcn[i]);
        add("attn.query", attn.query);
        add("attn.key", attn.key);
        add("attn.value", attn.value);
        add("attn.out", attn.out);
        add("dec1", dec1);
        add("dec2", dec2);
        add("dec3", dec3);
        add("out", out);
        return list;
    }
    std::vector<NamedParam> params() const {
        return const_cast<UNetWeights*>(this)->params();
    }

    template <class U>
    UNetWeights<U> cast() const {
        UNetWeights<U> w;
        w.config = config;
        w.enc1 = enc1.template cast<U>();
        w.enc2 = enc2.template cast<U>();
        w.enc3 = enc3.template cast<U>();
        for (int i = 0; i < 4; ++i) w.tcn[i] = tcn[i].template cast<U>();
        w.attn.query = attn.query.template cast<U>();
        w.attn.key = attn.key.template cast<U>();
        w.attn.value = attn.value.template cast<U>();
        w.attn.out = attn.out.template cast<U>();
        w.dec1 = dec1.template cast<U>();
        w.dec2 = dec2.template cast<U>();
        w.dec3 = dec3.template cast<U>();
        w.out = out.template cast<U>();
        return w;
    }
};

namespace detail {

template <class T>
void expect_shape(const Tensor<T>& t, int a, int b, int c, int d, const std::string& name) {
    if (t.shape != std::array<int, 4>{a, b, c, d}) {
        std::ostringstream msg;
        msg << "weights: " << name << " has shape (" << t.shape[0] << ',' << t.shape[1] << ','
            << t.shape[2] << ',' << t.shape[3] << "), expected (" << a << ',' << b << ',' << c
            << ',' << d << ')';
        throw ValidationError(msg.str());
    }
}

}  // namespace detail

// Structural consistency of the whole parameter graph.
template <class T>
void validate_weights(const UNetWeights<T>& w) {
    w.config.validate();
    const auto [c1, c2, c3] = w.config.channels;
    const int D = w.config.model_dim();
    const int hk = w.config.attention.heads * w.config.attention.key_dim;

    detail::expect_shape(w.enc1.kernel, 3, 3, 1, c1, "enc1.kernel");
    detail::expect_shape(w.enc2.kernel, 3, 3, c1, c2, "enc2.kernel");
    detail::expect_shape(w.enc3.kernel, 3, 3, c2, c3, "enc3.kernel");
    for (int i = 0; i < 4; ++i)
        detail::expect_shape(w.tcn[i].kernel, 1, 3, c3, c3, "tcn" + std::to_string(i + 1) + ".kernel");
    detail::expect_shape(w.attn.query.kernel, 1, 1, D, hk, "attn.query.kernel");
    detail::expect_shape(w.attn.key.kernel, 1, 1, D, hk, "attn.key.kernel");
    detail::expect_shape(w.attn.value.kernel, 1, 1, D, hk, "attn.value.kernel");
    detail::expect_shape(w.attn.out.kernel, 1, 1, hk, D, "attn.out.kernel");
    detail::expect_shape(w.dec1.kernel, 3, 3, c3 + c3, c3, "dec1.kernel");
    detail::expect_shape(w.dec2.kernel, 3, 3, c3 + c2, c2, "dec2.kernel");
    detail::expect_shape(w.dec3.kernel, 3, 3, c2 + c1, c1, "dec3.kernel");
    detail::expect_shape(w.out.kernel, 1, 1, c1, 1, "out.kernel");

    for (const auto& np : w.params()) {
        const Tensor<T>& t = *np.tensor;
        if (np.name.size() > 5 && np.name.substr(np.name.size() - 5) == ".bias")
            detail::expect_shape(t, 1, 1, 1, t.shape[3], np.name);
        if (!t.finite()) throw ValidationError("weights: non-finite values in " + np.name);
    }
    if (w.enc1.bias.shape[3] != c1 || w.enc2.bias.shape[3] != c2 || w.enc3.bias.shape[3] != c3 ||
        w.out.bias.shape[3] != 1 || w.attn.query.bias.shape[3] != hk ||
        w.attn.key.bias.shape[3] != hk || w.attn.value.bias.shape[3] != hk ||
        w.attn.out.bias.shape[3] != D || w.dec1.bias.shape[3] != c3 ||
        w.dec2.bias.shape[3] != c2 || w.dec3.bias.shape[3] != c1)
        throw ValidationError("weights: bias width inconsistent with kernels");
    for (int i = 0; i < 4; ++i)
        if (w.tcn[i].bias.shape[3] != c3)
            throw ValidationError("weights: tcn bias width inconsistent");
}

// Glorot-uniform kernels (fan counts include the spatial extent), zero biases.
template <class T>
UNetWeights<T> init_weights(const UNetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto [c1, c2, c3] = cfg.channels;
    const int D = cfg.model_dim();
    const int hk = cfg.attention.heads * cfg.attention.key_dim;

    UNetWeights<T> w;
    w.config = cfg;
    auto shape = [](ConvParam<T>& p, int a, int b, int c, int d) {
        p.kernel = Tensor<T>(a, b, c, d);
        p.bias = Tensor<T>(1, 1, 1, d);
    };
    shape(w.enc1, 3, 3, 1, c1);
    shape(w.enc2, 3, 3, c1, c2);
    shape(w.enc3, 3, 3, c2, c3);
    for (auto& t : w.tcn) shape(t, 1, 3, c3, c3);
    shape(w.attn.query, 1, 1, D, hk);
    shape(w.attn.key, 1, 1, D, hk);
    shape(w.attn.value, 1, 1, D, hk);
    shape(w.attn.out, 1, 1, hk, D);
    shape(w.dec1, 3, 3, c3 + c3, c3);
    shape(w.dec2, 3, 3, c3 + c2, c2);
    shape(w.dec3, 3, 3, c2 + c1, c1);
    shape(w.out, 1, 1, c1, 1);

    std::mt19937_64 rng(seed);
    for (auto& np : w.params()) {
        if (np.name.substr(np.name.size() - 5) == ".bias") continue;
        Tensor<T>& k = *np.tensor;
        const double fan_in = static_cast<double>(k.shape[0]) * k.shape[1] * k.shape[2];
        const double fan_out = static_cast<double>(k.shape[0]) * k.shape[1] * k.shape[3];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (T& x : k.data) x = static_cast<T>(dist(rng));
    }
    return w;
}

template <class T>
UNetWeights<T> zero_like(const UNetWeights<T>& w) {
    UNetWeights<T> z = w;
    for (auto& np : z.params()) np.tensor->fill(static_cast<T>(0));
    return z;
}

// ---------------------------------------------------------------------------
// TCN bottleneck block: four 1x3 convolutions with time dilations 1,2,4,8,
// ReLU after each, and a residual connection around the whole block.

template <class T>
struct TcnCache {
    Tensor<T> input;
    std::array<Tensor<T>, 4> activations;  // post-ReLU output of each conv
};

template <class T>
Tensor<T> tcn_block(const Tensor<T>& input, const std::array<ConvParam<T>, 4>& params,
                    TcnCache<T>* cache = nullptr) {
    Tensor<T> x = input;
    TcnCache<T> local;
    for (int i = 0; i < 4; ++i) {
        const Dilation dil{1, UNetConfig::kTcnDilations[static_cast<std::size_t>(i)]};
        x = relu(conv2d(x, params[i].kernel, params[i].bias, dil));
        if (cache) local.activations[i] = x;
    }
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += input.data[i];
    if (cache) {
        local.input = input;
        *cache = std::move(local);
    }
    return x;
}

template <class T>
struct TcnGrads {
    Tensor<T> input;
    std::array<ConvParam<T>, 4> params;
};

template <class T>
TcnGrads<T> tcn_block_backward(const std::array<ConvParam<T>, 4>& params,
                               const TcnCache<T>& cache, const Tensor<T>& grad_out) {
    TcnGrads<T> g;
    Tensor<T> gx = grad_out;
    for (int i = 3; i >= 0; --i) {
        const Dilation dil{1, UNetConfig::kTcnDilations[static_cast<std::size_t>(i)]};
        gx = relu_backward(cache.activations[i], gx);
        const Tensor<T>& conv_in = (i == 0) ? cache.input : cache.activations[i - 1];
        ConvGrads<T> cg = conv2d_backward(conv_in, params[i].kernel, gx, dil);
        g.params[i] = {std::move(cg.kernel), std::move(cg.bias)};
        gx = std::move(cg.input);
    }
    // residual path
    for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += grad_out.data[i];
    g.input = std::move(gx);
    return g;
}

// ---------------------------------------------------------------------------
// Full forward pass.

template <class T>
struct UNetCache {
    int in_freq = 0, in_time = 0;  // unpadded input dims
    Tensor<T> input;               // normalized, padded (1,Fp,Tp,1)
    Tensor<T> e1, p1, e2, p2, e3, p3;
    TcnCache<T> tcn;
    Tensor<T> tcn_out;
    MhaCache<T> mha;
    Tensor<T> attn_out;
    Tensor<T> d1_cat, d1, d2_cat, d2, d3_cat, d3;
    Tensor<T> mask;                // sigmoid output, padded
};

namespace detail {

template <class T>
Tensor<T> pad_input(const Grid<T>& mag, int Fp, int Tp, T inv_peak) {
    Tensor<T> x(1, Fp, Tp, 1);
    for (int f = 0; f < mag.rows; ++f)
        for (int t = 0; t < mag.cols; ++t)
            x.at(0, f, t, 0) = mag.at(f, t) * inv_peak;
    return x;
}

}  // namespace detail

// Predict a residual mask for a magnitude grid. The input is divided by its
// peak (floor 1e-8), zero-padded up to the architecture's freq size and the
// next time multiple of 8, then cropped back after the sigmoid head. Output
// entries are strictly inside (0,1).
template <class T>
Grid<T> unet_forward(const UNetWeights<T>& w, const Grid<T>& reverb_mag,
                     UNetCache<T>* cache = nullptr, bool check_finite = false) {
    validate_weights(w);
    const int F = reverb_mag.rows, Tm = reverb_mag.cols;
    const int Fp = w.config.padded_freq();
    if (F > Fp || F <= Fp - 8)
        throw std::invalid_argument("unet_forward: input rows do not match configured freq_bins");
    if (Tm < 1) throw std::invalid_argument("unet_forward: empty input");
    if (!all_finite(reverb_mag.v))
        throw std::invalid_argument("unet_forward: non-finite input magnitude");
    const int Tp = ((Tm + 7) / 8) * 8;

    T peak = reverb_mag.max_abs();
    if (peak < static_cast<T>(1e-8)) peak = static_cast<T>(1e-8);
    const T inv_peak = static_cast<T>(1) / peak;

    UNetCache<T> c;
    c.in_freq = F;
    c.in_time = Tm;
    c.input = detail::pad_input(reverb_mag, Fp, Tp, inv_peak);

    auto maybe_check = [&](const Tensor<T>& t, const char* name) {
        if (check_finite) require_finite(t, name);
    };

    c.e1 = relu(conv2d(c.input, w.enc1.kernel, w.enc1.bias));
    maybe_check(c.e1, "enc1");
    c.p1 = maxpool2(c.e1);
    c.e2 = relu(conv2d(c.p1, w.enc2.kernel, w.enc2.bias));
    maybe_check(c.e2, "enc2");
    c.p2 = maxpool2(c.e2);
    c.e3 = relu(conv2d(c.p2, w.enc3.kernel, w.enc3.bias));
    maybe_check(c.e3, "enc3");
    c.p3 = maxpool2(c.e3);

    c.tcn_out = tcn_block(c.p3, w.tcn, cache ? &c.tcn : nullptr);
    maybe_check(c.tcn_out, "tcn");
    c.attn_out = multi_head_attention(c.tcn_out, w.config.attention, w.attn,
                                      cache ? &c.mha : nullptr);
    maybe_check(c.attn_out, "attention");

    c.d1_cat = concat_channels(upsample2(c.attn_out), c.e3);
    c.d1 = relu(conv2d(c.d1_cat, w.dec1.kernel, w.dec1.bias));
    maybe_check(c.d1, "dec1");
    c.d2_cat = concat_channels(upsample2(c.d1), c.e2);
    c.d2 = relu(conv2d(c.d2_cat, w.dec2.kernel, w.dec2.bias));
    maybe_check(c.d2, "dec2");
    c.d3_cat = concat_channels(upsample2(c.d2), c.e1);
    c.d3 = relu(conv2d(c.d3_cat, w.dec3.kernel, w.dec3.bias));
    maybe_check(c.d3, "dec3");

    c.mask = sigmoid(conv2d(c.d3, w.out.kernel, w.out.bias));
    maybe_check(c.mask, "out");

    Grid<T> mask(F, Tm);
    for (int f = 0; f < F; ++f)
        for (int t = 0; t < Tm; ++t) mask.at(f, t) = c.mask.at(0, f, t, 0);
    if (cache) *cache = std::move(c);
    return mask;
}

// Gradient of a scalar loss w.r.t. every parameter, given dLoss/dMask.
template <class T>
UNetWeights<T> unet_backward(const UNetWeights<T>& w, const UNetCache<T>& c,
                             const Grid<T>& grad_mask) {
    if (grad_mask.rows != c.in_freq || grad_mask.cols != c.in_time)
        throw std::invalid_argument("unet_backward: grad shape mismatch");
    UNetWeights<T> g = zero_like(w);

    // crop adjoint: padded region receives zero gradient
    Tensor<T> gm(1, c.mask.freq(), c.mask.time(), 1);
    for (int f = 0; f < c.in_freq; ++f)
        for (int t = 0; t < c.in_time; ++t) gm.at(0, f, t, 0) = grad_mask.at(f, t);

    Tensor<T> gl = sigmoid_backward(c.mask, gm);
    ConvGrads<T> cg = conv2d_backward(c.d3, w.out.kernel, gl);
    g.out = {std::move(cg.kernel), std::move(cg.bias)};

    Tensor<T> gd3 = relu_backward(c.d3, cg.input);
    cg = conv2d_backward(c.d3_cat, w.dec3.kernel, gd3);
    g.dec3 = {std::move(cg.kernel), std::move(cg.bias)};
    auto [g_up3, g_e1_skip] = concat_channels_backward(cg.input, w.config.channels[1]);

    Tensor<T> gd2 = relu_backward(c.d2, upsample2_backward(g_up3));
    cg = conv2d_backward(c.d2_cat, w.dec2.kernel, gd2);
    g.dec2 = {std::move(cg.kernel), std::move(cg.bias)};
    auto [g_up2, g_e2_skip] = concat_channels_backward(cg.input, w.config.channels[2]);

    Tensor<T> gd1 = relu_backward(c.d1, upsample2_backward(g_up2));
    cg = conv2d_backward(c.d1_cat, w.dec1.kernel, gd1);
    g.dec1 = {std::move(cg.kernel), std::move(cg.bias)};
    auto [g_up1, g_e3_skip] = concat_channels_backward(cg.input, w.config.channels[2]);

    MhaGrads<T> ag = multi_head_attention_backward(w.config.attention, w.attn, c.mha,
                                                   upsample2_backward(g_up1));
    g.attn = std::move(ag.params);

    TcnGrads<T> tg = tcn_block_backward(w.tcn, c.tcn, ag.input);
    g.tcn = std::move(tg.params);

    Tensor<T> ge3 = maxpool2_backward(c.e3, tg.input);
    for (std::size_t i = 0; i < ge3.data.size(); ++i) ge3.data[i] += g_e3_skip.data[i];
    cg = conv2d_backward(c.p2, w.enc3.kernel, relu_backward(c.e3, ge3));
    g.enc3 = {std::move(cg.kernel), std::move(cg.bias)};

    Tensor<T> ge2 = maxpool2_backward(c.e2, cg.input);
    for (std::size_t i = 0; i < ge2.data.size(); ++i) ge2.data[i] += g_e2_skip.data[i];
    cg = conv2d_backward(c.p1, w.enc2.kernel, relu_backward(c.e2, ge2));
    g.enc2 = {std::move(cg.kernel), std::move(cg.bias)};

    Tensor<T> ge1 = maxpool2_backward(c.e1, cg.input);
    for (std::size_t i = 0; i < ge1.data.size(); ++i) ge1.data[i] += g_e1_skip.data[i];
    cg = conv2d_backward(c.input, w.enc1.kernel, relu_backward(c.e1, ge1));
    g.enc1 = {std::move(cg.kernel), std::move(cg.bias)};

    return g;
}

// ---------------------------------------------------------------------------
// Serialization: text manifest (name, shape, byte offset into the payload)
// followed by a little-endian float32 payload. Single precision on disk
// regardless of the in-memory scalar.

inline constexpr const char* kWeightsMagic = "DRYMASK-UNET v1";

template <class T>
void save_weights(const UNetWeights<T>& w, const std::filesystem::path& path) {
    validate_weights(w);
    std::ostringstream head;
    head << kWeightsMagic << '\n';
    head << "meta freq_bins " << w.config.freq_bins << '\n';
    head << "meta heads " << w.config.attention.heads << '\n';
    head << "meta key_dim " << w.config.attention.key_dim << '\n';

    std::vector<float> payload;
    for (const auto& np : w.params()) {
        const Tensor<T>& t = *np.tensor;
        head << "tensor " << np.name << ' ' << t.shape[0] << ' ' << t.shape[1] << ' '
             << t.shape[2] << ' ' << t.shape[3] << ' ' << payload.size() * sizeof(float) << '\n';
        for (const T& x : t.data) payload.push_back(static_cast<float>(x));
    }
    head << "payload " << payload.size() * sizeof(float) << '\n';

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("save_weights: cannot open " + tmp.string());
        const std::string h = head.str();
        f.write(h.data(), static_cast<std::streamsize>(h.size()));
        f.write(reinterpret_cast<const char*>(payload.data()),
                static_cast<std::streamsize>(payload.size() * sizeof(float)));
        if (!f) throw DataError("save_weights: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);  // atomic publish
}

template <class T = Real>
UNetWeights<T> load_weights(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_weights: cannot open " + path.string());

    std::string line;
    if (!std::getline(f, line) || line != kWeightsMagic)
        throw FormatError("load_weights: bad magic in " + path.string());

    UNetConfig cfg;
    cfg.channels = {0, 0, 0};
    struct Entry {
        std::string name;
        std::array<int, 4> shape;
        std::size_t offset;
    };
    std::vector<Entry> entries;
    std::size_t payload_bytes = 0;
    bool have_payload = false;

    while (std::getline(f, line)) {
        std::istringstream row(line);
        std::string tag;
        row >> tag;
        if (tag == "meta") {
            std::string key;
            long value;
            if (!(row >> key >> value)) throw FormatError("load_weights: bad meta line");
            if (key == "freq_bins") cfg.freq_bins = static_cast<int>(value);
            else if (key == "heads") cfg.attention.heads = static_cast<int>(value);
            else if (key == "key_dim") cfg.attention.key_dim = static_cast<int>(value);
            else throw FormatError("load_weights: unknown meta key " + key);
        } else if (tag == "tensor") {
            Entry e;
            if (!(row >> e.name >> e.shape[0] >> e.shape[1] >> e.shape[2] >> e.shape[3] >>
                  e.offset))
                throw FormatError("load_weights: bad tensor line");
            entries.push_back(std::move(e));
        } else if (tag == "payload") {
            if (!(row >> payload_bytes)) throw FormatError("load_weights: bad payload line");
            have_payload = true;
            break;
        } else {
            throw FormatError("load_weights: unexpected line: " + line);
        }
    }
    if (!have_payload) throw FormatError("load_weights: missing payload marker");
    if (payload_bytes % sizeof(float) != 0)
        throw FormatError("load_weights: payload size not a multiple of 4");

    std::vector<float> payload(payload_bytes / sizeof(float));
    f.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload_bytes));
    if (static_cast<std::size_t>(f.gcount()) != payload_bytes)
        throw FormatError("load_weights: truncated payload in " + path.string());

    // offsets must tile the payload exactly in declaration order
    std::size_t expect = 0;
    for (const Entry& e : entries) {
        if (e.offset != expect)
            throw ValidationError("load_weights: offset mismatch for " + e.name);
        std::size_t count = 1;
        for (int d : e.shape) {
            if (d < 1) throw ValidationError("load_weights: bad shape for " + e.name);
            count *= static_cast<std::size_t>(d);
        }
        expect += count * sizeof(float);
    }
    if (expect != payload_bytes)
        throw ValidationError("load_weights: payload size does not match declared shapes");

    // channel widths come from the encoder kernels
    UNetWeights<T> w;
    auto find = [&](const std::string& n) -> const Entry& {
        for (const Entry& e : entries)
            if (e.name == n) return e;
        throw ValidationError("load_weights: missing tensor " + n);
    };
    cfg.channels = {find("enc1.kernel").shape[3], find("enc2.kernel").shape[3],
                    find("enc3.kernel").shape[3]};
    w.config = cfg;

    auto named = w.params();
    if (named.size() != entries.size())
        throw ValidationError("load_weights: unexpected tensor count");
    for (auto& np : named) {
        const Entry& e = find(np.name);
        Tensor<T> t(e.shape[0], e.shape[1], e.shape[2], e.shape[3]);
        const float* src = payload.data() + e.offset / sizeof(float);
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<T>(src[i]);
        *np.tensor = std::move(t);
    }
    validate_weights(w);
    return w;
}

}  // namespace drymask
