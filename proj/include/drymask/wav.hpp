#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "drymask/audio.hpp"

namespace drymask {

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
    b.push_back((v >> 16) & 0xff);
    b.push_back((v >> 24) & 0xff);
}
inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

// Read a PCM WAV file. 16-bit samples are mapped to [-1, 1) by dividing by
// 32768; multi-channel content is averaged to mono.
template <class T = Real>
AudioBufferT<T> wav_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("wav_read: cannot open " + path.string());
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
        std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
        throw FormatError("wav_read: not a RIFF/WAVE file: " + path.string());

    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    bool have_fmt = false;
    const std::uint8_t* data_ptr = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= raw.size()) {
        const char* id = reinterpret_cast<const char*>(raw.data() + pos);
        const std::uint32_t sz = detail::get_u32(raw.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + sz > raw.size())
            throw FormatError("wav_read: truncated chunk in " + path.string());
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (sz < 16) throw FormatError("wav_read: fmt chunk too small");
            format_tag = detail::get_u16(raw.data() + body);
            channels = detail::get_u16(raw.data() + body + 2);
            sample_rate = detail::get_u32(raw.data() + body + 4);
            bits = detail::get_u16(raw.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = raw.data() + body;
            data_size = sz;
        }
        pos = body + sz + (sz & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data_ptr == nullptr)
        throw FormatError("wav_read: missing fmt/data chunk in " + path.string());
    if (format_tag != 1)
        throw UnsupportedFormatError("wav_read: only PCM (format 1) supported");
    if (bits != 16)
        throw UnsupportedFormatError("wav_read: only 16-bit samples supported");
    if (channels == 0 || sample_rate == 0)
        throw FormatError("wav_read: invalid fmt fields");

    const std::size_t frame_bytes = 2u * channels;
    const std::size_t n_frames = data_size / frame_bytes;
    std::vector<T> samples(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::uint8_t* p = data_ptr + i * frame_bytes + 2u * c;
            const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            acc += static_cast<double>(s) / 32768.0;
        }
        samples[i] = static_cast<T>(acc / channels);
    }
    return AudioBufferT<T>(std::move(samples), static_cast<int>(sample_rate));
}

// Write mono 16-bit PCM. Samples are clamped to [-1, 1] and quantized with
// rounding, so a write-then-read round trip stays within 1/32768.
template <class T>
void wav_write(const std::filesystem::path& path, const AudioBufferT<T>& audio) {
    const std::uint32_t n = static_cast<std::uint32_t>(audio.size());
    const std::uint32_t data_size = n * 2;

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    detail::put_u32(out, 16);
    detail::put_u16(out, 1);  // PCM
    detail::put_u16(out, 1);  // mono
    detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
    detail::put_u16(out, 2);   // block align
    detail::put_u16(out, 16);  // bits per sample
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::put_u32(out, data_size);

    for (std::uint32_t i = 0; i < n; ++i) {
        double x = static_cast<double>(audio.samples[i]);
        double q = std::nearbyint(x * 32768.0);
        if (q > 32767.0) q = 32767.0;
        if (q < -32768.0) q = -32768.0;
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("wav_write: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("wav_write: write failed for " + path.string());
}

}  // namespace drymask
