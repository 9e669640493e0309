#pragma once

#include <chrono>
#include <type_traits>
#include <filesystem>
#include <optional>

#include "drymask/dataset.hpp"
#include "drymask/metrics.hpp"
#include "drymask/postproc.hpp"
#include "drymask/trainer.hpp"

namespace drymask {

// Everything the end-to-end tool needs in one bundle.
struct PipelineConfig {
    StftConfig stft{512, 256};
    MaskConfig mask;
    LossConfig loss;
    TrainConfig train;
    PostprocConfig postproc;
    SrmrConfig srmr;
    UNetConfig unet;
    int sample_rate = 16000;
    std::size_t chunk_len = 16384;

    void validate() const {
        stft.validate();
        mask.validate();
        loss.validate();
        train.validate();
        postproc.validate();
        srmr.validate(sample_rate);
        unet.validate();
        if (chunk_len == 0 || chunk_len % static_cast<std::size_t>(stft.hop) != 0)
            throw std::invalid_argument("PipelineConfig: chunk_len must be a multiple of hop");
        if (unet.freq_bins != stft.bins())
            throw std::invalid_argument("PipelineConfig: unet freq_bins must equal stft bins");
    }

    std::size_t overlap_samples() const {
        return static_cast<std::size_t>(std::llround(postproc.chunk_overlap *
                                                     static_cast<double>(chunk_len)));
    }
};

enum class MaskMode { model, oracle, identity };

struct ChunkTimings {
    double stft_s = 0.0;
    double forward_s = 0.0;
    double post_s = 0.0;
    double total_s = 0.0;
    std::vector<double> chunk_s;  // wall time per chunk
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class T>
AudioBufferT<T> slice_chunk(const AudioBufferT<T>& audio, std::size_t start, std::size_t len) {
    AudioBufferT<T> chunk(std::vector<T>(len, static_cast<T>(0)), audio.sample_rate);
    if (start < audio.size())
        std::copy_n(audio.samples.begin() + start, std::min(len, audio.size() - start),
                    chunk.samples.begin());
    return chunk;
}

}  // namespace detail

// Chunked dereverberation: overlapping chunks are independently processed
// (STFT, mask, spectral gate, ISTFT), cross-faded back together, trimmed to
// the input length, then EQ-boosted. `clean` is required for oracle masks.
template <class T>
AudioBufferT<T> process_buffer(const AudioBufferT<T>& input, const PipelineConfig& cfg,
                               std::type_identity_t<const UNetWeights<T>*> weights, MaskMode mode,
                               std::type_identity_t<const AudioBufferT<T>*> clean = nullptr,
                               ChunkTimings* timing = nullptr) {
    cfg.validate();
    if (input.samples.empty()) return input;
    if (mode == MaskMode::model && weights == nullptr)
        throw std::invalid_argument("process_buffer: model mode needs weights");
    if (mode == MaskMode::oracle &&
        (clean == nullptr || clean->size() != input.size()))
        throw std::invalid_argument("process_buffer: oracle mode needs a matching clean signal");

    const std::size_t L = cfg.chunk_len;
    const std::size_t ov = cfg.overlap_samples();
    const std::size_t step = L - ov;
    const std::size_t n_chunks = input.size() <= L
                                     ? 1
                                     : 1 + (input.size() - L + step - 1) / step;

    StftConfigT<T> stft_cfg(cfg.stft.fft_size, cfg.stft.hop);
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<AudioBufferT<T>> processed;
    processed.reserve(n_chunks);
    for (std::size_t i = 0; i < n_chunks; ++i) {
        const auto t_chunk = std::chrono::steady_clock::now();
        const AudioBufferT<T> chunk = detail::slice_chunk(input, i * step, L);

        auto t0 = std::chrono::steady_clock::now();
        const SpectrogramT<T> spec = stft(chunk, stft_cfg);
        if (timing) timing->stft_s += detail::seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        Grid<T> mask(spec.freq_bins(), spec.frames(), static_cast<T>(0));
        if (mode == MaskMode::model) {
            mask = unet_forward(*weights, magnitude(spec));
        } else if (mode == MaskMode::oracle) {
            const AudioBufferT<T> clean_chunk = detail::slice_chunk(*clean, i * step, L);
            mask = oracle_mask(magnitude(spec), magnitude(stft(clean_chunk, stft_cfg)),
                               MaskConfigT<T>{static_cast<T>(cfg.mask.epsilon)});
        }
        if (timing) timing->forward_s += detail::seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        AudioBufferT<T> rebuilt = istft(spectral_gate(apply_mask(spec, mask), cfg.postproc));
        rebuilt.samples.resize(L, static_cast<T>(0));
        processed.push_back(std::move(rebuilt));
        if (timing) {
            timing->post_s += detail::seconds_since(t0);
            timing->chunk_s.push_back(detail::seconds_since(t_chunk));
        }
    }

    const auto t_post = std::chrono::steady_clock::now();
    AudioBufferT<T> stitched =
        n_chunks == 1 ? std::move(processed.front()) : stitch_chunks(processed, ov);
    stitched.samples.resize(input.size());
    AudioBufferT<T> out = eq_boost(stitched, cfg.postproc);
    if (timing) {
        timing->post_s += detail::seconds_since(t_post);
        timing->total_s += detail::seconds_since(t_start);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset synthesis.

struct SynthReport {
    std::size_t files_read = 0;
    std::size_t pairs_written = 0;
    std::vector<std::string> warnings;
};

// Convolve every WAV in clean_dir with a seeded-random choice among n_rirs
// synthetic RIRs (T60 evenly spaced over 0.5..3.5 s), chunk into pairs and
// write them plus the manifest into out_dir.
template <class T = Real>
SynthReport synth_dataset(const std::filesystem::path& clean_dir,
                          const std::filesystem::path& out_dir, int n_rirs, std::uint64_t seed,
                          const PipelineConfig& cfg) {
    cfg.validate();
    if (n_rirs < 1) throw std::invalid_argument("synth_dataset: n_rirs must be >= 1");
    if (!std::filesystem::is_directory(clean_dir))
        throw DataError("synth_dataset: not a directory: " + clean_dir.string());

    std::vector<std::filesystem::path> inputs;
    for (const auto& e : std::filesystem::directory_iterator(clean_dir))
        if (e.is_regular_file() && e.path().extension() == ".wav") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty())
        throw DataError("synth_dataset: no wav files in " + clean_dir.string());

    std::filesystem::create_directories(out_dir);

    struct RirSlot {
        RoomImpulseResponseT<T> rir;
        double t60;
    };
    std::vector<RirSlot> rirs;
    for (int i = 0; i < n_rirs; ++i) {
        const double t60 =
            n_rirs == 1 ? 2.0 : 0.5 + 3.0 * static_cast<double>(i) / (n_rirs - 1);
        const auto len = static_cast<std::size_t>(std::llround(1.1 * t60 * cfg.sample_rate));
        rirs.push_back({synth_rir<T>(t60, len, seed + static_cast<std::uint64_t>(i),
                                     cfg.sample_rate),
                        t60});
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n_rirs - 1);

    SynthReport report;
    std::vector<ManifestEntry> manifest;
    for (const auto& path : inputs) {
        AudioBufferT<T> clean;
        try {
            clean = wav_read<T>(path);
            if (clean.sample_rate != cfg.sample_rate)
                throw DataError("sample rate " + std::to_string(clean.sample_rate) +
                                " != " + std::to_string(cfg.sample_rate));
            if (clean.size() < cfg.chunk_len / 4)
                throw DataError("file too short");
        } catch (const std::exception& e) {
            report.warnings.push_back(path.filename().string() + ": " + e.what());
            continue;
        }
        ++report.files_read;

        const RirSlot& slot = rirs[static_cast<std::size_t>(pick(rng))];
        const AudioBufferT<T> reverb = convolve_rir(clean, slot.rir);
        const auto pairs = chunk_pairs(clean, reverb, cfg.chunk_len, slot.rir.label);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const std::string id = path.stem().string() + "_" + std::to_string(k);
            save_pair(out_dir, id, pairs[k]);
            manifest.push_back({id, slot.rir.label, slot.t60});
            ++report.pairs_written;
        }
    }
    if (report.files_read == 0)
        throw DataError("synth_dataset: no readable wav files in " + clean_dir.string());
    write_manifest(out_dir / "manifest.txt", manifest);
    return report;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct EvalRow {
    std::string id;
    double srmr_reverb = 0.0;
    double srmr_output = 0.0;
    double srmr_delta = 0.0;
    double mse_reverb = 0.0;
    double mse_output = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double mean_srmr_reverb = 0.0;
    double mean_srmr_output = 0.0;
    double mean_srmr_delta = 0.0;
    double mean_mse_reverb = 0.0;
    double mean_mse_output = 0.0;
};

template <class T>
void write_magnitude_grid(const std::filesystem::path& path, const Grid<T>& mag) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_magnitude_grid: cannot open " + path.string());
    for (int f = 0; f < mag.rows; ++f) {
        for (int t = 0; t < mag.cols; ++t) {
            if (t) out << ' ';
            out << mag.at(f, t);
        }
        out << '\n';
    }
}

// Per-pair SRMR (reverberant vs processed) and spectral MSE to clean, plus
// aggregate means. Optionally exports magnitude text grids of the first pair
// (clean / reverberant / output) for external plotting.
template <class T = Real>
EvalReport eval_dataset(const std::filesystem::path& dataset_dir, const PipelineConfig& cfg,
                        const UNetWeights<T>* weights, MaskMode mode,
                        const std::optional<std::filesystem::path>& grid_dir = std::nullopt) {
    cfg.validate();
    const auto manifest_path = dataset_dir / "manifest.txt";
    if (!std::filesystem::exists(manifest_path))
        throw DataError("eval_dataset: missing manifest: " + manifest_path.string());
    const auto manifest = read_manifest(manifest_path);
    if (manifest.empty()) throw DataError("eval_dataset: empty manifest");

    StftConfigT<T> stft_cfg(cfg.stft.fft_size, cfg.stft.hop);
    EvalReport report;
    bool exported = false;
    for (const auto& entry : manifest) {
        const TrainingPairT<T> pair = load_pair<T>(dataset_dir, entry);
        const AudioBufferT<T> out =
            process_buffer(pair.reverberant, cfg, weights, mode, &pair.clean);

        const SpectrogramT<T> clean_spec = stft(pair.clean, stft_cfg);
        const SpectrogramT<T> reverb_spec = stft(pair.reverberant, stft_cfg);
        const SpectrogramT<T> out_spec = stft(out, stft_cfg);

        EvalRow row;
        row.id = entry.id;
        row.srmr_reverb = srmr(pair.reverberant, cfg.srmr);
        row.srmr_output = srmr(out, cfg.srmr);
        row.srmr_delta = row.srmr_output - row.srmr_reverb;
        row.mse_reverb = spectral_mse(reverb_spec, clean_spec);
        row.mse_output = spectral_mse(out_spec, clean_spec);
        report.rows.push_back(row);

        if (grid_dir && !exported) {
            std::filesystem::create_directories(*grid_dir);
            write_magnitude_grid(*grid_dir / (entry.id + "_clean.txt"), magnitude(clean_spec));
            write_magnitude_grid(*grid_dir / (entry.id + "_reverb.txt"), magnitude(reverb_spec));
            write_magnitude_grid(*grid_dir / (entry.id + "_output.txt"), magnitude(out_spec));
            exported = true;
        }
    }

    const double n = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
        report.mean_srmr_reverb += r.srmr_reverb / n;
        report.mean_srmr_output += r.srmr_output / n;
        report.mean_srmr_delta += r.srmr_delta / n;
        report.mean_mse_reverb += r.mse_reverb / n;
        report.mean_mse_output += r.mse_output / n;
    }
    return report;
}

inline void write_eval_table(std::ostream& out, const EvalReport& report) {
    out << "id srmr_reverb srmr_output srmr_delta mse_reverb mse_output\n";
    for (const auto& r : report.rows) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s %.6g %.6g %.6g %.6g %.6g\n", r.id.c_str(),
                      r.srmr_reverb, r.srmr_output, r.srmr_delta, r.mse_reverb, r.mse_output);
        out << buf;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "mean %.6g %.6g %.6g %.6g %.6g\n", report.mean_srmr_reverb,
                  report.mean_srmr_output, report.mean_srmr_delta, report.mean_mse_reverb,
                  report.mean_mse_output);
    out << buf;
}

// ---------------------------------------------------------------------------
// Latency benchmark. Reports only; asserts nothing.

struct BenchReport {
    int repeats = 0;
    std::size_t chunks = 0;
    double audio_s = 0.0;
    std::vector<double> run_total_s;      // one wall-clock sample per repeat
    double median_total_s = 0.0;
    double median_chunk_s = 0.0;
    double real_time_factor = 0.0;        // median compute time / audio time
    double stft_s = 0.0;                  // per-repeat means
    double forward_s = 0.0;
    double post_s = 0.0;
};

template <class T = Real>
BenchReport bench_pipeline(const AudioBufferT<T>& input, const PipelineConfig& cfg,
                           std::type_identity_t<const UNetWeights<T>*> weights, MaskMode mode,
                           int repeats) {
    if (repeats < 1) throw std::invalid_argument("bench_pipeline: repeats must be >= 1");
    BenchReport report;
    report.repeats = repeats;
    report.audio_s = input.duration_s();

    std::vector<double> all_chunk_s;
    double stft_acc = 0, fwd_acc = 0, post_acc = 0;
    for (int r = 0; r < repeats; ++r) {
        ChunkTimings t;
        (void)process_buffer(input, cfg, weights, mode, nullptr, &t);
        report.run_total_s.push_back(t.total_s);
        all_chunk_s.insert(all_chunk_s.end(), t.chunk_s.begin(), t.chunk_s.end());
        report.chunks = t.chunk_s.size();
        stft_acc += t.stft_s;
        fwd_acc += t.forward_s;
        post_acc += t.post_s;
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.empty() ? 0.0 : v[v.size() / 2];
    };
    report.median_total_s = median(report.run_total_s);
    report.median_chunk_s = median(all_chunk_s);
    report.real_time_factor = report.audio_s > 0 ? report.median_total_s / report.audio_s : 0.0;
    report.stft_s = stft_acc / repeats;
    report.forward_s = fwd_acc / repeats;
    report.post_s = post_acc / repeats;
    return report;
}

}  // namespace drymask
