// drymask: residual-mask vocal dereverberation tool.
//
// Subcommands: synth (build a reverberant/clean dataset), train, infer,
// eval, bench. All pipeline parameters can come from a config file
// (--config, INI keys matching the long option names); command-line flags
// override file values.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "drymask/drymask.hpp"

namespace {

using namespace drymask;

struct CliOptions {
    PipelineConfig cfg;
    std::vector<int> enc_channels{16, 32, 64};
    double td_max = 1.0;
    std::uint64_t seed = 42;

    // synth
    std::string clean_dir, out_dir;
    int n_rirs = 13;

    // train
    std::string dataset_dir, out_weights;

    // infer / bench / eval
    std::string input_wav, output_wav, weights_path, clean_wav;
    bool oracle = false;
    bool identity = false;
    int repeats = 10;
    std::string table_out, grid_dir;
};

void add_pipeline_options(CLI::App& app, CliOptions& o) {
    app.add_option("--sample-rate", o.cfg.sample_rate, "Sample rate in Hz")->capture_default_str();
    app.add_option("--fft-size", o.cfg.stft.fft_size, "STFT frame size")->capture_default_str();
    app.add_option("--hop", o.cfg.stft.hop, "STFT hop length")->capture_default_str();
    app.add_option("--chunk-len", o.cfg.chunk_len, "Streaming chunk length in samples")
        ->capture_default_str();
    app.add_option("--chunk-overlap", o.cfg.postproc.chunk_overlap,
                   "Chunk overlap fraction (0, 0.5)")
        ->capture_default_str();
    app.add_option("--mask-eps", o.cfg.mask.epsilon, "Oracle mask division guard")
        ->capture_default_str();
    app.add_option("--gate-threshold-db", o.cfg.postproc.gate_threshold_db,
                   "Spectral gate threshold above the row noise floor")
        ->capture_default_str();
    app.add_option("--gate-floor-percentile", o.cfg.postproc.gate_floor_percentile,
                   "Quantile used as the per-row noise floor")
        ->capture_default_str();
    app.add_option("--eq-shelf-freq", o.cfg.postproc.eq_shelf_freq, "High-shelf corner in Hz")
        ->capture_default_str();
    app.add_option("--eq-shelf-gain-db", o.cfg.postproc.eq_shelf_gain_db, "High-shelf gain in dB")
        ->capture_default_str();
    app.add_option("--gauss-center", o.cfg.loss.gauss_center, "Loss emphasis center in Hz")
        ->capture_default_str();
    app.add_option("--gauss-sigma", o.cfg.loss.gauss_sigma, "Loss emphasis width in Hz")
        ->capture_default_str();
    app.add_option("--gauss-gain", o.cfg.loss.gauss_gain, "Loss emphasis gain")
        ->capture_default_str();
    app.add_option("--bce-weight", o.cfg.loss.bce_weight, "Mask BCE weight")
        ->capture_default_str();
    app.add_option("--mag-weight", o.cfg.loss.mag_weight, "Residual magnitude loss weight")
        ->capture_default_str();
    app.add_option("--clamp-eps", o.cfg.loss.clamp_eps, "BCE prediction clamp")
        ->capture_default_str();
    app.add_option("--td-max", o.td_max, "Final time-domain loss weight")->capture_default_str();
    app.add_option("--lr", o.cfg.train.learning_rate, "Learning rate")->capture_default_str();
    app.add_option("--batch-size", o.cfg.train.batch_size, "Mini-batch size")
        ->capture_default_str();
    app.add_option("--epochs", o.cfg.train.epochs, "Training epochs")->capture_default_str();
    app.add_option("--adam-beta1", o.cfg.train.adam_beta1, "Adam beta1")->capture_default_str();
    app.add_option("--adam-beta2", o.cfg.train.adam_beta2, "Adam beta2")->capture_default_str();
    app.add_option("--adam-eps", o.cfg.train.adam_eps, "Adam epsilon")->capture_default_str();
    app.add_option("--enc-channels", o.enc_channels, "Encoder channel widths (3 values)")
        ->expected(3)
        ->capture_default_str();
    app.add_option("--heads", o.cfg.unet.attention.heads, "Attention heads")
        ->capture_default_str();
    app.add_option("--key-dim", o.cfg.unet.attention.key_dim, "Attention key dimension")
        ->capture_default_str();
    app.add_option("--srmr-bands", o.cfg.srmr.acoustic_bands, "SRMR acoustic band count")
        ->capture_default_str();
    app.add_option("--srmr-band-lo", o.cfg.srmr.band_lo, "SRMR lowest band center in Hz")
        ->capture_default_str();
    app.add_option("--srmr-band-hi", o.cfg.srmr.band_hi, "SRMR highest band center in Hz")
        ->capture_default_str();
    app.add_option("--srmr-mod-bands", o.cfg.srmr.modulation_bands, "SRMR modulation band count")
        ->capture_default_str();
    app.add_option("--srmr-mod-lo", o.cfg.srmr.mod_lo, "SRMR lowest modulation center in Hz")
        ->capture_default_str();
    app.add_option("--srmr-mod-hi", o.cfg.srmr.mod_hi, "SRMR highest modulation center in Hz")
        ->capture_default_str();
    app.add_option("--srmr-env-lowpass", o.cfg.srmr.envelope_lowpass,
                   "SRMR envelope low-pass in Hz")
        ->capture_default_str();
    app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

// Finalize derived fields after flags/config merge.
void finalize(CliOptions& o) {
    o.cfg.stft = StftConfig(o.cfg.stft.fft_size, o.cfg.stft.hop);
    o.cfg.unet.freq_bins = o.cfg.stft.bins();
    o.cfg.unet.channels = {o.enc_channels[0], o.enc_channels[1], o.enc_channels[2]};
    o.cfg.train.seed = o.seed;
    o.cfg.loss.td_weight_schedule =
        LossConfig::linear_td_schedule(o.td_max, o.cfg.train.epochs - 1);
    o.cfg.validate();
}

AudioBuffer read_input(const CliOptions& o, const std::string& path) {
    AudioBuffer audio = wav_read(path);
    if (audio.sample_rate != o.cfg.sample_rate)
        throw DataError("input sample rate " + std::to_string(audio.sample_rate) +
                        " != configured " + std::to_string(o.cfg.sample_rate));
    return audio;
}

MaskMode pick_mode(const CliOptions& o) {
    if (o.oracle && o.identity)
        throw CLI::ValidationError("--oracle and --identity are mutually exclusive");
    if (o.oracle) return MaskMode::oracle;
    if (o.identity) return MaskMode::identity;
    return MaskMode::model;
}

int cmd_synth(CliOptions& o) {
    finalize(o);
    const SynthReport rep = synth_dataset(o.clean_dir, o.out_dir, o.n_rirs, o.seed, o.cfg);
    for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("synth: %zu files -> %zu pairs in %s\n", rep.files_read, rep.pairs_written,
                o.out_dir.c_str());
    return 0;
}

int cmd_train(CliOptions& o) {
    finalize(o);
    const auto manifest = read_manifest(std::filesystem::path(o.dataset_dir) / "manifest.txt");
    std::vector<TrainingPair> dataset;
    dataset.reserve(manifest.size());
    for (const auto& e : manifest) dataset.push_back(load_pair(o.dataset_dir, e));
    if (dataset.size() < static_cast<std::size_t>(o.cfg.train.batch_size))
        throw DataError("train: dataset smaller than one batch (" +
                        std::to_string(dataset.size()) + " pairs)");

    const auto result = train(dataset, o.cfg.train, o.cfg.loss, o.cfg.stft, o.cfg.unet);
    save_weights(result.best_weights, o.out_weights);

    const std::string log_path = o.out_weights + ".log";
    std::ofstream log(log_path, std::ios::trunc);
    log << "# drymask training log\n";
    log << "# learning_rate " << o.cfg.train.learning_rate << " batch_size "
        << o.cfg.train.batch_size << " epochs " << o.cfg.train.epochs << " seed " << o.seed
        << '\n';
    log << "# columns: epoch bce mag td total val_total lambda\n";
    for (const auto& e : result.log) log << e.to_line() << '\n';

    std::printf("train: %zu pairs, %d epochs; best epoch %d (val %.6g)\n", dataset.size(),
                o.cfg.train.epochs, result.best_epoch, result.best_val);
    std::printf("train: weights -> %s, log -> %s\n", o.out_weights.c_str(), log_path.c_str());
    return 0;
}

int cmd_infer(CliOptions& o) {
    finalize(o);
    const MaskMode mode = pick_mode(o);
    const AudioBuffer input = read_input(o, o.input_wav);

    UNetWeights<Real> weights;
    if (mode == MaskMode::model) weights = load_weights<Real>(o.weights_path);

    AudioBuffer clean;
    if (mode == MaskMode::oracle) {
        clean = read_input(o, o.clean_wav);
        if (clean.size() != input.size())
            throw DataError("infer: --clean length does not match input");
    }

    ChunkTimings timing;
    const AudioBuffer out =
        process_buffer(input, o.cfg, mode == MaskMode::model ? &weights : nullptr, mode,
                       mode == MaskMode::oracle ? &clean : nullptr, &timing);
    wav_write(o.output_wav, out);

    std::printf("infer: %zu samples (%.2f s) -> %s\n", out.size(), out.duration_s(),
                o.output_wav.c_str());
    for (std::size_t i = 0; i < timing.chunk_s.size(); ++i)
        std::printf("chunk %zu %.3f ms\n", i, timing.chunk_s[i] * 1e3);
    std::printf("total %.3f ms for %.2f s audio (rtf %.4f)\n", timing.total_s * 1e3,
                input.duration_s(), timing.total_s / input.duration_s());
    return 0;
}

int cmd_eval(CliOptions& o) {
    finalize(o);
    const MaskMode mode = pick_mode(o);
    UNetWeights<Real> weights;
    if (mode == MaskMode::model) weights = load_weights<Real>(o.weights_path);

    std::optional<std::filesystem::path> grids;
    if (!o.grid_dir.empty()) grids = o.grid_dir;

    const EvalReport report = eval_dataset<Real>(
        o.dataset_dir, o.cfg, mode == MaskMode::model ? &weights : nullptr, mode, grids);

    if (o.table_out.empty()) {
        write_eval_table(std::cout, report);
    } else {
        std::ofstream out(o.table_out, std::ios::trunc);
        if (!out) throw DataError("eval: cannot open " + o.table_out);
        write_eval_table(out, report);
        std::printf("eval: %zu rows -> %s\n", report.rows.size(), o.table_out.c_str());
    }
    return 0;
}

int cmd_bench(CliOptions& o) {
    finalize(o);
    const MaskMode mode = pick_mode(o);
    if (mode == MaskMode::oracle)
        throw CLI::ValidationError("bench supports --identity or model weights, not --oracle");
    const AudioBuffer input = read_input(o, o.input_wav);
    UNetWeights<Real> weights;
    if (mode == MaskMode::model) weights = load_weights<Real>(o.weights_path);

    const BenchReport rep = bench_pipeline<Real>(
        input, o.cfg, mode == MaskMode::model ? &weights : nullptr, mode, o.repeats);

    std::printf("bench: %d repeats, %zu chunks, %.2f s audio\n", rep.repeats, rep.chunks,
                rep.audio_s);
    for (int i = 0; i < rep.repeats; ++i)
        std::printf("run %d total %.3f ms\n", i, rep.run_total_s[i] * 1e3);
    std::printf("median chunk %.3f ms, median total %.3f ms\n", rep.median_chunk_s * 1e3,
                rep.median_total_s * 1e3);
    std::printf("real-time factor %.4f\n", rep.real_time_factor);
    std::printf("breakdown per run: stft %.3f ms, forward %.3f ms, post %.3f ms\n",
                rep.stft_s * 1e3, rep.forward_s * 1e3, rep.post_s * 1e3);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Residual-mask vocal dereverberation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (INI keys match option names)");

    CliOptions o;
    add_pipeline_options(app, o);

    CLI::App* synth = app.add_subcommand("synth", "Synthesize a reverberant/clean dataset");
    synth->add_option("--clean-dir", o.clean_dir, "Directory of clean WAV files")->required();
    synth->add_option("--out-dir", o.out_dir, "Output dataset directory")->required();
    synth->add_option("--n-rirs", o.n_rirs, "Number of synthetic RIRs")->capture_default_str();

    CLI::App* train = app.add_subcommand("train", "Train the mask predictor");
    train->add_option("--dataset", o.dataset_dir, "Dataset directory with manifest.txt")
        ->required();
    train->add_option("--out-weights", o.out_weights, "Checkpoint output path")->required();

    CLI::App* infer = app.add_subcommand("infer", "Dereverberate a WAV file");
    infer->add_option("--input", o.input_wav, "Input WAV")->required();
    infer->add_option("--output", o.output_wav, "Output WAV")->required();
    infer->add_option("--weights", o.weights_path, "Weights file");
    infer->add_flag("--oracle", o.oracle, "Use the oracle mask (needs --clean)");
    infer->add_flag("--identity", o.identity, "Zero mask (pass-through control)");
    infer->add_option("--clean", o.clean_wav, "Clean reference for --oracle");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate on a dataset");
    eval->add_option("--dataset", o.dataset_dir, "Dataset directory with manifest.txt")
        ->required();
    eval->add_option("--weights", o.weights_path, "Weights file");
    eval->add_flag("--oracle", o.oracle, "Use the oracle mask");
    eval->add_flag("--identity", o.identity, "Zero mask (control)");
    eval->add_option("--out", o.table_out, "Write the metric table here instead of stdout");
    eval->add_option("--export-grids", o.grid_dir, "Export first-pair magnitude grids to DIR");

    CLI::App* bench = app.add_subcommand("bench", "Measure per-chunk latency");
    bench->add_option("--input", o.input_wav, "Input WAV")->required();
    bench->add_option("--weights", o.weights_path, "Weights file");
    bench->add_flag("--identity", o.identity, "Zero mask (control)");
    bench->add_option("--repeats", o.repeats, "Benchmark repeats")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(o);
        if (train->parsed()) return cmd_train(o);
        if (infer->parsed()) {
            if (o.oracle && o.clean_wav.empty()) {
                std::fprintf(stderr, "error: --oracle requires --clean\n");
                return 1;
            }
            if (!o.oracle && !o.identity && o.weights_path.empty()) {
                std::fprintf(stderr, "error: infer needs --weights (or --oracle/--identity)\n");
                return 1;
            }
            return cmd_infer(o);
        }
        if (eval->parsed()) {
            if (!o.oracle && !o.identity && o.weights_path.empty()) {
                std::fprintf(stderr, "error: eval needs --weights (or --oracle/--identity)\n");
                return 1;
            }
            return cmd_eval(o);
        }
        if (bench->parsed()) {
            if (!o.identity && o.weights_path.empty()) {
                std::fprintf(stderr, "error: bench needs --weights (or --identity)\n");
                return 1;
            }
            return cmd_bench(o);
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
