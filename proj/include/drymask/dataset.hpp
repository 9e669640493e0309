#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "drymask/audio.hpp"
#include "drymask/rir.hpp"
#include "drymask/wav.hpp"

namespace drymask {

template <class T>
struct TrainingPairT {
    AudioBufferT<T> clean;
    AudioBufferT<T> reverberant;
    std::string rir_label;
};

using TrainingPair = TrainingPairT<Real>;

inline constexpr double kSilenceFloor = 1e-4;  // peak threshold for dropping chunks

// Cut a clean/reverberant pair into consecutive non-overlapping chunks of
// chunk_len samples. The final partial chunk is zero-padded; chunks whose
// clean part is silent (peak < 1e-4) are dropped. Each kept chunk is
// peak-normalized.
template <class T>
std::vector<TrainingPairT<T>> chunk_pairs(const AudioBufferT<T>& clean,
                                          const AudioBufferT<T>& reverberant,
                                          std::size_t chunk_len,
                                          const std::string& rir_label = {}) {
    if (clean.size() != reverberant.size() || clean.sample_rate != reverberant.sample_rate)
        throw std::invalid_argument("chunk_pairs: length/rate mismatch");
    if (chunk_len == 0) throw std::invalid_argument("chunk_pairs: chunk_len must be positive");

    std::vector<TrainingPairT<T>> pairs;
    for (std::size_t start = 0; start < clean.size(); start += chunk_len) {
        const std::size_t n = std::min(chunk_len, clean.size() - start);
        AudioBufferT<T> c(std::vector<T>(chunk_len, static_cast<T>(0)), clean.sample_rate);
        AudioBufferT<T> r(std::vector<T>(chunk_len, static_cast<T>(0)), clean.sample_rate);
        std::copy_n(clean.samples.begin() + start, n, c.samples.begin());
        std::copy_n(reverberant.samples.begin() + start, n, r.samples.begin());
        if (c.peak() < static_cast<T>(kSilenceFloor)) continue;
        c.normalize_peak(static_cast<T>(kSilenceFloor));
        r.normalize_peak(static_cast<T>(kSilenceFloor));
        pairs.push_back({std::move(c), std::move(r), rir_label});
    }
    return pairs;
}

struct ManifestEntry {
    std::string id;
    std::string rir_label;
    double t60 = 0.0;
};

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_manifest: cannot open " + path.string());
    out << "id rir_label t60\n";
    for (const auto& e : entries) out << e.id << ' ' << e.rir_label << ' ' << e.t60 << '\n';
    if (!out) throw DataError("write_manifest: write failed");
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_manifest: cannot open " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("id ", 0) == 0) continue;  // header row
        }
        std::istringstream row(line);
        ManifestEntry e;
        if (!(row >> e.id >> e.rir_label >> e.t60))
            throw FormatError("read_manifest: bad row: " + line);
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::filesystem::path clean_wav_path(const std::filesystem::path& dir,
                                            const std::string& id) {
    return dir / (id + "_clean.wav");
}
inline std::filesystem::path reverb_wav_path(const std::filesystem::path& dir,
                                             const std::string& id) {
    return dir / (id + "_reverb.wav");
}

template <class T>
void save_pair(const std::filesystem::path& dir, const std::string& id,
               const TrainingPairT<T>& pair) {
    wav_write(clean_wav_path(dir, id), pair.clean);
    wav_write(reverb_wav_path(dir, id), pair.reverberant);
}

template <class T = Real>
TrainingPairT<T> load_pair(const std::filesystem::path& dir, const ManifestEntry& entry) {
    TrainingPairT<T> pair;
    pair.clean = wav_read<T>(clean_wav_path(dir, entry.id));
    pair.reverberant = wav_read<T>(reverb_wav_path(dir, entry.id));
    pair.rir_label = entry.rir_label;
    if (pair.clean.size() != pair.reverberant.size() ||
        pair.clean.sample_rate != pair.reverberant.sample_rate)
        throw ValidationError("load_pair: clean/reverb mismatch for id " + entry.id);
    return pair;
}

}  // namespace drymask
