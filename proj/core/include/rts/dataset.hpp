#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rts/rir_model.hpp"
#include "rts/types.hpp"
#include "rts/wav.hpp"

namespace rts {

enum class TailPolicy {
  Truncate,  // keep the first len(signal) samples
  Full,      // len(signal) + len(rir) - 1
};

Signal convolve(std::span<const double> signal, std::span<const double> rir,
                TailPolicy tail = TailPolicy::Truncate);
Signal convolve(std::span<const double> signal, const Rir& rir,
                TailPolicy tail = TailPolicy::Truncate);

// Mean-square power.
double signal_power(std::span<const double> x);

struct MixResult {
  Signal mixture;
  Signal noise;  // the scaled noise actually added
  double gain = 0.0;
};

// Scales `noise` (tiled or cropped to the reverberant length) so that
// 10 log10(P_reverberant / P_noise) = snr_db, powers being full-segment mean
// squares. snr_db = +inf adds nothing.
MixResult mix_at_snr(std::span<const double> reverberant, std::span<const double> noise,
                     double snr_db);

struct PairMetadata {
  std::string rir_id;
  double snr_db = 0.0;
  WindowSpec window;
  std::size_t n1 = 0;
  std::optional<double> t60_used;
  T60Source t60_source = T60Source::NotNeeded;
};

struct TrainingPair {
  Signal input;   // reverberant + noise
  Signal target;  // speech convolved with the shortened RIR
  Signal reverberant;
  Signal noise;
  PairMetadata meta;
};

TrainingPair make_pair(std::span<const double> speech, const Rir& rir, const WindowSpec& spec,
                       double snr_db, std::span<const double> noise, std::string rir_id = {});

enum class NoiseKind { White, Pink };
std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

// Unit-RMS stationary noise. Pink noise is shaped in the frequency domain to
// a 1/f power spectrum (-3 dB/octave); DC is removed.
Signal synth_noise(NoiseKind kind, double duration, double fs, std::uint64_t seed);

// Self-contained stand-in for speech: glottal-pulse and noise excitation
// through moving formant resonators, gated into syllable-like bursts.
Signal synth_speech_like(double duration, double fs, std::uint64_t seed);

// One line of the JSON-lines manifest.
//
// speech_path: a WAV path (relative to the manifest) or "synth[:seconds]".
// rir_id: a WAV path (optional ".json" sidecar), "polack:<t60>[:<duration>]"
// or "pool:<dir>" (one WAV drawn from the directory by the entry's stream).
struct ManifestEntry {
  std::string utt_id;
  std::string speech_path;
  std::string rir_id;
  WindowSpec window;
  double snr_db = 20.0;
  double segment_s = 3.0;
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::Pink;
};

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

struct MixtureManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  static MixtureManifest load(const std::filesystem::path& jsonl);
  void save(const std::filesystem::path& jsonl) const;
  // Unique utt_ids, finite SNRs, positive segments.
  void validate() const;
};

struct BuildOptions {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double fs = 16000.0;
  SampleFormat format = SampleFormat::Float32;
};

struct EntryOutcome {
  std::string utt_id;
  bool ok = false;
  std::string error;
  std::string condition;
};

struct BuildReport {
  std::size_t total = 0;
  std::size_t succeeded = 0;
  std::vector<EntryOutcome> outcomes;  // manifest order
  std::map<std::string, std::size_t> conditions;

  std::size_t failed() const { return total - succeeded; }
  nlohmann::json to_json() const;
};

// Writes out_dir/{input,target}/<utt_id>.wav, out_dir/meta/<utt_id>.json and
// out_dir/build_report.json. Every stochastic choice of an entry comes from a
// stream derived from (options.seed, entry.seed, utt_id), so parallel and
// serial builds are byte-identical. Per-entry failures are collected; throws
// only when every entry fails.
BuildReport build_dataset(const MixtureManifest& manifest, const std::filesystem::path& out_dir,
                          const BuildOptions& options = {});

}  // namespace rts
