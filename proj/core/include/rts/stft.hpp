#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rts/types.hpp"

namespace rts {

enum class Taper { Hamming, Hann, SqrtHann, Rectangular };

std::string_view to_string(Taper taper);
Taper parse_taper(std::string_view name);

// Periodic taper of length n.
Signal make_taper(Taper taper, std::size_t n);

struct StftConfig {
  std::size_t win_len = 512;
  std::size_t hop = 256;
  std::size_t fft_len = 512;
  double fs = 16000.0;
  Taper window = Taper::Hamming;

  std::size_t bins() const noexcept { return fft_len / 2 + 1; }
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

void to_json(nlohmann::json& j, const StftConfig& config);
void from_json(const nlohmann::json& j, StftConfig& config);

// Dense bins x frames grid stored frequency-major: element (k, p) lives at
// k * frames + p.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t bins, std::size_t frames, T fill = T{})
      : bins_(bins), frames_(frames), data_(bins * frames, fill) {}

  std::size_t bins() const noexcept { return bins_; }
  std::size_t frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t k, std::size_t p) { return data_[k * frames_ + p]; }
  const T& operator()(std::size_t k, std::size_t p) const { return data_[k * frames_ + p]; }

  std::span<T> row(std::size_t k) { return {data_.data() + k * frames_, frames_}; }
  std::span<const T> row(std::size_t k) const { return {data_.data() + k * frames_, frames_}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Grid& other) const noexcept {
    return bins_ == other.bins_ && frames_ == other.frames_;
  }

 private:
  std::size_t bins_ = 0;
  std::size_t frames_ = 0;
  std::vector<T> data_;
};

struct Spectrogram {
  Grid<Complex> coeffs;  // one-sided, fft_len/2 + 1 bins
  StftConfig config;
  std::size_t signal_length = 0;
};

// Cubic-root compressed magnitudes.
struct FeatureMatrix {
  Grid<double> values;
  StftConfig config;
};

// Analysis/synthesis pair. The signal is reflect-padded by win_len - hop at
// both ends (and zero-extended to a whole number of hops); frame p covers
// padded samples [p hop, p hop + win_len). Synthesis is weighted overlap-add
// with the least-squares dual of the analysis window, so every original sample
// is reconstructed exactly.
class Stft {
 public:
  // Throws InvalidParameter if the window pair fails the reconstruction
  // identity sum_j w(n + j hop) g(n + j hop) = 1.
  explicit Stft(StftConfig config = {});

  const StftConfig& config() const noexcept { return config_; }
  std::span<const double> analysis_window() const noexcept { return window_; }
  std::span<const double> synthesis_window() const noexcept { return dual_; }
  std::size_t pad() const noexcept { return config_.win_len - config_.hop; }
  std::size_t frame_count(std::size_t signal_length) const;

  Spectrogram analyze(std::span<const double> signal) const;
  // `length` defaults to the spectrogram's recorded signal length.
  Signal synthesize(const Spectrogram& spec, std::optional<std::size_t> length = std::nullopt) const;

  // Complex-signal variants over all fft_len bins, same framing.
  Grid<Complex> analyze_two_sided(std::span<const Complex> signal) const;
  ComplexSignal synthesize_two_sided(const Grid<Complex>& coeffs, std::size_t length) const;

 private:
  StftConfig config_;
  Signal window_;
  Signal dual_;
};

Spectrogram stft(std::span<const double> signal, const StftConfig& config = {});
Signal istft(const Spectrogram& spec, std::optional<std::size_t> length = std::nullopt);

FeatureMatrix features(const Spectrogram& spec);
// Magnitude features^3 with the phase of `phase_source`, then istft.
Signal resynth(const FeatureMatrix& feats, const Spectrogram& phase_source);
Grid<double> phase_of(const Spectrogram& spec);
// Variant for a stored phase grid; output length defaults to the framing's.
Signal resynth(const FeatureMatrix& feats, const Grid<double>& phase,
               std::optional<std::size_t> length = std::nullopt);

}  // namespace rts
