#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "rts/rir_model.hpp"
#include "rts/stft.hpp"

namespace rts {

// Band-to-band STFT filters A(k, k + d, j) of a time-domain RIR.
//
// Output bands k cover the one-sided range [0, K). Input bands are the
// frequencies f = k + d mod N (N = fft_len) for d in [-radius, radius], taken
// in (-N/2, N/2]; negative f reads the conjugate of the one-sided coefficient
// at -f. radius = N/2 covers every input once (d = -N/2 is unused). Tap j holds frame lag j - lead: the
// STFT's overlapping frames make a response start `lead` frames before the
// probed frame.
class CrossbandFilters {
 public:
  CrossbandFilters(StftConfig config, std::size_t radius, std::size_t length, std::size_t lead);

  // A(k, k, lag 0) = 1, everything else 0.
  static CrossbandFilters identity(StftConfig config, std::size_t radius = 0);

  const StftConfig& config() const noexcept { return config_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t radius() const noexcept { return radius_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t lead() const noexcept { return lead_; }
  std::size_t offsets() const noexcept { return 2 * radius_ + 1; }

  // False only for the duplicate offset d = -N/2.
  bool has_input(std::size_t k, std::ptrdiff_t d) const noexcept;

  Complex& tap(std::size_t k, std::ptrdiff_t d, std::size_t j) {
    return taps_[index(k, d, j)];
  }
  const Complex& tap(std::size_t k, std::ptrdiff_t d, std::size_t j) const {
    return taps_[index(k, d, j)];
  }
  std::span<const Complex> taps() const noexcept { return taps_; }
  std::span<Complex> taps() noexcept { return taps_; }

  // Subset with a smaller neighbor radius.
  CrossbandFilters restricted(std::size_t radius) const;

 private:
  std::size_t index(std::size_t k, std::ptrdiff_t d, std::size_t j) const noexcept {
    return (k * offsets() + static_cast<std::size_t>(d + static_cast<std::ptrdiff_t>(radius_))) *
               length_ + j;
  }

  StftConfig config_;
  std::size_t bins_;
  std::size_t radius_;
  std::size_t length_;
  std::size_t lead_;
  std::vector<Complex> taps_;
};

struct ProbeOptions {
  // Frame index of the probe impulse; 0 picks the earliest frame clear of
  // the reflect padding.
  std::size_t probe_frame = 0;
  // 0 = hardware concurrency.
  unsigned threads = 0;
};

// Filters by construction: for every needed input frequency, synthesize the
// signal whose two-sided spectrogram is a unit impulse at (f, probe frame),
// convolve it with the RIR and read the output bands of its STFT. By
// linearity and hop-shift invariance the taps reproduce stft(s * a) from
// stft(s).
CrossbandFilters crossband_filters(const Rir& rir, const StftConfig& config, std::size_t radius,
                                   const ProbeOptions& options = {});

// Y(k, p) = sum_d sum_j S(k + d, p + lead - j) A(k, k + d, j).
Spectrogram crossband_apply(const Spectrogram& source, const CrossbandFilters& filters);

// Relative error ||stft(s * a) - crossband_apply(stft(s), A)|| / ||stft(s * a)||
// on a zero-extended time axis long enough to hold the whole convolution.
double model_error(std::span<const double> s, const Rir& rir, const CrossbandFilters& filters);
double model_error(std::span<const double> s, const Rir& rir, const StftConfig& config,
                   std::size_t radius);

// Same measure for the memoryless per-band model Y(k, p) = S(k, p) A(k),
// A(k) the DFT of the RIR at bin k.
double narrowband_error(std::span<const double> s, const Rir& rir, const StftConfig& config);

// ".ftm" export: dims [K, 2l+1, L], complex interleaved float32.
void write_crossband_filters(const std::filesystem::path& path, const CrossbandFilters& filters);
CrossbandFilters read_crossband_filters(const std::filesystem::path& path);

}  // namespace rts
