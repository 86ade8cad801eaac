#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rts/rir_model.hpp"
#include "rts/types.hpp"

namespace rts {

// Schroeder energy decay curve: values[n] = sum_{m >= n} h[m]^2 and its
// level relative to the total energy in dB (-inf once the tail is exactly 0).
struct Edc {
  Signal values;
  Signal db;
  double fs = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double total_energy() const { return values.front(); }
};

Edc schroeder_edc(std::span<const double> samples, double fs);
Edc schroeder_edc(const Rir& rir);

// Line-fit window on the dB curve. (-5, -25) is the T20 convention.
struct FitRange {
  double upper_db = -5.0;
  double lower_db = -25.0;
};

// Least-squares line over the samples whose level lies inside the fit range,
// extrapolated to -60 dB. Throws InsufficientDecay when the curve never falls
// below the lower bound.
double estimate_t60(const Edc& edc, FitRange range = {});

struct ResidualRir {
  Signal samples;
  double fs = 0.0;
  double regularization = 0.0;
};

inline constexpr double kDefaultDeconvEpsilon = 1e-8;

// Residual response of an enhanced signal relative to the clean one:
// Re IDFT[ X conj(S) / (|S|^2 + eps max|S|^2) ] over a zero-padded FFT of at
// least len(enhanced) + len(clean) - 1 points. eps = 0 is plain spectral
// division.
ResidualRir identify_remaining_rir(std::span<const double> enhanced,
                                   std::span<const double> clean, double fs,
                                   double epsilon = kDefaultDeconvEpsilon);

// First `seconds` of the residual as an RIR (n1 re-detected), for EDC analysis.
Rir residual_to_rir(const ResidualRir& residual, double seconds = 1.0);

// Time-aligned normalized EDCs, one column per label. Rows cover the shortest
// input so every column is defined on every row.
struct EdcTable {
  Signal time_s;
  std::vector<std::string> labels;
  std::vector<Signal> curves_db;

  void write_csv(std::ostream& out) const;
};

EdcTable edc_report(const std::vector<std::pair<std::string, Rir>>& rirs);

}  // namespace rts
