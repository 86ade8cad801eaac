#include "rts/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rts/error.hpp"
#include "rts/fft.hpp"

namespace rts {

Edc schroeder_edc(std::span<const double> samples, double fs) {
  require(!samples.empty(), ErrorCode::InvalidParameter, "EDC of an empty RIR");
  require(fs > 0, ErrorCode::InvalidParameter, "fs must be positive");
  Edc edc;
  edc.fs = fs;
  edc.values.resize(samples.size());
  double acc = 0.0;
  for (std::size_t i = samples.size(); i-- > 0;) {
    acc += samples[i] * samples[i];
    edc.values[i] = acc;
  }
  require(acc > 0.0, ErrorCode::DegenerateSignal, "EDC of an all-zero RIR is undefined");
  edc.db.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    edc.db[i] = edc.values[i] > 0.0 ? 10.0 * std::log10(edc.values[i] / acc)
                                    : -std::numeric_limits<double>::infinity();
  }
  return edc;
}

Edc schroeder_edc(const Rir& rir) { return schroeder_edc(rir.samples(), rir.fs()); }

double estimate_t60(const Edc& edc, FitRange range) {
  require(range.upper_db > range.lower_db, ErrorCode::InvalidParameter,
          "fit range upper bound must exceed the lower bound");
  require(!edc.db.empty() && edc.fs > 0, ErrorCode::InvalidParameter, "empty EDC");
  require(edc.db.back() <= range.lower_db, ErrorCode::InsufficientDecay,
          "EDC never decays below " + std::to_string(range.lower_db) + " dB");

  // The curve is non-increasing, so the in-range samples form one run.
  const auto first = std::find_if(edc.db.begin(), edc.db.end(),
                                  [&](double v) { return v <= range.upper_db; });
  const auto last = std::find_if(first, edc.db.end(),
                                 [&](double v) { return v < range.lower_db; });
  const auto i0 = static_cast<std::size_t>(first - edc.db.begin());
  const auto i1 = static_cast<std::size_t>(last - edc.db.begin());
  require(i1 >= i0 + 2, ErrorCode::InsufficientDecay,
          "too few EDC samples inside the fit range");

  const double count = static_cast<double>(i1 - i0);
  const double mean_n = 0.5 * static_cast<double>(i0 + i1 - 1);
  double mean_db = 0.0;
  for (std::size_t i = i0; i < i1; ++i) mean_db += edc.db[i];
  mean_db /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    const double dx = static_cast<double>(i) - mean_n;
    sxy += dx * (edc.db[i] - mean_db);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;  // dB per sample
  require(slope < 0.0, ErrorCode::InsufficientDecay, "EDC fit has non-negative slope");
  return -60.0 / (slope * edc.fs);
}

ResidualRir identify_remaining_rir(std::span<const double> enhanced,
                                   std::span<const double> clean, double fs, double epsilon) {
  require(!enhanced.empty() && !clean.empty(), ErrorCode::InvalidParameter,
          "deconvolution inputs must be non-empty");
  require(epsilon >= 0 && std::isfinite(epsilon), ErrorCode::InvalidParameter,
          "regularization must be non-negative");
  double clean_energy = 0.0;
  for (double x : clean) clean_energy += x * x;
  require(clean_energy > 0.0, ErrorCode::DegenerateSignal, "clean signal has zero energy");

  const std::size_t n = next_pow2(enhanced.size() + clean.size() - 1);
  RealFft fft(n);
  std::vector<Complex> x(fft.bins()), s(fft.bins());
  fft.forward(enhanced, x);
  fft.forward(clean, s);

  double max_power = 0.0;
  for (const Complex& v : s) max_power = std::max(max_power, std::norm(v));
  const double floor = epsilon * max_power;

  for (std::size_t k = 0; k < x.size(); ++k) {
    const double denom = std::norm(s[k]) + floor;
    x[k] = denom > 0.0 ? x[k] * std::conj(s[k]) / denom : Complex{};
  }
  ResidualRir out;
  out.samples.resize(n);
  out.fs = fs;
  out.regularization = epsilon;
  fft.inverse(x, out.samples);
  return out;
}

Rir residual_to_rir(const ResidualRir& residual, double seconds) {
  require(seconds > 0, ErrorCode::InvalidParameter, "analysis length must be positive");
  const auto keep = std::min(residual.samples.size(),
                             static_cast<std::size_t>(std::llround(seconds * residual.fs)));
  Signal head(residual.samples.begin(),
              residual.samples.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(keep, 1)));
  return Rir::from_samples(std::move(head), residual.fs);
}

EdcTable edc_report(const std::vector<std::pair<std::string, Rir>>& rirs) {
  require(!rirs.empty(), ErrorCode::InvalidParameter, "EDC report needs at least one RIR");
  const double fs = rirs.front().second.fs();
  std::size_t rows = rirs.front().second.size();
  for (const auto& [label, rir] : rirs) {
    require(rir.fs() == fs, ErrorCode::DimensionMismatch,
            "EDC report inputs must share one sample rate");
    rows = std::min(rows, rir.size());
  }
  EdcTable table;
  table.time_s.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) table.time_s[i] = static_cast<double>(i) / fs;
  for (const auto& [label, rir] : rirs) {
    Edc edc = schroeder_edc(rir);
    edc.db.resize(rows);
    table.labels.push_back(label);
    table.curves_db.push_back(std::move(edc.db));
  }
  return table;
}

void EdcTable::write_csv(std::ostream& out) const {
  out << "time_s";
  for (const auto& label : labels) out << ',' << label;
  out << '\n';
  const auto old_precision = out.precision(10);
  for (std::size_t i = 0; i < time_s.size(); ++i) {
    out << time_s[i];
    for (const auto& curve : curves_db) out << ',' << curve[i];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace rts
