#include "rts/stft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rts/error.hpp"
#include "rts/fft.hpp"

namespace rts {
namespace {

// Index into the reflect-padded signal (mirror without repeating the edge
// sample); positions beyond the reflected margin read as zero.
template <class T>
T padded_sample(std::span<const T> x, std::ptrdiff_t i, std::ptrdiff_t pad) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (i >= 0 && i < n) return x[static_cast<std::size_t>(i)];
  if (i < -pad || i >= n + pad) return T{};
  if (n == 1) return x[0];
  const std::ptrdiff_t period = 2 * (n - 1);
  std::ptrdiff_t j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return x[static_cast<std::size_t>(j)];
}

}  // namespace

std::string_view to_string(Taper taper) {
  switch (taper) {
    case Taper::Hamming: return "hamming";
    case Taper::Hann: return "hann";
    case Taper::SqrtHann: return "sqrt_hann";
    case Taper::Rectangular: return "rect";
  }
  return "unknown";
}

Taper parse_taper(std::string_view name) {
  if (name == "hamming") return Taper::Hamming;
  if (name == "hann" || name == "hanning") return Taper::Hann;
  if (name == "sqrt_hann" || name == "sqrthann") return Taper::SqrtHann;
  if (name == "rect" || name == "rectangular") return Taper::Rectangular;
  fail(ErrorCode::InvalidParameter, "unknown window taper '" + std::string(name) + "'");
}

Signal make_taper(Taper taper, std::size_t n) {
  Signal w(n);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(step * static_cast<double>(i));
    switch (taper) {
      case Taper::Hamming: w[i] = 0.54 - 0.46 * c; break;
      case Taper::Hann: w[i] = 0.5 - 0.5 * c; break;
      case Taper::SqrtHann: w[i] = std::sqrt(0.5 - 0.5 * c); break;
      case Taper::Rectangular: w[i] = 1.0; break;
    }
  }
  return w;
}

void StftConfig::validate() const {
  require(hop > 0 && hop <= win_len && win_len <= fft_len, ErrorCode::InvalidParameter,
          "STFT config needs 0 < hop <= win_len <= fft_len");
  require(fs > 0 && std::isfinite(fs), ErrorCode::InvalidParameter, "STFT fs must be positive");
}

void to_json(nlohmann::json& j, const StftConfig& c) {
  j = nlohmann::json{{"win_len", c.win_len}, {"hop", c.hop},     {"fft_len", c.fft_len},
                     {"fs", c.fs},           {"window", std::string(to_string(c.window))}};
}

void from_json(const nlohmann::json& j, StftConfig& c) {
  c = StftConfig{};
  if (j.contains("win_len")) c.win_len = j.at("win_len").get<std::size_t>();
  if (j.contains("hop")) c.hop = j.at("hop").get<std::size_t>();
  c.fft_len = j.contains("fft_len") ? j.at("fft_len").get<std::size_t>() : c.win_len;
  if (j.contains("fs")) c.fs = j.at("fs").get<double>();
  if (j.contains("window")) c.window = parse_taper(j.at("window").get<std::string>());
  c.validate();
}

Stft::Stft(StftConfig config) : config_(config) {
  config_.validate();
  const std::size_t win = config_.win_len;
  const std::size_t hop = config_.hop;
  window_ = make_taper(config_.window, win);

  Signal energy(hop, 0.0);
  for (std::size_t m = 0; m < win; ++m) energy[m % hop] += window_[m] * window_[m];
  dual_.resize(win);
  for (std::size_t m = 0; m < win; ++m) {
    require(energy[m % hop] > 0.0, ErrorCode::InvalidParameter,
            "window/hop combination leaves samples uncovered; no perfect reconstruction");
    dual_[m] = window_[m] / energy[m % hop];
  }
  Signal identity(hop, 0.0);
  for (std::size_t m = 0; m < win; ++m) identity[m % hop] += window_[m] * dual_[m];
  for (double v : identity) {
    require(std::abs(v - 1.0) <= 1e-12, ErrorCode::InvalidParameter,
            "analysis/synthesis windows fail the reconstruction identity");
  }
}

std::size_t Stft::frame_count(std::size_t signal_length) const {
  const std::size_t padded = signal_length + 2 * pad();
  if (padded <= config_.win_len) return 1;
  return 1 + (padded - config_.win_len + config_.hop - 1) / config_.hop;
}

Spectrogram Stft::analyze(std::span<const double> signal) const {
  require(!signal.empty(), ErrorCode::InvalidParameter, "STFT of an empty signal");
  const std::size_t frames = frame_count(signal.size());
  const std::size_t bins = config_.bins();
  const auto pad_s = static_cast<std::ptrdiff_t>(pad());

  Spectrogram out{Grid<Complex>(bins, frames), config_, signal.size()};
  RealFft fft(config_.fft_len);
  Signal frame(config_.fft_len, 0.0);
  std::vector<Complex> spectrum(bins);
  for (std::size_t p = 0; p < frames; ++p) {
    const auto start = static_cast<std::ptrdiff_t>(p * config_.hop) - pad_s;
    for (std::size_t m = 0; m < config_.win_len; ++m) {
      frame[m] = window_[m] * padded_sample(signal, start + static_cast<std::ptrdiff_t>(m), pad_s);
    }
    fft.forward(frame, spectrum);
    for (std::size_t k = 0; k < bins; ++k) out.coeffs(k, p) = spectrum[k];
  }
  return out;
}

Signal Stft::synthesize(const Spectrogram& spec, std::optional<std::size_t> length) const {
  require(spec.coeffs.bins() == config_.bins(), ErrorCode::DimensionMismatch,
          "spectrogram bin count does not match the STFT config");
  const std::size_t frames = spec.coeffs.frames();
  require(frames > 0, ErrorCode::DimensionMismatch, "spectrogram has no frames");
  const std::size_t buffer_len = (frames - 1) * config_.hop + config_.win_len;
  const std::size_t default_len = buffer_len > 2 * pad() ? buffer_len - 2 * pad() : 0;
  const std::size_t out_len =
      length.value_or(spec.signal_length > 0 ? spec.signal_length : default_len);

  Signal buffer(buffer_len, 0.0);
  RealFft fft(config_.fft_len);
  std::vector<Complex> spectrum(config_.bins());
  Signal frame(config_.fft_len);
  for (std::size_t p = 0; p < frames; ++p) {
    for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] = spec.coeffs(k, p);
    fft.inverse(spectrum, frame);
    double* dst = buffer.data() + p * config_.hop;
    for (std::size_t m = 0; m < config_.win_len; ++m) dst[m] += dual_[m] * frame[m];
  }
  Signal out(out_len, 0.0);
  for (std::size_t i = 0; i < out_len && pad() + i < buffer_len; ++i) out[i] = buffer[pad() + i];
  return out;
}

Grid<Complex> Stft::analyze_two_sided(std::span<const Complex> signal) const {
  require(!signal.empty(), ErrorCode::InvalidParameter, "STFT of an empty signal");
  const std::size_t frames = frame_count(signal.size());
  const std::size_t n = config_.fft_len;
  const auto pad_s = static_cast<std::ptrdiff_t>(pad());

  Grid<Complex> out(n, frames);
  ComplexFft fft(n);
  ComplexSignal frame(n), spectrum(n);
  for (std::size_t p = 0; p < frames; ++p) {
    const auto start = static_cast<std::ptrdiff_t>(p * config_.hop) - pad_s;
    for (std::size_t m = 0; m < config_.win_len; ++m) {
      frame[m] = window_[m] * padded_sample(signal, start + static_cast<std::ptrdiff_t>(m), pad_s);
    }
    fft.forward(frame, spectrum);
    for (std::size_t k = 0; k < n; ++k) out(k, p) = spectrum[k];
  }
  return out;
}

ComplexSignal Stft::synthesize_two_sided(const Grid<Complex>& coeffs, std::size_t length) const {
  const std::size_t n = config_.fft_len;
  require(coeffs.bins() == n && coeffs.frames() > 0, ErrorCode::DimensionMismatch,
          "two-sided grid does not match the STFT config");
  const std::size_t buffer_len = (coeffs.frames() - 1) * config_.hop + config_.win_len;
  ComplexSignal buffer(buffer_len);
  ComplexFft fft(n);
  ComplexSignal spectrum(n), frame(n);
  for (std::size_t p = 0; p < coeffs.frames(); ++p) {
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      spectrum[k] = coeffs(k, p);
      any = any || spectrum[k] != Complex{};
    }
    if (!any) continue;
    fft.inverse(spectrum, frame);
    Complex* dst = buffer.data() + p * config_.hop;
    for (std::size_t m = 0; m < config_.win_len; ++m) dst[m] += dual_[m] * frame[m];
  }
  ComplexSignal out(length);
  for (std::size_t i = 0; i < length && pad() + i < buffer_len; ++i) out[i] = buffer[pad() + i];
  return out;
}

Spectrogram stft(std::span<const double> signal, const StftConfig& config) {
  return Stft(config).analyze(signal);
}

Signal istft(const Spectrogram& spec, std::optional<std::size_t> length) {
  return Stft(spec.config).synthesize(spec, length);
}

FeatureMatrix features(const Spectrogram& spec) {
  FeatureMatrix out{Grid<double>(spec.coeffs.bins(), spec.coeffs.frames()), spec.config};
  const auto& src = spec.coeffs.data();
  auto& dst = out.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::cbrt(std::abs(src[i]));
  return out;
}

Grid<double> phase_of(const Spectrogram& spec) {
  Grid<double> out(spec.coeffs.bins(), spec.coeffs.frames());
  const auto& src = spec.coeffs.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::arg(src[i]);
  return out;
}

Signal resynth(const FeatureMatrix& feats, const Grid<double>& phase,
               std::optional<std::size_t> length) {
  require(feats.values.same_shape(phase), ErrorCode::DimensionMismatch,
          "feature and phase grids differ in shape");
  Spectrogram spec{Grid<Complex>(phase.bins(), phase.frames()), feats.config, 0};
  const auto& mag = feats.values.data();
  const auto& ph = phase.data();
  auto& dst = spec.coeffs.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double m = mag[i];
    dst[i] = std::polar(m * m * m, ph[i]);
  }
  return istft(spec, length);
}

Signal resynth(const FeatureMatrix& feats, const Spectrogram& phase_source) {
  require(feats.config == phase_source.config, ErrorCode::DimensionMismatch,
          "feature and phase-source STFT configs differ");
  require(feats.values.bins() == phase_source.coeffs.bins() &&
              feats.values.frames() == phase_source.coeffs.frames(),
          ErrorCode::DimensionMismatch, "feature and phase-source grids differ in shape");
  Spectrogram spec{Grid<Complex>(phase_source.coeffs.bins(), phase_source.coeffs.frames()),
                   feats.config, phase_source.signal_length};
  const auto& mag = feats.values.data();
  const auto& src = phase_source.coeffs.data();
  auto& dst = spec.coeffs.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double m = mag[i];
    const double a = std::abs(src[i]);
    // exp(i angle(src)) = src / |src|
    dst[i] = a > 0.0 ? src[i] * (m * m * m / a) : Complex(m * m * m, 0.0);
  }
  return istft(spec);
}

}  // namespace rts
