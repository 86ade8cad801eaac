#include "rts/crossband.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "rts/error.hpp"
#include "rts/fft.hpp"
#include "rts/ftm.hpp"

namespace rts {
namespace {

std::ptrdiff_t half_fft(const StftConfig& config) {
  return static_cast<std::ptrdiff_t>(config.fft_len / 2);
}

// Representative of f mod N in (-N/2, N/2].
std::ptrdiff_t wrap_frequency(std::ptrdiff_t f, const StftConfig& config) {
  const auto n = static_cast<std::ptrdiff_t>(config.fft_len);
  const std::ptrdiff_t half = half_fft(config);
  return ((f + half - 1) % n + n) % n - half + 1;
}

// Convolution with a fixed real RIR, FFT of the RIR computed once.
class RirConvolver {
 public:
  RirConvolver(std::span<const double> rir, std::size_t signal_len)
      : rir_len_(rir.size()),
        out_len_(signal_len + rir.size() - 1),
        fft_(next_pow2(out_len_)),
        rir_spectrum_(fft_.size()),
        work_(fft_.size()),
        result_(fft_.size()) {
    ComplexSignal rc(rir.begin(), rir.end());
    fft_.forward(rc, rir_spectrum_);
  }

  // Full linear convolution of `x` (length <= signal_len), cropped to x.size().
  ComplexSignal apply(std::span<const Complex> x) {
    fft_.forward(x, work_);
    for (std::size_t i = 0; i < work_.size(); ++i) work_[i] *= rir_spectrum_[i];
    fft_.inverse(work_, result_);
    return ComplexSignal(result_.begin(), result_.begin() + static_cast<std::ptrdiff_t>(x.size()));
  }

 private:
  std::size_t rir_len_;
  std::size_t out_len_;
  ComplexFft fft_;
  ComplexSignal rir_spectrum_;
  ComplexSignal work_;
  ComplexSignal result_;
};

double relative_error(const Grid<Complex>& reference, const Grid<Complex>& model) {
  double num = 0.0, den = 0.0;
  const auto& r = reference.data();
  const auto& m = model.data();
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += std::norm(r[i] - m[i]);
    den += std::norm(r[i]);
  }
  require(den > 0.0, ErrorCode::DegenerateSignal, "reference spectrogram has zero energy");
  return std::sqrt(num / den);
}

struct ExtendedPair {
  Signal source;
  Signal reverberant;
};

// Zero margins keep every nonzero frame clear of the reflect padding and hold
// the whole convolution tail, so both STFTs see the same exact linear system.
ExtendedPair extend_and_convolve(std::span<const double> s, const Rir& rir,
                                 const StftConfig& config) {
  require(!s.empty(), ErrorCode::InvalidParameter, "source signal is empty");
  require(rir.fs() == config.fs, ErrorCode::InvalidParameter,
          "RIR sample rate must match the STFT config");
  const std::size_t front = 2 * config.win_len;
  const std::size_t back = rir.size() + 2 * config.win_len;
  ExtendedPair out;
  out.source.assign(front + s.size() + back, 0.0);
  std::copy(s.begin(), s.end(), out.source.begin() + static_cast<std::ptrdiff_t>(front));
  out.reverberant = fft_convolve(out.source, rir.samples());
  out.reverberant.resize(out.source.size());
  return out;
}

}  // namespace

CrossbandFilters::CrossbandFilters(StftConfig config, std::size_t radius, std::size_t length,
                                   std::size_t lead)
    : config_(config),
      bins_(config.bins()),
      radius_(radius),
      length_(length),
      lead_(lead),
      taps_(bins_ * (2 * radius + 1) * length) {
  config_.validate();
  require(length_ > lead_, ErrorCode::InvalidParameter, "filter length must exceed its lead");
}

CrossbandFilters CrossbandFilters::identity(StftConfig config, std::size_t radius) {
  CrossbandFilters f(config, radius, 1, 0);
  for (std::size_t k = 0; k < f.bins(); ++k) f.tap(k, 0, 0) = 1.0;
  return f;
}

bool CrossbandFilters::has_input(std::size_t, std::ptrdiff_t d) const noexcept {
  return d > -half_fft(config_) && d <= half_fft(config_);
}

CrossbandFilters CrossbandFilters::restricted(std::size_t radius) const {
  require(radius <= radius_, ErrorCode::InvalidParameter,
          "cannot widen a filter set by restriction");
  CrossbandFilters out(config_, radius, length_, lead_);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  for (std::size_t k = 0; k < bins_; ++k) {
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
      for (std::size_t j = 0; j < length_; ++j) out.tap(k, d, j) = tap(k, d, j);
    }
  }
  return out;
}

CrossbandFilters crossband_filters(const Rir& rir, const StftConfig& config, std::size_t radius,
                                   const ProbeOptions& options) {
  const Stft engine(config);  // rejects non-reconstructing configs
  require(rir.fs() == config.fs, ErrorCode::InvalidParameter,
          "RIR sample rate must match the STFT config");
  require(radius <= config.fft_len / 2, ErrorCode::InvalidParameter,
          "neighbor radius exceeds fft_len / 2");
  const std::size_t win = config.win_len;
  const std::size_t hop = config.hop;
  const std::size_t n = config.fft_len;
  const std::size_t pad = engine.pad();
  const std::size_t rir_len = rir.size();

  const std::size_t lead = (win - 1) / hop;
  const std::size_t length = lead + (win + rir_len - 2) / hop + 1;
  const std::size_t min_probe = 2 * pad / hop + 1;
  const std::size_t p0 = std::max(options.probe_frame, min_probe);

  // Probe atom starts at p0 hop - pad; leave room for the tail and a clean
  // reflect margin at the end.
  const std::size_t signal_len = p0 * hop - pad + win + rir_len + 2 * win + 2 * hop;
  const std::size_t frames = engine.frame_count(signal_len);
  require(frames >= p0 - lead + length, ErrorCode::InvalidParameter,
          "internal: probe signal too short");

  CrossbandFilters filters(config, radius, length, lead);
  const std::ptrdiff_t half = half_fft(config);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto bins = static_cast<std::ptrdiff_t>(config.bins());

  // Probe f feeds output k at offset d = wrap(f - k) when |d| <= r.
  std::vector<std::ptrdiff_t> probes;
  for (std::ptrdiff_t f = -half + 1; f <= half; ++f) {
    for (std::ptrdiff_t k = 0; k < bins; ++k) {
      const std::ptrdiff_t d = wrap_frequency(f - k, config);
      if (d >= -r && d <= r) {
        probes.push_back(f);
        break;
      }
    }
  }
  const std::size_t probe_count = probes.size();

  auto worker = [&](std::size_t first, std::size_t last) {
    RirConvolver conv(rir.samples(), signal_len);
    Grid<Complex> probe(n, frames);
    for (std::size_t i = first; i < last; ++i) {
      const std::ptrdiff_t f = probes[i];
      const auto bin = static_cast<std::size_t>((f + static_cast<std::ptrdiff_t>(n)) %
                                                static_cast<std::ptrdiff_t>(n));
      probe(bin, p0) = 1.0;
      const ComplexSignal atom = engine.synthesize_two_sided(probe, signal_len);
      probe(bin, p0) = 0.0;
      const ComplexSignal response = conv.apply(atom);
      const Grid<Complex> y = engine.analyze_two_sided(response);
      for (std::ptrdiff_t k = 0; k < bins; ++k) {
        const std::ptrdiff_t d = wrap_frequency(f - k, config);
        if (d < -r || d > r || !filters.has_input(0, d)) continue;
        const auto ku = static_cast<std::size_t>(k);
        for (std::size_t j = 0; j < length; ++j) {
          filters.tap(ku, d, j) = y(ku, p0 - lead + j);
        }
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(probe_count)));
  if (threads == 1) {
    worker(0, probe_count);
  } else {
    // Disjoint (k, d) slots per probe: the result does not depend on scheduling.
    std::vector<std::jthread> pool;
    const std::size_t chunk = (probe_count + threads - 1) / threads;
    for (std::size_t start = 0; start < probe_count; start += chunk) {
      pool.emplace_back(worker, start, std::min(probe_count, start + chunk));
    }
  }
  return filters;
}

Spectrogram crossband_apply(const Spectrogram& source, const CrossbandFilters& filters) {
  require(source.config == filters.config(), ErrorCode::DimensionMismatch,
          "source spectrogram and filters use different STFT configs");
  const std::size_t bins = filters.bins();
  require(source.coeffs.bins() == bins, ErrorCode::DimensionMismatch,
          "source spectrogram bin count does not match the filters");
  const std::size_t frames = source.coeffs.frames();
  const std::size_t length = filters.length();
  const auto lead = static_cast<std::ptrdiff_t>(filters.lead());
  const auto r = static_cast<std::ptrdiff_t>(filters.radius());

  Spectrogram out{Grid<Complex>(bins, frames), source.config, source.signal_length};
  std::vector<Complex> input(frames);
  for (std::size_t k = 0; k < bins; ++k) {
    auto y = out.coeffs.row(k);
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
      if (!filters.has_input(k, d)) continue;
      const std::ptrdiff_t f = wrap_frequency(static_cast<std::ptrdiff_t>(k) + d, filters.config());
      const auto src = source.coeffs.row(static_cast<std::size_t>(std::abs(f)));
      if (f >= 0) {
        std::copy(src.begin(), src.end(), input.begin());
      } else {
        std::transform(src.begin(), src.end(), input.begin(),
                       [](const Complex& c) { return std::conj(c); });
      }
      for (std::size_t j = 0; j < length; ++j) {
        const Complex a = filters.tap(k, d, j);
        if (a == Complex{}) continue;
        // y(p) += input(p + lead - j) a
        const std::ptrdiff_t shift = lead - static_cast<std::ptrdiff_t>(j);
        const std::ptrdiff_t p_lo = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t p_hi =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(frames),
                                     static_cast<std::ptrdiff_t>(frames) - shift);
        for (std::ptrdiff_t p = p_lo; p < p_hi; ++p) {
          y[static_cast<std::size_t>(p)] += input[static_cast<std::size_t>(p + shift)] * a;
        }
      }
    }
  }
  return out;
}

double model_error(std::span<const double> s, const Rir& rir, const CrossbandFilters& filters) {
  const ExtendedPair ext = extend_and_convolve(s, rir, filters.config());
  const Stft engine(filters.config());
  const Spectrogram reference = engine.analyze(ext.reverberant);
  const Spectrogram model = crossband_apply(engine.analyze(ext.source), filters);
  return relative_error(reference.coeffs, model.coeffs);
}

double model_error(std::span<const double> s, const Rir& rir, const StftConfig& config,
                   std::size_t radius) {
  return model_error(s, rir, crossband_filters(rir, config, radius));
}

double narrowband_error(std::span<const double> s, const Rir& rir, const StftConfig& config) {
  const ExtendedPair ext = extend_and_convolve(s, rir, config);
  const Stft engine(config);
  const Spectrogram reference = engine.analyze(ext.reverberant);
  Spectrogram model = engine.analyze(ext.source);

  const std::size_t bins = config.bins();
  const auto h = rir.samples();
  const double step = -2.0 * std::numbers::pi / static_cast<double>(config.fft_len);
  for (std::size_t k = 0; k < bins; ++k) {
    Complex a{};
    for (std::size_t m = 0; m < h.size(); ++m) {
      // Reduce k m mod N first so the phase argument stays small.
      const auto idx = static_cast<double>((k * m) % config.fft_len);
      a += h[m] * std::polar(1.0, step * idx);
    }
    for (Complex& c : model.coeffs.row(k)) c *= a;
  }
  return relative_error(reference.coeffs, model.coeffs);
}

void write_crossband_filters(const std::filesystem::path& path, const CrossbandFilters& filters) {
  TensorFile t;
  t.header = make_tensor_header({filters.bins(), filters.offsets(), filters.length()});
  t.header["kind"] = "crossband";
  t.header["complex"] = "interleaved";
  t.header["l"] = filters.radius();
  t.header["L"] = filters.length();
  t.header["lead"] = filters.lead();
  t.header["config"] = nlohmann::json(filters.config());
  t.data.reserve(2 * filters.taps().size());
  for (const Complex& c : filters.taps()) {
    t.data.push_back(static_cast<float>(c.real()));
    t.data.push_back(static_cast<float>(c.imag()));
  }
  write_tensor(path, t);
}

CrossbandFilters read_crossband_filters(const std::filesystem::path& path) {
  const TensorFile t = read_tensor(path);
  require(t.kind() == std::optional<std::string>("crossband") && t.is_complex(),
          ErrorCode::Format, "not a crossband filter file: " + path.string());
  const auto dims = t.dims();
  require(dims.size() == 3, ErrorCode::Format, "crossband tensor must be 3-D");
  const StftConfig config = t.header.at("config").get<StftConfig>();
  const auto radius = t.header.at("l").get<std::size_t>();
  const auto length = t.header.at("L").get<std::size_t>();
  const auto lead = t.header.at("lead").get<std::size_t>();
  CrossbandFilters out(config, radius, length, lead);
  require(dims[0] == out.bins() && dims[1] == out.offsets() && dims[2] == length,
          ErrorCode::Format, "crossband dims disagree with header parameters");
  auto taps = out.taps();
  for (std::size_t i = 0; i < taps.size(); ++i) taps[i] = Complex(t.data[2 * i], t.data[2 * i + 1]);
  return out;
}

}  // namespace rts
