#include <doctest.h>

#include <cmath>
#include <limits>

#include "rts/crossband.hpp"
#include "rts/dataset.hpp"
#include "rts/error.hpp"
#include "support.hpp"

using namespace rts;

namespace {

constexpr double kFs = 16000.0;

Rir polack(double t60, std::uint64_t seed, double duration) {
  return synth_polack_rir(PolackParams::with_drr(t60, duration, 0.0, seed, kFs), kFs);
}

Rir impulse_at(std::size_t d) {
  Signal h(d + 1, 0.0);
  h[d] = 1.0;
  return Rir(h, kFs, d);
}

double spec_relative_error(const Spectrogram& ref, const Spectrogram& got) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.coeffs.size(); ++i) {
    num += std::norm(ref.coeffs.data()[i] - got.coeffs.data()[i]);
    den += std::norm(ref.coeffs.data()[i]);
  }
  return std::sqrt(num / den);
}

// Signal padded with zeros so no frame with content touches the reflect
// padding; stft of it is then exactly the frame-wise linear map.
Signal zero_framed(const Signal& s, std::size_t tail) {
  Signal out(1024 + s.size() + tail + 1024, 0.0);
  std::copy(s.begin(), s.end(), out.begin() + 1024);
  return out;
}

}  // namespace

TEST_CASE("filter geometry") {
  const StftConfig c;
  const CrossbandFilters f = crossband_filters(polack(0.3, 1, 0.1), c, 4);
  CHECK(f.bins() == 257);
  CHECK(f.radius() == 4);
  CHECK(f.offsets() == 9);
  CHECK(f.lead() == 1);
  // lead + floor((512 + 1600 - 2) / 256) + 1
  CHECK(f.length() == 1 + 8 + 1);
  CHECK(f.taps().size() == 257 * 9 * 10);
  CHECK(f.has_input(0, -4));
  CHECK_FALSE(CrossbandFilters(c, 256, 2, 1).has_input(10, -256));
  CHECK_THROWS_AS(crossband_filters(polack(0.3, 1, 0.1), c, 257), Error);
  CHECK_THROWS_AS(CrossbandFilters(c, 1, 1, 1), Error);
}

TEST_CASE("full-radius filters reproduce the time-domain route on speech-like input") {
  const StftConfig c;
  const Rir rir = polack(0.5, 2, 0.3);
  const Signal s = synth_speech_like(1.0, kFs, 3);
  const CrossbandFilters f = crossband_filters(rir, c, c.fft_len / 2);
  CHECK(model_error(s, rir, f) < 1e-8);
}

TEST_CASE("full-radius filters are exact for a non-default config") {
  StftConfig c;
  c.win_len = 128;
  c.hop = 32;
  c.fft_len = 128;
  c.window = Taper::Hann;
  const Rir rir = polack(0.2, 4, 0.05);
  const Signal s = test::white_noise(4000, 5);
  CHECK(model_error(s, rir, c, c.fft_len / 2) < 1e-8);
}

TEST_CASE("unit-impulse filters are the projection onto consistent spectrograms") {
  const StftConfig c;
  const Stft engine(c);
  const CrossbandFilters f = crossband_filters(impulse_at(0), c, c.fft_len / 2);
  // Diagonal zero-lag tap: sum_m w(m) g(m) / N = hop / N.
  for (std::size_t k = 0; k < f.bins(); ++k) {
    CHECK(std::abs(f.tap(k, 0, f.lead()) - Complex(0.5, 0.0)) < 1e-12);
  }
  // Applying them to a consistent spectrogram changes nothing.
  const Spectrogram s = engine.analyze(zero_framed(test::white_noise(3000, 6), 0));
  CHECK(spec_relative_error(s, crossband_apply(s, f)) < 1e-12);
  // An inconsistent one is changed.
  Spectrogram noisy = s;
  noisy.coeffs(40, 10) += Complex(50.0, 0.0);
  CHECK(spec_relative_error(noisy, crossband_apply(noisy, f)) > 1e-3);
}

TEST_CASE("a delay of one hop shifts the filters by one frame") {
  const StftConfig c;
  const CrossbandFilters base = crossband_filters(impulse_at(0), c, 3);
  const CrossbandFilters shifted = crossband_filters(impulse_at(256), c, 3);
  REQUIRE(shifted.length() == base.length() + 1);
  for (std::size_t k = 0; k < base.bins(); ++k) {
    for (std::ptrdiff_t d = -3; d <= 3; ++d) {
      REQUIRE(std::abs(shifted.tap(k, d, 0)) < 1e-12);
      for (std::size_t j = 0; j < base.length(); ++j) {
        REQUIRE(std::abs(shifted.tap(k, d, j + 1) - base.tap(k, d, j)) < 1e-12);
      }
    }
  }
}

TEST_CASE("identity filters and zero input") {
  const StftConfig c;
  const Spectrogram s = stft(test::white_noise(4000, 7), c);
  const Spectrogram out = crossband_apply(s, CrossbandFilters::identity(c, 2));
  CHECK(out.coeffs.data() == s.coeffs.data());
  const Spectrogram zero{Grid<Complex>(257, 30), c, 0};
  const Spectrogram z = crossband_apply(zero, crossband_filters(polack(0.3, 8, 0.1), c, 2));
  for (const Complex& v : z.coeffs.data()) REQUIRE(v == Complex{});
}

TEST_CASE("apply rejects mismatched grids") {
  StftConfig other;
  other.win_len = 256;
  other.hop = 128;
  other.fft_len = 256;
  const Spectrogram s = stft(test::white_noise(4000, 9), other);
  CHECK_THROWS_AS(crossband_apply(s, CrossbandFilters::identity(StftConfig{}, 1)), Error);
}

TEST_CASE("model error is non-increasing in the radius (T60 = 0.7 s)") {
  const StftConfig c;
  const Rir rir = polack(0.7, 10, 0.5);
  const Signal s = test::white_noise(16000, 11);
  const CrossbandFilters all = crossband_filters(rir, c, 4);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l <= 4; ++l) {
    const double e = model_error(s, rir, all.restricted(l));
    CAPTURE(l);
    CHECK(e <= previous + 1e-12);
    previous = e;
  }
  CHECK(narrowband_error(s, rir, c) >= model_error(s, rir, all.restricted(0)));
}

TEST_CASE("radius-4 error is set by the window kernel, not the RIR, for short RIRs") {
  // The probe construction gives a unit impulse the stft/istft projection
  // kernel, whose leakage past 4 bands bounds how small the error can get.
  const StftConfig c;
  const Signal s = test::white_noise(16000, 12);
  const double floor = model_error(s, impulse_at(0), c, 4);
  MESSAGE("radius-4 model error for a unit impulse: " << floor);
  for (std::size_t len : {16u, 64u, 256u}) {
    const double t = static_cast<double>(len) / kFs;
    const double e = model_error(s, polack(t, 13, t), c, 4);
    CAPTURE(len);
    CHECK(std::abs(e - floor) < 0.1 * floor);
  }
}

TEST_CASE("neighbour energy falls with band distance (T60 = 0.7 s)") {
  const StftConfig c;
  const CrossbandFilters f = crossband_filters(polack(0.7, 14, 0.5), c, 4);
  std::vector<double> energy;
  for (std::ptrdiff_t d = 0; d <= 4; ++d) {
    double e = 0.0;
    for (std::size_t k = 0; k < f.bins(); ++k) {
      for (std::size_t j = 0; j < f.length(); ++j) {
        e += std::norm(f.tap(k, d, j));
        if (d != 0) e += std::norm(f.tap(k, -d, j));
      }
    }
    energy.push_back(e);
  }
  for (std::size_t d = 1; d < energy.size(); ++d) CHECK(energy[d] < energy[d - 1]);
}

TEST_CASE("narrow-band model: exact for an impulse, poor for long reverberation") {
  const StftConfig c;
  const Signal s = test::white_noise(16000, 15);
  CHECK(narrowband_error(s, impulse_at(0), c) < 1e-10);
  CHECK(narrowband_error(s, polack(0.7, 16, 0.5), c) > 0.5);
  // 64 samples = hop / 4, energy concentrated near the start.
  CHECK(narrowband_error(s, polack(64.0 / kFs, 17, 64.0 / kFs), c) < 0.05);
}

TEST_CASE("filters are linear in the RIR") {
  const StftConfig c;
  const Rir rir = polack(0.3, 18, 0.1);
  const CrossbandFilters f = crossband_filters(rir, c, 2);
  for (double alpha : {2.0, -1.0, 0.3}) {
    Signal h = rir.signal();
    for (double& v : h) v *= alpha;
    const CrossbandFilters g = crossband_filters(rir.with_samples(h, std::nullopt), c, 2);
    double worst = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < f.taps().size(); ++i) {
      worst = std::max(worst, std::abs(g.taps()[i] - alpha * f.taps()[i]));
      peak = std::max(peak, std::abs(f.taps()[i]));
    }
    CAPTURE(alpha);
    if (alpha == 2.0 || alpha == -1.0) {
      CHECK(worst == 0.0);
    } else {
      CHECK(worst <= 1e-12 * peak);
    }
  }
}

TEST_CASE("filters do not depend on the thread count or probe frame") {
  const StftConfig c;
  const Rir rir = polack(0.3, 19, 0.1);
  const CrossbandFilters one = crossband_filters(rir, c, 3, ProbeOptions{0, 1});
  const CrossbandFilters many = crossband_filters(rir, c, 3, ProbeOptions{0, 4});
  CHECK(std::equal(one.taps().begin(), one.taps().end(), many.taps().begin()));
  const CrossbandFilters later = crossband_filters(rir, c, 3, ProbeOptions{9, 1});
  double worst = 0.0;
  for (std::size_t i = 0; i < one.taps().size(); ++i) worst = std::max(worst, std::abs(one.taps()[i] - later.taps()[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("restriction keeps the inner taps") {
  const StftConfig c;
  const CrossbandFilters f = crossband_filters(polack(0.3, 20, 0.1), c, 3);
  const CrossbandFilters r = f.restricted(1);
  for (std::size_t k = 0; k < f.bins(); k += 17) {
    for (std::ptrdiff_t d = -1; d <= 1; ++d) {
      for (std::size_t j = 0; j < f.length(); ++j) CHECK(r.tap(k, d, j) == f.tap(k, d, j));
    }
  }
  CHECK_THROWS_AS(r.restricted(2), Error);
}

TEST_CASE("filter file round trip") {
  test::TempDir dir;
  const StftConfig c;
  const CrossbandFilters f = crossband_filters(polack(0.3, 21, 0.1), c, 2);
  write_crossband_filters(dir / "a.ftm", f);
  const CrossbandFilters g = read_crossband_filters(dir / "a.ftm");
  CHECK(g.radius() == 2);
  CHECK(g.length() == f.length());
  CHECK(g.lead() == f.lead());
  CHECK(g.config() == c);
  // float32 storage: round-to-nearest, relative error at most 2^-24 per part
  for (std::size_t i = 0; i < f.taps().size(); ++i) {
    const Complex a = f.taps()[i], b = g.taps()[i];
    REQUIRE(std::abs(a.real() - b.real()) <= std::ldexp(std::abs(a.real()), -24));
    REQUIRE(std::abs(a.imag() - b.imag()) <= std::ldexp(std::abs(a.imag()), -24));
  }
  const auto header = nlohmann::json::parse(test::file_bytes(dir / "a.ftm").substr(0, test::file_bytes(dir / "a.ftm").find('\n')));
  CHECK(header.at("dims") == nlohmann::json::array({257, 5, f.length()}));
  CHECK(header.at("kind") == "crossband");
}
