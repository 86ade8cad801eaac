#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rts/acoustics.hpp"
#include "rts/error.hpp"
#include "rts/fft.hpp"
#include "rts/rir_model.hpp"
#include "support.hpp"

using namespace rts;
using rts::test::Gen;

namespace {

constexpr double kFs = 16000.0;

Rir polack(double t60, std::uint64_t seed, double duration = 1.0) {
  return synth_polack_rir(PolackParams::with_drr(t60, duration, 0.0, seed, kFs), kFs);
}

Signal envelope(double t60, std::size_t len) {
  const double p = 3.0 / (t60 * kFs);
  Signal h(len);
  for (std::size_t n = 0; n < len; ++n) h[n] = std::pow(10.0, -p * static_cast<double>(n));
  return h;
}

}  // namespace

TEST_CASE("EDC of [1, 1]") {
  const Edc edc = schroeder_edc(Signal{1.0, 1.0}, kFs);
  CHECK(edc.values == Signal{2.0, 1.0});
  CHECK(edc.db[0] == 0.0);
  CHECK(edc.db[1] == doctest::Approx(-10.0 * std::log10(2.0)).epsilon(1e-14));
  CHECK(edc.db[1] == doctest::Approx(-3.0103).epsilon(1e-5));
}

TEST_CASE("EDC of a unit impulse") {
  Signal h(6, 0.0);
  h[0] = 1.0;
  const Edc edc = schroeder_edc(h, kFs);
  CHECK(edc.values == Signal{1, 0, 0, 0, 0, 0});
  CHECK(std::isinf(edc.db[3]));
  CHECK(edc.total_energy() == 1.0);
}

TEST_CASE("EDC errors") {
  CHECK_THROWS_AS(schroeder_edc(Signal{}, kFs), Error);
  CHECK_THROWS_AS(schroeder_edc(Signal(5, 0.0), kFs), Error);
}

TEST_CASE("EDC of an exponential envelope matches the geometric-series closed form") {
  const std::size_t len = 16000;
  const double p = 3.0 / (0.5 * kFs);
  const Edc edc = schroeder_edc(envelope(0.5, len), kFs);
  // values[n] / values[0] = (r^n - r^len) / (1 - r^len), r = 10^(-2p)
  const double log_r = -2.0 * p * std::log(10.0);
  for (std::size_t n = 0; n < len; n += 97) {
    const double ratio = -std::expm1(static_cast<double>(len - n) * log_r) /
                         -std::expm1(static_cast<double>(len) * log_r) *
                         std::exp(static_cast<double>(n) * log_r);
    CHECK(edc.db[n] == doctest::Approx(10.0 * std::log10(ratio)).epsilon(1e-9));
  }
  // Far from the end the curve is a line of slope -20 p dB per sample.
  for (std::size_t n = 0; n < 4000; n += 250) {
    CHECK(edc.db[n] - edc.db[n + 1] == doctest::Approx(20.0 * p).epsilon(1e-6));
  }
}

TEST_CASE("T60 of exact exponentials is within 0.1%") {
  for (double t60 : {0.15, 0.25, 0.5, 0.7, 1.0}) {
    const double est = estimate_t60(schroeder_edc(envelope(t60, static_cast<std::size_t>(2 * t60 * kFs)), kFs));
    CAPTURE(t60);
    CHECK(std::abs(est - t60) < 1e-3 * t60);
  }
}

TEST_CASE("T60 of Polack RIRs (0.25 s) within 5%, median of 20 seeds") {
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 20; ++seed) est.push_back(estimate_t60(schroeder_edc(polack(0.25, seed))));
  CHECK(std::abs(test::median(est) - 0.25) < 0.0125);
}

TEST_CASE("T60 errors") {
  Signal impulse(100, 0.0);
  impulse[0] = 1.0;
  try {
    estimate_t60(schroeder_edc(impulse, kFs));
    FAIL("impulse accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDecay);
  }
  // Bottoms out near -21 dB.
  CHECK_THROWS_AS(estimate_t60(schroeder_edc(envelope(0.5, 100), kFs)), Error);
  CHECK_THROWS_AS(estimate_t60(schroeder_edc(envelope(0.5, 8000), kFs), FitRange{-25.0, -5.0}), Error);
}

TEST_CASE("configurable fit range") {
  const Edc edc = schroeder_edc(envelope(0.4, 16000), kFs);
  CHECK(estimate_t60(edc, FitRange{-5.0, -35.0}) == doctest::Approx(0.4).epsilon(1e-3));
}

TEST_CASE("property: EDC is non-negative and non-increasing") {
  Gen gen(41);
  for (int i = 0; i < 100; ++i) {
    Signal h = gen.signal(gen.size_in(1, 3000), gen.real_in(1e-3, 1e3));
    h[0] += 1.0;
    const Edc edc = schroeder_edc(h, kFs);
    CHECK(edc.db[0] == 0.0);
    for (std::size_t n = 1; n < h.size(); ++n) {
      REQUIRE(edc.values[n] >= 0.0);
      REQUIRE(edc.values[n] <= edc.values[n - 1]);
      REQUIRE(edc.db[n] <= edc.db[n - 1]);
    }
    CHECK(edc.values.back() == h.back() * h.back());
  }
}

TEST_CASE("property: T60 estimate is scale invariant") {
  Gen gen(42);
  for (int i = 0; i < 20; ++i) {
    const Rir rir = polack(gen.real_in(0.2, 0.9), 500 + i);
    const double base = estimate_t60(schroeder_edc(rir));
    // Power-of-two gains and sign flips scale every square exactly.
    for (double alpha : {2.0, 0.5, -1.0, -4.0, 1024.0}) {
      Signal scaled = rir.signal();
      for (double& v : scaled) v *= alpha;
      CHECK(estimate_t60(schroeder_edc(scaled, kFs)) == base);
    }
    const double alpha = gen.real_in(1e-3, 1e3);
    Signal scaled = rir.signal();
    for (double& v : scaled) v *= alpha;
    CHECK(std::abs(estimate_t60(schroeder_edc(scaled, kFs)) - base) <= 1e-12 * base);
  }
}

TEST_CASE("property: shortened Polack RIRs land within 10% of the target") {
  for (double t60 : {0.25, 0.5, 0.7}) {
    for (double target : {0.1, 0.15, 0.2}) {
      std::vector<double> est;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        est.push_back(estimate_t60(schroeder_edc(shorten_rir(polack(t60, 900 + seed), WindowSpec::rts(target)))));
      }
      CAPTURE(t60);
      CAPTURE(target);
      CHECK(std::abs(test::median(est) - target) < 0.1 * target);
    }
  }
}

TEST_CASE("self-deconvolution gives a unit impulse") {
  const Signal s = test::white_noise(4000, 1);
  const ResidualRir r = identify_remaining_rir(s, s, kFs, 0.0);
  CHECK(r.samples.size() == next_pow2(7999));
  CHECK(std::abs(r.samples[0] - 1.0) < 1e-10);
  for (std::size_t n = 1; n < r.samples.size(); ++n) REQUIRE(std::abs(r.samples[n]) < 1e-10);
}

TEST_CASE("deconvolution recovers a known filter") {
  const Signal h = test::white_noise(300, 2);
  const Signal s = test::white_noise(3000, 3);
  const Signal x = test::direct_convolution(s, h);
  const ResidualRir r = identify_remaining_rir(x, s, kFs, 0.0);
  CHECK(test::relative_l2(h, Signal(r.samples.begin(), r.samples.begin() + 300)) < 1e-6);
  double tail = 0.0;
  for (std::size_t n = 300; n < r.samples.size(); ++n) tail = std::max(tail, std::abs(r.samples[n]));
  CHECK(tail < 1e-8);
}

TEST_CASE("regularization bounds the residual for a clean signal with spectral nulls") {
  // A bin-centred sine zero-padded to twice its length has exact nulls at
  // every other bin.
  const std::size_t n = 2048;
  Signal sine(n);
  for (std::size_t i = 0; i < n; ++i) sine[i] = std::sin(2.0 * M_PI * 64.0 * static_cast<double>(i) / n);
  const Signal other = test::white_noise(n, 4);

  const ResidualRir raw = identify_remaining_rir(other, sine, kFs, 0.0);
  const ResidualRir reg = identify_remaining_rir(other, sine, kFs, 1e-8);
  double raw_max = 0.0, reg_max = 0.0;
  for (double v : raw.samples) raw_max = std::max(raw_max, std::abs(v));
  for (double v : reg.samples) reg_max = std::max(reg_max, std::abs(v));

  // |X S*| / (|S|^2 + e) <= |X| / (2 sqrt(e)), and an inverse DFT of bins
  // bounded by B is bounded by B.
  RealFft fft(raw.samples.size());
  std::vector<Complex> xs(fft.bins()), ss(fft.bins());
  fft.forward(other, xs);
  fft.forward(sine, ss);
  double x_max = 0.0, s_max = 0.0;
  for (const auto& v : xs) x_max = std::max(x_max, std::abs(v));
  for (const auto& v : ss) s_max = std::max(s_max, std::abs(v));
  const double bound = x_max / (2.0 * std::sqrt(1e-8) * s_max);

  CHECK(std::isfinite(reg_max));
  CHECK(reg_max <= bound);
  CHECK(raw_max > 1e3 * reg_max);
  CHECK(reg.regularization == 1e-8);
}

TEST_CASE("deconvolution errors") {
  CHECK_THROWS_AS(identify_remaining_rir(Signal{1.0}, Signal{0.0, 0.0}, kFs), Error);
  CHECK_THROWS_AS(identify_remaining_rir(Signal{}, Signal{1.0}, kFs), Error);
  CHECK_THROWS_AS(identify_remaining_rir(Signal{1.0}, Signal{1.0}, kFs, -1.0), Error);
}

TEST_CASE("residual EDC of a perfectly enhanced signal tracks the shortened RIR") {
  const Rir shortened = shorten_rir(polack(0.7, 61, 0.5), WindowSpec::rts(0.15));
  const Signal s = test::white_noise(16000, 62);
  const Signal enhanced = test::direct_convolution(s, shortened.signal());
  const Rir residual = residual_to_rir(identify_remaining_rir(enhanced, s, kFs), 0.5);
  CHECK(residual.size() == shortened.size());
  CHECK(residual.n1() == 0);

  const Edc ref = schroeder_edc(shortened);
  const Edc got = schroeder_edc(residual);
  for (std::size_t n = 0; n < ref.size() && ref.db[n] > -40.0; ++n) {
    REQUIRE(std::abs(ref.db[n] - got.db[n]) < 0.5);
  }
  CHECK(estimate_t60(got) == doctest::Approx(estimate_t60(ref)).epsilon(0.02));
  CHECK(std::abs(estimate_t60(got) - 0.15) < 0.015);
}

TEST_CASE("EDC report") {
  const Rir a = polack(0.5, 1, 0.3);
  const Rir b = shorten_rir(a, WindowSpec::rts(0.15));
  const Rir c = shorten_rir(a, WindowSpec::early());
  const Rir d = shorten_rir(a, WindowSpec::direct_path());
  const EdcTable table = edc_report({{"unprocessed", a}, {"rts", b}, {"early", c}, {"direct_path", d}});
  REQUIRE(table.curves_db.size() == 4);
  for (const auto& curve : table.curves_db) CHECK(curve[0] == 0.0);
  CHECK(table.time_s[16] == doctest::Approx(0.001));

  std::ostringstream csv;
  table.write_csv(csv);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "time_s,unprocessed,rts,early,direct_path");
  std::getline(lines, row);
  CHECK(row == "0,0,0,0,0");

  CHECK_THROWS_AS(edc_report({}), Error);
  const Rir other_rate(Signal{1.0, 0.5}, 8000, 0);
  CHECK_THROWS_AS(edc_report({{"a", a}, {"b", other_rate}}), Error);
}

TEST_CASE("residual_to_rir truncates to the analysis length") {
  ResidualRir r;
  r.fs = 1000;
  r.samples = {0.1, 0.9, 0.2, 0.0, 0.0, 0.0};
  const Rir out = residual_to_rir(r, 0.004);
  CHECK(out.size() == 4);
  CHECK(out.n1() == 1);
  CHECK_THROWS_AS(residual_to_rir(r, 0.0), Error);
}
