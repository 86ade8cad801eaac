#include <doctest.h>

#include <cmath>

#include "rts/acoustics.hpp"
#include "rts/error.hpp"
#include "rts/rir_model.hpp"
#include "support.hpp"

using namespace rts;
using rts::test::Gen;

namespace {

constexpr double kFs = 16000.0;

Rir polack(double t60, std::uint64_t seed, double duration = 1.0, double delay = 0.0) {
  return synth_polack_rir(PolackParams::with_drr(t60, duration, delay, seed, kFs), kFs);
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("Polack decay rate for T60 = 0.7 s at 16 kHz") {
  // 3 / (0.7 * 16000) = 3 / 11200
  CHECK(polack_decay_rate(0.7, kFs) == doctest::Approx(3.0 / 11200.0).epsilon(1e-15));
  CHECK(polack_decay_rate(0.7, kFs) == doctest::Approx(2.678571e-4).epsilon(1e-6));
}

TEST_CASE("Polack envelope follows the exponential law") {
  PolackParams p;
  p.t60 = 0.4;
  p.duration = 0.2;
  p.direct_delay = 0.002;
  p.direct_gain = 0.8;
  p.reverb_gain = 0.3;
  p.seed = 5;
  const Rir rir = synth_polack_rir(p, kFs);
  CHECK(rir.n1() == 32);
  CHECK(rir.size() == 3200);
  CHECK(rir.samples()[32] == 0.8);
  for (std::size_t n = 0; n < 32; ++n) CHECK(rir.samples()[n] == 0.0);

  // Dividing out the envelope leaves a unit-variance sequence.
  const double rate = 3.0 / (0.4 * kFs);
  double sum2 = 0.0;
  for (std::size_t n = 33; n < rir.size(); ++n) {
    const double b = rir.samples()[n] / (0.3 * std::pow(10.0, -rate * static_cast<double>(n - 32)));
    sum2 += b * b;
  }
  CHECK(sum2 / static_cast<double>(rir.size() - 33) == doctest::Approx(1.0).epsilon(0.08));
  CHECK(rir.t60_nominal() == std::optional<double>(0.4));
}

TEST_CASE("zero reverb gain gives a scaled impulse") {
  PolackParams p;
  p.reverb_gain = 0.0;
  p.direct_gain = 0.7;
  p.direct_delay = 0.001;
  p.duration = 0.05;
  const Rir rir = synth_polack_rir(p, kFs);
  for (std::size_t n = 0; n < rir.size(); ++n) {
    CHECK(rir.samples()[n] == (n == 16 ? 0.7 : 0.0));
  }
}

TEST_CASE("DRR-derived reverb gain hits the requested ratio in expectation") {
  for (double drr : {-6.0, 0.0, 10.0}) {
    const double g = reverb_gain_for_drr(drr, 0.5, 1.0, 0.0, 1.0, kFs);
    // Brute-force sum of the envelope energy.
    const double p = 3.0 / (0.5 * kFs);
    double energy = 0.0;
    for (int m = 1; m < 16000; ++m) energy += std::pow(10.0, -2.0 * p * m);
    CHECK(10.0 * std::log10(1.0 / (g * g * energy)) == doctest::Approx(drr).epsilon(1e-9));
  }
}

TEST_CASE("Polack synthesis rejects bad parameters") {
  PolackParams p;
  p.t60 = 0.0;
  CHECK(code_of([&] { synth_polack_rir(p, kFs); }) == ErrorCode::InvalidParameter);
  p = PolackParams{};
  CHECK(code_of([&] { synth_polack_rir(p, 0.0); }) == ErrorCode::InvalidParameter);
  p.direct_delay = 2.0;
  CHECK(code_of([&] { synth_polack_rir(p, kFs); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("Polack synthesis is deterministic per seed") {
  CHECK(polack(0.5, 17).signal() == polack(0.5, 17).signal());
  CHECK(polack(0.5, 17).signal() != polack(0.5, 18).signal());
}

TEST_CASE("blind T60 of Polack RIRs is within 5% (median of 20 seeds)") {
  for (double t60 : {0.25, 0.5, 0.7}) {
    std::vector<double> est;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      est.push_back(estimate_t60(schroeder_edc(polack(t60, 1000 + seed))));
    }
    CAPTURE(t60);
    CHECK(std::abs(test::median(est) - t60) < 0.05 * t60);
  }
}

TEST_CASE("decay_rate_q hand values") {
  // 3/2400 - 3/11200 = 11/11200
  CHECK(std::abs(decay_rate_q(0.7, 0.15, kFs) - 11.0 / 11200.0) < 1e-15);
  // 3/2400 - 3/4000 = 1/2000
  CHECK(std::abs(decay_rate_q(0.25, 0.15, kFs) - 5.0e-4) < 1e-15);
  CHECK(code_of([] { decay_rate_q(0.0, 0.15, kFs); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { decay_rate_q(0.7, 0.15, 0.0); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("property: q(T, T) = 0 exactly and sign(q) = sign(T - T')") {
  Gen gen(21);
  for (int i = 0; i < 500; ++i) {
    const double t = gen.real_in(0.01, 3.0);
    const double t2 = gen.real_in(0.01, 3.0);
    const double fs = gen.pick(std::vector<double>{8000.0, 16000.0, 44100.0, 48000.0});
    CHECK(decay_rate_q(t, t, fs) == 0.0);
    const double q = decay_rate_q(t, t2, fs);
    if (t2 < t) CHECK(q > 0.0);
    if (t2 > t) CHECK(q < 0.0);
  }
}

TEST_CASE("RTS window value 1000 samples after n1") {
  const Rir rir(Signal(1500, 0.01), kFs, 100, 0.7);
  Signal h = rir.signal();
  h[100] = 1.0;
  const Rir peaked(h, kFs, 100, 0.7);
  const Signal w = build_window(WindowSpec::rts(0.15), peaked);
  CHECK(w[1100] == doctest::Approx(std::pow(10.0, -11000.0 / 11200.0)).epsilon(1e-12));
  CHECK(w[1100] == doctest::Approx(0.10420).epsilon(5e-5));
}

TEST_CASE("every window is 1 up to and at n1") {
  const Rir rir = polack(0.5, 3, 0.3, 0.01);
  for (const WindowSpec& spec : {WindowSpec::direct_path(), WindowSpec::early(), WindowSpec::rts(),
                                 WindowSpec::const_exp(1e-3)}) {
    const Signal w = build_window(spec, rir);
    for (std::size_t n = 0; n <= rir.n1(); ++n) CHECK(w[n] == 1.0);
  }
}

TEST_CASE("RTS to the nominal T60 is the identity") {
  const Rir rir = polack(0.5, 4);
  const Signal w = build_window(WindowSpec::rts(0.5), rir);
  for (double v : w) CHECK(v == 1.0);
  const Rir out = shorten_rir(rir, WindowSpec::rts(0.5));
  CHECK(out.signal() == rir.signal());
}

TEST_CASE("RTS needs a T60") {
  const Rir bare(Signal{1.0, 0.5, 0.25}, kFs, 0);
  CHECK(code_of([&] { build_window(WindowSpec::rts(), bare); }) == ErrorCode::MissingT60);
  CHECK_NOTHROW(build_window(WindowSpec::rts(), bare, 0.5));
  CHECK_NOTHROW(build_window(WindowSpec::early(), bare));
}

TEST_CASE("RTS shortening lands on 0.15 s (median of 20 seeds)") {
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    est.push_back(estimate_t60(schroeder_edc(shorten_rir(polack(0.7, 50 + seed), WindowSpec::rts(0.15)))));
  }
  const double m = test::median(est);
  CHECK(m >= 0.135);
  CHECK(m <= 0.165);
}

TEST_CASE("early window zeroes everything past n1 + 50 ms + guard") {
  const Rir rir = polack(0.5, 8, 0.5, 0.01);
  const Rir out = shorten_rir(rir, WindowSpec::early(50.0));
  const std::size_t boundary = rir.n1() + 800 + 8;
  for (std::size_t n = boundary + 1; n < out.size(); ++n) REQUIRE(out.samples()[n] == 0.0);
  for (std::size_t n = 0; n <= boundary; ++n) REQUIRE(out.samples()[n] == rir.samples()[n]);
}

TEST_CASE("direct-path window keeps only the guard region") {
  const Rir rir = polack(0.5, 9, 0.2, 0.005);
  const Rir out = shorten_rir(rir, WindowSpec::direct_path(0.5));
  for (std::size_t n = 0; n < out.size(); ++n) {
    const bool kept = n <= rir.n1() + 8;
    CHECK(out.samples()[n] == (kept ? rir.samples()[n] : 0.0));
  }
  CHECK_FALSE(out.t60_nominal().has_value());
}

TEST_CASE("property: windows lie in [0, 1] and never increase after n1") {
  Gen gen(31);
  for (int i = 0; i < 60; ++i) {
    const auto len = gen.size_in(2, 4000);
    const auto n1 = gen.size_in(0, len - 1);
    Signal h = gen.signal(len, 0.01);
    h[n1] = 1.0;
    const Rir rir(h, kFs, n1, gen.real_in(0.2, 1.5));
    WindowSpec spec;
    switch (gen.size_in(0, 3)) {
      case 0: spec = WindowSpec::direct_path(gen.real_in(0.0, 2.0)); break;
      case 1: spec = WindowSpec::early(gen.real_in(1.0, 80.0), gen.real_in(0.0, 2.0)); break;
      case 2: spec = WindowSpec::rts(gen.real_in(0.05, *rir.t60_nominal())); break;
      default: spec = WindowSpec::const_exp(gen.real_in(0.0, 1e-2)); break;
    }
    const Signal w = build_window(spec, rir);
    REQUIRE(w.size() == len);
    for (std::size_t n = n1; n < len; ++n) {
      CHECK(w[n] >= 0.0);
      CHECK(w[n] <= 1.0);
      if (n > n1) CHECK(w[n] <= w[n - 1]);
    }
  }
}

TEST_CASE("property: RTS windows compose (T1 -> T2 -> T3 = T1 -> T3)") {
  Gen gen(32);
  for (int i = 0; i < 50; ++i) {
    const double t1 = gen.real_in(0.3, 1.2);
    const double t2 = gen.real_in(0.15, t1);
    const double t3 = gen.real_in(0.05, t2);
    Signal h(gen.size_in(10, 3000), 0.0);
    const auto n1 = gen.size_in(0, h.size() - 1);
    h[n1] = 1.0;
    const Rir a(h, kFs, n1);
    const Signal w12 = build_window(WindowSpec::rts(t2), a, t1);
    const Signal w23 = build_window(WindowSpec::rts(t3), a, t2);
    const Signal w13 = build_window(WindowSpec::rts(t3), a, t1);
    for (std::size_t n = 0; n < h.size(); ++n) {
      CHECK(std::abs(w12[n] * w23[n] - w13[n]) <= 1e-12 * std::max(1e-300, w13[n]) + 1e-300);
    }
  }
}

TEST_CASE("direct-path detection") {
  Signal impulse(10, 0.0);
  impulse[5] = 1.0;
  CHECK(detect_direct_path(impulse) == 5);
  CHECK(polack(0.5, 1, 0.3, 0.01).n1() == 160);
  CHECK(detect_direct_path(polack(0.5, 1, 0.3, 0.01).samples()) == 160);
  Signal ties(12, 0.0);
  ties[3] = -2.0;
  ties[9] = 2.0;
  CHECK(detect_direct_path(ties) == 3);
  CHECK(code_of([] { detect_direct_path(Signal(4, 0.0)); }) == ErrorCode::DegenerateSignal);
  CHECK(code_of([] { detect_direct_path(Signal{}); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("direct-path guard check") {
  Signal h(100, 0.0);
  h[40] = 1.0;
  CHECK_NOTHROW(check_direct_path(Rir(h, kFs, 35), 0.5));
  CHECK_THROWS_AS(check_direct_path(Rir(h, kFs, 20), 0.5), Error);
}

TEST_CASE("Rir invariants") {
  CHECK_THROWS_AS(Rir(Signal{}, kFs, 0), Error);
  CHECK_THROWS_AS(Rir(Signal{1.0}, 0.0, 0), Error);
  CHECK_THROWS_AS(Rir(Signal{1.0}, kFs, 1), Error);
  CHECK_THROWS_AS(Rir(Signal{1.0}, kFs, 0, -1.0), Error);
  CHECK_THROWS_AS(Rir(Signal{1.0, 2.0}, kFs, 0).with_samples(Signal{1.0}, std::nullopt), Error);
}

TEST_CASE("window spec validation, names and JSON") {
  CHECK_THROWS_AS(WindowSpec::rts(0.0).validate(), Error);
  CHECK_THROWS_AS(WindowSpec::early(-1.0).validate(), Error);
  CHECK_THROWS_AS(WindowSpec::const_exp(-1e-3).validate(), Error);
  CHECK(parse_target_window("direct-path") == TargetWindow::DirectPath);
  CHECK(parse_target_window("const_exp") == TargetWindow::ConstExp);
  CHECK_THROWS_AS(parse_target_window("late"), Error);
  for (const WindowSpec& spec : {WindowSpec::direct_path(0.25), WindowSpec::early(30.0, 1.0),
                                 WindowSpec::rts(0.2), WindowSpec::const_exp(2e-4)}) {
    const nlohmann::json j = spec;
    CHECK(j.get<WindowSpec>() == spec);
    CHECK(parse_target_window(j.at("kind").get<std::string>()) == spec.kind);
  }
}

TEST_CASE("shorten_rir_auto falls back to the blind estimate") {
  const Rir nominal = polack(0.7, 77);
  const Rir bare = Rir::from_samples(nominal.signal(), kFs);
  const ShortenResult a = shorten_rir_auto(nominal, WindowSpec::rts(0.15));
  CHECK(a.source == T60Source::Nominal);
  CHECK(a.t60_used == std::optional<double>(0.7));
  const ShortenResult b = shorten_rir_auto(bare, WindowSpec::rts(0.15));
  CHECK(b.source == T60Source::Estimated);
  REQUIRE(b.t60_used.has_value());
  CHECK(*b.t60_used == estimate_t60(schroeder_edc(bare)));
  const ShortenResult c = shorten_rir_auto(bare, WindowSpec::early());
  CHECK(c.source == T60Source::NotNeeded);
  CHECK(to_string(T60Source::Estimated) == "estimated");
}
