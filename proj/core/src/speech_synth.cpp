#include <array>
#include <cmath>
#include <numbers>

#include "rts/dataset.hpp"
#include "rts/error.hpp"
#include "rts/random.hpp"

namespace rts {
namespace {

class Resonator {
 public:
  void tune(double freq, double bandwidth, double fs) {
    const double r = std::exp(-std::numbers::pi * bandwidth / fs);
    a1_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
    a2_ = -r * r;
    gain_ = 1.0 - r;
  }
  double step(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, gain_ = 1.0;
  double y1_ = 0.0, y2_ = 0.0;
};

double draw(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

}  // namespace

Signal synth_speech_like(double duration, double fs, std::uint64_t seed) {
  require(duration > 0 && fs > 0, ErrorCode::InvalidParameter,
          "speech duration and fs must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  Signal out(n, 0.0);
  Rng rng(seed);
  std::array<Resonator, 3> formants;

  std::size_t pos = static_cast<std::size_t>(draw(rng, 0.02, 0.1) * fs);
  double phase = 0.0;
  while (pos < n) {
    const auto len = static_cast<std::size_t>(draw(rng, 0.12, 0.30) * fs);
    const bool voiced = rng.uniform() < 0.8;
    const double f0_start = draw(rng, 90.0, 220.0);
    const double f0_end = f0_start * draw(rng, 0.85, 1.15);
    if (voiced) {
      formants[0].tune(draw(rng, 300.0, 800.0), 80.0, fs);
      formants[1].tune(draw(rng, 900.0, 2300.0), 120.0, fs);
      formants[2].tune(draw(rng, 2400.0, 3200.0), 160.0, fs);
    } else {
      formants[0].tune(draw(rng, 2500.0, 3500.0), 600.0, fs);
      formants[1].tune(draw(rng, 4000.0, 5500.0), 900.0, fs);
      formants[2].tune(draw(rng, 5500.0, 7000.0), 1200.0, fs);
    }
    const double level = draw(rng, 0.5, 1.0);

    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double frac = static_cast<double>(i) / static_cast<double>(len);
      double excitation = 0.0;
      if (voiced) {
        phase += (f0_start + (f0_end - f0_start) * frac) / fs;
        if (phase >= 1.0) {
          phase -= 1.0;
          excitation += 1.0;
        }
        excitation += 0.02 * rng.gaussian();
      } else {
        excitation = 0.3 * rng.gaussian();
      }
      double y = 0.0;
      for (auto& f : formants) y += f.step(excitation);
      const double envelope = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * frac);
      out[pos + i] += level * envelope * y;
    }
    pos += len;
    // Inter-syllable gap, occasionally a longer pause.
    const double gap = rng.uniform() < 0.15 ? draw(rng, 0.2, 0.5) : draw(rng, 0.03, 0.15);
    pos += static_cast<std::size_t>(gap * fs);
  }

  double power = 0.0;
  for (double x : out) power += x * x;
  power /= static_cast<double>(n);
  if (power > 0.0) {
    const double scale = 0.05 / std::sqrt(power);
    for (double& x : out) x *= scale;
  }
  return out;
}

}  // namespace rts
