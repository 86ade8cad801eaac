#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rts/types.hpp"

namespace rts {

// A sampled room impulse response. `n1` is the direct-path peak index; the
// target windows measure their boundaries from it.
class Rir {
 public:
  Rir(Signal samples, double fs, std::size_t n1,
      std::optional<double> t60_nominal = std::nullopt);

  // Locates n1 with detect_direct_path().
  static Rir from_samples(Signal samples, double fs,
                          std::optional<double> t60_nominal = std::nullopt);

  std::span<const double> samples() const noexcept { return samples_; }
  const Signal& signal() const noexcept { return samples_; }
  double fs() const noexcept { return fs_; }
  std::size_t n1() const noexcept { return n1_; }
  std::optional<double> t60_nominal() const noexcept { return t60_nominal_; }
  std::size_t size() const noexcept { return samples_.size(); }

  // Same fs and n1, new samples of identical length.
  Rir with_samples(Signal samples, std::optional<double> t60_nominal) const;

 private:
  Signal samples_;
  double fs_;
  std::size_t n1_;
  std::optional<double> t60_nominal_;
};

// Throws unless argmax|samples| lies within guard_ms of n1.
void check_direct_path(const Rir& rir, double guard_ms);

// argmax |samples|, ties resolved toward the smallest index.
std::size_t detect_direct_path(std::span<const double> samples);

enum class TargetWindow { DirectPath, Early, Rts, ConstExp };

std::string_view to_string(TargetWindow kind);
TargetWindow parse_target_window(std::string_view name);

struct WindowSpec {
  TargetWindow kind = TargetWindow::Rts;
  double early_ms = 50.0;    // Early
  double target_t60 = 0.15;  // Rts, seconds
  double q_const = 0.0;      // ConstExp, per-sample log10 decay
  double guard_ms = 0.5;     // DirectPath / Early

  static WindowSpec direct_path(double guard_ms = 0.5);
  static WindowSpec early(double early_ms = 50.0, double guard_ms = 0.5);
  static WindowSpec rts(double target_t60 = 0.15);
  static WindowSpec const_exp(double q_const);

  void validate() const;

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

void to_json(nlohmann::json& j, const WindowSpec& spec);
void from_json(const nlohmann::json& j, WindowSpec& spec);

struct PolackParams {
  double t60 = 0.5;           // s
  double duration = 1.0;      // s
  double direct_delay = 0.0;  // s
  double direct_gain = 1.0;
  double reverb_gain = 0.0;   // envelope amplitude at n1
  std::uint64_t seed = 0;

  void validate() const;

  // Fills reverb_gain so that direct energy / reverberant energy = drr_db.
  static PolackParams with_drr(double t60, double duration, double direct_delay,
                               std::uint64_t seed, double fs, double drr_db = 0.0,
                               double direct_gain = 1.0);
};

// Envelope rate p = 3 / (T60 fs): amplitude falls as 10^(-p n).
double polack_decay_rate(double t60, double fs);

// Reverberant-tail amplitude giving the requested direct-to-reverberant ratio.
double reverb_gain_for_drr(double drr_db, double t60, double duration, double direct_delay,
                           double direct_gain, double fs);

// Polack model: direct impulse at n1 = round(direct_delay fs), zero before,
// b(n) reverb_gain 10^(-p (n - n1)) after, b ~ N(0, 1) from Rng(seed).
Rir synth_polack_rir(const PolackParams& params, double fs);

// Extra window decay that takes a T60 to a target T60:
// q = 3/(t60_target fs) - 3/(t60_orig fs). Negative when the target is longer.
double decay_rate_q(double t60_orig, double t60_target, double fs);

// Target window over the RIR's support; `t60` overrides the RIR's nominal T60
// for the Rts kind and is required when the RIR has none.
Signal build_window(const WindowSpec& spec, const Rir& rir,
                    std::optional<double> t60 = std::nullopt);

// a_d(n) = w(n) a(n); same length and n1.
Rir shorten_rir(const Rir& rir, const WindowSpec& spec,
                std::optional<double> t60 = std::nullopt);

enum class T60Source { Nominal, Estimated, NotNeeded };
std::string_view to_string(T60Source source);

struct ShortenResult {
  Rir rir;
  std::optional<double> t60_used;
  T60Source source = T60Source::NotNeeded;
};

// shorten_rir with the T60 falling back to the blind Schroeder estimate when
// the RIR carries no nominal value.
ShortenResult shorten_rir_auto(const Rir& rir, const WindowSpec& spec);

}  // namespace rts
