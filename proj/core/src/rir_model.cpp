#include "rts/rir_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rts/acoustics.hpp"
#include "rts/error.hpp"
#include "rts/random.hpp"

namespace rts {
namespace {

std::size_t ms_to_samples(double ms, double fs) {
  return static_cast<std::size_t>(std::llround(ms * 1e-3 * fs));
}

std::size_t synth_length(double duration, double direct_delay, double fs, std::size_t* n1) {
  *n1 = static_cast<std::size_t>(std::llround(direct_delay * fs));
  const auto len = static_cast<std::size_t>(std::llround(duration * fs));
  return std::max(len, *n1 + 1);
}

}  // namespace

Rir::Rir(Signal samples, double fs, std::size_t n1, std::optional<double> t60_nominal)
    : samples_(std::move(samples)), fs_(fs), n1_(n1), t60_nominal_(t60_nominal) {
  require(fs_ > 0 && std::isfinite(fs_), ErrorCode::InvalidParameter, "RIR fs must be positive");
  require(!samples_.empty(), ErrorCode::InvalidParameter, "RIR must be non-empty");
  require(n1_ < samples_.size(), ErrorCode::InvalidParameter,
          "RIR direct-path index out of range");
  require(!t60_nominal_ || (*t60_nominal_ > 0 && std::isfinite(*t60_nominal_)),
          ErrorCode::InvalidParameter, "RIR nominal T60 must be positive");
}

Rir Rir::from_samples(Signal samples, double fs, std::optional<double> t60_nominal) {
  const std::size_t n1 = detect_direct_path(samples);
  return Rir(std::move(samples), fs, n1, t60_nominal);
}

Rir Rir::with_samples(Signal samples, std::optional<double> t60_nominal) const {
  require(samples.size() == samples_.size(), ErrorCode::DimensionMismatch,
          "replacement RIR samples must keep the original length");
  return Rir(std::move(samples), fs_, n1_, t60_nominal);
}

void check_direct_path(const Rir& rir, double guard_ms) {
  const std::size_t peak = detect_direct_path(rir.samples());
  const std::size_t guard = ms_to_samples(guard_ms, rir.fs());
  const std::size_t lo = rir.n1() > guard ? rir.n1() - guard : 0;
  require(peak >= lo && peak <= rir.n1() + guard, ErrorCode::InvalidParameter,
          "RIR peak at sample " + std::to_string(peak) + " is farther than the guard from n1 = " +
              std::to_string(rir.n1()));
}

std::size_t detect_direct_path(std::span<const double> samples) {
  require(!samples.empty(), ErrorCode::InvalidParameter, "empty RIR");
  std::size_t best = 0;
  double best_mag = std::abs(samples[0]);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double mag = std::abs(samples[i]);
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  require(best_mag > 0.0, ErrorCode::DegenerateSignal, "all-zero RIR has no direct path");
  return best;
}

std::string_view to_string(TargetWindow kind) {
  switch (kind) {
    case TargetWindow::DirectPath: return "direct_path";
    case TargetWindow::Early: return "early";
    case TargetWindow::Rts: return "rts";
    case TargetWindow::ConstExp: return "const_exp";
  }
  return "unknown";
}

TargetWindow parse_target_window(std::string_view name) {
  if (name == "direct_path" || name == "direct-path" || name == "direct") return TargetWindow::DirectPath;
  if (name == "early") return TargetWindow::Early;
  if (name == "rts") return TargetWindow::Rts;
  if (name == "const_exp" || name == "const-exp" || name == "constexp") return TargetWindow::ConstExp;
  fail(ErrorCode::InvalidParameter, "unknown window kind '" + std::string(name) + "'");
}

WindowSpec WindowSpec::direct_path(double guard_ms) {
  WindowSpec s;
  s.kind = TargetWindow::DirectPath;
  s.guard_ms = guard_ms;
  return s;
}

WindowSpec WindowSpec::early(double early_ms, double guard_ms) {
  WindowSpec s;
  s.kind = TargetWindow::Early;
  s.early_ms = early_ms;
  s.guard_ms = guard_ms;
  return s;
}

WindowSpec WindowSpec::rts(double target_t60) {
  WindowSpec s;
  s.kind = TargetWindow::Rts;
  s.target_t60 = target_t60;
  return s;
}

WindowSpec WindowSpec::const_exp(double q_const) {
  WindowSpec s;
  s.kind = TargetWindow::ConstExp;
  s.q_const = q_const;
  return s;
}

void WindowSpec::validate() const {
  require(target_t60 > 0 && std::isfinite(target_t60), ErrorCode::InvalidParameter,
          "target T60 must be positive");
  require(early_ms > 0 && std::isfinite(early_ms), ErrorCode::InvalidParameter,
          "early window length must be positive");
  require(q_const >= 0 && std::isfinite(q_const), ErrorCode::InvalidParameter,
          "constant decay rate must be non-negative");
  require(guard_ms >= 0 && std::isfinite(guard_ms), ErrorCode::InvalidParameter,
          "guard must be non-negative");
}

void to_json(nlohmann::json& j, const WindowSpec& spec) {
  j = nlohmann::json{{"kind", std::string(to_string(spec.kind))}};
  switch (spec.kind) {
    case TargetWindow::DirectPath: j["guard_ms"] = spec.guard_ms; break;
    case TargetWindow::Early:
      j["early_ms"] = spec.early_ms;
      j["guard_ms"] = spec.guard_ms;
      break;
    case TargetWindow::Rts: j["target_t60"] = spec.target_t60; break;
    case TargetWindow::ConstExp: j["q_const"] = spec.q_const; break;
  }
}

void from_json(const nlohmann::json& j, WindowSpec& spec) {
  spec = WindowSpec{};
  spec.kind = parse_target_window(j.at("kind").get<std::string>());
  if (j.contains("early_ms")) spec.early_ms = j.at("early_ms").get<double>();
  if (j.contains("target_t60")) spec.target_t60 = j.at("target_t60").get<double>();
  if (j.contains("q_const")) spec.q_const = j.at("q_const").get<double>();
  if (j.contains("guard_ms")) spec.guard_ms = j.at("guard_ms").get<double>();
  spec.validate();
}

void PolackParams::validate() const {
  require(t60 > 0 && std::isfinite(t60), ErrorCode::InvalidParameter, "T60 must be positive");
  require(direct_delay >= 0 && duration >= direct_delay && std::isfinite(duration),
          ErrorCode::InvalidParameter, "duration must be at least the direct-path delay");
  require(direct_gain > 0 && std::isfinite(direct_gain), ErrorCode::InvalidParameter,
          "direct-path gain must be positive");
  require(reverb_gain >= 0 && std::isfinite(reverb_gain), ErrorCode::InvalidParameter,
          "reverberant gain must be non-negative");
}

PolackParams PolackParams::with_drr(double t60, double duration, double direct_delay,
                                    std::uint64_t seed, double fs, double drr_db,
                                    double direct_gain) {
  PolackParams p;
  p.t60 = t60;
  p.duration = duration;
  p.direct_delay = direct_delay;
  p.direct_gain = direct_gain;
  p.seed = seed;
  p.reverb_gain = reverb_gain_for_drr(drr_db, t60, duration, direct_delay, direct_gain, fs);
  return p;
}

double polack_decay_rate(double t60, double fs) {
  require(t60 > 0 && fs > 0, ErrorCode::InvalidParameter, "T60 and fs must be positive");
  return 3.0 / (t60 * fs);
}

double reverb_gain_for_drr(double drr_db, double t60, double duration, double direct_delay,
                           double direct_gain, double fs) {
  const double p = polack_decay_rate(t60, fs);
  std::size_t n1 = 0;
  const std::size_t len = synth_length(duration, direct_delay, fs, &n1);
  const std::size_t tail = len - 1 - n1;
  if (tail == 0) return 0.0;
  // Expected tail energy per unit gain: sum_{m=1..tail} 10^(-2pm).
  const double r = std::pow(10.0, -2.0 * p);
  const double log_r = -2.0 * p * std::log(10.0);
  const double energy = r * std::expm1(static_cast<double>(tail) * log_r) / std::expm1(log_r);
  return direct_gain / std::sqrt(std::pow(10.0, drr_db / 10.0) * energy);
}

Rir synth_polack_rir(const PolackParams& params, double fs) {
  require(fs > 0 && std::isfinite(fs), ErrorCode::InvalidParameter, "fs must be positive");
  params.validate();
  const double p = polack_decay_rate(params.t60, fs);
  std::size_t n1 = 0;
  const std::size_t len = synth_length(params.duration, params.direct_delay, fs, &n1);

  Signal h(len, 0.0);
  h[n1] = params.direct_gain;
  Rng rng(params.seed);
  for (std::size_t n = n1 + 1; n < len; ++n) {
    const double env = std::pow(10.0, -p * static_cast<double>(n - n1));
    h[n] = rng.gaussian() * params.reverb_gain * env;
  }
  return Rir(std::move(h), fs, n1, params.t60);
}

double decay_rate_q(double t60_orig, double t60_target, double fs) {
  require(t60_orig > 0 && t60_target > 0 && fs > 0, ErrorCode::InvalidParameter,
          "decay_rate_q: T60s and fs must be positive");
  return 3.0 / (t60_target * fs) - 3.0 / (t60_orig * fs);
}

Signal build_window(const WindowSpec& spec, const Rir& rir, std::optional<double> t60) {
  spec.validate();
  const std::size_t len = rir.size();
  const std::size_t n1 = rir.n1();
  Signal w(len, 1.0);

  auto exponential_tail = [&](double q) {
    for (std::size_t n = n1 + 1; n < len; ++n) {
      w[n] = std::pow(10.0, -q * static_cast<double>(n - n1));
    }
  };
  auto rectangular = [&](std::size_t boundary) {
    for (std::size_t n = boundary + 1; n < len; ++n) w[n] = 0.0;
  };

  switch (spec.kind) {
    case TargetWindow::DirectPath:
      rectangular(n1 + ms_to_samples(spec.guard_ms, rir.fs()));
      break;
    case TargetWindow::Early:
      rectangular(n1 + ms_to_samples(spec.early_ms, rir.fs()) +
                  ms_to_samples(spec.guard_ms, rir.fs()));
      break;
    case TargetWindow::Rts: {
      const std::optional<double> source = t60 ? t60 : rir.t60_nominal();
      require(source.has_value(), ErrorCode::MissingT60,
              "RTS window needs the RIR's T60: supply a nominal value or a blind estimate");
      exponential_tail(decay_rate_q(*source, spec.target_t60, rir.fs()));
      break;
    }
    case TargetWindow::ConstExp:
      exponential_tail(spec.q_const);
      break;
  }
  return w;
}

Rir shorten_rir(const Rir& rir, const WindowSpec& spec, std::optional<double> t60) {
  const Signal w = build_window(spec, rir, t60);
  Signal out(rir.size());
  const auto in = rir.samples();
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = w[n] * in[n];
  std::optional<double> t60_out;
  if (spec.kind == TargetWindow::Rts) t60_out = spec.target_t60;
  return rir.with_samples(std::move(out), t60_out);
}

std::string_view to_string(T60Source source) {
  switch (source) {
    case T60Source::Nominal: return "nominal";
    case T60Source::Estimated: return "estimated";
    case T60Source::NotNeeded: return "not_needed";
  }
  return "unknown";
}

ShortenResult shorten_rir_auto(const Rir& rir, const WindowSpec& spec) {
  if (spec.kind != TargetWindow::Rts) {
    return ShortenResult{shorten_rir(rir, spec), std::nullopt, T60Source::NotNeeded};
  }
  if (rir.t60_nominal()) {
    return ShortenResult{shorten_rir(rir, spec), rir.t60_nominal(), T60Source::Nominal};
  }
  const double estimate = estimate_t60(schroeder_edc(rir));
  return ShortenResult{shorten_rir(rir, spec, estimate), estimate, T60Source::Estimated};
}

}  // namespace rts
