#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "rts/acoustics.hpp"
#include "rts/crossband.hpp"
#include "rts/dataset.hpp"
#include "rts/error.hpp"
#include "rts/ftm.hpp"
#include "rts/metrics.hpp"
#include "rts/random.hpp"
#include "rts/rir_io.hpp"
#include "rts/rir_model.hpp"
#include "rts/stft.hpp"
#include "rts/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rts::cli {
namespace {

struct Globals {
  double fs = 16000.0;
  std::size_t win = 512;
  std::size_t hop = 256;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string log_level = "info";
  std::string config;
  bool dump_config = false;

  StftConfig stft() const {
    StftConfig c;
    c.win_len = win;
    c.hop = hop;
    c.fft_len = win;
    c.fs = fs;
    return c;
  }
};

struct Context {
  Globals g;
  std::shared_ptr<spdlog::logger> log;

  fs::path output(const std::string& explicit_path, const std::string& default_name) const {
    if (!explicit_path.empty()) return explicit_path;
    return fs::path(g.out) / default_name;
  }
};

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

SampleFormat parse_format(const std::string& name) {
  if (name == "f32" || name == "float32") return SampleFormat::Float32;
  if (name == "pcm16" || name == "s16") return SampleFormat::Pcm16;
  fail(ErrorCode::InvalidParameter, "unknown sample format '" + name + "'");
}

WavData read_wav_at(const fs::path& path, double fs) {
  WavData wav = read_wav(path);
  require(wav.fs == fs, ErrorCode::InvalidParameter,
          path.string() + " has fs " + std::to_string(wav.fs) + ", expected " + std::to_string(fs));
  return wav;
}

// A command registers its options on `sub` and returns the action to run.
using Action = std::function<json(const Context&)>;
using Registrar = std::function<Action(CLI::App& sub)>;

Action synth_rir_command(CLI::App& sub) {
  struct Opts {
    double t60 = 0.5, duration = 1.0, delay = 0.0, drr = 0.0, gain = 1.0;
    std::string output, format = "f32";
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--t60", o->t60, "Reverberation time (s)")->required();
  sub.add_option("--duration", o->duration, "RIR length (s)")->capture_default_str();
  sub.add_option("--delay", o->delay, "Direct-path delay (s)")->capture_default_str();
  sub.add_option("--drr", o->drr, "Direct-to-reverberant ratio (dB)")->capture_default_str();
  sub.add_option("--gain", o->gain, "Direct-path amplitude")->capture_default_str();
  sub.add_option("--output", o->output, "Output WAV (default <out>/rir.wav)");
  sub.add_option("--format", o->format, "f32 or pcm16")->capture_default_str();
  return [o](const Context& ctx) {
    const double fs = ctx.g.fs;
    const auto params =
        PolackParams::with_drr(o->t60, o->duration, o->delay, ctx.g.seed, fs, o->drr, o->gain);
    const Rir rir = synth_polack_rir(params, fs);
    const fs::path path = ctx.output(o->output, "rir.wav");
    ensure_parent(path);
    RirSidecar sidecar;
    sidecar.n1 = rir.n1();
    sidecar.t60_nominal = o->t60;
    sidecar.seed = ctx.g.seed;
    sidecar.t60_source = "nominal";
    write_rir(path, rir, sidecar, parse_format(o->format));
    ctx.log->info("wrote {} ({} samples)", path.string(), rir.size());
    return json{{"path", path.string()},
                {"sidecar", sidecar_path(path).string()},
                {"n1", rir.n1()},
                {"length", rir.size()},
                {"t60_nominal", o->t60},
                {"reverb_gain", params.reverb_gain},
                {"seed", ctx.g.seed}};
  };
}

WindowSpec window_from(const std::string& mode, double target_t60, double early_ms,
                       double guard_ms, double q) {
  WindowSpec spec;
  spec.kind = parse_target_window(mode);
  spec.target_t60 = target_t60;
  spec.early_ms = early_ms;
  spec.guard_ms = guard_ms;
  spec.q_const = q;
  spec.validate();
  return spec;
}

Action shorten_command(CLI::App& sub) {
  struct Opts {
    std::string rir, mode = "rts", output, format = "f32";
    double target_t60 = 0.15, early_ms = 50.0, guard_ms = 0.5, q = 0.0;
    std::optional<double> t60;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--rir", o->rir, "Input RIR WAV")->required();
  sub.add_option("--mode", o->mode, "direct_path, early, rts or const_exp")->capture_default_str();
  sub.add_option("--target-t60", o->target_t60, "RTS target T60 (s)")->capture_default_str();
  sub.add_option("--early-ms", o->early_ms, "Early window length (ms)")->capture_default_str();
  sub.add_option("--guard-ms", o->guard_ms, "Direct-path guard (ms)")->capture_default_str();
  sub.add_option("--q", o->q, "Constant exponential decay per sample")->capture_default_str();
  sub.add_option("--t60", o->t60, "Override the RIR's T60 (s)");
  sub.add_option("--output", o->output, "Output WAV (default <out>/<stem>_<mode>.wav)");
  sub.add_option("--format", o->format, "f32 or pcm16")->capture_default_str();
  return [o](const Context& ctx) {
    const LoadedRir loaded = read_rir(o->rir);
    const WindowSpec spec = window_from(o->mode, o->target_t60, o->early_ms, o->guard_ms, o->q);
    ShortenResult result = o->t60
                               ? ShortenResult{shorten_rir(loaded.rir, spec, o->t60), o->t60,
                                               T60Source::Nominal}
                               : shorten_rir_auto(loaded.rir, spec);
    const std::string mode(to_string(spec.kind));
    const fs::path path =
        ctx.output(o->output, fs::path(o->rir).stem().string() + "_" + mode + ".wav");
    ensure_parent(path);
    RirSidecar sidecar;
    sidecar.n1 = result.rir.n1();
    sidecar.t60_nominal = result.rir.t60_nominal();
    sidecar.window_spec = spec;
    sidecar.t60_source = std::string(to_string(result.source));
    write_rir(path, result.rir, sidecar, parse_format(o->format));
    ctx.log->info("shortened {} with {} window", o->rir, mode);
    return json{{"path", path.string()},
                {"window_spec", spec},
                {"n1", result.rir.n1()},
                {"t60_used", optional_json(result.t60_used)},
                {"t60_source", to_string(result.source)}};
  };
}

Action edc_command(CLI::App& sub) {
  struct Opts {
    std::vector<std::string> rirs, labels;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--rir", o->rirs, "RIR WAV files")->required();
  sub.add_option("--label", o->labels, "Curve labels (default file stems)");
  sub.add_option("--output", o->output, "CSV path (default <out>/edc.csv)");
  return [o](const Context& ctx) {
    require(o->labels.empty() || o->labels.size() == o->rirs.size(), ErrorCode::InvalidParameter,
            "--label count must match --rir count");
    std::vector<std::pair<std::string, Rir>> rirs;
    json t60s = json::object();
    for (std::size_t i = 0; i < o->rirs.size(); ++i) {
      const std::string label =
          o->labels.empty() ? fs::path(o->rirs[i]).stem().string() : o->labels[i];
      Rir rir = read_rir(o->rirs[i]).rir;
      try {
        t60s[label] = estimate_t60(schroeder_edc(rir));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientDecay) throw;
        t60s[label] = nullptr;
      }
      rirs.emplace_back(label, std::move(rir));
    }
    const EdcTable table = edc_report(rirs);
    const fs::path path = ctx.output(o->output, "edc.csv");
    ensure_parent(path);
    std::ofstream csv(path);
    require(static_cast<bool>(csv), ErrorCode::Io, "cannot write " + path.string());
    table.write_csv(csv);
    return json{{"path", path.string()},
                {"labels", table.labels},
                {"rows", table.time_s.size()},
                {"t60", t60s}};
  };
}

Action t60_command(CLI::App& sub) {
  struct Opts {
    std::string rir;
    double upper = -5.0, lower = -25.0;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--rir", o->rir, "RIR WAV")->required();
  sub.add_option("--upper", o->upper, "Fit range upper bound (dB)")->capture_default_str();
  sub.add_option("--lower", o->lower, "Fit range lower bound (dB)")->capture_default_str();
  return [o](const Context&) {
    const LoadedRir loaded = read_rir(o->rir);
    const double t60 = estimate_t60(schroeder_edc(loaded.rir), FitRange{o->upper, o->lower});
    return json{{"t60", t60},
                {"fit_range_db", {o->upper, o->lower}},
                {"n1", loaded.rir.n1()},
                {"t60_nominal", optional_json(loaded.rir.t60_nominal())}};
  };
}

Action q_param_command(CLI::App& sub) {
  struct Opts {
    double t60 = 0.0, target = 0.15;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--t60", o->t60, "Original T60 (s)")->required();
  sub.add_option("--target-t60", o->target, "Target T60 (s)")->capture_default_str();
  return [o](const Context& ctx) {
    const double q = decay_rate_q(o->t60, o->target, ctx.g.fs);
    char shown[32];
    std::snprintf(shown, sizeof shown, "%.6e", q);
    return json{{"q", q}, {"q_display", shown}, {"t60", o->t60}, {"target_t60", o->target},
                {"fs", ctx.g.fs}};
  };
}

Action crossband_check_command(CLI::App& sub) {
  struct Opts {
    std::string rir, filters;
    std::optional<double> t60;
    double duration = 0.5, signal_s = 1.0;
    std::size_t radius = 4;
    bool full = false;
  };
  auto o = std::make_shared<Opts>();
  auto* src = sub.add_option("--rir", o->rir, "RIR WAV");
  sub.add_option("--t60", o->t60, "Synthesize a Polack RIR with this T60 instead")->excludes(src);
  sub.add_option("--duration", o->duration, "Synthesized RIR length (s)")->capture_default_str();
  sub.add_option("--radius", o->radius, "Largest neighbor radius l")->capture_default_str();
  sub.add_option("--signal-seconds", o->signal_s, "White-noise source length (s)")
      ->capture_default_str();
  sub.add_flag("--full", o->full, "Also check the full-radius model");
  sub.add_option("--filters", o->filters, "Write the radius-l filters as .ftm");
  return [o](const Context& ctx) {
    const StftConfig config = ctx.g.stft();
    require(!o->rir.empty() || o->t60, ErrorCode::InvalidParameter, "need --rir or --t60");
    const Rir rir = o->t60 ? synth_polack_rir(PolackParams::with_drr(*o->t60, o->duration, 0.0,
                                                                     derive_seed(ctx.g.seed, "rir"),
                                                                     config.fs),
                                              config.fs)
                           : read_rir(o->rir).rir;
    Rng rng(derive_seed(ctx.g.seed, "source"));
    Signal s(static_cast<std::size_t>(std::llround(o->signal_s * config.fs)));
    for (double& v : s) v = rng.gaussian();

    const std::size_t top = o->full ? config.fft_len / 2 : o->radius;
    require(o->radius <= config.fft_len / 2, ErrorCode::InvalidParameter, "radius too large");
    const CrossbandFilters all = crossband_filters(rir, config, std::max(top, o->radius));
    json errors = json::array();
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l <= o->radius; ++l) {
      const double e = model_error(s, rir, all.restricted(l));
      monotone = monotone && e <= previous + 1e-12;
      previous = e;
      errors.push_back(e);
      ctx.log->debug("l = {}: model error {:.3e}", l, e);
    }
    json summary{{"model_error", errors},
                 {"monotone", monotone},
                 {"narrowband_error", narrowband_error(s, rir, config)},
                 {"filter_length", all.length()},
                 {"lead", all.lead()},
                 {"rir_length", rir.size()}};
    if (o->full) summary["full_radius_error"] = model_error(s, rir, all);
    if (!o->filters.empty()) {
      ensure_parent(o->filters);
      write_crossband_filters(o->filters, all.restricted(o->radius));
      summary["filters"] = o->filters;
    }
    return summary;
  };
}

Action ident_rir_command(CLI::App& sub) {
  struct Opts {
    std::string enhanced, clean, output;
    double eps = kDefaultDeconvEpsilon, seconds = 1.0;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--enhanced", o->enhanced, "Processed signal WAV")->required();
  sub.add_option("--clean", o->clean, "Dry source WAV")->required();
  sub.add_option("--eps", o->eps, "Relative deconvolution regularization")->capture_default_str();
  sub.add_option("--seconds", o->seconds, "Residual RIR length (s)")->capture_default_str();
  sub.add_option("--output", o->output, "Output WAV (default <out>/residual_rir.wav)");
  return [o](const Context& ctx) {
    const WavData enhanced = read_wav_at(o->enhanced, ctx.g.fs);
    const WavData clean = read_wav_at(o->clean, ctx.g.fs);
    const ResidualRir residual =
        identify_remaining_rir(enhanced.samples, clean.samples, ctx.g.fs, o->eps);
    const Rir rir = residual_to_rir(residual, o->seconds);
    std::optional<double> t60;
    try {
      t60 = estimate_t60(schroeder_edc(rir));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientDecay) throw;
      ctx.log->warn("residual RIR does not decay enough for a T60 fit");
    }
    const fs::path path = ctx.output(o->output, "residual_rir.wav");
    ensure_parent(path);
    RirSidecar sidecar;
    sidecar.n1 = rir.n1();
    sidecar.t60_estimated = t60;
    sidecar.t60_source = t60 ? std::optional<std::string>("estimated") : std::nullopt;
    write_rir(path, rir, sidecar);
    return json{{"path", path.string()},
                {"n1", rir.n1()},
                {"length", rir.size()},
                {"regularization", residual.regularization},
                {"t60_estimated", optional_json(t60)}};
  };
}

Action synth_noise_command(CLI::App& sub) {
  struct Opts {
    std::string kind = "pink", output, format = "f32";
    double duration = 3.0;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--kind", o->kind, "white or pink")->capture_default_str();
  sub.add_option("--duration", o->duration, "Length (s)")->capture_default_str();
  sub.add_option("--output", o->output, "Output WAV (default <out>/noise_<kind>.wav)");
  sub.add_option("--format", o->format, "f32 or pcm16")->capture_default_str();
  return [o](const Context& ctx) {
    const NoiseKind kind = parse_noise_kind(o->kind);
    const Signal noise = synth_noise(kind, o->duration, ctx.g.fs, ctx.g.seed);
    const fs::path path = ctx.output(o->output, "noise_" + o->kind + ".wav");
    ensure_parent(path);
    write_wav(path, noise, ctx.g.fs, parse_format(o->format));
    return json{{"path", path.string()}, {"kind", o->kind}, {"samples", noise.size()},
                {"seed", ctx.g.seed}};
  };
}

Action build_dataset_command(CLI::App& sub) {
  struct Opts {
    std::string manifest, format = "f32";
    unsigned jobs = 1;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--manifest", o->manifest, "JSON-lines manifest")->required();
  sub.add_option("--jobs", o->jobs, "Parallel entries")->capture_default_str();
  sub.add_option("--format", o->format, "f32 or pcm16")->capture_default_str();
  return [o](const Context& ctx) {
    const MixtureManifest manifest = MixtureManifest::load(o->manifest);
    BuildOptions options;
    options.seed = ctx.g.seed;
    options.jobs = std::max(1U, o->jobs);
    options.fs = ctx.g.fs;
    options.format = parse_format(o->format);
    ctx.log->info("building {} entries into {}", manifest.entries.size(), ctx.g.out);
    const BuildReport report = build_dataset(manifest, ctx.g.out, options);
    for (const auto& outcome : report.outcomes) {
      if (!outcome.ok) ctx.log->warn("{}: {}", outcome.utt_id, outcome.error);
    }
    json summary = report.to_json();
    summary["out_dir"] = ctx.g.out;
    return summary;
  };
}

Action features_command(CLI::App& sub) {
  struct Opts {
    std::string wav, output, phase;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--wav", o->wav, "Input WAV")->required();
  sub.add_option("--output", o->output, "Feature file (default <out>/<stem>.ftm)");
  sub.add_option("--phase", o->phase, "Also write the phase grid here");
  return [o](const Context& ctx) {
    const WavData wav = read_wav_at(o->wav, ctx.g.fs);
    const Spectrogram spec = stft(wav.samples, ctx.g.stft());
    const FeatureMatrix feats = features(spec);
    const fs::path path = ctx.output(o->output, fs::path(o->wav).stem().string() + ".ftm");
    ensure_parent(path);
    write_feature_matrix(path, feats);
    json summary{{"path", path.string()},
                 {"dims", {feats.values.bins(), feats.values.frames()}},
                 {"signal_length", wav.samples.size()}};
    if (!o->phase.empty()) {
      ensure_parent(o->phase);
      write_phase(o->phase, phase_of(spec));
      summary["phase"] = o->phase;
    }
    return summary;
  };
}

Action resynth_command(CLI::App& sub) {
  struct Opts {
    std::string features, phase, output, format = "f32";
    std::optional<std::size_t> length;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--features", o->features, "Feature .ftm")->required();
  sub.add_option("--phase", o->phase, "Phase .ftm")->required();
  sub.add_option("--length", o->length, "Output length in samples");
  sub.add_option("--output", o->output, "Output WAV (default <out>/<stem>.wav)");
  sub.add_option("--format", o->format, "f32 or pcm16")->capture_default_str();
  return [o](const Context& ctx) {
    const FeatureMatrix feats = read_feature_matrix(o->features, ctx.g.stft());
    const Grid<double> phase = read_phase(o->phase);
    const Signal y = resynth(feats, phase, o->length);
    const fs::path path = ctx.output(o->output, fs::path(o->features).stem().string() + ".wav");
    ensure_parent(path);
    write_wav(path, y, ctx.g.fs, parse_format(o->format));
    return json{{"path", path.string()}, {"samples", y.size()}};
  };
}

FeatureMatrix features_of_file(const fs::path& path, const Context& ctx) {
  if (path.extension() == ".ftm") return read_feature_matrix(path, ctx.g.stft());
  return features(stft(read_wav_at(path, ctx.g.fs).samples, ctx.g.stft()));
}

Action mse_command(CLI::App& sub) {
  struct Opts {
    std::string a, b, pred, target, input, meta, output;
    unsigned jobs = 1;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--a", o->a, "First .ftm or .wav (pairwise mode)");
  sub.add_option("--b", o->b, "Second .ftm or .wav (pairwise mode)");
  sub.add_option("--pred", o->pred, "Prediction directory (.ftm or .wav per utterance)");
  sub.add_option("--target", o->target, "Target WAV directory");
  sub.add_option("--input", o->input, "Unprocessed input WAV directory");
  sub.add_option("--meta", o->meta, "Dataset meta directory for condition grouping");
  sub.add_option("--jobs", o->jobs, "Parallel utterances")->capture_default_str();
  sub.add_option("--output", o->output, "Report path stem (default <out>/metrics)");
  return [o](const Context& ctx) {
    if (!o->a.empty() || !o->b.empty()) {
      require(!o->a.empty() && !o->b.empty(), ErrorCode::InvalidParameter,
              "pairwise mode needs both --a and --b");
      return json{{"mse", spectral_mse(features_of_file(o->a, ctx), features_of_file(o->b, ctx))}};
    }
    require(!o->target.empty() && !o->input.empty(), ErrorCode::InvalidParameter,
            "corpus mode needs --target and --input");
    EvalOptions options;
    options.stft = ctx.g.stft();
    if (!o->meta.empty()) options.meta_dir = fs::path(o->meta);
    options.jobs = std::max(1U, o->jobs);
    const std::optional<fs::path> pred =
        o->pred.empty() ? std::nullopt : std::optional<fs::path>(o->pred);
    const MetricReport report = evaluate_corpus(pred, o->target, o->input, options);

    const fs::path stem = ctx.output(o->output, "metrics");
    ensure_parent(stem);
    const fs::path json_path = fs::path(stem.string() + ".json");
    const fs::path csv_path = fs::path(stem.string() + ".csv");
    json full = report.to_json();
    {
      std::ofstream js(json_path);
      require(static_cast<bool>(js), ErrorCode::Io, "cannot write " + json_path.string());
      js << full.dump(2) << '\n';
      std::ofstream csv(csv_path);
      require(static_cast<bool>(csv), ErrorCode::Io, "cannot write " + csv_path.string());
      report.write_csv(csv);
    }
    for (const auto& m : report.missing) ctx.log->warn("excluded {}", m);
    return json{{"report", json_path.string()},
                {"csv", csv_path.string()},
                {"overall", full["overall"]},
                {"by_condition", full["by_condition"]},
                {"missing", report.missing.size()}};
  };
}

Action report_command(CLI::App& sub) {
  struct Opts {
    std::vector<std::string> reports, labels;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  sub.add_option("--reports", o->reports, "Metric report JSON files")->required();
  sub.add_option("--label", o->labels, "Row labels (default file stems)");
  sub.add_option("--output", o->output, "CSV path (default <out>/report.csv)");
  return [o](const Context& ctx) {
    require(o->labels.empty() || o->labels.size() == o->reports.size(),
            ErrorCode::InvalidParameter, "--label count must match --reports count");
    const fs::path path = ctx.output(o->output, "report.csv");
    ensure_parent(path);
    std::ofstream csv(path);
    require(static_cast<bool>(csv), ErrorCode::Io, "cannot write " + path.string());
    csv << "label,condition,count,mse_unprocessed,mse_enhanced\n";
    csv.precision(12);
    json rows = json::array();
    auto emit = [&](const std::string& label, const std::string& condition, const json& agg) {
      csv << label << ',' << condition << ',' << agg.at("count").get<std::size_t>() << ','
          << agg.at("mse_unprocessed").get<double>() << ',';
      if (agg.at("mse_enhanced").is_number()) csv << agg.at("mse_enhanced").get<double>();
      csv << '\n';
      rows.push_back({{"label", label},
                      {"condition", condition},
                      {"count", agg.at("count")},
                      {"mse_unprocessed", agg.at("mse_unprocessed")},
                      {"mse_enhanced", agg.at("mse_enhanced")}});
    };
    for (std::size_t i = 0; i < o->reports.size(); ++i) {
      std::ifstream in(o->reports[i]);
      require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + o->reports[i]);
      const json report = json::parse(in);
      const std::string label =
          o->labels.empty() ? fs::path(o->reports[i]).stem().string() : o->labels[i];
      emit(label, "all", report.at("overall"));
      for (const auto& [condition, agg] : report.at("by_condition").items()) {
        emit(label, condition, agg);
      }
    }
    return json{{"path", path.string()}, {"rows", rows}};
  };
}

const std::vector<std::pair<std::string, std::pair<std::string, Registrar>>>& commands() {
  static const std::vector<std::pair<std::string, std::pair<std::string, Registrar>>> table = {
      {"synth-rir", {"Synthesize a Polack-model RIR", synth_rir_command}},
      {"shorten", {"Apply a target window to an RIR", shorten_command}},
      {"edc", {"Export Schroeder decay curves as CSV", edc_command}},
      {"t60", {"Blind T60 estimate from the decay curve", t60_command}},
      {"q-param", {"Extra decay rate for a T60 change", q_param_command}},
      {"crossband-check", {"Cross-band and narrow-band model errors", crossband_check_command}},
      {"ident-rir", {"Identify the residual RIR of a processed signal", ident_rir_command}},
      {"synth-noise", {"Synthesize stationary noise", synth_noise_command}},
      {"build-dataset", {"Generate input/target pairs from a manifest", build_dataset_command}},
      {"features", {"Cubic-root magnitude features of a WAV", features_command}},
      {"resynth", {"Resynthesize a WAV from features and phase", resynth_command}},
      {"mse", {"Feature-domain MSE of files or corpora", mse_command}},
      {"report", {"Tabulate metric reports", report_command}},
  };
  return table;
}

bool mentions(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string config_value(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void append_config_value(std::vector<std::string>& args, const std::string& flag, const json& v) {
  if (v.is_null() || mentions(args, flag)) return;
  if (v.is_boolean()) {
    if (v.get<bool>()) args.push_back(flag);
    return;
  }
  args.push_back(flag);
  if (v.is_array()) {
    for (const auto& item : v) args.push_back(config_value(item));
  } else {
    args.push_back(config_value(v));
  }
}

// Fills flags missing from `args` from a JSON config (the --dump-config shape).
std::vector<std::string> apply_config(std::vector<std::string> args, const json& config) {
  const auto is_command = [](const std::string& a) {
    for (const auto& [name, entry] : commands()) {
      if (a == name) return true;
    }
    return false;
  };
  bool has_command = false;
  for (const auto& a : args) has_command = has_command || is_command(a);
  if (!has_command && config.contains("command")) {
    args.push_back(config.at("command").get<std::string>());
  }
  for (const auto& [key, flag] : std::vector<std::pair<std::string, std::string>>{
           {"fs", "--fs"}, {"win", "--win"}, {"hop", "--hop"}, {"seed", "--seed"},
           {"out", "--out"}, {"log_level", "--log-level"}}) {
    if (config.contains(key)) append_config_value(args, flag, config.at(key));
  }
  if (config.contains("options")) {
    for (const auto& [name, value] : config.at("options").items()) {
      append_config_value(args, "--" + name, value);
    }
  }
  return args;
}

json dump_config(const Globals& g, const CLI::App* sub) {
  json j{{"fs", g.fs}, {"win", g.win}, {"hop", g.hop}, {"seed", g.seed},
         {"out", g.out}, {"log_level", g.log_level}};
  if (sub == nullptr) return j;
  j["command"] = sub->get_name();
  json options = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const std::string& name = opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      options[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_expected_max() > 1) {
        options[name] = results;
      } else {
        options[name] = results.back();
      }
    } else if (!opt->get_default_str().empty()) {
      options[name] = opt->get_default_str();
    } else {
      options[name] = nullptr;
    }
  }
  j["options"] = options;
  return j;
}

json error_object(std::string_view code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("rts", sink);
  log->set_pattern("[%l] %v");

  Context ctx;
  CLI::App app{"Reverberation-time-shortening toolkit", "rts"};
  app.set_version_flag("--version", "rts 0.1.0");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--fs", ctx.g.fs, "Sample rate (Hz)")->capture_default_str();
  app.add_option("--win", ctx.g.win, "STFT window length")->capture_default_str();
  app.add_option("--hop", ctx.g.hop, "STFT hop")->capture_default_str();
  app.add_option("--seed", ctx.g.seed, "Seed for every stochastic output")->capture_default_str();
  app.add_option("--out", ctx.g.out, "Output directory")->capture_default_str();
  app.add_option("--log-level", ctx.g.log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();
  app.add_option("--config", ctx.g.config, "JSON config (default $RTS_CONFIG)");
  app.add_flag("--dump-config", ctx.g.dump_config, "Print the effective config and exit");

  std::vector<std::pair<CLI::App*, Action>> actions;
  for (const auto& [name, entry] : commands()) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    actions.emplace_back(sub, entry.second(*sub));
  }

  std::vector<std::string> args = raw_args;
  try {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) {
      if (const char* env = std::getenv("RTS_CONFIG"); env != nullptr) config_path = env;
    }
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      require(static_cast<bool>(in), ErrorCode::Io, "cannot open config " + config_path);
      args = apply_config(std::move(args), json::parse(in));
    }
  } catch (const std::exception& e) {
    out << error_object("config", e.what()).dump() << '\n';
    return 2;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\nRun with --help for usage.\n";
    out << error_object("usage", e.what()).dump() << '\n';
    return 2;
  }

  const auto level = spdlog::level::from_str(ctx.g.log_level);
  if (level == spdlog::level::off && ctx.g.log_level != "off") {
    out << error_object("usage", "unknown log level '" + ctx.g.log_level + "'").dump() << '\n';
    return 2;
  }
  log->set_level(level);
  ctx.log = log;

  for (const auto& [sub, action] : actions) {
    if (!sub->parsed()) continue;
    if (ctx.g.dump_config) {
      out << dump_config(ctx.g, sub).dump(2) << '\n';
      return 0;
    }
    try {
      ctx.g.stft().validate();
      json summary = action(ctx);
      summary["command"] = sub->get_name();
      out << summary.dump(2) << '\n';
      return 0;
    } catch (const Error& e) {
      log->error("{}", e.what());
      out << error_object(to_string(e.code()), e.what()).dump() << '\n';
    } catch (const std::exception& e) {
      log->error("{}", e.what());
      out << error_object("internal", e.what()).dump() << '\n';
    }
    return 1;
  }
  return 2;
}

}  // namespace rts::cli
