#include "rts/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "rts/acoustics.hpp"
#include "rts/error.hpp"
#include "rts/fft.hpp"
#include "rts/random.hpp"
#include "rts/rir_io.hpp"

namespace fs = std::filesystem;

namespace rts {

Signal convolve(std::span<const double> signal, std::span<const double> rir, TailPolicy tail) {
  Signal out = fft_convolve(signal, rir);
  if (tail == TailPolicy::Truncate) out.resize(signal.size());
  return out;
}

Signal convolve(std::span<const double> signal, const Rir& rir, TailPolicy tail) {
  return convolve(signal, rir.samples(), tail);
}

double signal_power(std::span<const double> x) {
  require(!x.empty(), ErrorCode::InvalidParameter, "power of an empty signal");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

MixResult mix_at_snr(std::span<const double> reverberant, std::span<const double> noise,
                     double snr_db) {
  require(!reverberant.empty() && !noise.empty(), ErrorCode::InvalidParameter,
          "mixing inputs must be non-empty");
  require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(),
          ErrorCode::InvalidParameter, "SNR must be a number above -inf");
  const std::size_t n = reverberant.size();
  MixResult out;
  out.noise.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.noise[i] = noise[i % noise.size()];

  const double p_rev = signal_power(reverberant);
  const double p_noise = signal_power(out.noise);
  require(p_rev > 0.0, ErrorCode::DegenerateSignal, "reverberant signal has zero energy");
  require(p_noise > 0.0, ErrorCode::DegenerateSignal, "noise has zero energy");

  out.gain = std::isinf(snr_db) ? 0.0 : std::sqrt(p_rev / (p_noise * std::pow(10.0, snr_db / 10.0)));
  out.mixture.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.noise[i] *= out.gain;
    out.mixture[i] = reverberant[i] + out.noise[i];
  }
  return out;
}

TrainingPair make_pair(std::span<const double> speech, const Rir& rir, const WindowSpec& spec,
                       double snr_db, std::span<const double> noise, std::string rir_id) {
  const ShortenResult shortened = shorten_rir_auto(rir, spec);
  TrainingPair pair;
  pair.reverberant = convolve(speech, rir);
  MixResult mix = mix_at_snr(pair.reverberant, noise, snr_db);
  pair.input = std::move(mix.mixture);
  pair.noise = std::move(mix.noise);
  pair.target = convolve(speech, shortened.rir);
  pair.meta = PairMetadata{std::move(rir_id), snr_db, spec, rir.n1(), shortened.t60_used,
                           shortened.source};
  return pair;
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::White ? "white" : "pink";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "white") return NoiseKind::White;
  if (name == "pink") return NoiseKind::Pink;
  fail(ErrorCode::InvalidParameter, "unknown noise kind '" + std::string(name) + "'");
}

Signal synth_noise(NoiseKind kind, double duration, double fs, std::uint64_t seed) {
  require(duration > 0 && std::isfinite(duration), ErrorCode::InvalidParameter,
          "noise duration must be positive");
  require(fs > 0, ErrorCode::InvalidParameter, "fs must be positive");
  const auto n = static_cast<std::size_t>(std::max<long long>(1, std::llround(duration * fs)));
  Rng rng(seed);
  Signal x(n);
  for (double& v : x) v = rng.gaussian();

  if (kind == NoiseKind::Pink && n > 1) {
    RealFft fft(n);
    std::vector<Complex> spec(fft.bins());
    fft.forward(x, spec);
    spec[0] = 0.0;
    for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
    fft.inverse(spec, x);
  }
  const double rms = std::sqrt(signal_power(x));
  if (rms > 0.0) {
    for (double& v : x) v /= rms;
  }
  return x;
}

void to_json(nlohmann::json& j, const ManifestEntry& e) {
  j = nlohmann::json{{"utt_id", e.utt_id},
                     {"speech_path", e.speech_path},
                     {"rir_id", e.rir_id},
                     {"window_spec", e.window},
                     {"snr_db", e.snr_db},
                     {"segment_s", e.segment_s},
                     {"seed", e.seed},
                     {"noise", std::string(to_string(e.noise))}};
}

void from_json(const nlohmann::json& j, ManifestEntry& e) {
  e = ManifestEntry{};
  e.utt_id = j.at("utt_id").get<std::string>();
  e.speech_path = j.at("speech_path").get<std::string>();
  e.rir_id = j.at("rir_id").get<std::string>();
  e.window = j.at("window_spec").get<WindowSpec>();
  const auto& snr = j.at("snr_db");
  // JSON has no infinity; "inf" means a noise-free pair.
  e.snr_db = snr.is_string() && snr.get<std::string>() == "inf"
                 ? std::numeric_limits<double>::infinity()
                 : snr.get<double>();
  if (j.contains("segment_s")) e.segment_s = j.at("segment_s").get<double>();
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("noise")) e.noise = parse_noise_kind(j.at("noise").get<std::string>());
}

MixtureManifest MixtureManifest::load(const fs::path& jsonl) {
  std::ifstream in(jsonl);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open manifest " + jsonl.string());
  MixtureManifest m;
  m.base_dir = jsonl.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.entries.push_back(nlohmann::json::parse(line).get<ManifestEntry>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Format, jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  m.validate();
  return m;
}

void MixtureManifest::save(const fs::path& jsonl) const {
  std::ofstream out(jsonl, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write manifest " + jsonl.string());
  for (const auto& e : entries) {
    nlohmann::json j = e;
    if (std::isinf(e.snr_db)) j["snr_db"] = "inf";
    out << j.dump() << '\n';
  }
}

void MixtureManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries) {
    require(!e.utt_id.empty(), ErrorCode::InvalidParameter, "manifest entry without utt_id");
    require(e.utt_id.find_first_of("/\\") == std::string::npos, ErrorCode::InvalidParameter,
            "utt_id must not contain path separators: " + e.utt_id);
    require(seen.insert(e.utt_id).second, ErrorCode::InvalidParameter,
            "duplicate utt_id " + e.utt_id);
    require(!std::isnan(e.snr_db) && e.snr_db != -std::numeric_limits<double>::infinity(),
            ErrorCode::InvalidParameter, "bad SNR for " + e.utt_id);
    require(e.segment_s > 0, ErrorCode::InvalidParameter, "segment must be positive for " + e.utt_id);
    e.window.validate();
  }
}

nlohmann::json BuildReport::to_json() const {
  nlohmann::json j;
  j["entries_total"] = total;
  j["entries_ok"] = succeeded;
  j["entries_failed"] = failed();
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& o : outcomes) {
    if (!o.ok) failures.push_back({{"utt_id", o.utt_id}, {"error", o.error}});
  }
  j["failures"] = failures;
  j["conditions"] = conditions;
  return j;
}

namespace {

struct ResolvedRir {
  Rir rir;
  std::optional<double> t60_condition;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string format_condition(std::optional<double> t60, double snr_db, TargetWindow kind) {
  std::ostringstream os;
  os << "t60=";
  if (t60) {
    os << std::fixed << std::setprecision(2) << *t60;
  } else {
    os << "unknown";
  }
  os << std::defaultfloat << "|snr=" << snr_db << "|window=" << to_string(kind);
  return os.str();
}

ResolvedRir load_entry_rir(const ManifestEntry& e, const fs::path& base, double fs,
                           std::uint64_t stream) {
  const std::string& id = e.rir_id;
  if (id.rfind("polack:", 0) == 0) {
    const std::string args = id.substr(7);
    const auto colon = args.find(':');
    const double t60 = std::stod(args.substr(0, colon));
    const double duration = colon == std::string::npos ? 1.0 : std::stod(args.substr(colon + 1));
    const auto params =
        PolackParams::with_drr(t60, duration, 0.0, derive_seed(stream, "rir"), fs);
    return ResolvedRir{synth_polack_rir(params, fs), t60};
  }
  fs::path wav;
  if (id.rfind("pool:", 0) == 0) {
    const fs::path dir = resolve(base, id.substr(5));
    require(fs::is_directory(dir), ErrorCode::Io, "RIR pool is not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& item : fs::directory_iterator(dir)) {
      if (item.path().extension() == ".wav") files.push_back(item.path());
    }
    require(!files.empty(), ErrorCode::Io, "RIR pool has no WAV files: " + dir.string());
    std::sort(files.begin(), files.end());
    Rng pick(derive_seed(stream, "rir-pick"));
    wav = files[pick.below(files.size())];
  } else {
    wav = resolve(base, id);
  }
  require(fs::exists(wav), ErrorCode::Io, "RIR file not found: " + wav.string());
  LoadedRir loaded = read_rir(wav);
  require(loaded.rir.fs() == fs, ErrorCode::InvalidParameter,
          "RIR " + wav.string() + " is not at the dataset sample rate");
  std::optional<double> t60 = loaded.rir.t60_nominal();
  if (!t60 && loaded.sidecar) t60 = loaded.sidecar->t60_estimated;
  if (!t60) t60 = estimate_t60(schroeder_edc(loaded.rir));
  return ResolvedRir{std::move(loaded.rir), t60};
}

Signal load_entry_speech(const ManifestEntry& e, const fs::path& base, double fs,
                         std::size_t segment, std::uint64_t stream, std::size_t* offset) {
  Signal speech;
  const std::string& src = e.speech_path;
  if (src == "synth" || src.rfind("synth:", 0) == 0) {
    const double seconds = src == "synth" ? e.segment_s : std::stod(src.substr(6));
    speech = synth_speech_like(seconds, fs, derive_seed(stream, "speech"));
  } else {
    const fs::path wav = resolve(base, src);
    require(fs::exists(wav), ErrorCode::Io, "speech file not found: " + wav.string());
    WavData data = read_wav(wav);
    require(data.fs == fs, ErrorCode::InvalidParameter,
            "speech " + wav.string() + " is not at the dataset sample rate");
    speech = std::move(data.samples);
  }
  *offset = 0;
  if (speech.size() > segment) {
    Rng pick(derive_seed(stream, "offset"));
    *offset = pick.below(speech.size() - segment + 1);
    speech = Signal(speech.begin() + static_cast<std::ptrdiff_t>(*offset),
                    speech.begin() + static_cast<std::ptrdiff_t>(*offset + segment));
  }
  speech.resize(segment, 0.0);
  return speech;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

EntryOutcome build_entry(const ManifestEntry& e, const fs::path& base, const fs::path& out_dir,
                         const BuildOptions& options) {
  EntryOutcome outcome;
  outcome.utt_id = e.utt_id;
  const std::uint64_t stream = derive_seed(derive_seed(options.seed, e.seed), e.utt_id);
  const auto segment = static_cast<std::size_t>(std::llround(e.segment_s * options.fs));

  std::size_t offset = 0;
  const Signal speech = load_entry_speech(e, base, options.fs, segment, stream, &offset);
  require(signal_power(speech) > 0.0, ErrorCode::DegenerateSignal,
          "speech segment is silent for " + e.utt_id);
  const ResolvedRir resolved = load_entry_rir(e, base, options.fs, stream);
  const Signal noise =
      synth_noise(e.noise, e.segment_s, options.fs, derive_seed(stream, "noise"));

  TrainingPair pair = make_pair(speech, resolved.rir, e.window, e.snr_db, noise, e.rir_id);
  require(pair.input.size() == segment && pair.target.size() == segment,
          ErrorCode::DimensionMismatch, "internal: pair length mismatch");

  write_wav(out_dir / "input" / (e.utt_id + ".wav"), pair.input, options.fs, options.format);
  write_wav(out_dir / "target" / (e.utt_id + ".wav"), pair.target, options.fs, options.format);

  nlohmann::json meta;
  meta["utt_id"] = e.utt_id;
  meta["speech_path"] = e.speech_path;
  meta["speech_offset"] = offset;
  meta["rir_id"] = e.rir_id;
  meta["n1"] = pair.meta.n1;
  meta["t60_condition"] =
      resolved.t60_condition ? nlohmann::json(*resolved.t60_condition) : nlohmann::json(nullptr);
  meta["t60_used"] = pair.meta.t60_used ? nlohmann::json(*pair.meta.t60_used) : nlohmann::json(nullptr);
  meta["t60_source"] = std::string(to_string(pair.meta.t60_source));
  meta["window_spec"] = e.window;
  meta["snr_db"] = std::isinf(e.snr_db) ? nlohmann::json("inf") : nlohmann::json(e.snr_db);
  meta["snr_reference"] = "reverberant";
  meta["noise_kind"] = std::string(to_string(e.noise));
  meta["noise_gain"] = std::sqrt(signal_power(pair.noise) / std::max(signal_power(noise), 1e-300));
  meta["fs"] = options.fs;
  meta["segment_samples"] = segment;
  meta["stream_seed"] = stream;
  write_json(out_dir / "meta" / (e.utt_id + ".json"), meta);

  outcome.ok = true;
  outcome.condition = format_condition(resolved.t60_condition, e.snr_db, e.window.kind);
  return outcome;
}

}  // namespace

BuildReport build_dataset(const MixtureManifest& manifest, const fs::path& out_dir,
                          const BuildOptions& options) {
  manifest.validate();
  require(options.fs > 0, ErrorCode::InvalidParameter, "fs must be positive");
  for (const char* sub : {"input", "target", "meta"}) fs::create_directories(out_dir / sub);

  const std::size_t count = manifest.entries.size();
  std::vector<EntryOutcome> outcomes(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      const ManifestEntry& e = manifest.entries[i];
      try {
        outcomes[i] = build_entry(e, manifest.base_dir, out_dir, options);
      } catch (const std::exception& ex) {
        outcomes[i] = EntryOutcome{e.utt_id, false, ex.what(), {}};
      }
    }
  };
  const unsigned jobs = std::max(1U, std::min<unsigned>(options.jobs, static_cast<unsigned>(count)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }

  BuildReport report;
  report.total = count;
  for (auto& o : outcomes) {
    if (o.ok) {
      ++report.succeeded;
      ++report.conditions[o.condition];
    }
    report.outcomes.push_back(std::move(o));
  }
  write_json(out_dir / "build_report.json", report.to_json());
  require(count == 0 || report.succeeded > 0, ErrorCode::Io,
          "every manifest entry failed; see build_report.json");
  return report;
}

}  // namespace rts
