#include "rts/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "rts/error.hpp"
#include "rts/ftm.hpp"
#include "rts/wav.hpp"

namespace fs = std::filesystem;

namespace rts {

double spectral_mse(const FeatureMatrix& a, const FeatureMatrix& b) {
  require(a.values.same_shape(b.values), ErrorCode::DimensionMismatch,
          "feature grids differ: " + std::to_string(a.values.bins()) + "x" +
              std::to_string(a.values.frames()) + " vs " + std::to_string(b.values.bins()) + "x" +
              std::to_string(b.values.frames()));
  require(a.values.size() > 0, ErrorCode::InvalidParameter, "empty feature grid");
  const auto& x = a.values.data();
  const auto& y = b.values.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

std::string condition_from_meta(const nlohmann::json& meta) {
  std::ostringstream os;
  os << "t60=";
  const auto& t60 = meta.value("t60_condition", nlohmann::json(nullptr));
  if (t60.is_number()) {
    os << std::fixed << std::setprecision(2) << t60.get<double>() << std::defaultfloat;
  } else {
    os << "unknown";
  }
  os << "|snr=";
  const auto& snr = meta.value("snr_db", nlohmann::json(nullptr));
  if (snr.is_number()) {
    os << snr.get<double>();
  } else if (snr.is_string()) {
    os << snr.get<std::string>();
  } else {
    os << "unknown";
  }
  os << "|window=";
  const auto& window = meta.value("window_spec", nlohmann::json::object());
  os << window.value("kind", std::string("unknown"));
  return os.str();
}

namespace {

void accumulate(Aggregate& agg, const UtteranceScore& s) {
  // Running sums; divided in finish().
  ++agg.count;
  agg.mse_unprocessed += s.mse_unprocessed;
  if (s.mse_enhanced) {
    agg.mse_enhanced = agg.mse_enhanced.value_or(0.0) + *s.mse_enhanced;
    ++agg.enhanced_count;
  }
}

void finish(Aggregate& agg) {
  if (agg.count > 0) agg.mse_unprocessed /= static_cast<double>(agg.count);
  if (agg.mse_enhanced) *agg.mse_enhanced /= static_cast<double>(agg.enhanced_count);
}

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"count", a.count},
          {"mse_unprocessed", a.mse_unprocessed},
          {"mse_enhanced", a.mse_enhanced ? nlohmann::json(*a.mse_enhanced) : nlohmann::json(nullptr)},
          {"enhanced_count", a.enhanced_count}};
}

FeatureMatrix wav_features(const fs::path& path, const Stft& engine) {
  const WavData wav = read_wav(path);
  require(wav.fs == engine.config().fs, ErrorCode::InvalidParameter,
          path.string() + " is not at the analysis sample rate");
  return features(engine.analyze(wav.samples));
}

struct Job {
  std::string utt_id;
  fs::path target;
  fs::path input;
  std::optional<fs::path> pred;
  std::string condition;
};

struct JobResult {
  std::optional<UtteranceScore> score;
  std::string error;
};

JobResult score(const Job& job, const Stft& engine) {
  JobResult r;
  try {
    const FeatureMatrix target = wav_features(job.target, engine);
    const FeatureMatrix input = wav_features(job.input, engine);
    UtteranceScore s;
    s.utt_id = job.utt_id;
    s.condition = job.condition;
    s.mse_unprocessed = spectral_mse(input, target);
    if (job.pred) {
      const FeatureMatrix pred = job.pred->extension() == ".ftm"
                                     ? read_feature_matrix(*job.pred, engine.config())
                                     : wav_features(*job.pred, engine);
      s.mse_enhanced = spectral_mse(pred, target);
    }
    r.score = std::move(s);
  } catch (const std::exception& e) {
    r.error = job.utt_id + ": " + e.what();
  }
  return r;
}

}  // namespace

MetricReport evaluate_corpus(const std::optional<fs::path>& pred_dir, const fs::path& target_dir,
                             const fs::path& input_dir, const EvalOptions& options) {
  require(fs::is_directory(target_dir), ErrorCode::Io,
          "target directory not found: " + target_dir.string());
  require(fs::is_directory(input_dir), ErrorCode::Io,
          "input directory not found: " + input_dir.string());
  if (pred_dir) {
    require(fs::is_directory(*pred_dir), ErrorCode::Io,
            "prediction directory not found: " + pred_dir->string());
  }
  const Stft engine(options.stft);

  std::vector<std::string> ids;
  for (const auto& item : fs::directory_iterator(target_dir)) {
    if (item.is_regular_file() && item.path().extension() == ".wav") {
      ids.push_back(item.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());

  MetricReport report;
  std::vector<Job> jobs;
  for (const auto& id : ids) {
    Job job{id, target_dir / (id + ".wav"), input_dir / (id + ".wav"), std::nullopt, {}};
    if (!fs::exists(job.input)) {
      report.missing.push_back(id + ": no input file");
      continue;
    }
    if (pred_dir) {
      const fs::path ftm = *pred_dir / (id + ".ftm");
      const fs::path wav = *pred_dir / (id + ".wav");
      if (fs::exists(ftm)) {
        job.pred = ftm;
      } else if (fs::exists(wav)) {
        job.pred = wav;
      } else {
        report.missing.push_back(id + ": no prediction file");
        continue;
      }
    }
    if (options.meta_dir) {
      const fs::path meta = *options.meta_dir / (id + ".json");
      if (fs::exists(meta)) {
        std::ifstream in(meta);
        job.condition = condition_from_meta(nlohmann::json::parse(in));
      }
    }
    jobs.push_back(std::move(job));
  }

  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) results[i] = score(jobs[i], engine);
  };
  const unsigned threads =
      std::max(1U, std::min<unsigned>(options.jobs, static_cast<unsigned>(jobs.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (auto& r : results) {
    if (!r.score) {
      report.missing.push_back(std::move(r.error));
      continue;
    }
    accumulate(report.overall, *r.score);
    if (!r.score->condition.empty()) accumulate(report.by_condition[r.score->condition], *r.score);
    report.utterances.push_back(std::move(*r.score));
  }
  finish(report.overall);
  for (auto& [key, agg] : report.by_condition) finish(agg);
  return report;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["units"] = "cubic-root magnitude squared";
  j["overall"] = aggregate_json(overall);
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [key, agg] : by_condition) groups[key] = aggregate_json(agg);
  j["by_condition"] = groups;
  nlohmann::json utts = nlohmann::json::array();
  for (const auto& u : utterances) {
    utts.push_back({{"utt_id", u.utt_id},
                    {"condition", u.condition},
                    {"mse_unprocessed", u.mse_unprocessed},
                    {"mse_enhanced",
                     u.mse_enhanced ? nlohmann::json(*u.mse_enhanced) : nlohmann::json(nullptr)}});
  }
  j["utterances"] = utts;
  j["missing"] = missing;
  return j;
}

void MetricReport::write_csv(std::ostream& out) const {
  out << "utt_id,condition,mse_unprocessed,mse_enhanced\n";
  out << std::setprecision(12);
  for (const auto& u : utterances) {
    out << u.utt_id << ',' << u.condition << ',' << u.mse_unprocessed << ',';
    if (u.mse_enhanced) out << *u.mse_enhanced;
    out << '\n';
  }
}

}  // namespace rts
