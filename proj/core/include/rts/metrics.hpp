#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rts/stft.hpp"

namespace rts {

// Mean over all bins and frames of (a - b)^2.
double spectral_mse(const FeatureMatrix& a, const FeatureMatrix& b);

struct UtteranceScore {
  std::string utt_id;
  std::string condition;  // "" when no metadata is available
  double mse_unprocessed = 0.0;
  std::optional<double> mse_enhanced;
};

struct Aggregate {
  std::size_t count = 0;
  double mse_unprocessed = 0.0;
  std::optional<double> mse_enhanced;  // over utterances that have a prediction
  std::size_t enhanced_count = 0;
};

struct MetricReport {
  std::vector<UtteranceScore> utterances;  // sorted by utt_id
  Aggregate overall;
  std::map<std::string, Aggregate> by_condition;
  std::vector<std::string> missing;  // "<utt_id>: <what>"

  nlohmann::json to_json() const;
  // One row per utterance.
  void write_csv(std::ostream& out) const;
};

struct EvalOptions {
  StftConfig stft;
  // Per-utterance JSON written by the dataset builder; supplies condition keys.
  std::optional<std::filesystem::path> meta_dir;
  unsigned jobs = 1;
};

// Utterances are the WAV stems of target_dir. Inputs come from
// input_dir/<utt>.wav; predictions from pred_dir/<utt>.ftm (features) or
// pred_dir/<utt>.wav. Without pred_dir only unprocessed scores are computed.
// A missing input or prediction is listed in `missing` and the utterance is
// left out of every aggregate.
MetricReport evaluate_corpus(const std::optional<std::filesystem::path>& pred_dir,
                             const std::filesystem::path& target_dir,
                             const std::filesystem::path& input_dir,
                             const EvalOptions& options = {});

// Condition key "t60=<.2f>|snr=<g>|window=<kind>" from a dataset meta file.
std::string condition_from_meta(const nlohmann::json& meta);

}  // namespace rts
