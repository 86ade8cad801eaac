#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "rts/stft.hpp"

namespace rts {

// ".ftm" tensor files: one compact UTF-8 JSON header line, '\n', then the
// payload as raw little-endian float32 values in frequency-major order
// (complex tensors interleave re, im).
struct TensorFile {
  nlohmann::ordered_json header;
  std::vector<float> data;

  std::vector<std::size_t> dims() const;
  bool is_complex() const;
  std::optional<std::string> kind() const;
};

// Header with the required keys in canonical order:
// {"dims":[...],"dtype":"f32","byte_order":"little","layout":"frequency-major"}
nlohmann::ordered_json make_tensor_header(const std::vector<std::size_t>& dims);

void write_tensor(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile read_tensor(const std::filesystem::path& path);

void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& feats);
// The header carries no STFT parameters; `config` describes the grid.
FeatureMatrix read_feature_matrix(const std::filesystem::path& path,
                                  const StftConfig& config = {});

void write_phase(const std::filesystem::path& path, const Grid<double>& phase);
Grid<double> read_phase(const std::filesystem::path& path);

}  // namespace rts
