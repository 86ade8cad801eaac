#include "rts/ftm.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "rts/error.hpp"

namespace rts {

std::vector<std::size_t> TensorFile::dims() const {
  return header.at("dims").get<std::vector<std::size_t>>();
}

bool TensorFile::is_complex() const {
  return header.contains("complex") && header.at("complex").get<std::string>() == "interleaved";
}

std::optional<std::string> TensorFile::kind() const {
  if (!header.contains("kind")) return std::nullopt;
  return header.at("kind").get<std::string>();
}

nlohmann::ordered_json make_tensor_header(const std::vector<std::size_t>& dims) {
  nlohmann::ordered_json h;
  h["dims"] = dims;
  h["dtype"] = "f32";
  h["byte_order"] = "little";
  h["layout"] = "frequency-major";
  return h;
}

namespace {

std::size_t expected_count(const TensorFile& t) {
  const auto dims = t.dims();
  const std::size_t n =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  return t.is_complex() ? 2 * n : n;
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const TensorFile& tensor) {
  require(tensor.data.size() == expected_count(tensor), ErrorCode::DimensionMismatch,
          "tensor payload does not match its header dims");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  const std::string head = tensor.header.dump();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.put('\n');
  std::vector<char> bytes(tensor.data.size() * 4);
  for (std::size_t i = 0; i < tensor.data.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(tensor.data[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + path.string());
}

TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::string head;
  require(static_cast<bool>(std::getline(in, head)), ErrorCode::Format,
          "missing tensor header line: " + path.string());
  TensorFile t;
  try {
    t.header = nlohmann::ordered_json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, "bad tensor header in " + path.string() + ": " + e.what());
  }
  require(t.header.is_object() && t.header.contains("dims") && t.header["dims"].is_array(),
          ErrorCode::Format, "tensor header lacks dims: " + path.string());
  require(t.header.value("dtype", "") == "f32", ErrorCode::Format,
          "unsupported tensor dtype in " + path.string());
  require(t.header.value("byte_order", "") == "little", ErrorCode::Format,
          "unsupported byte order in " + path.string());
  require(t.header.value("layout", "") == "frequency-major", ErrorCode::Format,
          "unsupported layout in " + path.string());

  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::size_t count = expected_count(t);
  require(bytes.size() == 4 * count, ErrorCode::Format,
          "tensor payload size mismatch in " + path.string() + ": expected " +
              std::to_string(4 * count) + " bytes, found " + std::to_string(bytes.size()));
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    t.data[i] = std::bit_cast<float>(bits);
  }
  return t;
}

void write_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& feats) {
  TensorFile t;
  t.header = make_tensor_header({feats.values.bins(), feats.values.frames()});
  t.data.assign(feats.values.data().begin(), feats.values.data().end());
  write_tensor(path, t);
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path, const StftConfig& config) {
  const TensorFile t = read_tensor(path);
  const auto dims = t.dims();
  require(dims.size() == 2 && !t.is_complex(), ErrorCode::Format,
          "feature file must hold a real K x P matrix: " + path.string());
  require(!t.kind() || *t.kind() == "magnitude", ErrorCode::Format,
          "file is not a feature matrix: " + path.string());
  FeatureMatrix out{Grid<double>(dims[0], dims[1]), config};
  std::copy(t.data.begin(), t.data.end(), out.values.data().begin());
  return out;
}

void write_phase(const std::filesystem::path& path, const Grid<double>& phase) {
  TensorFile t;
  t.header = make_tensor_header({phase.bins(), phase.frames()});
  t.header["kind"] = "phase";
  t.data.assign(phase.data().begin(), phase.data().end());
  write_tensor(path, t);
}

Grid<double> read_phase(const std::filesystem::path& path) {
  const TensorFile t = read_tensor(path);
  const auto dims = t.dims();
  require(dims.size() == 2 && t.kind() == std::optional<std::string>("phase"), ErrorCode::Format,
          "not a phase file: " + path.string());
  Grid<double> out(dims[0], dims[1]);
  std::copy(t.data.begin(), t.data.end(), out.data().begin());
  return out;
}

}  // namespace rts
