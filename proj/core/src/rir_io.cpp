#include "rts/rir_io.hpp"

#include <fstream>

#include "rts/error.hpp"

namespace rts {

void to_json(nlohmann::json& j, const RirSidecar& s) {
  j = nlohmann::json{{"n1", s.n1}};
  j["t60_nominal"] = s.t60_nominal ? nlohmann::json(*s.t60_nominal) : nlohmann::json(nullptr);
  j["t60_estimated"] =
      s.t60_estimated ? nlohmann::json(*s.t60_estimated) : nlohmann::json(nullptr);
  j["window_spec"] = s.window_spec ? nlohmann::json(*s.window_spec) : nlohmann::json(nullptr);
  j["seed"] = s.seed ? nlohmann::json(*s.seed) : nlohmann::json(nullptr);
  if (s.t60_source) j["t60_source"] = *s.t60_source;
}

void from_json(const nlohmann::json& j, RirSidecar& s) {
  s = RirSidecar{};
  s.n1 = j.at("n1").get<std::size_t>();
  auto opt_double = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  s.t60_nominal = opt_double("t60_nominal");
  s.t60_estimated = opt_double("t60_estimated");
  if (j.contains("window_spec") && !j.at("window_spec").is_null()) {
    s.window_spec = j.at("window_spec").get<WindowSpec>();
  }
  if (j.contains("seed") && !j.at("seed").is_null()) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("t60_source")) s.t60_source = j.at("t60_source").get<std::string>();
}

std::filesystem::path sidecar_path(const std::filesystem::path& wav) {
  auto p = wav;
  p.replace_extension(".json");
  return p;
}

void write_rir(const std::filesystem::path& wav, const Rir& rir, const RirSidecar& sidecar,
               SampleFormat format) {
  write_wav(wav, rir.samples(), rir.fs(), format);
  std::ofstream out(sidecar_path(wav), std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write sidecar for " + wav.string());
  out << nlohmann::json(sidecar).dump(2) << '\n';
}

LoadedRir read_rir(const std::filesystem::path& wav) {
  WavData data = read_wav(wav);
  const auto meta_path = sidecar_path(wav);
  if (!std::filesystem::exists(meta_path)) {
    return LoadedRir{Rir::from_samples(std::move(data.samples), data.fs), std::nullopt};
  }
  std::ifstream in(meta_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, "bad RIR sidecar " + meta_path.string() + ": " + e.what());
  }
  RirSidecar sidecar = j.get<RirSidecar>();
  Rir rir(std::move(data.samples), data.fs, sidecar.n1, sidecar.t60_nominal);
  return LoadedRir{std::move(rir), std::move(sidecar)};
}

}  // namespace rts
