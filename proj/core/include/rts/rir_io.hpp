#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rts/rir_model.hpp"
#include "rts/wav.hpp"

namespace rts {

// Companion "<basename>.json" next to an RIR WAV.
struct RirSidecar {
  std::size_t n1 = 0;
  std::optional<double> t60_nominal;
  std::optional<double> t60_estimated;
  std::optional<WindowSpec> window_spec;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> t60_source;
};

void to_json(nlohmann::json& j, const RirSidecar& s);
void from_json(const nlohmann::json& j, RirSidecar& s);

std::filesystem::path sidecar_path(const std::filesystem::path& wav);

void write_rir(const std::filesystem::path& wav, const Rir& rir, const RirSidecar& sidecar,
               SampleFormat format = SampleFormat::Float32);

struct LoadedRir {
  Rir rir;
  std::optional<RirSidecar> sidecar;
};

// n1 and the nominal T60 come from the sidecar when present; otherwise n1 is
// detected from the samples and no nominal T60 is set.
LoadedRir read_rir(const std::filesystem::path& wav);

}  // namespace rts
