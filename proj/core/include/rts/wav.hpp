#pragma once

#include <filesystem>
#include <span>

#include "rts/types.hpp"

namespace rts {

enum class SampleFormat { Pcm16, Float32 };

struct WavData {
  Signal samples;
  double fs = 0.0;
  SampleFormat format = SampleFormat::Float32;
};

// Mono RIFF/WAVE only (PCM16 or IEEE float32, plain or WAVE_FORMAT_EXTENSIBLE).
WavData read_wav(const std::filesystem::path& path);

// PCM16 output is clipped to [-1, 1) and rounded to nearest.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double fs, SampleFormat format = SampleFormat::Float32);

}  // namespace rts
