#include "rts/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "rts/error.hpp"

namespace rts {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open WAV file: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string name = path.string();
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          ErrorCode::Format, "not a RIFF/WAVE file: " + name);

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      require(avail >= 16, ErrorCode::Format, "truncated fmt chunk: " + name);
      const unsigned char* f = bytes.data() + body;
      format_tag = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      bits = le16(f + 14);
      if (format_tag == kFormatExtensible) {
        require(avail >= 26, ErrorCode::Format, "truncated extensible fmt chunk: " + name);
        format_tag = le16(f + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1U);
  }

  require(format_tag != 0, ErrorCode::Format, "missing fmt chunk: " + name);
  require(data != nullptr, ErrorCode::Format, "missing data chunk: " + name);
  require(channels == 1, ErrorCode::Format,
          "only mono WAV is supported (" + std::to_string(channels) + " channels): " + name);
  require(rate > 0, ErrorCode::Format, "zero sample rate: " + name);

  WavData out;
  out.fs = static_cast<double>(rate);
  if (format_tag == kFormatPcm && bits == 16) {
    out.format = SampleFormat::Pcm16;
    const std::size_t n = data_size / 2;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(le16(data + 2 * i));
      out.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format_tag == kFormatFloat && bits == 32) {
    out.format = SampleFormat::Float32;
    const std::size_t n = data_size / 4;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<double>(std::bit_cast<float>(le32(data + 4 * i)));
    }
  } else {
    fail(ErrorCode::Format, "unsupported WAV encoding (tag " + std::to_string(format_tag) +
                                ", " + std::to_string(bits) + " bits): " + name);
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, double fs,
               SampleFormat format) {
  require(fs > 0 && std::isfinite(fs), ErrorCode::InvalidParameter, "sample rate must be positive");
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint16_t tag = format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t block = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(samples.size() * block);
  const auto rate = static_cast<std::uint32_t>(std::lround(fs));

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, tag);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * block);
  put16(out, static_cast<std::uint16_t>(block));
  put16(out, bits);
  put_tag(out, "data");
  put32(out, data_size);
  for (double x : samples) {
    if (format == SampleFormat::Pcm16) {
      const double scaled = std::round(std::clamp(x, -1.0, 32767.0 / 32768.0) * 32768.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    } else {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(file), ErrorCode::Io, "cannot write WAV file: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  require(static_cast<bool>(file), ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace rts
