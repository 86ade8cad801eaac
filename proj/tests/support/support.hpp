#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rts/random.hpp"
#include "rts/types.hpp"

namespace rts::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto tag = std::to_string(std::random_device{}()) + "_" + std::to_string(counter++);
    path_ = std::filesystem::temp_directory_path() / ("rts_test_" + tag);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Small generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t size_in(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng_.below(hi - lo + 1));
  }
  double real_in(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  double gaussian() { return rng_.gaussian(); }
  Signal signal(std::size_t n, double scale = 1.0) {
    Signal x(n);
    for (double& v : x) v = scale * rng_.gaussian();
    return x;
  }
  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(rng_.below(items.size()))];
  }

 private:
  Rng rng_;
};

inline Signal white_noise(std::size_t n, std::uint64_t seed) { return Gen(seed).signal(n); }

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double relative_l2(const Signal& reference, const Signal& estimate) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - (i < estimate.size() ? estimate[i] : 0.0);
    num += d * d;
    den += reference[i] * reference[i];
  }
  return std::sqrt(num / den);
}

// O(N M) full linear convolution.
inline Signal direct_convolution(const Signal& x, const Signal& h) {
  Signal y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += x[i] * h[j];
  }
  return y;
}

inline std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every regular file below `root`.
inline std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& item : std::filesystem::recursive_directory_iterator(root)) {
    if (item.is_regular_file()) {
      out[std::filesystem::relative(item.path(), root).generic_string()] = file_bytes(item.path());
    }
  }
  return out;
}

}  // namespace rts::test
