#include "rts/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "rts/error.hpp"

namespace rts {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

static_assert(sizeof(fftw_complex) == sizeof(Complex));

}  // namespace

struct RealFft::Impl {
  double* time = nullptr;
  fftw_complex* freq = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Impl(std::size_t n) {
    std::lock_guard lock(planner_mutex());
    time = fftw_alloc_real(n);
    freq = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    fwd = fftw_plan_dft_r2c_1d(len, time, freq, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(len, freq, time, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(time);
    fftw_free(freq);
  }
};

RealFft::RealFft(std::size_t n) : n_(n) {
  require(n > 0, ErrorCode::InvalidParameter, "FFT size must be positive");
  impl_ = std::make_unique<Impl>(n);
}
RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<Complex> out) {
  require(in.size() <= n_ && out.size() >= bins(), ErrorCode::DimensionMismatch,
          "RealFft::forward: buffer size mismatch");
  std::copy(in.begin(), in.end(), impl_->time);
  std::fill(impl_->time + in.size(), impl_->time + n_, 0.0);
  fftw_execute(impl_->fwd);
  std::memcpy(static_cast<void*>(out.data()), impl_->freq, bins() * sizeof(Complex));
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) {
  require(in.size() == bins() && out.size() >= n_, ErrorCode::DimensionMismatch,
          "RealFft::inverse: buffer size mismatch");
  std::memcpy(static_cast<void*>(impl_->freq), in.data(), bins() * sizeof(Complex));
  fftw_execute(impl_->inv);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = impl_->time[i] * scale;
}

struct ComplexFft::Impl {
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Impl(std::size_t n) {
    std::lock_guard lock(planner_mutex());
    in = fftw_alloc_complex(n);
    out = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    fwd = fftw_plan_dft_1d(len, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    inv = fftw_plan_dft_1d(len, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(in);
    fftw_free(out);
  }
};

ComplexFft::ComplexFft(std::size_t n) : n_(n) {
  require(n > 0, ErrorCode::InvalidParameter, "FFT size must be positive");
  impl_ = std::make_unique<Impl>(n);
}
ComplexFft::~ComplexFft() = default;
ComplexFft::ComplexFft(ComplexFft&&) noexcept = default;
ComplexFft& ComplexFft::operator=(ComplexFft&&) noexcept = default;

void ComplexFft::forward(std::span<const Complex> in, std::span<Complex> out) {
  require(in.size() <= n_ && out.size() >= n_, ErrorCode::DimensionMismatch,
          "ComplexFft::forward: buffer size mismatch");
  auto* dst = reinterpret_cast<Complex*>(impl_->in);
  std::copy(in.begin(), in.end(), dst);
  std::fill(dst + in.size(), dst + n_, Complex{});
  fftw_execute(impl_->fwd);
  std::memcpy(static_cast<void*>(out.data()), impl_->out, n_ * sizeof(Complex));
}

void ComplexFft::inverse(std::span<const Complex> in, std::span<Complex> out) {
  require(in.size() <= n_ && out.size() >= n_, ErrorCode::DimensionMismatch,
          "ComplexFft::inverse: buffer size mismatch");
  auto* dst = reinterpret_cast<Complex*>(impl_->in);
  std::copy(in.begin(), in.end(), dst);
  std::fill(dst + in.size(), dst + n_, Complex{});
  fftw_execute(impl_->inv);
  const double scale = 1.0 / static_cast<double>(n_);
  const auto* src = reinterpret_cast<const Complex*>(impl_->out);
  for (std::size_t i = 0; i < n_; ++i) out[i] = src[i] * scale;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Signal fft_convolve(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::InvalidParameter,
          "convolution operands must be non-empty");
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(out_len);
  RealFft fft(n);
  std::vector<Complex> fa(fft.bins()), fb(fft.bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  Signal full(n);
  fft.inverse(fa, full);
  full.resize(out_len);
  return full;
}

ComplexSignal fft_convolve(std::span<const Complex> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::InvalidParameter,
          "convolution operands must be non-empty");
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(out_len);
  ComplexFft fft(n);
  ComplexSignal fa(n), fb(n);
  ComplexSignal bc(b.begin(), b.end());
  fft.forward(a, fa);
  fft.forward(bc, fb);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  ComplexSignal full(n);
  fft.inverse(fa, full);
  full.resize(out_len);
  return full;
}

}  // namespace rts
