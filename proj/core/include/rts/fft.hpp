#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "rts/types.hpp"

namespace rts {

// Thin RAII wrappers over FFTW plans. Each object owns private aligned buffers,
// so results are bit-identical for identical input regardless of where the
// caller's data lives. An instance must not be used from two threads at once;
// construct one per thread instead (planning itself is serialized internally).

class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  // in: n samples (shorter input is zero-padded); out: n/2+1 bins.
  void forward(std::span<const double> in, std::span<Complex> out);
  // in: n/2+1 bins; out: n samples, scaled by 1/n.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

class ComplexFft {
 public:
  explicit ComplexFft(std::size_t n);
  ~ComplexFft();
  ComplexFft(ComplexFft&&) noexcept;
  ComplexFft& operator=(ComplexFft&&) noexcept;
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::size_t size() const noexcept { return n_; }

  // Shorter input is zero-padded to n.
  void forward(std::span<const Complex> in, std::span<Complex> out);
  // Scaled by 1/n.
  void inverse(std::span<const Complex> in, std::span<Complex> out);

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::unique_ptr<Impl> impl_;
};

std::size_t next_pow2(std::size_t n);

// Full linear convolution, length a.size() + b.size() - 1.
Signal fft_convolve(std::span<const double> a, std::span<const double> b);
ComplexSignal fft_convolve(std::span<const Complex> a, std::span<const double> b);

}  // namespace rts
