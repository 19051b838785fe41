#pragma once

// Thin RAII wrappers over FFTW plans. Plans are created with FFTW_ESTIMATE |
// FFTW_UNALIGNED so a single plan can be executed concurrently on any
// caller-owned buffers with bit-identical results.

#include <complex>
#include <span>

namespace dect::detail {

using Complex = std::complex<double>;

class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  // in: n reals, out: n/2+1 bins.
  void forward(std::span<double> in, std::span<Complex> out) const;
  // Unnormalised inverse: in: n/2+1 bins (clobbered), out: n reals.
  void inverse(std::span<Complex> in, std::span<double> out) const;

 private:
  int n_;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

class Fft2d {
 public:
  Fft2d(int rows, int cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  // In-place complex transforms; inverse is unnormalised.
  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

 private:
  int rows_, cols_;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

}  // namespace dect::detail
