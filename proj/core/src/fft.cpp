#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "dect/error.hpp"

namespace dect::detail {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 1) throw DimensionError("fft: size must be positive");
  std::vector<double> real(n);
  std::vector<Complex> spec(n / 2 + 1);
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c_1d(n, real.data(), as_fftw(spec.data()), kFlags);
  inv_ = fftw_plan_dft_c2r_1d(n, as_fftw(spec.data()), real.data(), kFlags);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void RealFft::forward(std::span<double> in, std::span<Complex> out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), in.data(), as_fftw(out.data()));
}

void RealFft::inverse(std::span<Complex> in, std::span<double> out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_), as_fftw(in.data()), out.data());
}

Fft2d::Fft2d(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw DimensionError("fft: size must be positive");
  std::vector<Complex> buf(static_cast<std::size_t>(rows) * cols);
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_2d(rows, cols, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_FORWARD, kFlags);
  inv_ = fftw_plan_dft_2d(rows, cols, as_fftw(buf.data()), as_fftw(buf.data()), FFTW_BACKWARD, kFlags);
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

void Fft2d::forward(std::span<Complex> data) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), as_fftw(data.data()), as_fftw(data.data()));
}

void Fft2d::inverse(std::span<Complex> data) const {
  fftw_execute_dft(static_cast<fftw_plan>(inv_), as_fftw(data.data()), as_fftw(data.data()));
}

}  // namespace dect::detail
