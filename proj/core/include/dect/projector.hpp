#pragma once

// Parallel-beam Radon transform with Joseph-style linear interpolation,
// its exact algebraic adjoint, ramp filtering and filtered backprojection.

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dect/geometry.hpp"

namespace dect {

// Snapshot of operation counts (R, R^T, batch forward-model applications).
struct OpCounts {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
  std::uint64_t forward_model = 0;

  OpCounts operator-(const OpCounts& o) const {
    return {forward - o.forward, backward - o.backward, forward_model - o.forward_model};
  }
  bool operator==(const OpCounts&) const = default;
};

// Thread-safe, monotone operation counters shared by a projector and the
// solvers that use it.
class OpCounters {
 public:
  void add_forward(std::uint64_t n = 1) { forward_.fetch_add(n, std::memory_order_relaxed); }
  void add_backward(std::uint64_t n = 1) { backward_.fetch_add(n, std::memory_order_relaxed); }
  void add_forward_model(std::uint64_t n = 1) { forward_model_.fetch_add(n, std::memory_order_relaxed); }
  OpCounts snapshot() const {
    return {forward_.load(std::memory_order_relaxed), backward_.load(std::memory_order_relaxed),
            forward_model_.load(std::memory_order_relaxed)};
  }

 private:
  std::atomic<std::uint64_t> forward_{0};
  std::atomic<std::uint64_t> backward_{0};
  std::atomic<std::uint64_t> forward_model_{0};
};

class Projector {
 public:
  explicit Projector(ScanGeometry geometry, std::shared_ptr<OpCounters> counters = nullptr);

  const ScanGeometry& geometry() const { return geom_; }
  OpCounters& counters() const { return *counters_; }
  std::shared_ptr<OpCounters> shared_counters() const { return counters_; }

  // R x. Parallel over angles. Increments the forward counter.
  Sinogram forward(const Image& image) const;
  void forward(std::span<const double> image, std::span<double> sinogram) const;

  // R^T y with the same interpolation weights as forward(), evaluated as a
  // per-pixel gather. Increments the backward counter.
  Image back(const Sinogram& sinogram) const;
  void back(std::span<const double> sinogram, std::span<double> image) const;

 private:
  struct AngleTable {
    bool row_driven;    // step along image rows (ray closer to vertical)
    double step_len;    // path length per row/column step, cm
    double det_slope;   // change in interpolated index per detector bin
    double line_slope;  // change in interpolated index per row/column
  };

  double position(const AngleTable& t, int det, int line) const;
  void check_image(std::size_t n) const;
  void check_sinogram(std::size_t n) const;

  ScanGeometry geom_;
  std::shared_ptr<OpCounters> counters_;
  std::vector<AngleTable> tables_;
};

// Multiplies each projection row by |w| (cycles/sample) in the frequency
// domain. Rows are padded to the next power of two >= 2 * detectors by
// replicating their edge values. Requires at least 2 detectors.
Sinogram ramp_filter(const Sinogram& sinogram);

// back(ramp_filter(y)) * pi / (angles * pixel_pitch^2).
Image fbp(const Sinogram& sinogram, const Projector& projector);

}  // namespace dect
