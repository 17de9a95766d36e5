#pragma once

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "vortex/error.hpp"
#include "vortex/types.hpp"

namespace vortex {

/// In-place complex DFT plan over a row-major block of rank 1 or 2, optionally
/// batched. Forward is unnormalized; backward divides by the transform size.
class FftPlan {
 public:
  FftPlan(std::vector<int> dims, int batch = 1) : dims_(std::move(dims)), batch_(batch) {
    size_ = 1;
    for (int d : dims_) size_ *= static_cast<std::size_t>(d);
    std::vector<Complex> scratch(size_ * batch_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int rank = static_cast<int>(dims_.size());
    const int dist = static_cast<int>(size_);
    // FFTW's planner is not re-entrant.
    static std::mutex planner;
    std::lock_guard lock(planner);
    forward_ = fftw_plan_many_dft(rank, dims_.data(), batch_, buf, nullptr, 1, dist, buf, nullptr, 1, dist,
                                  FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_many_dft(rank, dims_.data(), batch_, buf, nullptr, 1, dist, buf, nullptr, 1, dist,
                                   FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!forward_ || !backward_) throw Error(ErrorCode::InvalidArgument, "FFTW planning failed");
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  ~FftPlan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(std::vector<Complex>& data) const { run(forward_, data); }

  void backward(std::vector<Complex>& data) const {
    run(backward_, data);
    const double s = 1.0 / static_cast<double>(size_);
    for (auto& v : data) v *= s;
  }

 private:
  void run(fftw_plan plan, std::vector<Complex>& data) const {
    if (data.size() != size_ * batch_) throw Error(ErrorCode::InvalidArgument, "FFT size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }

  std::vector<int> dims_;
  int batch_;
  std::size_t size_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Angular wavenumbers of an n-point DFT with spacing h, in FFTW order.
/// The Nyquist bin is assigned -pi/h.
inline std::vector<double> wavenumbers(int n, double h) {
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / (n * h);
  for (int j = 0; j < n; ++j) k[j] = (j < n / 2 ? j : j - n) * dk;
  return k;
}

}  // namespace vortex
