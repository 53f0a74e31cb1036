#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace qcdir::fft {

/// fftw_malloc'd complex buffer with value-free RAII ownership.
class Buffer {
 public:
  explicit Buffer(std::size_t count)
      : size_(count), data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count))) {
    if (!data_) throw std::bad_alloc();
  }
  ~Buffer() { fftw_free(data_); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  Buffer(Buffer&& o) noexcept : size_(o.size_), data_(std::exchange(o.data_, nullptr)) {}

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_); }
  const std::complex<double>* data() const { return reinterpret_cast<const std::complex<double>*>(data_); }
  fftw_complex* raw() { return data_; }
  std::size_t size() const { return size_; }
  std::complex<double>& operator[](std::size_t k) { return data()[k]; }
  const std::complex<double>& operator[](std::size_t k) const { return data()[k]; }

  void zero() {
    for (std::size_t k = 0; k < size_; ++k) data()[k] = 0.0;
  }

 private:
  std::size_t size_;
  fftw_complex* data_;
};

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

inline std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// In-place plans per size, created once. FFTW's planner is not thread-safe,
// execution through fftw_execute_dft on other aligned buffers is.
inline const PlanPair& plans(int n) {
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto p = std::make_unique<PlanPair>();
  Buffer scratch(static_cast<std::size_t>(n) * n);
  p->forward = fftw_plan_dft_2d(n, n, scratch.raw(), scratch.raw(), FFTW_FORWARD, FFTW_ESTIMATE);
  p->backward = fftw_plan_dft_2d(n, n, scratch.raw(), scratch.raw(), FFTW_BACKWARD, FFTW_ESTIMATE);
  return *cache.emplace(n, std::move(p)).first->second;
}

}  // namespace detail

/// In-place forward 2-D DFT of an n x n buffer (unnormalized).
inline void forward(Buffer& b, int n) {
  fftw_execute_dft(detail::plans(n).forward, b.raw(), b.raw());
}

/// In-place inverse 2-D DFT, normalized by 1/n^2.
inline void backward(Buffer& b, int n) {
  fftw_execute_dft(detail::plans(n).backward, b.raw(), b.raw());
  const double s = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] *= s;
}

/// Unnormalized 1-D DFT of arbitrary length; sign = -1 forward, +1 inverse.
inline void dft1(std::vector<std::complex<double>>& v, int sign) {
  const int n = static_cast<int>(v.size());
  Buffer b(v.size());
  for (int k = 0; k < n; ++k) b[k] = v[k];
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(detail::plan_mutex());
    p = fftw_plan_dft_1d(n, b.raw(), b.raw(), sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(p);
  {
    std::lock_guard<std::mutex> lock(detail::plan_mutex());
    fftw_destroy_plan(p);
  }
  for (int k = 0; k < n; ++k) v[k] = b[k];
}

}  // namespace qcdir::fft
