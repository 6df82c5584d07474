#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "artt/error.hpp"

namespace artt::dsp {

using cplx = std::complex<double>;

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW's planner is not thread-safe; executing an existing plan on new arrays is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline const PlanPair& plans_for(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* rbuf = fftw_alloc_real(n);
  fftw_complex* cbuf = fftw_alloc_complex(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(n, rbuf, cbuf, flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, cbuf, rbuf, flags | FFTW_DESTROY_INPUT);
  fftw_free(rbuf);
  fftw_free(cbuf);
  if (!p.forward || !p.inverse) throw NumericError("fftw: planning failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace detail

/// Real-input FFT of length n: n real samples <-> n/2+1 complex bins.
/// The inverse is unnormalized (FFTW convention).
class RealFft {
 public:
  explicit RealFft(int n) : n_(n), plans_(&detail::plans_for(n)), scratch_(n / 2 + 1) {
    if (n < 2 || n % 2 != 0) throw InputError("RealFft: length must be even and >= 2");
  }

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<cplx> out) const {
    fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  // Consumes a copy of `in`; c2r overwrites its input.
  void inverse(std::span<const cplx> in, std::span<double> out) {
    std::memcpy(scratch_.data(), in.data(), sizeof(cplx) * bins());
    fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(scratch_.data()),
                         out.data());
  }

 private:
  int n_;
  const detail::PlanPair* plans_;
  std::vector<cplx> scratch_;
};

inline int next_pow2(std::size_t n) {
  int p = 1;
  while (static_cast<std::size_t>(p) < n) p <<= 1;
  return p;
}

}  // namespace artt::dsp
