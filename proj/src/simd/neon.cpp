#include "fdlab/simd.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace fdlab::simd::detail {
namespace {

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t p = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), p));
  }
  for (; i < n; ++i) {
    const double p = a * x[i];
    y[i] = y[i] + p;
  }
}

double l1_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vaddq_f64(acc, vabsq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double sum_neon(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

double max_abs_diff_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    m = vmaxq_f64(m, vabsq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

constexpr KernelTable kNeon{Backend::neon, axpy_neon, l1_neon, sum_neon,
                            max_abs_diff_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace fdlab::simd::detail

#else

namespace fdlab::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace fdlab::simd::detail

#endif
