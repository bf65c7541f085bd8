#include <cmath>

#include "fdlab/simd.hpp"

namespace fdlab::simd::detail {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double p = a * x[i];
    y[i] = y[i] + p;
  }
}

double l1_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double sum_scalar(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

constexpr KernelTable kScalar{Backend::scalar, axpy_scalar, l1_scalar, sum_scalar,
                              max_abs_diff_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace fdlab::simd::detail
