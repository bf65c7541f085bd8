#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fdlab/simd.hpp"

namespace fdlab::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("FDLAB_SIMD")) {
    Backend b;
    if (parse_backend(env, b) && backend_available(b)) return b;
  }
  if (backend_available(Backend::avx2)) return Backend::avx2;
  if (backend_available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{&table(detect())};
  return s;
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool parse_backend(std::string_view name, Backend& out) {
  if (name == "scalar") { out = Backend::scalar; return true; }
  if (name == "avx2") { out = Backend::avx2; return true; }
  if (name == "neon") { out = Backend::neon; return true; }
  return false;
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Backend::neon: return detail::neon_table() != nullptr;
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!backend_available(b))
    throw std::runtime_error(std::string("SIMD backend unavailable: ") + backend_name(b));
  switch (b) {
    case Backend::avx2: return *detail::avx2_table();
    case Backend::neon: return *detail::neon_table();
    case Backend::scalar: break;
  }
  return detail::scalar_table();
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void set_active(Backend b) { slot().store(&table(b), std::memory_order_relaxed); }

void vec_mat(const KernelTable& k, std::span<const double> x, const double* m,
             std::size_t rows, std::size_t cols, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (x[i] == 0.0) continue;
    k.axpy(x[i], m + i * cols, y.data(), cols);
  }
}

void mat_mul(const KernelTable& t, const double* a, const double* b, double* c,
             std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* row = c + i * m;
    std::fill(row, row + m, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = a[i * k + j];
      if (aij != 0.0) t.axpy(aij, b + j * m, row, m);
    }
  }
}

}  // namespace fdlab::simd
