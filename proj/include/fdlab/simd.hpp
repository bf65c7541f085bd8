#pragma once
// Dense inner loops used by the exact oracle: row-vector by matrix products,
// matrix products, and the reductions behind TV and l1 checks.
//
// Each kernel has a scalar reference implementation plus AVX2 (x86-64) and
// NEON (aarch64) variants. The variant is chosen once at runtime from CPU
// features; FDLAB_SIMD=scalar|avx2|neon in the environment overrides it.
//
// Elementwise kernels (axpy, vec_mat, mat_mul) perform the same operations in
// the same order as the scalar code, without fused multiply-add, so every
// backend returns bit-identical results. Reductions reassociate across lanes
// and agree with the scalar reference to rounding only.

#include <cstddef>
#include <span>
#include <string_view>

namespace fdlab::simd {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  /// y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// sum_i |a[i] - b[i]|
  double (*l1_distance)(const double* a, const double* b, std::size_t n);
  /// sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
  /// max_i |a[i] - b[i]|
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
};

const char* backend_name(Backend b);
bool parse_backend(std::string_view name, Backend& out);
bool backend_available(Backend b);
/// Kernel table for a specific backend; throws if it is unavailable.
const KernelTable& table(Backend b);
/// Kernel table selected at runtime.
const KernelTable& active();
/// Overrides the runtime selection (used by tests and the CLI).
void set_active(Backend b);

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  return active().l1_distance(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a.data(), b.data(), a.size());
}

/// y = x * M for a row-major rows x cols matrix M. Rows with x[i] == 0 are
/// skipped.
void vec_mat(const KernelTable& k, std::span<const double> x, const double* m,
             std::size_t rows, std::size_t cols, std::span<double> y);
inline void vec_mat(std::span<const double> x, const double* m, std::size_t rows,
                    std::size_t cols, std::span<double> y) {
  vec_mat(active(), x, m, rows, cols, y);
}

/// C = A * B with A (n x k), B (k x m), all row-major.
void mat_mul(const KernelTable& t, const double* a, const double* b, double* c,
             std::size_t n, std::size_t k, std::size_t m);
inline void mat_mul(const double* a, const double* b, double* c, std::size_t n,
                    std::size_t k, std::size_t m) {
  mat_mul(active(), a, b, c, n, k, m);
}

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace fdlab::simd
