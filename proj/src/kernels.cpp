#include "purechat/kernels.hpp"

#include <atomic>
#include <cstdint>

namespace purechat::ad::kernels {

namespace {
std::atomic<bool> g_parallel{true};
std::atomic<std::size_t> g_threshold{1u << 15};

bool go_parallel(std::size_t flops) {
#ifdef _OPENMP
  return g_parallel.load(std::memory_order_relaxed) &&
         flops >= g_threshold.load(std::memory_order_relaxed);
#else
  (void)flops;
  return false;
#endif
}
}  // namespace

void set_parallel_enabled(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }
void set_parallel_threshold(std::size_t flops) { g_threshold.store(flops); }
std::size_t parallel_threshold() { return g_threshold.load(); }

void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void matmul_parallel(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n))
    matmul_parallel(a, b, c, m, k, n);
  else
    matmul_serial(a, b, c, m, k, n);
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
}

void matmul_nt_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n))
    matmul_nt_parallel(a, b, c, m, k, n);
  else
    matmul_nt_serial(a, b, c, m, k, n);
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void matmul_tn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n))
    matmul_tn_parallel(a, b, c, m, k, n);
  else
    matmul_tn_serial(a, b, c, m, k, n);
}

void matvec_serial(const double* w, const double* x, double* y,
                   std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += w[i * k + p] * x[p];
    y[i] = acc;
  }
}

void matvec_parallel(const double* w, const double* x, double* y,
                     std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += w[i * k + p] * x[p];
    y[i] = acc;
  }
}

void matvec(const double* w, const double* x, double* y,
            std::size_t m, std::size_t k) {
  if (go_parallel(m * k))
    matvec_parallel(w, x, y, m, k);
  else
    matvec_serial(w, x, y, m, k);
}

void matvec_t_serial(const double* w, const double* x, double* y,
                     std::size_t m, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w[i * k + j] * x[i];
    y[j] = acc;
  }
}

void matvec_t_parallel(const double* w, const double* x, double* y,
                       std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(k); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w[i * k + j] * x[i];
    y[j] = acc;
  }
}

void matvec_t(const double* w, const double* x, double* y,
              std::size_t m, std::size_t k) {
  if (go_parallel(m * k))
    matvec_t_parallel(w, x, y, m, k);
  else
    matvec_t_serial(w, x, y, m, k);
}

}  // namespace purechat::ad::kernels
