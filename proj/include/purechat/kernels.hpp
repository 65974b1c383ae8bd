#pragma once

#include <cstddef>

// Dense kernels behind the autodiff ops. Each kernel exists twice: a serial
// reference and an OpenMP version parallelised over independent output
// elements. Every output element is reduced in the same serial order in both
// versions, so results are bit-identical for any thread count; the dispatch
// wrappers pick the parallel path only when the problem is big enough to pay
// for it. tools/bench_kernels compares the two.
namespace purechat::ad::kernels {

// c[m x n] = a[m x k] * b[k x n]
void matmul_serial(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_parallel(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n);
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_nt_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_tn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

// y[m] = w[m x k] * x[k]
void matvec_serial(const double* w, const double* x, double* y,
                   std::size_t m, std::size_t k);
void matvec_parallel(const double* w, const double* x, double* y,
                     std::size_t m, std::size_t k);
void matvec(const double* w, const double* x, double* y,
            std::size_t m, std::size_t k);

// y[k] = w[m x k]^T * x[m]
void matvec_t_serial(const double* w, const double* x, double* y,
                     std::size_t m, std::size_t k);
void matvec_t_parallel(const double* w, const double* x, double* y,
                       std::size_t m, std::size_t k);
void matvec_t(const double* w, const double* x, double* y,
              std::size_t m, std::size_t k);

// Process-wide switch, mainly for tests and the benchmark. Parallel paths
// also require compilation with OpenMP.
void set_parallel_enabled(bool on);
bool parallel_enabled();

// Minimum flop count before the dispatchers go parallel.
void set_parallel_threshold(std::size_t flops);
std::size_t parallel_threshold();

}  // namespace purechat::ad::kernels
