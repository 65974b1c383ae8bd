// Compares the serial reference kernels against the OpenMP versions and
// checks that both produce bit-identical results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "purechat/kernels.hpp"
#include "purechat/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;
namespace k = purechat::ad::kernels;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_buf(std::size_t n, purechat::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

int main() {
  purechat::Rng rng(1234);
  std::printf("%-22s %12s %12s %9s %10s\n", "kernel", "serial(ms)", "omp(ms)",
              "speedup", "bitmatch");

  for (std::size_t n : {64u, 128u, 256u, 512u}) {
    auto a = random_buf(n * n, rng);
    auto b = random_buf(n * n, rng);
    std::vector<double> c1(n * n), c2(n * n);
    int reps = n <= 128 ? 50 : 8;

    double ts = time_ms([&] { k::matmul_serial(a.data(), b.data(), c1.data(), n, n, n); }, reps);
    double tp = time_ms([&] { k::matmul_parallel(a.data(), b.data(), c2.data(), n, n, n); }, reps);
    bool same = c1 == c2;
    std::printf("matmul %4zux%-4zu        %12.3f %12.3f %8.2fx %10s\n", n, n,
                ts, tp, ts / tp, same ? "yes" : "NO");
  }

  for (std::size_t n : {256u, 1024u, 4096u}) {
    auto w = random_buf(n * n, rng);
    auto x = random_buf(n, rng);
    std::vector<double> y1(n), y2(n);
    int reps = n <= 1024 ? 200 : 20;

    double ts = time_ms([&] { k::matvec_serial(w.data(), x.data(), y1.data(), n, n); }, reps);
    double tp = time_ms([&] { k::matvec_parallel(w.data(), x.data(), y2.data(), n, n); }, reps);
    bool same = y1 == y2;
    std::printf("matvec %4zux%-4zu        %12.3f %12.3f %8.2fx %10s\n", n, n,
                ts, tp, ts / tp, same ? "yes" : "NO");
  }
  return 0;
}
