#include "doctest.h"

#include <vector>

#include "purechat/kernels.hpp"
#include "purechat/rng.hpp"

using namespace purechat;
namespace k = ad::kernels;

namespace {
std::vector<double> random_buf(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}
}  // namespace

TEST_CASE("matmul matches a hand example") {
  // [[1,2],[3,4]] * [[5,6],[7,8]] = [[19,22],[43,50]]
  std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8}, c(4);
  k::matmul_serial(a.data(), b.data(), c.data(), 2, 2, 2);
  CHECK(c == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(7);
  struct Dims {
    std::size_t m, k, n;
  };
  for (auto [m, kk, n] :
       std::vector<Dims>{{3, 5, 4}, {17, 31, 9}, {64, 64, 64}}) {
    auto a = random_buf(m * kk, rng);
    auto b = random_buf(kk * n, rng);
    std::vector<double> c1(m * n), c2(m * n);
    k::matmul_serial(a.data(), b.data(), c1.data(), m, kk, n);
    k::matmul_parallel(a.data(), b.data(), c2.data(), m, kk, n);
    CHECK(c1 == c2);

    std::vector<double> d1(m * kk), d2(m * kk);
    k::matmul_nt_serial(c1.data(), b.data(), d1.data(), m, n, kk);
    k::matmul_nt_parallel(c1.data(), b.data(), d2.data(), m, n, kk);
    CHECK(d1 == d2);

    std::vector<double> e1(kk * n), e2(kk * n);
    k::matmul_tn_serial(a.data(), c1.data(), e1.data(), kk, m, n);
    k::matmul_tn_parallel(a.data(), c1.data(), e2.data(), kk, m, n);
    CHECK(e1 == e2);

    auto x = random_buf(kk, rng);
    std::vector<double> y1(m), y2(m);
    k::matvec_serial(a.data(), x.data(), y1.data(), m, kk);
    k::matvec_parallel(a.data(), x.data(), y2.data(), m, kk);
    CHECK(y1 == y2);

    auto g = random_buf(m, rng);
    std::vector<double> z1(kk), z2(kk);
    k::matvec_t_serial(a.data(), g.data(), z1.data(), m, kk);
    k::matvec_t_parallel(a.data(), g.data(), z2.data(), m, kk);
    CHECK(z1 == z2);
  }
}

TEST_CASE("transposed kernels agree with explicit transposition") {
  Rng rng(11);
  std::size_t m = 6, kk = 4, n = 5;
  auto a = random_buf(m * kk, rng);
  auto b = random_buf(n * kk, rng);  // will be used as B^T
  std::vector<double> bt(kk * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kk; ++j) bt[j * n + i] = b[i * kk + j];
  std::vector<double> c1(m * n), c2(m * n);
  k::matmul_nt_serial(a.data(), b.data(), c1.data(), m, kk, n);
  k::matmul_serial(a.data(), bt.data(), c2.data(), m, kk, n);
  for (std::size_t i = 0; i < c1.size(); ++i)
    CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-12));
}

TEST_CASE("dispatch respects the enable switch") {
  bool was = k::parallel_enabled();
  k::set_parallel_enabled(false);
  std::vector<double> a{1, 0, 0, 1}, b{2, 3, 4, 5}, c(4);
  k::matmul(a.data(), b.data(), c.data(), 2, 2, 2);
  CHECK(c == b);
  k::set_parallel_enabled(was);
}
