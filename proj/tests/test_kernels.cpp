#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdistill/kernels/kernels.hpp"
#include "sdistill/util/rng.hpp"

using namespace sdistill;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  }
  return m;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const auto& k = kernels::scalar_table();
  Rng rng(5);
  const std::size_t rows = 7, cols = 13;
  auto w = random_vec(rng, rows * cols), x = random_vec(rng, cols), g = random_vec(rng, rows);
  std::vector<double> y(rows);
  k.gemv(w.data(), rows, cols, x.data(), y.data());
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += w[r * cols + c] * x[c];
    CHECK(y[r] == doctest::Approx(s).epsilon(1e-14));
  }
  std::vector<double> xg(cols, 0.5);
  k.gemv_t_acc(w.data(), rows, cols, g.data(), xg.data());
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.5;
    for (std::size_t r = 0; r < rows; ++r) s += w[r * cols + c] * g[r];
    CHECK(xg[c] == doctest::Approx(s).epsilon(1e-14));
  }
  std::vector<double> wg(rows * cols, 1.0);
  k.ger_acc(wg.data(), rows, cols, g.data(), x.data());
  CHECK(wg[3 * cols + 4] == doctest::Approx(1.0 + g[3] * x[4]).epsilon(1e-15));
}

#if defined(SDISTILL_HAVE_AVX2)
TEST_CASE("AVX2 kernels agree with the scalar reference") {
  if (!kernels::isa_supported(kernels::Isa::kAvx2)) return;
  const auto& s = kernels::scalar_table();
  const auto& v = kernels::avx2_table();
  Rng rng(11);
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 96u, 257u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) < 1e-12);
    auto y1 = b, y2 = b;
    s.axpy(0.37, a.data(), y1.data(), n);
    v.axpy(0.37, a.data(), y2.data(), n);
    CHECK(max_rel(y1, y2) < 1e-14);
    for (std::size_t rows : {1u, 5u, 64u}) {
      auto w = random_vec(rng, rows * n), g = random_vec(rng, rows);
      std::vector<double> o1(rows), o2(rows);
      s.gemv(w.data(), rows, n, a.data(), o1.data());
      v.gemv(w.data(), rows, n, a.data(), o2.data());
      CHECK(max_rel(o1, o2) < 1e-12);
      auto x1 = b, x2 = b;
      s.gemv_t_acc(w.data(), rows, n, g.data(), x1.data());
      v.gemv_t_acc(w.data(), rows, n, g.data(), x2.data());
      CHECK(max_rel(x1, x2) < 1e-12);
      auto w1 = w, w2 = w;
      s.ger_acc(w1.data(), rows, n, g.data(), a.data());
      v.ger_acc(w2.data(), rows, n, g.data(), a.data());
      CHECK(max_rel(w1, w2) < 1e-14);
    }
  }
}
#endif

TEST_CASE("isa selection round-trips") {
  const auto before = kernels::active_isa();
  kernels::set_isa(kernels::Isa::kScalar);
  CHECK(kernels::active_isa() == kernels::Isa::kScalar);
  CHECK(kernels::isa_name(kernels::Isa::kScalar) == "scalar");
  kernels::set_isa(before);
}
