#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "pgmix/likelihood.hpp"
#include "pgmix/rng.hpp"
#include "pgmix/simd/kernels.hpp"
#include "support.hpp"

using namespace pgmix;

namespace {

bool close(double a, double b, double rel) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("vector kernels agree with the scalar reference") {
  const auto* v = simd::avx2_kernels();
  if (!v) {
    MESSAGE("AVX2 kernels unavailable on this CPU; only the scalar path is exercised");
    return;
  }
  const auto& s = simd::scalar_kernels();
  Rng rng(12);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    std::vector<double> e(n), a(n), b(n);
    for (auto& x : e) x = std::exp(rng.uniform(std::log(1e-3), std::log(5e4)));
    if (n > 2) e[1] = 0.0;  // no expectation
    for (double lo : {std::log10(40.0), std::log10(1000.0), std::log10(25000.0)})
      for (double c2 : {0.5, 12.0, 80.0}) {
        s.log10_peak_density(e.data(), n, lo, c2, a.data());
        v->log10_peak_density(e.data(), n, lo, c2, b.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(close(a[i], b[i], 1e-12));
      }

    std::vector<double> x(n);
    for (auto& t : x) t = rng.uniform(-300.0, 50.0);
    if (n > 3) x[2] = kExclusion;
    CHECK(close(s.log10_sum_exp10(x.data(), n), v->log10_sum_exp10(x.data(), n), 1e-13));
    std::vector<double> all_ex(n, kExclusion);
    CHECK(v->log10_sum_exp10(all_ex.data(), n) == kExclusion);

    std::vector<std::uint32_t> idx(n);
    std::vector<double> table(37);
    for (auto& t : table) t = rng.uniform(-10, 10);
    for (auto& i : idx) i = static_cast<std::uint32_t>(rng.below(table.size()));
    std::vector<double> acc1(n, 1.5), acc2(n, 1.5);
    s.gather_add(idx.data(), table.data(), n, acc1.data());
    v->gather_add(idx.data(), table.data(), n, acc2.data());
    CHECK(acc1 == acc2);

    std::vector<double> pos(n), l1(n), l2(n);
    for (auto& t : pos) t = std::exp(rng.uniform(-700.0, 700.0));
    s.log(pos.data(), n, l1.data());
    v->log(pos.data(), n, l2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(close(l1[i], l2[i], 1e-13));

    std::vector<double> xs(n), e1(n), e2(n);
    for (auto& t : xs) t = rng.uniform(-720.0, 700.0);
    s.exp(xs.data(), n, e1.data());
    v->exp(xs.data(), n, e2.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(e1[i] - e2[i]) <= 1e-13 * std::max(e1[i], e2[i]) + 1e-300);
  }
}

TEST_CASE("likelihood is the same under either kernel table") {
  if (!simd::avx2_kernels()) return;
  const std::string before = simd::active_kernels().name;
  ModelConfig cfg;
  cfg.back_stutter = true;
  cfg.degradation = true;
  const auto sc = pgmix::testing::synthetic_case(5, 3, 4, 6, 100.0, 2000.0, cfg);
  const HypothesisLikelihood h(sc.profile, pgmix::testing::unknowns(3), sc.table,
                               RareAllelePolicy::five_over_2n(), cfg);
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    MassParams m({rng.uniform(50, 3000), rng.uniform(50, 3000), rng.uniform(50, 3000)}, rng.uniform(3, 30));
    m.bw_stutter_prop = rng.uniform(0, 0.2);
    m.degradation_slope = rng.uniform(0.6, 1.0);
    REQUIRE(simd::select_kernels("scalar"));
    const double a = h.log10_likelihood(m);
    REQUIRE(simd::select_kernels("avx2"));
    const double b = h.log10_likelihood(m);
    CHECK(close(a, b, 1e-11));
  }
  simd::select_kernels(before);
}

TEST_CASE("kernel selection by name") {
  CHECK(simd::select_kernels("scalar"));
  CHECK(std::string(simd::active_kernels().name) == "scalar");
  CHECK_FALSE(simd::select_kernels("neon"));
  if (simd::avx2_kernels()) CHECK(simd::select_kernels("avx2"));
}
