#include <cmath>
#include <limits>
#include <numbers>

#include "pgmix/simd/kernels.hpp"

namespace pgmix::simd {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void log10_peak_density(const double* expected, std::size_t n, double log10_observed, double c2,
                        double* out) {
  const double log10_2pi_c2 = std::log10(2.0 * std::numbers::pi * c2);
  const double k = 1.0 / (2.0 * c2 * std::numbers::ln10);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = expected[i];
    if (!(e > 0.0)) {
      out[i] = kNegInf;
      continue;
    }
    const double le = std::log10(e);
    const double d = log10_observed - le;
    out[i] = -0.5 * (log10_2pi_c2 - le) - d * d * e * k;
  }
}

double log10_sum_exp10(const double* x, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) m = x[i] > m ? x[i] : m;
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp((x[i] - m) * std::numbers::ln10);
  return m + std::log10(s);
}

void gather_add(const std::uint32_t* index, const double* table, std::size_t n, double* acc) {
  for (std::size_t j = 0; j < n; ++j) acc[j] += table[index[j]];
}

void vlog(const double* x, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(x[i]);
}

void vexp(const double* x, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] < -708.0 ? 0.0 : std::exp(x[i]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", log10_peak_density, log10_sum_exp10, gather_add, vlog,
                                 vexp};
  return table;
}

}  // namespace pgmix::simd
