// Compiled with -mavx2 -mfma; only reached through the dispatcher after a CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "pgmix/simd/kernels.hpp"

namespace pgmix::simd {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

// Natural log for positive normal inputs: x = m * 2^e, m in [sqrt(1/2), sqrt(2)),
// log(m) = 2 atanh(s), s = (m-1)/(m+1), odd series to s^21.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  __m256i exp_bits = _mm256_srli_epi64(bits, 52);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // exponent as double: (bits >> 52) - 1023, via the 2^52 magic-number trick
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(exp_bits, _mm256_castpd_si256(magic))), magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  const __m256d sqrt2 = _mm256_set1_pd(std::numbers::sqrt2);
  const __m256d big = _mm256_cmp_pd(m, sqrt2, _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d f = _mm256_sub_pd(m, one);
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(m, one));
  const __m256d z = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(1.0 / 21.0);
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 3.0));
  // log(m) = 2s + 2s*z*p
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, z), p, two_s);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Hi),
                         _mm256_fmadd_pd(e, _mm256_set1_pd(kLn2Lo), log_m));
}

// exp via x = n ln2 + r, |r| <= ln2/2, Taylor to r^13; inputs below -708 give 0.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo_mask = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
  x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(std::numbers::log2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);        // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n: integer n from the 1.5*2^52 magic add, shifted into the exponent field
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);
  const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                      _mm256_castpd_si256(magic));
  const __m256i scaled = _mm256_add_epi64(_mm256_castpd_si256(p), _mm256_slli_epi64(ni, 52));
  return _mm256_andnot_pd(lo_mask, _mm256_castsi256_pd(scaled));
}

void log10_peak_density(const double* expected, std::size_t n, double log10_observed, double c2,
                        double* out) {
  const double log10_2pi_c2 = std::log10(2.0 * std::numbers::pi * c2);
  const double k = 1.0 / (2.0 * c2 * std::numbers::ln10);
  const __m256d v_lo = _mm256_set1_pd(log10_observed);
  const __m256d v_c = _mm256_set1_pd(log10_2pi_c2);
  const __m256d v_k = _mm256_set1_pd(k);
  const __m256d v_inv_ln10 = _mm256_set1_pd(1.0 / std::numbers::ln10);
  const __m256d v_half = _mm256_set1_pd(-0.5);
  const __m256d v_zero = _mm256_setzero_pd();
  const __m256d v_one = _mm256_set1_pd(1.0);
  const __m256d v_ninf = _mm256_set1_pd(kNegInf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_loadu_pd(expected + i);
    const __m256d pos = _mm256_cmp_pd(e, v_zero, _CMP_GT_OQ);
    const __m256d le = _mm256_mul_pd(log_pd(_mm256_blendv_pd(v_one, e, pos)), v_inv_ln10);
    const __m256d d = _mm256_sub_pd(v_lo, le);
    const __m256d quad = _mm256_mul_pd(_mm256_mul_pd(d, d), _mm256_mul_pd(e, v_k));
    const __m256d r = _mm256_sub_pd(_mm256_mul_pd(v_half, _mm256_sub_pd(v_c, le)), quad);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(v_ninf, r, pos));
  }
  for (; i < n; ++i) {
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
  if (n == 0) return kNegInf;
  std::size_t i = 0;
  __m256d vm = _mm256_set1_pd(kNegInf);
  for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vm);
  double m = kNegInf;
  for (double v : lanes) m = v > m ? v : m;
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  if (m == kNegInf) return kNegInf;

  const __m256d shift = _mm256_set1_pd(m);
  const __m256d ln10 = _mm256_set1_pd(std::numbers::ln10);
  __m256d acc = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), shift), ln10);
    acc = _mm256_add_pd(acc, exp_pd(v));
  }
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += std::exp((x[i] - m) * std::numbers::ln10);
  return m + std::log10(s);
}

void gather_add(const std::uint32_t* index, const double* table, std::size_t n, double* acc) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(index + j));
    const __m256d g = _mm256_i32gather_pd(table, idx, 8);
    _mm256_storeu_pd(acc + j, _mm256_add_pd(_mm256_loadu_pd(acc + j), g));
  }
  for (; j < n; ++j) acc[j] += table[index[j]];
}

void vlog(const double* x, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, log_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::log(x[i]);
}

void vexp(const double* x, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = x[i] < -708.0 ? 0.0 : std::exp(x[i]);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", log10_peak_density, log10_sum_exp10, gather_add, vlog,
                                 vexp};
  return table;
}

}  // namespace pgmix::simd
