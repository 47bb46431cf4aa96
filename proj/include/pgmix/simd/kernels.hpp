#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops of the likelihood kernel. Every kernel has a scalar
// reference implementation; vector variants are selected at runtime from CPU
// features and must agree with the reference to ~1e-13 relative.

namespace pgmix::simd {

struct KernelTable {
  const char* name;

  /// out[i] = log10 of the normal density of log10(O/E_i) with variance c2/E_i,
  /// evaluated at the observation; -inf where E_i <= 0.
  void (*log10_peak_density)(const double* expected, std::size_t n, double log10_observed,
                             double c2, double* out);

  /// log10(sum_i 10^x_i); -inf for an empty span or when every x_i is -inf.
  double (*log10_sum_exp10)(const double* x, std::size_t n);

  /// acc[j] += table[index[j]]
  void (*gather_add)(const std::uint32_t* index, const double* table, std::size_t n, double* acc);

  /// out[i] = ln(x_i) for finite positive normal x_i.
  void (*log)(const double* x, std::size_t n, double* out);

  /// out[i] = exp(x_i); inputs below -708 flush to 0.
  void (*exp)(const double* x, std::size_t n, double* out);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

/// Kernels used by the library. Chosen once from CPU features; the
/// PGMIX_KERNELS environment variable ("scalar" or "avx2") overrides.
const KernelTable& active_kernels();

/// Switches the active table by name; returns false if unavailable.
bool select_kernels(std::string_view name);

}  // namespace pgmix::simd
