#include <atomic>
#include <cstdlib>
#include <string>

#include "pgmix/simd/kernels.hpp"

namespace pgmix::simd {

#if defined(PGMIX_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(PGMIX_HAVE_AVX2_KERNELS)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("PGMIX_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
  }
  if (const auto* v = avx2_kernels()) return v;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_choice()};
  return slot;
}

}  // namespace

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

bool select_kernels(std::string_view name) {
  if (name == "scalar") {
    active_slot().store(&scalar_kernels(), std::memory_order_release);
    return true;
  }
  if (name == "avx2") {
    if (const auto* v = avx2_kernels()) {
      active_slot().store(v, std::memory_order_release);
      return true;
    }
  }
  return false;
}

}  // namespace pgmix::simd
