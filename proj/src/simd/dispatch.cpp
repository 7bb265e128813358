#include <atomic>
#include <cstdlib>
#include <string_view>

#include "sesdf/simd/kernels.hpp"
#include "sesdf/util/log.hpp"

namespace sesdf::simd {

#if defined(SESDF_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(SESDF_HAVE_NEON)
namespace neon {
const KernelTable& table();
}
#endif

namespace {
std::atomic<const KernelTable*> g_override{nullptr};

const KernelTable& select() {
  const char* env = std::getenv("SESDF_SIMD");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2") {
    if (const KernelTable* t = avx2_kernels()) return *t;
    log::warn("SESDF_SIMD=avx2 requested but unavailable; using the best supported kernels");
  }
  if (want == "neon") {
    if (const KernelTable* t = neon_kernels()) return *t;
    log::warn("SESDF_SIMD=neon requested but unavailable; using the best supported kernels");
  }
  if (const KernelTable* t = avx2_kernels()) return *t;
  if (const KernelTable* t = neon_kernels()) return *t;
  return scalar_kernels();
}
}  // namespace

const KernelTable* avx2_kernels() {
#if defined(SESDF_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(SESDF_HAVE_NEON)
  return &neon::table();
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  if (const KernelTable* t = g_override.load(std::memory_order_relaxed)) return *t;
  static const KernelTable& selected = select();
  return selected;
}

void override_kernels(const KernelTable* table) { g_override.store(table); }

}  // namespace sesdf::simd
