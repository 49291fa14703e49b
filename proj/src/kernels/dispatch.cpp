#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "norm/error.hpp"

namespace norm::kernels {
namespace {

#define NORM_TABLE(ns, tag) \
  KernelTable{tag, ns::gemm_nn, ns::gemm_tn, ns::dot, ns::axpy, ns::add_row_bias, ns::col_sum, ns::gelu, \
              ns::gelu_backward, ns::adam_update}

const KernelTable kScalar = NORM_TABLE(scalar, Isa::Scalar);
#if defined(NORM_HAVE_AVX2)
const KernelTable kAvx2 = NORM_TABLE(avx2, Isa::Avx2);
#endif
#if defined(NORM_HAVE_AVX512)
const KernelTable kAvx512 = NORM_TABLE(avx512, Isa::Avx512);
#endif
#if defined(NORM_HAVE_NEON)
const KernelTable kNeon = NORM_TABLE(neon, Isa::Neon);
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
#if defined(__x86_64__) || defined(__i386__)
    case Isa::Avx2: return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::Avx512: return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("fma");
#endif
#if defined(__aarch64__)
    case Isa::Neon: return true;
#endif
    default: return false;
  }
}

const KernelTable* compiled(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return &kScalar;
#if defined(NORM_HAVE_AVX2)
    case Isa::Avx2: return &kAvx2;
#endif
#if defined(NORM_HAVE_AVX512)
    case Isa::Avx512: return &kAvx512;
#endif
#if defined(NORM_HAVE_NEON)
    case Isa::Neon: return &kNeon;
#endif
    default: return nullptr;
  }
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("NORM_SIMD")) {
    Isa forced;
    if (parse_isa(env, forced) && table_for(forced)) return table_for(forced);
  }
  for (Isa isa : {Isa::Avx512, Isa::Avx2, Isa::Neon})
    if (const KernelTable* t = table_for(isa)) return t;
  return &kScalar;
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Avx512: return "avx512";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool parse_isa(std::string_view name, Isa& out) {
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512, Isa::Neon}) {
    if (name == to_string(isa)) {
      out = isa;
      return true;
    }
  }
  return false;
}

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* table_for(Isa isa) {
  const KernelTable* t = compiled(isa);
  return (t && cpu_supports(isa)) ? t : nullptr;
}

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512, Isa::Neon})
    if (table_for(isa)) out.push_back(isa);
  return out;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = pick_default();
    const KernelTable* expected = nullptr;
    if (!g_active.compare_exchange_strong(expected, t)) t = expected;
  }
  return *t;
}

void select(Isa isa) {
  const KernelTable* t = table_for(isa);
  require(t != nullptr, ErrorKind::InvalidSpec,
          "SIMD variant '" + std::string(to_string(isa)) + "' is not available on this machine");
  g_active.store(t, std::memory_order_release);
}

}  // namespace norm::kernels
