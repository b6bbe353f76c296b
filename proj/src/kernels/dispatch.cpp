#include <cstdlib>
#include <string_view>

#include "sdistill/kernels/kernels.hpp"

namespace sdistill::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("SDISTILL_ISA"); env != nullptr) {
    if (std::string_view(env) == "scalar") return Isa::kScalar;
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

const KernelTable& table_for(Isa isa) {
#if defined(SDISTILL_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2_table();
#endif
  (void)isa;
  return scalar_table();
}

Isa& current_isa() {
  static Isa isa = detect();
  return isa;
}

const KernelTable*& current_table() {
  static const KernelTable* table = &table_for(current_isa());
  return table;
}

}  // namespace

bool isa_supported(Isa isa) {
  if (isa == Isa::kScalar) return true;
#if defined(SDISTILL_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return current_isa(); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) isa = Isa::kScalar;
  current_isa() = isa;
  current_table() = &table_for(isa);
}

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

const KernelTable& active() { return *current_table(); }

}  // namespace sdistill::kernels
