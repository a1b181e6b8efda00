#include <cstdlib>
#include <string>

#include "fcrpool/error.hpp"
#include "fcrpool/kernels.hpp"

namespace fcrpool::kernels {

#ifndef FCRPOOL_HAVE_AVX2
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(__i386__)
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw Error(ErrorKind::kInvalidArgument,
                "kernel variant '" + std::string(to_string(isa)) + "' is not available");
  }
  if (isa == Isa::kAvx2) return *detail::avx2_table();
  return scalar_kernels();
}

const KernelTable& active_kernels() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("FCRPOOL_ISA");
    if (env != nullptr && std::string(env) == "scalar") return scalar_kernels();
    if (isa_available(Isa::kAvx2)) return *detail::avx2_table();
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace fcrpool::kernels
