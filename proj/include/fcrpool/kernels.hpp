#pragma once

// Data-parallel inner loops of the distributed solver.
//
// Every kernel has a scalar reference implementation and may have SIMD
// variants. Variants must reproduce the reference bit for bit: elementwise
// kernels evaluate the same IEEE operations in the same order per lane, and
// reductions use a fixed four-way interleaved order in both versions. The
// build disables FMA contraction so the compiler cannot fuse operations in
// one version only.

#include <cstddef>
#include <string_view>

namespace fcrpool::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

/// Per-asset constants of the local subproblem.
struct LocalParams {
  double fcr_price = 0.0;
  double power_cap = 5.0;
  double rho_power = 0.0;       // weight on (p - b)^2
  double rho_activation = 0.0;  // weight on sum over circles (z - a_s)^2
  double circle_count = 1.0;    // |S_i|
};

struct KernelTable {
  Isa isa;

  /// out = a + b
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  /// out = a - b
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  /// acc += a - b
  void (*accumulate_diff)(const double* a, const double* b, double* acc, std::size_t n);
  /// out[c] = sum_r m[r * cols + c], rows added in order starting from 0.0.
  void (*column_sums)(const double* m, std::size_t rows, std::size_t cols, double* out);
  /// out[r * cols + c] = v[r * cols + c] + delta[c]
  void (*add_row_broadcast)(const double* v, const double* delta, std::size_t rows,
                            std::size_t cols, double* out);
  /// sum x^2, four-way interleaved.
  double (*sum_squares)(const double* x, std::size_t n);
  /// sum (a - b)^2, four-way interleaved.
  double (*sum_squares_diff)(const double* a, const double* b, std::size_t n);

  /// Exact minimizer, per step, of
  ///   (c - c_F) p + rp/2 (p - b)^2 + ra/2 (m z^2 - 2 z A)
  /// over 0 <= p <= cap z, z in [0, 1]; A is the sum of the circle targets.
  void (*local_relaxed)(const double* cost, const double* b, const double* a_sum,
                        std::size_t n, const LocalParams& prm, double* p, double* z);
  /// Same objective with z restricted to {0, 1}; ties go to z = 0.
  void (*local_integer)(const double* cost, const double* b, const double* a_sum,
                        std::size_t n, const LocalParams& prm, double* p, double* z);
  /// Penalty-free solve: full power exactly where cost < c_F.
  void (*warm_start)(const double* cost, std::size_t n, double fcr_price, double power_cap,
                     double* p, double* z);
};

const KernelTable& scalar_kernels();

/// True when the variant was compiled in and the CPU supports it.
bool isa_available(Isa isa);

/// Table for a specific variant; throws if unavailable.
const KernelTable& kernels_for(Isa isa);

/// Best available variant, unless FCRPOOL_ISA=scalar is set.
const KernelTable& active_kernels();

namespace detail {
const KernelTable* avx2_table();  // null when not compiled in
}

}  // namespace fcrpool::kernels
