// Compiled with -mavx2 only; never called unless the CPU reports AVX2.

#include <immintrin.h>

#include "fcrpool/kernels.hpp"
#include "kernel_math.hpp"

namespace fcrpool::kernels {
namespace {

using V = __m256d;

inline V bc(double x) { return _mm256_set1_pd(x); }
inline V sel(V mask, V if_true, V if_false) { return _mm256_blendv_pd(if_false, if_true, mask); }
inline V lt(V a, V b) { return _mm256_cmp_pd(a, b, _CMP_LT_OQ); }
inline V gt(V a, V b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
inline V le(V a, V b) { return _mm256_cmp_pd(a, b, _CMP_LE_OQ); }
inline V ge(V a, V b) { return _mm256_cmp_pd(a, b, _CMP_GE_OQ); }

// x < lo ? lo : (x > hi ? hi : x)
inline V clip(V x, V lo, V hi) { return sel(lt(x, lo), lo, sel(gt(x, hi), hi, x)); }

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void accumulate_diff(const double* a, const double* b, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const V d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), d));
  }
  for (; i < n; ++i) acc[i] += a[i] - b[i];
}

void column_sums(const double* m, std::size_t rows, std::size_t cols, double* out) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    V s = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) s = _mm256_add_pd(s, _mm256_loadu_pd(m + r * cols + c));
    _mm256_storeu_pd(out + c, s);
  }
  for (; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += m[r * cols + c];
    out[c] = s;
  }
}

void add_row_broadcast(const double* v, const double* delta, std::size_t rows, std::size_t cols,
                       double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    add(v + r * cols, delta, out + r * cols, cols);
  }
}

double reduce4(V acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum_squares(const double* x, std::size_t n) {
  V acc = _mm256_setzero_pd();
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    const V v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = reduce4(acc);
  for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_squares_diff(const double* a, const double* b, std::size_t n) {
  V acc = _mm256_setzero_pd();
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    const V d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = reduce4(acc);
  for (std::size_t i = body; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct VecConstants {
  explicit VecConstants(const detail::LocalConstants& k)
      : fcr_price(bc(k.fcr_price)), cap(bc(k.cap)), rho_p(bc(k.rho_p)), rho_z(bc(k.rho_z)),
        m(bc(k.m)), half_p(bc(k.half_p)), half_z(bc(k.half_z)), cap_rho_p(bc(k.cap_rho_p)),
        edge_den(bc(k.edge_den)) {}
  V fcr_price, cap, rho_p, rho_z, m, half_p, half_z, cap_rho_p, edge_den;
};

inline V objective(const VecConstants& k, V g, V b, V a, V p, V z) {
  const V dp = _mm256_sub_pd(p, b);
  const V lin = _mm256_mul_pd(g, p);
  const V quad_p = _mm256_mul_pd(k.half_p, _mm256_mul_pd(dp, dp));
  const V inner = _mm256_sub_pd(_mm256_mul_pd(k.m, _mm256_mul_pd(z, z)),
                                _mm256_mul_pd(bc(2.0), _mm256_mul_pd(z, a)));
  return _mm256_add_pd(_mm256_add_pd(lin, quad_p), _mm256_mul_pd(k.half_z, inner));
}

void local_relaxed(const double* cost, const double* b, const double* a_sum, std::size_t n,
                   const LocalParams& prm, double* p, double* z) {
  const detail::LocalConstants ks(prm);
  const VecConstants k(ks);
  const V zero = _mm256_setzero_pd();
  const V one = bc(1.0);
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const V vb = _mm256_loadu_pd(b + t);
    const V va = _mm256_loadu_pd(a_sum + t);
    const V g = _mm256_sub_pd(_mm256_loadu_pd(cost + t), k.fcr_price);
    const V pu = _mm256_sub_pd(vb, _mm256_div_pd(g, k.rho_p));
    const V zu = _mm256_div_pd(va, k.m);

    const V z1 = clip(zu, zero, one);
    const V f1 = objective(k, g, vb, va, zero, z1);
    const V p2 = clip(pu, zero, k.cap);
    const V f2 = objective(k, g, vb, va, p2, one);
    const V num = _mm256_sub_pd(
        _mm256_add_pd(_mm256_mul_pd(k.cap_rho_p, vb), _mm256_mul_pd(k.rho_z, va)),
        _mm256_mul_pd(k.cap, g));
    const V z3 = clip(_mm256_div_pd(num, k.edge_den), zero, one);
    const V p3 = _mm256_mul_pd(k.cap, z3);
    const V f3 = objective(k, g, vb, va, p3, z3);

    V bp = zero, bz = z1, bf = f1;
    V m2 = lt(f2, bf);
    bp = sel(m2, p2, bp);
    bz = sel(m2, one, bz);
    bf = sel(m2, f2, bf);
    V m3 = lt(f3, bf);
    bp = sel(m3, p3, bp);
    bz = sel(m3, z3, bz);

    const V interior =
        _mm256_and_pd(_mm256_and_pd(ge(pu, zero), le(zu, one)), le(pu, _mm256_mul_pd(k.cap, zu)));
    _mm256_storeu_pd(p + t, sel(interior, pu, bp));
    _mm256_storeu_pd(z + t, sel(interior, zu, bz));
  }
  for (; t < n; ++t) detail::local_relaxed_step(ks, cost[t], b[t], a_sum[t], p[t], z[t]);
}

void local_integer(const double* cost, const double* b, const double* a_sum, std::size_t n,
                   const LocalParams& prm, double* p, double* z) {
  const detail::LocalConstants ks(prm);
  const VecConstants k(ks);
  const V zero = _mm256_setzero_pd();
  const V one = bc(1.0);
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const V vb = _mm256_loadu_pd(b + t);
    const V va = _mm256_loadu_pd(a_sum + t);
    const V g = _mm256_sub_pd(_mm256_loadu_pd(cost + t), k.fcr_price);
    const V p1 = clip(_mm256_sub_pd(vb, _mm256_div_pd(g, k.rho_p)), zero, k.cap);
    const V f1 = objective(k, g, vb, va, p1, one);
    const V f0 = objective(k, g, vb, va, zero, zero);
    const V on = lt(f1, f0);
    _mm256_storeu_pd(p + t, sel(on, p1, zero));
    _mm256_storeu_pd(z + t, sel(on, one, zero));
  }
  for (; t < n; ++t) detail::local_integer_step(ks, cost[t], b[t], a_sum[t], p[t], z[t]);
}

void warm_start(const double* cost, std::size_t n, double fcr_price, double power_cap,
                double* p, double* z) {
  const V price = bc(fcr_price);
  const V cap = bc(power_cap);
  const V zero = _mm256_setzero_pd();
  const V one = bc(1.0);
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const V on = lt(_mm256_loadu_pd(cost + t), price);
    _mm256_storeu_pd(p + t, sel(on, cap, zero));
    _mm256_storeu_pd(z + t, sel(on, one, zero));
  }
  for (; t < n; ++t) {
    const bool on = cost[t] < fcr_price;
    p[t] = on ? power_cap : 0.0;
    z[t] = on ? 1.0 : 0.0;
  }
}

constexpr KernelTable kAvx2Table{
    Isa::kAvx2,    add,           sub,           accumulate_diff, column_sums,
    add_row_broadcast, sum_squares, sum_squares_diff, local_relaxed, local_integer,
    warm_start,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2Table; }
}  // namespace detail

}  // namespace fcrpool::kernels
