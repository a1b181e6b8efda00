#include "fcrpool/kernels.hpp"
#include "kernel_math.hpp"

namespace fcrpool::kernels {
namespace {

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void accumulate_diff(const double* a, const double* b, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] - b[i];
}

void column_sums(const double* m, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
  }
}

void add_row_broadcast(const double* v, const double* delta, std::size_t rows, std::size_t cols,
                       double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = v[r * cols + c] + delta[c];
  }
}

double sum_squares(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) acc[k] += x[i + k] * x[i + k];
  }
  double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = body; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_squares_diff(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = n - n % 4;
  for (std::size_t i = 0; i < body; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = a[i + k] - b[i + k];
      acc[k] += d * d;
    }
  }
  double s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = body; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void local_relaxed(const double* cost, const double* b, const double* a_sum, std::size_t n,
                   const LocalParams& prm, double* p, double* z) {
  const detail::LocalConstants k(prm);
  for (std::size_t t = 0; t < n; ++t) {
    detail::local_relaxed_step(k, cost[t], b[t], a_sum[t], p[t], z[t]);
  }
}

void local_integer(const double* cost, const double* b, const double* a_sum, std::size_t n,
                   const LocalParams& prm, double* p, double* z) {
  const detail::LocalConstants k(prm);
  for (std::size_t t = 0; t < n; ++t) {
    detail::local_integer_step(k, cost[t], b[t], a_sum[t], p[t], z[t]);
  }
}

void warm_start(const double* cost, std::size_t n, double fcr_price, double power_cap,
                double* p, double* z) {
  for (std::size_t t = 0; t < n; ++t) {
    const bool on = cost[t] < fcr_price;
    p[t] = on ? power_cap : 0.0;
    z[t] = on ? 1.0 : 0.0;
  }
}

constexpr KernelTable kScalarTable{
    Isa::kScalar,  add,           sub,           accumulate_diff, column_sums,
    add_row_broadcast, sum_squares, sum_squares_diff, local_relaxed, local_integer,
    warm_start,
};

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

}  // namespace fcrpool::kernels
