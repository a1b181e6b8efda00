#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>
#include <vector>

#include "fcrpool/kernels.hpp"

using namespace fcrpool::kernels;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

std::vector<double> noise(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Values that land exactly on the case boundaries of the local solve.
std::vector<double> with_edges(std::mt19937_64& rng, std::size_t n, const std::vector<double>& edges,
                               double lo, double hi) {
  auto v = noise(rng, n, lo, hi);
  for (std::size_t i = 0; i < n; i += 3) v[i] = edges[(i / 3) % edges.size()];
  return v;
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(isa_available(Isa::kScalar));
  CHECK(kernels_for(Isa::kScalar).isa == Isa::kScalar);
  CHECK(to_string(Isa::kScalar) == "scalar");
}

TEST_CASE("scalar reductions use the documented order") {
  const std::vector<double> x{1e16, 1.0, -1e16, 1.0, 3.0};
  // ((x0^2 + x4^2) + x1^2) + (x2^2 + x3^2): lanes 0..3 then the tail.
  const double want = ((1e32 + 1.0) + (1e32 + 1.0)) + 9.0;
  CHECK(same_bits(scalar_kernels().sum_squares(x.data(), 4) + 9.0, want));
  std::vector<double> m{1, 2, 3, 4, 5, 6};
  std::vector<double> out(3);
  scalar_kernels().column_sums(m.data(), 2, 3, out.data());
  CHECK(out == std::vector<double>{5, 7, 9});
}

TEST_CASE("SIMD kernels reproduce the scalar reference bit for bit") {
  if (!isa_available(Isa::kAvx2)) {
    MESSAGE("AVX2 not available on this machine; equivalence not exercised");
    return;
  }
  const KernelTable& ref = kernels_for(Isa::kScalar);
  const KernelTable& simd = kernels_for(Isa::kAvx2);
  CHECK(simd.isa == Isa::kAvx2);
  std::mt19937_64 rng(99);

  for (std::size_t n = 0; n <= 41; ++n) {
    const auto a = noise(rng, n, -3, 3), b = noise(rng, n, -3, 3);
    std::vector<double> r1(n), r2(n);
    ref.add(a.data(), b.data(), r1.data(), n);
    simd.add(a.data(), b.data(), r2.data(), n);
    CHECK(same_bits(r1, r2));
    ref.sub(a.data(), b.data(), r1.data(), n);
    simd.sub(a.data(), b.data(), r2.data(), n);
    CHECK(same_bits(r1, r2));
    auto acc1 = noise(rng, n, -1, 1);
    auto acc2 = acc1;
    ref.accumulate_diff(a.data(), b.data(), acc1.data(), n);
    simd.accumulate_diff(a.data(), b.data(), acc2.data(), n);
    CHECK(same_bits(acc1, acc2));
    CHECK(same_bits(ref.sum_squares(a.data(), n), simd.sum_squares(a.data(), n)));
    CHECK(same_bits(ref.sum_squares_diff(a.data(), b.data(), n),
                    simd.sum_squares_diff(a.data(), b.data(), n)));

    for (std::size_t rows : {1u, 3u, 8u}) {
      const auto m = noise(rng, rows * n, -5, 5);
      std::vector<double> c1(n), c2(n);
      ref.column_sums(m.data(), rows, n, c1.data());
      simd.column_sums(m.data(), rows, n, c2.data());
      CHECK(same_bits(c1, c2));
      const auto delta = noise(rng, n, -1, 1);
      std::vector<double> o1(rows * n), o2(rows * n);
      ref.add_row_broadcast(m.data(), delta.data(), rows, n, o1.data());
      simd.add_row_broadcast(m.data(), delta.data(), rows, n, o2.data());
      CHECK(same_bits(o1, o2));
    }

    for (int variant = 0; variant < 6; ++variant) {
      LocalParams prm;
      prm.fcr_price = 0.8;
      prm.power_cap = 5.0;
      prm.rho_power = variant % 3 == 0 ? 0.25 : (variant % 3 == 1 ? 1.0 : 3.5);
      prm.rho_activation = variant < 3 ? 0.3 : 2.0;
      prm.circle_count = static_cast<double>(1 + variant % 4);
      const auto cost = with_edges(rng, n, {0.8, 0.0, 1.0}, 0.0, 1.0);
      const auto bt = with_edges(rng, n, {0.0, 5.0, -0.5}, -2.0, 7.0);
      const auto at = with_edges(rng, n, {0.0, prm.circle_count, 0.5 * prm.circle_count}, -1.0,
                                 prm.circle_count + 1.0);
      std::vector<double> p1(n), z1(n), p2(n), z2(n);
      ref.local_relaxed(cost.data(), bt.data(), at.data(), n, prm, p1.data(), z1.data());
      simd.local_relaxed(cost.data(), bt.data(), at.data(), n, prm, p2.data(), z2.data());
      CHECK(same_bits(p1, p2));
      CHECK(same_bits(z1, z2));
      ref.local_integer(cost.data(), bt.data(), at.data(), n, prm, p1.data(), z1.data());
      simd.local_integer(cost.data(), bt.data(), at.data(), n, prm, p2.data(), z2.data());
      CHECK(same_bits(p1, p2));
      CHECK(same_bits(z1, z2));
      ref.warm_start(cost.data(), n, prm.fcr_price, prm.power_cap, p1.data(), z1.data());
      simd.warm_start(cost.data(), n, prm.fcr_price, prm.power_cap, p2.data(), z2.data());
      CHECK(same_bits(p1, p2));
      CHECK(same_bits(z1, z2));
    }
  }
}

TEST_CASE("warm start is bang-bang with ties inactive") {
  const std::vector<double> cost{0.2, 0.8, 0.9, 0.7999999999, 0.0};
  std::vector<double> p(5), z(5);
  scalar_kernels().warm_start(cost.data(), 5, 0.8, 5.0, p.data(), z.data());
  CHECK(p == std::vector<double>{5, 0, 0, 5, 5});
  CHECK(z == std::vector<double>{1, 0, 0, 1, 1});
}
