#pragma once

// Per-element bodies of the local subproblem kernels. The AVX2 file mirrors
// these expression by expression; keep the two in sync.

#include "fcrpool/kernels.hpp"

namespace fcrpool::kernels::detail {

struct LocalConstants {
  explicit LocalConstants(const LocalParams& prm)
      : fcr_price(prm.fcr_price),
        cap(prm.power_cap),
        rho_p(prm.rho_power),
        rho_z(prm.rho_activation),
        m(prm.circle_count),
        half_p(0.5 * prm.rho_power),
        half_z(0.5 * prm.rho_activation),
        cap_rho_p(prm.power_cap * prm.rho_power),
        edge_den(prm.power_cap * prm.power_cap * prm.rho_power +
                 prm.rho_activation * prm.circle_count) {}

  double fcr_price, cap, rho_p, rho_z, m;
  double half_p, half_z, cap_rho_p, edge_den;
};

inline double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

inline double local_objective(const LocalConstants& k, double g, double b, double a, double p,
                              double z) {
  const double dp = p - b;
  return g * p + k.half_p * (dp * dp) + k.half_z * (k.m * (z * z) - 2.0 * (z * a));
}

inline void local_relaxed_step(const LocalConstants& k, double cost, double b, double a,
                               double& p_out, double& z_out) {
  const double g = cost - k.fcr_price;
  const double pu = b - g / k.rho_p;
  const double zu = a / k.m;

  // p = 0 edge
  const double z1 = clip(zu, 0.0, 1.0);
  const double f1 = local_objective(k, g, b, a, 0.0, z1);
  // z = 1 edge
  const double p2 = clip(pu, 0.0, k.cap);
  const double f2 = local_objective(k, g, b, a, p2, 1.0);
  // p = cap z edge
  const double z3 = clip((k.cap_rho_p * b + k.rho_z * a - k.cap * g) / k.edge_den, 0.0, 1.0);
  const double p3 = k.cap * z3;
  const double f3 = local_objective(k, g, b, a, p3, z3);

  double bp = 0.0, bz = z1, bf = f1;
  if (f2 < bf) { bp = p2; bz = 1.0; bf = f2; }
  if (f3 < bf) { bp = p3; bz = z3; bf = f3; }

  const bool interior = (pu >= 0.0) && (zu <= 1.0) && (pu <= k.cap * zu);
  p_out = interior ? pu : bp;
  z_out = interior ? zu : bz;
}

inline void local_integer_step(const LocalConstants& k, double cost, double b, double a,
                               double& p_out, double& z_out) {
  const double g = cost - k.fcr_price;
  const double p1 = clip(b - g / k.rho_p, 0.0, k.cap);
  const double f1 = local_objective(k, g, b, a, p1, 1.0);
  const double f0 = local_objective(k, g, b, a, 0.0, 0.0);
  const bool on = f1 < f0;
  p_out = on ? p1 : 0.0;
  z_out = on ? 1.0 : 0.0;
}

}  // namespace fcrpool::kernels::detail
