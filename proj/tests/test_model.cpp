#include <doctest.h>

#include <cmath>
#include <random>

#include "fcrpool/lp.hpp"
#include "fcrpool/model.hpp"
#include "oracles.hpp"

using namespace fcrpool;

namespace {

CircleFamily family_of(std::vector<std::vector<AssetId>> sets) {
  std::vector<CircleSet> out;
  for (auto& m : sets) out.push_back({std::move(m), {0, 0}, 100});
  return CircleFamily(100, std::move(out));
}

std::vector<ConnectionPoint> line_points(std::size_t n, double spacing) {
  std::vector<ConnectionPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({static_cast<AssetId>(i), spacing * i, 0});
  return pts;
}

Scenario one_circle(std::size_t n, std::size_t T, double cost, double price) {
  auto pts = line_points(n, 1.0);
  auto fam = build_circle_family(pts, 100);
  return Scenario(pts, fam, Matrix(n, T, cost), price);
}

}  // namespace

TEST_CASE("objective worked examples") {
  const Scenario one(line_points(1, 0), family_of({{0}}), Matrix(1, 1, 0.2), 0.8);
  Solution sol = Solution::zeros(one);
  CHECK(objective_value(one, sol) == 0.0);
  sol.p(0, 0) = 5;
  sol.z(0, 0) = 1;
  sol.p_F = 5;
  CHECK(objective_value(one, sol) == doctest::Approx(-3.0));

  const Scenario two(line_points(2, 500), family_of({{0}, {1}}), Matrix(2, 2, 0.5), 0.8);
  Solution s2 = Solution::zeros(two);
  for (double& p : s2.p.flat()) p = 5;
  for (double& z : s2.z.flat()) z = 1;
  s2.p_F = 10;
  CHECK(objective_value(two, s2) == doctest::Approx(-6.0));

  Solution bad;
  bad.p = Matrix(3, 3);
  bad.z = Matrix(3, 3);
  CHECK_THROWS_AS(objective_value(two, bad), Error);
}

TEST_CASE("feasibility report") {
  const Scenario s = one_circle(11, 2, 0.0, 1.0);
  Solution sol = Solution::zeros(s);
  CHECK(check_feasible(s, sol).feasible());

  for (std::size_t i = 0; i < 11; ++i) {
    sol.z(i, 1) = 1;
    sol.p(i, 1) = 5;
  }
  for (std::size_t i = 0; i < 11; ++i) {
    sol.z(i, 0) = 1;
    sol.p(i, 0) = 5;
  }
  sol.p_F = 55;
  auto rep = check_feasible(s, sol);
  REQUIRE(rep.violations.size() == 2);
  for (const auto& v : rep.violations) {
    CHECK(v.kind == Violation::Kind::kCircleCap);
    CHECK(v.magnitude == doctest::Approx(1.0));
  }

  const Scenario lone(line_points(1, 0), family_of({{0}}), Matrix(1, 1, 0.0), 1.0);
  Solution over = Solution::zeros(lone);
  over.p(0, 0) = 6;
  over.z(0, 0) = 1;
  over.p_F = 6;
  rep = check_feasible(lone, over);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].kind == Violation::Kind::kPowerCap);
  CHECK(rep.violations[0].magnitude == doctest::Approx(1.0));

  Solution unbalanced = Solution::zeros(lone);
  unbalanced.p(0, 0) = 2;
  unbalanced.z(0, 0) = 1;
  unbalanced.p_F = 3;
  rep = check_feasible(lone, unbalanced);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].kind == Violation::Kind::kBalance);
}

TEST_CASE("exact solver worked examples") {
  const Scenario dear(line_points(1, 0), family_of({{0}}), Matrix(1, 1, 0.9), 0.8);
  auto r = solve_exact(dear);
  CHECK(r.solution.objective == 0.0);
  CHECK(r.solution.p_F == 0.0);

  Matrix c(2, 1);
  c(0, 0) = 0.1;
  c(1, 0) = 0.2;
  const Scenario pair(line_points(2, 1000), family_of({{0}, {1}}), c, 0.8);
  r = solve_exact(pair);
  CHECK(r.solution.p_F == doctest::Approx(10));
  CHECK(r.solution.objective == doctest::Approx(-6.5));
  CHECK(r.solution.objective == doctest::Approx(oracle::enumerate_optimum(pair)));

  const Scenario crowd = one_circle(11, 1, 0.0, 1.0);
  r = solve_exact(crowd);
  CHECK(r.solution.p_F == doctest::Approx(50));
  double active = 0;
  for (double z : r.solution.z.flat()) active += z;
  CHECK(active == 10);
  CHECK(check_feasible(crowd, r.solution).feasible());
}

TEST_CASE("exact solver equals enumeration on small random scenarios") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    const std::size_t T = std::max<std::size_t>(1, 16 / n > 3 ? 1 + rng() % 3 : 16 / n);
    const int cap = 1 + static_cast<int>(rng() % 3);
    const Scenario s = oracle::random_scenario(rng, n, T, 150, cap, 0.4 + 0.2 * (trial % 3));
    const auto r = solve_exact(s);
    CHECK(r.status == ExactStatus::kOptimal);
    CHECK(r.solution.objective == doctest::Approx(oracle::enumerate_optimum(s)).epsilon(1e-9));
    CHECK(check_feasible(s, r.solution).feasible());
    CHECK(lp_relaxation_objective(s) <= r.solution.objective + 1e-9);
  }
}

TEST_CASE("cheap power is never worth more than the price") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Scenario s = oracle::random_scenario(rng, 8, 3, 200, 10, 0.0);
    CHECK(solve_exact(s).solution.objective == 0.0);
  }
}

TEST_CASE("node budget exhaustion carries a partial result") {
  // Overlapping circles on a street grid make the packing fractional.
  std::vector<ConnectionPoint> pts;
  for (int i = 0; i < 81; ++i) pts.push_back({i, 40.0 * (i % 9), 40.0 * (i / 9)});
  auto fam = build_circle_family(pts, 100);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix cost(pts.size(), 2);
  for (double& c : cost.flat()) c = u(rng);
  const Scenario s(pts, fam, cost, 0.8, Caps{5.0, 3});
  ExactOptions opt;
  opt.node_limit = 1;
  bool thrown = false;
  try {
    solve_exact(s, opt);
  } catch (const BudgetExceededError& e) {
    thrown = true;
    CHECK(e.kind() == ErrorKind::kBudgetExceeded);
    CHECK(e.partial().status == ExactStatus::kBudgetExceeded);
    CHECK(e.partial().lower_bound <= e.partial().solution.objective);
    CHECK(check_feasible(s, e.partial().solution).feasible());
  }
  CHECK(thrown);
}

TEST_CASE("usable capacity") {
  const auto spread = line_points(5, 500);
  const std::vector<AssetId> all{0, 1, 2, 3, 4};
  auto r = max_usable_capacity(spread, build_circle_family(spread, 100), all);
  CHECK(r.capacity_kw == doctest::Approx(25));
  CHECK(r.usable_fraction == doctest::Approx(1.0));

  const auto dense = line_points(20, 5.0);
  std::vector<AssetId> twenty(20);
  for (std::size_t i = 0; i < 20; ++i) twenty[i] = static_cast<AssetId>(i);
  r = max_usable_capacity(dense, build_circle_family(dense, 100), twenty);
  CHECK(r.capacity_kw == doctest::Approx(50));
  CHECK(r.usable_fraction == doctest::Approx(0.5));

  // Circle A holds 0..11; circle B holds 8..11 plus 12..19.
  std::vector<AssetId> a_ids, b_ids;
  for (AssetId i = 0; i < 12; ++i) a_ids.push_back(i);
  for (AssetId i = 8; i < 20; ++i) b_ids.push_back(i);
  const auto fam = family_of({a_ids, b_ids});
  const auto pts = line_points(20, 1.0);
  r = max_usable_capacity(pts, fam, twenty);
  std::vector<std::vector<std::size_t>> circles{{}, {}};
  for (AssetId i : a_ids) circles[0].push_back(static_cast<std::size_t>(i));
  for (AssetId i : b_ids) circles[1].push_back(static_cast<std::size_t>(i));
  const auto best = oracle::enumerate_max_active(circles, 20, 10);
  CHECK(best == 18);
  CHECK(r.capacity_kw == doctest::Approx(5.0 * best));

  // Single circle: min(participants, cap) assets.
  for (std::size_t n : {3u, 10u, 14u}) {
    const auto p = line_points(n, 2.0);
    std::vector<AssetId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<AssetId>(i);
    CHECK(max_usable_capacity(p, build_circle_family(p, 100), ids).capacity_kw ==
          doctest::Approx(5.0 * std::min<std::size_t>(n, 10)));
  }
  CHECK_THROWS_AS(max_usable_capacity(pts, fam, std::vector<AssetId>{99}), Error);
}

TEST_CASE("Monte Carlo usable fraction") {
  const auto pts = line_points(40, 2.0);
  const auto full = monte_carlo_usable_fraction(pts, 1.0, 3, 5);
  CHECK(full.sample_size == 40);
  CHECK(full.mean_fraction == doctest::Approx(0.25));

  const auto single = monte_carlo_usable_fraction(pts, 1.0 / 40.0, 4, 9);
  CHECK(single.sample_size == 1);
  for (double f : single.fractions) CHECK(f == 1.0);

  const auto a = monte_carlo_usable_fraction(pts, 0.5, 4, 123);
  const auto b = monte_carlo_usable_fraction(pts, 0.5, 4, 123);
  CHECK(a.fractions == b.fractions);
  CHECK(a.capacities_kw == b.capacities_kw);

  CHECK_THROWS_AS(monte_carlo_usable_fraction(pts, 0.01, 1, 1), Error);
}

TEST_CASE("simplex on small programs") {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, box [0, 10]: optimum at (1.6, 1.2).
  lp::LinearProgram prog;
  prog.add_var(-1, 0, 10);
  prog.add_var(-1, 0, 10);
  prog.rows.push_back({{{0, 1.0}, {1, 2.0}}, lp::RowSense::kLessEqual, 4});
  prog.rows.push_back({{{0, 3.0}, {1, 1.0}}, lp::RowSense::kLessEqual, 6});
  auto r = lp::solve_lp(prog);
  REQUIRE(r.status == lp::LpStatus::kOptimal);
  CHECK(r.x[0] == doctest::Approx(1.6));
  CHECK(r.x[1] == doctest::Approx(1.2));
  CHECK(r.objective == doctest::Approx(-2.8));

  lp::LinearProgram infeasible;
  infeasible.add_var(1, 0, 1);
  infeasible.rows.push_back({{{0, 1.0}}, lp::RowSense::kEqual, 2});
  CHECK(lp::solve_lp(infeasible).status == lp::LpStatus::kInfeasible);

  lp::LinearProgram unbounded;
  unbounded.add_var(-1, 0, lp::kInfinity);
  CHECK(lp::solve_lp(unbounded).status == lp::LpStatus::kUnbounded);
}

TEST_CASE("binary branch and bound equals enumeration on knapsacks") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + rng() % 10;
    lp::LinearProgram prog;
    std::vector<double> w(n), v(n);
    lp::Row row;
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = u(rng);
      v[j] = u(rng);
      prog.add_var(-v[j], 0, 1);
      row.terms.emplace_back(j, w[j]);
    }
    row.rhs = 0.4 * static_cast<double>(n) * 0.55;
    prog.rows.push_back(row);
    std::vector<std::size_t> binary(n);
    for (std::size_t j = 0; j < n; ++j) binary[j] = j;
    const auto res = lp::solve_binary(prog, binary);
    double best = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      double wt = 0, val = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) {
          wt += w[j];
          val += v[j];
        }
      }
      if (wt <= row.rhs) best = std::max(best, val);
    }
    REQUIRE(res.status == lp::BnbStatus::kOptimal);
    CHECK(-res.objective == doctest::Approx(best).epsilon(1e-9));
    CHECK(res.root_bound <= res.objective + 1e-9);
  }
}
