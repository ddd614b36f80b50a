#include <doctest.h>

#include "oracles.hpp"
#include "rlbd/mip.hpp"
#include "rlbd/rng.hpp"

using namespace rlbd;

namespace {

MixedIntegerProgram random_small_mip(CounterRng& rng, Index rows, Index cols, Index n_int) {
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(rows, cols);
  LinearProgram& lp = mip.relaxation;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) lp.constraint_matrix(i, j) = rng.uniform(-4.0, 4.0);
    lp.rhs[i] = rng.uniform(-6.0, 6.0);
    lp.senses[static_cast<std::size_t>(i)] =
        rng.uniform() < 0.5 ? Sense::LessEqual : Sense::GreaterEqual;
  }
  for (Index j = 0; j < cols; ++j) {
    lp.objective[j] = rng.uniform(-5.0, 5.0);
    if (j < n_int) {
      const double lo = std::floor(rng.uniform(-2.0, 1.0));
      lp.var_lower[j] = lo;
      lp.var_upper[j] = lo + 3.0;  // domain of size 4
      mip.integer_vars.push_back(j);
    } else {
      lp.var_lower[j] = -3.0;
      lp.var_upper[j] = 3.0;
    }
  }
  return mip;
}

}  // namespace

TEST_CASE("binary toggle: maximize 2x+3y with x+y<=1 picks y") {
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(1, 2);
  mip.relaxation.objective << -2.0, -3.0;  // maximize via negated minimize
  mip.relaxation.constraint_matrix.row(0) << 1.0, 1.0;
  mip.relaxation.rhs[0] = 1.0;
  mip.relaxation.var_upper << 1.0, 1.0;
  mip.integer_vars = {0, 1};
  auto sol = solve_mip(mip);
  REQUIRE(sol.status == MipStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-3.0));
  CHECK(sol.primal[0] == doctest::Approx(0.0));
  CHECK(sol.primal[1] == doctest::Approx(1.0));
  CHECK(std::abs(sol.objective - sol.best_bound) <= 1e-7 * (1.0 + std::abs(sol.objective)));
}

TEST_CASE("integrality can make a feasible relaxation infeasible") {
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(1, 1);
  mip.relaxation.objective << 1.0;
  mip.relaxation.constraint_matrix(0, 0) = 2.0;
  mip.relaxation.senses[0] = Sense::Equal;
  mip.relaxation.rhs[0] = 3.0;
  mip.relaxation.var_upper[0] = 3.0;
  mip.integer_vars = {0};
  CHECK(solve_mip(mip).status == MipStatus::Infeasible);
}

TEST_CASE("fractional bounds on an integer variable shrink to the grid") {
  // maximize x over integer x in [0, 15.179]; branching above 15 must not
  // manufacture an empty box
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(0, 1);
  mip.relaxation.objective << -1.0;
  mip.relaxation.var_upper << 15.179;
  mip.integer_vars = {0};
  auto sol = solve_mip(mip);
  REQUIRE(sol.status == MipStatus::Optimal);
  CHECK(sol.primal[0] == doctest::Approx(15.0));
  CHECK(sol.objective == doctest::Approx(-15.0));
}

TEST_CASE("integer box holding no grid point is infeasible") {
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(0, 1);
  mip.relaxation.objective << 1.0;
  mip.relaxation.var_lower << 2.2;
  mip.relaxation.var_upper << 2.9;
  mip.integer_vars = {0};
  CHECK(solve_mip(mip).status == MipStatus::Infeasible);
}

TEST_CASE("node limit truncates the search but keeps bounds honest") {
  MixedIntegerProgram mip;
  MipSolution full;
  for (std::uint64_t draw = 0; draw < 64; ++draw) {  // find one that branches
    CounterRng rng(1234 + draw);
    MixedIntegerProgram m = random_small_mip(rng, 4, 8, 6);
    MipSolution s = solve_mip(m);
    if (s.status == MipStatus::Optimal && s.nodes_explored > 2) {
      mip = m;
      full = s;
      break;
    }
  }
  REQUIRE(full.status == MipStatus::Optimal);
  REQUIRE(full.nodes_explored > 2);

  MipSolution capped = solve_mip(mip, kInf, 0.0, {}, 2);
  CHECK(capped.status == MipStatus::TimeLimit);
  CHECK(capped.nodes_explored == 2);
  CHECK(capped.best_bound <= full.objective + 1e-9 * (1.0 + std::abs(full.objective)));
  if (capped.has_incumbent()) CHECK(capped.objective >= full.objective - 1e-9);

  // a cap the tree never reaches changes nothing
  MipSolution loose = solve_mip(mip, kInf, 0.0, {}, full.nodes_explored + 1);
  CHECK(loose.status == MipStatus::Optimal);
  CHECK(loose.objective == full.objective);
}

TEST_CASE("integer variables must carry finite bounds") {
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(0, 1);
  mip.relaxation.objective << 1.0;
  mip.integer_vars = {0};  // upper bound is +inf
  CHECK_THROWS_AS(solve_mip(mip), std::invalid_argument);
}

TEST_CASE("integral root solves in one node") {
  MixedIntegerProgram mip;
  mip.relaxation = make_lp(0, 2);
  mip.relaxation.objective << 1.0, 2.0;
  mip.relaxation.var_upper << 5.0, 5.0;
  mip.integer_vars = {0, 1};
  auto sol = solve_mip(mip);
  REQUIRE(sol.status == MipStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(0.0));
  CHECK(sol.nodes_explored == 1);
}

TEST_CASE("25 random mixed problems match exhaustive lattice enumeration") {
  CounterRng rng(314159);
  int feasible_seen = 0, infeasible_seen = 0;
  for (int k = 0; k < 25; ++k) {
    CAPTURE(k);
    MixedIntegerProgram mip = random_small_mip(rng, 3, 5, 3);
    auto expect = oracle::mip_enumeration_oracle(mip);
    auto sol = solve_mip(mip);
    if (!expect.feasible) {
      ++infeasible_seen;
      CHECK(sol.status == MipStatus::Infeasible);
      continue;
    }
    ++feasible_seen;
    REQUIRE(sol.status == MipStatus::Optimal);
    CHECK(std::abs(sol.objective - expect.objective) <=
          1e-7 * (1.0 + std::abs(expect.objective)));
    for (Index j : mip.integer_vars)
      CHECK(std::abs(sol.primal[j] - std::round(sol.primal[j])) <= 1e-9);
  }
  CHECK(feasible_seen >= 10);
  CHECK(infeasible_seen >= 1);
}

TEST_CASE("global bound reported to the observer never decreases") {
  CounterRng rng(2718);
  MixedIntegerProgram mip = random_small_mip(rng, 3, 6, 4);
  double last = -kInf;
  bool monotone = true;
  auto sol = solve_mip(mip, kInf, 0.0, {}, 0, [&](long, double lb, double) {
    if (std::isfinite(lb) && lb < last - 1e-12) monotone = false;
    if (std::isfinite(lb)) last = std::max(last, lb);
  });
  CHECK(monotone);
  if (sol.status == MipStatus::Optimal)
    CHECK(sol.best_bound <= sol.objective + 1e-7 * (1.0 + std::abs(sol.objective)));
}

TEST_CASE("zero time limit reports TimeLimit without an incumbent") {
  CounterRng rng(55);
  MixedIntegerProgram mip = random_small_mip(rng, 2, 4, 2);
  auto sol = solve_mip(mip, 0.0);
  CHECK(sol.status == MipStatus::TimeLimit);
  CHECK(!sol.has_incumbent());
  CHECK(sol.objective == kInf);
}

TEST_CASE("tree exploration is deterministic") {
  CounterRng rng(808);
  MixedIntegerProgram mip = random_small_mip(rng, 3, 5, 3);
  auto a = solve_mip(mip);
  auto b = solve_mip(mip);
  CHECK(a.nodes_explored == b.nodes_explored);
  CHECK(a.lp_iterations == b.lp_iterations);
  REQUIRE(a.status == b.status);
  if (a.status == MipStatus::Optimal) CHECK(a.objective == b.objective);
}
