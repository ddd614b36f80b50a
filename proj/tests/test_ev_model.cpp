#include <doctest.h>

#include "oracles.hpp"
#include "rlbd/ev_model.hpp"

using namespace rlbd;

namespace {

bool all_in(const Vec& v, double lo, double hi) {
  return (v.array() >= lo).all() && (v.array() <= hi).all();
}

// Eq-style recourse built straight from the instance tables (capacity rows as
// plain <=), an independent compilation path to check ev_to_standard_form
LinearProgram direct_recourse_lp(const EvInstance& ev, Index w, const Vec& z) {
  const int I = ev.n_stations, J = ev.n_sites;
  LinearProgram lp = make_lp(J + I, static_cast<Index>(I) * J + J);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) lp.objective[i * J + j] = ev.transport_cost(i, j);
  lp.objective.tail(J) = ev.penalty;
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < I; ++i) lp.constraint_matrix(j, i * J + j) = 1.0;
    lp.constraint_matrix(j, static_cast<Index>(I) * J + j) = 1.0;
    lp.senses[static_cast<std::size_t>(j)] = Sense::Equal;
    lp.rhs[j] = ev.demands(w, j);
  }
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) lp.constraint_matrix(J + i, i * J + j) = 1.0;
    lp.senses[static_cast<std::size_t>(J + i)] = Sense::LessEqual;
    lp.rhs[J + i] = ev.charger_capacity[i] * z[i];
  }
  return lp;
}

// With generous capacity every vertex assigns each site wholly to one station
// or to the penalty column; enumerate the 3^J corners
double ample_capacity_oracle(const EvInstance& ev, Index w) {
  const int J = ev.n_sites;
  double best = kInf;
  std::vector<int> pick(static_cast<std::size_t>(J), 0);  // 0..I-1 station, I = unmet
  const int options = ev.n_stations + 1;
  while (true) {
    double cost = 0.0;
    for (int j = 0; j < J; ++j) {
      const double d = ev.demands(w, j);
      cost += (pick[static_cast<std::size_t>(j)] < ev.n_stations)
                  ? ev.transport_cost(pick[static_cast<std::size_t>(j)], j) * d
                  : ev.penalty[j] * d;
    }
    best = std::min(best, cost);
    int j = 0;
    for (; j < J; ++j) {
      if (++pick[static_cast<std::size_t>(j)] < options) break;
      pick[static_cast<std::size_t>(j)] = 0;
    }
    if (j == J) break;
  }
  return best - ev.revenue.dot(ev.demands.row(w).transpose());
}

}  // namespace

TEST_CASE("generated parameters land inside their ranges and dims are right") {
  EvInstance ev = generate_ev_instance(17, 8, 12);
  CHECK(all_in(ev.open_cost, 80.0, 300.0));
  CHECK(all_in(ev.charger_cost, 5.0, 40.0));
  CHECK(all_in(ev.penalty, 30.0, 120.0));
  CHECK(all_in(ev.revenue, 5.0, 60.0));
  CHECK(all_in(ev.charger_capacity, 40.0, 120.0));
  CHECK(all_in(ev.max_chargers, 10.0, 80.0));
  CHECK(all_in(ev.demand_mean, 20.0, 100.0));
  CHECK((ev.demand_std - 0.1 * ev.demand_mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ev.transport_cost.array() >= 1.0).all());
  CHECK((ev.transport_cost.array() <= 80.0).all());

  attach_scenarios(ev, generate_demand_scenarios(5, ev, 3, DemandShape::Normal),
                   DemandShape::Normal);
  TwoStageProblem p = ev_to_standard_form(ev);
  CHECK(p.n1() == 16);
  CHECK(p.n2() == 108);
  CHECK(p.stage2_rows() == 20);
  CHECK(p.integer_vars.size() == 16);
  CHECK(p.scenarios.size() == 3);
}

TEST_CASE("instance generation is reproducible and seed-sensitive") {
  EvInstance a = generate_ev_instance(99, 4, 6);
  EvInstance b = generate_ev_instance(99, 4, 6);
  EvInstance c = generate_ev_instance(100, 4, 6);
  CHECK(a.open_cost == b.open_cost);
  CHECK(a.transport_cost == b.transport_cost);
  CHECK(a.demand_mean == b.demand_mean);
  CHECK(a.open_cost != c.open_cost);
}

TEST_CASE("normal demand scenarios track mu within Monte Carlo error") {
  EvInstance ev = generate_ev_instance(7, 4, 6);
  Mat d = generate_demand_scenarios(11, ev, 100, DemandShape::Normal);
  REQUIRE(d.rows() == 100);
  CHECK((d.array() >= 0.0).all());
  for (int j = 0; j < ev.n_sites; ++j) {
    const double mean = d.col(j).mean();
    CHECK(std::abs(mean - ev.demand_mean[j]) <= 3.0 * ev.demand_std[j] / 10.0);
  }
}

TEST_CASE("zero sigma pins demand to mu exactly") {
  EvInstance ev = generate_ev_instance(3, 2, 3);
  ev.demand_std.setZero();
  Mat d = generate_demand_scenarios(21, ev, 5, DemandShape::Normal);
  for (int w = 0; w < 5; ++w)
    for (int j = 0; j < 3; ++j) CHECK(d(w, j) == ev.demand_mean[j]);
}

TEST_CASE("skewed shapes produce the advertised skew sign and matched moments") {
  EvInstance ev = generate_ev_instance(13, 1, 1);
  const int n = 100000;
  for (DemandShape shape : {DemandShape::RightSkewed, DemandShape::LeftSkewed}) {
    Mat d = generate_demand_scenarios(31, ev, n, shape);
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) xs[static_cast<std::size_t>(w)] = d(w, 0);
    const double skew = oracle::sample_skewness(xs);
    if (shape == DemandShape::RightSkewed) CHECK(skew > 0.3);
    else CHECK(skew < -0.3);
    const double mean = d.col(0).mean();
    const double sd = std::sqrt((d.col(0).array() - mean).square().sum() / (n - 1));
    CHECK(std::abs(mean - ev.demand_mean[0]) <= 4.0 * ev.demand_std[0] / std::sqrt(1.0 * n));
    CHECK(std::abs(sd - ev.demand_std[0]) <= 0.02 * ev.demand_std[0]);
  }
}

TEST_CASE("zero chargers force full penalty recourse") {
  EvInstance ev = generate_ev_instance(23, 3, 4);
  attach_scenarios(ev, generate_demand_scenarios(2, ev, 1, DemandShape::Normal),
                   DemandShape::Normal);
  TwoStageProblem p = ev_to_standard_form(ev);
  Vec x = Vec::Zero(p.n1());
  x.head(3).setOnes();  // stations open but no chargers installed
  auto r = solve_recourse(p, 0, x);
  const double expect = (ev.penalty - ev.revenue).dot(ev.demands.row(0).transpose());
  CHECK(r.value == doctest::Approx(expect).epsilon(1e-10));

  // demand-row duals degenerate to the penalty coefficients
  for (int j = 0; j < 4; ++j) CHECK(r.duals[j] == doctest::Approx(ev.penalty[j]).epsilon(1e-10));
}

TEST_CASE("single pair with ample capacity ships everything at transport cost") {
  EvInstance ev = generate_ev_instance(29, 1, 1);
  ev.transport_cost(0, 0) = 4.0;
  ev.penalty[0] = 50.0;
  attach_scenarios(ev, generate_demand_scenarios(3, ev, 1, DemandShape::Normal),
                   DemandShape::Normal);
  TwoStageProblem p = ev_to_standard_form(ev);
  Vec x(2);
  const double d = ev.demands(0, 0);
  const double z = std::ceil(d / ev.charger_capacity[0]) + 1.0;
  x << 1.0, z;
  auto r = solve_recourse(p, 0, x);
  CHECK(r.value == doctest::Approx((4.0 - ev.revenue[0]) * d).epsilon(1e-10));
}

TEST_CASE("2x2 ample-capacity recourse matches corner enumeration") {
  EvInstance ev = generate_ev_instance(37, 2, 2);
  attach_scenarios(ev, generate_demand_scenarios(41, ev, 2, DemandShape::Normal),
                   DemandShape::Normal);
  TwoStageProblem p = ev_to_standard_form(ev);
  Vec x(4);
  x << 1.0, 1.0, 50.0, 50.0;  // far beyond any demand here
  for (Index w = 0; w < 2; ++w) {
    auto r = solve_recourse(p, w, x);
    CHECK(r.value == doctest::Approx(ample_capacity_oracle(ev, w)).epsilon(1e-9));
  }
}

TEST_CASE("compiled standard form equals the directly built recourse LP") {
  EvInstance ev = generate_ev_instance(43, 3, 4);
  attach_scenarios(ev, generate_demand_scenarios(47, ev, 3, DemandShape::RightSkewed),
                   DemandShape::RightSkewed);
  TwoStageProblem p = ev_to_standard_form(ev);
  CounterRng rng(53);
  for (int rep = 0; rep < 5; ++rep) {
    Vec y(3), z(3);
    for (int i = 0; i < 3; ++i) {
      y[i] = (rng.uniform() < 0.5) ? 1.0 : 0.0;
      z[i] = y[i] * std::floor(rng.uniform(0.0, ev.max_chargers[i]));
    }
    Vec x(6);
    x << y, z;
    for (Index w = 0; w < 3; ++w) {
      auto compiled = solve_recourse(p, w, x);
      auto direct = solve_lp(direct_recourse_lp(ev, w, z));
      REQUIRE(direct.status == LpStatus::Optimal);
      const double expect =
          direct.objective + p.scenarios[static_cast<std::size_t>(w)].constant_offset;
      CHECK(std::abs(compiled.value - expect) <= 1e-9 * (1.0 + std::abs(expect)));
    }
  }
}

TEST_CASE("scenario offsets and probabilities are wired as documented") {
  EvInstance ev = generate_ev_instance(61, 2, 3);
  attach_scenarios(ev, generate_demand_scenarios(67, ev, 4, DemandShape::Normal),
                   DemandShape::Normal);
  TwoStageProblem p = ev_to_standard_form(ev);
  double psum = 0.0;
  for (Index w = 0; w < 4; ++w) {
    const auto& s = p.scenarios[static_cast<std::size_t>(w)];
    psum += s.probability;
    CHECK(s.probability == doctest::Approx(0.25));
    CHECK(s.constant_offset ==
          doctest::Approx(-ev.revenue.dot(ev.demands.row(w).transpose())));
  }
  CHECK(psum == doctest::Approx(1.0));
}
