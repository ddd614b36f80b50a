#include "rlbd/ev_model.hpp"

#include <cmath>

namespace rlbd {

std::string to_string(DemandShape s) {
  switch (s) {
    case DemandShape::Normal: return "normal";
    case DemandShape::LeftSkewed: return "left";
    case DemandShape::RightSkewed: return "right";
  }
  return "normal";
}

DemandShape demand_shape_from_string(const std::string& s) {
  if (s == "normal") return DemandShape::Normal;
  if (s == "left") return DemandShape::LeftSkewed;
  if (s == "right") return DemandShape::RightSkewed;
  throw std::invalid_argument("unknown demand shape: " + s);
}

EvInstance generate_ev_instance(std::uint64_t seed, int n_stations, int n_sites) {
  if (n_stations <= 0 || n_sites <= 0)
    throw std::invalid_argument("ev: station and site counts must be positive");
  EvInstance inst;
  inst.n_stations = n_stations;
  inst.n_sites = n_sites;
  inst.seed = seed;
  CounterRng rng(seed);

  auto draw_vec = [&](int n, double lo, double hi) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = rng.uniform(lo, hi);
    return v;
  };
  inst.open_cost = draw_vec(n_stations, 80.0, 300.0);
  inst.charger_cost = draw_vec(n_stations, 5.0, 40.0);
  inst.transport_cost = Mat(n_stations, n_sites);
  for (int i = 0; i < n_stations; ++i)
    for (int j = 0; j < n_sites; ++j) inst.transport_cost(i, j) = rng.uniform(1.0, 80.0);
  inst.penalty = draw_vec(n_sites, 30.0, 120.0);
  inst.revenue = draw_vec(n_sites, 5.0, 60.0);
  inst.charger_capacity = draw_vec(n_stations, 40.0, 120.0);
  inst.max_chargers = draw_vec(n_stations, 10.0, 80.0);
  inst.demand_mean = draw_vec(n_sites, 20.0, 100.0);
  inst.demand_std = 0.1 * inst.demand_mean;
  return inst;
}

Mat generate_demand_scenarios(std::uint64_t seed, const EvInstance& inst, int n_scenarios,
                              DemandShape shape) {
  if (n_scenarios <= 0) throw std::invalid_argument("ev: need at least one scenario");
  CounterRng rng(seed);
  Mat d(n_scenarios, inst.n_sites);

  // skew-normal with shape a: Z = delta|U0| + sqrt(1-delta^2) U1, then
  // standardized so the output hits (mu, sigma) exactly
  const double a = (shape == DemandShape::LeftSkewed) ? -4.0 : 4.0;
  const double delta = a / std::sqrt(1.0 + a * a);
  const double zmean = delta * std::sqrt(2.0 / 3.14159265358979323846);
  const double zstd = std::sqrt(1.0 - zmean * zmean);

  for (int w = 0; w < n_scenarios; ++w) {
    for (int j = 0; j < inst.n_sites; ++j) {
      double standard;
      if (shape == DemandShape::Normal) {
        standard = rng.normal();
      } else {
        const double u0 = rng.normal();
        const double u1 = rng.normal();
        const double z = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
        standard = (z - zmean) / zstd;
      }
      d(w, j) = std::max(0.0, inst.demand_mean[j] + inst.demand_std[j] * standard);
    }
  }
  return d;
}

void attach_scenarios(EvInstance& inst, const Mat& demands, DemandShape shape) {
  if (demands.cols() != inst.n_sites)
    throw std::invalid_argument("ev: demand block width != n_sites");
  if (demands.rows() <= 0) throw std::invalid_argument("ev: empty demand block");
  inst.demands = demands;
  inst.scenario_shape = shape;
  inst.probabilities = Vec::Constant(demands.rows(), 1.0 / static_cast<double>(demands.rows()));
}

TwoStageProblem ev_to_standard_form(const EvInstance& inst) {
  const int I = inst.n_stations;
  const int J = inst.n_sites;
  const Index S = inst.demands.rows();
  if (S <= 0) throw std::invalid_argument("ev: instance has no attached scenarios");

  TwoStageProblem p;
  const Index n1 = 2 * I;
  p.first_stage_cost = Vec(n1);
  p.first_stage_cost.head(I) = inst.open_cost;
  p.first_stage_cost.tail(I) = inst.charger_cost;
  p.x_lower = Vec::Zero(n1);
  p.x_upper = Vec(n1);
  p.x_upper.head(I).setOnes();
  p.x_upper.tail(I) = inst.max_chargers;
  for (Index j = 0; j < n1; ++j) p.integer_vars.push_back(j);

  // z_i - M_i y_i <= 0
  p.first_stage_matrix = Mat::Zero(I, n1);
  p.first_stage_rhs = Vec::Zero(I);
  p.first_stage_senses.assign(static_cast<std::size_t>(I), Sense::LessEqual);
  for (int i = 0; i < I; ++i) {
    p.first_stage_matrix(i, i) = -inst.max_chargers[i];
    p.first_stage_matrix(i, I + i) = 1.0;
  }

  // stage 2: columns x_ij (i-major) then u_j; rows: J demand '=' then I capacity '>='
  const Index n2 = static_cast<Index>(I) * J + J;
  const Index rows = J + I;
  p.stage2_senses.assign(static_cast<std::size_t>(J), Sense::Equal);
  p.stage2_senses.resize(static_cast<std::size_t>(rows), Sense::GreaterEqual);

  Mat W = Mat::Zero(rows, n2);
  Mat T = Mat::Zero(rows, n1);
  Vec q(n2);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) q[i * J + j] = inst.transport_cost(i, j);
  q.tail(J) = inst.penalty;
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < I; ++i) W(j, i * J + j) = 1.0;
    W(j, static_cast<Index>(I) * J + j) = 1.0;
  }
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) W(J + i, i * J + j) = -1.0;  // -Sum_j x_ij >= -C_i z_i
    T(J + i, I + i) = inst.charger_capacity[i];
  }

  p.scenarios.reserve(static_cast<std::size_t>(S));
  for (Index w = 0; w < S; ++w) {
    Scenario s;
    s.W = W;
    s.T = T;
    s.q = q;
    s.h = Vec::Zero(rows);
    s.h.head(J) = inst.demands.row(w).transpose();
    s.probability = inst.probabilities[w];
    s.constant_offset = -inst.revenue.dot(inst.demands.row(w).transpose());
    p.scenarios.push_back(std::move(s));
  }
  p.validate();
  return p;
}

}  // namespace rlbd
