#pragma once

#include <string>

#include "rlbd/rng.hpp"
#include "rlbd/two_stage.hpp"

namespace rlbd {

enum class DemandShape { Normal, LeftSkewed, RightSkewed };

std::string to_string(DemandShape s);
DemandShape demand_shape_from_string(const std::string& s);

// EV charging-station planning instance. First stage opens stations (y_i) and
// installs chargers (z_i <= M_i y_i); recourse ships demand d_j from opened
// capacity C_i z_i at cost c_ij, pays p_j per unit unmet, earns r_j per unit
// of demand as a scenario constant.
struct EvInstance {
  int n_stations = 0;
  int n_sites = 0;
  std::uint64_t seed = 0;

  Vec open_cost;         // f_i
  Vec charger_cost;      // b_i
  Mat transport_cost;    // c_ij, stations x sites
  Vec penalty;           // p_j
  Vec revenue;           // r_j
  Vec charger_capacity;  // C_i
  Vec max_chargers;      // M_i
  Vec demand_mean;       // mu_j
  Vec demand_std;        // sigma_j

  DemandShape scenario_shape = DemandShape::Normal;
  Mat demands;        // scenarios x sites, all >= 0
  Vec probabilities;  // per scenario, sums to 1
};

// Parameter ranges: f in [80,300], b in [5,40], c in [1,80], p in [30,120],
// r in [5,60], C in [40,120], M in [10,80], mu in [20,100], sigma = 0.1*mu.
// Draw order is fixed (f, b, c row-major, p, r, C, M, mu) so a seed names the
// instance exactly. Scenarios are not attached here.
EvInstance generate_ev_instance(std::uint64_t seed, int n_stations, int n_sites);

// One row per scenario. Normal draws N(mu_j, sigma_j^2); skewed shapes draw a
// skew-normal with shape parameter -4/+4 whose location/scale are moment-
// matched back to (mu_j, sigma_j). All demands clamp at zero.
Mat generate_demand_scenarios(std::uint64_t seed, const EvInstance& inst, int n_scenarios,
                              DemandShape shape);

// stores the demand block plus uniform probabilities 1/n on the instance
void attach_scenarios(EvInstance& inst, const Mat& demands, DemandShape shape);

// Standard form: x = (y, z) with z_i - M_i y_i <= 0; stage-2 rows are |J|
// demand equalities then |I| capacity rows written as >= with the C_i z_i
// term inside T; kappa_w = -Sum_j r_j d_j^w rides on the scenario offset.
TwoStageProblem ev_to_standard_form(const EvInstance& inst);

}  // namespace rlbd
