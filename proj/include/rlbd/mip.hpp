#pragma once

#include <functional>

#include "rlbd/lp.hpp"

namespace rlbd {

struct MixedIntegerProgram {
  LinearProgram relaxation;
  std::vector<Index> integer_vars;  // each must have finite bounds

  void validate() const;
};

enum class MipStatus { Optimal, Infeasible, TimeLimit };

struct MipSolution {
  MipStatus status = MipStatus::Optimal;
  Vec primal;               // empty when no incumbent exists
  double objective = kInf;  // +inf when no incumbent exists
  double best_bound = -kInf;
  long nodes_explored = 0;
  long lp_iterations = 0;  // summed over all node relaxations (proxy-time unit)

  bool has_incumbent() const { return primal.size() > 0; }
};

// observer(nodes_explored, global_lower_bound, incumbent_objective); test hook
using MipObserver = std::function<void(long, double, double)>;

// Branch and bound on solve_lp relaxations: depth-first until the first
// incumbent, best-bound-first afterwards. Branching picks the most fractional
// integer variable (ties to the lowest index); no cuts, no heuristics, no warm
// starts, so identical inputs explore identical trees. node_limit > 0 caps the
// explored nodes -- a deterministic effort limit; hitting it (or time_limit_s)
// returns TimeLimit with the bound proved so far and any incumbent found.
MipSolution solve_mip(const MixedIntegerProgram& mip, double time_limit_s = kInf,
                      double gap_tol = 0.0, const SolverTolerances& tol = {},
                      long node_limit = 0, const MipObserver& observer = {});

}  // namespace rlbd
