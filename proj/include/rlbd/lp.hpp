#pragma once

#include "rlbd/types.hpp"

namespace rlbd {

// min objective.x  s.t.  constraint_matrix.x {sense} rhs,  var_lower <= x <= var_upper
struct LinearProgram {
  Vec objective;
  Mat constraint_matrix;  // rows x cols, dense
  std::vector<Sense> senses;
  Vec rhs;
  Vec var_lower;  // -inf allowed
  Vec var_upper;  // +inf allowed

  Index rows() const { return constraint_matrix.rows(); }
  Index cols() const { return constraint_matrix.cols(); }

  // throws std::invalid_argument on shape mismatch or crossed bounds
  void validate() const;
};

// cols variables, all bounds [0, +inf), rows constraints left zeroed
LinearProgram make_lp(Index rows, Index cols);

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  Vec primal;
  Vec duals;  // one per row; >=0 for >=-rows, <=0 for <=-rows, free for =
  Vec reduced_costs;
  double objective = 0.0;
  double dual_objective = 0.0;
  long iterations = 0;  // simplex pivots over both phases (proxy-time unit)
};

// Two-phase revised simplex on the bounded-variable form. Dantzig pricing,
// switching permanently to Bland's rule after tol.bland_after degenerate
// pivots; hard pivot cap of tol.iteration_factor*(rows+cols) throws
// NumericalFailure.
LpSolution solve_lp(const LinearProgram& lp, const SolverTolerances& tol = {});

}  // namespace rlbd
