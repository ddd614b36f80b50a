#pragma once

#include "rlbd/lp.hpp"
#include "rlbd/mip.hpp"

namespace rlbd {

// One realization of the uncertainty. Rows read  W y {sense} h - T x  with the
// shared per-row senses stored on the problem; stage-2 variables are y >= 0.
// constant_offset is a fixed charge added to every recourse value and cut
// intercept, so the cut algebra theta >= pi.(h - T x) + offset stays exact.
struct Scenario {
  Mat W;                  // stage2_rows x n2
  Vec h;                  // stage2_rows
  Mat T;                  // stage2_rows x n1
  Vec q;                  // n2
  double probability = 0.0;
  double constant_offset = 0.0;
};

struct TwoStageProblem {
  Vec first_stage_cost;  // c over x
  Mat first_stage_matrix;
  std::vector<Sense> first_stage_senses;
  Vec first_stage_rhs;
  Vec x_lower, x_upper;
  std::vector<Index> integer_vars;   // indices into x
  std::vector<Sense> stage2_senses;  // shared row senses across scenarios
  std::vector<Scenario> scenarios;

  Index n1() const { return first_stage_cost.size(); }
  Index n2() const { return scenarios.empty() ? 0 : scenarios.front().q.size(); }
  Index stage2_rows() const { return static_cast<Index>(stage2_senses.size()); }

  // shapes coherent across scenarios, probabilities simplex-feasible
  void validate() const;
};

// min q.y  s.t.  W y {sense} h - T x,  y >= 0
LinearProgram build_subproblem_lp(const TwoStageProblem& p, Index scenario, const Vec& x);

struct RecourseSolution {
  double value = 0.0;  // includes the scenario constant offset
  Vec duals;           // one per stage-2 row
  long iterations = 0;
};

// throws SubproblemInfeasible when relatively complete recourse fails
RecourseSolution solve_recourse(const TwoStageProblem& p, Index scenario, const Vec& x,
                                const SolverTolerances& tol = {});

// Sum(p_w * Q_w(x)); the exact quantity the upper bound and tests need
double expected_recourse(const TwoStageProblem& p, const Vec& x,
                         const SolverTolerances& tol = {});

// deterministic equivalent: variables [x | y_1 | ... | y_S], one row block per
// scenario written as  T_w x + W y_w {sense} h_w
MixedIntegerProgram build_extensive_form(const TwoStageProblem& p);

// objective and bound include Sum(p_w * offset_w)
MipSolution solve_extensive_form(const TwoStageProblem& p, double time_limit_s = kInf,
                                 double gap_tol = 0.0, const SolverTolerances& tol = {});

}  // namespace rlbd
