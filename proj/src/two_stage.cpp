#include "rlbd/two_stage.hpp"

#include <cmath>

namespace rlbd {

void TwoStageProblem::validate() const {
  const Index n1v = n1();
  if (first_stage_matrix.cols() != n1v && first_stage_matrix.size() > 0)
    throw std::invalid_argument("two_stage: first-stage matrix width != n1");
  if (first_stage_rhs.size() != first_stage_matrix.rows())
    throw std::invalid_argument("two_stage: first-stage rhs size mismatch");
  if (static_cast<Index>(first_stage_senses.size()) != first_stage_matrix.rows())
    throw std::invalid_argument("two_stage: first-stage senses size mismatch");
  if (x_lower.size() != n1v || x_upper.size() != n1v)
    throw std::invalid_argument("two_stage: first-stage bound size mismatch");
  if (scenarios.empty()) throw std::invalid_argument("two_stage: no scenarios");

  const Index rows = stage2_rows();
  const Index n2v = n2();
  double psum = 0.0;
  for (const Scenario& s : scenarios) {
    if (s.W.rows() != rows || s.T.rows() != rows)
      throw std::invalid_argument("two_stage: scenario row count mismatch");
    if (s.W.cols() != n2v || s.q.size() != n2v)
      throw std::invalid_argument("two_stage: scenario n2 mismatch");
    if (s.T.cols() != n1v) throw std::invalid_argument("two_stage: scenario T width mismatch");
    if (s.h.size() != rows) throw std::invalid_argument("two_stage: scenario h size mismatch");
    if (s.probability < 0.0) throw std::invalid_argument("two_stage: negative probability");
    psum += s.probability;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw std::invalid_argument("two_stage: probabilities must sum to 1");
}

LinearProgram build_subproblem_lp(const TwoStageProblem& p, Index scenario, const Vec& x) {
  const Scenario& s = p.scenarios[static_cast<std::size_t>(scenario)];
  LinearProgram lp = make_lp(p.stage2_rows(), p.n2());
  lp.objective = s.q;
  lp.constraint_matrix = s.W;
  lp.senses = p.stage2_senses;
  lp.rhs = s.h - s.T * x;
  return lp;  // make_lp already set y >= 0
}

RecourseSolution solve_recourse(const TwoStageProblem& p, Index scenario, const Vec& x,
                                const SolverTolerances& tol) {
  LinearProgram lp = build_subproblem_lp(p, scenario, x);
  LpSolution sol = solve_lp(lp, tol);
  if (sol.status == LpStatus::Infeasible)
    throw SubproblemInfeasible("scenario " + std::to_string(scenario) +
                               " infeasible at the given first stage");
  if (sol.status == LpStatus::Unbounded)
    throw UnboundedProblem("scenario " + std::to_string(scenario) + " recourse unbounded");
  RecourseSolution r;
  r.value = sol.objective + p.scenarios[static_cast<std::size_t>(scenario)].constant_offset;
  r.duals = sol.duals;
  r.iterations = sol.iterations;
  return r;
}

double expected_recourse(const TwoStageProblem& p, const Vec& x, const SolverTolerances& tol) {
  double v = 0.0;
  for (std::size_t w = 0; w < p.scenarios.size(); ++w)
    v += p.scenarios[w].probability * solve_recourse(p, static_cast<Index>(w), x, tol).value;
  return v;
}

MixedIntegerProgram build_extensive_form(const TwoStageProblem& p) {
  p.validate();
  const Index n1v = p.n1();
  const Index n2v = p.n2();
  const Index srows = p.stage2_rows();
  const Index S = static_cast<Index>(p.scenarios.size());
  const Index fs_rows = p.first_stage_matrix.rows();

  MixedIntegerProgram mip;
  LinearProgram& lp = mip.relaxation;
  lp = make_lp(fs_rows + S * srows, n1v + S * n2v);

  lp.objective.head(n1v) = p.first_stage_cost;
  lp.var_lower.head(n1v) = p.x_lower;
  lp.var_upper.head(n1v) = p.x_upper;
  if (fs_rows > 0) {
    lp.constraint_matrix.topLeftCorner(fs_rows, n1v) = p.first_stage_matrix;
    lp.rhs.head(fs_rows) = p.first_stage_rhs;
    for (Index i = 0; i < fs_rows; ++i)
      lp.senses[static_cast<std::size_t>(i)] = p.first_stage_senses[static_cast<std::size_t>(i)];
  }
  for (Index w = 0; w < S; ++w) {
    const Scenario& s = p.scenarios[static_cast<std::size_t>(w)];
    const Index r0 = fs_rows + w * srows;
    const Index c0 = n1v + w * n2v;
    lp.objective.segment(c0, n2v) = s.probability * s.q;
    lp.constraint_matrix.block(r0, 0, srows, n1v) = s.T;
    lp.constraint_matrix.block(r0, c0, srows, n2v) = s.W;
    lp.rhs.segment(r0, srows) = s.h;
    for (Index i = 0; i < srows; ++i)
      lp.senses[static_cast<std::size_t>(r0 + i)] = p.stage2_senses[static_cast<std::size_t>(i)];
  }
  mip.integer_vars = p.integer_vars;
  return mip;
}

MipSolution solve_extensive_form(const TwoStageProblem& p, double time_limit_s, double gap_tol,
                                 const SolverTolerances& tol) {
  MixedIntegerProgram mip = build_extensive_form(p);
  double offset = 0.0;
  for (const Scenario& s : p.scenarios) offset += s.probability * s.constant_offset;
  MipSolution sol = solve_mip(mip, time_limit_s, gap_tol, tol);
  if (sol.has_incumbent()) sol.objective += offset;
  if (std::isfinite(sol.best_bound)) sol.best_bound += offset;
  return sol;
}

}  // namespace rlbd
