#include "rlbd/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rlbd {

void LinearProgram::validate() const {
  const Index m = constraint_matrix.rows();
  const Index n = constraint_matrix.cols();
  if (objective.size() != n) throw std::invalid_argument("lp: objective size != cols");
  if (static_cast<Index>(senses.size()) != m) throw std::invalid_argument("lp: senses size != rows");
  if (rhs.size() != m) throw std::invalid_argument("lp: rhs size != rows");
  if (var_lower.size() != n || var_upper.size() != n)
    throw std::invalid_argument("lp: bound vector size != cols");
  for (Index j = 0; j < n; ++j) {
    if (std::isnan(var_lower[j]) || std::isnan(var_upper[j]))
      throw std::invalid_argument("lp: NaN bound");
    if (var_lower[j] > var_upper[j]) throw std::invalid_argument("lp: crossed bounds");
  }
  for (Index i = 0; i < m; ++i)
    if (!std::isfinite(rhs[i])) throw std::invalid_argument("lp: non-finite rhs");
  for (Index j = 0; j < n; ++j)
    if (!std::isfinite(objective[j])) throw std::invalid_argument("lp: non-finite objective");
  if (!constraint_matrix.allFinite()) throw std::invalid_argument("lp: non-finite matrix entry");
}

LinearProgram make_lp(Index rows, Index cols) {
  LinearProgram lp;
  lp.objective = Vec::Zero(cols);
  lp.constraint_matrix = Mat::Zero(rows, cols);
  lp.senses.assign(static_cast<std::size_t>(rows), Sense::LessEqual);
  lp.rhs = Vec::Zero(rows);
  lp.var_lower = Vec::Zero(cols);
  lp.var_upper = Vec::Constant(cols, kInf);
  return lp;
}

namespace {

enum class ColState : std::uint8_t { Basic, AtLower, AtUpper, Free };

// Bounded-variable two-phase revised simplex with an explicit basis inverse.
// Column layout: [0,n) structural, [n,n+m) slacks, [n+m,n+2m) artificials.
// Slack bounds encode the row sense; artificials carry sign(+/-1) columns so
// the initial basis inverse is diagonal.
struct Simplex {
  const LinearProgram& lp;
  const SolverTolerances& tol;
  Index m, n, N;
  double feas_scale;

  Vec lower, upper, xval, cost;
  std::vector<ColState> state;
  std::vector<Index> basis;      // basis[i] = column basic in row i
  Vec art_sign;
  Mat Binv;

  long pivots = 0;
  long degenerate = 0;
  long cap;
  bool bland = false;
  int phase = 1;
  long refactor_every = 64;

  // robust retry profile: Bland from the first pivot and tight refactor cadence,
  // for the rare basis the greedy path drives into numerical trouble
  Simplex(const LinearProgram& lp_, const SolverTolerances& tol_, bool robust)
      : Simplex(lp_, tol_) {
    if (robust) {
      bland = true;
      refactor_every = 16;
    }
  }

  Simplex(const LinearProgram& lp_, const SolverTolerances& tol_) : lp(lp_), tol(tol_) {
    m = lp.rows();
    n = lp.cols();
    N = n + 2 * m;
    cap = tol.iteration_factor * static_cast<long>(m + n);
    feas_scale = 1.0 + lp.rhs.cwiseAbs().sum();

    lower = Vec::Zero(N);
    upper = Vec::Zero(N);
    xval = Vec::Zero(N);
    cost = Vec::Zero(N);
    state.assign(static_cast<std::size_t>(N), ColState::AtLower);
    basis.resize(static_cast<std::size_t>(m));
    art_sign = Vec::Ones(m);

    for (Index j = 0; j < n; ++j) {
      lower[j] = lp.var_lower[j];
      upper[j] = lp.var_upper[j];
      if (std::isfinite(lower[j])) {
        state[j] = ColState::AtLower;
        xval[j] = lower[j];
      } else if (std::isfinite(upper[j])) {
        state[j] = ColState::AtUpper;
        xval[j] = upper[j];
      } else {
        state[j] = ColState::Free;
        xval[j] = 0.0;
      }
    }
    for (Index i = 0; i < m; ++i) {
      const Index js = n + i;
      switch (lp.senses[static_cast<std::size_t>(i)]) {
        case Sense::LessEqual:
          lower[js] = 0.0; upper[js] = kInf; state[js] = ColState::AtLower; break;
        case Sense::GreaterEqual:
          lower[js] = -kInf; upper[js] = 0.0; state[js] = ColState::AtUpper; break;
        case Sense::Equal:
          lower[js] = 0.0; upper[js] = 0.0; state[js] = ColState::AtLower; break;
      }
      xval[js] = 0.0;
    }

    // residual the artificial basis must absorb
    Vec r = lp.rhs;
    for (Index j = 0; j < n; ++j)
      if (xval[j] != 0.0) r -= lp.constraint_matrix.col(j) * xval[j];

    Binv = Mat::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      const Index ja = n + m + i;
      art_sign[i] = (r[i] >= 0.0) ? 1.0 : -1.0;
      lower[ja] = 0.0;
      upper[ja] = kInf;
      xval[ja] = std::abs(r[i]);
      state[ja] = ColState::Basic;
      basis[static_cast<std::size_t>(i)] = ja;
      Binv(i, i) = art_sign[i];
    }
  }

  bool is_artificial(Index j) const { return j >= n + m; }
  bool is_slack(Index j) const { return j >= n && j < n + m; }

  Vec column(Index j) const {
    if (j < n) return lp.constraint_matrix.col(j);
    Vec e = Vec::Zero(m);
    if (is_slack(j)) e[j - n] = 1.0;
    else e[j - n - m] = art_sign[j - n - m];
    return e;
  }

  Vec ftran(Index j) const {  // Binv * A_j without materializing unit columns
    if (j < n) return Binv * lp.constraint_matrix.col(j);
    if (is_slack(j)) return Binv.col(j - n);
    return art_sign[j - n - m] * Binv.col(j - n - m);
  }

  Vec duals() const {
    Vec cb(m);
    for (Index i = 0; i < m; ++i) cb[i] = cost[basis[static_cast<std::size_t>(i)]];
    return Binv.transpose() * cb;
  }

  void recompute_basics() {
    Vec r = lp.rhs;
    for (Index j = 0; j < N; ++j)
      if (state[static_cast<std::size_t>(j)] != ColState::Basic && xval[j] != 0.0)
        r -= column(j) * xval[j];
    Vec xb = Binv * r;
    for (Index i = 0; i < m; ++i) xval[basis[static_cast<std::size_t>(i)]] = xb[i];
  }

  void refactor() {
    if (m == 0) return;
    Mat B(m, m);
    for (Index i = 0; i < m; ++i) B.col(i) = column(basis[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Mat> lu(B);
    if (!lu.isInvertible()) throw NumericalFailure("simplex: singular basis on refactorization");
    Binv = lu.inverse();
    recompute_basics();
  }

  double phase1_objective() const {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) s += std::max(0.0, xval[n + m + i]);
    return s;
  }

  // entering candidate: j, move direction, |reduced cost|
  struct Entering { Index j = -1; double dir = 0.0; double score = 0.0; };

  Entering price() const {
    Vec y = duals();
    Vec ds = cost.head(n) - lp.constraint_matrix.transpose() * y;
    const double otol = tol.feasibility;
    Entering best;
    const Index scan_end = (phase == 1) ? N : n + m;  // artificials priced only in phase 1
    for (Index j = 0; j < scan_end; ++j) {
      const ColState st = state[static_cast<std::size_t>(j)];
      if (st == ColState::Basic) continue;
      if (st != ColState::Free && !(upper[j] - lower[j] > 0.0)) continue;  // fixed column
      double d;
      if (j < n) d = ds[j];
      else if (is_slack(j)) d = cost[j] - y[j - n];
      else d = cost[j] - art_sign[j - n - m] * y[j - n - m];
      double dir = 0.0;
      if ((st == ColState::AtLower || st == ColState::Free) && d < -otol) dir = 1.0;
      else if ((st == ColState::AtUpper || st == ColState::Free) && d > otol) dir = -1.0;
      else continue;
      if (bland) return {j, dir, std::abs(d)};  // lowest eligible index
      if (std::abs(d) > best.score) best = {j, dir, std::abs(d)};
    }
    return best;
  }

  // one pricing/ratio/pivot step; returns false when the phase is optimal
  bool step() {
    if (pivots >= cap)
      throw NumericalFailure("simplex: iteration cap " + std::to_string(cap) + " exceeded");
    Entering e = price();
    if (e.j < 0) return false;
    const Index q = e.j;
    const double sigma = e.dir;

    Vec w = ftran(q);

    double t_bound = kInf;  // step at which the entering variable hits its far bound
    if (std::isfinite(lower[q]) && std::isfinite(upper[q])) t_bound = upper[q] - lower[q];

    double t_best = t_bound;
    Index leave_row = -1;
    double leave_piv = 0.0;
    double leave_to = 0.0;  // bound value the leaving variable lands on
    bool leave_at_lower = true;
    for (Index i = 0; i < m; ++i) {
      const double wi = sigma * w[i];
      if (std::abs(wi) <= tol.pivot) continue;
      const Index bj = basis[static_cast<std::size_t>(i)];
      double limit;
      bool at_lower;
      if (wi > 0.0) {  // basic value decreases toward its lower bound
        if (!std::isfinite(lower[bj])) continue;
        limit = (xval[bj] - lower[bj]) / wi;
        at_lower = true;
      } else {  // increases toward its upper bound
        if (!std::isfinite(upper[bj])) continue;
        limit = (upper[bj] - xval[bj]) / (-wi);
        at_lower = false;
      }
      if (limit < 0.0) limit = 0.0;  // stale bound violation within tolerance
      // Ties: under Bland the lowest variable index keeps the method cycle-free;
      // otherwise the largest pivot magnitude wins so degenerate chains cannot
      // stack near-zero pivots into the updated inverse. Index breaks the rest.
      bool take = false;
      if (limit < t_best - 1e-12) {
        take = true;
      } else if (limit <= t_best + 1e-12 && leave_row >= 0) {
        const Index cur = basis[static_cast<std::size_t>(leave_row)];
        if (bland) take = bj < cur;
        else if (std::abs(wi) > leave_piv) take = true;
        else if (std::abs(wi) == leave_piv && bj < cur) take = true;
      }
      if (take) {
        t_best = limit;
        leave_row = i;
        leave_piv = std::abs(wi);
        leave_at_lower = at_lower;
        leave_to = at_lower ? lower[bj] : upper[bj];
      }
    }

    if (!std::isfinite(t_best)) {
      if (phase == 1) throw NumericalFailure("simplex: unbounded phase-1 objective");
      throw UnboundedProblem("lp: unbounded");
    }

    if (t_best <= 1e-12) ++degenerate;
    if (!bland && degenerate >= tol.bland_after) bland = true;

    for (Index i = 0; i < m; ++i)
      xval[basis[static_cast<std::size_t>(i)]] -= t_best * sigma * w[i];

    if (leave_row < 0 || (t_bound < kInf && t_bound <= t_best)) {
      // bound flip: entering variable crosses to its opposite bound
      xval[q] = (sigma > 0.0) ? upper[q] : lower[q];
      state[static_cast<std::size_t>(q)] = (sigma > 0.0) ? ColState::AtUpper : ColState::AtLower;
    } else {
      const Index out = basis[static_cast<std::size_t>(leave_row)];
      xval[out] = leave_to;
      state[static_cast<std::size_t>(out)] = leave_at_lower ? ColState::AtLower : ColState::AtUpper;
      if (is_artificial(out)) { lower[out] = 0.0; upper[out] = 0.0; }  // never returns

      xval[q] = ((state[static_cast<std::size_t>(q)] == ColState::AtUpper) ? upper[q]
                 : (state[static_cast<std::size_t>(q)] == ColState::AtLower) ? lower[q] : 0.0) +
                sigma * t_best;
      state[static_cast<std::size_t>(q)] = ColState::Basic;
      basis[static_cast<std::size_t>(leave_row)] = q;

      const double piv = w[leave_row];
      Binv.row(leave_row) /= piv;
      for (Index i = 0; i < m; ++i)
        if (i != leave_row) Binv.row(i) -= w[i] * Binv.row(leave_row);
    }

    ++pivots;
    if (pivots % refactor_every == 0) refactor();
    return true;
  }

  void run_phase() {
    while (step()) {
      if (phase == 1 && phase1_objective() <= 1e-12 * feas_scale) break;
    }
  }
};

}  // namespace

namespace {

LpSolution solve_lp_attempt(const LinearProgram& lp, const SolverTolerances& tol,
                            bool robust) {
  Simplex s(lp, tol, robust);

  // phase 1: drive Sum(artificials) to zero under unit costs
  for (Index i = 0; i < s.m; ++i) s.cost[s.n + s.m + i] = 1.0;
  s.run_phase();
  if (s.phase1_objective() > tol.feasibility * s.feas_scale) {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    sol.iterations = s.pivots;
    sol.objective = std::numeric_limits<double>::quiet_NaN();
    return sol;
  }
  for (Index i = 0; i < s.m; ++i) {
    const Index ja = s.n + s.m + i;
    s.lower[ja] = 0.0;
    s.upper[ja] = 0.0;  // basic leftovers stay pinned at zero
  }

  // phase 2: genuine costs
  s.phase = 2;
  s.cost.setZero();
  s.cost.head(s.n) = lp.objective;
  try {
    s.run_phase();
  } catch (const UnboundedProblem&) {
    LpSolution sol;
    sol.status = LpStatus::Unbounded;
    sol.iterations = s.pivots;
    sol.objective = -kInf;
    return sol;
  }

  s.refactor();  // clean solve of the final basis tightens the KKT residuals

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.iterations = s.pivots;
  sol.primal = s.xval.head(s.n);
  sol.objective = lp.objective.dot(sol.primal);
  Vec y = s.duals();
  sol.duals = y;
  sol.reduced_costs = lp.objective - lp.constraint_matrix.transpose() * y;
  double dual_obj = y.dot(lp.rhs);
  for (Index j = 0; j < s.n; ++j)
    if (s.state[static_cast<std::size_t>(j)] == ColState::AtLower ||
        s.state[static_cast<std::size_t>(j)] == ColState::AtUpper)
      dual_obj += sol.reduced_costs[j] * s.xval[j];
  sol.dual_objective = dual_obj;
  return sol;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SolverTolerances& tol) {
  lp.validate();
  try {
    return solve_lp_attempt(lp, tol, false);
  } catch (const NumericalFailure&) {
    // deterministic second pass; a repeat failure propagates to the caller
    return solve_lp_attempt(lp, tol, true);
  }
}

}  // namespace rlbd
