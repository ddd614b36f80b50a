#pragma once

#include <functional>
#include <memory>
#include <string>

#include "rlbd/rng.hpp"
#include "rlbd/two_stage.hpp"

namespace rlbd {

enum class TimingMode { Wallclock, DeterministicProxy };

// proxy seconds charged per simplex pivot / search node: effort-proportional
// and bit-identical across runs of the same binary
inline constexpr double kProxySecondsPerPivot = 1e-5;
inline constexpr double kProxySecondsPerNode = 1e-4;

// optimality cut  theta_w >= intercept - coeffs.x  generated at x_hat from
// dual multipliers pi:  coeffs = pi^T T,  intercept = pi^T h + offset_w
struct Cut {
  Index scenario = -1;  // -1 marks an aggregated (single-cut) row
  Vec coeffs;
  double intercept = 0.0;
  Vec dual;
  int born_iteration = 0;
};

struct BendersConfig {
  double eps_tol = 1e-6;  // relative-gap termination threshold
  int t_max = 500;
  double time_limit_s = kInf;
  double master_gap = 0.0;  // relative gap the master search may stop at; its
                            // proved bound stays valid, so LB never overshoots
  long master_node_limit = 0;  // >0 caps branch-and-bound nodes per master
                               // solve; a truncated master still yields a
                               // valid proved bound and feasible incumbent
  TimingMode timing = TimingMode::Wallclock;
  bool theta_lower_bounds = true;  // theta_w >= offset_w keeps masters bounded
  bool dedup_cuts = false;         // coefficient-hash duplicate suppression
  double violation_tol = 1e-9;     // classical selectors skip cuts below this
  double gap_eps = 1e-8;           // denominator guard of the relative gap
  SolverTolerances solver;
};

struct IterationRecord {
  int t = 0;
  double lb = 0.0, ub_best = 0.0, gap_best = 0.0;
  double ub_raw = 0.0, gap_raw = 0.0;
  double master_time = 0.0;  // T_t^MP in the configured timing mode
  double subproblem_time = 0.0;
  int cuts_added = 0;
  long cum_cuts = 0;
  std::vector<Index> selected;  // scenario ids whose cuts entered the pool
};

// Rolling view the selectors and feature builder read. Raw per-iteration
// bounds sit next to the monotone best-so-far pair: features consume the raw
// series, termination the best one.
struct BendersState {
  int t = 0;
  double lb = -kInf;
  double ub_best = kInf, gap_best = kInf;
  double ub_raw = kInf, gap_raw = kInf;
  double lb_prev = 0.0, ub_raw_prev = 0.0, gap_raw_prev = 0.0;
  bool has_prev = false;  // false exactly at t=1: all deltas read zero
  double master_time = 0.0;
  int cuts_added_last = 0;  // |A_{t-1}|
  long cum_cuts = 0;
  std::vector<int> nc;  // per-scenario selection counters over tau < t
  Vec x_hat, theta_hat;
  std::vector<Cut> candidates;  // one per scenario at the current x_hat
  Vec recourse_values;          // Q_w(x_hat), offsets included
  Vec violations;               // v_w = cut value at x_hat minus theta_hat_w
  std::vector<IterationRecord> history;
};

struct MasterSolve {
  Vec x, theta;
  double lb = 0.0;    // proved bound of the master MIP
  double time = 0.0;  // per the configured timing mode
  long nodes = 0;
  long lp_iterations = 0;
  bool incumbent = true;
  bool truncated = false;  // hit an effort cap: lb is proved but x may be suboptimal
};

// master over (x, theta): first-stage rows, pooled cut rows, theta bounds.
// Throws MasterUnbounded when theta lower bounds are disabled and some theta
// has no cut.
MasterSolve build_and_solve_master(const TwoStageProblem& p, const std::vector<Cut>& pool,
                                   const BendersConfig& cfg, double time_left_s = kInf);

// ordered by scenario index; throws SubproblemInfeasible on recourse failure
std::vector<RecourseSolution> solve_subproblems(const TwoStageProblem& p, const Vec& x,
                                                const SolverTolerances& tol = {});

std::vector<Cut> make_cuts(const TwoStageProblem& p,
                           const std::vector<RecourseSolution>& subs, int iteration);

double cut_violation(const Cut& cut, const Vec& x_hat, double theta_hat_w);

// what a selector hands back for one iteration
struct Selection {
  std::vector<Index> scenarios;  // ordered picks of per-scenario cuts
  bool aggregate = false;        // single-cut mode: pool one weighted row
  double joint_log_prob = 0.0;   // stochastic policy only
  std::vector<double> step_probs;
  Mat state_matrix;  // candidate feature rows, policy selectors only
};

struct CutSelector {
  virtual ~CutSelector() = default;
  virtual Selection select(const BendersState& state, const TwoStageProblem& p,
                           const BendersConfig& cfg) = 0;
  virtual std::string name() const = 0;
};

std::unique_ptr<CutSelector> make_select_all();
std::unique_ptr<CutSelector> make_aggregate();
std::unique_ptr<CutSelector> make_random_k(int k, std::uint64_t seed);
// policy-driven selectors live in policy.hpp

enum class BendersStatus { Converged, IterationLimit, TimeLimit };

struct BendersRun {
  BendersStatus status = BendersStatus::Converged;
  Vec x_incumbent;
  double objective = kInf;  // best upper bound
  double lb = -kInf;
  double gap = kInf;
  int iterations = 0;
  long total_cuts = 0;
  double total_time = 0.0, master_time_total = 0.0;
  std::vector<Cut> pool;  // every cut that entered the master
  BendersState state;
};

// called once per iteration after the selection has been applied
using IterationObserver = std::function<void(const BendersState&, const Selection&)>;

// One loop serves every selector: master, subproblems, bounds, state, select,
// add, then the gap test -- so the final iteration still takes its action.
// An empty classical selection (nothing violated) also terminates.
BendersRun run_benders(const TwoStageProblem& p, CutSelector& selector,
                       const BendersConfig& cfg, const IterationObserver& observer = {});

}  // namespace rlbd
