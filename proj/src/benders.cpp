#include "rlbd/benders.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <unordered_set>

#include "rlbd/mip.hpp"

namespace rlbd {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// exact-bit duplicate key: dedup suppresses only cuts identical to a pooled one
std::string cut_key(const Cut& c) {
  std::string key;
  key.reserve(8 * (static_cast<size_t>(c.coeffs.size()) + 2));
  auto push = [&key](double v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    key.append(buf, 8);
  };
  push(static_cast<double>(c.scenario));
  push(c.intercept);
  for (Index j = 0; j < c.coeffs.size(); ++j) push(c.coeffs[j]);
  return key;
}

Cut aggregate_candidates(const TwoStageProblem& p, const std::vector<Cut>& candidates,
                         int iteration) {
  Cut agg;
  agg.scenario = -1;
  agg.born_iteration = iteration;
  agg.coeffs = Vec::Zero(p.n1());
  for (size_t w = 0; w < candidates.size(); ++w) {
    const double pw = p.scenarios[w].probability;
    agg.coeffs += pw * candidates[w].coeffs;
    agg.intercept += pw * candidates[w].intercept;
  }
  return agg;
}

}  // namespace

MasterSolve build_and_solve_master(const TwoStageProblem& p, const std::vector<Cut>& pool,
                                   const BendersConfig& cfg, double time_left_s) {
  const Index n1 = p.n1();
  const Index s = static_cast<Index>(p.scenarios.size());
  const Index fs_rows = p.first_stage_rhs.size();
  const Index rows = fs_rows + static_cast<Index>(pool.size());

  MixedIntegerProgram mip;
  LinearProgram& lp = mip.relaxation;
  lp = make_lp(rows, n1 + s);
  lp.objective.head(n1) = p.first_stage_cost;
  for (Index w = 0; w < s; ++w) lp.objective[n1 + w] = p.scenarios[w].probability;
  lp.var_lower.head(n1) = p.x_lower;
  lp.var_upper.head(n1) = p.x_upper;
  for (Index w = 0; w < s; ++w) {
    lp.var_lower[n1 + w] =
        cfg.theta_lower_bounds ? p.scenarios[w].constant_offset : -kInf;
    lp.var_upper[n1 + w] = kInf;
  }
  if (fs_rows > 0) {
    lp.constraint_matrix.topLeftCorner(fs_rows, n1) = p.first_stage_matrix;
    lp.rhs.head(fs_rows) = p.first_stage_rhs;
    for (Index i = 0; i < fs_rows; ++i) lp.senses[i] = p.first_stage_senses[i];
  }
  for (size_t k = 0; k < pool.size(); ++k) {
    const Index r = fs_rows + static_cast<Index>(k);
    const Cut& cut = pool[k];
    lp.constraint_matrix.row(r).head(n1) = cut.coeffs.transpose();
    if (cut.scenario < 0) {
      for (Index w = 0; w < s; ++w)
        lp.constraint_matrix(r, n1 + w) = p.scenarios[w].probability;
    } else {
      lp.constraint_matrix(r, n1 + cut.scenario) = 1.0;
    }
    lp.senses[r] = Sense::GreaterEqual;
    lp.rhs[r] = cut.intercept;
  }
  mip.integer_vars = p.integer_vars;

  MipSolution sol;
  try {
    sol = solve_mip(mip, time_left_s, cfg.master_gap, cfg.solver, cfg.master_node_limit);
  } catch (const UnboundedProblem&) {
    throw MasterUnbounded("master has no lower bound; enable theta lower bounds");
  }
  if (sol.status == MipStatus::Infeasible)
    throw SolverError("master infeasible: first-stage constraints admit no point");

  MasterSolve out;
  out.nodes = sol.nodes_explored;
  out.lp_iterations = sol.lp_iterations;
  out.time = cfg.timing == TimingMode::DeterministicProxy
                 ? kProxySecondsPerPivot * static_cast<double>(sol.lp_iterations) +
                       kProxySecondsPerNode * static_cast<double>(sol.nodes_explored)
                 : 0.0;  // wallclock filled by the caller around this call
  out.incumbent = sol.has_incumbent();
  out.truncated = sol.status == MipStatus::TimeLimit;
  if (!out.incumbent) return out;  // time limit hit before any feasible point
  out.x = sol.primal.head(n1);
  out.theta = sol.primal.segment(n1, s);
  out.lb = sol.best_bound;
  return out;
}

std::vector<RecourseSolution> solve_subproblems(const TwoStageProblem& p, const Vec& x,
                                                const SolverTolerances& tol) {
  std::vector<RecourseSolution> subs;
  subs.reserve(p.scenarios.size());
  for (size_t w = 0; w < p.scenarios.size(); ++w)
    subs.push_back(solve_recourse(p, static_cast<Index>(w), x, tol));
  return subs;
}

std::vector<Cut> make_cuts(const TwoStageProblem& p,
                           const std::vector<RecourseSolution>& subs, int iteration) {
  std::vector<Cut> cuts;
  cuts.reserve(subs.size());
  for (size_t w = 0; w < subs.size(); ++w) {
    const Scenario& sc = p.scenarios[w];
    Cut c;
    c.scenario = static_cast<Index>(w);
    c.dual = subs[w].duals;
    c.coeffs = sc.T.transpose() * subs[w].duals;
    c.intercept = subs[w].duals.dot(sc.h) + sc.constant_offset;
    c.born_iteration = iteration;
    cuts.push_back(std::move(c));
  }
  return cuts;
}

double cut_violation(const Cut& cut, const Vec& x_hat, double theta_hat_w) {
  return (cut.intercept - cut.coeffs.dot(x_hat)) - theta_hat_w;
}

namespace {

struct SelectAll final : CutSelector {
  Selection select(const BendersState& st, const TwoStageProblem&,
                   const BendersConfig& cfg) override {
    Selection sel;
    for (Index w = 0; w < st.violations.size(); ++w)
      if (st.violations[w] > cfg.violation_tol) sel.scenarios.push_back(w);
    return sel;
  }
  std::string name() const override { return "select-all"; }
};

struct Aggregate final : CutSelector {
  Selection select(const BendersState&, const TwoStageProblem&,
                   const BendersConfig&) override {
    Selection sel;
    sel.aggregate = true;  // the engine pools the weighted row if violated
    return sel;
  }
  std::string name() const override { return "aggregate"; }
};

struct RandomK final : CutSelector {
  int k;
  CounterRng rng;
  RandomK(int k_, std::uint64_t seed) : k(k_), rng(seed) {}

  Selection select(const BendersState& st, const TwoStageProblem&,
                   const BendersConfig&) override {
    Selection sel;
    const Index s = st.violations.size();
    if (k >= s) {
      for (Index w = 0; w < s; ++w) sel.scenarios.push_back(w);
      return sel;
    }
    // Floyd's subset sampling, then sorted for a deterministic pool order
    std::unordered_set<Index> chosen;
    for (Index j = s - k; j < s; ++j) {
      Index idx = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(j) + 1));
      if (!chosen.insert(idx).second) {
        chosen.insert(j);
        idx = j;
      }
      sel.scenarios.push_back(idx);
    }
    std::sort(sel.scenarios.begin(), sel.scenarios.end());
    return sel;
  }
  std::string name() const override { return "random-k"; }
};

}  // namespace

std::unique_ptr<CutSelector> make_select_all() { return std::make_unique<SelectAll>(); }
std::unique_ptr<CutSelector> make_aggregate() { return std::make_unique<Aggregate>(); }
std::unique_ptr<CutSelector> make_random_k(int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("random-k needs k >= 1");
  return std::make_unique<RandomK>(k, seed);
}

BendersRun run_benders(const TwoStageProblem& p, CutSelector& selector,
                       const BendersConfig& cfg, const IterationObserver& observer) {
  p.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index s = static_cast<Index>(p.scenarios.size());
  const bool proxy = cfg.timing == TimingMode::DeterministicProxy;

  BendersRun run;
  run.status = BendersStatus::IterationLimit;
  BendersState& st = run.state;
  st.nc.assign(static_cast<size_t>(s), 0);

  double proxy_spent = 0.0;
  bool force_exact = false;
  std::vector<Cut> pool;
  std::unordered_set<std::string> pooled_keys;
  auto try_pool = [&](Cut&& cut) {
    if (cfg.dedup_cuts && !pooled_keys.insert(cut_key(cut)).second) return false;
    pool.push_back(std::move(cut));
    return true;
  };

  for (int t = 1; t <= cfg.t_max; ++t) {
    st.t = t;

    double time_left = kInf;
    if (cfg.time_limit_s < kInf && !proxy)
      time_left = std::max(0.0, cfg.time_limit_s - seconds_since(t0));
    const auto m0 = std::chrono::steady_clock::now();
    BendersConfig mcfg = cfg;
    if (force_exact) mcfg.master_node_limit = 0;
    force_exact = false;
    MasterSolve ms = build_and_solve_master(p, pool, mcfg, time_left);
    if (!ms.incumbent) {  // out of time inside the master search
      run.status = BendersStatus::TimeLimit;
      break;
    }
    if (!proxy) ms.time = seconds_since(m0);
    st.x_hat = ms.x;
    st.theta_hat = ms.theta;
    st.master_time = ms.time;
    st.lb = std::max(st.lb, ms.lb);  // proved bounds only ever tighten

    const auto s0 = std::chrono::steady_clock::now();
    std::vector<RecourseSolution> subs = solve_subproblems(p, st.x_hat, cfg.solver);
    double sub_time = seconds_since(s0);
    if (proxy) {
      sub_time = 0.0;
      for (const auto& r : subs)
        sub_time += kProxySecondsPerPivot * static_cast<double>(r.iterations);
      proxy_spent += ms.time + sub_time;
    }

    st.recourse_values.resize(s);
    for (Index w = 0; w < s; ++w) st.recourse_values[w] = subs[w].value;
    st.ub_raw = p.first_stage_cost.dot(st.x_hat) +
                [&] {
                  double acc = 0.0;
                  for (Index w = 0; w < s; ++w)
                    acc += p.scenarios[w].probability * st.recourse_values[w];
                  return acc;
                }();
    if (st.ub_raw < st.ub_best) {
      st.ub_best = st.ub_raw;
      run.x_incumbent = st.x_hat;
    }
    st.gap_raw = relative_gap(st.ub_raw, st.lb, cfg.gap_eps);
    st.gap_best = relative_gap(st.ub_best, st.lb, cfg.gap_eps);

    st.candidates = make_cuts(p, subs, t);
    st.violations.resize(s);
    for (Index w = 0; w < s; ++w)
      st.violations[w] = cut_violation(st.candidates[w], st.x_hat, st.theta_hat[w]);

    Selection sel = selector.select(st, p, cfg);

    int added = 0;
    bool empty_classical = false;
    if (sel.aggregate) {
      Cut agg = aggregate_candidates(p, st.candidates, t);
      double theta_bar = 0.0;
      for (Index w = 0; w < s; ++w)
        theta_bar += p.scenarios[w].probability * st.theta_hat[w];
      if (cut_violation(agg, st.x_hat, theta_bar) > cfg.violation_tol) {
        if (try_pool(std::move(agg))) ++added;
      } else {
        empty_classical = true;  // weighted cut not violated: nothing to add
      }
    } else if (sel.scenarios.empty()) {
      empty_classical = true;
    } else {
      for (Index w : sel.scenarios) {
        ++st.nc[static_cast<size_t>(w)];  // counts selections, pooled or deduped
        Cut copy = st.candidates[static_cast<size_t>(w)];
        if (try_pool(std::move(copy))) ++added;
      }
    }
    st.cum_cuts = static_cast<long>(pool.size());

    IterationRecord rec;
    rec.t = t;
    rec.lb = st.lb;
    rec.ub_best = st.ub_best;
    rec.gap_best = st.gap_best;
    rec.ub_raw = st.ub_raw;
    rec.gap_raw = st.gap_raw;
    rec.master_time = st.master_time;
    rec.subproblem_time = sub_time;
    rec.cuts_added = added;
    rec.cum_cuts = st.cum_cuts;
    rec.selected = sel.scenarios;
    st.history.push_back(std::move(rec));

    if (observer) observer(st, sel);

    // classical termination is only sound against an exactly solved master:
    // a truncated one can repeat an incumbent whose cuts all look satisfied,
    // so prove it with one uncapped solve before claiming convergence
    if (st.gap_best < cfg.eps_tol || (empty_classical && !ms.truncated)) {
      run.status = BendersStatus::Converged;
      break;
    }
    if (empty_classical) force_exact = true;
    // under the proxy clock the budget is proxy seconds, so it stays deterministic
    if (cfg.time_limit_s < kInf &&
        (proxy ? proxy_spent : seconds_since(t0)) > cfg.time_limit_s) {
      run.status = BendersStatus::TimeLimit;
      break;
    }

    st.has_prev = true;
    st.lb_prev = st.lb;
    st.ub_raw_prev = st.ub_raw;
    st.gap_raw_prev = st.gap_raw;
    st.cuts_added_last = added;
  }

  run.iterations = st.t;
  run.total_cuts = static_cast<long>(pool.size());
  run.pool = std::move(pool);
  run.lb = st.lb;
  run.gap = st.gap_best;
  run.objective = st.ub_best;
  if (run.x_incumbent.size() == 0 && st.x_hat.size() > 0) run.x_incumbent = st.x_hat;
  run.master_time_total = 0.0;
  double iter_total = 0.0;
  for (const auto& r : st.history) {
    run.master_time_total += r.master_time;
    iter_total += r.master_time + r.subproblem_time;
  }
  run.total_time = proxy ? iter_total : seconds_since(t0);
  return run;
}

}  // namespace rlbd
