#include "rlbd/mip.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>


namespace rlbd {

void MixedIntegerProgram::validate() const {
  relaxation.validate();
  for (Index j : integer_vars) {
    if (j < 0 || j >= relaxation.cols())
      throw std::invalid_argument("mip: integer index out of range");
    if (!std::isfinite(relaxation.var_lower[j]) || !std::isfinite(relaxation.var_upper[j]))
      throw std::invalid_argument("mip: integer variable needs finite bounds");
  }
}

namespace {

struct Node {
  Vec lower, upper;
  double bound;  // LP objective of the parent; valid lower bound for the subtree
  long id;       // insertion order, the deterministic tie-break
};

struct NodeWorse {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

MipSolution solve_mip(const MixedIntegerProgram& mip, double time_limit_s, double gap_tol,
                      const SolverTolerances& tol, long node_limit,
                      const MipObserver& observer) {
  mip.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  std::vector<Index> ints = mip.integer_vars;
  std::sort(ints.begin(), ints.end());  // lowest-index tie-breaks regardless of caller order

  MipSolution out;
  double incumbent = kInf;
  Vec incumbent_x;
  double global_lb = -kInf;
  long next_id = 0;

  // integer variables live on the grid, so fractional bounds shrink inward;
  // a box with no grid point left is infeasible before any LP is solved
  Vec root_lower = mip.relaxation.var_lower;
  Vec root_upper = mip.relaxation.var_upper;
  for (Index j : ints) {
    root_lower[j] = std::ceil(root_lower[j] - tol.integrality);
    root_upper[j] = std::floor(root_upper[j] + tol.integrality);
    if (root_lower[j] > root_upper[j]) {
      out.status = MipStatus::Infeasible;
      out.best_bound = kInf;
      return out;
    }
  }

  // Depth-first dives until some incumbent exists -- best-first cannot prune a
  // thing before then and drowns on bound plateaus -- after which the frontier
  // is heapified once and the search continues in best-bound order.
  std::vector<Node> open;
  bool best_first = false;
  open.push_back({root_lower, root_upper, -kInf, next_id++});

  LinearProgram work = mip.relaxation;
  auto prune_eps = [&] { return 1e-9 * (1.0 + std::abs(incumbent)); };

  while (!open.empty()) {
    if (elapsed() > time_limit_s ||
        (node_limit > 0 && out.nodes_explored >= node_limit)) {
      out.status = MipStatus::TimeLimit;
      break;
    }
    if (!best_first && incumbent < kInf) {
      global_lb = open.front().bound;  // dive never tracked it; open is all that counts
      for (const Node& nd : open) global_lb = std::min(global_lb, nd.bound);
      std::make_heap(open.begin(), open.end(), NodeWorse{});
      best_first = true;
    }
    Node node;
    if (best_first) {
      node = open.front();
      global_lb = std::max(global_lb, node.bound);
      if (node.bound >= incumbent - prune_eps()) break;  // rest is worse
      if (incumbent - global_lb <= gap_tol * (1.0 + std::abs(incumbent))) break;
      std::pop_heap(open.begin(), open.end(), NodeWorse{});
      open.pop_back();
    } else {
      node = open.back();
      open.pop_back();
    }

    work.var_lower = node.lower;
    work.var_upper = node.upper;
    LpSolution rel = solve_lp(work, tol);
    ++out.nodes_explored;
    out.lp_iterations += rel.iterations;
    if (observer) observer(out.nodes_explored, std::min(global_lb, incumbent), incumbent);

    if (rel.status == LpStatus::Unbounded)
      throw UnboundedProblem("mip: relaxation unbounded over an integer-feasible box");
    if (rel.status == LpStatus::Infeasible) continue;
    if (rel.objective >= incumbent - prune_eps()) continue;

    // most fractional branching candidate
    Index branch = -1;
    double best_dist = -1.0;
    for (Index j : ints) {
      const double v = rel.primal[j];
      const double frac = v - std::floor(v);
      if (std::min(frac, 1.0 - frac) <= tol.integrality) continue;
      const double dist = 0.5 - std::abs(frac - 0.5);
      if (dist > best_dist + 1e-15) {
        best_dist = dist;
        branch = j;
      }
    }

    if (branch < 0) {  // integral: candidate incumbent
      Vec x = rel.primal;
      for (Index j : ints) x[j] = std::round(x[j]);
      const double obj = mip.relaxation.objective.dot(x);
      if (obj < incumbent) {
        incumbent = obj;
        incumbent_x = x;
      }
      continue;
    }

    auto push_node = [&](Node&& nd) {
      open.push_back(std::move(nd));
      if (best_first) std::push_heap(open.begin(), open.end(), NodeWorse{});
    };
    const double v = rel.primal[branch];
    Node down{node.lower, node.upper, rel.objective, next_id++};
    down.upper[branch] = std::floor(v);
    Node up{node.lower, node.upper, rel.objective, next_id++};
    up.lower[branch] = std::ceil(v);
    const bool down_ok = down.lower[branch] <= down.upper[branch];
    const bool up_ok = up.lower[branch] <= up.upper[branch];
    // dive order: the side the fraction leans to is pushed last, popped next
    if (v - std::floor(v) > 0.5) {
      if (down_ok) push_node(std::move(down));
      if (up_ok) push_node(std::move(up));
    } else {
      if (up_ok) push_node(std::move(up));
      if (down_ok) push_node(std::move(down));
    }
  }

  if (out.status != MipStatus::TimeLimit) {
    if (incumbent == kInf) {
      out.status = MipStatus::Infeasible;
      out.best_bound = kInf;
      return out;
    }
    out.status = MipStatus::Optimal;
    out.best_bound =
        open.empty() ? incumbent : std::min(std::max(global_lb, open.front().bound), incumbent);
  } else {
    // truncated search: the proved bound is the weakest unexplored subtree
    double proved = incumbent;
    for (const Node& nd : open) proved = std::min(proved, nd.bound);
    out.best_bound = proved;
  }
  if (incumbent < kInf) {
    out.primal = incumbent_x;
    out.objective = incumbent;
  }
  return out;
}

}  // namespace rlbd
