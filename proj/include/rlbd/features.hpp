#pragma once

#include "rlbd/benders.hpp"

namespace rlbd {

inline constexpr int kGlobalFeatureCount = 19;
inline constexpr int kLocalFeatureCount = 5;
inline constexpr int kMinInputWidth = kGlobalFeatureCount + kLocalFeatureCount;

struct FeatureConfig {
  int input_width = kMinInputWidth;  // >= 24; extra columns between the blocks stay zero
  double t_max_norm = 500.0;         // divides the iteration index and the cut count
  double eps = 1e-8;                 // guards the improvement-rate denominators
};

// sign(x) * log(1 + |x|): order-preserving squash for magnitude features so the
// network never sees raw bound-scale numbers
double signed_log(double x);

// The 19 shared entries, in order: t, LB, UB, Gap, dLB, dUB, dGap, rate_gap,
// rate_lb, rate_ub, mean violation, max violation, K (cuts added last
// iteration), cumulative cuts, master time, then mean/max/min/std of the
// scenario recourse values. Deltas are improvements (dUB = prev - current) and
// read zero at t=1. Mean violation and mean recourse weight by scenario
// probability; the recourse std is the plain population std of the value set.
// Magnitudes pass through signed_log; ratios, rates and counts stay raw except
// t and the cumulative count, which divide by t_max_norm.
Vec global_features(const BendersState& st, const TwoStageProblem& p,
                    const FeatureConfig& cfg = {});

// one row per candidate: [global | padding | v, |pi|, |pi.h|, |pi^T T|, NC]
// with the local magnitudes signed_log-scaled and NC raw
Mat build_state_matrix(const BendersState& st, const TwoStageProblem& p,
                       const FeatureConfig& cfg = {});

}  // namespace rlbd
