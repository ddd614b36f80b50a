#include "rlbd/features.hpp"

#include <cmath>
#include <stdexcept>

namespace rlbd {

double signed_log(double x) { return x >= 0 ? std::log1p(x) : -std::log1p(-x); }

Vec global_features(const BendersState& st, const TwoStageProblem& p,
                    const FeatureConfig& cfg) {
  Vec g = Vec::Zero(kGlobalFeatureCount);
  const double eps = cfg.eps;

  g[0] = static_cast<double>(st.t) / cfg.t_max_norm;
  g[1] = signed_log(st.lb);
  g[2] = signed_log(st.ub_raw);
  g[3] = st.gap_raw;
  if (st.has_prev) {
    const double d_lb = st.lb - st.lb_prev;
    const double d_ub = st.ub_raw_prev - st.ub_raw;
    const double d_gap = st.gap_raw_prev - st.gap_raw;
    g[4] = signed_log(d_lb);
    g[5] = signed_log(d_ub);
    g[6] = d_gap;
    g[7] = d_gap / (st.gap_raw_prev + eps);
    g[8] = d_lb / (std::abs(st.lb_prev) + eps);
    g[9] = d_ub / (std::abs(st.ub_raw_prev) + eps);
  }

  const Index s = st.violations.size();
  if (s > 0) {
    double v_bar = 0.0;
    for (Index w = 0; w < s; ++w)
      v_bar += st.violations[w] * p.scenarios[static_cast<size_t>(w)].probability;
    g[10] = signed_log(v_bar);
    g[11] = signed_log(st.violations.maxCoeff());
  }

  g[12] = static_cast<double>(st.cuts_added_last);
  g[13] = static_cast<double>(st.cum_cuts) / cfg.t_max_norm;
  g[14] = signed_log(st.master_time);

  const Index n = st.recourse_values.size();
  if (n > 0) {
    double q_bar = 0.0;
    for (Index w = 0; w < n; ++w)
      q_bar += st.recourse_values[w] * p.scenarios[static_cast<size_t>(w)].probability;
    const double plain_mean = st.recourse_values.mean();
    const double q_var =
        (st.recourse_values.array() - plain_mean).square().sum() / static_cast<double>(n);
    g[15] = signed_log(q_bar);
    g[16] = signed_log(st.recourse_values.maxCoeff());
    g[17] = signed_log(st.recourse_values.minCoeff());
    g[18] = signed_log(std::sqrt(q_var));
  }
  return g;
}

Mat build_state_matrix(const BendersState& st, const TwoStageProblem& p,
                       const FeatureConfig& cfg) {
  if (cfg.input_width < kMinInputWidth)
    throw std::invalid_argument("feature width must be at least 24");
  const Index s = static_cast<Index>(st.candidates.size());
  const Index local0 = cfg.input_width - kLocalFeatureCount;

  Vec g = global_features(st, p, cfg);
  Mat m = Mat::Zero(s, cfg.input_width);
  for (Index w = 0; w < s; ++w) {
    m.row(w).head(kGlobalFeatureCount) = g.transpose();
    const Cut& c = st.candidates[static_cast<size_t>(w)];
    m(w, local0 + 0) = signed_log(st.violations[w]);
    m(w, local0 + 1) = signed_log(c.dual.norm());
    m(w, local0 + 2) = signed_log(std::abs(c.dual.dot(p.scenarios[static_cast<size_t>(w)].h)));
    m(w, local0 + 3) = signed_log(c.coeffs.norm());
    m(w, local0 + 4) = static_cast<double>(st.nc[static_cast<size_t>(w)]);
  }
  return m;
}

}  // namespace rlbd
