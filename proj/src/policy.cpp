#include "rlbd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rlbd {
namespace {

// fill order is part of the format: row-major per matrix, then the bias
void fill_uniform(Mat& m, CounterRng& rng, double bound) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
}

void fill_uniform(Vec& v, CounterRng& rng, double bound) {
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
}

}  // namespace

PolicyParams init_policy(const PolicyConfig& cfg, std::uint64_t seed) {
  if (cfg.input_width < kMinInputWidth || cfg.hidden1 < 1 || cfg.hidden2 < 1)
    throw std::invalid_argument("policy shape out of range");
  PolicyParams p;
  p.config = cfg;
  p.net.w1 = Mat(cfg.hidden1, cfg.input_width);
  p.net.b1 = Vec(cfg.hidden1);
  p.net.w2 = Mat(cfg.hidden2, cfg.hidden1);
  p.net.b2 = Vec(cfg.hidden2);
  p.net.w3 = Vec(cfg.hidden2);

  CounterRng rng(seed);
  const double s1 = std::sqrt(1.0 / cfg.input_width);
  const double s2 = std::sqrt(1.0 / cfg.hidden1);
  const double s3 = std::sqrt(1.0 / cfg.hidden2);
  fill_uniform(p.net.w1, rng, s1);
  fill_uniform(p.net.b1, rng, s1);
  fill_uniform(p.net.w2, rng, s2);
  fill_uniform(p.net.b2, rng, s2);
  fill_uniform(p.net.w3, rng, s3);
  p.net.b3 = rng.uniform(-s3, s3);

  p.adam.m = zero_like(p.net);
  p.adam.v = zero_like(p.net);
  return p;
}

MlpCoeffs zero_like(const MlpCoeffs& shape) {
  MlpCoeffs z;
  z.w1 = Mat::Zero(shape.w1.rows(), shape.w1.cols());
  z.b1 = Vec::Zero(shape.b1.size());
  z.w2 = Mat::Zero(shape.w2.rows(), shape.w2.cols());
  z.b2 = Vec::Zero(shape.b2.size());
  z.w3 = Vec::Zero(shape.w3.size());
  z.b3 = 0.0;
  return z;
}

Vec policy_forward(const PolicyParams& params, const Mat& states) {
  if (states.cols() != params.config.input_width)
    throw std::invalid_argument("state width does not match the policy input width");
  const MlpCoeffs& n = params.net;
  Mat h1 = ((states * n.w1.transpose()).rowwise() + n.b1.transpose()).cwiseMax(0.0);
  Mat h2 = ((h1 * n.w2.transpose()).rowwise() + n.b2.transpose()).cwiseMax(0.0);
  return ((h2 * n.w3).array() + n.b3).matrix();
}

Vec softmax(const Vec& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax of nothing");
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

double action_log_prob(const Vec& probs, const std::vector<Index>& indices) {
  double log_p = 0.0;
  double remaining = 1.0;
  for (Index a : indices) {
    log_p += std::log(probs[a]) - std::log(remaining);
    remaining -= probs[a];
  }
  return log_p;
}

ActionSample sample_without_replacement(const Vec& probs, int k, CounterRng& rng) {
  const Index s = probs.size();
  ActionSample out;

  if (k >= s) {  // every cut gets added: order deterministically by mass
    std::vector<Index> order(static_cast<size_t>(s));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
    });
    out.indices = std::move(order);
  } else {
    std::vector<bool> taken(static_cast<size_t>(s), false);
    double mass = 1.0;
    for (int i = 0; i < k; ++i) {
      const double target = rng.uniform() * mass;
      double acc = 0.0;
      Index pick = -1;
      for (Index w = 0; w < s; ++w) {
        if (taken[static_cast<size_t>(w)]) continue;
        acc += probs[w];
        pick = w;
        if (acc >= target) break;  // falls through to the last live index
      }
      taken[static_cast<size_t>(pick)] = true;
      mass -= probs[pick];
      out.indices.push_back(pick);
    }
  }

  out.step_probs.reserve(out.indices.size());
  for (Index a : out.indices) out.step_probs.push_back(probs[a]);
  out.joint_log_prob = action_log_prob(probs, out.indices);
  return out;
}

std::vector<Index> greedy_top_k(const Vec& logits, int k) {
  const Index s = logits.size();
  std::vector<Index> order(static_cast<size_t>(s));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return logits[a] != logits[b] ? logits[a] > logits[b] : a < b;
  });
  order.resize(static_cast<size_t>(std::min<Index>(k, s)));
  return order;
}

MlpCoeffs logprob_gradient(const PolicyParams& params,
                           const std::vector<EpisodeStepGrad>& steps) {
  const MlpCoeffs& n = params.net;
  MlpCoeffs g = zero_like(n);

  for (const EpisodeStepGrad& step : steps) {
    if (step.weight == 0.0 || step.action.indices.empty()) continue;
    const Mat& x = step.states;
    const Index s = x.rows();

    // forward pass kept, pre-activations included, for exact backprop
    Mat a1 = (x * n.w1.transpose()).rowwise() + n.b1.transpose();
    Mat h1 = a1.cwiseMax(0.0);
    Mat a2 = (h1 * n.w2.transpose()).rowwise() + n.b2.transpose();
    Mat h2 = a2.cwiseMax(0.0);
    Vec z = ((h2 * n.w3).array() + n.b3).matrix();
    Vec p = softmax(z);

    // d logP / d p_m = 1{m selected} * (1/p_m + sum of later 1/remaining)
    const auto& idx = step.action.indices;
    const size_t kk = idx.size();
    std::vector<double> remaining(kk);
    double mass = 1.0;
    for (size_t i = 0; i < kk; ++i) {
      remaining[i] = mass;
      mass -= p[idx[i]];
    }
    Vec u = Vec::Zero(s);
    for (size_t i = 0; i < kk; ++i) {
      double later = 0.0;
      for (size_t l = i + 1; l < kk; ++l) later += 1.0 / remaining[l];
      u[idx[i]] = 1.0 / p[idx[i]] + later;
    }
    // through the softmax: dz = p .* (u - u.p)
    Vec dz = (p.array() * (u.array() - u.dot(p)) * step.weight).matrix();

    for (Index w = 0; w < s; ++w) {
      const double up = dz[w];
      if (up == 0.0) continue;
      g.w3 += up * h2.row(w).transpose();
      g.b3 += up;
      Vec mask2 = (a2.row(w).transpose().array() > 0.0).cast<double>().matrix();
      Vec da2 = (up * n.w3).cwiseProduct(mask2);
      g.w2 += da2 * h1.row(w);
      g.b2 += da2;
      Vec mask1 = (a1.row(w).transpose().array() > 0.0).cast<double>().matrix();
      Vec da1 = (n.w2.transpose() * da2).cwiseProduct(mask1);
      g.w1 += da1 * x.row(w);
      g.b1 += da1;
    }
  }
  return g;
}

void adam_ascent(PolicyParams& params, const MlpCoeffs& grad, double learning_rate,
                 double beta1, double beta2, double eps) {
  AdamState& a = params.adam;
  ++a.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(a.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(a.step));

  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
    theta.array() += learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  update(params.net.w1, a.m.w1, a.v.w1, grad.w1);
  update(params.net.b1, a.m.b1, a.v.b1, grad.b1);
  update(params.net.w2, a.m.w2, a.v.w2, grad.w2);
  update(params.net.b2, a.m.b2, a.v.b2, grad.b2);
  update(params.net.w3, a.m.w3, a.v.w3, grad.w3);

  a.m.b3 = beta1 * a.m.b3 + (1.0 - beta1) * grad.b3;
  a.v.b3 = beta2 * a.v.b3 + (1.0 - beta2) * grad.b3 * grad.b3;
  params.net.b3 += learning_rate * (a.m.b3 / c1) / (std::sqrt(a.v.b3 / c2) + eps);
}

namespace {

struct PolicyStochastic final : CutSelector {
  PolicyParams& params;
  int k;
  CounterRng rng;
  FeatureConfig fcfg;

  PolicyStochastic(PolicyParams& p, int k_, std::uint64_t seed, const FeatureConfig& f)
      : params(p), k(k_), rng(seed), fcfg(f) {}

  Selection select(const BendersState& st, const TwoStageProblem& p,
                   const BendersConfig&) override {
    Selection sel;
    sel.state_matrix = build_state_matrix(st, p, fcfg);
    Vec logits = policy_forward(params, sel.state_matrix);
    ActionSample a = sample_without_replacement(softmax(logits), k, rng);
    sel.scenarios = a.indices;
    sel.joint_log_prob = a.joint_log_prob;
    sel.step_probs = a.step_probs;
    return sel;
  }
  std::string name() const override { return "policy-stochastic"; }
};

struct PolicyGreedy final : CutSelector {
  const PolicyParams& params;
  int k;
  FeatureConfig fcfg;

  PolicyGreedy(const PolicyParams& p, int k_, const FeatureConfig& f)
      : params(p), k(k_), fcfg(f) {}

  Selection select(const BendersState& st, const TwoStageProblem& p,
                   const BendersConfig&) override {
    Selection sel;
    sel.state_matrix = build_state_matrix(st, p, fcfg);
    Vec logits = policy_forward(params, sel.state_matrix);
    sel.scenarios = greedy_top_k(logits, k);
    return sel;
  }
  std::string name() const override { return "policy-greedy"; }
};

}  // namespace

std::unique_ptr<CutSelector> make_policy_stochastic(PolicyParams& params, int k,
                                                    std::uint64_t seed,
                                                    const FeatureConfig& fcfg) {
  if (k < 1) throw std::invalid_argument("policy selector needs k >= 1");
  return std::make_unique<PolicyStochastic>(params, k, seed, fcfg);
}

std::unique_ptr<CutSelector> make_policy_greedy(const PolicyParams& params, int k,
                                                const FeatureConfig& fcfg) {
  if (k < 1) throw std::invalid_argument("policy selector needs k >= 1");
  return std::make_unique<PolicyGreedy>(params, k, fcfg);
}

}  // namespace rlbd
