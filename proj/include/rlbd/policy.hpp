#pragma once

#include "rlbd/benders.hpp"
#include "rlbd/features.hpp"
#include "rlbd/rng.hpp"

namespace rlbd {

// two hidden ReLU layers and a scalar head; shared across candidates
struct MlpCoeffs {
  Mat w1;  // h1 x in
  Vec b1;
  Mat w2;  // h2 x h1
  Vec b2;
  Vec w3;  // h2
  double b3 = 0.0;
};

struct AdamState {
  MlpCoeffs m, v;
  long step = 0;
};

struct PolicyConfig {
  int input_width = kMinInputWidth;
  int hidden1 = 64;
  int hidden2 = 64;
};

struct PolicyParams {
  PolicyConfig config;
  MlpCoeffs net;
  AdamState adam;
};

// ordered without-replacement draw plus everything REINFORCE must remember
struct ActionSample {
  std::vector<Index> indices;
  double joint_log_prob = 0.0;
  std::vector<double> step_probs;  // original pi(a_i), before renormalization
};

// weights and biases uniform in +-sqrt(1/fan_in), filled in a fixed order so a
// seed names the network exactly
PolicyParams init_policy(const PolicyConfig& cfg, std::uint64_t seed);

MlpCoeffs zero_like(const MlpCoeffs& shape);

// logits, one per state row; throws if the row width disagrees with config
Vec policy_forward(const PolicyParams& params, const Mat& states);

// max-subtracted: exact for any logit range the network can produce
Vec softmax(const Vec& logits);

// log of  prod_i  pi(a_i) / (1 - sum_{j<i} pi(a_j))
double action_log_prob(const Vec& probs, const std::vector<Index>& indices);

// Sequential masked draw; k >= |probs| degenerates to all indices in
// probability-sorted order (ties to the lowest index) without consuming rng.
ActionSample sample_without_replacement(const Vec& probs, int k, CounterRng& rng);

// k largest logits, ties to the lowest index
std::vector<Index> greedy_top_k(const Vec& logits, int k);

struct EpisodeStepGrad {
  Mat states;           // the matrix the action was sampled from
  ActionSample action;  // indices in sampled order
  double weight = 0.0;  // return-to-go G_t
};

// exact reverse-mode gradient of  sum_t weight_t * log P(A_t | s_t)
MlpCoeffs logprob_gradient(const PolicyParams& params,
                           const std::vector<EpisodeStepGrad>& steps);

// gradient-ascent Adam step (REINFORCE maximizes the return)
void adam_ascent(PolicyParams& params, const MlpCoeffs& grad, double learning_rate,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Selectors over the shared network. The params reference must outlive the
// selector; the trainer updates it between episodes.
std::unique_ptr<CutSelector> make_policy_stochastic(PolicyParams& params, int k,
                                                    std::uint64_t seed,
                                                    const FeatureConfig& fcfg = {});
std::unique_ptr<CutSelector> make_policy_greedy(const PolicyParams& params, int k,
                                                const FeatureConfig& fcfg = {});

}  // namespace rlbd
