#pragma once

#include "rlbd/benders.hpp"
#include "rlbd/policy.hpp"

namespace rlbd {

struct RewardConfig {
  double alpha = 0.01;   // gap-progress weight
  double beta = 0.001;   // master-time weight
  double lambda = 0.001; // per-step penalty
  double t_ref = 0.1;    // seconds; normalizes master time
  double gamma = 0.99;   // discount
  TimingMode timing = TimingMode::Wallclock;
};

struct TrainConfig {
  int k = 5;
  int t_max = 500;
  int episodes = 200;
  double learning_rate = 1e-3;
  double eps_tol = 1e-6;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables the checkpoint sink
  FeatureConfig features;    // t_max_norm should track t_max
  PolicyConfig policy;       // input_width must equal features.input_width
  BendersConfig benders;     // eps_tol/t_max/timing are overridden per episode
};

struct EpisodeStep {
  Mat states;
  ActionSample action;
  double reward = 0.0;
  double gap = 0.0;  // the per-iteration gap the reward series is built from
  double master_time = 0.0;
  double g = 0.0;  // return-to-go
};

struct EpisodeTrace {
  std::vector<EpisodeStep> steps;
  bool converged = false;
  double final_gap = kInf;  // best-so-far gap at termination
  double total_reward = 0.0;
  double elapsed_time = 0.0;
  double objective = kInf;
  double lower_bound = -kInf;
};

// r = alpha*(log gap_prev - log gap_now) + beta*(-master_time/t_ref) - lambda,
// with gaps floored at 1e-12 so a closed gap cannot produce an infinity
double step_reward(double gap_prev, double gap_now, double master_time,
                   const RewardConfig& cfg);

// G_t = r_t + gamma*G_{t+1}, computed backward with G after the end = 0; every
// reward is counted exactly once
std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma);

// One full decomposition trajectory under the stochastic policy. The first
// step's gap term compares the gap to itself, so its reward reduces to the
// time and penalty terms.
EpisodeTrace run_episode(const TwoStageProblem& p, PolicyParams& params,
                         const RewardConfig& rcfg, const TrainConfig& tcfg,
                         std::uint64_t episode_seed);

// one Adam ascent step on  sum_t G_t * log P(A_t | s_t)
void apply_reinforce_update(PolicyParams& params, const EpisodeTrace& trace,
                            double learning_rate);

struct EpisodeSummary {
  int episode = 0;
  double total_reward = 0.0;
  int steps = 0;
  double final_gap = kInf;
  double elapsed_time = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<EpisodeSummary> curves;
};

using CheckpointSink = std::function<void(int episode, const PolicyParams&)>;

// E sequential episodes on one training problem, one update per episode.
// Episodes aborted by numerical failure are logged to stderr and skipped.
TrainResult train(const TwoStageProblem& p, const TrainConfig& tcfg,
                  const RewardConfig& rcfg, const CheckpointSink& sink = {});

// Synthetic three-candidate single-step environment: reward 1 exactly when the
// favored index is picked (K=1, frozen state). Exercises the full update path
// without any solver in the loop.
struct BanditResult {
  PolicyParams params;
  Vec final_probs;
  std::vector<double> rewards;
};
BanditResult train_micro_bandit(int episodes, double learning_rate, std::uint64_t seed,
                                int favored = 2);

}  // namespace rlbd
