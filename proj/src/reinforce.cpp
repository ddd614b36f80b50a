#include "rlbd/reinforce.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace rlbd {

double step_reward(double gap_prev, double gap_now, double master_time,
                   const RewardConfig& cfg) {
  const double floor = 1e-12;
  const double f = std::log(std::max(gap_prev, floor)) - std::log(std::max(gap_now, floor));
  const double l = -master_time / cfg.t_ref;
  return cfg.alpha * f + cfg.beta * l - cfg.lambda;
}

std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("no rewards to accumulate");
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

EpisodeTrace run_episode(const TwoStageProblem& p, PolicyParams& params,
                         const RewardConfig& rcfg, const TrainConfig& tcfg,
                         std::uint64_t episode_seed) {
  if (tcfg.policy.input_width != tcfg.features.input_width)
    throw std::invalid_argument("policy and feature widths disagree");

  BendersConfig bc = tcfg.benders;
  bc.eps_tol = tcfg.eps_tol;
  bc.t_max = tcfg.t_max;
  bc.timing = rcfg.timing;

  EpisodeTrace trace;
  auto observer = [&trace](const BendersState& st, const Selection& sel) {
    EpisodeStep step;
    step.states = sel.state_matrix;
    step.action.indices = sel.scenarios;
    step.action.joint_log_prob = sel.joint_log_prob;
    step.action.step_probs = sel.step_probs;
    step.gap = st.gap_raw;
    step.master_time = st.master_time;
    trace.steps.push_back(std::move(step));
  };

  auto selector = make_policy_stochastic(params, tcfg.k, episode_seed, tcfg.features);
  BendersRun run = run_benders(p, *selector, bc, observer);

  std::vector<double> rewards(trace.steps.size());
  for (size_t t = 0; t < trace.steps.size(); ++t) {
    const double gap_prev = t == 0 ? trace.steps[0].gap : trace.steps[t - 1].gap;
    rewards[t] = step_reward(gap_prev, trace.steps[t].gap, trace.steps[t].master_time, rcfg);
  }
  std::vector<double> g = returns_to_go(rewards, rcfg.gamma);
  for (size_t t = 0; t < trace.steps.size(); ++t) {
    trace.steps[t].reward = rewards[t];
    trace.steps[t].g = g[t];
    trace.total_reward += rewards[t];
  }

  trace.converged = run.status == BendersStatus::Converged;
  trace.final_gap = run.gap;
  trace.elapsed_time = run.total_time;
  trace.objective = run.objective;
  trace.lower_bound = run.lb;
  return trace;
}

void apply_reinforce_update(PolicyParams& params, const EpisodeTrace& trace,
                            double learning_rate) {
  std::vector<EpisodeStepGrad> steps;
  steps.reserve(trace.steps.size());
  for (const EpisodeStep& s : trace.steps) steps.push_back({s.states, s.action, s.g});
  MlpCoeffs grad = logprob_gradient(params, steps);
  adam_ascent(params, grad, learning_rate);
}

TrainResult train(const TwoStageProblem& p, const TrainConfig& tcfg,
                  const RewardConfig& rcfg, const CheckpointSink& sink) {
  if (tcfg.episodes < 1 || tcfg.k < 1) throw std::invalid_argument("bad train config");

  TrainResult out;
  out.params = init_policy(tcfg.policy, tcfg.seed);
  CounterRng seed_stream(tcfg.seed);

  for (int e = 1; e <= tcfg.episodes; ++e) {
    const std::uint64_t episode_seed = seed_stream.next_u64();
    EpisodeTrace trace;
    try {
      trace = run_episode(p, out.params, rcfg, tcfg, episode_seed);
    } catch (const NumericalFailure& err) {
      std::cerr << "episode " << e << " discarded: " << err.what() << "\n";
      continue;
    }
    apply_reinforce_update(out.params, trace, tcfg.learning_rate);

    EpisodeSummary row;
    row.episode = e;
    row.total_reward = trace.total_reward;
    row.steps = static_cast<int>(trace.steps.size());
    row.final_gap = trace.final_gap;
    row.elapsed_time = trace.elapsed_time;
    out.curves.push_back(row);

    if (sink && tcfg.checkpoint_every > 0 && e % tcfg.checkpoint_every == 0)
      sink(e, out.params);
  }
  return out;
}

BanditResult train_micro_bandit(int episodes, double learning_rate, std::uint64_t seed,
                                int favored) {
  if (favored < 0 || favored > 2) throw std::invalid_argument("favored arm out of range");

  PolicyConfig pcfg;  // default widths; the bandit state is an arbitrary fixed matrix
  PolicyParams params = init_policy(pcfg, seed);

  Mat states(3, pcfg.input_width);
  CounterRng feature_rng(7);  // frozen: the same three rows every episode
  for (Index i = 0; i < states.rows(); ++i)
    for (Index j = 0; j < states.cols(); ++j) states(i, j) = feature_rng.uniform(-1.0, 1.0);

  BanditResult out{std::move(params), Vec(), {}};
  CounterRng rng(seed + 1);
  for (int e = 0; e < episodes; ++e) {
    Vec probs = softmax(policy_forward(out.params, states));
    ActionSample a = sample_without_replacement(probs, 1, rng);
    const double reward = a.indices[0] == favored ? 1.0 : 0.0;

    EpisodeTrace trace;
    EpisodeStep step;
    step.states = states;
    step.action = a;
    step.reward = reward;
    step.g = reward;  // single step: the return is the reward
    trace.steps.push_back(std::move(step));
    apply_reinforce_update(out.params, trace, learning_rate);
    out.rewards.push_back(reward);
  }
  out.final_probs = softmax(policy_forward(out.params, states));
  return out;
}

}  // namespace rlbd
