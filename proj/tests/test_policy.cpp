#include <doctest.h>

#include <cmath>
#include <map>

#include "rlbd/ev_model.hpp"
#include "rlbd/policy.hpp"

using namespace rlbd;

namespace {

PolicyConfig tiny_config() {
  PolicyConfig cfg;
  cfg.input_width = kMinInputWidth;
  cfg.hidden1 = 8;
  cfg.hidden2 = 7;
  return cfg;
}

Mat random_states(CounterRng& rng, Index rows, Index width) {
  Mat m(rows, width);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < width; ++j) m(i, j) = rng.uniform(-2.0, 2.0);
  return m;
}

// every coefficient as one flat list, in the same order for net and gradient
std::vector<double*> coeff_ptrs(MlpCoeffs& n) {
  std::vector<double*> ps;
  auto add = [&ps](double* d, Index count) {
    for (Index i = 0; i < count; ++i) ps.push_back(d + i);
  };
  add(n.w1.data(), n.w1.size());
  add(n.b1.data(), n.b1.size());
  add(n.w2.data(), n.w2.size());
  add(n.b2.data(), n.b2.size());
  add(n.w3.data(), n.w3.size());
  ps.push_back(&n.b3);
  return ps;
}

}  // namespace

TEST_CASE("zero network scores everything identically") {
  PolicyParams p = init_policy(tiny_config(), 1);
  p.net = zero_like(p.net);
  CounterRng rng(2);
  Mat states = random_states(rng, 5, 24);
  Vec z = policy_forward(p, states);
  CHECK(z.isZero(0.0));
  Vec pr = softmax(z);
  for (Index i = 0; i < 5; ++i) CHECK(pr[i] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("shared weights give identical candidates identical logits") {
  PolicyParams p = init_policy(tiny_config(), 3);
  CounterRng rng(4);
  Mat states = random_states(rng, 4, 24);
  states.row(2) = states.row(0);
  Vec z = policy_forward(p, states);
  CHECK(z[2] == z[0]);

  Mat narrow = random_states(rng, 3, 20);
  CHECK_THROWS_AS(policy_forward(p, narrow), std::invalid_argument);
}

TEST_CASE("forward pass matches a straight-line recomputation") {
  PolicyParams p = init_policy(tiny_config(), 7);
  CounterRng rng(8);
  Mat states = random_states(rng, 6, 24);
  Vec z = policy_forward(p, states);

  const MlpCoeffs& n = p.net;
  for (Index r = 0; r < states.rows(); ++r) {
    Vec h1(n.b1.size());
    for (Index i = 0; i < h1.size(); ++i) {
      double acc = n.b1[i];
      for (Index j = 0; j < states.cols(); ++j) acc += n.w1(i, j) * states(r, j);
      h1[i] = std::max(0.0, acc);
    }
    Vec h2(n.b2.size());
    for (Index i = 0; i < h2.size(); ++i) {
      double acc = n.b2[i];
      for (Index j = 0; j < h1.size(); ++j) acc += n.w2(i, j) * h1[j];
      h2[i] = std::max(0.0, acc);
    }
    double out = n.b3;
    for (Index j = 0; j < h2.size(); ++j) out += n.w3[j] * h2[j];
    CHECK(z[r] == doctest::Approx(out).epsilon(1e-12));
  }
}

TEST_CASE("softmax closed forms and stability") {
  Vec three = Vec::Zero(3);
  Vec p3 = softmax(three);
  for (int i = 0; i < 3; ++i) CHECK(p3[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Vec two(2);
  two << std::log(2.0), 0.0;
  Vec p2 = softmax(two);
  CHECK(p2[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(p2[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));

  Vec shifted = two.array() + 123.456;
  Vec ps = softmax(shifted);
  CHECK(ps[0] == doctest::Approx(p2[0]).epsilon(1e-13));

  Vec extreme(3);
  extreme << 700.0, 0.0, -700.0;
  Vec pe = softmax(extreme);
  CHECK(pe.allFinite());
  CHECK(pe.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pe[0] > 0.999);
  CHECK(pe[2] >= 0.0);
}

TEST_CASE("joint probability follows the renormalized product") {
  Vec probs(3);
  probs << 0.5, 0.3, 0.2;
  CHECK(std::exp(action_log_prob(probs, {0, 1})) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::exp(action_log_prob(probs, {1, 0})) ==
        doctest::Approx(0.3 * 0.5 / 0.7).epsilon(1e-12));
  CHECK(action_log_prob(probs, {0}) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(action_log_prob(probs, {0, 1, 2}) <= 0.0);
}

TEST_CASE("exhaustive draw keeps the probability order") {
  Vec probs(3);
  probs << 0.2, 0.5, 0.3;
  CounterRng rng(1);
  const auto before = rng.counter();
  ActionSample a = sample_without_replacement(probs, 5, rng);
  CHECK(rng.counter() == before);  // deterministic branch draws nothing
  CHECK(a.indices == std::vector<Index>{1, 2, 0});
  CHECK(std::exp(a.joint_log_prob) == doctest::Approx(0.3).epsilon(1e-12));

  Vec tied(3);
  tied << 0.25, 0.25, 0.5;
  ActionSample t = sample_without_replacement(tied, 3, rng);
  CHECK(t.indices == std::vector<Index>{2, 0, 1});
}

TEST_CASE("sampling law matches the analytic pair distribution") {
  Vec logits(4);
  logits << 0.1, -0.4, 0.7, 0.0;
  Vec probs = softmax(logits);

  CounterRng rng(42);
  const int n = 100000;
  std::map<std::pair<Index, Index>, int> counts;
  for (int i = 0; i < n; ++i) {
    ActionSample a = sample_without_replacement(probs, 2, rng);
    REQUIRE(a.indices.size() == 2);
    REQUIRE(a.indices[0] != a.indices[1]);
    ++counts[{a.indices[0], a.indices[1]}];
  }

  double total_analytic = 0.0;
  for (Index a = 0; a < 4; ++a) {
    for (Index b = 0; b < 4; ++b) {
      if (a == b) continue;
      const double analytic = probs[a] * probs[b] / (1.0 - probs[a]);
      total_analytic += analytic;
      const double empirical = static_cast<double>(counts[{a, b}]) / n;
      CHECK(std::abs(empirical - analytic) < 0.01);
    }
  }
  CHECK(total_analytic == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("greedy selection ranks logits with index tie-breaks") {
  Vec logits(3);
  logits << 3.0, 1.0, 2.0;
  CHECK(greedy_top_k(logits, 2) == std::vector<Index>{0, 2});
  CHECK(greedy_top_k(logits, 3) == std::vector<Index>{0, 2, 1});
  CHECK(greedy_top_k(logits, 9) == std::vector<Index>{0, 2, 1});

  Vec equal = Vec::Constant(4, 1.5);
  CHECK(greedy_top_k(equal, 2) == std::vector<Index>{0, 1});

  CounterRng rng(10);
  Vec random(6);
  for (Index i = 0; i < 6; ++i) random[i] = rng.uniform(-3.0, 3.0);
  Vec affine = (2.5 * random.array() + 7.0).matrix();
  for (int k = 1; k <= 6; ++k) CHECK(greedy_top_k(random, k) == greedy_top_k(affine, k));
}

TEST_CASE("log-probability gradient matches central finite differences") {
  PolicyConfig cfg = tiny_config();
  const double step = 1e-5;

  for (int trial = 0; trial < 10; ++trial) {
    PolicyParams params = init_policy(cfg, 100 + static_cast<std::uint64_t>(trial));
    CounterRng rng(200 + static_cast<std::uint64_t>(trial));
    Mat states = random_states(rng, 5, cfg.input_width);
    Vec probs = softmax(policy_forward(params, states));
    ActionSample action = sample_without_replacement(probs, 2, rng);

    std::vector<EpisodeStepGrad> steps;
    steps.push_back({states, action, 1.7});
    MlpCoeffs grad = logprob_gradient(params, steps);

    auto value = [&]() {
      Vec pr = softmax(policy_forward(params, states));
      return 1.7 * action_log_prob(pr, action.indices);
    };

    std::vector<double*> theta = coeff_ptrs(params.net);
    std::vector<double*> g = coeff_ptrs(grad);
    REQUIRE(theta.size() == g.size());
    for (size_t i = 0; i < theta.size(); ++i) {
      const double saved = *theta[i];
      *theta[i] = saved + step;
      const double up = value();
      *theta[i] = saved - step;
      const double down = value();
      *theta[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      CHECK(std::abs(*g[i] - fd) <= std::max(1e-7, 1e-4 * std::abs(fd)));
    }
  }
}

TEST_CASE("multi-step gradients accumulate over the episode") {
  PolicyConfig cfg = tiny_config();
  PolicyParams params = init_policy(cfg, 321);
  CounterRng rng(654);

  std::vector<EpisodeStepGrad> steps;
  std::vector<double> weights = {0.9, -1.3, 0.4};
  std::vector<int> ks = {1, 2, 4};  // includes the k >= |candidates| branch
  for (int i = 0; i < 3; ++i) {
    Mat states = random_states(rng, 4, cfg.input_width);
    Vec probs = softmax(policy_forward(params, states));
    ActionSample action = sample_without_replacement(probs, ks[static_cast<size_t>(i)], rng);
    steps.push_back({states, action, weights[static_cast<size_t>(i)]});
  }
  MlpCoeffs grad = logprob_gradient(params, steps);

  auto value = [&]() {
    double acc = 0.0;
    for (const auto& s : steps) {
      Vec pr = softmax(policy_forward(params, s.states));
      acc += s.weight * action_log_prob(pr, s.action.indices);
    }
    return acc;
  };

  const double step = 1e-5;
  std::vector<double*> theta = coeff_ptrs(params.net);
  std::vector<double*> g = coeff_ptrs(grad);
  for (size_t i = 0; i < theta.size(); i += 7) {  // spot-check a spread of coords
    const double saved = *theta[i];
    *theta[i] = saved + step;
    const double up = value();
    *theta[i] = saved - step;
    const double down = value();
    *theta[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    CHECK(std::abs(*g[i] - fd) <= std::max(1e-7, 1e-4 * std::abs(fd)));
  }
}

TEST_CASE("degenerate gradients vanish") {
  PolicyConfig cfg = tiny_config();
  PolicyParams params = init_policy(cfg, 11);
  CounterRng rng(12);

  Mat states = random_states(rng, 4, cfg.input_width);
  Vec probs = softmax(policy_forward(params, states));
  ActionSample action = sample_without_replacement(probs, 2, rng);

  // zero weights
  MlpCoeffs g0 = logprob_gradient(params, {{states, action, 0.0}});
  CHECK(g0.w1.isZero(0.0));
  CHECK(g0.b3 == 0.0);

  // one candidate: its probability is pinned at 1, nothing to push
  Mat one = random_states(rng, 1, cfg.input_width);
  Vec probs1 = softmax(policy_forward(params, one));
  ActionSample a1 = sample_without_replacement(probs1, 1, rng);
  CHECK(a1.joint_log_prob == 0.0);
  MlpCoeffs g1 = logprob_gradient(params, {{one, a1, 2.0}});
  CHECK(g1.w1.isZero(1e-14));
  CHECK(g1.w2.isZero(1e-14));
  CHECK(std::abs(g1.b3) <= 1e-14);
}

TEST_CASE("adam ascent follows the bias-corrected moments") {
  PolicyConfig cfg;
  cfg.input_width = 24;
  cfg.hidden1 = 2;
  cfg.hidden2 = 2;
  PolicyParams p = init_policy(cfg, 99);
  p.net = zero_like(p.net);

  MlpCoeffs g = zero_like(p.net);
  g.b3 = 0.5;
  g.w3[0] = -2.0;

  const double lr = 0.1;
  adam_ascent(p, g, lr);
  // first step: mhat = g, vhat = g^2, update = lr * g / (|g| + eps)
  CHECK(p.net.b3 == doctest::Approx(lr * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p.net.w3[0] == doctest::Approx(-lr * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(p.net.w3[1] == 0.0);
  CHECK(p.adam.step == 1);

  // second step with the same gradient, checked against the closed form
  const double b3_before = p.net.b3;
  adam_ascent(p, g, lr);
  const double m2 = 0.9 * (0.1 * 0.5) + 0.1 * 0.5;
  const double v2 = 0.999 * (0.001 * 0.25) + 0.001 * 0.25;
  const double mhat = m2 / (1.0 - 0.9 * 0.9);
  const double vhat = v2 / (1.0 - 0.999 * 0.999);
  CHECK(p.net.b3 ==
        doctest::Approx(b3_before + lr * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("seeded initialization is reproducible and bounded") {
  PolicyConfig cfg;  // default 64/64 shape
  PolicyParams a = init_policy(cfg, 2024);
  PolicyParams b = init_policy(cfg, 2024);
  PolicyParams c = init_policy(cfg, 2025);

  CHECK(a.net.w1 == b.net.w1);
  CHECK(a.net.b2 == b.net.b2);
  CHECK(a.net.b3 == b.net.b3);
  CHECK(a.net.w1 != c.net.w1);

  CHECK(a.net.w1.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / cfg.input_width));
  CHECK(a.net.w2.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / cfg.hidden1));
  CHECK(a.net.w3.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / cfg.hidden2));
  CHECK(a.adam.m.w1.isZero(0.0));
  CHECK(a.adam.step == 0);

  PolicyConfig bad;
  bad.input_width = 10;
  CHECK_THROWS_AS(init_policy(bad, 1), std::invalid_argument);
}

TEST_CASE("policy selectors drive the decomposition to the optimum") {
  EvInstance inst = generate_ev_instance(33, 2, 3);
  Mat d = generate_demand_scenarios(34, inst, 4, DemandShape::Normal);
  attach_scenarios(inst, d, DemandShape::Normal);
  TwoStageProblem p = ev_to_standard_form(inst);

  auto all = make_select_all();
  BendersRun reference = run_benders(p, *all, {});
  REQUIRE(reference.status == BendersStatus::Converged);

  PolicyParams params = init_policy({}, 5);

  auto stochastic = make_policy_stochastic(params, 2, 77);
  int checked = 0;
  auto observer = [&](const BendersState&, const Selection& sel) {
    REQUIRE(sel.scenarios.size() == 2);
    CHECK(sel.joint_log_prob <= 0.0);
    CHECK(std::isfinite(sel.joint_log_prob));
    CHECK(sel.step_probs.size() == 2);
    CHECK(sel.state_matrix.rows() == 4);
    ++checked;
  };
  BendersRun sto = run_benders(p, *stochastic, {}, observer);
  CHECK(sto.status == BendersStatus::Converged);
  CHECK(sto.objective == doctest::Approx(reference.objective).epsilon(2e-6));
  CHECK(checked == sto.iterations);

  auto greedy = make_policy_greedy(params, 4);
  BendersRun gre = run_benders(p, *greedy, {});
  CHECK(gre.status == BendersStatus::Converged);
  CHECK(gre.objective == doctest::Approx(reference.objective).epsilon(2e-6));
}
