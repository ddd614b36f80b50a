#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlbd/io.hpp"

namespace {

using namespace rlbd;

// JSON config for one subcommand. Accepts flat keys ({"seed": 3}) or a file
// shared across subcommands with sections ({"train": {...}, "benchmark":
// {...}}) — only the section matching the subcommand applies. Command-line
// flags win over config values; unknown keys in scope are an error.
std::string config_scalar(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void apply_config_key(CLI::App* sub, const std::string& key, const nlohmann::json& val) {
  if (val.is_object())
    throw std::invalid_argument("config key '" + key + "' nests too deep");
  std::string name = "--" + key;
  std::replace(name.begin(), name.end(), '_', '-');
  CLI::Option* op = sub->get_option_no_throw(name);
  if (op == nullptr)
    throw std::invalid_argument("unknown config key '" + key + "' for '" +
                                sub->get_name() + "'");
  if (op->count() > 0) return;  // explicit flags win
  if (val.is_array())
    for (const auto& v : val) op->add_result(config_scalar(v));
  else
    op->add_result(config_scalar(val));
  op->run_callback();
}

// The library only folds config files into the root command, never a
// subcommand, so the file is merged by hand after flag parsing.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (val.is_object()) {
      if (key != sub->get_name()) continue;  // another subcommand's section
      for (const auto& [k2, v2] : val.items()) apply_config_key(sub, k2, v2);
    } else {
      apply_config_key(sub, key, val);
    }
  }
}

// Checked after the config merge so required values may come from either place.
void require_given(CLI::App* sub, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (sub->get_option_no_throw(n)->count() == 0)
      throw std::invalid_argument(std::string(n) + " is required for '" +
                                  sub->get_name() + "'");
}

CLI::Option* add_config_option(CLI::App* sub, std::string& dest) {
  return sub
      ->add_option("--config", dest,
                   "JSON config file; flat keys or a '" + sub->get_name() + "' section")
      ->check(CLI::ExistingFile);
}

TimingMode parse_timing(const std::string& s) {
  return s == "proxy" ? TimingMode::DeterministicProxy : TimingMode::Wallclock;
}

const char* status_name(BendersStatus s) {
  switch (s) {
    case BendersStatus::Converged: return "converged";
    case BendersStatus::IterationLimit: return "iteration_limit";
    case BendersStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

EvInstance load_instance(const std::string& path) {
  return instance_from_json(read_text_file(path));
}

// Synthesized instance i of a family: parameters drawn from base+2i, demands
// from base+2i+1 (adjacent counter streams never collide).
EvInstance synth_instance(std::uint64_t base, int i, int stations, int sites,
                          int scenarios, DemandShape shape) {
  const std::uint64_t param_seed = base + 2 * static_cast<std::uint64_t>(i);
  EvInstance inst = generate_ev_instance(param_seed, stations, sites);
  Mat d = generate_demand_scenarios(param_seed + 1, inst, scenarios, shape);
  attach_scenarios(inst, d, shape);
  return inst;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::uint64_t seed = 0;
  int count = 1;
  int stations = 4;
  int sites = 6;
  int scenarios = 20;
  std::string shape = "normal";
  std::string out_dir = ".";
};

int cmd_generate(const GenerateArgs& a) {
  const DemandShape shape = demand_shape_from_string(a.shape);
  std::filesystem::create_directories(a.out_dir);
  for (int i = 0; i < a.count; ++i) {
    EvInstance inst = synth_instance(a.seed, i, a.stations, a.sites, a.scenarios, shape);
    const std::string name = "ev_" + std::to_string(a.stations) + "x" +
                             std::to_string(a.sites) + "_" + a.shape + "_s" +
                             std::to_string(inst.seed) + ".json";
    const std::string path = join_path(a.out_dir, name);
    write_text_file(path, instance_to_json(inst));
    std::cout << path << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string instance;
  std::uint64_t seed = 0;
  int episodes = 200;
  int k = 5;
  int t_max = 500;
  double lr = 1e-3;
  double eps_tol = 1e-6;
  double master_gap = 0.0;
  long master_node_limit = 0;
  double alpha = 0.01;
  double beta = 0.001;
  double lambda = 0.001;
  double t_ref = 0.1;
  double gamma = 0.99;
  std::string timing = "wallclock";
  int checkpoint_every = 0;
  std::string out_dir = ".";
  bool grid = false;
  int runs = 5;
  bool micro_bandit = false;
};

TrainConfig base_train_config(const TrainArgs& a) {
  TrainConfig t;
  t.k = a.k;
  t.t_max = a.t_max;
  t.episodes = a.episodes;
  t.learning_rate = a.lr;
  t.eps_tol = a.eps_tol;
  t.benders.master_gap = a.master_gap;
  t.benders.master_node_limit = a.master_node_limit;
  t.checkpoint_every = a.checkpoint_every;
  t.features.t_max_norm = static_cast<double>(a.t_max);
  return t;
}

RewardConfig base_reward_config(const TrainArgs& a) {
  RewardConfig r;
  r.alpha = a.alpha;
  r.beta = a.beta;
  r.lambda = a.lambda;
  r.t_ref = a.t_ref;
  r.gamma = a.gamma;
  r.timing = parse_timing(a.timing);
  return r;
}

void run_one_training(const TwoStageProblem& p, const TrainArgs& a, double alpha,
                      double lambda, std::uint64_t seed, const std::string& tag) {
  TrainConfig tcfg = base_train_config(a);
  tcfg.seed = seed;
  RewardConfig rcfg = base_reward_config(a);
  rcfg.alpha = alpha;
  rcfg.lambda = lambda;

  CheckpointSink sink;
  if (tcfg.checkpoint_every > 0)
    sink = [&](int episode, const PolicyParams& params) {
      const std::string path = join_path(
          a.out_dir, "checkpoint_" + tag + "_e" + std::to_string(episode) + ".json");
      write_text_file(path, checkpoint_to_json({params, tcfg.features.t_max_norm}));
      std::cout << path << "\n";
    };

  TrainResult result = train(p, tcfg, rcfg, sink);

  const std::string curves_path = join_path(a.out_dir, "curves_" + tag + ".csv");
  write_text_file(curves_path, curves_to_csv(result.curves));
  std::cout << curves_path << "\n";

  const std::string ck_path = join_path(a.out_dir, "checkpoint_" + tag + ".json");
  write_text_file(ck_path, checkpoint_to_json({result.params, tcfg.features.t_max_norm}));
  std::cout << ck_path << "\n";
}

int cmd_train(const TrainArgs& a) {
  std::filesystem::create_directories(a.out_dir);

  if (a.micro_bandit) {
    BanditResult r = train_micro_bandit(a.episodes, a.lr, a.seed);
    std::cout << "arm_probabilities=" << format_double(r.final_probs[0]) << " "
              << format_double(r.final_probs[1]) << " " << format_double(r.final_probs[2])
              << "\n";
    std::vector<EpisodeSummary> curves(r.rewards.size());
    for (size_t e = 0; e < r.rewards.size(); ++e)
      curves[e] = {static_cast<int>(e) + 1, r.rewards[e], 1, 0.0, 0.0};
    const std::string path =
        join_path(a.out_dir, "curves_bandit_s" + std::to_string(a.seed) + ".csv");
    write_text_file(path, curves_to_csv(curves));
    std::cout << path << "\n";
    return 0;
  }

  if (a.instance.empty())
    throw std::invalid_argument("train needs --instance (or --micro-bandit)");
  const TwoStageProblem p = ev_to_standard_form(load_instance(a.instance));

  if (a.grid) {
    // the sweep: every reward weighting, several runs each
    const double alphas[] = {0.01, 0.1, 1.0};
    const double lambdas[] = {0.001, 0.01, 0.1};
    for (double alpha : alphas)
      for (double lambda : lambdas)
        for (int r = 0; r < a.runs; ++r) {
          const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(r);
          const std::string tag = "a" + format_double(alpha) + "_l" +
                                  format_double(lambda) + "_s" + std::to_string(seed);
          run_one_training(p, a, alpha, lambda, seed, tag);
        }
    return 0;
  }

  run_one_training(p, a, a.alpha, a.lambda, a.seed, "s" + std::to_string(a.seed));
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string instance;
  std::string checkpoint;
  int k = 5;
  double eps_tol = 0.01;
  double master_gap = 0.0;
  long master_node_limit = 0;
  int t_max = 500;
  double time_limit = 3600.0;
  std::string timing = "wallclock";
  bool dedup = false;
  std::string trace_path;
  std::string feature_dump;
};

int cmd_evaluate(const EvalArgs& a) {
  const TwoStageProblem p = ev_to_standard_form(load_instance(a.instance));
  const Checkpoint ck = checkpoint_from_json(read_text_file(a.checkpoint));

  FeatureConfig fcfg;
  fcfg.input_width = ck.params.config.input_width;
  fcfg.t_max_norm = ck.t_max_norm;
  auto selector = make_policy_greedy(ck.params, a.k, fcfg);

  BendersConfig cfg;
  cfg.eps_tol = a.eps_tol;
  cfg.master_gap = a.master_gap;
  cfg.master_node_limit = a.master_node_limit;
  cfg.t_max = a.t_max;
  cfg.time_limit_s = a.time_limit;
  cfg.timing = parse_timing(a.timing);
  cfg.dedup_cuts = a.dedup;

  std::string dump;
  IterationObserver observer;
  if (!a.feature_dump.empty()) {
    dump = "t,scenario";
    for (int f = 0; f < fcfg.input_width; ++f) dump += ",f" + std::to_string(f);
    dump += '\n';
    observer = [&dump](const BendersState& st, const Selection& sel) {
      for (Index w = 0; w < sel.state_matrix.rows(); ++w) {
        dump += std::to_string(st.t);
        dump += ',';
        dump += std::to_string(w);
        for (Index f = 0; f < sel.state_matrix.cols(); ++f) {
          dump += ',';
          dump += format_double(sel.state_matrix(w, f));
        }
        dump += '\n';
      }
    };
  }

  BendersRun run = run_benders(p, *selector, cfg, observer);

  if (!a.trace_path.empty()) {
    write_text_file(a.trace_path, trace_to_csv(run.state.history));
    std::cout << a.trace_path << "\n";
  }
  if (!a.feature_dump.empty()) {
    write_text_file(a.feature_dump, dump);
    std::cout << a.feature_dump << "\n";
  }

  std::cout << "status=" << status_name(run.status) << "\n"
            << "objective=" << format_double(run.objective) << "\n"
            << "lower_bound=" << format_double(run.lb) << "\n"
            << "gap=" << format_double(run.gap) << "\n"
            << "iterations=" << run.iterations << "\n"
            << "total_cuts=" << run.total_cuts << "\n"
            << "time_s=" << format_double(run.total_time) << "\n"
            << "master_s=" << format_double(run.master_time_total) << "\n";

  const bool no_incumbent = run.x_incumbent.size() == 0;
  return run.status == BendersStatus::TimeLimit && no_incumbent ? 4 : 0;
}

// --------------------------------------------------------------- benchmark

struct BenchArgs {
  std::vector<std::string> methods = {"multi_cut", "single_cut", "random_k"};
  std::vector<std::string> instance_files;
  std::uint64_t seed = 0;
  int instances = 5;
  int stations = 4;
  int sites = 6;
  int scenarios = 20;
  std::string shape = "normal";
  std::string checkpoint;
  int k = 5;
  int replications = 1;
  double eps_tol = 0.01;
  double master_gap = 0.0;
  long master_node_limit = 0;
  int t_max = 500;
  double time_limit = 3600.0;
  std::string timing = "wallclock";
  bool dedup = false;
  std::string out = "benchmark.csv";
};

int cmd_benchmark(const BenchArgs& a) {
  const bool wants_policy =
      std::find(a.methods.begin(), a.methods.end(), "rlbd_greedy") != a.methods.end();
  if (wants_policy && a.checkpoint.empty())
    throw std::invalid_argument("rlbd_greedy needs --checkpoint");

  Checkpoint ck;
  FeatureConfig fcfg;
  if (wants_policy) {
    ck = checkpoint_from_json(read_text_file(a.checkpoint));
    fcfg.input_width = ck.params.config.input_width;
    fcfg.t_max_norm = ck.t_max_norm;
  }

  std::vector<std::pair<std::string, TwoStageProblem>> tests;
  if (!a.instance_files.empty()) {
    for (const std::string& path : a.instance_files)
      tests.emplace_back(std::filesystem::path(path).stem().string(),
                         ev_to_standard_form(load_instance(path)));
  } else {
    for (int i = 0; i < a.instances; ++i) {
      EvInstance inst = synth_instance(a.seed, i, a.stations, a.sites, a.scenarios,
                                       demand_shape_from_string(a.shape));
      tests.emplace_back("s" + std::to_string(inst.seed), ev_to_standard_form(inst));
    }
  }

  BendersConfig cfg;
  cfg.eps_tol = a.eps_tol;
  cfg.master_gap = a.master_gap;
  cfg.master_node_limit = a.master_node_limit;
  cfg.t_max = a.t_max;
  cfg.time_limit_s = a.time_limit;
  cfg.timing = parse_timing(a.timing);
  cfg.dedup_cuts = a.dedup;

  // instance seeds stop at base+2*instances, so selector seeds start there
  const std::uint64_t selector_base = a.seed + 2 * static_cast<std::uint64_t>(a.instances);

  std::vector<BenchmarkRow> rows;
  bool stranded = false;  // some run hit the time limit with nothing to report
  for (const std::string& method : a.methods)
    for (size_t i = 0; i < tests.size(); ++i)
      for (int r = 0; r < a.replications; ++r) {
        std::unique_ptr<CutSelector> selector;
        if (method == "multi_cut") selector = make_select_all();
        else if (method == "single_cut") selector = make_aggregate();
        else if (method == "random_k")
          selector = make_random_k(
              a.k, selector_base + static_cast<std::uint64_t>(r) * tests.size() + i);
        else selector = make_policy_greedy(ck.params, a.k, fcfg);

        BendersRun run = run_benders(tests[i].second, *selector, cfg);
        if (run.status == BendersStatus::TimeLimit && run.x_incumbent.size() == 0)
          stranded = true;

        BenchmarkRow row;
        row.method = method;
        row.instance = tests[i].first;
        row.time_s = run.total_time;
        row.master_s = run.master_time_total;
        row.iterations = run.iterations;
        row.gap_pct = std::max(0.0, run.gap) * 100.0;  // FP noise can dip below zero
        row.total_cuts = run.total_cuts;
        rows.push_back(std::move(row));
      }

  write_text_file(a.out, benchmark_to_csv(rows));
  std::cout << a.out << "\n";
  return stranded ? 4 : 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string instance;
  std::string trace;
  std::string out = "exposure.csv";
};

int cmd_report(const ReportArgs& a) {
  const EvInstance inst = load_instance(a.instance);
  const std::vector<IterationRecord> history = trace_from_csv(read_text_file(a.trace));
  const std::vector<int> nc =
      nc_from_trace(history, static_cast<int>(inst.demands.rows()));
  write_text_file(a.out, exposure_to_csv(exposure_rows(inst, nc)));
  std::cout << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage stochastic programs: Benders decomposition with a learned "
               "cut-selection policy"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenerateArgs g;
  CLI::App* gen = app.add_subcommand("generate", "write seeded instance JSON files");
  std::string gen_config;
  add_config_option(gen, gen_config);
  gen->add_option("--seed", g.seed, "base seed; instance i draws from seed+2i");
  gen->add_option("--count", g.count)->check(CLI::PositiveNumber);
  gen->add_option("--stations", g.stations)->check(CLI::PositiveNumber);
  gen->add_option("--sites", g.sites)->check(CLI::PositiveNumber);
  gen->add_option("--scenarios", g.scenarios)->check(CLI::PositiveNumber);
  gen->add_option("--shape", g.shape)->check(CLI::IsMember({"normal", "left", "right"}));
  gen->add_option("--out", g.out_dir, "output directory");

  TrainArgs t;
  CLI::App* tr = app.add_subcommand("train", "train the cut-selection policy");
  std::string tr_config;
  add_config_option(tr, tr_config);
  tr->add_option("--instance", t.instance, "training instance JSON")
      ->check(CLI::ExistingFile);
  tr->add_option("--seed", t.seed);
  tr->add_option("--episodes", t.episodes)->check(CLI::PositiveNumber);
  tr->add_option("--k", t.k, "cuts kept per iteration")->check(CLI::PositiveNumber);
  tr->add_option("--t-max", t.t_max)->check(CLI::PositiveNumber);
  tr->add_option("--lr", t.lr)->check(CLI::NonNegativeNumber);
  tr->add_option("--eps-tol", t.eps_tol)->check(CLI::NonNegativeNumber);
  tr->add_option("--master-gap", t.master_gap, "relative gap the master search may stop at")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--master-node-limit", t.master_node_limit,
                 "cap branch-and-bound nodes per master solve (0 = unlimited)")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--alpha", t.alpha, "gap-progress reward weight");
  tr->add_option("--beta", t.beta, "master-time reward weight");
  tr->add_option("--lambda", t.lambda, "per-step penalty");
  tr->add_option("--t-ref", t.t_ref)->check(CLI::PositiveNumber);
  tr->add_option("--gamma", t.gamma, "discount");
  tr->add_option("--timing", t.timing)->check(CLI::IsMember({"wallclock", "proxy"}));
  tr->add_option("--checkpoint-every", t.checkpoint_every)->check(CLI::NonNegativeNumber);
  tr->add_option("--out", t.out_dir, "output directory");
  tr->add_flag("--grid", t.grid, "sweep alpha x lambda, --runs runs per point");
  tr->add_option("--runs", t.runs)->check(CLI::PositiveNumber);
  tr->add_flag("--micro-bandit", t.micro_bandit, "run the synthetic bandit check");

  EvalArgs e;
  CLI::App* ev = app.add_subcommand("evaluate", "greedy rollout of a trained policy");
  std::string ev_config;
  add_config_option(ev, ev_config);
  ev->add_option("--instance", e.instance)->check(CLI::ExistingFile);
  ev->add_option("--checkpoint", e.checkpoint)->check(CLI::ExistingFile);
  ev->add_option("--k", e.k)->check(CLI::PositiveNumber);
  ev->add_option("--eps-tol", e.eps_tol)->check(CLI::NonNegativeNumber);
  ev->add_option("--master-gap", e.master_gap)->check(CLI::NonNegativeNumber);
  ev->add_option("--master-node-limit", e.master_node_limit)->check(CLI::NonNegativeNumber);
  ev->add_option("--t-max", e.t_max)->check(CLI::PositiveNumber);
  ev->add_option("--time-limit", e.time_limit)->check(CLI::PositiveNumber);
  ev->add_option("--timing", e.timing)->check(CLI::IsMember({"wallclock", "proxy"}));
  ev->add_flag("--dedup-cuts", e.dedup, "drop byte-identical cuts");
  ev->add_option("--trace", e.trace_path, "write per-iteration trace CSV here");
  ev->add_option("--feature-dump", e.feature_dump,
                 "write per-candidate feature rows here");

  BenchArgs b;
  CLI::App* be = app.add_subcommand("benchmark", "compare selectors across instances");
  std::string be_config;
  add_config_option(be, be_config);
  be->add_option("--methods", b.methods)
      ->check(CLI::IsMember({"multi_cut", "single_cut", "random_k", "rlbd_greedy"}));
  be->add_option("--instance", b.instance_files, "test instance files (repeatable)")
      ->check(CLI::ExistingFile);
  be->add_option("--seed", b.seed);
  be->add_option("--instances", b.instances, "synthesized test instances if no files")
      ->check(CLI::PositiveNumber);
  be->add_option("--stations", b.stations)->check(CLI::PositiveNumber);
  be->add_option("--sites", b.sites)->check(CLI::PositiveNumber);
  be->add_option("--scenarios", b.scenarios)->check(CLI::PositiveNumber);
  be->add_option("--shape", b.shape)->check(CLI::IsMember({"normal", "left", "right"}));
  be->add_option("--checkpoint", b.checkpoint)->check(CLI::ExistingFile);
  be->add_option("--k", b.k, "K for random_k and rlbd_greedy")->check(CLI::PositiveNumber);
  be->add_option("--replications", b.replications)->check(CLI::PositiveNumber);
  be->add_option("--eps-tol", b.eps_tol)->check(CLI::NonNegativeNumber);
  be->add_option("--master-gap", b.master_gap)->check(CLI::NonNegativeNumber);
  be->add_option("--master-node-limit", b.master_node_limit)->check(CLI::NonNegativeNumber);
  be->add_option("--t-max", b.t_max)->check(CLI::PositiveNumber);
  be->add_option("--time-limit", b.time_limit)->check(CLI::PositiveNumber);
  be->add_option("--timing", b.timing)->check(CLI::IsMember({"wallclock", "proxy"}));
  be->add_flag("--dedup-cuts", b.dedup);
  be->add_option("--out", b.out, "benchmark CSV path");

  ReportArgs r;
  CLI::App* re = app.add_subcommand("report", "scenario-exposure table from a trace");
  std::string re_config;
  add_config_option(re, re_config);
  re->add_option("--instance", r.instance)->check(CLI::ExistingFile);
  re->add_option("--trace", r.trace)->check(CLI::ExistingFile);
  re->add_option("--out", r.out, "exposure CSV path");

  int rc = 0;
  gen->callback([&] {
    apply_config(gen, gen_config);
    require_given(gen, {"--seed"});
    rc = cmd_generate(g);
  });
  tr->callback([&] {
    apply_config(tr, tr_config);
    require_given(tr, {"--seed"});
    rc = cmd_train(t);
  });
  ev->callback([&] {
    apply_config(ev, ev_config);
    require_given(ev, {"--instance", "--checkpoint"});
    rc = cmd_evaluate(e);
  });
  be->callback([&] {
    apply_config(be, be_config);
    require_given(be, {"--seed"});
    rc = cmd_benchmark(b);
  });
  re->callback([&] {
    apply_config(re, re_config);
    require_given(re, {"--instance", "--trace"});
    rc = cmd_report(r);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const rlbd::SolverError& err) {
    std::cerr << "solver failure: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return rc;
}
