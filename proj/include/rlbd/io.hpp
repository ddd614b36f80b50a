#pragma once

#include <string>
#include <vector>

#include "rlbd/benders.hpp"
#include "rlbd/ev_model.hpp"
#include "rlbd/policy.hpp"
#include "rlbd/reinforce.hpp"

namespace rlbd {

// shortest decimal form that parses back to the same double
std::string format_double(double x);

// header: t,lb,ub_best,gap_best,ub_raw,gap_raw,master_time,subproblem_time,
//         cuts_added,cum_cuts,selected  (selected is semicolon-joined indices)
std::string trace_to_csv(const std::vector<IterationRecord>& history);
std::vector<IterationRecord> trace_from_csv(const std::string& text);

// header: episode,total_reward,steps,final_gap,elapsed_time
std::string curves_to_csv(const std::vector<EpisodeSummary>& curves);

struct BenchmarkRow {
  std::string method;
  std::string instance;
  double time_s = 0.0;
  double master_s = 0.0;
  int iterations = 0;
  double gap_pct = 0.0;
  long total_cuts = 0;
};

// header: method,instance,time_s,master_s,iterations,gap_pct,total_cuts.
// Data rows in input order; one mean row per method (instance "mean") at the
// bottom, methods in first-appearance order.
std::string benchmark_to_csv(const std::vector<BenchmarkRow>& rows);

struct ExposureRow {
  int rank = 0;
  int scenario = 0;
  int nc = 0;
  double total_demand = 0.0;
  double penalty_exposure = 0.0;
  double revenue_exposure = 0.0;
};

// tallies how often each scenario index appears in the trace's selections
std::vector<int> nc_from_trace(const std::vector<IterationRecord>& history, int n_scenarios);
// one row per scenario, sorted by count descending (ties: lower index first)
std::vector<ExposureRow> exposure_rows(const EvInstance& inst, const std::vector<int>& nc);
// header: rank,scenario,nc,total_demand,penalty_exposure,revenue_exposure
std::string exposure_to_csv(const std::vector<ExposureRow>& rows);

std::string instance_to_json(const EvInstance& inst);
EvInstance instance_from_json(const std::string& text);

struct Checkpoint {
  PolicyParams params;
  double t_max_norm = 500.0;  // feature normalization the policy was trained with
};

std::string checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace rlbd
