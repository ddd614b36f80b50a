#include "rlbd/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rlbd {

namespace {

using nlohmann::json;

double parse_double(std::string_view s) {
  double x = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || p != end)
    throw std::invalid_argument("bad number field: " + std::string(s));
  return x;
}

long parse_long(std::string_view s) {
  long x = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || p != end)
    throw std::invalid_argument("bad integer field: " + std::string(s));
  return x;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> nonempty_lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

constexpr const char* kTraceHeader =
    "t,lb,ub_best,gap_best,ub_raw,gap_raw,master_time,subproblem_time,"
    "cuts_added,cum_cuts,selected";
constexpr const char* kCurvesHeader = "episode,total_reward,steps,final_gap,elapsed_time";
constexpr const char* kBenchmarkHeader =
    "method,instance,time_s,master_s,iterations,gap_pct,total_cuts";
constexpr const char* kExposureHeader =
    "rank,scenario,nc,total_demand,penalty_exposure,revenue_exposure";

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a, Index size) {
  if (static_cast<Index>(a.size()) != size)
    throw std::invalid_argument("array length mismatch in JSON payload");
  Vec v(size);
  for (Index i = 0; i < size; ++i) v[i] = a[static_cast<size_t>(i)].get<double>();
  return v;
}

json mat_rows_to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_rows_from_json(const json& rows, Index expect_cols) {
  const Index r = static_cast<Index>(rows.size());
  Mat m(r, expect_cols);
  for (Index i = 0; i < r; ++i) {
    const json& row = rows[static_cast<size_t>(i)];
    if (static_cast<Index>(row.size()) != expect_cols)
      throw std::invalid_argument("ragged matrix in JSON payload");
    for (Index j = 0; j < expect_cols; ++j) m(i, j) = row[static_cast<size_t>(j)].get<double>();
  }
  return m;
}

json mat_flat_to_json(const Mat& m) {
  json a = json::array();  // row-major, independent of in-memory layout
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

Mat mat_flat_from_json(const json& a, Index rows, Index cols) {
  if (static_cast<Index>(a.size()) != rows * cols)
    throw std::invalid_argument("flat weight array has the wrong length");
  Mat m(rows, cols);
  size_t k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = a[k++].get<double>();
  return m;
}

json coeffs_to_json(const MlpCoeffs& c) {
  json j;
  j["w1"] = mat_flat_to_json(c.w1);
  j["b1"] = vec_to_json(c.b1);
  j["w2"] = mat_flat_to_json(c.w2);
  j["b2"] = vec_to_json(c.b2);
  j["w3"] = vec_to_json(c.w3);
  j["b3"] = c.b3;
  return j;
}

MlpCoeffs coeffs_from_json(const json& j, const PolicyConfig& cfg) {
  MlpCoeffs c;
  c.w1 = mat_flat_from_json(j.at("w1"), cfg.hidden1, cfg.input_width);
  c.b1 = vec_from_json(j.at("b1"), cfg.hidden1);
  c.w2 = mat_flat_from_json(j.at("w2"), cfg.hidden2, cfg.hidden1);
  c.b2 = vec_from_json(j.at("b2"), cfg.hidden2);
  c.w3 = vec_from_json(j.at("w3"), cfg.hidden2);
  c.b3 = j.at("b3").get<double>();
  return c;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, p);
}

std::string trace_to_csv(const std::vector<IterationRecord>& history) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const IterationRecord& r : history) {
    out += std::to_string(r.t);
    out += ',';
    out += format_double(r.lb);
    out += ',';
    out += format_double(r.ub_best);
    out += ',';
    out += format_double(r.gap_best);
    out += ',';
    out += format_double(r.ub_raw);
    out += ',';
    out += format_double(r.gap_raw);
    out += ',';
    out += format_double(r.master_time);
    out += ',';
    out += format_double(r.subproblem_time);
    out += ',';
    out += std::to_string(r.cuts_added);
    out += ',';
    out += std::to_string(r.cum_cuts);
    out += ',';
    for (size_t i = 0; i < r.selected.size(); ++i) {
      if (i > 0) out += ';';
      out += std::to_string(r.selected[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<IterationRecord> trace_from_csv(const std::string& text) {
  std::vector<std::string_view> lines = nonempty_lines(text);
  if (lines.empty() || lines[0] != kTraceHeader)
    throw std::invalid_argument("trace CSV header mismatch");

  std::vector<IterationRecord> out;
  for (size_t li = 1; li < lines.size(); ++li) {
    std::vector<std::string_view> f = split(lines[li], ',');
    if (f.size() != 11) throw std::invalid_argument("trace CSV row has wrong arity");
    IterationRecord r;
    r.t = static_cast<int>(parse_long(f[0]));
    r.lb = parse_double(f[1]);
    r.ub_best = parse_double(f[2]);
    r.gap_best = parse_double(f[3]);
    r.ub_raw = parse_double(f[4]);
    r.gap_raw = parse_double(f[5]);
    r.master_time = parse_double(f[6]);
    r.subproblem_time = parse_double(f[7]);
    r.cuts_added = static_cast<int>(parse_long(f[8]));
    r.cum_cuts = parse_long(f[9]);
    if (!f[10].empty())
      for (std::string_view part : split(f[10], ';'))
        r.selected.push_back(static_cast<Index>(parse_long(part)));
    out.push_back(std::move(r));
  }
  return out;
}

std::string curves_to_csv(const std::vector<EpisodeSummary>& curves) {
  std::string out = kCurvesHeader;
  out += '\n';
  for (const EpisodeSummary& c : curves) {
    out += std::to_string(c.episode);
    out += ',';
    out += format_double(c.total_reward);
    out += ',';
    out += std::to_string(c.steps);
    out += ',';
    out += format_double(c.final_gap);
    out += ',';
    out += format_double(c.elapsed_time);
    out += '\n';
  }
  return out;
}

std::string benchmark_to_csv(const std::vector<BenchmarkRow>& rows) {
  std::string out = kBenchmarkHeader;
  out += '\n';

  std::vector<std::string> method_order;
  for (const BenchmarkRow& r : rows) {
    if (std::find(method_order.begin(), method_order.end(), r.method) == method_order.end())
      method_order.push_back(r.method);
    out += r.method;
    out += ',';
    out += r.instance;
    out += ',';
    out += format_double(r.time_s);
    out += ',';
    out += format_double(r.master_s);
    out += ',';
    out += std::to_string(r.iterations);
    out += ',';
    out += format_double(r.gap_pct);
    out += ',';
    out += std::to_string(r.total_cuts);
    out += '\n';
  }

  for (const std::string& method : method_order) {
    double time_s = 0, master_s = 0, iters = 0, gap = 0, cuts = 0;
    int n = 0;
    for (const BenchmarkRow& r : rows) {
      if (r.method != method) continue;
      time_s += r.time_s;
      master_s += r.master_s;
      iters += r.iterations;
      gap += r.gap_pct;
      cuts += static_cast<double>(r.total_cuts);
      ++n;
    }
    out += method;
    out += ",mean,";
    out += format_double(time_s / n);
    out += ',';
    out += format_double(master_s / n);
    out += ',';
    out += format_double(iters / n);
    out += ',';
    out += format_double(gap / n);
    out += ',';
    out += format_double(cuts / n);
    out += '\n';
  }
  return out;
}

std::vector<int> nc_from_trace(const std::vector<IterationRecord>& history, int n_scenarios) {
  std::vector<int> nc(static_cast<size_t>(n_scenarios), 0);
  for (const IterationRecord& r : history)
    for (Index w : r.selected) {
      if (w < 0 || w >= n_scenarios)
        throw std::invalid_argument("trace selects a scenario outside the instance");
      ++nc[static_cast<size_t>(w)];
    }
  return nc;
}

std::vector<ExposureRow> exposure_rows(const EvInstance& inst, const std::vector<int>& nc) {
  const int s = static_cast<int>(inst.demands.rows());
  if (static_cast<int>(nc.size()) != s)
    throw std::invalid_argument("selection counts do not cover every scenario");

  std::vector<ExposureRow> rows(static_cast<size_t>(s));
  for (int w = 0; w < s; ++w) {
    ExposureRow& r = rows[static_cast<size_t>(w)];
    r.scenario = w;
    r.nc = nc[static_cast<size_t>(w)];
    const auto d = inst.demands.row(w);
    r.total_demand = d.sum();
    r.penalty_exposure = d.dot(inst.penalty);
    r.revenue_exposure = d.dot(inst.revenue);
  }
  std::sort(rows.begin(), rows.end(), [](const ExposureRow& a, const ExposureRow& b) {
    if (a.nc != b.nc) return a.nc > b.nc;
    return a.scenario < b.scenario;
  });
  for (int i = 0; i < s; ++i) rows[static_cast<size_t>(i)].rank = i + 1;
  return rows;
}

std::string exposure_to_csv(const std::vector<ExposureRow>& rows) {
  std::string out = kExposureHeader;
  out += '\n';
  for (const ExposureRow& r : rows) {
    out += std::to_string(r.rank);
    out += ',';
    out += std::to_string(r.scenario);
    out += ',';
    out += std::to_string(r.nc);
    out += ',';
    out += format_double(r.total_demand);
    out += ',';
    out += format_double(r.penalty_exposure);
    out += ',';
    out += format_double(r.revenue_exposure);
    out += '\n';
  }
  return out;
}

std::string instance_to_json(const EvInstance& inst) {
  json j;
  j["format"] = "rlbd-instance-v1";
  j["n_stations"] = inst.n_stations;
  j["n_sites"] = inst.n_sites;
  j["seed"] = inst.seed;
  j["n_first_stage"] = 2 * inst.n_stations;
  j["n_second_stage"] = inst.n_stations * inst.n_sites + inst.n_sites;
  j["open_cost"] = vec_to_json(inst.open_cost);
  j["charger_cost"] = vec_to_json(inst.charger_cost);
  j["transport_cost"] = mat_rows_to_json(inst.transport_cost);
  j["penalty"] = vec_to_json(inst.penalty);
  j["revenue"] = vec_to_json(inst.revenue);
  j["charger_capacity"] = vec_to_json(inst.charger_capacity);
  j["max_chargers"] = vec_to_json(inst.max_chargers);
  j["demand_mean"] = vec_to_json(inst.demand_mean);
  j["demand_std"] = vec_to_json(inst.demand_std);
  j["scenario_shape"] = to_string(inst.scenario_shape);
  j["demands"] = mat_rows_to_json(inst.demands);
  j["probabilities"] = vec_to_json(inst.probabilities);
  return j.dump(2) + "\n";
}

EvInstance instance_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format").get<std::string>() != "rlbd-instance-v1")
    throw std::invalid_argument("not an rlbd-instance-v1 file");

  EvInstance inst;
  inst.n_stations = j.at("n_stations").get<int>();
  inst.n_sites = j.at("n_sites").get<int>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("n_first_stage").get<int>() != 2 * inst.n_stations ||
      j.at("n_second_stage").get<int>() != inst.n_stations * inst.n_sites + inst.n_sites)
    throw std::invalid_argument("instance dimensions disagree with recorded sizes");

  const Index stations = inst.n_stations, sites = inst.n_sites;
  inst.open_cost = vec_from_json(j.at("open_cost"), stations);
  inst.charger_cost = vec_from_json(j.at("charger_cost"), stations);
  inst.transport_cost = mat_rows_from_json(j.at("transport_cost"), sites);
  if (inst.transport_cost.rows() != stations)
    throw std::invalid_argument("transport cost matrix has the wrong shape");
  inst.penalty = vec_from_json(j.at("penalty"), sites);
  inst.revenue = vec_from_json(j.at("revenue"), sites);
  inst.charger_capacity = vec_from_json(j.at("charger_capacity"), stations);
  inst.max_chargers = vec_from_json(j.at("max_chargers"), stations);
  inst.demand_mean = vec_from_json(j.at("demand_mean"), sites);
  inst.demand_std = vec_from_json(j.at("demand_std"), sites);
  inst.scenario_shape = demand_shape_from_string(j.at("scenario_shape").get<std::string>());
  inst.demands = mat_rows_from_json(j.at("demands"), sites);
  inst.probabilities = vec_from_json(j.at("probabilities"), inst.demands.rows());
  return inst;
}

std::string checkpoint_to_json(const Checkpoint& ck) {
  const PolicyConfig& cfg = ck.params.config;
  json j;
  j["format"] = "rlbd-policy-v1";
  j["input_width"] = cfg.input_width;
  j["hidden1"] = cfg.hidden1;
  j["hidden2"] = cfg.hidden2;
  j["normalization"] = "signed-log";
  j["t_max_norm"] = ck.t_max_norm;
  j["weights"] = coeffs_to_json(ck.params.net);
  j["adam"] = {{"m", coeffs_to_json(ck.params.adam.m)},
               {"v", coeffs_to_json(ck.params.adam.v)},
               {"step", ck.params.adam.step}};
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format").get<std::string>() != "rlbd-policy-v1")
    throw std::invalid_argument("not an rlbd-policy-v1 file");
  if (j.at("normalization").get<std::string>() != "signed-log")
    throw std::invalid_argument("unknown feature normalization in checkpoint");

  Checkpoint ck;
  ck.params.config.input_width = j.at("input_width").get<int>();
  ck.params.config.hidden1 = j.at("hidden1").get<int>();
  ck.params.config.hidden2 = j.at("hidden2").get<int>();
  ck.t_max_norm = j.at("t_max_norm").get<double>();
  ck.params.net = coeffs_from_json(j.at("weights"), ck.params.config);
  const json& adam = j.at("adam");
  ck.params.adam.m = coeffs_from_json(adam.at("m"), ck.params.config);
  ck.params.adam.v = coeffs_from_json(adam.at("v"), ck.params.config);
  ck.params.adam.step = adam.at("step").get<long>();
  return ck;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace rlbd
