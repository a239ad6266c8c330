#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "shepherd/controller.hpp"
#include "shepherd/swarm.hpp"

namespace shepherd {

// Malformed or invalid experiment configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  SwarmParams params;
  std::string layout{"grid5x5"};  // "grid5x5" or "file"
  std::string layout_file;
  std::string target{"A"};  // label A-E or a numeric sheep id
  Method method{Method::proposed};
  std::uint64_t trials{50};
  std::uint64_t base_seed{0};
  std::uint64_t step_budget{5000};
  PlannerConfig planner;
  std::string output_dir{"out"};
  unsigned threads{0};  // 0 = hardware concurrency
  bool exclude_used_pinning{false};
  bool record_traces{true};
  std::vector<std::uint64_t> snapshot_trials{0};

  void validate() const {
    try {
      params.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!(params.k_s3 > 0.0)) throw ConfigError("k_s3 must be positive for the singling controller");
    if (layout != "grid5x5" && layout != "file") throw ConfigError("layout must be 'grid5x5' or 'file'");
    if (layout == "file" && layout_file.empty()) throw ConfigError("layout 'file' requires layout_file");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (step_budget < 1) throw ConfigError("step_budget must be >= 1");
    if (!(planner.cell > 0.0)) throw ConfigError("planner.cell must be positive");
    if (!(planner.r_avoid >= 0.0)) throw ConfigError("planner.r_avoid must be nonnegative");
  }
};

// ---------------------------------------------------------------------------
// JSON mapping. Unknown keys are rejected at every level.

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const SwarmParams& p) {
  return {{"k_s1", p.k_s1},       {"k_s2", p.k_s2},   {"k_s3", p.k_s3},
          {"r", p.r},             {"v_bar", p.v_bar}, {"epsilon", p.epsilon},
          {"saturation", p.saturation}, {"isolated_sheep_feel_shepherd", p.isolated_sheep_feel_shepherd}};
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"params", to_json(c.params)},
          {"layout", c.layout},
          {"layout_file", c.layout_file},
          {"target", c.target},
          {"method", std::string(to_string(c.method))},
          {"trials", c.trials},
          {"base_seed", c.base_seed},
          {"step_budget", c.step_budget},
          {"planner", {{"cell", c.planner.cell}, {"r_avoid", c.planner.r_avoid}}},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"exclude_used_pinning", c.exclude_used_pinning},
          {"record_traces", c.record_traces},
          {"snapshot_trials", c.snapshot_trials}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j,
                         {"params", "layout", "layout_file", "target", "method", "trials", "base_seed",
                          "step_budget", "planner", "output_dir", "threads", "exclude_used_pinning",
                          "record_traces", "snapshot_trials"},
                         "config");
  ExperimentConfig c;
  if (j.contains("params")) {
    const auto& p = j.at("params");
    detail::reject_unknown(p, {"k_s1", "k_s2", "k_s3", "r", "v_bar", "epsilon", "saturation",
                               "isolated_sheep_feel_shepherd"},
                           "params");
    detail::read_opt(p, "k_s1", c.params.k_s1, "params");
    detail::read_opt(p, "k_s2", c.params.k_s2, "params");
    detail::read_opt(p, "k_s3", c.params.k_s3, "params");
    detail::read_opt(p, "r", c.params.r, "params");
    detail::read_opt(p, "v_bar", c.params.v_bar, "params");
    detail::read_opt(p, "epsilon", c.params.epsilon, "params");
    detail::read_opt(p, "saturation", c.params.saturation, "params");
    detail::read_opt(p, "isolated_sheep_feel_shepherd", c.params.isolated_sheep_feel_shepherd, "params");
  }
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    detail::reject_unknown(p, {"cell", "r_avoid"}, "planner");
    detail::read_opt(p, "cell", c.planner.cell, "planner");
    detail::read_opt(p, "r_avoid", c.planner.r_avoid, "planner");
  }
  detail::read_opt(j, "layout", c.layout, "config");
  detail::read_opt(j, "layout_file", c.layout_file, "config");
  if (j.contains("target")) {
    const auto& t = j.at("target");
    if (t.is_number_unsigned()) c.target = std::to_string(t.get<std::uint64_t>());
    else detail::read_opt(j, "target", c.target, "config");
  }
  if (j.contains("method")) {
    std::string m;
    detail::read_opt(j, "method", m, "config");
    try {
      c.method = parse_method(m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  detail::read_opt(j, "trials", c.trials, "config");
  detail::read_opt(j, "base_seed", c.base_seed, "config");
  detail::read_opt(j, "step_budget", c.step_budget, "config");
  detail::read_opt(j, "output_dir", c.output_dir, "config");
  detail::read_opt(j, "threads", c.threads, "config");
  detail::read_opt(j, "exclude_used_pinning", c.exclude_used_pinning, "config");
  detail::read_opt(j, "record_traces", c.record_traces, "config");
  detail::read_opt(j, "snapshot_trials", c.snapshot_trials, "config");
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Scenarios

struct Scenario {
  SwarmState state;
  SheepId target{0};
  std::map<std::string, SheepId> labels;
};

inline constexpr int kGridSide = 5;
inline constexpr double kGridSpacing = 0.5;

// 5x5 lattice at the pair force-balance spacing, ids row-major from the
// origin. Labels: A corner, B bottom-edge midpoint, C off-center interior,
// D top-edge midpoint, E center. The shepherd waits on the diagonal beyond A.
inline Scenario grid5x5() {
  Scenario s;
  std::vector<Vec2> pos;
  for (int row = 0; row < kGridSide; ++row) {
    for (int col = 0; col < kGridSide; ++col) pos.push_back({col * kGridSpacing, row * kGridSpacing});
  }
  s.state = SwarmState(std::move(pos), Vec2{-1.5, -1.5});
  const auto id = [](int col, int row) { return static_cast<SheepId>(row * kGridSide + col); };
  s.labels = {{"A", id(0, 0)}, {"B", id(2, 0)}, {"C", id(1, 1)}, {"D", id(2, 4)}, {"E", id(2, 2)}};
  return s;
}

// {"sheep": [[x, y], ...], "shepherd": [x, y], "labels": {"A": id, ...}}
inline Scenario load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open layout file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("layout file '" + path + "' is not valid JSON: " + e.what());
  }
  detail::reject_unknown(j, {"sheep", "shepherd", "labels"}, "layout");
  Scenario s;
  try {
    std::vector<Vec2> pos;
    for (const auto& p : j.at("sheep")) {
      if (!p.is_array() || p.size() != 2) throw ConfigError("layout sheep entries must be [x, y]");
      pos.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    if (pos.empty()) throw ConfigError("layout has no sheep");
    const auto& y = j.at("shepherd");
    if (!y.is_array() || y.size() != 2) throw ConfigError("layout shepherd must be [x, y]");
    s.state = SwarmState(std::move(pos), Vec2{y[0].get<double>(), y[1].get<double>()});
    if (j.contains("labels")) {
      for (const auto& [k, v] : j.at("labels").items()) {
        const auto id = v.get<SheepId>();
        if (id >= s.state.size()) throw ConfigError("layout label '" + k + "' refers to a missing sheep");
        s.labels[k] = id;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed layout file '" + path + "': " + e.what());
  }
  return s;
}

inline SheepId resolve_target(const Scenario& s, const std::string& target) {
  if (auto it = s.labels.find(target); it != s.labels.end()) return it->second;
  if (!target.empty() && std::all_of(target.begin(), target.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    const auto id = static_cast<SheepId>(std::stoull(target));
    if (id >= s.state.size()) throw ConfigError("target id " + target + " out of range");
    return id;
  }
  throw ConfigError("target '" + target + "' is not a label of this layout");
}

inline Scenario generate_initial(const ExperimentConfig& config) {
  Scenario s = config.layout == "file" ? load_layout(config.layout_file) : grid5x5();
  s.target = resolve_target(s, config.target);
  return s;
}

// ---------------------------------------------------------------------------
// Monte Carlo trials

struct TrialRecord {
  std::uint64_t index{0};
  std::uint64_t seed{0};
  std::optional<TrialResult> result;  // empty when the trial raised
  std::string error;

  bool success() const { return result && result->success; }
};

struct RunSummary {
  ExperimentConfig config;
  SheepId target{0};
  std::size_t sheep{0};
  SwarmState initial;
  std::vector<TrialRecord> trials;

  double success_rate{0.0};
  double mean_time_avg_connectivity{0.0};
  double min_time_avg_connectivity{0.0};
  double mean_final_connectivity{0.0};
  double min_final_connectivity{0.0};
  std::optional<double> mean_separation_time;  // over successful trials
  std::size_t errors{0};
};

// Aggregates are a function of the per-trial records alone, taken in index
// order.
inline void aggregate(RunSummary& s) {
  std::size_t ok = 0, succ = 0;
  double sum_avg = 0.0, sum_fin = 0.0, sum_steps = 0.0;
  double min_avg = 1.0, min_fin = 1.0;
  s.errors = 0;
  for (const TrialRecord& t : s.trials) {
    if (!t.result) {
      ++s.errors;
      continue;
    }
    ++ok;
    const double a = t.result->mean_connectivity();
    const double f = t.result->final_connectivity();
    sum_avg += a;
    sum_fin += f;
    min_avg = std::min(min_avg, a);
    min_fin = std::min(min_fin, f);
    if (t.result->success) {
      ++succ;
      sum_steps += static_cast<double>(t.result->steps);
    }
  }
  const double n = static_cast<double>(s.trials.size());
  s.success_rate = n > 0 ? static_cast<double>(succ) / n : 0.0;
  s.mean_time_avg_connectivity = ok ? sum_avg / static_cast<double>(ok) : 0.0;
  s.mean_final_connectivity = ok ? sum_fin / static_cast<double>(ok) : 0.0;
  s.min_time_avg_connectivity = ok ? min_avg : 0.0;
  s.min_final_connectivity = ok ? min_fin : 0.0;
  s.mean_separation_time.reset();
  if (succ) s.mean_separation_time = sum_steps / static_cast<double>(succ);
}

inline TrialRecord run_trial(const ExperimentConfig& config, const Scenario& scenario, std::uint64_t index) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = config.base_seed + index;
  SinglingOptions opts;
  opts.method = config.method;
  opts.planner = config.planner;
  opts.step_budget = config.step_budget;
  opts.exclude_used_pinning = config.exclude_used_pinning;
  opts.record_trace = config.record_traces;
  Rng rng(rec.seed);
  try {
    rec.result = run_singling(scenario.state, scenario.target, config.params, opts, rng);
    rec.result->seed = rec.seed;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

// Runs every trial with seed base_seed + index on a bounded worker pool.
// Results land in index order whatever the execution order.
inline RunSummary run_trials(const ExperimentConfig& config) {
  config.validate();
  const Scenario scenario = generate_initial(config);

  RunSummary s;
  s.config = config;
  s.target = scenario.target;
  s.sheep = scenario.state.size();
  s.initial = scenario.state;
  s.trials.resize(config.trials);

  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.trials));
  std::atomic<std::uint64_t> next{0};
  const auto work = [&] {
    for (std::uint64_t i = next++; i < config.trials; i = next++) s.trials[i] = run_trial(config, scenario, i);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  aggregate(s);
  return s;
}

}  // namespace shepherd
