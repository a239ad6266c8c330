// Command-line front end: batch singling experiments, feasible-set listing,
// and trajectory replay.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shepherd/shepherd.hpp"

namespace {

using namespace shepherd;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct RunArgs {
  std::string config;
  std::optional<std::string> target;
  std::optional<std::string> method;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> max_steps;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

ExperimentConfig base_config(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

void print_summary(const RunSummary& s) {
  std::printf("%-3s %-9s trials=%zu success=%.3f conn(time-avg)=%.4f conn(final)=%.4f sep-time=%s errors=%zu\n",
              s.config.target.c_str(), std::string(to_string(s.config.method)).c_str(), s.trials.size(),
              s.success_rate, s.mean_time_avg_connectivity, s.mean_final_connectivity,
              s.mean_separation_time ? std::to_string(*s.mean_separation_time).c_str() : "n/a", s.errors);
}

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = base_config(a.config);
  if (a.trials) cfg.trials = *a.trials;
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.max_steps) cfg.step_budget = *a.max_steps;
  if (a.out) cfg.output_dir = *a.out;
  if (a.threads) cfg.threads = *a.threads;

  std::vector<std::string> targets{cfg.target};
  if (a.target) {
    targets = *a.target == "all" ? std::vector<std::string>{"A", "B", "C", "D", "E"}
                                 : std::vector<std::string>{*a.target};
  }
  std::vector<Method> methods{cfg.method};
  if (a.method) {
    methods = *a.method == "both" ? std::vector<Method>{Method::proposed, Method::bipartite}
                                  : std::vector<Method>{parse_method(*a.method)};
  }

  std::vector<ExperimentConfig> runs;
  for (const auto& t : targets) {
    for (Method m : methods) {
      ExperimentConfig c = cfg;
      c.target = t;
      c.method = m;
      c.validate();
      generate_initial(c);  // surfaces layout/label errors before any work
      runs.push_back(c);
    }
  }

  const std::filesystem::path root = cfg.output_dir;
  std::vector<RunSummary> summaries;
  for (const ExperimentConfig& c : runs) {
    RunSummary s = run_trials(c);
    print_summary(s);
    const auto dir = runs.size() == 1 ? root : root / (c.target + "_" + std::string(to_string(c.method)));
    for (const auto& p : write_outputs(s, dir)) std::printf("  wrote %s\n", p.string().c_str());
    summaries.push_back(std::move(s));
  }
  if (summaries.size() > 1) {
    std::vector<const RunSummary*> ptrs;
    for (const auto& s : summaries) ptrs.push_back(&s);
    write_text(root / "connectivity.svg", connectivity_svg(ptrs));
    std::printf("  wrote %s\n", (root / "connectivity.svg").string().c_str());
  }
  return 0;
}

int cmd_feasible(const std::string& config) {
  const ExperimentConfig cfg = base_config(config);
  const FeasibleSets s = feasible_sets(cfg.params);
  std::printf("T1 = %.17g\nT2 = %.17g\nT3 = %.17g\n", s.t1, s.t2, s.t3);
  const auto dump = [](const char* name, const std::vector<Interval>& v) {
    std::printf("%s:", name);
    if (v.empty()) std::printf(" (empty)");
    for (const Interval& i : v) std::printf(" (%.12g, %.12g)", i.lo, i.hi);
    std::printf("\n");
  };
  dump("C1", s.c1);
  dump("C2", s.c2);
  dump("C3", s.c3);
  return 0;
}

int cmd_replay(const std::string& csv, const std::string& svg) {
  std::ifstream in(csv);
  if (!in) throw OutputError("cannot open '" + csv + "'");
  const TraceTable t = parse_trace_csv(in);
  write_text(svg, replay_svg(t));
  std::printf("rendered %zu steps of %zu sheep to %s\n", t.rows.size(), t.sheep, svg.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shepherd singling simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run seeded singling trials and write CSV/JSON/SVG artifacts");
  run_cmd->add_option("--config", run.config, "JSON experiment config (defaults used when omitted)");
  run_cmd->add_option("--target", run.target, "A|B|C|D|E, a sheep id, or 'all'");
  run_cmd->add_option("--method", run.method, "proposed|bipartite|both");
  run_cmd->add_option("--trials", run.trials, "Number of trials");
  run_cmd->add_option("--seed", run.seed, "Base seed; trial i uses seed + i");
  run_cmd->add_option("--max-steps", run.max_steps, "Step budget per trial");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--threads", run.threads, "Worker threads (0 = all cores)");

  std::string fs_config;
  auto* fs_cmd = app.add_subcommand("feasible-sets", "Print the feasible line-coefficient intervals");
  fs_cmd->add_option("--config", fs_config, "JSON experiment config")->required();

  std::string replay_csv, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Render a logged trial CSV as an SVG trajectory");
  replay_cmd->add_option("--csv", replay_csv, "Trial CSV")->required();
  replay_cmd->add_option("--svg", replay_out, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*fs_cmd) return cmd_feasible(fs_config);
    if (*replay_cmd) return cmd_replay(replay_csv, replay_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
