// osb: command-line front end for data generation, training, sweeps,
// evaluation and reports.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "osb/algo/checkpoint.hpp"
#include "osb/core/error.hpp"
#include "osb/data/io.hpp"
#include "osb/env/registry.hpp"
#include "osb/eval/metrics.hpp"
#include "osb/report/report.hpp"
#include "osb/sweep/runner.hpp"

namespace fs = std::filesystem;
using namespace osb;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

// --out beats OSB_OUTPUT_ROOT, which beats the config file.
std::string output_root(const Globals& g, const std::string& from_config) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("OSB_OUTPUT_ROOT"); env && *env) return env;
  return from_config;
}

sweep::ExperimentConfig load(const std::string& path, const Globals& g) {
  auto config = sweep::load_config(path, g.sets);
  config.output_root = output_root(g, config.output_root);
  return config;
}

data::TrajectoryDataset load_any_dataset(const fs::path& path) {
  if (fs::is_directory(path)) return data::load_native(path);
  if (!fs::exists(path)) throw ValidationError("dataset " + path.string() + " does not exist");
  return data::import_external(path);
}

void print_plan(const std::vector<sweep::RunRecord>& plan) {
  for (const auto& r : plan) {
    std::cout << fmt::format("{}  {} n={} seed={}  {}\n", r.run_id, algo::to_string(r.algorithm), r.dataset_size,
                             r.seed, sweep::is_run_done(r) ? "done" : "pending");
  }
  std::cout << plan.size() << " runs\n";
}

int cmd_generate(const Globals& g, const std::string& env_name, const std::string& env_options,
                 std::int64_t size, double noise, const std::string& expert) {
  if (g.out.empty()) throw CLI::ValidationError("--out", "generate-data needs --out <dataset dir>");
  nlohmann::json options = env_options.empty() ? nlohmann::json::object() : nlohmann::json::parse(env_options, nullptr, false);
  if (options.is_discarded()) throw ValidationError("--env-options is not valid JSON");
  auto env = env::make_env(env_name, options);
  env::Policy policy;
  std::optional<algo::PolicyCheckpoint> ckpt;
  if (expert == "builtin") {
    policy = env->expert_policy();
  } else {
    ckpt = algo::load_checkpoint(expert);
    policy = eval::checkpoint_policy(*ckpt);
  }
  const std::uint64_t seed = g.seed.value_or(0);
  auto ds = data::collect_expert_dataset(*env, policy, size, noise, seed);
  data::save_native(ds, g.out);
  double total = 0.0;
  for (const auto& t : ds.trajectories) total += eval::discounted_return(t, 1.0);
  std::cout << fmt::format("wrote {}\nn_trajectories={}\nn_transitions={}\nmean_return={}\n", g.out,
                           ds.trajectories.size(), ds.total_transitions(), total / ds.trajectories.size());
  return 0;
}

int cmd_train(const Globals& g, const std::string& config_path, const std::string& algo_name,
              std::int64_t size, bool resume) {
  auto config = load(config_path, g);
  if (!algo_name.empty()) config.algorithms = {algo::parse_algo_id(algo_name)};
  if (size > 0) config.dataset_sizes = {size};
  if (g.seed) config.seeds = {*g.seed};
  config.validate();
  auto plan = sweep::plan_sweep(config);
  if (plan.size() != 1) {
    throw ValidationError(fmt::format("train needs exactly one grid point, config gives {} (use --algo, --size, --seed)",
                                      plan.size()));
  }
  if (sweep::is_run_done(plan[0])) {
    if (resume) {
      std::cout << plan[0].run_dir.string() << " already done\n";
      return 0;
    }
    fs::remove_all(plan[0].run_dir);
  }
  auto summary = sweep::execute(config, plan, 1, &std::cerr);
  const auto& r = summary.records.front();
  std::cout << r.run_dir.string() << '\n';
  if (r.status != sweep::RunStatus::done) throw RuntimeFailure("run failed: " + r.message);
  return 0;
}

int cmd_sweep(const Globals& g, const std::string& config_path, bool dry_run, int parallelism) {
  auto config = load(config_path, g);
  auto plan = sweep::plan_sweep(config);
  if (dry_run) {
    print_plan(plan);
    return 0;
  }
  auto summary = sweep::execute(config, plan, parallelism > 0 ? parallelism : config.parallelism, &std::cerr);
  std::cout << fmt::format("done={} skipped={} failed={}\n", summary.done, summary.skipped, summary.failed);
  for (const auto& r : summary.records) {
    if (r.status == sweep::RunStatus::failed) std::cout << "failed " << r.run_id << ": " << r.message << '\n';
  }
  return summary.failed == 0 ? 0 : 3;
}

int cmd_evaluate(const Globals& g, const std::string& checkpoint, const std::string& dataset,
                 const std::string& env_name, const std::string& env_options, int episodes,
                 const std::string& anchors_path, int anchor_episodes) {
  const auto ckpt = algo::load_checkpoint(checkpoint);
  if (!dataset.empty()) {
    const std::uint64_t before = env::env_steps_on_this_thread();
    const auto slice = data::flatten(load_any_dataset(dataset));
    const double mse = eval::action_mse(ckpt, slice);
    std::cout << fmt::format("action_mse={}\ntransitions={}\nenv_steps={}\n", mse, slice.size(),
                             env::env_steps_on_this_thread() - before);
  }
  if (!env_name.empty()) {
    nlohmann::json options =
        env_options.empty() ? nlohmann::json::object() : nlohmann::json::parse(env_options, nullptr, false);
    if (options.is_discarded()) throw ValidationError("--env-options is not valid JSON");
    auto env = env::make_env(env_name, options);
    const std::uint64_t seed = g.seed.value_or(0);
    const double ret = eval::online_evaluate(ckpt, *env, episodes, seed);
    const eval::ScoreAnchors anchors = anchors_path.empty()
                                           ? eval::measure_anchors(*env, anchor_episodes, derive_seed(seed, "anchors"))
                                           : eval::load_anchors(anchors_path);
    std::cout << fmt::format("online_return={}\nnormalized_score={}\nrandom_score={}\nexpert_score={}\n", ret,
                             eval::normalized_score(ret, anchors), anchors.random_score, anchors.expert_score);
  }
  return 0;
}

int cmd_report(const Globals& g, const std::string& config_path, const std::string& family,
               const std::vector<std::string>& algos, const std::vector<std::int64_t>& sizes,
               std::int64_t compare_size, const std::string& report_dir, bool no_svg) {
  std::string root = output_root(g, "");
  if (!config_path.empty()) root = load(config_path, g).output_root;
  if (root.empty()) throw ValidationError("report needs --config or --out to locate the registry");
  const auto records = sweep::read_registry(fs::path(root) / "registry.json");
  const auto runs = sweep::load_done_runs(records);
  std::vector<report::Family> families;
  if (family == "all") {
    families = report::all_families();
  } else {
    families = {report::parse_family(family)};
  }
  for (auto f : families) {
    report::ReportSpec spec;
    spec.family = f;
    spec.algorithms = algos;
    spec.dataset_sizes = sizes;
    if (compare_size > 0) spec.compare_size = compare_size;
    spec.output_dir = report_dir.empty() ? fs::path(root) / "reports" : fs::path(report_dir);
    spec.write_svg = !no_svg;
    const auto files = report::write_report(spec, runs);
    std::cout << fmt::format("{}: {} rows -> {}{}\n", report::to_string(f), files.table_rows, files.table.string(),
                             files.image ? " + " + files.image->string() : "");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline RL sample-complexity and validation benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed (data generation, single run, evaluation)");
  app.add_option("--out", g.out, "Output location (dataset dir for generate-data, output root otherwise)");
  app.add_option("--set", g.sets, "Config override key.path=value (repeatable)");

  auto* gen = app.add_subcommand("generate-data", "Roll out an expert and write a native dataset");
  std::string env_name, env_options, expert = "builtin";
  std::int64_t size = 0;
  double noise = 0.0;
  gen->add_option("--env", env_name, "Environment id")->required();
  gen->add_option("--env-options", env_options, "JSON object of env options");
  gen->add_option("--size", size, "Number of transitions")->required()->check(CLI::PositiveNumber);
  gen->add_option("--noise", noise, "Gaussian action-noise std")->check(CLI::NonNegativeNumber);
  gen->add_option("--expert", expert, "'builtin' or a checkpoint directory");

  auto* train = app.add_subcommand("train", "Train one grid point");
  std::string config_path, algo_name;
  bool resume = false;
  std::int64_t train_size = 0;
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train->add_option("--algo", algo_name, "Algorithm id (bc, td3bc, bcq, iql, dac)");
  train->add_option("--size", train_size, "Dataset size")->check(CLI::PositiveNumber);
  train->add_flag("--resume", resume, "Do nothing if the run is already done");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a full grid");
  bool dry_run = false;
  int parallelism = 0;
  sweep_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep_cmd->add_flag("--dry-run", dry_run, "Print the plan without executing");
  sweep_cmd->add_option("--parallelism", parallelism, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Offline action MSE and/or online return of a checkpoint");
  std::string checkpoint, dataset, anchors_path;
  int episodes = 10, anchor_episodes = 100;
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  evaluate->add_option("--dataset", dataset, "Native dataset dir or HDF5 file (offline mode)");
  evaluate->add_option("--env", env_name, "Environment id (online mode)");
  evaluate->add_option("--env-options", env_options, "JSON object of env options");
  evaluate->add_option("--episodes", episodes, "Online episodes")->check(CLI::PositiveNumber);
  evaluate->add_option("--anchors", anchors_path, "anchors.json with random/expert scores");
  evaluate->add_option("--anchor-episodes", anchor_episodes, "Episodes when measuring anchors")
      ->check(CLI::PositiveNumber);

  auto* report_cmd = app.add_subcommand("report", "Write figure tables and images from finished runs");
  std::string family = "all", report_dir;
  std::vector<std::string> algos;
  std::vector<std::int64_t> sizes;
  std::int64_t compare_size = 0;
  bool no_svg = false;
  report_cmd->add_option("--config", config_path, "Experiment config locating the output root");
  report_cmd->add_option("--family", family, "score_bars, train_val_curves, score_plus_val_curves, val_compare or all");
  report_cmd->add_option("--algos", algos, "Restrict to these algorithms")->delimiter(',');
  report_cmd->add_option("--sizes", sizes, "Restrict to these dataset sizes")->delimiter(',');
  report_cmd->add_option("--compare-size", compare_size, "Dataset size for val_compare");
  report_cmd->add_option("--report-dir", report_dir, "Where to write (default <root>/reports)");
  report_cmd->add_flag("--no-svg", no_svg, "Tables only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*evaluate && dataset.empty() && env_name.empty()) {
      std::cerr << "evaluate needs --dataset (offline) and/or --env (online)\n";
      return 1;
    }
    if (*gen) return cmd_generate(g, env_name, env_options, size, noise, expert);
    if (*train) return cmd_train(g, config_path, algo_name, train_size, resume);
    if (*sweep_cmd) return cmd_sweep(g, config_path, dry_run, parallelism);
    if (*evaluate) {
      return cmd_evaluate(g, checkpoint, dataset, env_name, env_options, episodes, anchors_path, anchor_episodes);
    }
    if (*report_cmd) {
      return cmd_report(g, config_path, family, algos, sizes, compare_size, report_dir, no_svg);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
