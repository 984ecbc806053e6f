#include "osb/sweep/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "osb/algo/learner.hpp"
#include "osb/core/error.hpp"
#include "osb/core/seed.hpp"
#include "osb/data/io.hpp"
#include "osb/env/registry.hpp"

namespace osb::sweep {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::pending: return "pending";
    case RunStatus::running: return "running";
    case RunStatus::done: return "done";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

RunStatus parse_run_status(const std::string& text) {
  for (auto s : {RunStatus::pending, RunStatus::running, RunStatus::done, RunStatus::failed}) {
    if (to_string(s) == text) return s;
  }
  throw ValidationError("unknown run status '" + text + "'");
}

namespace {

bool env_registered(const std::string& name) {
  const auto& envs = env::registered_envs();
  return std::find(envs.begin(), envs.end(), name) != envs.end();
}

std::string run_config_digest(const ExperimentConfig& c, algo::AlgoId id) {
  json j = {{"layout", kLayoutVersion},
            {"data", data_digest(c)},
            {"subsample_mode", data::to_string(c.data.subsample_mode)},
            {"n_updates", c.n_updates},
            {"eval_every", c.eval_every},
            {"checkpoint_every", c.checkpoint_every},
            {"eval_episodes", c.eval_episodes},
            {"eval_seed", c.eval_seed},
            {"train_probe_size", c.train_probe_size},
            {"save_checkpoints", c.save_checkpoints},
            {"algo", algo::to_json(c.algo_config(id))}};
  return hex64(fnv1a64(j.dump())).substr(0, 12);
}

void write_json_atomic(const fs::path& file, const json& j) {
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, file);
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return json();
  json j = json::parse(in, nullptr, false);
  return j.is_discarded() ? json() : j;
}

data::TransitionDataset pick_rows(const data::TransitionDataset& d, std::int64_t count,
                                  std::uint64_t seed) {
  if (d.size() <= count) return d;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::int64_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return d.rows(idx);
}

data::TrajectoryDataset load_source(const ExperimentConfig& c) {
  if (!c.data.path.empty()) {
    const fs::path p(c.data.path);
    if (fs::is_directory(p)) return data::load_native(p);
    return data::import_external(p, c.env_name);
  }
  auto env = env::make_env(c.env_name, c.env_options);
  const std::int64_t total =
      c.data.full_size + c.data.n_val_trajectories * env->spec().max_episode_steps;
  return data::collect_expert_dataset(*env, env->expert_policy(), total, c.data.expert_noise_std,
                                      derive_seed(c.data.seed, "expert-data"));
}

}  // namespace

std::vector<RunRecord> plan_sweep(const ExperimentConfig& config) {
  if (config.algorithms.empty()) throw ValidationError("sweep needs at least one algorithm");
  if (config.dataset_sizes.empty()) throw ValidationError("sweep needs at least one dataset size");
  if (config.seeds.empty()) throw ValidationError("sweep needs at least one seed");
  std::vector<RunRecord> plan;
  std::set<std::string> seen;
  const fs::path runs = fs::path(config.output_root) / "runs";
  for (auto id : config.algorithms) {
    const std::string digest = run_config_digest(config, id);
    for (auto size : config.dataset_sizes) {
      for (auto seed : config.seeds) {
        RunRecord r;
        r.algorithm = id;
        r.dataset_size = size;
        r.seed = seed;
        r.config_digest = digest;
        const std::string point =
            fmt::format("{}|{}|{}|{}|{}", config.env_name, algo::to_string(id), size, seed, digest);
        if (!seen.insert(point).second) {
          throw ValidationError(fmt::format("duplicate grid point ({}, {}, seed {})", algo::to_string(id),
                                            size, seed));
        }
        r.run_id = fmt::format("{}-n{}-s{}-{}", algo::to_string(id), size, seed,
                               hex64(fnv1a64(point)).substr(0, 10));
        r.run_dir = runs / r.run_id;
        plan.push_back(std::move(r));
      }
    }
  }
  return plan;
}

SharedData prepare_data(const ExperimentConfig& c) {
  SharedData shared;
  shared.dir = fs::path(c.output_root) / "data" / data_digest(c);
  const bool online = env_registered(c.env_name);
  if (!fs::exists(shared.dir / "complete")) {
    const fs::path tmp = shared.dir.string() + ".partial";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    data::TrajectoryDataset source = load_source(c);
    auto split = data::hold_out_validation(source, c.data.n_val_trajectories,
                                           derive_seed(c.data.seed, "validation-split"));
    data::TrajectoryDataset val;
    val.source = source.source;
    val.env_name = source.env_name;
    val.state_dim = source.state_dim;
    val.action_dim = source.action_dim;
    for (auto i : split.val_trajectory_indices) val.trajectories.push_back(source.trajectories[i]);
    data::save_native(split.train, tmp / "train");
    data::save_native(val, tmp / "val");
    if (online) {
      auto env = env::make_env(c.env_name, c.env_options);
      auto anchors = eval::measure_anchors(*env, c.anchor_episodes, derive_seed(c.data.seed, "anchors"));
      eval::save_anchors(anchors, tmp / "anchors.json");
    }
    std::ofstream(tmp / "complete") << "ok\n";
    fs::remove_all(shared.dir);
    fs::create_directories(shared.dir.parent_path());
    fs::rename(tmp, shared.dir);
  }
  shared.train_pool = data::load_native(shared.dir / "train");
  shared.val = data::flatten(data::load_native(shared.dir / "val"));
  if (online) shared.anchors = eval::load_anchors(shared.dir / "anchors.json");
  return shared;
}

RunOutcome run_one(const ExperimentConfig& c, const SharedData& shared, const RunRecord& r) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  fs::remove_all(r.run_dir);
  fs::create_directories(r.run_dir);

  const algo::AlgoConfig acfg = c.algo_config(r.algorithm);
  json echo = to_json(c);
  echo.erase("algorithms");
  echo.erase("dataset_sizes");
  echo.erase("seeds");
  echo["algorithm"] = algo::to_string(r.algorithm);
  echo["dataset_size"] = r.dataset_size;
  echo["seed"] = r.seed;
  echo["resolved_algo"] = algo::to_json(acfg);
  write_json_atomic(r.run_dir / "config.json", echo);

  const data::TransitionDataset train =
      data::subsample(shared.train_pool, r.dataset_size, c.data.subsample_mode, derive_seed(r.seed, "subsample"));
  const data::TransitionDataset probe = pick_rows(train, c.train_probe_size, derive_seed(r.seed, "train-probe"));

  std::unique_ptr<env::Env> eval_env;
  algo::ProblemSpec problem;
  if (shared.anchors) {
    eval_env = env::make_env(c.env_name, c.env_options);
    const auto& spec = eval_env->spec();
    problem = algo::ProblemSpec::from_bounds(spec.state_dim, spec.action_low, spec.action_high,
                                             c.env_name, c.env_options);
  } else {
    problem.state_dim = train.state_dim();
    problem.action_dim = train.action_dim();
    problem.max_action = std::max(train.actions.cwiseAbs().maxCoeff(), 1e-6f);
    problem.env_name = c.env_name;
  }

  std::ofstream metrics(r.metrics_path(), std::ios::trunc);
  std::ofstream timing(r.run_dir / "timing.csv", std::ios::trunc);
  if (!metrics || !timing) throw RuntimeFailure("cannot open metrics files in " + r.run_dir.string());
  metrics << eval::metrics_header() << '\n';
  timing << "update_index,wall_seconds\n";

  std::vector<eval::MetricsRow> rows;
  const std::uint64_t eval_seed = derive_seed(c.eval_seed, r.seed);
  algo::TrainHooks hooks;
  hooks.eval_every = c.eval_every;
  hooks.keep_checkpoints = false;
  hooks.on_eval = [&](const algo::PolicyCheckpoint& ckpt) {
    eval::MetricsRow row;
    row.run_id = r.run_id;
    row.algorithm = algo::to_string(r.algorithm);
    row.dataset_size = r.dataset_size;
    row.seed = r.seed;
    row.update_index = ckpt.update_index;
    row.train_mse = eval::action_mse(ckpt, probe);
    row.val_mse = eval::action_mse(ckpt, shared.val);
    if (eval_env) {
      row.online_return = eval::online_evaluate(ckpt, *eval_env, c.eval_episodes, eval_seed);
      row.normalized_score = eval::normalized_score(*row.online_return, *shared.anchors);
    }
    metrics << eval::to_csv_line(row) << '\n' << std::flush;
    timing << ckpt.update_index << ','
           << fmt::format("{:.3f}", std::chrono::duration<double>(clock::now() - started).count()) << '\n'
           << std::flush;
    rows.push_back(std::move(row));
  };
  if (c.save_checkpoints) {
    hooks.on_checkpoint = [&](const algo::PolicyCheckpoint& ckpt) {
      algo::save_checkpoint(ckpt, r.run_dir / fmt::format("ckpt_{}", ckpt.update_index));
    };
  }

  const std::uint64_t thread_steps_before = env::env_steps_on_this_thread();
  auto result = algo::train_agent(acfg, problem, train, c.n_updates, c.checkpoint_every, r.seed, hooks);
  const std::uint64_t thread_steps = env::env_steps_on_this_thread() - thread_steps_before;
  const std::uint64_t eval_steps = eval_env ? eval_env->step_count() : 0;

  RunOutcome out;
  out.status = RunStatus::done;
  out.training_env_steps = thread_steps - eval_steps;
  out.updates_performed = c.n_updates;

  json summary = {{"layout_version", kLayoutVersion},
                  {"run_id", r.run_id},
                  {"config_digest", r.config_digest},
                  {"algorithm", algo::to_string(r.algorithm)},
                  {"dataset_size", r.dataset_size},
                  {"train_transitions", train.size()},
                  {"seed", r.seed},
                  {"n_updates", c.n_updates},
                  {"training_env_steps", out.training_env_steps},
                  {"learner_env_steps", result.learner_env_steps},
                  {"eval_env_steps", eval_steps},
                  {"status", "done"}};
  if (!rows.empty()) {
    summary["early_stop_update"] = eval::early_stop_select(rows);
    summary["final_val_mse"] = rows.back().val_mse;
    summary["final_train_mse"] = rows.back().train_mse;
    if (rows.back().online_return) summary["final_online_return"] = *rows.back().online_return;
    if (rows.back().normalized_score) summary["final_normalized_score"] = *rows.back().normalized_score;
  }
  write_json_atomic(r.run_dir / "summary.json", summary);
  return out;
}

bool is_run_done(const RunRecord& r) {
  const json s = read_json(r.run_dir / "summary.json");
  return s.is_object() && s.value("status", "") == "done" && s.value("layout_version", 0) == kLayoutVersion &&
         s.value("config_digest", "") == r.config_digest && fs::exists(r.metrics_path());
}

fs::path registry_path(const ExperimentConfig& config) {
  return fs::path(config.output_root) / "registry.json";
}

namespace {

json record_json(const RunRecord& r) {
  return {{"run_id", r.run_id},
          {"algorithm", algo::to_string(r.algorithm)},
          {"dataset_size", r.dataset_size},
          {"seed", r.seed},
          {"config_digest", r.config_digest},
          {"status", to_string(r.status)},
          {"run_dir", r.run_dir.string()},
          {"message", r.message}};
}

}  // namespace

std::vector<RunRecord> read_registry(const fs::path& file) {
  const json j = read_json(file);
  std::vector<RunRecord> out;
  if (!j.is_object() || !j.contains("runs")) return out;
  try {
    for (const auto& e : j.at("runs")) {
      RunRecord r;
      r.run_id = e.at("run_id").get<std::string>();
      r.algorithm = algo::parse_algo_id(e.at("algorithm").get<std::string>());
      r.dataset_size = e.at("dataset_size").get<std::int64_t>();
      r.seed = e.at("seed").get<std::uint64_t>();
      r.config_digest = e.at("config_digest").get<std::string>();
      r.status = parse_run_status(e.at("status").get<std::string>());
      r.run_dir = e.at("run_dir").get<std::string>();
      r.message = e.value("message", "");
      out.push_back(std::move(r));
    }
  } catch (const json::exception& ex) {
    throw ValidationError("malformed registry " + file.string() + ": " + ex.what());
  }
  return out;
}

ExecuteSummary execute(const ExperimentConfig& config, std::vector<RunRecord> plan, int parallelism,
                       std::ostream* log) {
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  fs::create_directories(config.output_root);
  const fs::path reg_file = registry_path(config);

  // Registry entries outside this plan are preserved.
  std::vector<RunRecord> others;
  for (auto& r : read_registry(reg_file)) {
    const bool in_plan = std::any_of(plan.begin(), plan.end(), [&](const auto& p) { return p.run_id == r.run_id; });
    if (!in_plan) others.push_back(std::move(r));
  }

  std::mutex mu;
  auto write_registry = [&]() {
    json runs = json::array();
    for (const auto& r : others) runs.push_back(record_json(r));
    for (const auto& r : plan) runs.push_back(record_json(r));
    write_json_atomic(reg_file, {{"layout_version", kLayoutVersion}, {"runs", runs}});
  };

  ExecuteSummary summary;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (is_run_done(plan[i])) {
      plan[i].status = RunStatus::done;
      ++summary.skipped;
    } else {
      plan[i].status = RunStatus::pending;
      todo.push_back(i);
    }
  }
  write_registry();

  std::optional<SharedData> shared;
  if (!todo.empty()) shared = prepare_data(config);

  std::atomic<std::size_t> next{0};
  std::atomic<std::int64_t> updates{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      RunRecord& r = plan[todo[k]];
      {
        std::lock_guard lock(mu);
        r.status = RunStatus::running;
        write_registry();
      }
      const auto t0 = std::chrono::steady_clock::now();
      RunStatus status = RunStatus::failed;
      std::string message;
      try {
        RunOutcome o = run_one(config, *shared, r);
        status = o.status;
        updates += o.updates_performed;
      } catch (const std::exception& e) {
        message = e.what();
        try {
          write_json_atomic(r.run_dir / "summary.json",
                            {{"layout_version", kLayoutVersion}, {"run_id", r.run_id}, {"status", "failed"},
                             {"message", message}});
        } catch (const std::exception&) {
        }
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::lock_guard lock(mu);
      r.status = status;
      r.message = message;
      write_registry();
      if (log) {
        *log << fmt::format("[{}/{}] {} {} ({:.1f}s){}\n", k + 1, todo.size(), r.run_id, to_string(status),
                            secs, message.empty() ? "" : ": " + message)
             << std::flush;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(parallelism, static_cast<int>(todo.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : plan) {
    if (r.status == RunStatus::done) ++summary.done;
    if (r.status == RunStatus::failed) ++summary.failed;
  }
  summary.done -= summary.skipped;
  summary.updates_performed = updates;
  summary.records = std::move(plan);
  return summary;
}

std::vector<RunMetrics> load_done_runs(const std::vector<RunRecord>& records) {
  std::vector<RunMetrics> out;
  for (const auto& r : records) {
    if (!is_run_done(r)) continue;
    RunMetrics m{r, eval::read_metrics(r.metrics_path())};
    m.record.status = RunStatus::done;
    out.push_back(std::move(m));
  }
  return out;
}

double metric_value(const eval::MetricsRow& row, const std::string& metric) {
  if (metric == "train_mse") return row.train_mse;
  if (metric == "val_mse") return row.val_mse;
  if (metric == "overfit_gap") return eval::overfit_gap(row.train_mse, row.val_mse);
  if (metric == "online_return" || metric == "normalized_score") {
    const auto& v = metric == "online_return" ? row.online_return : row.normalized_score;
    if (!v) throw ValidationError("run " + row.run_id + " has no " + metric + " values");
    return *v;
  }
  throw ValidationError("unknown metric '" + metric +
                        "' (valid: train_mse, val_mse, online_return, normalized_score, overfit_gap)");
}

std::vector<AggregateRow> aggregate(const std::vector<RunMetrics>& runs, const std::string& metric) {
  // Group by (algorithm, size), in first-appearance order.
  std::vector<std::pair<std::string, std::int64_t>> keys;
  std::map<std::pair<std::string, std::int64_t>, std::vector<const RunMetrics*>> groups;
  for (const auto& r : runs) {
    auto key = std::make_pair(algo::to_string(r.record.algorithm), r.record.dataset_size);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : keys) {
    const auto& members = groups[key];
    const auto& first = members.front()->rows;
    for (const auto* m : members) {
      bool same = m->rows.size() == first.size();
      for (std::size_t i = 0; same && i < first.size(); ++i) same = m->rows[i].update_index == first[i].update_index;
      if (!same) {
        throw ValidationError(fmt::format("runs of ({}, {}) have mixed update grids", key.first, key.second));
      }
    }
    for (std::size_t i = 0; i < first.size(); ++i) {
      AggregateRow a;
      a.algorithm = key.first;
      a.dataset_size = key.second;
      a.update_index = first[i].update_index;
      a.metric = metric;
      double sum = 0.0;
      a.band_low = std::numeric_limits<double>::infinity();
      a.band_high = -std::numeric_limits<double>::infinity();
      for (const auto* m : members) {
        const double v = metric_value(m->rows[i], metric);
        sum += v;
        a.band_low = std::min(a.band_low, v);
        a.band_high = std::max(a.band_high, v);
      }
      a.n_seeds = static_cast<int>(members.size());
      a.mean = std::clamp(sum / a.n_seeds, a.band_low, a.band_high);
      out.push_back(a);
    }
  }
  return out;
}

}  // namespace osb::sweep
