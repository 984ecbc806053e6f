// Acceptance suite: one PASS/FAIL line per criterion P1..P12.
// Arguments restrict the run to the named criteria (e.g. `acceptance P3 P12`).
// The desk sweep for P4..P10 is persistent and resumable; its output root is
// $OSB_ACCEPTANCE_ROOT or <build>/acceptance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "../support/oracles.hpp"
#include "../support/random_data.hpp"
#include "osb/algo/learner.hpp"
#include "osb/algo/losses.hpp"
#include "osb/core/error.hpp"
#include "osb/data/io.hpp"
#include "osb/env/linquad.hpp"
#include "osb/env/registry.hpp"
#include "osb/eval/metrics.hpp"
#include "osb/nn/optim.hpp"
#include "osb/sweep/runner.hpp"

namespace fs = std::filesystem;
using namespace osb;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Collects named sub-checks; the criterion passes only if all hold.
struct Checks {
  std::vector<std::string> failures;
  int count = 0;
  void expect(bool ok, const std::string& what) {
    ++count;
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    expect(std::abs(got - want) <= tol, fmt::format("{}: got {} want {}", what, got, want));
  }
  Verdict verdict(const std::string& summary) const {
    if (failures.empty()) return {true, fmt::format("{} ({} checks)", summary, count)};
    std::string d = fmt::format("{}/{} checks failed: ", failures.size(), count);
    for (std::size_t i = 0; i < failures.size() && i < 5; ++i) d += (i ? "; " : "") + failures[i];
    return {false, d};
  }
};

algo::PolicyCheckpoint linear_policy(const nn::Matrix<float>& w, const Eigen::VectorXf& b) {
  algo::PolicyCheckpoint c;
  c.state_dim = static_cast<int>(w.rows());
  c.action_dim = static_cast<int>(w.cols());
  c.max_action = 10.0f;
  c.normalization = data::NormalizationStats::identity(c.state_dim);
  nn::MLPSpec spec{c.state_dim, c.action_dim, {}, nn::Activation::relu, nn::OutputTransform::identity, 1.0};
  auto p = nn::init_params<float>(spec, 0);
  p.tensor(0) = w;
  p.tensor(1) = b.transpose();
  c.networks.emplace("actor", algo::NetworkSnapshot{spec, p});
  return c;
}

data::TransitionDataset slice(const data::RowMatrixF& s, const data::RowMatrixF& a) {
  data::TransitionDataset d;
  d.states = s;
  d.actions = a;
  d.next_states = s;
  d.rewards = Eigen::VectorXf::Zero(s.rows());
  d.dones.assign(static_cast<std::size_t>(s.rows()), 0);
  return d;
}

Verdict p1_formulas() {
  Checks c;
  const double tol = 1e-9;
  eval::ScoreAnchors anchors{-50.0, -10.0, 0, 0};
  c.near(eval::normalized_score(-10.0, anchors), 100.0, tol, "normalized_score(expert)");
  c.near(eval::normalized_score(-50.0, anchors), 0.0, tol, "normalized_score(random)");
  c.near(eval::normalized_score(-30.0, anchors), 50.0, tol, "normalized_score(midway)");
  bool threw = false;
  try {
    eval::normalized_score(1.0, eval::ScoreAnchors{2.0, 2.0, 0, 0});
  } catch (const ValidationError&) {
    threw = true;
  }
  c.expect(threw, "normalized_score rejects equal anchors");

  c.near(algo::expectile_loss(1.0, 0.7), 0.7, tol, "expectile(1, 0.7)");
  c.near(algo::expectile_loss(-1.0, 0.7), 0.3, tol, "expectile(-1, 0.7)");
  c.near(algo::expectile_loss(1.7, 0.5), 0.5 * 1.7 * 1.7, tol, "expectile(tau 0.5) = MSE/2");

  data::RowMatrixF s1(1, 2), a1 = data::RowMatrixF::Zero(1, 2);
  s1.setZero();
  Eigen::VectorXf b(2);
  b << 1.0f, 0.0f;
  c.near(eval::action_mse(linear_policy(nn::Matrix<float>::Zero(2, 2), b), slice(s1, a1)), 0.5, tol,
         "action_mse single row");
  data::RowMatrixF s3(3, 1), a3 = data::RowMatrixF::Constant(3, 1, 2.0f);
  s3 << 0.5f, -1.0f, 3.0f;
  c.near(eval::action_mse(linear_policy(nn::Matrix<float>::Zero(1, 1), Eigen::VectorXf::Zero(1)), slice(s3, a3)),
         4.0, tol, "action_mse zero policy");
  c.near(eval::action_mse(linear_policy(nn::Matrix<float>::Identity(1, 1), Eigen::VectorXf::Zero(1)), slice(s3, s3)),
         0.0, tol, "action_mse identity");

  nn::MLPSpec spec{1, 1, {}, nn::Activation::relu, nn::OutputTransform::identity, 1.0};
  auto target = nn::init_params<double>(spec, 0), online = nn::init_params<double>(spec, 1);
  target.values.setZero();
  online.values.setConstant(2.0);
  nn::polyak_update(target, online, 0.5);
  c.near(target.values.maxCoeff(), 1.0, tol, "polyak tau 0.5");
  auto frozen = target;
  nn::polyak_update(frozen, online, 0.0);
  c.near((frozen.values - target.values).cwiseAbs().maxCoeff(), 0.0, tol, "polyak tau 0");
  nn::polyak_update(frozen, online, 1.0);
  c.near((frozen.values - online.values).cwiseAbs().maxCoeff(), 0.0, tol, "polyak tau 1");

  env::Trajectory t;
  t.rewards = Eigen::VectorXf::Ones(3);
  c.near(eval::discounted_return(t, 0.5), 1.75, tol, "discounted_return gamma 0.5");
  c.near(eval::discounted_return(t, 1.0), 3.0, tol, "discounted_return gamma 1");
  t.rewards << 4.0f, 2.0f, 9.0f;
  c.near(eval::discounted_return(t, 0.0), 4.0, tol, "discounted_return gamma 0");

  c.near(eval::overfit_gap(0.5, 2.0), 1.5, tol, "overfit_gap");
  c.near(eval::overfit_gap(0.3, 0.3), 0.0, tol, "overfit_gap equal");

  c.near(eval::rank_correlation({1, 2, 3}, {10, 20, 30}), 1.0, tol, "spearman +1");
  c.near(eval::rank_correlation({1, 2, 3}, {3, 2, 1}), -1.0, tol, "spearman -1");
  c.near(eval::rank_correlation({1, 2, 3, 4}, {2, 1, 4, 3}), 0.6, tol, "spearman 0.6");
  c.near(eval::rank_correlation({1, 2, 3, 4}, {2, 1, 4, 3}), testing::spearman({1, 2, 3, 4}, {2, 1, 4, 3}), tol,
         "spearman oracle");
  return c.verdict("all formula examples within 1e-9");
}

Verdict p2_gradients() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    nn::MLPSpec spec;
    spec.input_dim = 1 + static_cast<int>(rng() % 5);
    spec.output_dim = 1 + static_cast<int>(rng() % 3);
    spec.hidden.assign(1 + rng() % 2, 0);
    for (auto& h : spec.hidden) h = 3 + static_cast<int>(rng() % 8);
    spec.activation = rng() % 2 ? nn::Activation::tanh : nn::Activation::relu;
    spec.output = rng() % 2 ? nn::OutputTransform::tanh_scaled : nn::OutputTransform::identity;
    spec.bound = 1.5;
    const auto params = nn::init_params<double>(spec, trial);
    const Eigen::Index batch = 2 + static_cast<Eigen::Index>(rng() % 7);
    nn::Matrix<double> x(batch, spec.input_dim), y(batch, spec.output_dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = u(rng);
    auto loss_value = [&](const nn::Params<double>& p) {
      const nn::Matrix<double> out = nn::forward(spec, p, x);
      return (out - y).squaredNorm() / static_cast<double>(out.size());
    };
    const nn::Vector<double> analytic = nn::gradient(
        [&](nn::Tape<double>& t, const nn::BoundParams& bp) {
          nn::Var out = nn::forward(t, spec, bp, t.constant(x));
          return t.mean(t.square(t.sub(out, t.constant(y))));
        },
        params);
    nn::Vector<double> fd(params.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      auto plus = params, minus = params;
      plus.values[i] += h;
      minus.values[i] -= h;
      fd[i] = (loss_value(plus) - loss_value(minus)) / (2 * h);
    }
    const double denom = std::max({analytic.norm(), fd.norm(), 1e-12});
    worst = std::max(worst, (analytic - fd).norm() / denom);
  }
  return {worst < 1e-4, fmt::format("20 random nets, max relative error {:.3e} (< 1e-4)", worst)};
}

Verdict p3_least_squares() {
  auto env = env::make_env("linquad-v0");
  const auto& es = env->spec();
  const auto train = data::flatten(data::collect_expert_dataset(*env, env->expert_policy(), 5000, 0.1, 11));
  const Eigen::MatrixXd oracle = testing::normal_equations(train.states.cast<double>(), train.actions.cast<double>());

  algo::AlgoConfig config;
  config.algorithm = algo::AlgoId::bc;
  config.actor_hidden = std::vector<int>{};
  config.actor_output = nn::OutputTransform::identity;
  const auto problem = algo::ProblemSpec::from_bounds(es.state_dim, es.action_low, es.action_high, "linquad-v0");
  const std::int64_t n_updates = 20000;
  auto result = algo::train_agent(config, problem, train, n_updates, 1000, 5);

  auto rmse = [&](const algo::PolicyCheckpoint& ckpt) {
    const auto& p = ckpt.network("actor").params;
    Eigen::MatrixXd fitted(es.state_dim + 1, es.action_dim);
    fitted.topRows(es.state_dim) = p.tensor(0).cast<double>();
    fitted.bottomRows(1) = p.tensor(1).cast<double>();
    return std::sqrt((fitted - oracle).squaredNorm() / static_cast<double>(fitted.size()));
  };
  std::int64_t first = -1;
  for (const auto& ckpt : result.checkpoints) {
    if (first < 0 && rmse(ckpt) <= 1e-2) first = ckpt.update_index;
  }
  const double final_rmse = rmse(result.checkpoints.back());
  return {final_rmse <= 1e-2,
          fmt::format("parameter RMSE vs normal equations {:.2e} after {} updates (<= 1e-2 first at {})", final_rmse,
                      n_updates, first < 0 ? std::string("never") : std::to_string(first))};
}

Verdict p11_data_protocol() {
  std::mt19937_64 rng(11);
  const fs::path dir = fs::temp_directory_path() / fmt::format("osb_accept_p11_{}", ::getpid());
  fs::remove_all(dir);
  int split_fail = 0, size_fail = 0, trip_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto d = testing::random_dataset(rng);
    // Split disjointness.
    const auto n_val = 1 + static_cast<data::Index>(rng() % (d.trajectories.size() - 1));
    auto split = data::hold_out_validation(d, n_val, trial);
    std::set<float> train_tags;
    for (const auto& t : split.train.trajectories)
      for (Eigen::Index i = 0; i < t.length(); ++i) train_tags.insert(t.states(i, 0));
    bool disjoint = split.train.total_transitions() + split.val.size() == d.total_transitions();
    for (Eigen::Index i = 0; i < split.val.size(); ++i) disjoint = disjoint && !train_tags.count(split.val.states(i, 0));
    split_fail += !disjoint;
    // Size exactness in every mode.
    for (auto mode : {data::SubsampleMode::trajectory_prefix, data::SubsampleMode::trajectory_uniform,
                      data::SubsampleMode::uniform_transitions}) {
      const auto n = 1 + static_cast<data::Index>(rng() % d.total_transitions());
      size_fail += data::subsample(d, n, mode, trial).size() != n;
    }
    // Native round-trip.
    const auto path = dir / std::to_string(trial);
    data::save_native(d, path);
    const auto back = data::load_native(path);
    bool same = back.trajectories.size() == d.trajectories.size() && back.state_dim == d.state_dim &&
                back.action_dim == d.action_dim && back.env_name == d.env_name;
    for (std::size_t i = 0; same && i < d.trajectories.size(); ++i) {
      const auto &x = d.trajectories[i], &y = back.trajectories[i];
      same = x.states == y.states && x.actions == y.actions && x.rewards == y.rewards &&
             x.next_states == y.next_states && x.dones == y.dones;
    }
    trip_fail += !same;
  }
  fs::remove_all(dir);
  return {split_fail + size_fail + trip_fail == 0,
          fmt::format("200 cases each: split failures {}, size failures {}, round-trip failures {}", split_fail,
                      size_fail, trip_fail)};
}

Verdict p12_riccati() {
  Checks c;
  auto scalar = [](double a, double b, double q, double r) {
    env::LinQuadSpec s;
    s.A_dyn = env::Mat::Constant(1, 1, a);
    s.B_dyn = env::Mat::Constant(1, 1, b);
    s.Q_cost = env::Mat::Constant(1, 1, q);
    s.R_cost = env::Mat::Constant(1, 1, r);
    return s;
  };
  struct Case {
    double a, b, q, r, g;
  };
  for (const Case& k : {Case{0, 1, 1, 1, 1}, Case{1, 1, 1, 1, 1}, Case{0.9, 0.5, 2, 0.3, 0.99},
                        Case{1.2, 1, 1, 0.1, 0.95}, Case{-0.7, 2, 0.5, 1, 1}}) {
    const auto sol = env::lqr_optimal_policy(scalar(k.a, k.b, k.q, k.r), k.g);
    const double p = testing::scalar_riccati(k.a, k.b, k.q, k.r, k.g);
    const double kk = testing::scalar_gain(k.a, k.b, k.r, k.g, p);
    c.near(sol.value(0, 0), p, 1e-10, fmt::format("P a={} b={}", k.a, k.b));
    c.near(sol.gain(0, 0), kk, 1e-10, fmt::format("K a={} b={}", k.a, k.b));
  }
  c.near(env::lqr_optimal_policy(scalar(1, 1, 1, 1), 1.0).value(0, 0), (1 + std::sqrt(5.0)) / 2, 1e-10, "golden ratio");
  c.near(env::lqr_optimal_policy(scalar(0, 1, 1, 1), 1.0).gain(0, 0), 0.0, 1e-10, "a=0 gives K=0");

  // Fixed-point residual on random stabilizable systems and the default env.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 0.5);
  double worst = 0.0;
  std::vector<env::LinQuadSpec> specs = {env::LinQuadOptions::defaults().dynamics};
  for (int i = 0; i < 20; ++i) {
    const int n = 1 + static_cast<int>(rng() % 4), m = 1 + static_cast<int>(rng() % 2);
    env::LinQuadSpec s;
    s.A_dyn = env::Mat::Identity(n, n) * 0.9;
    for (int r = 0; r < n; ++r)
      for (int q = 0; q < n; ++q) s.A_dyn(r, q) += normal(rng) * 0.3;
    s.B_dyn = env::Mat(n, m);
    for (int r = 0; r < n; ++r)
      for (int q = 0; q < m; ++q) s.B_dyn(r, q) = normal(rng) + (r == q ? 1.0 : 0.0);
    env::Mat l = env::Mat::Identity(n, n);
    s.Q_cost = l * l.transpose();
    s.R_cost = env::Mat::Identity(m, m) * 0.5;
    specs.push_back(s);
  }
  for (const auto& s : specs) {
    const double g = 0.99;
    const auto sol = env::lqr_optimal_policy(s, g);
    const double residual = (sol.value - env::riccati_map(s, g, sol.value)).cwiseAbs().maxCoeff();
    worst = std::max(worst, residual);
  }
  c.expect(worst <= 1e-8, fmt::format("residual {}", worst));
  return c.verdict(fmt::format("scalar cases within 1e-10, max fixed-point residual {:.2e}", worst));
}

// ---------------------------------------------------------------- desk sweep

struct Sweep {
  sweep::ExperimentConfig config;
  std::vector<sweep::RunRecord> plan;
  std::vector<sweep::RunMetrics> runs;
  std::map<std::string, nlohmann::json> summaries;  // run_id -> summary.json
  std::string error;
};

fs::path acceptance_root() {
  if (const char* env = std::getenv("OSB_ACCEPTANCE_ROOT"); env && *env) return env;
  return OSB_ACCEPTANCE_ROOT_DEFAULT;
}

Sweep run_desk_sweep() {
  Sweep s;
  try {
    s.config = sweep::load_config(fs::path(OSB_SOURCE_DIR) / "configs" / "desk.json");
    s.config.output_root = (acceptance_root() / "desk").string();
    s.plan = sweep::plan_sweep(s.config);
    const auto started = std::chrono::steady_clock::now();
    std::cerr << fmt::format("desk sweep: {} runs under {}\n", s.plan.size(), s.config.output_root);
    auto summary = sweep::execute(s.config, s.plan, s.config.parallelism, &std::cerr);
    std::cerr << fmt::format("desk sweep: done={} skipped={} failed={} in {:.0f}s\n", summary.done, summary.skipped,
                             summary.failed,
                             std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
    s.plan = summary.records;
    if (summary.failed > 0) {
      for (const auto& r : s.plan)
        if (r.status == sweep::RunStatus::failed) s.error += r.run_id + ": " + r.message + "; ";
    }
    s.runs = sweep::load_done_runs(s.plan);
    for (const auto& r : s.plan) {
      std::ifstream in(r.run_dir / "summary.json");
      if (in) s.summaries[r.run_id] = nlohmann::json::parse(in);
    }
  } catch (const std::exception& e) {
    s.error = e.what();
  }
  return s;
}

const sweep::RunMetrics* find_run(const Sweep& s, algo::AlgoId a, std::int64_t size, std::uint64_t seed) {
  for (const auto& r : s.runs)
    if (r.record.algorithm == a && r.record.dataset_size == size && r.record.seed == seed) return &r;
  return nullptr;
}

std::int64_t smallest(const Sweep& s) {
  return *std::min_element(s.config.dataset_sizes.begin(), s.config.dataset_sizes.end());
}
std::int64_t largest(const Sweep& s) {
  return *std::max_element(s.config.dataset_sizes.begin(), s.config.dataset_sizes.end());
}

Verdict sweep_unavailable(const Sweep& s) { return {false, "desk sweep incomplete: " + s.error}; }

Verdict p4_purity(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  std::uint64_t total = 0;
  int offline = 0;
  for (const auto& r : s.plan) {
    if (r.algorithm == algo::AlgoId::dac) continue;
    const auto& j = s.summaries.at(r.run_id);
    total += j.at("training_env_steps").get<std::uint64_t>() + j.at("learner_env_steps").get<std::uint64_t>();
    ++offline;
  }
  return {total == 0, fmt::format("{} offline runs, total training env steps {}", offline, total)};
}

Verdict p5_size_drop(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  const auto lo = smallest(s), hi = largest(s);
  int strict = 0;
  bool all_ok = true;
  std::string detail;
  for (auto a : s.config.algorithms) {
    double big = 0, small = 0;
    for (auto seed : s.config.seeds) {
      big += *find_run(s, a, hi, seed)->rows.back().normalized_score;
      small += *find_run(s, a, lo, seed)->rows.back().normalized_score;
    }
    big /= s.config.seeds.size();
    small /= s.config.seeds.size();
    all_ok = all_ok && big >= small - 5.0;
    strict += big > small;
    detail += fmt::format("{} {:.1f} vs {:.1f}; ", algo::to_string(a), big, small);
  }
  return {all_ok && strict >= 3,
          fmt::format("score(n={}) vs score(n={}): {}strictly higher for {}/{}", hi, lo, detail, strict,
                      s.config.algorithms.size())};
}

Verdict p6_overfit_gap(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  const auto lo = smallest(s), hi = largest(s);
  bool ok = true;
  std::string detail;
  for (auto a : s.config.algorithms) {
    int wins = 0;
    for (auto seed : s.config.seeds) {
      const auto& small = find_run(s, a, lo, seed)->rows.back();
      const auto& big = find_run(s, a, hi, seed)->rows.back();
      wins += eval::overfit_gap(small.train_mse, small.val_mse) > eval::overfit_gap(big.train_mse, big.val_mse);
    }
    ok = ok && wins >= 2;
    detail += fmt::format("{} {}/{}; ", algo::to_string(a), wins, s.config.seeds.size());
  }
  return {ok, fmt::format("final gap(n={}) > gap(n={}) in seeds: {}", lo, hi, detail)};
}

Verdict p7_val_vs_return(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  const auto lo = smallest(s);
  bool ok = true;
  std::string detail;
  for (auto a : {algo::AlgoId::bc, algo::AlgoId::td3bc}) {
    int hits = 0;
    std::string rhos;
    for (auto seed : s.config.seeds) {
      const auto* run = find_run(s, a, lo, seed);
      std::vector<double> val, ret;
      for (const auto& r : run->rows) {
        val.push_back(r.val_mse);
        ret.push_back(*r.online_return);
      }
      const double rho = eval::rank_correlation(val, ret);
      hits += rho <= -0.5;
      rhos += fmt::format("{}{:.2f}", rhos.empty() ? "" : ",", rho);
    }
    ok = ok && hits >= 2;
    detail += fmt::format("{} rho=[{}] {}/{}; ", algo::to_string(a), rhos, hits, s.config.seeds.size());
  }
  return {ok, fmt::format("Spearman(val_mse, return) at n={}: {}", lo, detail)};
}

Verdict p8_early_stop(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  const auto lo = smallest(s);
  bool ok = true;
  std::string detail;
  for (auto a : s.config.algorithms) {
    int hits = 0;
    for (auto seed : s.config.seeds) {
      const auto* run = find_run(s, a, lo, seed);
      const auto pick = eval::early_stop_select(run->rows);
      double chosen = 0;
      for (const auto& r : run->rows)
        if (r.update_index == pick) chosen = *r.normalized_score;
      hits += chosen >= *run->rows.back().normalized_score - 5.0;
    }
    ok = ok && hits >= 2;
    detail += fmt::format("{} {}/{}; ", algo::to_string(a), hits, s.config.seeds.size());
  }
  return {ok, fmt::format("early-stop score >= final - 5 points at n={}: {}", lo, detail)};
}

// Seed-mean curves smoothed with a centred moving average; a window counts
// when, over at least 5 evaluations, train MSE falls and validation MSE rises
// by at least 5% each.
Verdict p9_false_improvement(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  const auto lo = smallest(s);
  std::vector<sweep::RunMetrics> at;
  for (const auto& r : s.runs)
    if (r.record.dataset_size == lo) at.push_back(r);
  const auto train = sweep::aggregate(at, "train_mse");
  const auto val = sweep::aggregate(at, "val_mse");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> curves;
  std::map<std::string, std::vector<std::int64_t>> steps;
  for (std::size_t i = 0; i < train.size(); ++i) {
    curves[train[i].algorithm].first.push_back(train[i].mean);
    curves[val[i].algorithm].second.push_back(val[i].mean);
    steps[train[i].algorithm].push_back(train[i].update_index);
  }
  auto smooth = [](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    const int k = 2;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
      double sum = 0;
      int n = 0;
      for (int j = std::max(0, i - k); j <= std::min<int>(v.size() - 1, i + k); ++j, ++n) sum += v[j];
      out[i] = sum / n;
    }
    return out;
  };
  std::vector<std::string> found;
  for (const auto& [algo_name, tv] : curves) {
    const auto t = smooth(tv.first), v = smooth(tv.second);
    const auto& idx = steps[algo_name];
    std::size_t best_i = 0, best_j = 0;
    double best_rise = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t j = i + 5; j < t.size(); ++j) {
        if (t[j] <= 0.95 * t[i] && v[j] >= 1.05 * v[i] && v[j] / v[i] > best_rise) {
          best_rise = v[j] / v[i];
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_rise > 0) {
      found.push_back(fmt::format("{} updates {}..{}: train {:.3g}->{:.3g}, val {:.3g}->{:.3g}", algo_name, idx[best_i],
                                  idx[best_j], t[best_i], t[best_j], v[best_i], v[best_j]));
    }
  }
  std::string detail;
  for (const auto& f : found) detail += f + "; ";
  return {!found.empty(), found.empty() ? fmt::format("no window at n={}", lo)
                                        : fmt::format("windows at n={}: {}", lo, detail)};
}

Verdict p10_determinism(const Sweep& s) {
  if (s.runs.size() != s.plan.size()) return sweep_unavailable(s);
  const auto lo = smallest(s);
  auto config = s.config;
  config.algorithms = {algo::AlgoId::bc};
  config.dataset_sizes = {lo};
  config.seeds = {s.config.seeds.front()};
  const fs::path root = fs::temp_directory_path() / fmt::format("osb_accept_p10_{}", ::getpid());
  fs::remove_all(root);
  config.output_root = root.string();
  auto plan = sweep::plan_sweep(config);
  auto out = sweep::execute(config, plan, 1);
  const auto* original = find_run(s, algo::AlgoId::bc, lo, config.seeds.front());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const bool same = out.done == 1 && plan[0].run_id == original->record.run_id &&
                    slurp(plan[0].metrics_path()) == slurp(original->record.metrics_path()) &&
                    !slurp(plan[0].metrics_path()).empty();
  fs::remove_all(root);
  return {same, fmt::format("bc n={} seed {} re-executed from scratch (data regenerated): metrics.csv {}", lo,
                            config.seeds.front(), same ? "byte-identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  auto wanted = [&](const std::string& id) { return only.empty() || only.count(id); };

  std::vector<std::pair<std::string, Verdict>> results;
  auto run = [&](const std::string& id, const std::string& title, const std::function<Verdict()>& fn) {
    if (!wanted(id)) return;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << fmt::format("{} {} {}: {}\n", id, v.pass ? "PASS" : "FAIL", title, v.detail) << std::flush;
    results.emplace_back(id, v);
  };

  run("P1", "formula exactness", p1_formulas);
  run("P2", "gradient oracle", p2_gradients);
  run("P3", "BC least-squares oracle", p3_least_squares);

  const std::vector<std::string> sweep_ids = {"P4", "P5", "P6", "P7", "P8", "P9", "P10"};
  if (std::any_of(sweep_ids.begin(), sweep_ids.end(), wanted)) {
    const Sweep s = run_desk_sweep();
    run("P4", "offline purity", [&] { return p4_purity(s); });
    run("P5", "score drops with dataset size", [&] { return p5_size_drop(s); });
    run("P6", "overfitting gap grows as data shrinks", [&] { return p6_overfit_gap(s); });
    run("P7", "validation MSE tracks return", [&] { return p7_val_vs_return(s); });
    run("P8", "early-stop utility", [&] { return p8_early_stop(s); });
    run("P9", "training loss gives a false sense of improvement", [&] { return p9_false_improvement(s); });
    run("P10", "determinism", [&] { return p10_determinism(s); });
  }

  run("P11", "data protocol", p11_data_protocol);
  run("P12", "Riccati oracle", p12_riccati);

  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.second.pass; });
  std::cout << fmt::format("{} of {} criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
