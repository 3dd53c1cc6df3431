#include "rforge/evaluation.hpp"

#include "rforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rforge {

using nlohmann::json;

std::optional<std::size_t> detect_convergence(std::span<const double> history, std::size_t window, double tol) {
  if (window < 2) throw Error("invalid_config", "convergence window must be at least 2");
  for (std::size_t i = window - 1; i < history.size(); ++i) {
    const auto w = history.subspan(i + 1 - window, window);
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(window);
    if (*hi - *lo <= tol * std::max(1.0, std::abs(mean))) return i;
  }
  return std::nullopt;
}

std::string_view aggregation_name(Aggregation a) {
  switch (a) {
  case Aggregation::StepMean: return "step_mean";
  case Aggregation::TrajectoryMean: return "trajectory_mean";
  case Aggregation::MaxThenMean: return "max_then_mean";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view name) {
  for (auto a : {Aggregation::StepMean, Aggregation::TrajectoryMean, Aggregation::MaxThenMean}) {
    if (aggregation_name(a) == name) return a;
  }
  throw Error("invalid_profile", "unknown aggregation '" + std::string(name) + "'");
}

std::string_view verdict_name(Verdict v) { return v == Verdict::Good ? "good" : "bad"; }

Verdict classify(double success_rate, double threshold, bool failed) {
  return !failed && success_rate >= threshold ? Verdict::Good : Verdict::Bad;
}

double compute_metric(const MetricDef& metric, std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw Error("empty_trajectory", "metric '" + metric.id + "' over no trajectories");
  const CompiledReward f(parse_reward("return " + metric.expression), trajs.front().schema());
  double total = 0.0;
  std::size_t count = 0;
  double outer = 0.0;
  for (const auto& traj : trajs) {
    const double base = metric.normalize_by_initial ? f(traj.row(0)) : 1.0;
    if (metric.normalize_by_initial && base == 0.0) {
      throw EvalError("division_by_zero", "metric '" + metric.id + "' has a zero initial value", metric.id);
    }
    double sum = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < traj.size(); ++k) {
      const double v = f(traj.row(k)) / base;
      sum += v;
      mx = std::max(mx, v);
    }
    const std::size_t n = traj.size() > 0 ? traj.size() - 1 : 0;
    total += sum;
    count += n;
    switch (metric.aggregation) {
    case Aggregation::StepMean: break;
    case Aggregation::TrajectoryMean: outer += n > 0 ? sum / static_cast<double>(n) : 0.0; break;
    case Aggregation::MaxThenMean: outer += n > 0 ? mx : 0.0; break;
    }
  }
  if (metric.aggregation == Aggregation::StepMean) return count > 0 ? total / static_cast<double>(count) : 0.0;
  return outer / static_cast<double>(trajs.size());
}

EvalReport failure_report(const TaskSpec& spec, std::span<const MetricDef> metrics, std::size_t n_t, std::string note) {
  EvalReport r;
  r.n_t = n_t;
  for (const auto& m : metrics) r.metrics.emplace_back(m.id, 0.0);
  for (const auto& g : spec.goals) r.goal_rates.emplace_back(g.label, 0.0);
  r.failure = std::move(note);
  r.verdict = Verdict::Bad;
  return r;
}

EvalReport evaluate_trajectories(std::span<const Trajectory> trajs, const RewardProgram& program, const TaskSpec& spec,
                                 std::span<const MetricDef> metrics, double threshold) {
  if (trajs.empty()) throw Error("empty_trajectory", "evaluation needs at least one trajectory");
  EvalReport r;
  r.n_t = trajs.size();
  const auto goals = goal_report(spec, trajs);
  for (std::size_t g = 0; g < spec.goals.size(); ++g) r.goal_rates.emplace_back(spec.goals[g].label, goals.goal_rates[g]);
  r.success_rate = goals.overall;

  try {
    const CompiledReward reward(program, trajs.front().schema());
    double reward_sum = 0.0;
    double length_sum = 0.0;
    for (const auto& t : trajs) {
      reward_sum += discounted_return(t, reward, 1.0);
      length_sum += static_cast<double>(t.size() - 1);
    }
    r.avg_episode_reward = reward_sum / static_cast<double>(trajs.size());
    r.avg_episode_length = length_sum / static_cast<double>(trajs.size());
    for (const auto& m : metrics) r.metrics.emplace_back(m.id, compute_metric(m, trajs));
  } catch (const Error& e) {
    auto failed = failure_report(spec, metrics, trajs.size(), e.code() + ": " + e.what());
    failed.goal_rates = r.goal_rates;
    failed.success_rate = r.success_rate;
    return failed;
  }
  r.verdict = classify(r.success_rate, threshold, false);
  return r;
}

EvalReport evaluate_policy(const EnvProfile& profile, const Policy& policy, const RewardProgram& program,
                           const TaskSpec& spec, std::span<const MetricDef> metrics, std::size_t n_t,
                           std::uint64_t seed, double threshold, std::vector<Trajectory>* kept) {
  if (n_t < 1) throw Error("invalid_config", "n_t must be at least 1");
  std::vector<Trajectory> trajs;
  trajs.reserve(n_t);
  for (std::size_t i = 0; i < n_t; ++i) trajs.push_back(rollout(profile, policy, seed + i));
  auto report = evaluate_trajectories(trajs, program, spec, metrics, threshold);
  if (kept) *kept = std::move(trajs);
  return report;
}

void attach_training(EvalReport& report, const TrainingSummary& summary) {
  report.converged_at_step = summary.converged_at_step;
  report.total_train_steps = summary.total_steps;
}

std::string report_to_json(const EvalReport& r) {
  json j = json::object();
  j["verdict"] = verdict_name(r.verdict);
  j["converged_at_step"] = r.converged_at_step ? json(*r.converged_at_step) : json(nullptr);
  j["total_train_steps"] = r.total_train_steps;
  j["avg_episode_reward"] = r.avg_episode_reward;
  j["avg_episode_length"] = r.avg_episode_length;
  json metrics = json::array();
  for (const auto& [id, v] : r.metrics) metrics.push_back({{"id", id}, {"value", v}});
  j["metrics"] = metrics;
  json goals = json::array();
  for (const auto& [label, v] : r.goal_rates) goals.push_back({{"goal", label}, {"rate", v}});
  j["goal_rates"] = goals;
  j["success_rate"] = r.success_rate;
  j["n_t"] = r.n_t;
  j["failure"] = r.failure ? json(*r.failure) : json(nullptr);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    EvalReport r;
    const auto v = j.at("verdict").get<std::string>();
    if (v != "good" && v != "bad") throw Error("invalid_report", "verdict must be good or bad");
    r.verdict = v == "good" ? Verdict::Good : Verdict::Bad;
    if (!j.at("converged_at_step").is_null()) r.converged_at_step = j["converged_at_step"].get<std::size_t>();
    r.total_train_steps = j.value("total_train_steps", std::size_t{0});
    r.avg_episode_reward = j.at("avg_episode_reward").get<double>();
    r.avg_episode_length = j.at("avg_episode_length").get<double>();
    for (const auto& m : j.at("metrics")) r.metrics.emplace_back(m.at("id").get<std::string>(), m.at("value").get<double>());
    for (const auto& g : j.at("goal_rates")) {
      r.goal_rates.emplace_back(g.at("goal").get<std::string>(), g.at("rate").get<double>());
    }
    r.success_rate = j.at("success_rate").get<double>();
    r.n_t = j.at("n_t").get<std::size_t>();
    if (j.contains("failure") && !j["failure"].is_null()) r.failure = j["failure"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error("invalid_report", e.what());
  }
}

} // namespace rforge
