#pragma once

// Evaluation reports: objective metrics, per-goal success rates and the
// good/bad verdict.

#include "rforge/convergence.hpp"
#include "rforge/env.hpp"
#include "rforge/policy.hpp"
#include "rforge/reward_lang.hpp"
#include "rforge/stl.hpp"
#include "rforge/trajectory.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rforge {

enum class Aggregation : std::uint8_t {
  StepMean,        // mean over all steps of all trajectories
  TrajectoryMean,  // mean of per-trajectory step means
  MaxThenMean,     // per-trajectory max over steps, then mean
};

[[nodiscard]] std::string_view aggregation_name(Aggregation a);
[[nodiscard]] Aggregation parse_aggregation(std::string_view name);

struct MetricDef {
  std::string id;
  Aggregation aggregation = Aggregation::StepMean;
  /// Per-step scalar in the reward language, e.g. "abs(robot_linvel[0])".
  std::string expression;
  /// Divide each step value by the trajectory's value at the reset sample.
  bool normalize_by_initial = false;
};

enum class Verdict : std::uint8_t { Good, Bad };

[[nodiscard]] std::string_view verdict_name(Verdict v);

inline constexpr double kDefaultThreshold = 0.95;

struct EvalReport {
  Verdict verdict = Verdict::Bad;
  std::optional<std::size_t> converged_at_step;
  std::size_t total_train_steps = 0;
  double avg_episode_reward = 0.0;
  double avg_episode_length = 0.0;
  std::vector<std::pair<std::string, double>> metrics;     // in profile order
  std::vector<std::pair<std::string, double>> goal_rates;  // in spec order
  double success_rate = 0.0;
  std::size_t n_t = 0;
  std::optional<std::string> failure;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// good iff no failure note and sr >= threshold.
[[nodiscard]] Verdict classify(double success_rate, double threshold, bool failed = false);

/// Metric value over samples 1..N of each trajectory. Throws EvalError.
[[nodiscard]] double compute_metric(const MetricDef& metric, std::span<const Trajectory> trajs);

/// Builds a report from already-sampled trajectories. Reward or metric
/// failures produce a report with a failure note instead of throwing.
[[nodiscard]] EvalReport evaluate_trajectories(std::span<const Trajectory> trajs, const RewardProgram& program,
                                               const TaskSpec& spec, std::span<const MetricDef> metrics,
                                               double threshold = kDefaultThreshold);

/// Rolls out n_t episodes with seeds seed..seed+n_t-1 and reports on them.
/// `kept` receives the trajectories when non-null.
[[nodiscard]] EvalReport evaluate_policy(const EnvProfile& profile, const Policy& policy, const RewardProgram& program,
                                         const TaskSpec& spec, std::span<const MetricDef> metrics, std::size_t n_t,
                                         std::uint64_t seed, double threshold = kDefaultThreshold,
                                         std::vector<Trajectory>* kept = nullptr);

/// Copies training-side fields (convergence) into a report.
void attach_training(EvalReport& report, const TrainingSummary& summary);

/// Report for an iteration whose design could not be trained or evaluated.
[[nodiscard]] EvalReport failure_report(const TaskSpec& spec, std::span<const MetricDef> metrics, std::size_t n_t,
                                        std::string note);

[[nodiscard]] std::string report_to_json(const EvalReport& report);
[[nodiscard]] EvalReport report_from_json(std::string_view text);

} // namespace rforge
