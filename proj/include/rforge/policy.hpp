#pragma once

// Affine policies and cross-entropy policy search.

#include "rforge/env.hpp"
#include "rforge/reward_lang.hpp"
#include "rforge/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rforge {

/// a = clamp(W f + b) with f the profile's normalised feature vector.
/// theta is row-major: action row i holds feature_dim weights then the bias.
struct Policy {
  std::string env_id;
  std::size_t feature_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> theta;

  [[nodiscard]] std::size_t param_count() const noexcept { return action_dim * (feature_dim + 1); }

  friend bool operator==(const Policy&, const Policy&) = default;
};

[[nodiscard]] Policy zero_policy(const EnvProfile& profile);

/// Normalised feature vector of an observation row.
void features(const EnvProfile& profile, const double* row, double* out);
/// Saturated action for an observation row. Throws Error("dimension_mismatch")
/// if the policy does not fit the profile.
void act(const EnvProfile& profile, const Policy& policy, const double* row, double* action);

void save_policy(const std::filesystem::path& path, const Policy& policy);
[[nodiscard]] Policy load_policy(const std::filesystem::path& path);
[[nodiscard]] std::string policy_to_json(const Policy& policy);
[[nodiscard]] Policy policy_from_json(std::string_view text);

/// Sample 0 is the reset observation; sample k is the observation after
/// step k with the action applied there.
[[nodiscard]] Trajectory rollout(const EnvProfile& profile, const Policy& policy, std::uint64_t seed);

/// Sum over samples 1..N of gamma^(k-1) * r_k. Reward errors are rethrown as
/// EvalError with the step index prepended to the message.
[[nodiscard]] double discounted_return(const Trajectory& traj, const RewardProgram& program, double gamma);
[[nodiscard]] double discounted_return(const Trajectory& traj, const CompiledReward& reward, double gamma);

struct TrainConfig {
  double gamma = 0.99;
  std::size_t population = 64;
  std::size_t elites = 8;
  std::size_t iterations = 40;
  double init_noise = 0.5;
  double final_noise = 0.05;
  std::size_t rollouts_per_candidate = 4;
  std::uint64_t seed = 0;
  std::size_t convergence_window = 5;
  double convergence_tol = 0.01;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;

  /// Throws Error("invalid_config").
  void validate() const;
};

struct TrainingSummary {
  std::vector<double> mean_return;   // per iteration, over the population
  std::vector<double> max_return;
  std::vector<double> elite_mean;
  std::optional<std::size_t> converged_at_step;
  std::size_t total_steps = 0;
  /// Training-time episodes: undiscounted reward sum and length.
  double avg_episode_reward = 0.0;
  double avg_episode_length = 0.0;
};

struct TrainResult {
  Policy policy;
  TrainingSummary summary;
};

/// Indices of the k largest returns, ties broken by lower index first.
[[nodiscard]] std::vector<std::size_t> select_elites(std::span<const double> returns, std::size_t k);

/// Child seed for a (stream, index) pair; independent streams never collide.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

/// Cross-entropy method with elite carry-over: each iteration's elites join
/// the next population, so the per-iteration elite mean never decreases.
/// Throws Error("invalid_program") when the program fails the signal check and
/// EvalError when the reward fails during a rollout.
[[nodiscard]] TrainResult train(const EnvProfile& profile, const RewardProgram& program, const TrainConfig& cfg);

} // namespace rforge
