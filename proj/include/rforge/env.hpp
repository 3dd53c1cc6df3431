#pragma once

// Desk-scale surrogate environments. Four dynamics families share one
// interface: reset samples the initial state, step integrates one
// semi-implicit Euler step, observe reads the profile's signals.

#include "rforge/signal_schema.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rforge {

enum class Dynamics : std::uint8_t { PointMass, Locomotor, BallTray, BallPush };

[[nodiscard]] std::string_view dynamics_name(Dynamics d);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Policy input: one signal, normalised as (value - offset) / scale.
struct FeatureSpec {
  std::string signal;
  std::vector<double> offset;
  std::vector<double> scale;
};

class EnvProfile {
public:
  std::string env_id;
  Dynamics dynamics = Dynamics::PointMass;
  double dt = 0.02;
  std::size_t horizon_steps = 0;
  std::shared_ptr<const SignalSchema> schema;
  std::vector<Range> action_bounds;
  /// Dynamics constants; every key the family knows has a default.
  std::map<std::string, double> params;
  /// Initial-state ranges keyed by the family's init names (e.g. target_pos).
  std::map<std::string, std::vector<Range>> init;
  std::vector<FeatureSpec> features;

  [[nodiscard]] double param(const std::string& key) const;
  [[nodiscard]] std::size_t action_dim() const noexcept { return action_bounds.size(); }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return feature_dim_; }
  [[nodiscard]] double horizon_seconds() const noexcept { return dt * static_cast<double>(horizon_steps); }

  /// Checks invariants and resolves signal quantities. Must be called after
  /// the public fields are filled; throws Error("invalid_profile").
  void finalize();

  struct Copy {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::size_t len = 0;
  };
  [[nodiscard]] const std::vector<Copy>& observe_plan() const noexcept { return plan_; }
  [[nodiscard]] const std::vector<Copy>& feature_plan() const noexcept { return feature_plan_; }

private:
  std::vector<Copy> plan_;          // quantity buffer -> observation row
  std::vector<Copy> feature_plan_;  // observation row -> feature vector (before normalisation)
  std::size_t feature_dim_ = 0;
};

/// Loads a profile from JSON (see assets/tasks/*/profile.json).
[[nodiscard]] EnvProfile load_env_profile(const std::filesystem::path& path);
[[nodiscard]] EnvProfile parse_env_profile(std::string_view json_text);

/// Quantity names a dynamics family exposes, with their dimensions.
[[nodiscard]] const std::vector<std::pair<std::string, std::size_t>>& env_quantities(Dynamics d);

inline constexpr std::size_t kEnvStateSize = 24;

struct EnvState {
  std::array<double, kEnvStateSize> x{};
  std::vector<double> action;  // last applied (clamped) action
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  bool failed = false;      // a failure predicate fired
  bool terminated = false;  // failed or horizon reached; no further steps

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

[[nodiscard]] EnvState reset(const EnvProfile& profile, std::uint64_t seed);
/// Throws Error("terminated") on a terminated state and
/// Error("dimension_mismatch") on a wrong-size action.
[[nodiscard]] EnvState step(const EnvProfile& profile, EnvState state, std::span<const double> action);
void step_in_place(const EnvProfile& profile, EnvState& state, std::span<const double> action);

[[nodiscard]] Bindings observe(const EnvProfile& profile, const EnvState& state);
/// Writes the schema's flat row (schema->row_size() values).
void observe_row(const EnvProfile& profile, const EnvState& state, double* row);

} // namespace rforge
