#pragma once

// Task profiles, the four-segment initial prompt and feedback rendering.

#include "rforge/env.hpp"
#include "rforge/evaluation.hpp"
#include "rforge/stl.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rforge {

inline constexpr std::string_view kPromptOpener = "I want to design a reward function for a reinforcement learning task.\n\n";
inline constexpr std::string_view kPromptCloser = "Design a complete reward function for this task.\n";
inline constexpr std::string_view kRedesignLine = "Redesign the reward function based on the given feedback.";

enum class SlotKind : std::uint8_t { ConvergedAt, EpisodeLength, EpisodeReward, Metric, Trials, GoalRate, SuccessRate };

/// One [NUM] placeholder's binding to a report field.
struct Slot {
  SlotKind kind = SlotKind::Metric;
  std::string key;  // metric id or goal label

  friend bool operator==(const Slot&, const Slot&) = default;
};

/// Parses "converged_at", "episode_length", "episode_reward", "n_t",
/// "success_rate", "metric:<id>" or "goal:<label>".
[[nodiscard]] Slot parse_slot(std::string_view text);
[[nodiscard]] std::string slot_name(const Slot& s);

inline constexpr std::string_view kVerdictPlaceholder = "[good|bad]";
inline constexpr std::string_view kNumPlaceholder = "[NUM]";

struct FeedbackTemplate {
  std::string text;
  std::vector<Slot> slots;

  /// Placeholder structure: one verdict placeholder before every [NUM], one
  /// slot per [NUM], and the redesign line. Throws Error("invalid_template").
  void validate() const;
};

struct TaskProfile {
  std::string task_id;
  std::string title;
  std::string robot;
  std::string environment;  // prompt segments, verbatim
  std::string task;
  std::string observables;
  std::string rules;
  FeedbackTemplate feedback;
  TaskSpec spec;
  std::vector<MetricDef> metrics;
  EnvProfile env;
  std::filesystem::path dir;

  /// Cross-checks segments, template slots, metrics and spec against the
  /// environment. Throws Error("invalid_profile").
  void validate() const;
};

/// Directory holding tasks/<id>/: $REWARD_FORGE_ASSETS, else the build-time
/// default.
[[nodiscard]] std::filesystem::path assets_dir();
[[nodiscard]] std::vector<std::string> list_tasks(const std::filesystem::path& assets);
/// Throws Error("unknown_task") when the directory is missing.
[[nodiscard]] TaskProfile load_task_profile(const std::filesystem::path& assets, std::string_view task_id);

[[nodiscard]] std::string build_initial_prompt(const TaskProfile& profile);

/// 3-decimal fixed rendering with trailing zeros dropped.
[[nodiscard]] std::string format_metric(double v);
/// Integer percentage followed by '%'.
[[nodiscard]] std::string format_rate(double rate);
/// Text a slot renders to for a report.
[[nodiscard]] std::string render_slot(const Slot& slot, const EvalReport& report);

/// Throws Error("slot_mismatch") when a slot names a field the report lacks.
[[nodiscard]] std::string render_feedback(const FeedbackTemplate& tmpl, const EvalReport& report);

/// Inverse of render_feedback on the placeholders: the verdict word followed
/// by each slot's text. Throws Error("template_mismatch").
[[nodiscard]] std::vector<std::string> extract_slot_values(const FeedbackTemplate& tmpl, std::string_view rendered);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

} // namespace rforge
