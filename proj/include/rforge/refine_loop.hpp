#pragma once

// Design -> train -> evaluate -> feedback loop with a crash-resumable run
// directory.

#include "rforge/evaluation.hpp"
#include "rforge/llm_gateway.hpp"
#include "rforge/policy.hpp"
#include "rforge/prompting.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rforge {

inline constexpr int kRunFormatVersion = 1;

enum class EvalMode : std::uint8_t {
  Train,    // train a policy and roll it out
  Fixture,  // read fixtures/report_<kk>.json instead (replay of logged runs)
};

struct LoopConfig {
  std::size_t max_iterations = 5;
  double threshold = kDefaultThreshold;
  std::size_t n_t = 100;
  TrainConfig train;
  AdapterConfig adapter;
  std::uint64_t seed = 0;
  EvalMode eval_mode = EvalMode::Train;
  /// Evaluation trajectories written to samples/ per iteration.
  std::size_t saved_trajectories = 3;
  std::filesystem::path assets;

  /// Throws Error("invalid_config").
  void validate() const;
};

[[nodiscard]] std::string loop_config_to_json(const LoopConfig& cfg);
[[nodiscard]] LoopConfig loop_config_from_json(std::string_view text);

enum class RunStatus : std::uint8_t { Running, Accepted, Exhausted, Aborted };

[[nodiscard]] std::string_view status_name(RunStatus s);

struct IterationRecord {
  std::size_t index = 0;
  std::string prompt;
  std::string response;
  std::string source;                    // extracted code
  std::optional<std::string> program;    // canonical reward-language text
  std::optional<std::string> failure;    // extraction/parse/training failure
  bool has_policy = false;
  std::optional<EvalReport> report;
};

struct RefinementRun {
  std::string run_id;
  std::string task_id;
  std::filesystem::path dir;
  LoopConfig config;
  std::vector<IterationRecord> iterations;
  RunStatus status = RunStatus::Running;
  std::optional<std::size_t> best;  // set on exhaustion: max SR, latest on ties
  std::optional<std::string> abort_reason;
};

/// Seed-stream identifiers for derive_seed(master, stream, iteration).
inline constexpr std::uint64_t kTrainSeedStream = 10;
inline constexpr std::uint64_t kEvalSeedStream = 20;

/// Runs the loop in `run_dir` (created if needed; must not hold another
/// run). `adapter` overrides the configured one when non-null.
RefinementRun run_refinement(const TaskProfile& profile, const LoopConfig& cfg, const std::filesystem::path& run_dir,
                             Adapter* adapter = nullptr);

/// Continues a run from its first incomplete phase. Throws
/// Error("missing_run"), Error("corrupt_manifest") or Error("version_mismatch").
RefinementRun resume(const std::filesystem::path& run_dir, Adapter* adapter = nullptr);

/// Reads a run directory without executing anything.
[[nodiscard]] RefinementRun load_run(const std::filesystem::path& run_dir);

/// Test hook: called after each phase has been persisted with
/// (iteration, phase name). Throwing from it simulates a crash.
using PhaseHook = std::function<void(std::size_t, std::string_view)>;
void set_phase_hook(PhaseHook hook);

} // namespace rforge
