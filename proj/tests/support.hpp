#pragma once

// Shared helpers for the test binaries.

#include "rforge/env.hpp"
#include "rforge/prompting.hpp"
#include "rforge/stl.hpp"
#include "rforge/trajectory.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rforge::testing {

[[nodiscard]] std::filesystem::path fixtures_dir();

/// Nine task ids in the order of the summary table.
[[nodiscard]] const std::vector<std::string>& task_ids();

/// A fresh empty directory under the system temp dir.
[[nodiscard]] std::filesystem::path scratch_dir(const std::string& name);

/// All files below `dir` (relative paths) with their contents, skipping
/// names in `skip`.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> snapshot(const std::filesystem::path& dir,
                                                                        const std::vector<std::string>& skip = {});

/// Trajectory over `schema` where every sample copies `base` and then has
/// signal values overridden by `per_step(i)`.
struct SampleEdit {
  std::string signal;
  std::vector<double> value;
};

[[nodiscard]] Trajectory make_trajectory(std::shared_ptr<const SignalSchema> schema, double dt, std::size_t samples,
                                         const std::function<std::vector<SampleEdit>(std::size_t)>& per_step);

} // namespace rforge::testing

namespace rforge::testing {

/// Satisfying or violating synthetic trajectory for one task's spec.
struct DirectedCase {
  std::string task;
  std::string name;
  bool expected = false;
  Trajectory traj;
};

/// Two cases per task: one satisfying every goal, one violating at least one.
[[nodiscard]] std::vector<DirectedCase> directed_cases(const std::filesystem::path& assets);

struct OracleResult {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;  // formula text of the first disagreement
};

/// Random formulas (depth <= 3) over random trajectories (<= 20 samples),
/// compared against a brute-force recursive evaluator.
[[nodiscard]] OracleResult run_stl_oracle(std::uint64_t seed, std::size_t n);

} // namespace rforge::testing
