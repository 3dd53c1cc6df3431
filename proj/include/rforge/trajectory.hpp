#pragma once

#include "rforge/signal_schema.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace rforge {

/// Timestamped observation rows over a shared schema. The action signal is
/// part of each row. Sample 0 is the reset observation; sample k >= 1 follows
/// the k-th step.
class Trajectory {
public:
  Trajectory() = default;
  explicit Trajectory(std::shared_ptr<const SignalSchema> schema);

  /// Throws Error("invalid_trajectory") if t does not strictly increase from 0
  /// or the row has the wrong width.
  void append(double t, std::span<const double> row);
  void reserve(std::size_t samples);

  [[nodiscard]] const SignalSchema& schema() const { return *schema_; }
  [[nodiscard]] const std::shared_ptr<const SignalSchema>& schema_ptr() const noexcept { return schema_; }
  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
  [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
  [[nodiscard]] double time(std::size_t i) const { return times_[i]; }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
  [[nodiscard]] const double* row(std::size_t i) const { return rows_.data() + i * schema_->row_size(); }
  [[nodiscard]] std::span<const double> signal(std::size_t i, std::string_view name) const;
  [[nodiscard]] std::span<const double> action(std::size_t i) const;
  [[nodiscard]] Bindings bindings(std::size_t i) const;

  /// Set when the episode ended by a failure predicate (not by the horizon).
  [[nodiscard]] bool terminated() const noexcept { return terminated_; }
  void set_terminated(bool v) noexcept { terminated_ = v; }

  friend bool operator==(const Trajectory& a, const Trajectory& b);

private:
  std::shared_ptr<const SignalSchema> schema_;
  std::vector<double> times_;
  std::vector<double> rows_;
  bool terminated_ = false;
};

/// One JSON object per line: {"t", "obs.<name>": [...], "action": [...],
/// "terminated"}. The terminated flag of the last line is the trajectory's.
void write_jsonl(std::ostream& out, const Trajectory& traj);
void save_jsonl(const std::filesystem::path& path, const Trajectory& traj);
[[nodiscard]] Trajectory read_jsonl(std::istream& in, std::shared_ptr<const SignalSchema> schema);
[[nodiscard]] Trajectory load_jsonl(const std::filesystem::path& path, std::shared_ptr<const SignalSchema> schema);

} // namespace rforge
