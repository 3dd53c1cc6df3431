#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rforge {

/// Largest vector dimension any signal (and any reward-language value) may have.
inline constexpr std::size_t kMaxSignalDim = 16;

/// Named signal → real vector. The loose, map-shaped form of an observation.
using Bindings = std::map<std::string, std::vector<double>>;

struct SignalSpec {
  std::string name;
  std::size_t dim = 1;
  /// Environment quantity this signal is read from; several signals may alias
  /// the same quantity. Empty means "same as name".
  std::string quantity;
  std::string note;
  /// Listed signals are the ones presented to the language model; unlisted
  /// ones are auxiliary helpers (aliases, constants) used by reference listings.
  bool listed = true;
};

/// Ordered signal declarations plus a flat row layout: signal i occupies
/// [offset(i), offset(i) + dim) of an observation row.
class SignalSchema {
public:
  SignalSchema() = default;
  /// Throws Error("invalid_schema") on duplicate names, zero or oversize dims,
  /// or an action signal that is not declared.
  SignalSchema(std::vector<SignalSpec> signals, std::string action_signal);

  [[nodiscard]] const std::vector<SignalSpec>& signals() const noexcept { return signals_; }
  [[nodiscard]] std::size_t size() const noexcept { return signals_.size(); }
  [[nodiscard]] const SignalSpec& at(std::size_t i) const { return signals_.at(i); }

  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
  [[nodiscard]] const SignalSpec* find(std::string_view name) const;

  [[nodiscard]] std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  [[nodiscard]] std::size_t row_size() const noexcept { return row_size_; }

  [[nodiscard]] const std::string& action_signal() const noexcept { return action_signal_; }
  [[nodiscard]] std::size_t action_dim() const;

  /// Splits a flat row into named vectors.
  [[nodiscard]] Bindings to_bindings(const double* row) const;
  /// Packs bindings into a flat row. Throws Error("schema_mismatch") unless
  /// the bindings hold exactly the schema's names with matching dimensions.
  [[nodiscard]] std::vector<double> to_row(const Bindings& bindings) const;

  friend bool operator==(const SignalSchema& a, const SignalSchema& b);

private:
  std::vector<SignalSpec> signals_;
  std::vector<std::size_t> offsets_;
  std::size_t row_size_ = 0;
  std::string action_signal_;
};

bool operator==(const SignalSpec& a, const SignalSpec& b);

} // namespace rforge
