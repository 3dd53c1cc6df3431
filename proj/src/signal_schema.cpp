#include "rforge/signal_schema.hpp"

#include "rforge/error.hpp"

#include <algorithm>
#include <set>

namespace rforge {

SignalSchema::SignalSchema(std::vector<SignalSpec> signals, std::string action_signal)
    : signals_(std::move(signals)), action_signal_(std::move(action_signal)) {
  std::set<std::string, std::less<>> seen;
  offsets_.reserve(signals_.size());
  for (auto& s : signals_) {
    if (s.name.empty()) throw Error("invalid_schema", "signal with empty name");
    if (!seen.insert(s.name).second) throw Error("invalid_schema", "duplicate signal '" + s.name + "'");
    if (s.dim < 1 || s.dim > kMaxSignalDim) {
      throw Error("invalid_schema", "signal '" + s.name + "' has unsupported dimension " + std::to_string(s.dim));
    }
    if (s.quantity.empty()) s.quantity = s.name;
    offsets_.push_back(row_size_);
    row_size_ += s.dim;
  }
  if (!action_signal_.empty() && !seen.contains(action_signal_)) {
    throw Error("invalid_schema", "action signal '" + action_signal_ + "' is not declared");
  }
}

std::optional<std::size_t> SignalSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < signals_.size(); ++i) {
    if (signals_[i].name == name) return i;
  }
  return std::nullopt;
}

const SignalSpec* SignalSchema::find(std::string_view name) const {
  auto i = index_of(name);
  return i ? &signals_[*i] : nullptr;
}

std::size_t SignalSchema::action_dim() const {
  const auto* s = find(action_signal_);
  return s ? s->dim : 0;
}

Bindings SignalSchema::to_bindings(const double* row) const {
  Bindings out;
  for (std::size_t i = 0; i < signals_.size(); ++i) {
    const double* p = row + offsets_[i];
    out.emplace(signals_[i].name, std::vector<double>(p, p + signals_[i].dim));
  }
  return out;
}

std::vector<double> SignalSchema::to_row(const Bindings& bindings) const {
  if (bindings.size() != signals_.size()) {
    throw Error("schema_mismatch", "expected " + std::to_string(signals_.size()) + " signals, got " +
                                       std::to_string(bindings.size()));
  }
  std::vector<double> row(row_size_);
  for (std::size_t i = 0; i < signals_.size(); ++i) {
    auto it = bindings.find(signals_[i].name);
    if (it == bindings.end()) throw Error("schema_mismatch", "missing signal '" + signals_[i].name + "'");
    if (it->second.size() != signals_[i].dim) {
      throw Error("schema_mismatch", "signal '" + signals_[i].name + "' has dimension " +
                                         std::to_string(it->second.size()) + ", expected " +
                                         std::to_string(signals_[i].dim));
    }
    std::copy(it->second.begin(), it->second.end(), row.begin() + static_cast<std::ptrdiff_t>(offsets_[i]));
  }
  return row;
}

bool operator==(const SignalSpec& a, const SignalSpec& b) {
  return a.name == b.name && a.dim == b.dim && a.quantity == b.quantity && a.listed == b.listed;
}

bool operator==(const SignalSchema& a, const SignalSchema& b) {
  return a.signals_ == b.signals_ && a.action_signal_ == b.action_signal_;
}

} // namespace rforge
