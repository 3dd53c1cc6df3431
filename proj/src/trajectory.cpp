#include "rforge/trajectory.hpp"

#include "rforge/error.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace rforge {

using nlohmann::json;

Trajectory::Trajectory(std::shared_ptr<const SignalSchema> schema) : schema_(std::move(schema)) {
  if (!schema_) throw Error("invalid_trajectory", "trajectory needs a schema");
}

void Trajectory::append(double t, std::span<const double> row) {
  if (row.size() != schema_->row_size()) {
    throw Error("invalid_trajectory", "row has " + std::to_string(row.size()) + " values, schema expects " +
                                          std::to_string(schema_->row_size()));
  }
  if (times_.empty() ? t != 0.0 : !(t > times_.back())) {
    throw Error("invalid_trajectory", "timestamps must start at 0 and strictly increase");
  }
  times_.push_back(t);
  rows_.insert(rows_.end(), row.begin(), row.end());
}

void Trajectory::reserve(std::size_t samples) {
  times_.reserve(samples);
  rows_.reserve(samples * schema_->row_size());
}

std::span<const double> Trajectory::signal(std::size_t i, std::string_view name) const {
  const auto idx = schema_->index_of(name);
  if (!idx) throw Error("unknown_signal", "unknown signal '" + std::string(name) + "'");
  return {row(i) + schema_->offset(*idx), schema_->at(*idx).dim};
}

std::span<const double> Trajectory::action(std::size_t i) const { return signal(i, schema_->action_signal()); }

Bindings Trajectory::bindings(std::size_t i) const { return schema_->to_bindings(row(i)); }

bool operator==(const Trajectory& a, const Trajectory& b) {
  const bool same_schema = a.schema_ == b.schema_ || (a.schema_ && b.schema_ && *a.schema_ == *b.schema_);
  return same_schema && a.times_ == b.times_ && a.rows_ == b.rows_ && a.terminated_ == b.terminated_;
}

void write_jsonl(std::ostream& out, const Trajectory& traj) {
  const auto& schema = traj.schema();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    json line = json::object();
    line["t"] = traj.time(i);
    for (std::size_t s = 0; s < schema.size(); ++s) {
      const double* p = traj.row(i) + schema.offset(s);
      line["obs." + schema.at(s).name] = std::vector<double>(p, p + schema.at(s).dim);
    }
    if (!schema.action_signal().empty()) {
      auto a = traj.action(i);
      line["action"] = std::vector<double>(a.begin(), a.end());
    }
    line["terminated"] = i + 1 == traj.size() && traj.terminated();
    out << line.dump() << '\n';
  }
}

void save_jsonl(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  write_jsonl(out, traj);
}

Trajectory read_jsonl(std::istream& in, std::shared_ptr<const SignalSchema> schema) {
  Trajectory traj(schema);
  std::string line;
  std::size_t lineno = 0;
  bool terminated = false;
  std::vector<double> row(schema->row_size());
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "trajectory line " + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("invalid_trajectory", where + e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j["t"].is_number()) {
      throw Error("invalid_trajectory", where + "missing numeric field 't'");
    }
    for (std::size_t s = 0; s < schema->size(); ++s) {
      const auto& spec = schema->at(s);
      const auto key = "obs." + spec.name;
      std::vector<double> v;
      if (j.contains(key)) {
        v = j[key].get<std::vector<double>>();
      } else if (spec.name == schema->action_signal() && j.contains("action")) {
        v = j["action"].get<std::vector<double>>();
      } else {
        throw Error("invalid_trajectory", where + "missing signal '" + spec.name + "'");
      }
      if (v.size() != spec.dim) {
        throw Error("invalid_trajectory", where + "signal '" + spec.name + "' has dimension " +
                                              std::to_string(v.size()) + ", expected " + std::to_string(spec.dim));
      }
      std::copy(v.begin(), v.end(), row.begin() + static_cast<std::ptrdiff_t>(schema->offset(s)));
    }
    try {
      traj.append(j["t"].get<double>(), row);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    terminated = j.value("terminated", false);
  }
  traj.set_terminated(terminated);
  return traj;
}

Trajectory load_jsonl(const std::filesystem::path& path, std::shared_ptr<const SignalSchema> schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  return read_jsonl(in, std::move(schema));
}

} // namespace rforge
