#include "rforge/prompting.hpp"

#include "rforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace rforge {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Slot parse_slot(std::string_view text) {
  if (text == "converged_at") return {SlotKind::ConvergedAt, {}};
  if (text == "episode_length") return {SlotKind::EpisodeLength, {}};
  if (text == "episode_reward") return {SlotKind::EpisodeReward, {}};
  if (text == "n_t") return {SlotKind::Trials, {}};
  if (text == "success_rate") return {SlotKind::SuccessRate, {}};
  if (text.starts_with("metric:") && text.size() > 7) return {SlotKind::Metric, std::string(text.substr(7))};
  if (text.starts_with("goal:") && text.size() > 5) return {SlotKind::GoalRate, std::string(text.substr(5))};
  throw Error("invalid_template", "unknown slot '" + std::string(text) + "'");
}

std::string slot_name(const Slot& s) {
  switch (s.kind) {
  case SlotKind::ConvergedAt: return "converged_at";
  case SlotKind::EpisodeLength: return "episode_length";
  case SlotKind::EpisodeReward: return "episode_reward";
  case SlotKind::Trials: return "n_t";
  case SlotKind::SuccessRate: return "success_rate";
  case SlotKind::Metric: return "metric:" + s.key;
  case SlotKind::GoalRate: return "goal:" + s.key;
  }
  return "?";
}

namespace {

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

} // namespace

void FeedbackTemplate::validate() const {
  auto fail = [](const std::string& m) { throw Error("invalid_template", m); };
  if (count_of(text, kVerdictPlaceholder) != 1) fail("template needs exactly one " + std::string(kVerdictPlaceholder));
  const auto nums = count_of(text, kNumPlaceholder);
  if (nums != slots.size()) {
    fail("template has " + std::to_string(nums) + " numeric placeholders but " + std::to_string(slots.size()) +
         " slots");
  }
  const auto first_num = text.find(kNumPlaceholder);
  if (first_num != std::string::npos && first_num < text.find(kVerdictPlaceholder)) {
    fail("the overall assessment must precede every numeric line");
  }
  if (text.find(kRedesignLine) == std::string::npos) fail("template lacks the redesign instruction");
}

void TaskProfile::validate() const {
  auto fail = [this](const std::string& m) { throw Error("invalid_profile", task_id + ": " + m); };
  if (environment.empty() || task.empty() || observables.empty() || rules.empty()) fail("empty prompt segment");
  try {
    feedback.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  std::set<std::string> ids;
  for (const auto& m : metrics) {
    if (!ids.insert(m.id).second) fail("duplicate metric '" + m.id + "'");
    RewardProgram p = parse_reward("return " + m.expression);
    if (!check_signal_usage(p, *env.schema).empty()) fail("metric '" + m.id + "' uses undeclared signals");
  }
  for (const auto& s : feedback.slots) {
    if (s.kind == SlotKind::Metric && !ids.contains(s.key)) fail("slot names unknown metric '" + s.key + "'");
    if (s.kind == SlotKind::GoalRate &&
        std::none_of(spec.goals.begin(), spec.goals.end(), [&](const Goal& g) { return g.label == s.key; })) {
      fail("slot names unknown goal '" + s.key + "'");
    }
  }
  for (const auto& sig : env.schema->signals()) {
    if (!sig.listed) continue;
    if (observables.find(sig.name) == std::string::npos) fail("listed signal '" + sig.name + "' is not described");
  }
  if (spec.horizon > env.horizon_seconds() + kTimeEps) fail("STL horizon exceeds the simulated horizon");
}

std::filesystem::path assets_dir() {
  if (const char* env = std::getenv("REWARD_FORGE_ASSETS"); env && *env) return env;
#ifdef REWARD_FORGE_ASSETS_DIR
  return REWARD_FORGE_ASSETS_DIR;
#else
  return "assets";
#endif
}

std::vector<std::string> list_tasks(const std::filesystem::path& assets) {
  std::vector<std::string> ids;
  const auto root = assets / "tasks";
  if (!std::filesystem::is_directory(root)) throw Error("io_error", "no task directory under " + assets.string());
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "task.json")) ids.push_back(e.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

TaskProfile load_task_profile(const std::filesystem::path& assets, std::string_view task_id) {
  const auto dir = assets / "tasks" / std::string(task_id);
  if (task_id.empty() || task_id.find('/') != std::string_view::npos || !std::filesystem::exists(dir / "task.json")) {
    throw Error("unknown_task", "unknown task '" + std::string(task_id) + "'");
  }
  TaskProfile p;
  p.dir = dir;
  json j;
  try {
    j = json::parse(read_text_file(dir / "task.json"));
  } catch (const json::exception& e) {
    throw Error("invalid_profile", std::string(task_id) + ": " + e.what());
  }
  try {
    p.task_id = j.at("task_id").get<std::string>();
    if (p.task_id != task_id) throw Error("invalid_profile", "task.json id does not match its directory");
    p.title = j.at("title").get<std::string>();
    p.robot = j.at("robot").get<std::string>();
    p.env = load_env_profile(dir / j.value("env", "env.json"));
    p.spec = parse_task_spec(read_text_file(dir / j.value("spec", "spec.stl")), *p.env.schema, p.task_id);
    for (const auto& m : j.at("metrics")) {
      p.metrics.push_back({m.at("id").get<std::string>(), parse_aggregation(m.value("aggregation", "step_mean")),
                           m.at("expression").get<std::string>(), m.value("normalize_by_initial", false)});
    }
    p.feedback.text = read_text_file(dir / "feedback_template.txt");
    for (const auto& s : j.at("feedback_slots")) p.feedback.slots.push_back(parse_slot(s.get<std::string>()));
  } catch (const json::exception& e) {
    throw Error("invalid_profile", std::string(task_id) + ": " + e.what());
  }
  p.environment = read_text_file(dir / "prompt" / "environment.txt");
  p.task = read_text_file(dir / "prompt" / "task.txt");
  p.observables = read_text_file(dir / "prompt" / "observables.txt");
  p.rules = read_text_file(dir / "prompt" / "rules.txt");
  p.validate();
  return p;
}

std::string build_initial_prompt(const TaskProfile& profile) {
  std::string out;
  out += kPromptOpener;
  out += profile.environment;
  out += profile.task;
  out += profile.observables;
  out += profile.rules;
  out += kPromptCloser;
  return out;
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string format_rate(double rate) { return std::to_string(static_cast<long long>(std::llround(rate * 100.0))) + "%"; }

std::string render_slot(const Slot& slot, const EvalReport& r) {
  auto lookup = [&](const std::vector<std::pair<std::string, double>>& v, const char* what) {
    for (const auto& [k, x] : v) {
      if (k == slot.key) return x;
    }
    throw Error("slot_mismatch", std::string("report has no ") + what + " '" + slot.key + "'");
  };
  switch (slot.kind) {
  case SlotKind::ConvergedAt: return std::to_string(r.converged_at_step.value_or(r.total_train_steps));
  case SlotKind::EpisodeLength: return format_metric(r.avg_episode_length);
  case SlotKind::EpisodeReward: return format_metric(r.avg_episode_reward);
  case SlotKind::Trials: return std::to_string(r.n_t);
  case SlotKind::SuccessRate: return format_rate(r.success_rate);
  case SlotKind::Metric: return format_metric(lookup(r.metrics, "metric"));
  case SlotKind::GoalRate: return format_rate(lookup(r.goal_rates, "goal"));
  }
  return {};
}

std::string render_feedback(const FeedbackTemplate& tmpl, const EvalReport& report) {
  try {
    tmpl.validate();
  } catch (const Error& e) {
    throw Error("slot_mismatch", e.what());
  }
  std::string out;
  out.reserve(tmpl.text.size() + 64);
  std::size_t slot = 0;
  std::size_t pos = 0;
  const std::string_view text = tmpl.text;
  while (pos < text.size()) {
    if (text.compare(pos, kVerdictPlaceholder.size(), kVerdictPlaceholder) == 0) {
      out += verdict_name(report.verdict);
      pos += kVerdictPlaceholder.size();
    } else if (text.compare(pos, kNumPlaceholder.size(), kNumPlaceholder) == 0) {
      out += render_slot(tmpl.slots[slot++], report);
      pos += kNumPlaceholder.size();
    } else {
      out += text[pos++];
    }
  }
  return out;
}

std::vector<std::string> extract_slot_values(const FeedbackTemplate& tmpl, std::string_view rendered) {
  // Split the template into literal pieces around placeholders.
  std::vector<std::string_view> literals;
  const std::string_view text = tmpl.text;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text.compare(pos, kVerdictPlaceholder.size(), kVerdictPlaceholder) == 0 ||
        text.compare(pos, kNumPlaceholder.size(), kNumPlaceholder) == 0) {
      literals.push_back(text.substr(start, pos - start));
      pos += text[pos + 1] == 'g' ? kVerdictPlaceholder.size() : kNumPlaceholder.size();
      start = pos;
    } else {
      ++pos;
    }
  }
  literals.push_back(text.substr(start));

  std::vector<std::string> values;
  std::size_t at = 0;
  auto mismatch = [] { return Error("template_mismatch", "rendered text does not follow the template"); };
  for (std::size_t i = 0; i < literals.size(); ++i) {
    if (rendered.compare(at, literals[i].size(), literals[i]) != 0) throw mismatch();
    at += literals[i].size();
    if (i + 1 == literals.size()) break;
    const auto& next = literals[i + 1];
    const auto end = next.empty() ? rendered.size() : rendered.find(next, at);
    if (end == std::string_view::npos) throw mismatch();
    values.emplace_back(rendered.substr(at, end - at));
    at = end;
  }
  if (at != rendered.size()) throw mismatch();
  return values;
}

} // namespace rforge
