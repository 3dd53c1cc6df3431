#include "rforge/refine_loop.hpp"

#include "rforge/error.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace rforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

PhaseHook g_hook;

constexpr const char* kPhases[] = {"prompt", "response", "program", "train", "evaluate"};

void write_file(const fs::path& path, std::string_view text) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("io_error", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string iter_dir_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%02zu", k);
  return buf;
}

json summary_to_json(const TrainingSummary& s) {
  json j;
  j["mean_return"] = s.mean_return;
  j["max_return"] = s.max_return;
  j["elite_mean"] = s.elite_mean;
  j["converged_at_step"] = s.converged_at_step ? json(*s.converged_at_step) : json(nullptr);
  j["total_steps"] = s.total_steps;
  j["avg_episode_reward"] = s.avg_episode_reward;
  j["avg_episode_length"] = s.avg_episode_length;
  return j;
}

TrainingSummary summary_from_json(const json& j) {
  TrainingSummary s;
  s.mean_return = j.at("mean_return").get<std::vector<double>>();
  s.max_return = j.at("max_return").get<std::vector<double>>();
  s.elite_mean = j.at("elite_mean").get<std::vector<double>>();
  if (!j.at("converged_at_step").is_null()) s.converged_at_step = j["converged_at_step"].get<std::size_t>();
  s.total_steps = j.at("total_steps").get<std::size_t>();
  s.avg_episode_reward = j.at("avg_episode_reward").get<double>();
  s.avg_episode_length = j.at("avg_episode_length").get<double>();
  return s;
}

std::optional<std::string> read_optional(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  return read_text_file(p);
}

std::string system_prompt(const fs::path& assets) {
  const auto p = assets / "system_prompt.txt";
  return fs::exists(p) ? read_text_file(p) : std::string();
}

// Persistent state of one run directory.
class RunDir {
public:
  explicit RunDir(fs::path dir) : dir_(std::move(dir)) {}

  [[nodiscard]] const fs::path& path() const { return dir_; }
  [[nodiscard]] fs::path iter(std::size_t k) const { return dir_ / iter_dir_name(k); }

  void load_index() {
    const auto j = json::parse(read_text_file(dir_ / "index.json"));
    done_.clear();
    for (const auto& it : j.at("iterations")) {
      std::set<std::string> phases;
      for (const auto& p : it.at("completed")) phases.insert(p.get<std::string>());
      done_.push_back(std::move(phases));
    }
  }

  [[nodiscard]] bool done(std::size_t k, const std::string& phase) const {
    return k < done_.size() && done_[k].contains(phase);
  }

  void mark(std::size_t k, const std::string& phase) {
    if (done_.size() <= k) done_.resize(k + 1);
    done_[k].insert(phase);
    save_index();
    if (g_hook) g_hook(k, phase);
  }

  [[nodiscard]] std::size_t iteration_count() const { return done_.size(); }

  void save_index() const {
    json its = json::array();
    for (std::size_t k = 0; k < done_.size(); ++k) {
      json completed = json::array();
      for (const char* p : kPhases) {
        if (done_[k].contains(p)) completed.push_back(p);
      }
      its.push_back({{"index", k}, {"completed", completed}});
    }
    write_file(dir_ / "index.json", json{{"format_version", kRunFormatVersion}, {"iterations", its}}.dump(2) + "\n");
  }

  void record_time(std::size_t k, const std::string& phase, double seconds) {
    const auto p = dir_ / "timings.json";
    json j = fs::exists(p) ? json::parse(read_text_file(p)) : json::object();
    j[iter_dir_name(k) + "/" + phase] = seconds;
    write_file(p, j.dump(2) + "\n");
  }

private:
  fs::path dir_;
  std::vector<std::set<std::string>> done_;
};

void write_manifest(const RefinementRun& run) {
  json j;
  j["format_version"] = kRunFormatVersion;
  j["run_id"] = run.run_id;
  j["task_id"] = run.task_id;
  j["config"] = json::parse(loop_config_to_json(run.config));
  j["status"] = status_name(run.status);
  j["best"] = run.best ? json(*run.best) : json(nullptr);
  j["abort_reason"] = run.abort_reason ? json(*run.abort_reason) : json(nullptr);
  j["iterations"] = run.iterations.size();
  write_file(run.dir / "manifest.json", j.dump(2) + "\n");
}

RunStatus parse_status(std::string_view s) {
  for (auto st : {RunStatus::Running, RunStatus::Accepted, RunStatus::Exhausted, RunStatus::Aborted}) {
    if (status_name(st) == s) return st;
  }
  throw Error("corrupt_manifest", "unknown status '" + std::string(s) + "'");
}

IterationRecord read_iteration(const fs::path& d, std::size_t k) {
  IterationRecord r;
  r.index = k;
  r.prompt = read_optional(d / "prompt.txt").value_or("");
  r.response = read_optional(d / "response.txt").value_or("");
  r.source = read_optional(d / "source.txt").value_or("");
  r.program = read_optional(d / "program.rw");
  r.failure = read_optional(d / "failure.txt");
  r.has_policy = fs::exists(d / "policy.json");
  if (auto rep = read_optional(d / "report.json")) r.report = report_from_json(*rep);
  return r;
}

Conversation rebuild_conversation(const RefinementRun& run, const std::string& system) {
  Conversation c;
  if (!system.empty()) c.append(Role::System, system);
  for (const auto& it : run.iterations) {
    if (it.prompt.empty()) break;
    c.append(Role::User, it.prompt);
    if (it.response.empty()) break;
    c.append(Role::Assistant, it.response);
  }
  return c;
}

std::string feedback_prompt(const TaskProfile& profile, const EvalReport& report) {
  auto text = render_feedback(profile.feedback, report);
  if (report.failure) text += "\nThe reward function could not be used: " + *report.failure + "\n";
  return text;
}

template <class Fn>
double timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RefinementRun execute(const TaskProfile& profile, RefinementRun run, RunDir& rd, Adapter* override_adapter) {
  const auto& cfg = run.config;
  std::unique_ptr<Adapter> owned;
  Adapter* adapter = override_adapter;
  const auto translations = TranslationTable::load(profile.dir);
  const auto system = system_prompt(cfg.assets);

  auto abort_with = [&](const std::string& reason) {
    run.status = RunStatus::Aborted;
    run.abort_reason = reason;
    write_manifest(run);
    return run;
  };
  if (!adapter) {
    try {
      owned = make_adapter(cfg.adapter);
    } catch (const Error& e) {
      return abort_with(e.code() + ": " + e.what());
    }
    adapter = owned.get();
  }

  for (std::size_t k = run.iterations.size() > 0 ? run.iterations.size() - 1 : 0; k <= cfg.max_iterations; ++k) {
    const auto d = rd.iter(k);
    fs::create_directories(d);
    if (run.iterations.size() <= k) run.iterations.push_back(IterationRecord{.index = k});
    write_manifest(run);
    auto& it = run.iterations[k];

    if (!rd.done(k, "prompt")) {
      it.prompt = k == 0 ? build_initial_prompt(profile) : feedback_prompt(profile, *run.iterations[k - 1].report);
      write_file(d / "prompt.txt", it.prompt);
      rd.mark(k, "prompt");
    }

    if (!rd.done(k, "response")) {
      auto conv = rebuild_conversation(run, system);
      try {
        const double secs = timed([&] { it.response = complete(conv, *adapter, k); });
        rd.record_time(k, "response", secs);
      } catch (const Error& e) {
        return abort_with(e.code() + ": " + e.what());
      }
      write_file(d / "response.txt", it.response);
      write_file(rd.path() / "conversation.json", conversation_to_json(conv));
      rd.mark(k, "response");
    }

    std::optional<RewardProgram> program;
    if (!rd.done(k, "program")) {
      fs::remove(d / "failure.txt");
      fs::remove(d / "program.rw");
      it.failure.reset();
      it.program.reset();
      try {
        it.source = extract_reward_source(it.response);
        write_file(d / "source.txt", it.source);
        const auto dsl = translations.lookup(it.source).value_or(it.source);
        program = parse_reward(dsl);
        const auto violations = check_signal_usage(*program, *profile.env.schema);
        if (!violations.empty()) {
          std::string msg = "signal_usage:";
          for (const auto& v : violations) msg += " " + v.reference + " (" + v.reason + ")";
          throw Error("invalid_program", msg);
        }
        it.program = print(*program);
        write_file(d / "program.rw", *it.program);
      } catch (const Error& e) {
        program.reset();
        it.failure = e.code() + ": " + e.what();
        write_file(d / "failure.txt", *it.failure + "\n");
      }
      rd.mark(k, "program");
    } else if (it.program) {
      program = parse_reward(*it.program);
    }

    if (!rd.done(k, "train")) {
      if (g_hook) g_hook(k, "train_start");
      if (program && cfg.eval_mode == EvalMode::Train) {
        auto tcfg = cfg.train;
        tcfg.seed = derive_seed(cfg.seed, kTrainSeedStream, k);
        try {
          TrainResult res;
          const double secs = timed([&] { res = train(profile.env, *program, tcfg); });
          rd.record_time(k, "train", secs);
          save_policy(d / "policy.json", res.policy);
          write_file(d / "training.json", summary_to_json(res.summary).dump(2) + "\n");
          it.has_policy = true;
        } catch (const Error& e) {
          it.failure = e.code() + ": " + e.what();
          write_file(d / "failure.txt", *it.failure + "\n");
        }
      }
      rd.mark(k, "train");
    }

    if (!rd.done(k, "evaluate")) {
      EvalReport report;
      if (cfg.eval_mode == EvalMode::Fixture) {
        const auto fixture = profile.dir / "fixtures" / ("report_" + iter_dir_name(k).substr(5) + ".json");
        if (!fs::exists(fixture)) return abort_with("missing_fixture: no report fixture for iteration " + std::to_string(k));
        report = report_from_json(read_text_file(fixture));
        if (it.failure) report.failure = it.failure;
        report.verdict = classify(report.success_rate, cfg.threshold, report.failure.has_value());
      } else if (it.failure || !it.has_policy) {
        report = failure_report(profile.spec, profile.metrics, cfg.n_t, it.failure.value_or("no policy"));
      } else {
        const auto policy = load_policy(d / "policy.json");
        std::vector<Trajectory> trajs;
        const double secs = timed([&] {
          report = evaluate_policy(profile.env, policy, *program, profile.spec, profile.metrics, cfg.n_t,
                                   derive_seed(cfg.seed, kEvalSeedStream), cfg.threshold, &trajs);
        });
        rd.record_time(k, "evaluate", secs);
        attach_training(report, summary_from_json(json::parse(read_text_file(d / "training.json"))));
        fs::create_directories(d / "samples");
        for (std::size_t i = 0; i < std::min(cfg.saved_trajectories, trajs.size()); ++i) {
          char name[32];
          std::snprintf(name, sizeof name, "traj_%03zu.jsonl", i);
          std::ostringstream out;
          write_jsonl(out, trajs[i]);
          write_file(d / "samples" / name, out.str());
        }
      }
      it.report = report;
      write_file(d / "report.json", report_to_json(report));
      rd.mark(k, "evaluate");
    }

    if (it.report->verdict == Verdict::Good) {
      run.status = RunStatus::Accepted;
      break;
    }
    if (k == cfg.max_iterations) {
      run.status = RunStatus::Exhausted;
      std::size_t best = 0;
      for (std::size_t i = 0; i < run.iterations.size(); ++i) {
        if (run.iterations[i].report->success_rate >= run.iterations[best].report->success_rate) best = i;
      }
      run.best = best;
    }
  }
  write_manifest(run);
  return run;
}

} // namespace

void set_phase_hook(PhaseHook hook) { g_hook = std::move(hook); }

std::string_view status_name(RunStatus s) {
  switch (s) {
  case RunStatus::Running: return "running";
  case RunStatus::Accepted: return "accepted";
  case RunStatus::Exhausted: return "exhausted";
  case RunStatus::Aborted: return "aborted";
  }
  return "?";
}

void LoopConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("invalid_config", "threshold must lie in (0, 1]");
  if (n_t < 1) throw Error("invalid_config", "n_t must be at least 1");
  train.validate();
}

std::string loop_config_to_json(const LoopConfig& c) {
  json j;
  j["max_iterations"] = c.max_iterations;
  j["threshold"] = c.threshold;
  j["n_t"] = c.n_t;
  j["seed"] = c.seed;
  j["eval_mode"] = c.eval_mode == EvalMode::Train ? "train" : "fixture";
  j["saved_trajectories"] = c.saved_trajectories;
  j["assets"] = c.assets.string();
  j["train"] = {{"gamma", c.train.gamma},
                {"population", c.train.population},
                {"elites", c.train.elites},
                {"iterations", c.train.iterations},
                {"init_noise", c.train.init_noise},
                {"final_noise", c.train.final_noise},
                {"rollouts_per_candidate", c.train.rollouts_per_candidate},
                {"convergence_window", c.train.convergence_window},
                {"convergence_tol", c.train.convergence_tol},
                {"threads", c.train.threads}};
  j["adapter"] = {{"kind", c.adapter.kind == AdapterKind::Http ? "http" : "replay"},
                  {"base_url", c.adapter.base_url},
                  {"model", c.adapter.model},
                  {"temperature", c.adapter.temperature},
                  {"timeout_seconds", c.adapter.timeout_seconds},
                  {"retries", c.adapter.retries},
                  {"backoff_seconds", c.adapter.backoff_seconds},
                  {"api_key_env", c.adapter.api_key_env},
                  {"full_history", c.adapter.full_history},
                  {"fixture_path", c.adapter.fixture_path.string()}};
  return j.dump(2) + "\n";
}

LoopConfig loop_config_from_json(std::string_view text) {
  LoopConfig c;
  try {
    const auto j = json::parse(text);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.threshold = j.value("threshold", c.threshold);
    c.n_t = j.value("n_t", c.n_t);
    c.seed = j.value("seed", c.seed);
    const auto mode = j.value("eval_mode", std::string("train"));
    if (mode != "train" && mode != "fixture") throw Error("invalid_config", "eval_mode must be train or fixture");
    c.eval_mode = mode == "train" ? EvalMode::Train : EvalMode::Fixture;
    c.saved_trajectories = j.value("saved_trajectories", c.saved_trajectories);
    c.assets = j.value("assets", std::string());
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.gamma = t.value("gamma", c.train.gamma);
      c.train.population = t.value("population", c.train.population);
      c.train.elites = t.value("elites", c.train.elites);
      c.train.iterations = t.value("iterations", c.train.iterations);
      c.train.init_noise = t.value("init_noise", c.train.init_noise);
      c.train.final_noise = t.value("final_noise", c.train.final_noise);
      c.train.rollouts_per_candidate = t.value("rollouts_per_candidate", c.train.rollouts_per_candidate);
      c.train.convergence_window = t.value("convergence_window", c.train.convergence_window);
      c.train.convergence_tol = t.value("convergence_tol", c.train.convergence_tol);
      c.train.threads = t.value("threads", c.train.threads);
    }
    if (j.contains("adapter")) {
      const auto& a = j["adapter"];
      const auto kind = a.value("kind", std::string("replay"));
      if (kind != "http" && kind != "replay") throw Error("invalid_config", "adapter must be http or replay");
      c.adapter.kind = kind == "http" ? AdapterKind::Http : AdapterKind::Replay;
      c.adapter.base_url = a.value("base_url", c.adapter.base_url);
      c.adapter.model = a.value("model", c.adapter.model);
      c.adapter.temperature = a.value("temperature", c.adapter.temperature);
      c.adapter.timeout_seconds = a.value("timeout_seconds", c.adapter.timeout_seconds);
      c.adapter.retries = a.value("retries", c.adapter.retries);
      c.adapter.backoff_seconds = a.value("backoff_seconds", c.adapter.backoff_seconds);
      c.adapter.api_key_env = a.value("api_key_env", c.adapter.api_key_env);
      c.adapter.full_history = a.value("full_history", c.adapter.full_history);
      c.adapter.fixture_path = a.value("fixture_path", std::string());
    }
  } catch (const json::exception& e) {
    throw Error("invalid_config", e.what());
  }
  c.validate();
  return c;
}

RefinementRun run_refinement(const TaskProfile& profile, const LoopConfig& cfg, const fs::path& run_dir,
                             Adapter* adapter) {
  cfg.validate();
  if (fs::exists(run_dir / "manifest.json")) {
    throw Error("run_exists", run_dir.string() + " already holds a run; use resume");
  }
  fs::create_directories(run_dir);
  RefinementRun run;
  run.run_id = run_dir.filename().string();
  run.task_id = profile.task_id;
  run.dir = run_dir;
  run.config = cfg;
  RunDir rd(run_dir);
  rd.save_index();
  write_manifest(run);
  return execute(profile, std::move(run), rd, adapter);
}

RefinementRun load_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw Error("missing_run", "no run directory " + run_dir.string());
  const auto mpath = run_dir / "manifest.json";
  if (!fs::exists(mpath)) throw Error("missing_run", "no manifest in " + run_dir.string());
  RefinementRun run;
  try {
    const auto j = json::parse(read_text_file(mpath));
    if (j.at("format_version").get<int>() != kRunFormatVersion) {
      throw Error("version_mismatch", "run format version " + std::to_string(j["format_version"].get<int>()) +
                                          ", expected " + std::to_string(kRunFormatVersion));
    }
    run.run_id = j.at("run_id").get<std::string>();
    run.task_id = j.at("task_id").get<std::string>();
    run.config = loop_config_from_json(j.at("config").dump());
    run.status = parse_status(j.at("status").get<std::string>());
    if (!j.at("best").is_null()) run.best = j["best"].get<std::size_t>();
    if (!j.at("abort_reason").is_null()) run.abort_reason = j["abort_reason"].get<std::string>();
    run.dir = run_dir;
    RunDir rd(run_dir);
    rd.load_index();
    for (std::size_t k = 0; k < rd.iteration_count(); ++k) run.iterations.push_back(read_iteration(rd.iter(k), k));
  } catch (const json::exception& e) {
    throw Error("corrupt_manifest", e.what());
  }
  return run;
}

RefinementRun resume(const fs::path& run_dir, Adapter* adapter) {
  auto run = load_run(run_dir);
  if (run.status == RunStatus::Accepted || run.status == RunStatus::Exhausted) return run;
  const auto profile = load_task_profile(run.config.assets, run.task_id);
  run.status = RunStatus::Running;
  run.abort_reason.reset();
  RunDir rd(run_dir);
  rd.load_index();
  return execute(profile, std::move(run), rd, adapter);
}

} // namespace rforge
