#include "rforge/error.hpp"
#include "rforge/evaluation.hpp"
#include "rforge/llm_gateway.hpp"
#include "rforge/prompting.hpp"
#include "rforge/refine_loop.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace rforge;

namespace {

struct Options {
  std::string task;
  std::string config;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::string adapter;
  std::string fixtures;
  std::optional<std::size_t> n_t;
  std::optional<double> threshold;
  std::optional<std::size_t> max_iters;
  std::string eval_mode;
  std::string program;
  std::string policy;
  std::string traj;
  bool porcelain = false;
};

fs::path assets_root() { return assets_dir(); }

LoopConfig make_config(const Options& o, const TaskProfile& profile, bool replay) {
  LoopConfig cfg = o.config.empty() ? LoopConfig{} : loop_config_from_json(read_text_file(o.config));
  if (cfg.assets.empty()) cfg.assets = assets_root();
  if (replay) {
    cfg.adapter.kind = AdapterKind::Replay;
    cfg.eval_mode = EvalMode::Fixture;
  } else if (o.config.empty()) {
    cfg.adapter.kind = AdapterKind::Http;
  }
  if (!o.adapter.empty()) cfg.adapter.kind = o.adapter == "http" ? AdapterKind::Http : AdapterKind::Replay;
  if (!o.eval_mode.empty()) cfg.eval_mode = o.eval_mode == "train" ? EvalMode::Train : EvalMode::Fixture;
  if (!o.fixtures.empty()) cfg.adapter.fixture_path = o.fixtures;
  if (cfg.adapter.kind == AdapterKind::Replay && cfg.adapter.fixture_path.empty()) {
    cfg.adapter.fixture_path = profile.dir / "fixtures" / "replay.txt";
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_t) cfg.n_t = *o.n_t;
  if (o.threshold) cfg.threshold = *o.threshold;
  if (o.max_iters) cfg.max_iterations = *o.max_iters;
  cfg.validate();
  return cfg;
}

fs::path run_dir_for(const Options& o, const LoopConfig& cfg) {
  if (!o.run_dir.empty()) return o.run_dir;
  return fs::path("runs") / (o.task + "-seed" + std::to_string(cfg.seed));
}

void print_run(const RefinementRun& run, bool porcelain) {
  if (porcelain) {
    std::cout << "run_id=" << run.run_id << "\n";
    std::cout << "task=" << run.task_id << "\n";
    std::cout << "status=" << status_name(run.status) << "\n";
    std::cout << "iterations=" << run.iterations.size() << "\n";
    for (const auto& it : run.iterations) {
      std::cout << "iteration=" << it.index;
      if (it.report) {
        std::cout << " verdict=" << verdict_name(it.report->verdict) << " sr=" << format_metric(it.report->success_rate);
      }
      std::cout << " failure=" << (it.failure ? "yes" : "no") << "\n";
    }
    std::cout << "best=" << (run.best ? std::to_string(*run.best) : "none") << "\n";
    std::cout << "dir=" << run.dir.string() << "\n";
    return;
  }
  std::cout << "Run " << run.run_id << " (" << run.task_id << "): " << status_name(run.status) << " after "
            << run.iterations.size() << " iteration(s)\n";
  for (const auto& it : run.iterations) {
    std::cout << "  iteration " << it.index << ": ";
    if (it.report) {
      std::cout << verdict_name(it.report->verdict) << ", SR " << format_rate(it.report->success_rate);
    } else {
      std::cout << "incomplete";
    }
    if (it.failure) std::cout << " (" << *it.failure << ")";
    std::cout << "\n";
  }
  if (run.best) std::cout << "  best iteration: " << *run.best << "\n";
  if (run.abort_reason) std::cout << "  aborted: " << *run.abort_reason << "\n";
  std::cout << "  artifacts: " << run.dir.string() << "\n";
}

int run_exit_code(const RefinementRun& run) {
  switch (run.status) {
  case RunStatus::Accepted: return 0;
  case RunStatus::Exhausted: return 2;
  default: break;
  }
  std::cerr << "error: aborted: " << run.abort_reason.value_or("run did not finish") << "\n";
  return 1;
}

int cmd_refine(const Options& o, bool replay) {
  const auto profile = load_task_profile(assets_root(), o.task);
  const auto cfg = make_config(o, profile, replay);
  const auto run = run_refinement(profile, cfg, run_dir_for(o, cfg));
  print_run(run, o.porcelain);
  return run_exit_code(run);
}

int cmd_resume(const Options& o) {
  const auto run = resume(o.run_dir);
  print_run(run, o.porcelain);
  return run_exit_code(run);
}

int cmd_design(const Options& o) {
  const auto profile = load_task_profile(assets_root(), o.task);
  const auto cfg = make_config(o, profile, o.adapter == "replay");
  auto adapter = make_adapter(cfg.adapter);
  Conversation conv;
  const auto system = fs::exists(cfg.assets / "system_prompt.txt") ? read_text_file(cfg.assets / "system_prompt.txt")
                                                                   : std::string();
  if (!system.empty()) conv.append(Role::System, system);
  const auto prompt = build_initial_prompt(profile);
  conv.append(Role::User, prompt);
  const auto response = complete(conv, *adapter, 0);
  const auto source = extract_reward_source(response);
  const auto dsl = TranslationTable::load(profile.dir).lookup(source).value_or(source);
  const auto program = parse_reward(dsl);
  const auto violations = check_signal_usage(program, *profile.env.schema);
  const auto text = print(program);
  if (!o.run_dir.empty()) {
    const fs::path d = o.run_dir;
    fs::create_directories(d);
    auto put = [&](const char* name, const std::string& body) {
      std::ofstream(d / name, std::ios::binary) << body;
    };
    put("prompt.txt", prompt);
    put("response.txt", response);
    put("source.txt", source);
    put("program.rw", text);
    put("conversation.json", conversation_to_json(conv));
  }
  if (o.porcelain) {
    std::cout << "violations=" << violations.size() << "\n";
    for (const auto& v : violations) std::cout << "violation=" << v.reference << ":" << v.reason << "\n";
    std::cout << "program=" << text.size() << "\n" << text;
  } else {
    std::cout << text;
    for (const auto& v : violations) std::cout << "# violation: " << v.reference << " (" << v.reason << ")\n";
  }
  return violations.empty() ? 0 : 1;
}

int cmd_eval(const Options& o) {
  const auto profile = load_task_profile(assets_root(), o.task);
  const auto program = parse_reward(read_text_file(o.program));
  const auto policy = load_policy(o.policy);
  const auto report = evaluate_policy(profile.env, policy, program, profile.spec, profile.metrics, o.n_t.value_or(100),
                                      o.seed.value_or(0), o.threshold.value_or(kDefaultThreshold));
  if (o.porcelain) {
    std::cout << "verdict=" << verdict_name(report.verdict) << "\n";
    std::cout << "success_rate=" << format_metric(report.success_rate) << "\n";
    for (const auto& [g, r] : report.goal_rates) std::cout << "goal." << g << "=" << format_metric(r) << "\n";
    std::cout << "avg_episode_reward=" << format_metric(report.avg_episode_reward) << "\n";
    std::cout << "avg_episode_length=" << format_metric(report.avg_episode_length) << "\n";
    for (const auto& [id, v] : report.metrics) std::cout << "metric." << id << "=" << format_metric(v) << "\n";
    std::cout << "failure=" << report.failure.value_or("") << "\n";
  } else {
    std::cout << report_to_json(report);
  }
  return report.failure ? 1 : 0;
}

int cmd_monitor(const Options& o) {
  const auto profile = load_task_profile(assets_root(), o.task);
  const auto traj = load_jsonl(o.traj, profile.env.schema);
  bool all = true;
  for (const auto& g : profile.spec.goals) {
    const bool ok = satisfies(*g.formula, traj);
    all = all && ok;
    if (o.porcelain) {
      std::cout << "goal." << g.label << "=" << (ok ? "true" : "false") << "\n";
    } else {
      std::cout << "Goal " << g.label << ": " << (ok ? "true" : "false") << "    " << print(*g.formula) << "\n";
    }
  }
  std::cout << (o.porcelain ? "overall=" : "Overall: ") << (all ? "true" : "false") << "\n";
  return 0;
}

int cmd_list(const Options& o) {
  const auto root = assets_root();
  for (const auto& id : list_tasks(root)) {
    if (o.porcelain) {
      std::cout << id << "\n";
    } else {
      const auto p = load_task_profile(root, id);
      std::cout << id << "\t" << p.robot << " / " << p.title << "\n";
    }
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop reward design: prompt, train, evaluate, refine."};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_flag("--porcelain", o.porcelain, "Stable line-oriented output");
  };
  auto add_task = [&](CLI::App* c) { c->add_option("--task", o.task, "Task id (see list-tasks)")->required(); };
  auto add_loop = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Loop configuration JSON")->check(CLI::ExistingFile);
    c->add_option("--run-dir", o.run_dir, "Run directory");
    c->add_option("--seed", o.seed, "Master seed");
    c->add_option("--adapter", o.adapter, "Language-model adapter")->check(CLI::IsMember({"http", "replay"}));
    c->add_option("--fixtures", o.fixtures, "Replay fixture file");
    c->add_option("--n-trajectories", o.n_t, "Evaluation rollouts")->check(CLI::PositiveNumber);
    c->add_option("--threshold", o.threshold, "Success-rate threshold")->check(CLI::Range(0.0, 1.0));
    c->add_option("--max-iters", o.max_iters, "Self-refinement iterations after the initial design");
    c->add_option("--eval-mode", o.eval_mode, "train, or fixture reports")->check(CLI::IsMember({"train", "fixture"}));
  };

  auto* refine = app.add_subcommand("refine", "Run the full refinement loop");
  add_task(refine);
  add_loop(refine);
  add_common(refine);
  auto* replay = app.add_subcommand("replay", "Run the loop with scripted responses and committed fixtures");
  add_task(replay);
  add_loop(replay);
  add_common(replay);
  auto* design = app.add_subcommand("design", "Initial prompt, one completion and parse; no training");
  add_task(design);
  add_loop(design);
  add_common(design);
  auto* eval = app.add_subcommand("eval", "Evaluate a stored reward program and policy");
  add_task(eval);
  eval->add_option("--program", o.program, "Reward program file")->required()->check(CLI::ExistingFile);
  eval->add_option("--policy", o.policy, "Policy JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--seed", o.seed, "First rollout seed");
  eval->add_option("--n-trajectories", o.n_t, "Evaluation rollouts")->check(CLI::PositiveNumber);
  eval->add_option("--threshold", o.threshold, "Success-rate threshold")->check(CLI::Range(0.0, 1.0));
  add_common(eval);
  auto* monitor = app.add_subcommand("monitor", "Check a trajectory file against a task's STL goals");
  add_task(monitor);
  monitor->add_option("--traj", o.traj, "Trajectory JSONL file")->required()->check(CLI::ExistingFile);
  add_common(monitor);
  auto* resume_cmd = app.add_subcommand("resume", "Continue an interrupted run");
  resume_cmd->add_option("--run-dir", o.run_dir, "Run directory")->required();
  add_common(resume_cmd);
  auto* list = app.add_subcommand("list-tasks", "List the task profiles");
  add_common(list);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (refine->parsed()) return cmd_refine(o, false);
    if (replay->parsed()) return cmd_refine(o, true);
    if (design->parsed()) return cmd_design(o);
    if (eval->parsed()) return cmd_eval(o);
    if (monitor->parsed()) return cmd_monitor(o);
    if (resume_cmd->parsed()) return cmd_resume(o);
    if (list->parsed()) return cmd_list(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
