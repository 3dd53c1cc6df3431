#!/usr/bin/env python3
"""Regenerate verbatim task assets and test fixtures from the LaTeX source.

Usage: extract_assets.py SOURCE.md [--assets DIR] [--corpus DIR]

Writes, per task under DIR/tasks/<id>/:
  prompt/{environment,task,observables,rules}.txt, fixtures/initial_prompt.txt
  feedback_template.txt
  listings/<stem>.py (code listings, verbatim)
  fixtures/replay.txt, fixtures/report_<kk>.json, fixtures/feedback_<kk>.txt

and, under the corpus directory, one JSON file per listing holding random
states and the listing's own value on each (executed with numpy / torch).
task.json, env.json, spec.stl and dsl/*.rw are hand-written and only read.
"""

import argparse
import json
import math
import re
import sys
import textwrap
import types
from pathlib import Path

import numpy as np

TASKS = [
    # (task id, robot heading, log heading, prompt label, template label)
    ("manipulator_ball_catching", "Robotic Manipulator", "Ball Catching", "ball_catching_prompt", "ball_catching_feedback"),
    ("manipulator_ball_balancing", "Robotic Manipulator", "Ball Balancing", "ball_balancing_prompt", "ball_balancing_feedback"),
    ("manipulator_ball_pushing", "Robotic Manipulator", "Ball Pushing", "ball_pushing_prompt", "ball_pushing_feedback"),
    ("quadruped_velocity", "Quadruped Robot", "Velocity Tracking", "anymal_velocity_prompt", "anymal_velocity_feedback"),
    ("quadruped_running", "Quadruped Robot", "Running", "anymal_running_prompt", "anymal_running_feedback"),
    ("quadruped_walking", "Quadruped Robot", "Walking To Target", "anymal_walkingg_to_position_prompt",
     "anymal_walking_to_position_feedback"),
    ("quadcopter_hovering", "Quadcopter", "Hovering", "crazyflie_hovering_prompt", "crazyflie_hovering_feedback"),
    ("quadcopter_wind", "Quadcopter", "Wind Field", "crazyflie_wind_prompt", "crazyflie_wind_feedback"),
    ("quadcopter_velocity", "Quadcopter", "Velocity Tracking", "crazyflie_velocity_prompt", "crazyflie_velocity_feedback"),
]

# Overall success rates are not part of the per-iteration logs. The summary
# table gives them for the first and the final design: (first, final, final
# iteration). The final entry for pushing is superseded by its own log.
SUMMARY_SR = {
    "manipulator_ball_catching": (1.00, 1.00, 0),
    "manipulator_ball_balancing": (1.00, 1.00, 0),
    "manipulator_ball_pushing": (0.00, None, 5),
    "quadruped_velocity": (0.00, 0.96, 3),
    "quadruped_running": (0.10, 0.98, 2),
    "quadruped_walking": (0.00, 0.85, 5),
    "quadcopter_hovering": (0.00, 0.98, 2),
    "quadcopter_wind": (0.00, 1.00, 4),
    "quadcopter_velocity": (0.00, 0.99, 3),
}
# Stated in the running narrative for its middle iteration.
EXTRA_SR = {("quadruped_running", 1): 0.90}

THRESHOLD = 0.95

# Textual repairs applied before executing a listing (and mirrored by the
# hand transcriptions in dsl/).
LISTING_FIXES = {
    ("manipulator_ball_pushing", "iter_*"): [("gripper_ball_distance_penalty", "gripper_ball_distance_reward")],
    ("quadruped_velocity", "manual"): [("torch.normtorch.norm", "torch.norm"), ("target_seppd", "target_vel")],
    ("quadcopter_hovering", "manual"): [("target_pos - target_pos", "robot_pos - target_pos")],
    ("quadcopter_wind", "manual"): [("target_pos - target_pos", "robot_pos - target_pos")],
}


# ---------------------------------------------------------------------------
# LaTeX handling

def latex_to_text(body):
    out = []
    for line in body.split("\n"):
        line = re.sub(r"\\textit\{([^}]*)\}", r"\1", line)
        line = line.replace("\\_", "_").replace("\\%", "%")
        while True:
            stripped = re.sub(r"\s*\\\\\s*$", "", line)
            if stripped == line:
                break
            line = stripped
        out.append(line)
    return "\n".join(out)


def boxes(text):
    """(title, label, body) for every tcolorbox, in document order."""
    pat = re.compile(r"\\begin\{tcolorbox\}\[title=\{([^}]*)\}[^\]]*\][ \t]*(?:\\label\{([^}]*)\})?[ \t]*\n(.*?)\\end\{tcolorbox\}",
                     re.S)
    return [(m.group(1), m.group(2), m.group(3), m.start()) for m in pat.finditer(text)]


def box_by_label(text, label):
    for title, lab, body, _ in boxes(text):
        if lab == label:
            return body
    raise SystemExit(f"no box labelled {label}")


def log_boxes(text, robot, heading):
    """Iteration and manual boxes under the log section's robot/task headings."""
    start = text.index("\\section{Experimental Log}")
    sub = text.index("\\subsection{" + robot + "}", start)
    head = re.compile(r"\\subsubsection\{" + re.escape(heading) + r"\}")
    m = head.search(text, sub)
    if not m:
        raise SystemExit(f"no log heading {heading}")
    nxt = re.compile(r"\\(sub)?subsection\{").search(text, m.end())
    end = nxt.start() if nxt else len(text)
    return [(t, b) for t, _, b, pos in boxes(text) if m.end() <= pos < end]


def python_block(body):
    m = re.search(r"\\begin\{python\}\n(.*?)\\end\{python\}", body, re.S)
    return m.group(1)


# ---------------------------------------------------------------------------
# Prompt segments

MARKERS = ["This task has the following goals", "The following variables are available",
           "Some rules while designing", "Design a complete reward function for this task."]
OPENER = "I want to design a reward function for a reinforcement learning task.\n\n"
CLOSER = "Design a complete reward function for this task.\n"


def split_prompt(text):
    if not text.startswith(OPENER):
        raise SystemExit("prompt lacks the opener")
    cuts = [text.index(m) for m in MARKERS]
    segs = [text[len(OPENER):cuts[0]], text[cuts[0]:cuts[1]], text[cuts[1]:cuts[2]], text[cuts[2]:cuts[3]]]
    if text[cuts[3]:] != CLOSER:
        raise SystemExit("prompt lacks the closer")
    return segs


# ---------------------------------------------------------------------------
# Feedback lines: one classifier for template lines and logged lines

AXIS = re.compile(r"on (?:the )?([xyz])-axis")


def classify(line):
    low = line.lower()
    ax = AXIS.search(low)
    axis = ax.group(1) if ax else None
    g = re.match(r"\s*goal (\d+) success rate", low)
    if g:
        return "goal:" + g.group(1)
    if "converges after" in low:
        return "converged_at"
    if "average timestep" in low:
        return "episode_length"
    if "average reward is" in low:
        return "episode_reward"
    if "results of" in low and "trials" in low:
        return "n_t"
    if "normalized action" in low:
        return "metric:action_norm"
    if "maximum linear velocity" in low:
        return "metric:max_linvel_x"
    if "velocity deviation" in low:
        return "metric:veldev_" + axis if axis else "metric:veldev_norm"
    if "normalized distance" in low:
        return "metric:dist_norm"
    if "distance" in low and axis:
        return "metric:dist_" + axis
    if "angular velocity" in low and axis:
        return "metric:angvel_" + axis
    if "linear velocity" in low and axis:
        return "metric:linvel_" + axis
    if "position on" in low and axis:
        return "metric:pos_" + axis
    return None


def template_slots(template):
    slots = []
    for line in template.split("\n"):
        for _ in range(line.count("[NUM]")):
            key = classify(line)
            if key is None:
                raise SystemExit(f"unclassified template line: {line!r}")
            slots.append(key)
    return slots


NUM = re.compile(r"-?\d+(?:\.\d+)?")


def parse_log(body):
    """Logged numbers keyed by slot name, plus the logged verdict."""
    text = latex_to_text(body.split("\\textbf{Evaluation:}", 1)[1])
    values = {}
    verdict = None
    for line in text.split("\n"):
        v = re.search(r"designed reward function is (good|bad)", line)
        if v:
            verdict = v.group(1)
            continue
        key = classify(line)
        if key is None:
            continue
        nums = NUM.findall(line)
        if not nums:
            continue
        x = float(nums[-1])
        if key.startswith("goal:"):
            x /= 100.0
        values[key] = x
    return values, verdict


# ---------------------------------------------------------------------------
# Independent rendering of the expected feedback text

def fmt_metric(x):
    s = "%.3f" % x
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def fmt_rate(r):
    return "%d%%" % math.floor(r * 100.0 + 0.5)


def render(template, slots, report):
    metrics = dict((m["id"], m["value"]) for m in report["metrics"])
    goals = dict((g["goal"], g["rate"]) for g in report["goal_rates"])
    values = []
    for s in slots:
        if s == "converged_at":
            c = report["converged_at_step"]
            values.append(str(c if c is not None else report["total_train_steps"]))
        elif s == "episode_length":
            values.append(fmt_metric(report["avg_episode_length"]))
        elif s == "episode_reward":
            values.append(fmt_metric(report["avg_episode_reward"]))
        elif s == "n_t":
            values.append(str(report["n_t"]))
        elif s == "success_rate":
            values.append(fmt_rate(report["success_rate"]))
        elif s.startswith("metric:"):
            values.append(fmt_metric(metrics[s[7:]]))
        elif s.startswith("goal:"):
            values.append(fmt_rate(goals[s[5:]]))
    out = template.replace("[good|bad]", report["verdict"])
    parts = out.split("[NUM]")
    assert len(parts) == len(values) + 1
    return "".join(p + v for p, v in zip(parts, values + [""]))


# ---------------------------------------------------------------------------
# Reports

def build_report(task_id, k, final_k, values, logged_verdict, slots, goal_labels):
    first, final, _ = SUMMARY_SR[task_id]
    logged_goals = {g[5:]: v for g, v in values.items() if g.startswith("goal:")}
    if (task_id, k) in EXTRA_SR:
        sr = EXTRA_SR[(task_id, k)]
    elif k == 0 and first is not None:
        sr = first
    elif k == final_k and final is not None:
        sr = final
    else:
        sr = min(logged_goals.values())
    not_logged = []
    metrics = []
    for s in slots:
        if s.startswith("metric:"):
            mid = s[7:]
            if s in values:
                metrics.append({"id": mid, "value": values[s]})
            else:
                metrics.append({"id": mid, "value": 0.0})
                not_logged.append(s)
    goal_rates = []
    for label in goal_labels:
        if label in logged_goals:
            goal_rates.append({"goal": label, "rate": logged_goals[label]})
        else:
            goal_rates.append({"goal": label, "rate": sr})
            not_logged.append("goal:" + label)
    for key in ("converged_at", "episode_length", "episode_reward", "n_t"):
        if key not in values:
            raise SystemExit(f"{task_id} iteration {k}: {key} missing from log")
    return {
        "verdict": "good" if sr >= THRESHOLD else "bad",
        "logged_verdict": logged_verdict,
        "converged_at_step": int(values["converged_at"]),
        "total_train_steps": int(values["converged_at"]),
        "avg_episode_reward": values["episode_reward"],
        "avg_episode_length": values["episode_length"],
        "metrics": metrics,
        "goal_rates": goal_rates,
        "success_rate": sr,
        "n_t": int(values["n_t"]),
        "failure": None,
        "not_logged": not_logged,
    }


# ---------------------------------------------------------------------------
# Executing listings

def fixes_for(task_id, stem):
    out = []
    for (tid, pattern), subs in LISTING_FIXES.items():
        if tid == task_id and (pattern == stem or (pattern.endswith("*") and stem.startswith(pattern[:-1]))):
            out += subs
    return out


def executable_body(listing, task_id, stem):
    lines = listing.expandtabs(4).split("\n")
    while lines and (re.search(r"reward_function\s*\(", lines[0]) or not lines[0].strip()):
        lines.pop(0)
    body = textwrap.dedent("\n".join(lines))
    for a, b in fixes_for(task_id, stem):
        body = body.replace(a, b)
    if not re.search(r"^return\b", body, re.M):
        body = body.rstrip() + "\nreturn final_reward\n"
    return body


def run_listing(body, signals, values, use_torch):
    import torch
    ns = {"np": np, "torch": torch}
    args = {}
    for name, dim in signals:
        arr = np.array(values[name], dtype=np.float64)
        args[name] = torch.tensor(arr.reshape(1, dim), dtype=torch.float64) if use_torch else arr
    ns.update(args)
    ns["self"] = types.SimpleNamespace(actions=args.get("actions"), default_tool_rot=args.get("default_tool_rot"))
    src = "def __f():\n" + textwrap.indent(body, "    ")
    exec(compile(src, "<listing>", "exec"), ns)
    r = ns["__f"]()
    if use_torch:
        return float(torch.as_tensor(r).reshape(-1)[0])
    return float(r)


def corpus_entry(task_id, stem, listing, signals, rng, n):
    body = executable_body(listing, task_id, stem)
    use_torch = "torch." in body
    states = []
    for _ in range(n):
        st = {name: [float(x) for x in rng.uniform(-2.0, 2.0, size=dim)] for name, dim in signals}
        st["__value"] = run_listing(body, signals, st, use_torch)
        states.append(st)
    return {"task": task_id, "stem": stem, "dsl": f"tasks/{task_id}/dsl/{stem}.rw", "states": states}


# ---------------------------------------------------------------------------

def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source")
    ap.add_argument("--assets", default=str(Path(__file__).resolve().parent.parent / "assets"))
    ap.add_argument("--corpus", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"))
    ap.add_argument("--states", type=int, default=100)
    args = ap.parse_args()

    text = Path(args.source).read_text(encoding="utf-8")
    assets = Path(args.assets)
    corpus = Path(args.corpus)
    rng = np.random.default_rng(20240517)

    for task_id, robot, heading, plabel, flabel in TASKS:
        tdir = assets / "tasks" / task_id
        prompt = latex_to_text(box_by_label(text, plabel))
        for name, seg in zip(("environment", "task", "observables", "rules"), split_prompt(prompt)):
            write(tdir / "prompt" / f"{name}.txt", seg)
        write(tdir / "fixtures" / "initial_prompt.txt", prompt)

        template = latex_to_text(box_by_label(text, flabel))
        write(tdir / "feedback_template.txt", template)
        slots = template_slots(template)

        task_json = json.loads((tdir / "task.json").read_text())
        if task_json["feedback_slots"] != slots:
            raise SystemExit(f"{task_id}: task.json slots {task_json['feedback_slots']} != template {slots}")
        env = json.loads((tdir / "env.json").read_text())
        signals = [(s["name"], s["dim"]) for s in env["signals"]]
        spec_goals = [m.group(1) for m in re.finditer(r"^goal\s+([^:]+?)\s*:", (tdir / "spec.stl").read_text(), re.M)]

        logs = log_boxes(text, robot, heading)
        iterations = [(t, b) for t, b in logs if t.startswith("Iteration")]
        manual = [b for t, b in logs if t.startswith("Manual")]
        final_k = SUMMARY_SR[task_id][2]
        if len(iterations) != final_k + 1:
            raise SystemExit(f"{task_id}: {len(iterations)} logged iterations, expected {final_k + 1}")

        replay = []
        listings = []
        for k, (title, body) in enumerate(iterations):
            if title != f"Iteration {k}":
                raise SystemExit(f"{task_id}: unexpected box {title!r}")
            listing = python_block(body)
            stem = f"iter_{k:02d}"
            write(tdir / "listings" / f"{stem}.py", listing)
            listings.append((stem, listing))
            replay.append(f"=== iteration {k} ===\n```python\n{listing}```\n")
            values, verdict = parse_log(body)
            report = build_report(task_id, k, final_k, values, verdict, slots, spec_goals)
            write(tdir / "fixtures" / f"report_{k:02d}.json", json.dumps(report, indent=2) + "\n")
            write(tdir / "fixtures" / f"feedback_{k:02d}.txt", render(template, slots, report))
        for body in manual:
            listing = python_block(body)
            write(tdir / "listings" / "manual.py", listing)
            listings.append(("manual", listing))
        write(tdir / "fixtures" / "replay.txt", "".join(replay))

        for stem, listing in listings:
            entry = corpus_entry(task_id, stem, listing, signals, rng, args.states)
            write(corpus / f"{task_id}__{stem}.json", json.dumps(entry) + "\n")
        print(f"{task_id}: {len(iterations)} iterations, {len(listings)} listings", file=sys.stderr)


if __name__ == "__main__":
    main()
