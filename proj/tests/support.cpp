#include "support.hpp"

#include "rforge/error.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <fstream>
#include <sstream>

namespace rforge::testing {

namespace fs = std::filesystem;

fs::path fixtures_dir() { return RFORGE_TEST_FIXTURES; }

const std::vector<std::string>& task_ids() {
  static const std::vector<std::string> ids = {
      "manipulator_ball_catching", "manipulator_ball_balancing", "manipulator_ball_pushing",
      "quadruped_velocity",        "quadruped_running",          "quadruped_walking",
      "quadcopter_hovering",       "quadcopter_wind",            "quadcopter_velocity",
  };
  return ids;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("rforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir, const std::vector<std::string>& skip) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    out.emplace_back(fs::relative(e.path(), dir).generic_string(), read_text_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Trajectory make_trajectory(std::shared_ptr<const SignalSchema> schema, double dt, std::size_t samples,
                           const std::function<std::vector<SampleEdit>(std::size_t)>& per_step) {
  Trajectory traj(schema);
  std::vector<double> row(schema->row_size(), 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (const auto& e : per_step(i)) {
      const auto idx = schema->index_of(e.signal);
      if (!idx) throw Error("test_setup", "no signal " + e.signal);
      std::copy(e.value.begin(), e.value.end(), row.begin() + static_cast<long>(schema->offset(*idx)));
    }
    traj.append(static_cast<double>(i) * dt, row);
  }
  return traj;
}

} // namespace rforge::testing

// ---------------------------------------------------------------------------
// Directed spec cases

namespace rforge::testing {

namespace {

std::vector<double> lerp3(const std::vector<double>& a, const std::vector<double>& b, double s) {
  s = std::clamp(s, 0.0, 1.0);
  return {a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s, a[2] + (b[2] - a[2]) * s};
}

using Edits = std::function<std::vector<SampleEdit>(double)>;

} // namespace

std::vector<DirectedCase> directed_cases(const fs::path& assets) {
  struct Def {
    std::string task;
    std::string name;
    bool expected;
    Edits edits;
  };
  const std::vector<double> tray{0.3, 0.0, 0.5};
  const std::vector<double> hole{0.95, 0.0, 0.35};
  const std::vector<double> ball0{0.5, 0.0, 0.45};
  const std::vector<double> target{1.0, 1.0, 2.0};
  const std::vector<double> home{0.0, 0.0, 1.0};
  std::vector<Def> defs = {
      {"manipulator_ball_catching", "ball rests in the container", true,
       [=](double t) {
         return std::vector<SampleEdit>{{"ball_pos", lerp3({0.3, 0.0, 1.5}, {0.3, 0.0, 0.55}, t / 2.0)},
                                        {"container_pos", tray}};
       }},
      {"manipulator_ball_catching", "ball drops past the container", false,
       [=](double t) {
         return std::vector<SampleEdit>{{"ball_pos", lerp3({0.3, 0.0, 1.5}, {0.3, 0.0, 0.0}, t / 2.0)},
                                        {"container_pos", tray}};
       }},
      {"manipulator_ball_balancing", "ball settles near the tray centre", true,
       [=](double t) {
         return std::vector<SampleEdit>{{"ball_pos", lerp3({0.4, 0.1, 1.5}, {0.35, 0.05, 0.55}, t / 2.5)},
                                        {"tray_pos", tray}};
       }},
      {"manipulator_ball_balancing", "ball rolls off after ten seconds", false,
       [=](double t) {
         auto p = t < 10.0 ? std::vector<double>{0.35, 0.05, 0.55} : lerp3({0.35, 0.05, 0.55}, {0.9, 0.05, 0.0}, t - 10.0);
         return std::vector<SampleEdit>{{"ball_pos", p}, {"tray_pos", tray}};
       }},
      {"manipulator_ball_pushing", "ball pushed into the hole", true,
       [=](double t) {
         return std::vector<SampleEdit>{{"ball_pos", lerp3(ball0, hole, t / 10.0)}, {"hole_pos", hole}};
       }},
      {"manipulator_ball_pushing", "ball never moves", false,
       [=](double) { return std::vector<SampleEdit>{{"ball_pos", ball0}, {"hole_pos", hole}}; }},
      {"quadruped_velocity", "tracks 1.5 m/s after a short ramp", true,
       [](double t) {
         return std::vector<SampleEdit>{{"robot_linvel", {std::min(t / 0.5, 1.0) * 1.5, 0.0, 0.0}},
                                        {"target_vel", {1.5, 0.0, 0.0}},
                                        {"robot_pos", {1.5 * t, 0.1, 0.6}}};
       }},
      {"quadruped_velocity", "settles at 0.5 m/s below the target", false,
       [](double t) {
         return std::vector<SampleEdit>{{"robot_linvel", {0.5, 0.0, 0.0}},
                                        {"target_vel", {1.5, 0.0, 0.0}},
                                        {"robot_pos", {0.5 * t, 0.1, 0.6}}};
       }},
      {"quadruped_running", "reaches 2.5 m/s by 0.6 s", true,
       [](double t) {
         return std::vector<SampleEdit>{{"robot_linvel", {std::min(t / 0.6, 1.0) * 2.5, 0.0, 0.0}},
                                        {"robot_pos", {2.0 * t, -0.3, 0.58}}};
       }},
      {"quadruped_running", "drifts sideways past 2 m", false,
       [](double t) {
         return std::vector<SampleEdit>{{"robot_linvel", {std::min(t / 0.6, 1.0) * 2.5, 0.0, 0.0}},
                                        {"robot_pos", {2.0 * t, -0.6 * t, 0.58}}};
       }},
      {"quadruped_walking", "walks to the target and stays", true,
       [](double t) {
         return std::vector<SampleEdit>{{"robot_pos", lerp3({0.0, 0.0, 0.6}, {2.0, 0.5, 0.6}, t / 4.0)},
                                        {"target_pos", {2.0, 0.5, 0.7}}};
       }},
      {"quadruped_walking", "reaches the target but falls on the way", false,
       [](double t) {
         auto p = lerp3({0.0, 0.0, 0.6}, {2.0, 0.5, 0.6}, t / 4.0);
         if (t > 2.0 && t < 2.5) p[2] = 0.3;
         return std::vector<SampleEdit>{{"robot_pos", p}, {"target_pos", {2.0, 0.5, 0.7}}};
       }},
      {"quadcopter_hovering", "flies to the target and hovers", true,
       [=](double t) {
         return std::vector<SampleEdit>{{"copter_pos", lerp3(home, target, t / 10.0)}, {"target_pos", target}};
       }},
      {"quadcopter_hovering", "hovers at the start position", false,
       [=](double) { return std::vector<SampleEdit>{{"copter_pos", home}, {"target_pos", target}}; }},
      {"quadcopter_wind", "flies to the target and hovers", true,
       [=](double t) {
         return std::vector<SampleEdit>{{"copter_pos", lerp3(home, target, t / 10.0)}, {"target_pos", target}};
       }},
      {"quadcopter_wind", "reaches the target then climbs past 5 m", false,
       [=](double t) {
         auto p = lerp3(home, target, t / 10.0);
         if (t > 20.0) p[2] = 2.0 + (t - 20.0);
         return std::vector<SampleEdit>{{"copter_pos", p}, {"target_pos", target}};
       }},
      {"quadcopter_velocity", "moves at the target velocity from the start", true,
       [](double t) {
         return std::vector<SampleEdit>{{"copter_linvels", {0.7, 0.6, 0.0}},
                                        {"target_vel", {0.7, 0.6, 0.0}},
                                        {"copter_pos", {0.7 * t, 0.6 * t, 1.0}}};
       }},
      {"quadcopter_velocity", "starts from rest", false,
       [](double t) {
         return std::vector<SampleEdit>{{"copter_linvels", {std::min(t, 1.0) * 0.7, std::min(t, 1.0) * 0.6, 0.0}},
                                        {"target_vel", {0.7, 0.6, 0.0}},
                                        {"copter_pos", {0.0, 0.0, 1.0}}};
       }},
  };
  std::vector<DirectedCase> out;
  for (const auto& d : defs) {
    const auto profile = load_task_profile(assets, d.task);
    const double dt = profile.env.dt;
    auto traj = make_trajectory(profile.env.schema, dt, profile.env.horizon_steps + 1,
                                [&](std::size_t i) { return d.edits(static_cast<double>(i) * dt); });
    out.push_back({d.task, d.name, d.expected, std::move(traj)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force STL reference

namespace {

struct RefFormula {
  enum Kind { Atom, Always, Eventually, And } kind = Atom;
  int lhs = 0;  // atom shape
  int cmp = 0;  // <=, >=, <, >
  double c = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::vector<RefFormula> kids;
};

// Signal values and thresholds are multiples of 1/4, so every comparison and
// window bound is exact in binary floating point.
double quarter(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng) / 4.0;
}

RefFormula random_formula(std::mt19937_64& rng, int depth) {
  RefFormula f;
  const int pick = depth == 0 ? 0 : std::uniform_int_distribution<int>(0, 3)(rng);
  f.kind = static_cast<RefFormula::Kind>(pick);
  switch (f.kind) {
  case RefFormula::Atom:
    f.lhs = std::uniform_int_distribution<int>(0, 3)(rng);
    f.cmp = std::uniform_int_distribution<int>(0, 3)(rng);
    f.c = quarter(rng, -4, 4);
    break;
  case RefFormula::Always:
  case RefFormula::Eventually:
    f.a = quarter(rng, 0, 8);
    f.b = f.a + quarter(rng, 0, 8);
    f.kids.push_back(random_formula(rng, depth - 1));
    break;
  case RefFormula::And: {
    const int n = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int i = 0; i < n; ++i) f.kids.push_back(random_formula(rng, depth - 1));
    break;
  }
  }
  return f;
}

std::string num(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

std::string render(const RefFormula& f) {
  static const char* lhs[] = {"x[0]", "x[1]", "x[0] - y", "abs(y)"};
  static const char* cmp[] = {"<=", ">=", "<", ">"};
  switch (f.kind) {
  case RefFormula::Atom: return std::string(lhs[f.lhs]) + " " + cmp[f.cmp] + " " + num(f.c);
  case RefFormula::Always:
  case RefFormula::Eventually:
    return std::string(f.kind == RefFormula::Always ? "G[" : "F[") + num(f.a) + "," + num(f.b) + "](" +
           render(f.kids[0]) + ")";
  case RefFormula::And: {
    std::string s;
    for (std::size_t i = 0; i < f.kids.size(); ++i) s += (i ? " and (" : "(") + render(f.kids[i]) + ")";
    return s;
  }
  }
  return {};
}

struct RefTrace {
  std::vector<double> t, x0, x1, y;
};

bool ref_eval(const RefFormula& f, const RefTrace& tr, std::size_t i) {
  switch (f.kind) {
  case RefFormula::Atom: {
    const double v[] = {tr.x0[i], tr.x1[i], tr.x0[i] - tr.y[i], std::abs(tr.y[i])};
    const double x = v[f.lhs];
    switch (f.cmp) {
    case 0: return x <= f.c;
    case 1: return x >= f.c;
    case 2: return x < f.c;
    default: return x > f.c;
    }
  }
  case RefFormula::Always:
  case RefFormula::Eventually: {
    const bool always = f.kind == RefFormula::Always;
    for (std::size_t j = 0; j < tr.t.size(); ++j) {
      if (tr.t[j] < tr.t[i] + f.a || tr.t[j] > tr.t[i] + f.b) continue;
      const bool s = ref_eval(f.kids[0], tr, j);
      if (always && !s) return false;
      if (!always && s) return true;
    }
    return always;
  }
  case RefFormula::And:
    for (const auto& k : f.kids) {
      if (!ref_eval(k, tr, i)) return false;
    }
    return true;
  }
  return false;
}

} // namespace

OracleResult run_stl_oracle(std::uint64_t seed, std::size_t n) {
  auto schema = std::make_shared<const SignalSchema>(
      std::vector<SignalSpec>{{"x", 2, "", "", true}, {"y", 1, "", "", true}, {"u", 1, "", "", true}}, "u");
  std::mt19937_64 rng(seed);
  OracleResult out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto f = random_formula(rng, std::uniform_int_distribution<int>(0, 3)(rng));
    const std::size_t samples = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const double dt = std::array<double, 3>{0.25, 0.5, 1.0}[std::uniform_int_distribution<int>(0, 2)(rng)];
    RefTrace tr;
    Trajectory traj(schema);
    for (std::size_t i = 0; i < samples; ++i) {
      tr.t.push_back(static_cast<double>(i) * dt);
      tr.x0.push_back(quarter(rng, -4, 4));
      tr.x1.push_back(quarter(rng, -4, 4));
      tr.y.push_back(quarter(rng, -4, 4));
      const double row[] = {tr.x0.back(), tr.x1.back(), tr.y.back(), 0.0};
      traj.append(tr.t.back(), row);
    }
    const auto text = render(f);
    const auto parsed = parse_formula(text, *schema);
    ++out.cases;
    if (satisfies(*parsed, traj) != ref_eval(f, tr, 0)) {
      if (out.mismatches++ == 0) out.first_mismatch = text;
    }
  }
  return out;
}

} // namespace rforge::testing
