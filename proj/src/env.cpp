#include "rforge/env.hpp"

#include "rforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace rforge {

using nlohmann::json;

namespace {

using QuantityTable = std::vector<std::pair<std::string, std::size_t>>;

struct Family {
  QuantityTable quantities;
  std::map<std::string, double> params;
  // init keys in sampling order, with the value used when a profile omits one
  std::vector<std::pair<std::string, std::vector<double>>> init_defaults;
};

const Family& family(Dynamics d) {
  static const Family point_mass{
      {{"pos", 3}, {"linvel", 3}, {"rot", 4}, {"angvel4", 4}, {"angvel", 3}, {"target_pos", 3}, {"target_vel", 3},
       {"action", 4}, {"target_rel", 3}, {"vel_error", 3}},
      {{"mass", 0.5},
       {"gravity", 9.81},
       {"gravity_compensation", 1.0},
       {"thrust_gain", 1.0},
       {"drag", 0.1},
       {"wind_x_lo", 0.2},
       {"wind_x_hi", 0.6},
       {"wind_force", 0.0},
       {"ground_z", 0.0}},
      {{"start_pos", {0.0, 0.0, 1.0}}, {"target_pos", {0.0, 0.0, 0.0}}, {"target_vel", {0.0, 0.0, 0.0}}}};
  static const Family locomotor{
      {{"pos", 3}, {"rot", 4}, {"linvel", 3}, {"angvel", 3}, {"target_pos", 3}, {"target_vel", 3}, {"action", 12},
       {"target_rel", 3}, {"vel_error", 3}},
      {{"stand_height", 0.6},
       {"height_relax", 4.0},
       {"accel_gain", 4.0},
       {"lateral_gain", 2.0},
       {"yaw_gain", 1.0},
       {"drag", 1.0},
       {"stability_threshold", 2.0},
       {"fall_rate", 1.5},
       {"fail_height", 0.2}},
      {{"start_pos", {0.0, 0.0, 0.6}}, {"target_pos", {0.0, 0.0, 0.0}}, {"target_vel", {0.0, 0.0, 0.0}}}};
  static const Family ball_tray{
      {{"ball_pos", 3}, {"ball_vel", 3}, {"tray_pos", 3}, {"tray_rot", 4}, {"default_rot", 4}, {"action", 7},
       {"ball_rel", 3}},
      {{"gravity", 9.81},
       {"ball_radius", 0.03},
       {"tray_radius", 0.3},
       {"walls", 0.0},
       {"restitution", 0.3},
       {"tray_speed", 1.0},
       {"max_tilt", 0.3},
       {"roll_factor", 5.0 / 7.0},
       {"rolling_friction", 0.5},
       {"x_lo", -0.5},
       {"x_hi", 1.0},
       {"y_lo", -0.5},
       {"y_hi", 0.5},
       {"z_lo", 0.2},
       {"z_hi", 1.2}},
      {{"tray_pos", {0.0, 0.0, 0.5}}, {"ball_pos", {0.0, 0.0, 1.5}}, {"ball_vel", {0.0, 0.0, 0.0}}}};
  static const Family ball_push{
      {{"gripper_pos", 3}, {"ball_pos", 3}, {"ball_vel", 3}, {"hole_pos", 3}, {"ball_init_pos", 3}, {"action", 7},
       {"ball_rel", 3}, {"hole_rel", 3}},
      {{"gravity", 9.81},
       {"ball_radius", 0.03},
       {"gripper_radius", 0.02},
       {"gripper_speed", 0.5},
       {"contact_height", 0.06},
       {"friction", 0.8},
       {"table_z", 0.42},
       {"table_x_lo", 0.2},
       {"table_x_hi", 1.2},
       {"table_y_lo", -0.5},
       {"table_y_hi", 0.5},
       {"hole_radius", 0.06},
       {"x_lo", 0.0},
       {"x_hi", 1.3},
       {"y_lo", -0.6},
       {"y_hi", 0.6},
       {"z_lo", 0.43},
       {"z_hi", 0.9}},
      {{"gripper_pos", {0.3, 0.0, 0.45}}, {"ball_pos", {0.5, 0.0, 0.45}}, {"hole_pos", {0.95, 0.0, 0.35}}}};
  switch (d) {
  case Dynamics::PointMass: return point_mass;
  case Dynamics::Locomotor: return locomotor;
  case Dynamics::BallTray: return ball_tray;
  case Dynamics::BallPush: return ball_push;
  }
  return point_mass;
}

[[noreturn]] void profile_error(const std::string& msg) { throw Error("invalid_profile", msg); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// ---------------------------------------------------------------------------
// State layouts

namespace pm {
constexpr std::size_t P = 0, V = 3, TARGET = 6, TVEL = 9;
}
namespace loco {
constexpr std::size_t P = 0, YAW = 3, V = 4, VZ = 6, YAW_RATE = 7, TARGET = 8, TVEL = 11;
}
namespace tray {
// mode: 0 airborne, 1 resting on tray, 2 on the ground
constexpr std::size_t TP = 0, TILT = 3, TV = 5, BP = 8, BV = 11, MODE = 14, REL = 15, REL_V = 17;
}
namespace push {
// mode: 0 on table, 1 in hole, 2 airborne off the table, 3 on the ground
constexpr std::size_t GP = 0, GV = 3, BP = 6, BV = 9, MODE = 12, INIT = 13, HOLE = 16;
}

struct Params {
  const EnvProfile& p;
  double operator()(const char* k) const { return p.param(k); }
};

void step_point_mass(const EnvProfile& prof, EnvState& s, const double* a) {
  using namespace pm;
  Params P_{prof};
  const double m = P_("mass");
  const double k = P_("thrust_gain");
  double f[3] = {k * (a[0] - a[2]), k * (a[1] - a[3]), k * (a[0] + a[1] + a[2] + a[3])};
  if (P_("gravity_compensation") == 0.0) f[2] -= m * P_("gravity");
  const double x = s.x[P];
  if (x > P_("wind_x_lo") && x < P_("wind_x_hi")) f[0] += P_("wind_force");
  const double drag = P_("drag");
  for (std::size_t i = 0; i < 3; ++i) {
    const double acc = (f[i] - drag * s.x[V + i]) / m;
    s.x[V + i] += prof.dt * acc;
    s.x[P + i] += prof.dt * s.x[V + i];
  }
  if (s.x[P + 2] < P_("ground_z")) s.failed = true;
}

void step_locomotor(const EnvProfile& prof, EnvState& s, const double* a) {
  using namespace loco;
  Params P_{prof};
  auto mean4 = [&](std::size_t from) { return (a[from] + a[from + 1] + a[from + 2] + a[from + 3]) / 4.0; };
  const double fwd = P_("accel_gain") * mean4(0);
  const double lat = P_("lateral_gain") * mean4(4);
  s.x[YAW_RATE] = P_("yaw_gain") * mean4(8);
  const double c = std::cos(s.x[YAW]);
  const double sn = std::sin(s.x[YAW]);
  const double acc[2] = {c * fwd - sn * lat - P_("drag") * s.x[V], sn * fwd + c * lat - P_("drag") * s.x[V + 1]};
  for (std::size_t i = 0; i < 2; ++i) {
    s.x[V + i] += prof.dt * acc[i];
    s.x[P + i] += prof.dt * s.x[V + i];
  }
  s.x[YAW] += prof.dt * s.x[YAW_RATE];

  double norm2 = 0.0;
  for (std::size_t i = 0; i < 12; ++i) norm2 += a[i] * a[i];
  const double excess = std::max(0.0, std::sqrt(norm2) - P_("stability_threshold"));
  s.x[VZ] = -P_("height_relax") * (s.x[P + 2] - P_("stand_height")) - P_("fall_rate") * excess;
  s.x[P + 2] += prof.dt * s.x[VZ];
  if (s.x[P + 2] < P_("fail_height")) s.failed = true;
}

void step_ball_tray(const EnvProfile& prof, EnvState& s, const double* a) {
  using namespace tray;
  Params P_{prof};
  const double dt = prof.dt;
  const double g = P_("gravity");
  const double r = P_("ball_radius");
  const double speed = P_("tray_speed");
  const double lo[3] = {P_("x_lo"), P_("y_lo"), P_("z_lo")};
  const double hi[3] = {P_("x_hi"), P_("y_hi"), P_("z_hi")};
  const double prev_tray_z = s.x[TP + 2];
  for (std::size_t i = 0; i < 3; ++i) {
    s.x[TV + i] = speed * a[i];
    const double next = clamp(s.x[TP + i] + dt * s.x[TV + i], lo[i], hi[i]);
    s.x[TV + i] = (next - s.x[TP + i]) / dt;
    s.x[TP + i] = next;
  }
  s.x[TILT] = P_("max_tilt") * a[3];
  s.x[TILT + 1] = P_("max_tilt") * a[4];

  const int mode = static_cast<int>(s.x[MODE]);
  if (mode == 2) return;
  if (mode == 1) {
    const double roll = P_("roll_factor") * g;
    const double fr = P_("rolling_friction");
    for (std::size_t i = 0; i < 2; ++i) {
      const double acc = roll * std::sin(s.x[TILT + i]) - fr * s.x[REL_V + i];
      s.x[REL_V + i] += dt * acc;
      s.x[REL + i] += dt * s.x[REL_V + i];
    }
    const double dist = std::hypot(s.x[REL], s.x[REL + 1]);
    const double radius = P_("tray_radius");
    if (P_("walls") != 0.0) {
      const double limit = radius - r;
      if (dist > limit) {
        const double nx = s.x[REL] / dist;
        const double ny = s.x[REL + 1] / dist;
        s.x[REL] = nx * limit;
        s.x[REL + 1] = ny * limit;
        const double vn = s.x[REL_V] * nx + s.x[REL_V + 1] * ny;
        if (vn > 0.0) {
          const double dv = (1.0 + P_("restitution")) * vn;
          s.x[REL_V] -= dv * nx;
          s.x[REL_V + 1] -= dv * ny;
        }
      }
    }
    for (std::size_t i = 0; i < 2; ++i) {
      s.x[BP + i] = s.x[TP + i] + s.x[REL + i];
      s.x[BV + i] = s.x[TV + i] + s.x[REL_V + i];
    }
    s.x[BP + 2] = s.x[TP + 2] + r;
    s.x[BV + 2] = s.x[TV + 2];
    if (P_("walls") == 0.0 && dist > radius) s.x[MODE] = 0.0;  // rolled off the edge
    return;
  }
  // airborne
  const double prev_z = s.x[BP + 2];
  s.x[BV + 2] -= dt * g;
  for (std::size_t i = 0; i < 3; ++i) s.x[BP + i] += dt * s.x[BV + i];
  const double rel[2] = {s.x[BP] - s.x[TP], s.x[BP + 1] - s.x[TP + 1]};
  const bool over_tray = std::hypot(rel[0], rel[1]) <= P_("tray_radius");
  const bool crossed = prev_z >= prev_tray_z + r - 1e-12 && s.x[BP + 2] <= s.x[TP + 2] + r;
  if (over_tray && crossed) {
    s.x[MODE] = 1.0;
    s.x[REL] = rel[0];
    s.x[REL + 1] = rel[1];
    s.x[REL_V] = s.x[BV] - s.x[TV];
    s.x[REL_V + 1] = s.x[BV + 1] - s.x[TV + 1];
    s.x[BP + 2] = s.x[TP + 2] + r;
    s.x[BV + 2] = s.x[TV + 2];
  } else if (s.x[BP + 2] <= r) {
    s.x[MODE] = 2.0;
    s.x[BP + 2] = r;
    s.x[BV] = s.x[BV + 1] = s.x[BV + 2] = 0.0;
    s.failed = true;
  }
}

void step_ball_push(const EnvProfile& prof, EnvState& s, const double* a) {
  using namespace push;
  Params P_{prof};
  const double dt = prof.dt;
  const double rb = P_("ball_radius");
  const double speed = P_("gripper_speed");
  const double lo[3] = {P_("x_lo"), P_("y_lo"), P_("z_lo")};
  const double hi[3] = {P_("x_hi"), P_("y_hi"), P_("z_hi")};
  for (std::size_t i = 0; i < 3; ++i) {
    const double next = clamp(s.x[GP + i] + dt * speed * a[i], lo[i], hi[i]);
    s.x[GV + i] = (next - s.x[GP + i]) / dt;
    s.x[GP + i] = next;
  }
  const int mode = static_cast<int>(s.x[MODE]);
  if (mode == 1 || mode == 3) return;
  if (mode == 2) {
    s.x[BV + 2] -= dt * P_("gravity");
    for (std::size_t i = 0; i < 3; ++i) s.x[BP + i] += dt * s.x[BV + i];
    if (s.x[BP + 2] <= rb) {
      s.x[BP + 2] = rb;
      s.x[BV] = s.x[BV + 1] = s.x[BV + 2] = 0.0;
      s.x[MODE] = 3.0;
      s.failed = true;
    }
    return;
  }
  // on the table: gripper contact pushes the ball
  const double reach = rb + P_("gripper_radius");
  const double dx = s.x[BP] - s.x[GP];
  const double dy = s.x[BP + 1] - s.x[GP + 1];
  const double d = std::hypot(dx, dy);
  if (d < reach && d > 0.0 && std::abs(s.x[GP + 2] - s.x[BP + 2]) < P_("contact_height")) {
    const double nx = dx / d;
    const double ny = dy / d;
    s.x[BP] = s.x[GP] + nx * reach;
    s.x[BP + 1] = s.x[GP + 1] + ny * reach;
    const double vg = s.x[GV] * nx + s.x[GV + 1] * ny;
    const double vb = s.x[BV] * nx + s.x[BV + 1] * ny;
    if (vg > vb) {
      s.x[BV] += (vg - vb) * nx;
      s.x[BV + 1] += (vg - vb) * ny;
    }
  }
  const double decay = std::max(0.0, 1.0 - P_("friction") * dt);
  for (std::size_t i = 0; i < 2; ++i) {
    s.x[BV + i] *= decay;
    s.x[BP + i] += dt * s.x[BV + i];
  }
  if (std::hypot(s.x[BP] - s.x[HOLE], s.x[BP + 1] - s.x[HOLE + 1]) < P_("hole_radius")) {
    s.x[MODE] = 1.0;
    s.x[BP] = s.x[HOLE];
    s.x[BP + 1] = s.x[HOLE + 1];
    s.x[BP + 2] = s.x[HOLE + 2];
    s.x[BV] = s.x[BV + 1] = s.x[BV + 2] = 0.0;
    return;
  }
  const bool on_table = s.x[BP] >= P_("table_x_lo") && s.x[BP] <= P_("table_x_hi") &&
                        s.x[BP + 1] >= P_("table_y_lo") && s.x[BP + 1] <= P_("table_y_hi");
  if (!on_table) s.x[MODE] = 2.0;
}

// Writes every family quantity, in table order, into `q`.
void quantities(const EnvProfile& prof, const EnvState& s, double* q) {
  const auto& x = s.x;
  auto put = [&q](std::initializer_list<double> v) {
    for (double d : v) *q++ = d;
  };
  auto put_action = [&] {
    for (double d : s.action) *q++ = d;
  };
  switch (prof.dynamics) {
  case Dynamics::PointMass:
    put({x[pm::P], x[pm::P + 1], x[pm::P + 2]});
    put({x[pm::V], x[pm::V + 1], x[pm::V + 2]});
    put({1.0, 0.0, 0.0, 0.0});
    put({0.0, 0.0, 0.0, 0.0});
    put({0.0, 0.0, 0.0});
    put({x[pm::TARGET], x[pm::TARGET + 1], x[pm::TARGET + 2]});
    put({x[pm::TVEL], x[pm::TVEL + 1], x[pm::TVEL + 2]});
    put_action();
    put({x[pm::TARGET] - x[pm::P], x[pm::TARGET + 1] - x[pm::P + 1], x[pm::TARGET + 2] - x[pm::P + 2]});
    put({x[pm::TVEL] - x[pm::V], x[pm::TVEL + 1] - x[pm::V + 1], x[pm::TVEL + 2] - x[pm::V + 2]});
    break;
  case Dynamics::Locomotor: {
    using namespace loco;
    put({x[P], x[P + 1], x[P + 2]});
    put({std::cos(x[YAW] / 2.0), 0.0, 0.0, std::sin(x[YAW] / 2.0)});
    put({x[V], x[V + 1], x[VZ]});
    put({0.0, 0.0, x[YAW_RATE]});
    put({x[TARGET], x[TARGET + 1], x[TARGET + 2]});
    put({x[TVEL], x[TVEL + 1], x[TVEL + 2]});
    put_action();
    put({x[TARGET] - x[P], x[TARGET + 1] - x[P + 1], x[TARGET + 2] - x[P + 2]});
    put({x[TVEL] - x[V], x[TVEL + 1] - x[V + 1], x[TVEL + 2] - x[VZ]});
    break;
  }
  case Dynamics::BallTray: {
    using namespace tray;
    put({x[BP], x[BP + 1], x[BP + 2]});
    put({x[BV], x[BV + 1], x[BV + 2]});
    put({x[TP], x[TP + 1], x[TP + 2]});
    // rotation about y by tilt[0], then about x by -tilt[1]
    const double c1 = std::cos(x[TILT] / 2.0), s1 = std::sin(x[TILT] / 2.0);
    const double c2 = std::cos(-x[TILT + 1] / 2.0), s2 = std::sin(-x[TILT + 1] / 2.0);
    put({c1 * c2, c1 * s2, c2 * s1, -s1 * s2});
    put({1.0, 0.0, 0.0, 0.0});
    put_action();
    put({x[BP] - x[TP], x[BP + 1] - x[TP + 1], x[BP + 2] - x[TP + 2]});
    break;
  }
  case Dynamics::BallPush: {
    using namespace push;
    put({x[GP], x[GP + 1], x[GP + 2]});
    put({x[BP], x[BP + 1], x[BP + 2]});
    put({x[BV], x[BV + 1], x[BV + 2]});
    put({x[HOLE], x[HOLE + 1], x[HOLE + 2]});
    put({x[INIT], x[INIT + 1], x[INIT + 2]});
    put_action();
    put({x[BP] - x[GP], x[BP + 1] - x[GP + 1], x[BP + 2] - x[GP + 2]});
    put({x[HOLE] - x[BP], x[HOLE + 1] - x[BP + 1], x[HOLE + 2] - x[BP + 2]});
    break;
  }
  }
}

} // namespace

std::string_view dynamics_name(Dynamics d) {
  switch (d) {
  case Dynamics::PointMass: return "point_mass";
  case Dynamics::Locomotor: return "locomotor";
  case Dynamics::BallTray: return "ball_tray";
  case Dynamics::BallPush: return "ball_push";
  }
  return "?";
}

const std::vector<std::pair<std::string, std::size_t>>& env_quantities(Dynamics d) { return family(d).quantities; }

double EnvProfile::param(const std::string& key) const {
  if (auto it = params.find(key); it != params.end()) return it->second;
  const auto& defaults = family(dynamics).params;
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw Error("invalid_profile", "unknown parameter '" + key + "'");
}

void EnvProfile::finalize() {
  if (!(dt > 0.0)) profile_error(env_id + ": dt must be positive");
  if (horizon_steps == 0) profile_error(env_id + ": horizon must be at least one step");
  if (!schema) profile_error(env_id + ": missing signal schema");
  const auto& fam = family(dynamics);
  for (const auto& [k, v] : params) {
    if (!fam.params.contains(k)) profile_error(env_id + ": unknown parameter '" + k + "'");
  }
  for (const auto& [k, ranges] : init) {
    auto it = std::find_if(fam.init_defaults.begin(), fam.init_defaults.end(),
                           [&](const auto& e) { return e.first == k; });
    if (it == fam.init_defaults.end()) profile_error(env_id + ": unknown init entry '" + k + "'");
    if (ranges.size() != it->second.size()) profile_error(env_id + ": init '" + k + "' has the wrong dimension");
    for (const auto& r : ranges) {
      if (r.lo > r.hi) profile_error(env_id + ": init '" + k + "' has lo > hi");
    }
  }

  std::size_t action_q = 0;
  for (const auto& [name, dim] : fam.quantities) {
    if (name == "action") action_q = dim;
  }
  if (action_bounds.size() != action_q) {
    profile_error(env_id + ": expected " + std::to_string(action_q) + " action bounds");
  }
  for (const auto& b : action_bounds) {
    if (!(b.lo < b.hi)) profile_error(env_id + ": empty action bound");
  }
  if (schema->action_signal().empty() || schema->action_dim() != action_q) {
    profile_error(env_id + ": action signal must have dimension " + std::to_string(action_q));
  }

  plan_.clear();
  for (std::size_t i = 0; i < schema->size(); ++i) {
    const auto& spec = schema->at(i);
    std::size_t src = 0;
    bool found = false;
    for (const auto& [name, dim] : fam.quantities) {
      if (name == spec.quantity) {
        if (dim != spec.dim) {
          profile_error(env_id + ": signal '" + spec.name + "' has dimension " + std::to_string(spec.dim) +
                        " but quantity '" + name + "' has " + std::to_string(dim));
        }
        found = true;
        break;
      }
      src += dim;
    }
    if (!found) profile_error(env_id + ": signal '" + spec.name + "' maps to unknown quantity '" + spec.quantity + "'");
    plan_.push_back({src, schema->offset(i), spec.dim});
  }

  feature_plan_.clear();
  feature_dim_ = 0;
  for (const auto& f : features) {
    auto idx = schema->index_of(f.signal);
    if (!idx) profile_error(env_id + ": feature signal '" + f.signal + "' is not declared");
    const auto dim = schema->at(*idx).dim;
    if (f.offset.size() != dim || f.scale.size() != dim) {
      profile_error(env_id + ": feature '" + f.signal + "' needs " + std::to_string(dim) + " offsets and scales");
    }
    for (double sc : f.scale) {
      if (!(sc > 0.0)) profile_error(env_id + ": feature scales must be positive");
    }
    feature_plan_.push_back({schema->offset(*idx), feature_dim_, dim});
    feature_dim_ += dim;
  }
}

EnvProfile parse_env_profile(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    profile_error(std::string("malformed profile: ") + e.what());
  }
  try {
    EnvProfile p;
    p.env_id = j.at("env_id").get<std::string>();
    const auto dyn = j.at("dynamics").get<std::string>();
    bool known = false;
    for (auto d : {Dynamics::PointMass, Dynamics::Locomotor, Dynamics::BallTray, Dynamics::BallPush}) {
      if (dynamics_name(d) == dyn) {
        p.dynamics = d;
        known = true;
      }
    }
    if (!known) profile_error("unknown dynamics '" + dyn + "'");
    p.dt = j.at("dt").get<double>();
    p.horizon_steps = j.at("horizon_steps").get<std::size_t>();

    std::vector<SignalSpec> signals;
    for (const auto& s : j.at("signals")) {
      SignalSpec spec;
      spec.name = s.at("name").get<std::string>();
      spec.dim = s.at("dim").get<std::size_t>();
      spec.quantity = s.value("quantity", spec.name);
      spec.note = s.value("note", "");
      spec.listed = s.value("listed", true);
      signals.push_back(std::move(spec));
    }
    p.schema = std::make_shared<SignalSchema>(std::move(signals), j.at("action_signal").get<std::string>());

    for (const auto& b : j.at("action_bounds")) p.action_bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    if (j.contains("params")) {
      for (const auto& [k, v] : j["params"].items()) p.params[k] = v.get<double>();
    }
    if (j.contains("init")) {
      for (const auto& [k, v] : j["init"].items()) {
        std::vector<Range> ranges;
        for (const auto& r : v) {
          if (r.is_number()) {
            ranges.push_back({r.get<double>(), r.get<double>()});
          } else {
            ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
          }
        }
        p.init[k] = std::move(ranges);
      }
    }
    if (j.contains("features")) {
      for (const auto& f : j["features"]) {
        p.features.push_back({f.at("signal").get<std::string>(), f.at("offset").get<std::vector<double>>(),
                              f.at("scale").get<std::vector<double>>()});
      }
    }
    p.finalize();
    return p;
  } catch (const json::exception& e) {
    profile_error(std::string("malformed profile: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == "invalid_profile") throw;
    throw Error("invalid_profile", e.what());
  }
}

EnvProfile load_env_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_env_profile(ss.str());
}

EnvState reset(const EnvProfile& profile, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EnvState s;
  s.seed = seed;
  s.action.assign(profile.action_dim(), 0.0);
  std::map<std::string, std::vector<double>> v;
  for (const auto& [key, def] : family(profile.dynamics).init_defaults) {
    auto it = profile.init.find(key);
    std::vector<double> out(def.size());
    for (std::size_t i = 0; i < def.size(); ++i) {
      const double u = uniform01(rng);
      out[i] = it == profile.init.end() ? def[i] : it->second[i].lo + (it->second[i].hi - it->second[i].lo) * u;
    }
    v[key] = std::move(out);
  }
  auto load = [&s](std::size_t at, const std::vector<double>& src) { std::copy(src.begin(), src.end(), s.x.begin() + at); };
  switch (profile.dynamics) {
  case Dynamics::PointMass:
    load(pm::P, v["start_pos"]);
    load(pm::TARGET, v["target_pos"]);
    load(pm::TVEL, v["target_vel"]);
    break;
  case Dynamics::Locomotor:
    load(loco::P, v["start_pos"]);
    load(loco::TARGET, v["target_pos"]);
    load(loco::TVEL, v["target_vel"]);
    break;
  case Dynamics::BallTray:
    load(tray::TP, v["tray_pos"]);
    load(tray::BP, v["ball_pos"]);
    load(tray::BV, v["ball_vel"]);
    break;
  case Dynamics::BallPush:
    load(push::GP, v["gripper_pos"]);
    load(push::BP, v["ball_pos"]);
    load(push::INIT, v["ball_pos"]);
    load(push::HOLE, v["hole_pos"]);
    break;
  }
  return s;
}

void step_in_place(const EnvProfile& profile, EnvState& state, std::span<const double> action) {
  if (state.terminated) throw Error("terminated", "step called on a terminated episode");
  if (action.size() != profile.action_dim()) {
    throw Error("dimension_mismatch", "action has " + std::to_string(action.size()) + " components, expected " +
                                          std::to_string(profile.action_dim()));
  }
  for (std::size_t i = 0; i < action.size(); ++i) {
    const auto& b = profile.action_bounds[i];
    state.action[i] = std::isnan(action[i]) ? 0.0 : clamp(action[i], b.lo, b.hi);
  }
  const double* a = state.action.data();
  switch (profile.dynamics) {
  case Dynamics::PointMass: step_point_mass(profile, state, a); break;
  case Dynamics::Locomotor: step_locomotor(profile, state, a); break;
  case Dynamics::BallTray: step_ball_tray(profile, state, a); break;
  case Dynamics::BallPush: step_ball_push(profile, state, a); break;
  }
  ++state.steps;
  if (state.failed || state.steps >= profile.horizon_steps) state.terminated = true;
}

EnvState step(const EnvProfile& profile, EnvState state, std::span<const double> action) {
  step_in_place(profile, state, action);
  return state;
}

void observe_row(const EnvProfile& profile, const EnvState& state, double* row) {
  double q[64];
  quantities(profile, state, q);
  for (const auto& c : profile.observe_plan()) std::copy_n(q + c.src, c.len, row + c.dst);
}

Bindings observe(const EnvProfile& profile, const EnvState& state) {
  std::vector<double> row(profile.schema->row_size());
  observe_row(profile, state, row.data());
  return profile.schema->to_bindings(row.data());
}

} // namespace rforge
