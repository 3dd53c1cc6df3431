#include "rforge/policy.hpp"

#include "rforge/convergence.hpp"
#include "rforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace rforge {

using nlohmann::json;

Policy zero_policy(const EnvProfile& profile) {
  Policy p;
  p.env_id = profile.env_id;
  p.feature_dim = profile.feature_dim();
  p.action_dim = profile.action_dim();
  p.theta.assign(p.param_count(), 0.0);
  return p;
}

void features(const EnvProfile& profile, const double* row, double* out) {
  const auto& plan = profile.feature_plan();
  for (std::size_t j = 0; j < plan.size(); ++j) {
    const auto& f = profile.features[j];
    for (std::size_t i = 0; i < plan[j].len; ++i) {
      out[plan[j].dst + i] = (row[plan[j].src + i] - f.offset[i]) / f.scale[i];
    }
  }
}

namespace {

void check_fit(const EnvProfile& profile, const Policy& policy) {
  if (policy.feature_dim != profile.feature_dim() || policy.action_dim != profile.action_dim() ||
      policy.theta.size() != policy.param_count()) {
    throw Error("dimension_mismatch", "policy does not fit profile '" + profile.env_id + "'");
  }
}

void act_unchecked(const EnvProfile& profile, const double* theta, std::size_t fdim, const double* row, double* feat,
                   double* action) {
  features(profile, row, feat);
  for (std::size_t i = 0; i < profile.action_dim(); ++i) {
    const double* w = theta + i * (fdim + 1);
    double a = w[fdim];
    for (std::size_t k = 0; k < fdim; ++k) a += w[k] * feat[k];
    const auto& b = profile.action_bounds[i];
    action[i] = std::clamp(a, b.lo, b.hi);
  }
}

EvalError at_step(const EvalError& e, std::size_t step) {
  return EvalError(e.code(), "step " + std::to_string(step) + ": " + e.what(), e.binding());
}

struct Episode {
  double discounted = 0.0;
  double undiscounted = 0.0;
  std::size_t steps = 0;
};

// Rollout without recording: the training inner loop.
Episode run_episode(const EnvProfile& profile, const double* theta, const CompiledReward& reward, double gamma,
                    std::uint64_t seed) {
  const std::size_t fdim = profile.feature_dim();
  std::vector<double> row(profile.schema->row_size());
  std::vector<double> feat(fdim);
  std::vector<double> action(profile.action_dim());
  EnvState s = reset(profile, seed);
  observe_row(profile, s, row.data());
  Episode ep;
  double discount = 1.0;
  while (!s.terminated) {
    act_unchecked(profile, theta, fdim, row.data(), feat.data(), action.data());
    step_in_place(profile, s, action);
    observe_row(profile, s, row.data());
    ++ep.steps;
    double r = 0.0;
    try {
      r = reward(row.data());
    } catch (const EvalError& e) {
      throw at_step(e, ep.steps);
    }
    ep.discounted += discount * r;
    ep.undiscounted += r;
    discount *= gamma;
  }
  return ep;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  t = static_cast<unsigned>(std::min<std::size_t>(t, n));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += t) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (t <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

} // namespace

void act(const EnvProfile& profile, const Policy& policy, const double* row, double* action) {
  check_fit(profile, policy);
  std::vector<double> feat(policy.feature_dim);
  act_unchecked(profile, policy.theta.data(), policy.feature_dim, row, feat.data(), action);
}

std::string policy_to_json(const Policy& policy) {
  json j;
  j["structure"] = "affine";
  j["env_id"] = policy.env_id;
  j["feature_dim"] = policy.feature_dim;
  j["action_dim"] = policy.action_dim;
  j["theta"] = policy.theta;
  return j.dump(2) + "\n";
}

Policy policy_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("structure").get<std::string>() != "affine") throw Error("invalid_policy", "unsupported policy structure");
    Policy p;
    p.env_id = j.at("env_id").get<std::string>();
    p.feature_dim = j.at("feature_dim").get<std::size_t>();
    p.action_dim = j.at("action_dim").get<std::size_t>();
    p.theta = j.at("theta").get<std::vector<double>>();
    if (p.theta.size() != p.param_count()) throw Error("invalid_policy", "theta has the wrong length");
    return p;
  } catch (const json::exception& e) {
    throw Error("invalid_policy", e.what());
  }
}

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << policy_to_json(policy);
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

Trajectory rollout(const EnvProfile& profile, const Policy& policy, std::uint64_t seed) {
  check_fit(profile, policy);
  Trajectory traj(profile.schema);
  traj.reserve(profile.horizon_steps + 1);
  std::vector<double> row(profile.schema->row_size());
  std::vector<double> feat(policy.feature_dim);
  std::vector<double> action(policy.action_dim);
  EnvState s = reset(profile, seed);
  observe_row(profile, s, row.data());
  traj.append(0.0, row);
  while (!s.terminated) {
    act_unchecked(profile, policy.theta.data(), policy.feature_dim, row.data(), feat.data(), action.data());
    step_in_place(profile, s, action);
    observe_row(profile, s, row.data());
    traj.append(profile.dt * static_cast<double>(s.steps), row);
  }
  traj.set_terminated(s.failed);
  return traj;
}

double discounted_return(const Trajectory& traj, const CompiledReward& reward, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("invalid_config", "gamma must lie in (0, 1]");
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    try {
      total += discount * reward(traj.row(k));
    } catch (const EvalError& e) {
      throw at_step(e, k);
    }
    discount *= gamma;
  }
  return total;
}

double discounted_return(const Trajectory& traj, const RewardProgram& program, double gamma) {
  return discounted_return(traj, CompiledReward(program, traj.schema()), gamma);
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error("invalid_config", m); };
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (elites < 1) fail("at least one elite is required");
  if (population < 2 * elites) fail("population must be at least twice the elite count");
  if (iterations < 1) fail("at least one iteration is required");
  if (rollouts_per_candidate < 1) fail("at least one rollout per candidate is required");
  if (!(init_noise >= 0.0) || !(final_noise >= 0.0)) fail("noise levels must be non-negative");
  if (convergence_window < 2) fail("convergence window must be at least 2");
}

std::vector<std::size_t> select_elites(std::span<const double> returns, std::size_t k) {
  std::vector<std::size_t> idx(returns.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return returns[a] > returns[b] || (returns[a] == returns[b] && a < b); });
  idx.resize(k);
  return idx;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finaliser over a mixed key
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream * 0x100000001B3ULL + index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainResult train(const EnvProfile& profile, const RewardProgram& program, const TrainConfig& cfg) {
  cfg.validate();
  const CompiledReward reward(program, *profile.schema);
  const Policy shape = zero_policy(profile);
  const std::size_t dim = shape.param_count();
  const std::size_t pop = cfg.population;
  const std::size_t R = cfg.rollouts_per_candidate;

  std::mt19937_64 rng(derive_seed(cfg.seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::uint64_t> env_seeds(R);
  for (std::size_t r = 0; r < R; ++r) env_seeds[r] = derive_seed(cfg.seed, 2, r);

  std::vector<double> mean(dim, 0.0);
  std::vector<double> stddev(dim, cfg.init_noise);
  std::vector<double> cand(pop * dim);
  std::vector<double> returns(pop);
  std::vector<Episode> episodes(pop * R);

  TrainResult result;
  auto& summary = result.summary;
  result.policy = shape;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> steps_through;
  double reward_sum = 0.0;
  std::size_t episode_count = 0;

  // Slots [0, kept) hold the previous elites with their known returns;
  // rollouts are deterministic for fixed env seeds.
  std::size_t kept = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t j = kept; j < pop; ++j) {
      for (std::size_t d = 0; d < dim; ++d) cand[j * dim + d] = mean[d] + stddev[d] * normal(rng);
    }
    parallel_for((pop - kept) * R, cfg.threads, [&](std::size_t task) {
      const std::size_t j = kept + task / R;
      episodes[j * R + task % R] = run_episode(profile, &cand[j * dim], reward, cfg.gamma, env_seeds[task % R]);
    });

    for (std::size_t j = kept; j < pop; ++j) {
      double sum = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const auto& ep = episodes[j * R + r];
        sum += ep.discounted;
        reward_sum += ep.undiscounted;
        summary.total_steps += ep.steps;
        summary.avg_episode_length += static_cast<double>(ep.steps);
        ++episode_count;
      }
      returns[j] = sum / static_cast<double>(R);
      if (returns[j] > best) {
        best = returns[j];
        result.policy.theta.assign(cand.begin() + static_cast<std::ptrdiff_t>(j * dim),
                                   cand.begin() + static_cast<std::ptrdiff_t>((j + 1) * dim));
      }
    }
    steps_through.push_back(summary.total_steps);

    const auto elite = select_elites(returns, cfg.elites);
    const double k = static_cast<double>(elite.size());
    summary.mean_return.push_back(std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(pop));
    summary.max_return.push_back(returns[elite.front()]);
    double em = 0.0;
    for (auto e : elite) em += returns[e];
    summary.elite_mean.push_back(em / k);

    const double frac = cfg.iterations > 1 ? static_cast<double>(it) / static_cast<double>(cfg.iterations - 1) : 1.0;
    const double floor = cfg.init_noise + (cfg.final_noise - cfg.init_noise) * frac;
    for (std::size_t d = 0; d < dim; ++d) {
      double m = 0.0;
      for (auto e : elite) m += cand[e * dim + d];
      m /= k;
      double var = 0.0;
      for (auto e : elite) var += (cand[e * dim + d] - m) * (cand[e * dim + d] - m);
      mean[d] = m;
      stddev[d] = std::sqrt(var / k) + floor;
    }
    std::vector<double> carried(elite.size() * dim);
    std::vector<double> carried_returns(elite.size());
    for (std::size_t i = 0; i < elite.size(); ++i) {
      std::copy_n(cand.begin() + static_cast<std::ptrdiff_t>(elite[i] * dim), dim,
                  carried.begin() + static_cast<std::ptrdiff_t>(i * dim));
      carried_returns[i] = returns[elite[i]];
    }
    std::copy(carried.begin(), carried.end(), cand.begin());
    std::copy(carried_returns.begin(), carried_returns.end(), returns.begin());
    kept = elite.size();
  }

  summary.avg_episode_reward = reward_sum / static_cast<double>(episode_count);
  summary.avg_episode_length /= static_cast<double>(episode_count);
  if (auto c = detect_convergence(summary.mean_return, cfg.convergence_window, cfg.convergence_tol)) {
    summary.converged_at_step = steps_through[*c];
  }
  return result;
}

} // namespace rforge
