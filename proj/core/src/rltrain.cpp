// Copyright 2026 The sadp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sadp/rltrain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sadp/errors.hpp"
#include "sadp/io.hpp"
#include "sadp/stats.hpp"

namespace sadp {

RlPolicy RlPolicy::init(std::uint64_t seed, int hidden) {
  Rng rng(derive_seed(seed, 0x911c7ull));
  RlPolicy p;
  p.cell = LstmCell::init(kInputDim, hidden, rng);
  p.head = SoftmaxHead::init(hidden, kNumSysActions, rng);
  return p;
}

Vec RlPolicy::featurize(const std::array<bool, kNumSimSlots>& filled,
                        const std::optional<SysAction>& last_action) {
  Vec x(kInputDim, 0.0);
  for (int s = 0; s < kNumSimSlots; ++s) x[s] = filled[s] ? 1.0 : 0.0;
  const int one_hot =
      last_action ? static_cast<int>(*last_action) : kNumSysActions;
  x[kNumSimSlots + one_hot] = 1.0;
  return x;
}

void RlPolicy::save(const std::string& path) const {
  nlohmann::json j;
  j["kind"] = "rl-policy";
  j["version"] = 1;
  j["input"] = cell.input_size;
  j["hidden"] = cell.hidden_size;
  j["actions"] = static_cast<int>(head.b.size());
  j["wx"] = cell.wx.a;
  j["wh"] = cell.wh.a;
  j["b"] = cell.b;
  j["head_w"] = head.w.a;
  j["head_b"] = head.b;
  write_file(path, j.dump());
}

RlPolicy RlPolicy::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse policy file " + path + ": " + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != "rl-policy") {
    throw DataError("not an rl policy file: " + path);
  }
  if (j.value("version", 0) != 1) {
    throw DataError("unsupported rl policy version in " + path);
  }
  RlPolicy p;
  const int input = j.at("input").get<int>();
  const int hidden = j.at("hidden").get<int>();
  const int actions = j.at("actions").get<int>();
  if (input != RlPolicy::kInputDim || actions != kNumSysActions) {
    throw DataError("policy file has incompatible dimensions: " + path);
  }
  p.cell.input_size = input;
  p.cell.hidden_size = hidden;
  p.cell.wx = Mat(4 * hidden, input);
  p.cell.wh = Mat(4 * hidden, hidden);
  p.cell.wx.a = j.at("wx").get<std::vector<double>>();
  p.cell.wh.a = j.at("wh").get<std::vector<double>>();
  p.cell.b = j.at("b").get<std::vector<double>>();
  p.head.w = Mat(actions, hidden);
  p.head.w.a = j.at("head_w").get<std::vector<double>>();
  p.head.b = j.at("head_b").get<std::vector<double>>();
  if (p.cell.wx.a.size() != static_cast<std::size_t>(4 * hidden * input) ||
      p.cell.wh.a.size() != static_cast<std::size_t>(4 * hidden * hidden) ||
      p.cell.b.size() != static_cast<std::size_t>(4 * hidden) ||
      p.head.w.a.size() != static_cast<std::size_t>(actions * hidden) ||
      p.head.b.size() != static_cast<std::size_t>(actions)) {
    throw DataError("policy file tensor sizes are inconsistent: " + path);
  }
  return p;
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const TrajectoryStep& s : steps) sum += s.reward;
  return sum;
}

Vec discounted_returns(std::span<const double> rewards, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("discounted_returns: gamma must be in (0, 1]");
  }
  Vec returns(rewards.size(), 0.0);
  double acc = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * acc;
    returns[t] = acc;
  }
  return returns;
}

int epsilon_greedy(const Vec& dist, const std::vector<bool>& mask, double epsilon,
                   Rng& rng) {
  if (dist.size() != mask.size()) {
    throw ConfigError("epsilon_greedy: mask size mismatch");
  }
  std::vector<int> allowed;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a]) allowed.push_back(static_cast<int>(a));
  }
  if (allowed.empty()) throw std::logic_error("epsilon_greedy: empty mask");
  if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
    return allowed[rng.index(allowed.size())];
  }
  int best = allowed[0];
  for (int a : allowed) {
    if (dist[a] > dist[best]) best = a;
  }
  return best;
}

namespace {

int sample_from_dist(const Vec& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    acc += probs[a];
    last_positive = static_cast<int>(a);
    if (u < acc) return last_positive;
  }
  return last_positive;  // guards against rounding at acc ~ 1
}

}  // namespace

Trajectory rollout(const SimEnv& env, const RlPolicy& policy, std::uint64_t env_seed,
                   double epsilon, std::uint64_t explore_seed, SeqCache* cache_out,
                   ActionSelection selection) {
  Trajectory traj;
  auto [state, goal] = env.reset(env_seed);
  Rng explore(derive_seed(explore_seed, 0xe691ull));

  const int H = policy.cell.hidden_size;
  Vec h(H, 0.0), c(H, 0.0);
  std::optional<SysAction> last_action;
  if (cache_out) *cache_out = SeqCache{};

  bool done = false;
  while (!done) {
    TrajectoryStep step;
    step.input = RlPolicy::featurize(state.filled, last_action);
    step.mask = env.mask(state, goal);

    LstmStepCache step_cache;
    Vec h_next, c_next;
    lstm_step(policy.cell, h, c, step.input, h_next, c_next, &step_cache);
    h = std::move(h_next);
    c = std::move(c_next);
    const Vec logits = head_logits(policy.head, h);
    const Vec probs = masked_softmax(logits, step.mask);

    step.action = selection == ActionSelection::SamplePolicy
                      ? sample_from_dist(probs, explore)
                      : epsilon_greedy(probs, step.mask, epsilon, explore);
    step.log_prob = std::log(std::max(probs[step.action], 1e-300));

    if (cache_out) {
      cache_out->steps.push_back(std::move(step_cache));
      cache_out->logits.push_back(logits);
      cache_out->probs.push_back(probs);
    }

    const StepOutcome outcome =
        env.step(state, goal, static_cast<SysAction>(step.action));
    step.reward = outcome.reward;
    step.outcome = outcome;
    last_action = static_cast<SysAction>(step.action);
    done = outcome.done;
    traj.success = outcome.result == StepResult::Success;
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

void ReturnBaseline::observe(std::span<const double> returns) {
  if (returns.size() > values_.size()) {
    values_.resize(returns.size(), 0.0);
    seen_.resize(returns.size(), false);
  }
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (!seen_[t]) {
      values_[t] = returns[t];
      seen_[t] = true;
    } else {
      values_[t] = decay_ * values_[t] + (1.0 - decay_) * returns[t];
    }
  }
}

double ReturnBaseline::at(std::size_t turn) const {
  if (values_.empty()) return 0.0;
  if (turn < values_.size() && seen_[turn]) return values_[turn];
  return values_.back();
}

void reinforce_update(RlPolicy& policy, const Trajectory& trajectory,
                      const SeqCache& cache, double gamma, AdaDelta& optimizer,
                      double clip_norm, const ReturnBaseline* baseline) {
  if (trajectory.steps.empty()) {
    throw ConfigError("reinforce_update: empty trajectory");
  }
  Vec rewards(trajectory.steps.size());
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    rewards[t] = trajectory.steps[t].reward;
  }
  Vec advantages = discounted_returns(rewards, gamma);
  if (baseline) {
    for (std::size_t t = 0; t < advantages.size(); ++t) {
      advantages[t] -= baseline->at(t);
    }
  }

  // d(-J)/dlogit_j = A_t (p_j - 1[j = a_t]), restricted to allowed actions.
  std::vector<Vec> dlogits(trajectory.steps.size());
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    const TrajectoryStep& step = trajectory.steps[t];
    const Vec& probs = cache.probs[t];
    const double advantage = advantages[t];
    Vec d(probs.size(), 0.0);
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (step.mask[j]) d[j] = advantage * probs[j];
    }
    d[step.action] -= advantage;
    dlogits[t] = std::move(d);
  }

  ModelGrads grads = backward_sequence(policy.cell, policy.head, cache, dlogits);
  std::vector<std::span<double>> grad_views = {
      std::span<double>(grads.d_wx.a), std::span<double>(grads.d_wh.a),
      std::span<double>(grads.d_b), std::span<double>(grads.d_head_w.a),
      std::span<double>(grads.d_head_b)};
  clip_global_norm(grad_views, clip_norm);
  optimizer.step(param_refs(policy.cell, policy.head), grad_refs(grads));
}

EvalResult evaluate_policy(const SimEnv& env, const RlPolicy& policy, int n_dialogs,
                           std::uint64_t seed) {
  EvalResult result;
  long successes = 0;
  long turns = 0;
  for (int d = 0; d < n_dialogs; ++d) {
    const Trajectory traj =
        rollout(env, policy, derive_seed(seed, d), 0.0, derive_seed(seed, d) ^ 1,
                nullptr, ActionSelection::SamplePolicy);
    successes += traj.success ? 1 : 0;
    turns += traj.length();
  }
  result.success_rate = static_cast<double>(successes) / n_dialogs;
  result.mean_length = static_cast<double>(turns) / n_dialogs;
  return result;
}

double EpsilonSchedule::at(int dialog) const {
  if (decay_dialogs <= 0 || dialog >= decay_dialogs) return end;
  const double frac = static_cast<double>(dialog) / decay_dialogs;
  return start + (end - start) * frac;
}

void RlTrainConfig::validate() const {
  if (total_dialogs < 0) throw ConfigError("rl config: total_dialogs must be >= 0");
  if (eval_every < 1) throw ConfigError("rl config: eval_every must be >= 1");
  if (eval_dialogs < 1) throw ConfigError("rl config: eval_dialogs must be >= 1");
  if (repeats < 1) throw ConfigError("rl config: repeats must be >= 1");
  if (hidden < 1) throw ConfigError("rl config: hidden must be >= 1");
}

namespace {

std::vector<Checkpoint> train_one_repeat(const SimEnv& env, const RlTrainConfig& cfg,
                                         int repeat) {
  const std::uint64_t base = derive_seed(cfg.master_seed, 0x9e9ea7ull, repeat);
  RlPolicy policy = RlPolicy::init(derive_seed(base, 0x171ull), cfg.hidden);
  AdaDelta optimizer;

  std::vector<Checkpoint> checkpoints;
  auto run_eval = [&](int dialogs_done, int checkpoint_index) {
    const EvalResult r = evaluate_policy(
        env, policy, cfg.eval_dialogs,
        derive_seed(base, 0xe7a1ull, checkpoint_index));
    checkpoints.push_back({dialogs_done, r.success_rate, r.mean_length});
  };

  run_eval(0, 0);
  SeqCache cache;
  ReturnBaseline baseline(0.95);
  for (int d = 1; d <= cfg.total_dialogs; ++d) {
    const double eps = cfg.epsilon.at(d - 1);
    const Trajectory traj = rollout(env, policy, derive_seed(base, 0x7a11ull, d),
                                    eps, derive_seed(base, 0xe91ull, d), &cache);
    const ReturnBaseline* b = nullptr;
    if (cfg.use_return_baseline) {
      Vec rewards(traj.steps.size());
      for (std::size_t t = 0; t < traj.steps.size(); ++t) rewards[t] = traj.steps[t].reward;
      baseline.observe(discounted_returns(rewards, env.reward_config().discount));
      b = &baseline;
    }
    reinforce_update(policy, traj, cache, env.reward_config().discount, optimizer,
                     cfg.clip_norm, b);
    if (d % cfg.eval_every == 0) run_eval(d, d / cfg.eval_every);
  }
  return checkpoints;
}

}  // namespace

TrainReport train_rl(const SimEnv& env, const RlTrainConfig& config) {
  config.validate();
  TrainReport report;
  report.variant = env.reward_config().variant;
  report.config = config;
  report.repeats.resize(config.repeats);

  int n_threads = config.n_threads > 0
                      ? config.n_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, config.repeats));

  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= config.repeats) break;
      report.repeats[r] = train_one_repeat(env, config, r);
    }
  };
  for (int w = 0; w < n_threads; ++w) workers.emplace_back(worker);
  for (std::thread& t : workers) t.join();
  return report;
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out << "repeat,dialogs,success_rate,mean_length,reward_variant\n";
  for (std::size_t r = 0; r < repeats.size(); ++r) {
    for (const Checkpoint& c : repeats[r]) {
      out << r << "," << c.dialogs << "," << fmt_double(c.success_rate) << ","
          << fmt_double(c.mean_length) << "," << reward_variant_name(variant) << "\n";
    }
  }
  return out.str();
}

std::vector<double> TrainReport::per_repeat_convergent(int after_dialogs) const {
  std::vector<double> values;
  for (const auto& reps : repeats) {
    double sum = 0.0;
    int n = 0;
    for (const Checkpoint& c : reps) {
      if (c.dialogs > after_dialogs) {
        sum += c.success_rate;
        ++n;
      }
    }
    if (n == 0) {
      throw ConfigError("convergent_success: no checkpoints beyond " +
                        std::to_string(after_dialogs) + " dialogs");
    }
    values.push_back(sum / n);
  }
  return values;
}

double TrainReport::convergent_success(int after_dialogs) const {
  const std::vector<double> v = per_repeat_convergent(after_dialogs);
  return mean(v);
}

std::vector<double> TrainReport::per_repeat_success_near(int dialogs) const {
  std::vector<double> values;
  for (const auto& reps : repeats) {
    if (reps.empty()) throw ConfigError("success_near: empty repeat");
    const Checkpoint* best = &reps[0];
    for (const Checkpoint& c : reps) {
      if (std::abs(c.dialogs - dialogs) < std::abs(best->dialogs - dialogs)) {
        best = &c;
      }
    }
    values.push_back(best->success_rate);
  }
  return values;
}

double TrainReport::success_near(int dialogs) const {
  const std::vector<double> v = per_repeat_success_near(dialogs);
  return mean(v);
}

std::vector<double> TrainReport::per_repeat_final_length() const {
  std::vector<double> values;
  for (const auto& reps : repeats) {
    if (reps.empty()) throw ConfigError("final_mean_length: empty repeat");
    values.push_back(reps.back().mean_length);
  }
  return values;
}

double TrainReport::final_mean_length() const {
  const std::vector<double> v = per_repeat_final_length();
  return mean(v);
}

}  // namespace sadp
