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

#ifndef SADP_RLTRAIN_HPP
#define SADP_RLTRAIN_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sadp/nn.hpp"
#include "sadp/simenv.hpp"

namespace sadp {

// Policy over the five environment actions. Inputs are the three
// slot-presence bits plus a one-hot of the last system action (with a sixth
// "none" slot for the first turn): nine dimensions.
struct RlPolicy {
  LstmCell cell;
  SoftmaxHead head;

  static constexpr int kInputDim = kNumSimSlots + kNumSysActions + 1;

  static RlPolicy init(std::uint64_t seed, int hidden = 32);
  static Vec featurize(const std::array<bool, kNumSimSlots>& filled,
                       const std::optional<SysAction>& last_action);

  void save(const std::string& path) const;
  static RlPolicy load(const std::string& path);
};

struct TrajectoryStep {
  Vec input;
  std::vector<bool> mask;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  StepOutcome outcome;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  bool success = false;

  int length() const { return static_cast<int>(steps.size()); }
  double total_reward() const;
};

// G_t = sum_{k>=t} gamma^{k-t} r_k.
Vec discounted_returns(std::span<const double> rewards, double gamma);

// With probability epsilon a uniform draw over allowed actions, otherwise the
// argmax of the masked renormalized distribution (ties to the lowest id).
// Never returns a masked action.
int epsilon_greedy(const Vec& dist, const std::vector<bool>& mask, double epsilon,
                   Rng& rng);

enum class ActionSelection {
  // epsilon-greedy over the masked distribution; training behavior.
  EpsilonGreedy,
  // Sample from the frozen masked policy distribution itself; evaluation
  // behavior. A frozen policy is still a distribution over actions, so
  // executing it means sampling, and task success stays below one even
  // after convergence.
  SamplePolicy,
};

// Runs one dialog. The policy is const; the sequence cache needed for the
// update is returned through cache_out when non-null.
Trajectory rollout(const SimEnv& env, const RlPolicy& policy, std::uint64_t env_seed,
                   double epsilon, std::uint64_t explore_seed,
                   SeqCache* cache_out = nullptr,
                   ActionSelection selection = ActionSelection::EpsilonGreedy);

// Running mean of returns per turn index across dialogs, usable as the
// optional REINFORCE baseline. Comparing each return against the average at
// the same dialog depth removes the two degenerate attractors of this
// environment (terminate-immediately and never-terminate), both of which
// feed on absolute return levels.
class ReturnBaseline {
 public:
  explicit ReturnBaseline(double decay = 0.99) : decay_(decay) {}
  void observe(std::span<const double> returns);
  double at(std::size_t turn) const;

 private:
  double decay_;
  std::vector<double> values_;
  std::vector<bool> seen_;
};

// One REINFORCE step on the completed dialog: descends the negated
// sum_t log pi(a_t|s_t) A_t via the supplied optimizer, where A_t = G_t
// minus the baseline at turn t (plain REINFORCE when baseline is null).
// clip_norm <= 0 disables gradient clipping.
void reinforce_update(RlPolicy& policy, const Trajectory& trajectory,
                      const SeqCache& cache, double gamma, AdaDelta& optimizer,
                      double clip_norm = 5.0,
                      const ReturnBaseline* baseline = nullptr);

struct EvalResult {
  double success_rate = 0.0;
  double mean_length = 0.0;
};

// Frozen-policy evaluation: the parameters are fixed, no exploration noise
// is added, and actions are drawn from the policy's own masked distribution
// over fresh seeded dialogs. Never mutates the policy.
EvalResult evaluate_policy(const SimEnv& env, const RlPolicy& policy, int n_dialogs,
                           std::uint64_t seed);

struct EpsilonSchedule {
  double start = 0.5;
  double end = 0.05;
  int decay_dialogs = 2000;

  double at(int dialog) const;
};

struct RlTrainConfig {
  int total_dialogs = 15000;
  int eval_every = 200;  // updates per checkpoint (= dialogs, one update each)
  int eval_dialogs = 500;
  int repeats = 20;
  std::uint64_t master_seed = 0;
  EpsilonSchedule epsilon{};
  double clip_norm = 5.0;
  // Plain REINFORCE (off) collapses into one of the degenerate attractors
  // on this environment; see ReturnBaseline.
  bool use_return_baseline = true;
  int hidden = 32;
  int n_threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct Checkpoint {
  int dialogs = 0;
  double success_rate = 0.0;
  double mean_length = 0.0;
};

struct TrainReport {
  RewardVariant variant = RewardVariant::Baseline;
  RlTrainConfig config;
  std::vector<std::vector<Checkpoint>> repeats;  // [repeat][checkpoint]

  // CSV rows: repeat,dialogs,success_rate,mean_length,reward_variant
  std::string to_csv() const;

  // Mean over repeats of checkpoint success beyond `after_dialogs`.
  double convergent_success(int after_dialogs = 10000) const;
  std::vector<double> per_repeat_convergent(int after_dialogs = 10000) const;
  // Mean success at the checkpoint closest to `dialogs`.
  double success_near(int dialogs) const;
  std::vector<double> per_repeat_success_near(int dialogs) const;
  double final_mean_length() const;
  std::vector<double> per_repeat_final_length() const;
};

// Independent seeded repeats (parallelized), each freezing the policy every
// eval_every updates for an eval_dialogs evaluation run. Exactly one policy
// update per dialog. Also evaluates the untrained policy as checkpoint 0.
TrainReport train_rl(const SimEnv& env, const RlTrainConfig& config);

}  // namespace sadp

#endif  // SADP_RLTRAIN_HPP
