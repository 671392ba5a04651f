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

#ifndef SADP_SIMENV_HPP
#define SADP_SIMENV_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sadp/corpus.hpp"
#include "sadp/features.hpp"
#include "sadp/forest.hpp"
#include "sadp/rng.hpp"
#include "sadp/sentiment.hpp"

namespace sadp {

// Bus-information domain: three slots to fill, one of two terminal
// information actions depending on schedule coverage.
enum class SysAction {
  AskDeparture = 0,
  AskArrival = 1,
  AskTime = 2,
  GiveInfo = 3,
  GiveNoResult = 4,
};
constexpr int kNumSysActions = 5;
const char* sys_action_name(SysAction a);
std::optional<SysAction> sys_action_from_name(const std::string& name);

enum class SimSlot { Departure = 0, Arrival = 1, Time = 2 };
constexpr int kNumSimSlots = 3;

struct UserGoal {
  std::string departure;
  std::string arrival;
  std::string time;
  std::array<bool, kNumSimSlots> covered{true, true, true};

  bool is_covered() const { return covered[0] && covered[1] && covered[2]; }
};

// Counts of system actions issued so far in the dialog; the matching key
// between simulated contexts and bank rows.
struct SummaryStats {
  std::array<int, kNumSysActions> counts{};

  std::array<int, kNumSysActions> clamped_key(int clamp) const;
  bool operator==(const SummaryStats&) const = default;
};

struct SampleBankRow {
  SummaryStats s_real;
  DialogicFeatures dialogic;
};

// Rows keyed by clamped summary statistics. Counts at or above the clamp are
// bucketed together; clamp <= 0 means strict equality.
class SampleBank {
 public:
  SampleBank() = default;
  explicit SampleBank(std::vector<SampleBankRow> rows, int clamp = 3);

  const std::vector<SampleBankRow>& rows() const { return rows_; }
  int clamp() const { return clamp_; }
  bool empty() const { return rows_.empty(); }
  const std::vector<int>* matches(const SummaryStats& s_sim) const;

  // Text table, one row per line: 5 action counts then 8 dialogic features.
  static SampleBank from_file(const std::string& path, int clamp = 3);
  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  std::vector<SampleBankRow> rows_;
  int clamp_ = 3;
  std::map<std::array<int, kNumSysActions>, std::vector<int>> index_;
};

// Uniform draw among rows whose clamped s_real equals the clamped s_sim;
// nullopt when the match set is empty.
std::optional<DialogicFeatures> sample_sentiment(const SampleBank& bank,
                                                 const SummaryStats& s_sim,
                                                 Rng& rng);

enum class RewardVariant { Baseline = 0, SRRS = 1, SRRP = 2, SRRIP = 3 };
const char* reward_variant_name(RewardVariant v);
std::optional<RewardVariant> reward_variant_from_name(const std::string& name);

struct RewardConfig {
  RewardVariant variant = RewardVariant::Baseline;
  double success = 20.0;
  double failure = -10.0;
  double step = -1.0;
  double repetition_penalty = -2.5;
  double interruption_penalty = -1.0;
  ScoreCoeffs coeffs{};
  int max_turns = 15;
  double discount = 0.9;

  void validate() const;
  static RewardConfig from_kv(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_kv() const;
};

struct EnvConfig {
  double noise_prob = 0.10;
  double coverage_prob = 0.8;
  double interruption_rate = 0.075;
  double button_rate = 0.0;
  double start_over_rate = 0.0;
  // Strong mask: information actions also require every slot to be filled,
  // so a terminal action always succeeds. Weak mask (the RL experiment
  // setting): the mask gates only on schedule coverage, and issuing an
  // information action before all slots are filled ends the dialog as a
  // failure. The weak mask is what makes "when to terminate" a learning
  // problem rather than a hard constraint.
  bool mask_requires_filled = true;

  void validate() const;
};

enum class StepResult { Ongoing, Success, Failure };
enum class MatchKind { Matched, NoMatchRepetition, NoMatchPlain };
const char* match_kind_name(MatchKind k);

struct RewardBreakdown {
  double base = 0.0;       // terminal rewards and plain per-turn steps
  double sentiment = 0.0;  // score of the sampled dialogic features
  double repetition_penalty = 0.0;
  double interruption_penalty = 0.0;

  double total() const {
    return base + sentiment + repetition_penalty + interruption_penalty;
  }
};

struct UserResponse {
  UserAct act;
  bool interrupted = false;
  bool button = false;
  bool repetition = false;
  bool start_over = false;
};

struct StepOutcome {
  double reward = 0.0;
  RewardBreakdown breakdown;
  bool done = false;
  StepResult result = StepResult::Ongoing;
  std::optional<MatchKind> match_kind;  // proceeding turns only
  SysAction action = SysAction::AskDeparture;
  std::optional<UserResponse> user;  // terminal turns take no user reply
};

struct EnvState {
  int turn_count = 0;
  std::array<bool, kNumSimSlots> filled{};
  SummaryStats stats;
  std::optional<UserAct> last_user_act;
  std::array<int, kNumSimSlots> consecutive_asks{};
  Rng rng;

  explicit EnvState(std::uint64_t seed) : rng(seed) {}
};

// Fresh state plus a goal drawn from the seeded token pools. The goal stays
// fixed for the whole dialog; with probability 1 - coverage_prob one place
// slot is outside schedule coverage.
std::pair<EnvState, UserGoal> env_reset(std::uint64_t seed, const EnvConfig& config);

// Ask actions get an inform with probability 1 - noise_prob, otherwise a
// noise act. Event flags: repetition fires when the asked slot was already
// filled; interruption/button/start-over at their configured rates.
UserResponse user_respond(const UserGoal& goal,
                          const std::array<bool, kNumSimSlots>& filled,
                          SysAction action, const EnvConfig& config, Rng& rng);

// Ask actions are always allowed; GiveInfo needs all slots filled and a
// covered goal, GiveNoResult all slots filled and an uncovered goal.
std::vector<bool> action_mask(const EnvState& state, const UserGoal& goal);
// Weak variant: information actions gate on coverage only.
std::vector<bool> coverage_only_mask(const UserGoal& goal);

// Reward of one turn under the configured variant. `sampled` carries the
// matched bank row's features (or, for SRRS only, the random fallback row);
// repetition/interruption are the simulator's event flags for this turn.
StepOutcome compute_reward(const RewardConfig& cfg, StepResult result,
                           const std::optional<DialogicFeatures>& sampled,
                           bool repetition, bool interruption,
                           const ForestModel* detector);

class SimEnv {
 public:
  SimEnv(EnvConfig env_cfg, RewardConfig reward_cfg, const SampleBank* bank,
         const ForestModel* detector);

  std::pair<EnvState, UserGoal> reset(std::uint64_t seed) const;
  std::vector<bool> mask(const EnvState& state, const UserGoal& goal) const;
  // Applies the user response, updates filled slots and summary statistics,
  // decides success/failure and computes the reward. Throws std::logic_error
  // on a masked action.
  StepOutcome step(EnvState& state, const UserGoal& goal, SysAction action) const;

  const EnvConfig& env_config() const { return env_cfg_; }
  const RewardConfig& reward_config() const { return reward_cfg_; }
  const SampleBank* bank() const { return bank_; }
  const ForestModel* detector() const { return detector_; }

 private:
  EnvConfig env_cfg_;
  RewardConfig reward_cfg_;
  const SampleBank* bank_;
  const ForestModel* detector_;
};

// Keyword buckets mapping logged system utterances onto the five simulated
// actions; first matching rule wins.
struct ActionKeywordMap {
  std::vector<std::pair<std::string, SysAction>> rules;

  static ActionKeywordMap defaults();
  static ActionKeywordMap from_file(const std::string& path);
  std::optional<SysAction> classify(const std::string& system_text) const;
};

// One row per user utterance of the cleaned corpus: the summary statistics
// at that utterance and its dialogic features.
SampleBank build_sample_bank(std::span<const Dialog> clean_dialogs,
                             const ActionKeywordMap& mapping, int clamp = 3);

struct SynthBankConfig {
  double target_match_fraction = 0.36;     // over all turns, terminals included
  double target_no_match_repetition = 0.15;
  int reference_dialogs = 4000;
  // The reference policy asks the first unfilled slot (or terminates) and
  // explores uniformly over allowed actions with this probability. It stands
  // in for mid-training behavior, where the coverage fractions are measured.
  double reference_epsilon = 0.3;
  int rows_per_key = 8;
  double all_zero_row_prob = 0.6;  // for keys without re-asked slots
  int clamp = 3;
  EnvConfig env{};
  int max_turns = 15;
};

// Bank whose key coverage is tuned so that, under a uniform random masked
// policy, roughly target_match_fraction of turns find a match and
// target_no_match_repetition of turns are unmatched repetitions. Dialogic
// features are conditioned on the key: more re-asks mean heavier negative
// signatures.
SampleBank synth_sample_bank(std::uint64_t seed, const SynthBankConfig& config);

struct BankProfile {
  double matched = 0.0;
  double no_match_repetition = 0.0;
  double no_match_plain = 0.0;
  double terminal = 0.0;
  double interruption = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
};

// Fractions over all turns of n_dialogs rollouts under the same
// semi-greedy reference policy used to tune the bank; the interruption
// fraction is over turns that take a user reply.
BankProfile measure_bank_profile(const SampleBank& bank, const EnvConfig& env_cfg,
                                 int max_turns, int n_dialogs, std::uint64_t seed,
                                 double reference_epsilon = 0.3);

// One line per turn: action, user act, match kind, reward breakdown.
std::string trace_line(const StepOutcome& outcome);

}  // namespace sadp

#endif  // SADP_SIMENV_HPP
