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

#include "sadp/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sadp/errors.hpp"
#include "sadp/io.hpp"

namespace sadp {

const char* sys_action_name(SysAction a) {
  switch (a) {
    case SysAction::AskDeparture: return "ask_departure";
    case SysAction::AskArrival: return "ask_arrival";
    case SysAction::AskTime: return "ask_time";
    case SysAction::GiveInfo: return "give_info";
    case SysAction::GiveNoResult: return "give_no_result";
  }
  return "ask_departure";
}

std::optional<SysAction> sys_action_from_name(const std::string& name) {
  for (int a = 0; a < kNumSysActions; ++a) {
    if (name == sys_action_name(static_cast<SysAction>(a))) {
      return static_cast<SysAction>(a);
    }
  }
  return std::nullopt;
}

const char* reward_variant_name(RewardVariant v) {
  switch (v) {
    case RewardVariant::Baseline: return "baseline";
    case RewardVariant::SRRS: return "srrs";
    case RewardVariant::SRRP: return "srrp";
    case RewardVariant::SRRIP: return "srrip";
  }
  return "baseline";
}

std::optional<RewardVariant> reward_variant_from_name(const std::string& name) {
  for (int v = 0; v < 4; ++v) {
    if (name == reward_variant_name(static_cast<RewardVariant>(v))) {
      return static_cast<RewardVariant>(v);
    }
  }
  return std::nullopt;
}

const char* match_kind_name(MatchKind k) {
  switch (k) {
    case MatchKind::Matched: return "matched";
    case MatchKind::NoMatchRepetition: return "no_match_repetition";
    case MatchKind::NoMatchPlain: return "no_match_plain";
  }
  return "matched";
}

std::array<int, kNumSysActions> SummaryStats::clamped_key(int clamp) const {
  std::array<int, kNumSysActions> key = counts;
  if (clamp > 0) {
    for (int& c : key) c = std::min(c, clamp);
  }
  return key;
}

SampleBank::SampleBank(std::vector<SampleBankRow> rows, int clamp)
    : rows_(std::move(rows)), clamp_(clamp) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    index_[rows_[i].s_real.clamped_key(clamp_)].push_back(static_cast<int>(i));
  }
}

const std::vector<int>* SampleBank::matches(const SummaryStats& s_sim) const {
  auto it = index_.find(s_sim.clamped_key(clamp_));
  return it == index_.end() ? nullptr : &it->second;
}

std::string SampleBank::to_string() const {
  std::ostringstream out;
  out << "# s_counts[" << kNumSysActions << "] dialogic[" << kDialogicDim << "]\n";
  for (const SampleBankRow& row : rows_) {
    for (int c : row.s_real.counts) out << c << " ";
    const auto d = row.dialogic.to_array();
    for (int j = 0; j < kDialogicDim; ++j) {
      out << fmt_double(d[j]) << (j + 1 < kDialogicDim ? " " : "");
    }
    out << "\n";
  }
  return out.str();
}

void SampleBank::save(const std::string& path) const {
  write_file(path, to_string());
}

SampleBank SampleBank::from_file(const std::string& path, int clamp) {
  std::vector<SampleBankRow> rows;
  int line_no = 0;
  for (const std::string& raw : read_lines(path)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    SampleBankRow row;
    std::array<double, kDialogicDim> d{};
    bool ok = true;
    for (int& c : row.s_real.counts) ok = ok && static_cast<bool>(in >> c);
    for (double& v : d) ok = ok && static_cast<bool>(in >> v);
    if (!ok) {
      throw DataError("sample bank line " + std::to_string(line_no) +
                      ": expected " + std::to_string(kNumSysActions + kDialogicDim) +
                      " numbers");
    }
    row.dialogic = DialogicFeatures::from_array(d);
    rows.push_back(row);
  }
  return SampleBank(std::move(rows), clamp);
}

std::optional<DialogicFeatures> sample_sentiment(const SampleBank& bank,
                                                 const SummaryStats& s_sim,
                                                 Rng& rng) {
  const std::vector<int>* set = bank.matches(s_sim);
  if (!set || set->empty()) return std::nullopt;
  return bank.rows()[(*set)[rng.index(set->size())]].dialogic;
}

void RewardConfig::validate() const {
  if (max_turns < 1) throw ConfigError("reward config: max_turns must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw ConfigError("reward config: discount must be in (0, 1]");
  }
}

std::map<std::string, std::string> RewardConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["variant"] = reward_variant_name(variant);
  kv["success"] = fmt_double(success);
  kv["failure"] = fmt_double(failure);
  kv["step"] = fmt_double(step);
  kv["repetition_penalty"] = fmt_double(repetition_penalty);
  kv["interruption_penalty"] = fmt_double(interruption_penalty);
  kv["coeff_neg"] = fmt_double(coeffs.neg);
  kv["coeff_neu"] = fmt_double(coeffs.neu);
  kv["coeff_pos"] = fmt_double(coeffs.pos);
  kv["max_turns"] = std::to_string(max_turns);
  kv["discount"] = fmt_double(discount);
  return kv;
}

RewardConfig RewardConfig::from_kv(const std::map<std::string, std::string>& kv) {
  RewardConfig cfg;
  for (const auto& [key, value] : kv) {
    try {
      if (key == "variant") {
        auto v = reward_variant_from_name(value);
        if (!v) throw ConfigError("unknown reward variant: " + value);
        cfg.variant = *v;
      } else if (key == "success") {
        cfg.success = std::stod(value);
      } else if (key == "failure") {
        cfg.failure = std::stod(value);
      } else if (key == "step") {
        cfg.step = std::stod(value);
      } else if (key == "repetition_penalty") {
        cfg.repetition_penalty = std::stod(value);
      } else if (key == "interruption_penalty") {
        cfg.interruption_penalty = std::stod(value);
      } else if (key == "coeff_neg") {
        cfg.coeffs.neg = std::stod(value);
      } else if (key == "coeff_neu") {
        cfg.coeffs.neu = std::stod(value);
      } else if (key == "coeff_pos") {
        cfg.coeffs.pos = std::stod(value);
      } else if (key == "max_turns") {
        cfg.max_turns = std::stoi(value);
      } else if (key == "discount") {
        cfg.discount = std::stod(value);
      } else {
        throw ConfigError("unknown reward config key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad reward config value for " + key + ": " + value);
    }
  }
  cfg.validate();
  return cfg;
}

void EnvConfig::validate() const {
  for (double r : {noise_prob, coverage_prob, interruption_rate, button_rate,
                   start_over_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError("env config: rates must lie in [0,1]");
    }
  }
}

namespace {

const char* kDepartureTokens[] = {"<departure_0>", "<departure_1>", "<departure_2>",
                                  "<departure_3>", "<departure_4>", "<departure_5>"};
const char* kArrivalTokens[] = {"<arrival_0>", "<arrival_1>", "<arrival_2>",
                                "<arrival_3>", "<arrival_4>", "<arrival_5>"};
const char* kTimeTokens[] = {"<time_0>", "<time_1>", "<time_2>", "<time_3>"};

bool is_ask(SysAction a) {
  return a == SysAction::AskDeparture || a == SysAction::AskArrival ||
         a == SysAction::AskTime;
}

}  // namespace

std::pair<EnvState, UserGoal> env_reset(std::uint64_t seed, const EnvConfig& config) {
  config.validate();
  EnvState state(derive_seed(seed, 0xe57a7eull));
  UserGoal goal;
  goal.departure = kDepartureTokens[state.rng.index(std::size(kDepartureTokens))];
  goal.arrival = kArrivalTokens[state.rng.index(std::size(kArrivalTokens))];
  goal.time = kTimeTokens[state.rng.index(std::size(kTimeTokens))];
  if (!state.rng.bernoulli(config.coverage_prob)) {
    // Uncovered goals put one of the two place slots outside coverage.
    const int which = static_cast<int>(state.rng.index(2));
    goal.covered[which] = false;
  }
  return {std::move(state), std::move(goal)};
}

UserResponse user_respond(const UserGoal& goal,
                          const std::array<bool, kNumSimSlots>& filled,
                          SysAction action, const EnvConfig& config, Rng& rng) {
  (void)goal;  // slot values are placeholders; only coverage matters elsewhere
  UserResponse resp;
  resp.interrupted = rng.bernoulli(config.interruption_rate);
  resp.button = rng.bernoulli(config.button_rate);
  resp.start_over = rng.bernoulli(config.start_over_rate);
  if (is_ask(action)) {
    const int slot = static_cast<int>(action);
    resp.repetition = filled[slot];
    if (rng.bernoulli(config.noise_prob)) {
      resp.act = UserAct{UserActType::Noise, std::nullopt};
    } else {
      resp.act = UserAct{UserActType::Inform, std::nullopt};
    }
  } else {
    resp.act = UserAct{UserActType::Yes, std::nullopt};
  }
  return resp;
}

std::vector<bool> action_mask(const EnvState& state, const UserGoal& goal) {
  const bool all_filled = state.filled[0] && state.filled[1] && state.filled[2];
  std::vector<bool> mask(kNumSysActions, false);
  mask[static_cast<int>(SysAction::AskDeparture)] = true;
  mask[static_cast<int>(SysAction::AskArrival)] = true;
  mask[static_cast<int>(SysAction::AskTime)] = true;
  mask[static_cast<int>(SysAction::GiveInfo)] = all_filled && goal.is_covered();
  mask[static_cast<int>(SysAction::GiveNoResult)] = all_filled && !goal.is_covered();
  return mask;
}

std::vector<bool> coverage_only_mask(const UserGoal& goal) {
  std::vector<bool> mask(kNumSysActions, true);
  mask[static_cast<int>(SysAction::GiveInfo)] = goal.is_covered();
  mask[static_cast<int>(SysAction::GiveNoResult)] = !goal.is_covered();
  return mask;
}

StepOutcome compute_reward(const RewardConfig& cfg, StepResult result,
                           const std::optional<DialogicFeatures>& sampled,
                           bool repetition, bool interruption,
                           const ForestModel* detector) {
  StepOutcome out;
  out.result = result;
  out.done = result != StepResult::Ongoing;

  if (result == StepResult::Success) {
    out.breakdown.base = cfg.success;
    out.reward = out.breakdown.total();
    return out;
  }
  if (result == StepResult::Failure) {
    out.breakdown.base = cfg.failure;
    out.reward = out.breakdown.total();
    return out;
  }

  const bool sentiment_variant = cfg.variant != RewardVariant::Baseline;
  if (sentiment_variant && !detector) {
    throw ConfigError("sentiment reward variants need a sentiment model");
  }

  switch (cfg.variant) {
    case RewardVariant::Baseline:
      out.breakdown.base = cfg.step;
      break;
    case RewardVariant::SRRS:
      if (!sampled || sampled->all_zero()) {
        out.breakdown.base = cfg.step;
      } else {
        const auto arr = sampled->to_array();
        out.breakdown.sentiment =
            sentiment_score(predict_probs(*detector, arr), cfg.coeffs);
      }
      break;
    case RewardVariant::SRRP:
    case RewardVariant::SRRIP:
      if (sampled) {
        if (sampled->all_zero()) {
          out.breakdown.base = cfg.step;
        } else {
          const auto arr = sampled->to_array();
          out.breakdown.sentiment =
              sentiment_score(predict_probs(*detector, arr), cfg.coeffs);
        }
      } else if (repetition) {
        out.breakdown.repetition_penalty = cfg.repetition_penalty;
      } else {
        out.breakdown.base = cfg.step;
      }
      if (cfg.variant == RewardVariant::SRRIP && interruption) {
        out.breakdown.interruption_penalty = cfg.interruption_penalty;
      }
      break;
  }
  out.reward = out.breakdown.total();
  return out;
}

SimEnv::SimEnv(EnvConfig env_cfg, RewardConfig reward_cfg, const SampleBank* bank,
               const ForestModel* detector)
    : env_cfg_(env_cfg), reward_cfg_(reward_cfg), bank_(bank), detector_(detector) {
  env_cfg_.validate();
  reward_cfg_.validate();
  if (reward_cfg_.variant != RewardVariant::Baseline) {
    if (!bank_) throw ConfigError("sentiment reward variants need a sample bank");
    if (!detector_) throw ConfigError("sentiment reward variants need a sentiment model");
  }
}

std::pair<EnvState, UserGoal> SimEnv::reset(std::uint64_t seed) const {
  return env_reset(seed, env_cfg_);
}

std::vector<bool> SimEnv::mask(const EnvState& state, const UserGoal& goal) const {
  return env_cfg_.mask_requires_filled ? action_mask(state, goal)
                                       : coverage_only_mask(goal);
}

StepOutcome SimEnv::step(EnvState& state, const UserGoal& goal, SysAction action) const {
  const std::vector<bool> allowed = mask(state, goal);
  if (!allowed[static_cast<int>(action)]) {
    throw std::logic_error(std::string("masked action submitted: ") +
                           sys_action_name(action));
  }

  state.stats.counts[static_cast<int>(action)] += 1;
  state.turn_count += 1;

  StepResult result = StepResult::Ongoing;
  std::optional<UserResponse> resp;
  if (is_ask(action)) {
    const int slot = static_cast<int>(action);
    resp = user_respond(goal, state.filled, action, env_cfg_, state.rng);
    if (resp->act.type == UserActType::Inform) {
      resp->act.entity = std::nullopt;  // placeholder tokens carry no lexicon type
      state.filled[slot] = true;
    }
    state.last_user_act = resp->act;
    for (int s = 0; s < kNumSimSlots; ++s) {
      state.consecutive_asks[s] = (s == slot) ? state.consecutive_asks[s] + 1 : 0;
    }
    if (state.turn_count >= reward_cfg_.max_turns) result = StepResult::Failure;
  } else {
    // Info actions end the dialog; they succeed only when every slot was
    // actually collected (always true under the strong mask).
    const bool complete = state.filled[0] && state.filled[1] && state.filled[2];
    result = complete ? StepResult::Success : StepResult::Failure;
    state.consecutive_asks = {0, 0, 0};
  }

  std::optional<DialogicFeatures> sampled;
  std::optional<MatchKind> match_kind;
  const bool rep = resp && resp->repetition;
  const bool intr = resp && resp->interrupted;
  if (result == StepResult::Ongoing &&
      reward_cfg_.variant != RewardVariant::Baseline) {
    sampled = sample_sentiment(*bank_, state.stats, state.rng);
    match_kind = sampled ? MatchKind::Matched
                         : (rep ? MatchKind::NoMatchRepetition : MatchKind::NoMatchPlain);
    if (!sampled && reward_cfg_.variant == RewardVariant::SRRS && !bank_->empty()) {
      // no matched context: fall back to a uniformly random bank row
      sampled = bank_->rows()[state.rng.index(bank_->rows().size())].dialogic;
    }
  }

  StepOutcome out =
      compute_reward(reward_cfg_, result, sampled, rep, intr, detector_);
  out.match_kind = match_kind;
  out.action = action;
  out.user = resp;
  return out;
}

ActionKeywordMap ActionKeywordMap::defaults() {
  ActionKeywordMap map;
  map.rules = {
      {"leaving from", SysAction::AskDeparture},
      {"leave from", SysAction::AskDeparture},
      {"where are you leaving", SysAction::AskDeparture},
      {"departure", SysAction::AskDeparture},
      {"where do you want to go", SysAction::AskArrival},
      {"where would you like to go", SysAction::AskArrival},
      {"going to", SysAction::AskArrival},
      {"arrival", SysAction::AskArrival},
      {"what time", SysAction::AskTime},
      {"when would you like", SysAction::AskTime},
      {"when do you", SysAction::AskTime},
      {"no result", SysAction::GiveNoResult},
      {"no buses", SysAction::GiveNoResult},
      {"not find any", SysAction::GiveNoResult},
      {"there is a", SysAction::GiveInfo},
      {"next bus", SysAction::GiveInfo},
      {"the next", SysAction::GiveInfo},
      {"schedule", SysAction::GiveInfo},
  };
  return map;
}

ActionKeywordMap ActionKeywordMap::from_file(const std::string& path) {
  ActionKeywordMap map;
  int line_no = 0;
  for (const std::string& raw : read_lines(path)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("action map line " + std::to_string(line_no) +
                      ": expected keyword<TAB>action");
    }
    const auto action = sys_action_from_name(trim(line.substr(tab + 1)));
    if (!action) {
      throw DataError("action map line " + std::to_string(line_no) + ": unknown action");
    }
    map.rules.emplace_back(to_lower(trim(line.substr(0, tab))), *action);
  }
  return map;
}

std::optional<SysAction> ActionKeywordMap::classify(const std::string& system_text) const {
  const std::string text = to_lower(system_text);
  for (const auto& [keyword, action] : rules) {
    if (text.find(keyword) != std::string::npos) return action;
  }
  return std::nullopt;
}

SampleBank build_sample_bank(std::span<const Dialog> clean_dialogs,
                             const ActionKeywordMap& mapping, int clamp) {
  if (clean_dialogs.empty()) throw DataError("build_sample_bank: empty corpus");
  std::vector<SampleBankRow> rows;
  for (const Dialog& d : clean_dialogs) {
    SummaryStats stats;
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const auto action = mapping.classify(d.turns[ti].system_text);
      if (action) stats.counts[static_cast<int>(*action)] += 1;
      rows.push_back({stats, extract_dialogic(d, static_cast<int>(ti))});
    }
  }
  return SampleBank(std::move(rows), clamp);
}

namespace {

struct KeyTally {
  std::array<int, kNumSysActions> key{};
  int occurrences = 0;      // proceeding turns carrying this key
  int repetitions = 0;      // of which had a repetition event
};

// Semi-greedy reference policy: ask the first unfilled slot (or terminate
// when complete), exploring uniformly over allowed actions with probability
// epsilon. Approximates mid-training behavior.
SysAction reference_action(const EnvState& state, const std::vector<bool>& mask,
                           double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
    std::vector<int> allowed;
    for (int a = 0; a < kNumSysActions; ++a) {
      if (mask[a]) allowed.push_back(a);
    }
    return static_cast<SysAction>(allowed[rng.index(allowed.size())]);
  }
  for (int s = 0; s < kNumSimSlots; ++s) {
    if (!state.filled[s]) return static_cast<SysAction>(s);
  }
  return mask[static_cast<int>(SysAction::GiveInfo)] ? SysAction::GiveInfo
                                                     : SysAction::GiveNoResult;
}

// Rollouts under the reference policy, tallying per-key stats.
struct ReferenceTally {
  std::map<std::array<int, kNumSysActions>, KeyTally> keys;
  long total_turns = 0;
  long terminal_turns = 0;
};

ReferenceTally reference_rollouts(const EnvConfig& env_cfg, int max_turns,
                                  int n_dialogs, std::uint64_t seed, int clamp,
                                  double epsilon) {
  RewardConfig reward;
  reward.variant = RewardVariant::Baseline;
  reward.max_turns = max_turns;
  SimEnv env(env_cfg, reward, nullptr, nullptr);
  ReferenceTally tally;
  for (int d = 0; d < n_dialogs; ++d) {
    auto [state, goal] = env.reset(derive_seed(seed, 0xba17ull, d));
    Rng policy_rng(derive_seed(seed, 0x901ecull, d));
    bool done = false;
    while (!done) {
      const std::vector<bool> mask = env.mask(state, goal);
      const SysAction action = reference_action(state, mask, epsilon, policy_rng);
      const StepOutcome out = env.step(state, goal, action);
      tally.total_turns += 1;
      if (out.done) {
        tally.terminal_turns += 1;
        done = true;
      } else {
        const auto key = state.stats.clamped_key(clamp);
        KeyTally& kt = tally.keys[key];
        kt.key = key;
        kt.occurrences += 1;
        if (out.user && out.user->repetition) kt.repetitions += 1;
      }
    }
  }
  return tally;
}

DialogicFeatures synth_bank_features(const std::array<int, kNumSysActions>& key,
                                     double all_zero_prob, Rng& rng) {
  // Re-ask intensity: how many times some slot was asked beyond the first.
  // First-visit keys mostly produce quiet users (all-zero rows or one mild
  // event); repeat-heavy keys produce hot negative signatures.
  int intensity = 0;
  for (int a = 0; a < kNumSimSlots; ++a) intensity += std::max(key[a] - 1, 0);

  DialogicFeatures f;
  const double p_zero =
      intensity == 0 ? all_zero_prob : std::max(0.05, all_zero_prob - 0.15 * intensity);
  if (rng.bernoulli(p_zero)) return f;

  const int extra = intensity == 0 ? 0 : rng.int_range(0, std::min(intensity, 1));
  const int budget = 1 + extra;  // cumulative interruption+repetition events
  int reps = 0, intrs = 0;
  for (int b = 0; b < budget; ++b) {
    (rng.bernoulli(0.7) ? reps : intrs) += 1;
  }
  f.total_repetitions = reps;
  f.total_interruptions = intrs;
  f.repetition = (reps > 0 && rng.bernoulli(0.5)) ? 1.0 : 0.0;
  f.interruption = (intrs > 0 && rng.bernoulli(0.4)) ? 1.0 : 0.0;
  f.button_usage = rng.bernoulli(0.03) ? 1.0 : 0.0;
  f.total_button_usages = f.button_usage;
  f.start_over = rng.bernoulli(0.01) ? 1.0 : 0.0;
  f.total_start_over = f.start_over;
  return f;
}

}  // namespace

SampleBank synth_sample_bank(std::uint64_t seed, const SynthBankConfig& config) {
  config.env.validate();
  const ReferenceTally tally = reference_rollouts(
      config.env, config.max_turns, config.reference_dialogs,
      derive_seed(seed, 0x5ba9cull), config.clamp, config.reference_epsilon);

  std::vector<KeyTally> keys;
  keys.reserve(tally.keys.size());
  for (const auto& [_, kt] : tally.keys) keys.push_back(kt);
  std::sort(keys.begin(), keys.end(), [](const KeyTally& a, const KeyTally& b) {
    if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
    return a.key < b.key;
  });

  const double total = static_cast<double>(tally.total_turns);

  // Subset selection by hill climbing on the two coverage targets: the
  // matched fraction over all turns and the repetition share left uncovered.
  std::vector<bool> included(keys.size(), false);
  long covered = 0;
  long covered_reps = 0;
  long all_reps = 0;
  for (const KeyTally& kt : keys) all_reps += kt.repetitions;
  auto error = [&](long cov, long cov_reps) {
    const double cov_frac = cov / total;
    const double uncov_rep_frac = (all_reps - cov_reps) / total;
    return std::fabs(cov_frac - config.target_match_fraction) +
           std::fabs(uncov_rep_frac - config.target_no_match_repetition);
  };
  for (int pass = 0; pass < 1000; ++pass) {
    double best_err = error(covered, covered_reps);
    int best_flip = -1;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const int sign = included[i] ? -1 : 1;
      const double err = error(covered + sign * keys[i].occurrences,
                               covered_reps + sign * keys[i].repetitions);
      if (err + 1e-12 < best_err) {
        best_err = err;
        best_flip = static_cast<int>(i);
      }
    }
    if (best_flip < 0) break;
    const int sign = included[best_flip] ? -1 : 1;
    covered += sign * keys[best_flip].occurrences;
    covered_reps += sign * keys[best_flip].repetitions;
    included[best_flip] = !included[best_flip];
  }

  Rng rng(derive_seed(seed, 0xba42ull));
  std::vector<SampleBankRow> rows;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!included[i]) continue;
    SampleBankRow row;
    row.s_real.counts = keys[i].key;
    const int n_rows = std::max(1, config.rows_per_key);
    for (int r = 0; r < n_rows; ++r) {
      row.dialogic = synth_bank_features(keys[i].key, config.all_zero_row_prob, rng);
      rows.push_back(row);
    }
  }
  return SampleBank(std::move(rows), config.clamp);
}

BankProfile measure_bank_profile(const SampleBank& bank, const EnvConfig& env_cfg,
                                 int max_turns, int n_dialogs, std::uint64_t seed,
                                 double reference_epsilon) {
  RewardConfig reward;
  reward.variant = RewardVariant::Baseline;
  reward.max_turns = max_turns;
  SimEnv env(env_cfg, reward, nullptr, nullptr);

  BankProfile profile;
  long total = 0, matched = 0, rep = 0, plain = 0, terminal = 0, interrupted = 0;
  long with_user = 0, successes = 0, total_len = 0;
  Rng match_rng(derive_seed(seed, 0x3a7cull));
  for (int d = 0; d < n_dialogs; ++d) {
    auto [state, goal] = env.reset(derive_seed(seed, 0xeba1ull, d));
    Rng policy_rng(derive_seed(seed, 0x90111ull, d));
    bool done = false;
    while (!done) {
      const std::vector<bool> mask = env.mask(state, goal);
      const SysAction action =
          reference_action(state, mask, reference_epsilon, policy_rng);
      const StepOutcome out = env.step(state, goal, action);
      total += 1;
      if (out.user) {
        with_user += 1;
        if (out.user->interrupted) interrupted += 1;
      }
      if (out.done) {
        terminal += 1;
        total_len += state.turn_count;
        if (out.result == StepResult::Success) successes += 1;
        done = true;
      } else {
        const auto sample = sample_sentiment(bank, state.stats, match_rng);
        if (sample) {
          matched += 1;
        } else if (out.user && out.user->repetition) {
          rep += 1;
        } else {
          plain += 1;
        }
      }
    }
  }
  const double ft = static_cast<double>(total);
  profile.matched = matched / ft;
  profile.no_match_repetition = rep / ft;
  profile.no_match_plain = plain / ft;
  profile.terminal = terminal / ft;
  profile.interruption = with_user > 0 ? static_cast<double>(interrupted) / with_user : 0.0;
  profile.mean_length = static_cast<double>(total_len) / n_dialogs;
  profile.success_rate = static_cast<double>(successes) / n_dialogs;
  return profile;
}

std::string trace_line(const StepOutcome& out) {
  std::ostringstream line;
  line << sys_action_name(out.action) << " ";
  line << (out.user ? format_user_act(out.user->act) : "-") << " ";
  if (out.user) {
    line << (out.user->interrupted ? "intr " : "") << (out.user->repetition ? "rep " : "");
  }
  line << (out.match_kind ? match_kind_name(*out.match_kind) : "-") << " ";
  line << "reward=" << fmt_double(out.reward) << " base=" << fmt_double(out.breakdown.base)
       << " sentiment=" << fmt_double(out.breakdown.sentiment)
       << " rep_pen=" << fmt_double(out.breakdown.repetition_penalty)
       << " intr_pen=" << fmt_double(out.breakdown.interruption_penalty);
  if (out.done) {
    line << " result=" << (out.result == StepResult::Success ? "success" : "failure");
  }
  return line.str();
}

}  // namespace sadp
