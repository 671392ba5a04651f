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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <set>

#include "doctest.h"
#include "sadp/errors.hpp"
#include "sadp/simenv.hpp"

using namespace sadp;

namespace {

// Single-leaf forest that returns fixed class probabilities; the SRRP
// appendix dialog needs a matched-turn score of exactly -4.01, i.e.
// probabilities (0.7525, 0.2475, 0).
ForestModel fixed_probs_forest(double neg, double neu, double pos) {
  ForestModel m;
  m.n_features = kDialogicDim;
  m.n_classes = 3;
  DecisionTree tree;
  TreeNode leaf;
  leaf.counts = {neg * 10000, neu * 10000, pos * 10000};
  tree.nodes.push_back(leaf);
  m.trees.push_back(tree);
  return m;
}

DialogicFeatures nonzero_features() {
  DialogicFeatures f;
  f.repetition = 1;
  f.total_repetitions = 2;
  return f;
}

SampleBank tiny_bank(std::vector<SampleBankRow> rows, int clamp = 3) {
  return SampleBank(std::move(rows), clamp);
}

}  // namespace

TEST_CASE("env_reset determinism and coverage rate") {
  EnvConfig cfg;
  auto [s1, g1] = env_reset(99, cfg);
  auto [s2, g2] = env_reset(99, cfg);
  CHECK(g1.departure == g2.departure);
  CHECK(g1.arrival == g2.arrival);
  CHECK(g1.time == g2.time);
  CHECK(g1.covered == g2.covered);
  CHECK(s1.turn_count == 0);

  SUBCASE("coverage probability one always covers") {
    EnvConfig all = cfg;
    all.coverage_prob = 1.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      CHECK(env_reset(seed, all).second.is_covered());
    }
  }
  SUBCASE("coverage 0.8 is hit within 0.02 over 10k resets") {
    int covered = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed) {
      covered += env_reset(seed, cfg).second.is_covered() ? 1 : 0;
    }
    CHECK(static_cast<double>(covered) / n == doctest::Approx(0.8).epsilon(0.025));
  }
}

TEST_CASE("user_respond: noise extremes and repetition on re-asks") {
  UserGoal goal;
  Rng rng(1);
  EnvConfig cfg;

  cfg.noise_prob = 0.0;
  for (int i = 0; i < 50; ++i) {
    const UserResponse r =
        user_respond(goal, {false, false, false}, SysAction::AskDeparture, cfg, rng);
    CHECK(r.act.type == UserActType::Inform);
    CHECK_FALSE(r.repetition);
  }
  cfg.noise_prob = 1.0;
  for (int i = 0; i < 50; ++i) {
    const UserResponse r =
        user_respond(goal, {false, false, false}, SysAction::AskArrival, cfg, rng);
    CHECK(r.act.type == UserActType::Noise);
  }
  cfg.noise_prob = 0.1;
  const UserResponse r =
      user_respond(goal, {true, false, false}, SysAction::AskDeparture, cfg, rng);
  CHECK(r.repetition);
}

TEST_CASE("action mask follows slot state and coverage") {
  EnvConfig cfg;
  auto [state, goal] = env_reset(5, cfg);
  goal.covered = {true, true, true};

  const std::vector<bool> initial = action_mask(state, goal);
  CHECK(initial[0]);
  CHECK(initial[1]);
  CHECK(initial[2]);
  CHECK_FALSE(initial[3]);
  CHECK_FALSE(initial[4]);

  state.filled = {true, true, true};
  const std::vector<bool> covered_mask = action_mask(state, goal);
  CHECK(covered_mask[3]);
  CHECK_FALSE(covered_mask[4]);

  goal.covered = {false, true, true};
  const std::vector<bool> uncovered_mask = action_mask(state, goal);
  CHECK_FALSE(uncovered_mask[3]);
  CHECK(uncovered_mask[4]);
}

TEST_CASE("sample_sentiment: empty bank, single row, uniform choice") {
  Rng rng(3);
  SummaryStats key;
  key.counts = {1, 0, 0, 0, 0};

  const SampleBank empty = tiny_bank({});
  CHECK_FALSE(sample_sentiment(empty, key, rng).has_value());

  SampleBankRow row;
  row.s_real = key;
  row.dialogic = nonzero_features();
  const SampleBank one = tiny_bank({row});
  const auto got = sample_sentiment(one, key, rng);
  REQUIRE(got.has_value());
  CHECK(got->to_array() == nonzero_features().to_array());

  // Three matching rows, distinguishable by total_repetitions.
  std::vector<SampleBankRow> rows(3, row);
  rows[0].dialogic.total_repetitions = 1;
  rows[1].dialogic.total_repetitions = 2;
  rows[2].dialogic.total_repetitions = 3;
  const SampleBank three = tiny_bank(rows);
  std::array<int, 4> hits{};
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    const auto f = sample_sentiment(three, key, rng);
    hits[static_cast<int>(f->total_repetitions)] += 1;
  }
  for (int k = 1; k <= 3; ++k) {
    CHECK(static_cast<double>(hits[k]) / draws ==
          doctest::Approx(1.0 / 3.0).epsilon(0.03));
  }
}

TEST_CASE("sample_sentiment returns none iff no clamped key matches") {
  SampleBankRow row;
  row.s_real.counts = {3, 0, 0, 0, 0};
  const SampleBank bank = tiny_bank({row}, 3);
  Rng rng(4);
  for (int a = 0; a <= 5; ++a) {
    SummaryStats probe;
    probe.counts = {a, 0, 0, 0, 0};
    const bool expect_match = std::min(a, 3) == 3;
    CHECK(sample_sentiment(bank, probe, rng).has_value() == expect_match);
  }
}

TEST_CASE("compute_reward: terminal and per-variant branches") {
  const ForestModel detector = fixed_probs_forest(1.0, 0.0, 0.0);
  RewardConfig cfg;

  for (RewardVariant v : {RewardVariant::Baseline, RewardVariant::SRRS,
                          RewardVariant::SRRP, RewardVariant::SRRIP}) {
    cfg.variant = v;
    const StepOutcome success =
        compute_reward(cfg, StepResult::Success, std::nullopt, false, false, &detector);
    CHECK(success.reward == doctest::Approx(20.0));
    CHECK(success.done);
    const StepOutcome failure =
        compute_reward(cfg, StepResult::Failure, std::nullopt, true, true, &detector);
    CHECK(failure.reward == doctest::Approx(-10.0));
  }

  SUBCASE("baseline proceeding turn is the step penalty") {
    cfg.variant = RewardVariant::Baseline;
    const StepOutcome out =
        compute_reward(cfg, StepResult::Ongoing, std::nullopt, true, true, nullptr);
    CHECK(out.reward == doctest::Approx(-1.0));
    CHECK_FALSE(out.done);
  }

  SUBCASE("SRRS: all-zero sample falls back to -1, non-zero scores") {
    cfg.variant = RewardVariant::SRRS;
    const StepOutcome zero = compute_reward(cfg, StepResult::Ongoing,
                                            DialogicFeatures{}, false, false, &detector);
    CHECK(zero.reward == doctest::Approx(-1.0));
    const StepOutcome scored = compute_reward(
        cfg, StepResult::Ongoing, nonzero_features(), false, false, &detector);
    CHECK(scored.reward == doctest::Approx(-5.0));  // all-negative detector
    CHECK(scored.breakdown.sentiment == doctest::Approx(-5.0));
  }

  SUBCASE("SRRP: unmatched repetition costs -2.5, plain turns -1") {
    cfg.variant = RewardVariant::SRRP;
    const StepOutcome rep =
        compute_reward(cfg, StepResult::Ongoing, std::nullopt, true, false, &detector);
    CHECK(rep.reward == doctest::Approx(-2.5));
    CHECK(rep.breakdown.repetition_penalty == doctest::Approx(-2.5));
    const StepOutcome plain =
        compute_reward(cfg, StepResult::Ongoing, std::nullopt, false, true, &detector);
    CHECK(plain.reward == doctest::Approx(-1.0));
  }

  SUBCASE("SRRIP: interruption adds -1 on proceeding turns") {
    cfg.variant = RewardVariant::SRRIP;
    const StepOutcome plain_intr =
        compute_reward(cfg, StepResult::Ongoing, std::nullopt, false, true, &detector);
    CHECK(plain_intr.reward == doctest::Approx(-2.0));
    CHECK(plain_intr.breakdown.interruption_penalty == doctest::Approx(-1.0));
    const StepOutcome rep_intr =
        compute_reward(cfg, StepResult::Ongoing, std::nullopt, true, true, &detector);
    CHECK(rep_intr.reward == doctest::Approx(-3.5));
  }

  SUBCASE("sentiment variants require a detector") {
    cfg.variant = RewardVariant::SRRS;
    CHECK_THROWS_AS(compute_reward(cfg, StepResult::Ongoing, nonzero_features(),
                                   false, false, nullptr),
                    ConfigError);
  }

  SUBCASE("reward always equals the breakdown sum") {
    cfg.variant = RewardVariant::SRRIP;
    for (int rep = 0; rep < 2; ++rep) {
      for (int intr = 0; intr < 2; ++intr) {
        const StepOutcome a = compute_reward(cfg, StepResult::Ongoing, std::nullopt,
                                             rep != 0, intr != 0, &detector);
        CHECK(a.reward == doctest::Approx(a.breakdown.total()).epsilon(1e-15));
        const StepOutcome b = compute_reward(cfg, StepResult::Ongoing,
                                             nonzero_features(), rep != 0,
                                             intr != 0, &detector);
        CHECK(b.reward == doctest::Approx(b.breakdown.total()).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("appendix dialogs: baseline total 17 and SRRP total 11.49") {
  // Baseline: three proceeding turns then a successful information turn.
  RewardConfig base;
  base.variant = RewardVariant::Baseline;
  double total = 0.0;
  for (int t = 0; t < 3; ++t) {
    total += compute_reward(base, StepResult::Ongoing, std::nullopt, false, false,
                            nullptr)
                 .reward;
  }
  total += compute_reward(base, StepResult::Success, std::nullopt, false, false,
                          nullptr)
               .reward;
  CHECK(std::fabs(total - 17.0) <= 1e-9);

  // SRRP: no match (-1), matched with score -4.01, repetition (-2.5),
  // no match (-1), success (+20); total 11.49.
  const ForestModel fixture = fixed_probs_forest(0.7525, 0.2475, 0.0);
  RewardConfig srrp;
  srrp.variant = RewardVariant::SRRP;
  double srrp_total = 0.0;
  srrp_total += compute_reward(srrp, StepResult::Ongoing, std::nullopt, false,
                               false, &fixture)
                    .reward;
  srrp_total += compute_reward(srrp, StepResult::Ongoing, nonzero_features(), false,
                               false, &fixture)
                    .reward;
  srrp_total += compute_reward(srrp, StepResult::Ongoing, std::nullopt, true,
                               false, &fixture)
                    .reward;
  srrp_total += compute_reward(srrp, StepResult::Ongoing, std::nullopt, false,
                               false, &fixture)
                    .reward;
  srrp_total += compute_reward(srrp, StepResult::Success, std::nullopt, false,
                               false, &fixture)
                    .reward;
  CHECK(std::fabs(srrp_total - 11.49) <= 1e-9);
}

TEST_CASE("stepping the environment: success path totals 17 under baseline") {
  EnvConfig env_cfg;
  env_cfg.noise_prob = 0.0;
  env_cfg.interruption_rate = 0.0;
  RewardConfig reward;
  reward.variant = RewardVariant::Baseline;
  SimEnv env(env_cfg, reward, nullptr, nullptr);
  std::uint64_t seed = 0;
  while (true) {  // find a covered goal
    if (env.reset(seed).second.is_covered()) break;
    ++seed;
  }
  auto [state, goal] = env.reset(seed);
  double total = 0.0;
  total += env.step(state, goal, SysAction::AskDeparture).reward;
  total += env.step(state, goal, SysAction::AskArrival).reward;
  total += env.step(state, goal, SysAction::AskTime).reward;
  CHECK(state.filled == std::array<bool, 3>{true, true, true});
  const StepOutcome last = env.step(state, goal, SysAction::GiveInfo);
  total += last.reward;
  CHECK(last.result == StepResult::Success);
  CHECK(std::fabs(total - 17.0) <= 1e-9);
}

TEST_CASE("running out of turns fails with only the terminal penalty") {
  EnvConfig env_cfg;
  env_cfg.noise_prob = 1.0;  // never fills a slot
  RewardConfig reward;
  reward.variant = RewardVariant::Baseline;
  SimEnv env(env_cfg, reward, nullptr, nullptr);
  auto [state, goal] = env.reset(12);
  StepOutcome out;
  int turns = 0;
  do {
    out = env.step(state, goal, SysAction::AskDeparture);
    ++turns;
  } while (!out.done);
  CHECK(turns == 15);
  CHECK(out.result == StepResult::Failure);
  CHECK(out.reward == doctest::Approx(-10.0));
  CHECK(out.breakdown.base == doctest::Approx(-10.0));
}

TEST_CASE("masked actions are rejected by step") {
  SimEnv env(EnvConfig{}, RewardConfig{}, nullptr, nullptr);
  auto [state, goal] = env.reset(1);
  CHECK_THROWS_AS(env.step(state, goal, SysAction::GiveInfo), std::logic_error);
}

TEST_CASE("filled slots never unfill and stats are monotone") {
  EnvConfig env_cfg;
  RewardConfig reward;
  SimEnv env(env_cfg, reward, nullptr, nullptr);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto [state, goal] = env.reset(seed);
    Rng policy(seed);
    std::array<bool, 3> seen{};
    SummaryStats prev;
    bool done = false;
    while (!done) {
      const auto mask = env.mask(state, goal);
      std::vector<int> allowed;
      for (int a = 0; a < kNumSysActions; ++a) {
        if (mask[a]) allowed.push_back(a);
      }
      const auto action = static_cast<SysAction>(allowed[policy.index(allowed.size())]);
      const StepOutcome out = env.step(state, goal, action);
      for (int s = 0; s < 3; ++s) {
        if (seen[s]) CHECK(state.filled[s]);
        seen[s] = state.filled[s];
      }
      for (int a = 0; a < kNumSysActions; ++a) {
        CHECK(state.stats.counts[a] >= prev.counts[a]);
      }
      prev = state.stats;
      done = out.done;
    }
  }
}

TEST_CASE("sample bank from a corpus: one row per user utterance") {
  Dialog d;
  d.dialog_id = "r1";
  const char* sys_texts[] = {"where are you leaving from?",
                             "where do you want to go?",
                             "where do you want to go?",
                             "there is a 61a at 5 pm."};
  for (int i = 0; i < 4; ++i) {
    Turn t;
    t.turn_index = i;
    t.user_text = "something";
    t.system_text = sys_texts[i];
    t.interrupted = i == 2;
    d.turns.push_back(t);
  }
  const std::vector<Dialog> corpus = {d};
  const SampleBank bank = build_sample_bank(corpus, ActionKeywordMap::defaults(), 3);
  REQUIRE(bank.rows().size() == 4);
  CHECK(bank.rows()[0].s_real.counts == std::array<int, 5>{1, 0, 0, 0, 0});
  CHECK(bank.rows()[1].s_real.counts == std::array<int, 5>{1, 1, 0, 0, 0});
  CHECK(bank.rows()[2].s_real.counts == std::array<int, 5>{1, 2, 0, 0, 0});
  CHECK(bank.rows()[3].s_real.counts == std::array<int, 5>{1, 2, 0, 1, 0});
  CHECK(bank.rows()[2].dialogic.interruption == 1);

  CHECK_THROWS_AS(build_sample_bank(std::vector<Dialog>{},
                                    ActionKeywordMap::defaults(), 3),
                  DataError);
}

TEST_CASE("sample bank file round trip") {
  SampleBankRow row;
  row.s_real.counts = {1, 2, 0, 0, 0};
  row.dialogic = nonzero_features();
  const SampleBank bank = tiny_bank({row, row});
  const std::string path = "t_bank_roundtrip.txt";
  bank.save(path);
  const SampleBank loaded = SampleBank::from_file(path, 3);
  std::remove(path.c_str());
  REQUIRE(loaded.rows().size() == 2);
  CHECK(loaded.rows()[0].s_real.counts == row.s_real.counts);
  CHECK(loaded.rows()[0].dialogic.to_array() == row.dialogic.to_array());
}

TEST_CASE("reward config kv round trip and validation") {
  RewardConfig cfg;
  cfg.variant = RewardVariant::SRRIP;
  cfg.max_turns = 12;
  const RewardConfig back = RewardConfig::from_kv(cfg.to_kv());
  CHECK(back.variant == RewardVariant::SRRIP);
  CHECK(back.max_turns == 12);
  CHECK(back.discount == doctest::Approx(0.9));

  RewardConfig bad;
  bad.discount = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(RewardConfig::from_kv({{"bogus_key", "1"}}), ConfigError);
}

TEST_CASE("trace lines carry action, match kind and breakdown") {
  StepOutcome out;
  out.action = SysAction::AskTime;
  out.match_kind = MatchKind::NoMatchRepetition;
  out.breakdown.repetition_penalty = -2.5;
  out.reward = -2.5;
  UserResponse ur;
  ur.act = UserAct{UserActType::Inform, std::nullopt};
  ur.repetition = true;
  out.user = ur;
  const std::string line = trace_line(out);
  CHECK(line.find("ask_time") != std::string::npos);
  CHECK(line.find("no_match_repetition") != std::string::npos);
  CHECK(line.find("rep_pen=-2.5") != std::string::npos);
}
