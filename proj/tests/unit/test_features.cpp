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

#include "doctest.h"
#include "sadp/errors.hpp"
#include "sadp/features.hpp"
#include "sadp/rng.hpp"

using namespace sadp;

namespace {

Dialog dialog_with_events(const std::vector<std::array<bool, 4>>& events) {
  Dialog d;
  d.dialog_id = "t";
  for (std::size_t i = 0; i < events.size(); ++i) {
    Turn t;
    t.turn_index = static_cast<int>(i);
    t.user_text = "u";
    t.system_text = "s";
    t.interrupted = events[i][0];
    t.button_used = events[i][1];
    t.repetition = events[i][2];
    t.start_over = events[i][3];
    d.turns.push_back(t);
  }
  return d;
}

}  // namespace

TEST_CASE("dialogic features: zero turn and inclusive prefix sums") {
  const Dialog d = dialog_with_events({{false, false, false, false},
                                       {true, false, false, false},
                                       {true, false, true, false}});
  const DialogicFeatures zero = extract_dialogic(d, 0);
  for (double v : zero.to_array()) CHECK(v == 0.0);

  const DialogicFeatures at2 = extract_dialogic(d, 2);
  CHECK(at2.interruption == 1);
  CHECK(at2.total_interruptions == 2);
  CHECK(at2.repetition == 1);
  CHECK(at2.total_repetitions == 1);
  CHECK_THROWS_AS(extract_dialogic(d, 3), ConfigError);
  CHECK_THROWS_AS(extract_dialogic(d, -1), ConfigError);
}

TEST_CASE("dialogic features: all events on turn 0 give unit flags and totals") {
  const Dialog d = dialog_with_events({{true, true, true, true}});
  const auto f = extract_dialogic(d, 0).to_array();
  for (double v : f) CHECK(v == 1.0);
}

TEST_CASE("dialogic features match a prefix-sum oracle on random dialogs") {
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::array<bool, 4>> events(1 + rng.index(12));
    for (auto& e : events) {
      for (int k = 0; k < 4; ++k) e[k] = rng.bernoulli(0.3);
    }
    const Dialog d = dialog_with_events(events);
    std::array<double, 4> totals{};
    std::array<double, 8> prev{};
    for (std::size_t t = 0; t < events.size(); ++t) {
      for (int k = 0; k < 4; ++k) totals[k] += events[t][k] ? 1 : 0;
      const auto f = extract_dialogic(d, static_cast<int>(t)).to_array();
      CHECK(f[0] == (events[t][0] ? 1 : 0));
      CHECK(f[1] == totals[0]);
      CHECK(f[2] == (events[t][1] ? 1 : 0));
      CHECK(f[3] == totals[1]);
      CHECK(f[4] == (events[t][2] ? 1 : 0));
      CHECK(f[5] == totals[2]);
      CHECK(f[6] == (events[t][3] ? 1 : 0));
      CHECK(f[7] == totals[3]);
      // Cumulative fields dominate per-turn flags and never decrease.
      for (int k = 0; k < 4; ++k) {
        CHECK(f[2 * k + 1] >= f[2 * k]);
        CHECK(f[2 * k + 1] >= prev[2 * k + 1]);
      }
      prev = f;
    }
    // Final-turn totals equal whole-dialog event counts.
    const auto last = extract_dialogic(d, static_cast<int>(events.size()) - 1).to_array();
    CHECK(last[1] == totals[0]);
    CHECK(last[3] == totals[1]);
    CHECK(last[5] == totals[2]);
    CHECK(last[7] == totals[3]);
  }
}

TEST_CASE("user repeat-request and start-over acts merge into the flags") {
  Dialog d = dialog_with_events({{false, false, false, false}});
  d.turns[0].user_act = UserAct{UserActType::RepeatRequest, std::nullopt};
  CHECK(extract_dialogic(d, 0).repetition == 1);
  d.turns[0].user_act = UserAct{UserActType::StartOver, std::nullopt};
  const auto f = extract_dialogic(d, 0);
  CHECK(f.repetition == 0);
  CHECK(f.start_over == 1);
}

TEST_CASE("tfidf: hand-evaluated idf cases") {
  // One document "a b": idf = ln(2/2) + 1 = 1 for both terms.
  const std::vector<std::string> one_doc = {"a b"};
  const TfidfVectorizer v = TfidfVectorizer::fit(one_doc, 1);
  REQUIRE(v.dim() == 2);
  CHECK(v.idf()[0] == doctest::Approx(1.0));
  CHECK(v.idf()[1] == doctest::Approx(1.0));

  // Term in every one of 10 documents: idf = ln(11/11) + 1 = 1.
  std::vector<std::string> ten(10, "common");
  const TfidfVectorizer v10 = TfidfVectorizer::fit(ten, 1);
  CHECK(v10.idf()[0] == doctest::Approx(1.0));

  // min_df = 2 excludes singletons.
  const std::vector<std::string> docs = {"alpha beta", "beta gamma"};
  const TfidfVectorizer v2 = TfidfVectorizer::fit(docs, 2);
  CHECK(v2.dim() == 1);
  CHECK(v2.vocabulary().contains("beta"));

  CHECK_THROWS_AS(TfidfVectorizer::fit(std::vector<std::string>{}, 1), ConfigError);
}

TEST_CASE("tfidf transform: formula and normalization") {
  const std::vector<std::string> docs = {"a b"};
  const TfidfVectorizer v = TfidfVectorizer::fit(docs, 1);

  SUBCASE("empty utterance is the zero vector") {
    const auto dense = v.transform_dense("");
    for (double x : dense) CHECK(x == 0.0);
  }
  SUBCASE("single known token is a unit vector") {
    const auto dense = v.transform_dense("a");
    CHECK(dense[0] == doctest::Approx(1.0));
    CHECK(dense[1] == 0.0);
  }
  SUBCASE("counts scale before normalization: 'a a b' -> (2,1)/sqrt(5)") {
    const auto dense = v.transform_dense("a a b");
    CHECK(dense[0] == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(dense[1] == doctest::Approx(1.0 / std::sqrt(5.0)));
  }
  SUBCASE("out-of-vocabulary tokens are ignored") {
    const auto dense = v.transform_dense("a zzz");
    CHECK(dense[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("tfidf transforms have L2 norm zero or one") {
  const std::vector<std::string> docs = {"the bus to downtown", "the next bus",
                                         "when is the bus", "downtown please"};
  const TfidfVectorizer v = TfidfVectorizer::fit(docs, 1);
  Rng rng(7);
  const std::vector<std::string> probes = {"the bus", "downtown downtown bus",
                                           "zzz", "", "when when when the"};
  for (const std::string& probe : probes) {
    double norm = 0.0;
    for (double x : v.transform_dense(probe)) norm += x * x;
    norm = std::sqrt(norm);
    CHECK((std::fabs(norm) <= 1e-9 || std::fabs(norm - 1.0) <= 1e-9));
  }
}

TEST_CASE("acoustic table parsing") {
  const std::string csv = "key,f0,f1\nk1,0.5,-1.5\nk2,2.25,0\n";
  const AcousticTable t = AcousticTable::from_csv(csv);
  CHECK(t.dim() == 2);
  CHECK(t.size() == 2);
  REQUIRE(t.find("k1") != nullptr);
  CHECK((*t.find("k1"))[1] == doctest::Approx(-1.5));
  CHECK(t.find("missing") == nullptr);

  CHECK_THROWS_AS(AcousticTable::from_csv("key,f0\nk1,not_a_number\n"), DataError);
  CHECK_THROWS_AS(AcousticTable::from_csv("key,f0\nk1,1\nk1,2\n"), DataError);
  CHECK_THROWS_AS(AcousticTable::from_csv("key,f0\nk1,inf\n"), DataError);
  CHECK_THROWS_AS(AcousticTable::from_csv("key,f0\nk1,1,2\n"), DataError);
}

TEST_CASE("feature selection ranks a perfect predictor first") {
  Rng rng(31);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    const int label = static_cast<int>(rng.index(2));
    // feature 1 predicts the label perfectly; 0 and 2 are constant.
    X.push_back({0.5, label == 0 ? -1.0 + 0.01 * rng.uniform() : 1.0 + 0.01 * rng.uniform(),
                 -2.0});
    y.push_back(label);
  }
  ForestHyper hyper;
  hyper.n_trees = 10;
  hyper.features_per_split = 3;
  const FeatureSelector sel = select_features(X, y, 1, 5, hyper);
  CHECK(sel.ranking[0].index == 1);
  CHECK(sel.ranking[0].score > 0.0);
  // Constant features gain no impurity decrease.
  CHECK(sel.ranking[1].score == 0.0);
  CHECK(sel.ranking[2].score == 0.0);

  SUBCASE("k equal to the feature count keeps everything, scores reported") {
    const FeatureSelector all = select_features(X, y, 3, 5, hyper);
    CHECK(all.k == 3);
    CHECK(all.ranking.size() == 3);
    for (std::size_t r = 1; r < all.ranking.size(); ++r) {
      CHECK(all.ranking[r - 1].score >= all.ranking[r].score);
    }
  }
  SUBCASE("k larger than the feature count is rejected") {
    CHECK_THROWS_AS(select_features(X, y, 4, 5, hyper), ConfigError);
  }
  SUBCASE("selection applies by index") {
    const FeatureSelector one = select_features(X, y, 1, 5, hyper);
    const auto reduced = one.apply(std::vector<double>{9.0, 7.0, 5.0});
    REQUIRE(reduced.size() == 1);
    CHECK(reduced[0] == 7.0);
  }
}

TEST_CASE("appending constant features does not change the selected set") {
  Rng rng(41);
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < 100; ++i) {
    const int label = static_cast<int>(rng.index(2));
    X.push_back({label + rng.uniform(-0.3, 0.3), rng.uniform(-1, 1)});
    y.push_back(label);
  }
  ForestHyper hyper;
  hyper.n_trees = 15;
  hyper.features_per_split = 2;
  const FeatureSelector base = select_features(X, y, 2, 9, hyper);

  std::vector<std::vector<double>> X2 = X;
  for (auto& row : X2) row.push_back(3.14);  // zero-variance tail feature
  ForestHyper hyper2 = hyper;
  hyper2.features_per_split = 3;
  const FeatureSelector extended = select_features(X2, y, 2, 9, hyper2);
  // The constant feature never enters the top k.
  for (int j = 0; j < extended.k; ++j) CHECK(extended.ranking[j].index != 2);
}

TEST_CASE("selector export is rank,index,name,score") {
  FeatureSelector sel;
  sel.k = 2;
  sel.ranking = {{1, 3.5}, {0, 1.25}};
  const std::vector<std::string> names = {"zero", "one"};
  const std::string csv = sel.to_csv(names);
  CHECK(csv.find("rank,index,name,score\n") == 0);
  CHECK(csv.find("0,1,one,3.5") != std::string::npos);
  CHECK(csv.find("1,0,zero,1.25") != std::string::npos);
}

TEST_CASE("concat_features checks the declared layout") {
  const std::vector<std::vector<double>> empty_plus = {{}, {4.0}};
  const std::vector<int> dims01 = {0, 1};
  CHECK(concat_features(empty_plus, dims01) == std::vector<double>{4.0});

  const std::vector<std::vector<double>> pair = {{1.0}, {2.0}};
  const std::vector<int> dims11 = {1, 1};
  CHECK(concat_features(pair, dims11) == std::vector<double>{1.0, 2.0});

  const std::vector<std::vector<double>> parts = {
      std::vector<double>(20, 0.0), std::vector<double>(8, 0.0),
      std::vector<double>(164, 0.0)};
  const std::vector<int> dims = {20, 8, 164};
  CHECK(concat_features(parts, dims).size() == 192);

  const std::vector<int> wrong = {21, 8, 164};
  CHECK_THROWS_AS(concat_features(parts, wrong), ConfigError);
}
