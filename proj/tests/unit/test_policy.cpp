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
#include <cstdio>

#include "doctest.h"
#include "sadp/errors.hpp"
#include "sadp/policy.hpp"

using namespace sadp;

namespace {

// Tiny fixed corpus: the system asks, the user informs a place, repeat.
std::vector<Dialog> tiny_corpus(int n_dialogs, int turns_each) {
  std::vector<Dialog> dialogs;
  for (int i = 0; i < n_dialogs; ++i) {
    Dialog d;
    d.dialog_id = "d" + std::to_string(i);
    d.split = i % 5 == 4 ? Split::Test : Split::Train;
    for (int t = 0; t < turns_each; ++t) {
      Turn turn;
      turn.turn_index = t;
      turn.user_text = t % 2 == 0 ? "leaving from forbes avenue" : "yes please";
      turn.system_text = t % 2 == 0 ? "where do you want to go?"
                                    : "what time do you want to travel?";
      d.turns.push_back(turn);
    }
    dialogs.push_back(d);
  }
  return dialogs;
}

struct Fixture {
  std::vector<Dialog> dialogs;
  EntityLexicon lexicon;
  std::vector<ActionTemplate> inventory;

  explicit Fixture(int n_dialogs = 10, int turns_each = 4)
      : dialogs(tiny_corpus(n_dialogs, turns_each)), lexicon(synth_lexicon()) {
    inventory = build_template_inventory(dialogs, lexicon);
    assign_action_ids(dialogs, inventory, lexicon);
  }
};

ForestModel always_neutral_detector() {
  ForestModel m;
  m.n_features = 0;  // patched below by caller knowledge: input = 8 + tfidf dim
  m.n_classes = 3;
  DecisionTree tree;
  TreeNode leaf;
  leaf.counts = {0.0, 5.0, 0.0};
  tree.nodes.push_back(leaf);
  m.trees.push_back(tree);
  return m;
}

}  // namespace

TEST_CASE("featurizer dimensions per variant") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer base =
      build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  const int v = static_cast<int>(base.bow_vocab.size());
  const int a = static_cast<int>(fx.inventory.size());
  CHECK(base.input_dim() == v + 4 + a);

  SlFeatureConfig dia = cfg;
  dia.variant = SlVariant::PlusDialogic;
  const SlFeaturizer with_dialogic =
      build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, dia);
  CHECK(with_dialogic.input_dim() == base.input_dim() + 8);

  std::vector<std::string> texts = {"leaving from forbes avenue", "yes please"};
  const TfidfVectorizer tfidf = TfidfVectorizer::fit(texts, 1);
  ForestModel detector = always_neutral_detector();
  detector.n_features = 8 + tfidf.dim();
  SlFeatureConfig sen = cfg;
  sen.variant = SlVariant::PlusSentiment;
  const SlFeaturizer with_sentiment = build_sl_featurizer(
      fx.dialogs, fx.lexicon, fx.inventory, sen, nullptr, &detector, &tfidf);
  CHECK(with_sentiment.input_dim() == base.input_dim() + 3);
}

TEST_CASE("first turn encodes no previous action as all zeros") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  const Vec x0 = f.featurize_turn(fx.dialogs[0], 0, -1);
  const int v = static_cast<int>(f.bow_vocab.size());
  const int a_offset = v + 4;
  for (int a = 0; a < f.action_count(); ++a) CHECK(x0[a_offset + a] == 0.0);

  const Vec x1 = f.featurize_turn(fx.dialogs[0], 1, 0);
  CHECK(x1[a_offset + 0] == 1.0);
}

TEST_CASE("plus_sentiment appends the predicted one-hot (neutral -> 0,1,0)") {
  Fixture fx;
  std::vector<std::string> texts;
  for (const Dialog& d : fx.dialogs) {
    for (const Turn& t : d.turns) texts.push_back(t.user_text);
  }
  const TfidfVectorizer tfidf = TfidfVectorizer::fit(texts, 1);
  ForestModel detector = always_neutral_detector();
  detector.n_features = 8 + tfidf.dim();

  SlFeatureConfig cfg;
  cfg.variant = SlVariant::PlusSentiment;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory,
                                             cfg, nullptr, &detector, &tfidf);
  const Vec x = f.featurize_turn(fx.dialogs[0], 0, -1);
  const std::size_t n = x.size();
  CHECK(x[n - 3] == 0.0);
  CHECK(x[n - 2] == 1.0);
  CHECK(x[n - 1] == 0.0);
}

TEST_CASE("plus_sentiment without a detector is an error") {
  Fixture fx;
  SlFeatureConfig cfg;
  cfg.variant = SlVariant::PlusSentiment;
  CHECK_THROWS_AS(build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg),
                  ConfigError);
}

TEST_CASE("entity presence accumulates over the dialog state") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  const int v = static_cast<int>(f.bow_vocab.size());
  // Turn 0 mentions a place; turn 1 ("yes please") must still show it.
  const Vec x1 = f.featurize_turn(fx.dialogs[0], 1, 0);
  CHECK(x1[v + static_cast<int>(EntityType::Place)] == 1.0);
}

TEST_CASE("epochs=0 returns the seeded initialization unchanged") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  SlTrainConfig tc;
  tc.hidden = 8;
  tc.epochs = 0;
  tc.seed = 5;
  const PolicyModel a = train_sl(fx.dialogs, f, tc);
  const PolicyModel b = train_sl(fx.dialogs, f, tc);
  CHECK(flatten_params(a.cell, a.head) == flatten_params(b.cell, b.head));

  SlTrainConfig trained = tc;
  trained.epochs = 1;
  const PolicyModel c = train_sl(fx.dialogs, f, trained);
  CHECK(flatten_params(a.cell, a.head) != flatten_params(c.cell, c.head));
}

TEST_CASE("training on an alternating two-template corpus converges") {
  Fixture fx(12, 4);
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  SlTrainConfig tc;
  tc.hidden = 12;
  tc.epochs = 30;
  tc.patience = 0;  // no dev split in this fixture
  tc.seed = 3;
  const PolicyModel model = train_sl(fx.dialogs, f, tc);
  const SlMetrics metrics = eval_sl(model, fx.dialogs, Split::Test, f);
  CHECK(metrics.weighted_f1 == doctest::Approx(1.0));
  CHECK(metrics.dialog_accuracy == doctest::Approx(1.0));
  CHECK(metrics.turn_accuracy == doctest::Approx(1.0));
}

TEST_CASE("dialog accuracy counts only fully correct dialogs") {
  // Inventory with two templates; train so the model always predicts the
  // majority template, then evaluate on one all-majority dialog and one
  // dialog with a single minority turn.
  EntityLexicon lexicon = synth_lexicon();
  std::vector<Dialog> train_dialogs;
  for (int i = 0; i < 8; ++i) {
    Dialog d;
    d.dialog_id = "train" + std::to_string(i);
    d.split = Split::Train;
    for (int t = 0; t < 3; ++t) {
      Turn turn;
      turn.turn_index = t;
      turn.user_text = "hello";
      turn.system_text = "where do you want to go?";
      d.turns.push_back(turn);
    }
    train_dialogs.push_back(d);
  }
  // One training dialog carries the second template so it exists in the
  // inventory, drowned out by the majority.
  Dialog rare;
  rare.dialog_id = "rare";
  rare.split = Split::Train;
  for (int t = 0; t < 3; ++t) {
    Turn turn;
    turn.turn_index = t;
    turn.user_text = "hello";
    turn.system_text =
        t == 2 ? "what time do you want to travel?" : "where do you want to go?";
    rare.turns.push_back(turn);
  }
  train_dialogs.push_back(rare);

  Dialog all_majority;
  all_majority.dialog_id = "ev1";
  all_majority.split = Split::Test;
  Dialog one_minority;
  one_minority.dialog_id = "ev2";
  one_minority.split = Split::Test;
  for (int t = 0; t < 2; ++t) {
    Turn turn;
    turn.turn_index = t;
    turn.user_text = "hello";
    turn.system_text = "where do you want to go?";
    all_majority.turns.push_back(turn);
    Turn turn2 = turn;
    turn2.system_text =
        t == 1 ? "what time do you want to travel?" : "where do you want to go?";
    one_minority.turns.push_back(turn2);
  }
  train_dialogs.push_back(all_majority);
  train_dialogs.push_back(one_minority);

  const auto inventory = build_template_inventory(train_dialogs, lexicon);
  assign_action_ids(train_dialogs, inventory, lexicon);
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(train_dialogs, lexicon, inventory, cfg);
  SlTrainConfig tc;
  tc.hidden = 8;
  tc.epochs = 8;
  tc.patience = 0;
  const PolicyModel model = train_sl(train_dialogs, f, tc);

  const SlMetrics m = eval_sl(model, train_dialogs, Split::Test, f);
  CHECK(m.n_dialogs == 2);
  CHECK(m.dialog_accuracy == doctest::Approx(0.5));
  CHECK(m.turn_accuracy == doctest::Approx(0.75));
  CHECK(m.dialog_accuracy <= m.turn_accuracy);
}

TEST_CASE("teacher-forced evaluation is exactly reproducible") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  SlTrainConfig tc;
  tc.hidden = 8;
  tc.epochs = 2;
  tc.patience = 0;
  const PolicyModel model = train_sl(fx.dialogs, f, tc);
  const SlMetrics a = eval_sl(model, fx.dialogs, Split::Test, f);
  const SlMetrics b = eval_sl(model, fx.dialogs, Split::Test, f);
  CHECK(a.weighted_f1 == b.weighted_f1);
  CHECK(a.dialog_accuracy == b.dialog_accuracy);
}

TEST_CASE("a zeroed extra feature block leaves initial predictions unchanged") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  SlTrainConfig tc;
  tc.hidden = 8;
  tc.epochs = 0;
  tc.seed = 9;
  const PolicyModel base = train_sl(fx.dialogs, f, tc);

  // Extend the input layout by three zero features and zero-init the new
  // weight columns; the contract guarantees placement at the tail.
  PolicyModel extended = base;
  extended.input_dim += 3;
  extended.cell.input_size += 3;
  extended.cell.wx = Mat(base.cell.wx.rows, base.cell.wx.cols + 3);
  for (int r = 0; r < base.cell.wx.rows; ++r) {
    for (int c = 0; c < base.cell.wx.cols; ++c) {
      extended.cell.wx(r, c) = base.cell.wx(r, c);
    }
  }

  const std::vector<SlExample> examples = featurize_dialog(fx.dialogs[0], f);
  std::vector<Vec> inputs, inputs_ext;
  for (const SlExample& ex : examples) {
    inputs.push_back(ex.input);
    Vec padded = ex.input;
    padded.insert(padded.end(), {0.0, 0.0, 0.0});
    inputs_ext.push_back(padded);
  }
  const auto da = forward_sequence(base.cell, base.head, inputs);
  const auto db = forward_sequence(extended.cell, extended.head, inputs_ext);
  for (std::size_t t = 0; t < da.size(); ++t) {
    for (std::size_t j = 0; j < da[t].size(); ++j) {
      CHECK(da[t][j] == doctest::Approx(db[t][j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("model persistence round trip and compatibility checks") {
  Fixture fx;
  SlFeatureConfig cfg;
  const SlFeaturizer f = build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, cfg);
  SlTrainConfig tc;
  tc.hidden = 8;
  tc.epochs = 2;
  tc.patience = 0;
  const PolicyModel model = train_sl(fx.dialogs, f, tc);

  const std::string path = "t_sl_policy.json";
  model.save(path);
  const PolicyModel loaded = PolicyModel::load(path);
  std::remove(path.c_str());

  const SlMetrics a = eval_sl(model, fx.dialogs, Split::Test, f);
  const SlMetrics b = eval_sl(loaded, fx.dialogs, Split::Test, f);
  CHECK(a.weighted_f1 == b.weighted_f1);
  CHECK(a.dialog_accuracy == b.dialog_accuracy);

  // A featurizer with a different variant must be refused.
  SlFeatureConfig other = cfg;
  other.variant = SlVariant::PlusDialogic;
  const SlFeaturizer f2 =
      build_sl_featurizer(fx.dialogs, fx.lexicon, fx.inventory, other);
  CHECK_THROWS_AS(eval_sl(loaded, fx.dialogs, Split::Test, f2), ConfigError);

  // A featurizer over a different corpus (different vocab) is refused too.
  Fixture fx2(6, 2);
  for (Dialog& d : fx2.dialogs) {
    for (Turn& t : d.turns) t.user_text += " extra tokens here";
  }
  const auto inventory2 = build_template_inventory(fx2.dialogs, fx2.lexicon);
  const SlFeaturizer f3 =
      build_sl_featurizer(fx2.dialogs, fx2.lexicon, inventory2, cfg);
  CHECK_THROWS_AS(loaded.check_compatible(f3), ConfigError);
}

TEST_CASE("predict_action: zero model ties break to template 0, deterministic") {
  PolicyModel model;
  model.hidden = 4;
  model.input_dim = 6;
  model.cell.input_size = 6;
  model.cell.hidden_size = 4;
  model.cell.wx = Mat(16, 6);
  model.cell.wh = Mat(16, 4);
  model.cell.b.assign(16, 0.0);
  model.head.w = Mat(3, 4);
  model.head.b.assign(3, 0.0);

  SlRunState state;
  const Vec input(6, 0.5);
  const int a1 = predict_action(model, state, input);
  CHECK(a1 == 0);
  SlRunState state2;
  const int a2 = predict_action(model, state2, input);
  CHECK(a2 == a1);
  CHECK(state.last_action == 0);
}

TEST_CASE("training requires assigned action ids") {
  Fixture fx;
  std::vector<Dialog> unassigned = fx.dialogs;
  for (Dialog& d : unassigned) {
    for (Turn& t : d.turns) t.system_action_id = -1;
  }
  SlFeatureConfig cfg;
  const SlFeaturizer f =
      build_sl_featurizer(unassigned, fx.lexicon, fx.inventory, cfg);
  SlTrainConfig tc;
  tc.epochs = 1;
  CHECK_THROWS_AS(train_sl(unassigned, f, tc), DataError);
}
