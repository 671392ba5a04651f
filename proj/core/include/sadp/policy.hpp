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

#ifndef SADP_POLICY_HPP
#define SADP_POLICY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sadp/corpus.hpp"
#include "sadp/features.hpp"
#include "sadp/forest.hpp"
#include "sadp/nn.hpp"
#include "sadp/sentiment.hpp"

namespace sadp {

enum class SlVariant { Baseline = 0, PlusDialogic = 1, PlusSentiment = 2 };
const char* sl_variant_name(SlVariant v);
std::optional<SlVariant> sl_variant_from_name(const std::string& name);

struct SlFeatureConfig {
  SlVariant variant = SlVariant::Baseline;
  bool use_bow = true;
  bool use_embedding = false;

  bool operator==(const SlFeatureConfig&) const = default;
};

// Plain-text embeddings: "word v1 ... vE" per line.
class EmbeddingTable {
 public:
  static EmbeddingTable from_file(const std::string& path);

  int dim() const { return dim_; }
  // Mean vector of in-vocabulary tokens; zeros when none match.
  Vec mean_vector(const std::string& text) const;

 private:
  int dim_ = 0;
  std::map<std::string, Vec> vectors_;
};

// Per-turn input layout: bag of words | mean embedding | entity presence (4)
// | last system action one-hot | variant extras (8 dialogic features, or the
// predicted sentiment label as a 3-dim one-hot).
class SlFeaturizer {
 public:
  SlFeatureConfig config;
  std::vector<std::string> bow_vocab;
  EntityLexicon lexicon;
  std::vector<std::string> template_texts;  // index = template id

  const EmbeddingTable* embeddings = nullptr;
  const ForestModel* detector = nullptr;          // plus_sentiment
  const TfidfVectorizer* detector_tfidf = nullptr;  // textual half of its input

  int action_count() const { return static_cast<int>(template_texts.size()); }
  int input_dim() const;
  // Stable digest of vocab, lexicon and templates; stored in model files so
  // a model never silently runs against a different feature space.
  std::uint64_t vocab_hash() const;

  // last_action_id: gold previous template for teacher forcing, the model's
  // own last prediction live, -1 on the first turn.
  Vec featurize_turn(const Dialog& dialog, int turn_index, int last_action_id) const;

  void check_ready() const;
};

SlFeaturizer build_sl_featurizer(std::span<const Dialog> corpus,
                                 const EntityLexicon& lexicon,
                                 const std::vector<ActionTemplate>& inventory,
                                 const SlFeatureConfig& config,
                                 const EmbeddingTable* embeddings = nullptr,
                                 const ForestModel* detector = nullptr,
                                 const TfidfVectorizer* detector_tfidf = nullptr);

struct SlExample {
  Vec input;
  int target = -1;
};

std::vector<SlExample> featurize_dialog(const Dialog& dialog,
                                        const SlFeaturizer& featurizer);

struct PolicyModel {
  SlFeatureConfig config;
  int input_dim = 0;
  int hidden = 128;
  std::uint64_t vocab_hash = 0;
  LstmCell cell;
  SoftmaxHead head;

  int action_count() const { return static_cast<int>(head.b.size()); }

  void save(const std::string& path) const;
  static PolicyModel load(const std::string& path);
  // Refuses models whose feature config or feature space digest mismatch.
  void check_compatible(const SlFeaturizer& featurizer) const;
};

struct SlTrainConfig {
  int hidden = 128;
  int epochs = 12;
  int patience = 3;  // early stop on dev weighted F1; <= 0 disables
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

struct SlMetrics {
  double weighted_f1 = 0.0;
  double dialog_accuracy = 0.0;
  double turn_accuracy = 0.0;
  int n_turns = 0;
  int n_dialogs = 0;
  EvalReport report;  // per-template confusion
};

// Sequence training over train-split dialogs: per-dialog forward, mean
// cross entropy over turns, one optimizer step per dialog. Early stopping
// tracks weighted F1 on the dev split when one exists.
PolicyModel train_sl(std::span<const Dialog> dialogs, const SlFeaturizer& featurizer,
                     const SlTrainConfig& config);

// Teacher-forced evaluation on the given split.
SlMetrics eval_sl(const PolicyModel& model, std::span<const Dialog> dialogs,
                  Split split, const SlFeaturizer& featurizer);

struct SlRunState {
  Vec h;
  Vec c;
  int last_action = -1;
};

// Argmax action for a live dialog, carrying LSTM state across calls.
int predict_action(const PolicyModel& model, SlRunState& state, const Vec& input);

}  // namespace sadp

#endif  // SADP_POLICY_HPP
