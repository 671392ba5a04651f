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

#include "sadp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sadp/errors.hpp"
#include "sadp/io.hpp"

namespace sadp {

const char* sl_variant_name(SlVariant v) {
  switch (v) {
    case SlVariant::Baseline: return "baseline";
    case SlVariant::PlusDialogic: return "plus_dialogic";
    case SlVariant::PlusSentiment: return "plus_sentiment";
  }
  return "baseline";
}

std::optional<SlVariant> sl_variant_from_name(const std::string& name) {
  for (int v = 0; v < 3; ++v) {
    if (name == sl_variant_name(static_cast<SlVariant>(v))) {
      return static_cast<SlVariant>(v);
    }
  }
  return std::nullopt;
}

EmbeddingTable EmbeddingTable::from_file(const std::string& path) {
  EmbeddingTable table;
  int line_no = 0;
  for (const std::string& raw : read_lines(path)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string word;
    in >> word;
    Vec vec;
    double v;
    while (in >> v) vec.push_back(v);
    if (vec.empty()) {
      throw DataError("embedding line " + std::to_string(line_no) + ": no values");
    }
    if (table.dim_ == 0) table.dim_ = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != table.dim_) {
      throw DataError("embedding line " + std::to_string(line_no) +
                      ": dimension mismatch");
    }
    table.vectors_[word] = std::move(vec);
  }
  if (table.vectors_.empty()) throw DataError("embedding file is empty: " + path);
  return table;
}

Vec EmbeddingTable::mean_vector(const std::string& text) const {
  Vec mean(dim_, 0.0);
  int n = 0;
  for (const std::string& tok : tokenize(text)) {
    auto it = vectors_.find(tok);
    if (it == vectors_.end()) continue;
    for (int j = 0; j < dim_; ++j) mean[j] += it->second[j];
    ++n;
  }
  if (n > 0) {
    for (double& v : mean) v /= n;
  }
  return mean;
}

int SlFeaturizer::input_dim() const {
  int dim = 0;
  if (config.use_bow) dim += static_cast<int>(bow_vocab.size());
  if (config.use_embedding) dim += embeddings ? embeddings->dim() : 0;
  dim += kNumEntityTypes;
  dim += action_count();
  if (config.variant == SlVariant::PlusDialogic) dim += kDialogicDim;
  if (config.variant == SlVariant::PlusSentiment) dim += kNumSentimentClasses;
  return dim;
}

std::uint64_t SlFeaturizer::vocab_hash() const {
  // FNV-1a over the feature space definition.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto eat = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    h ^= 0xff;
    h *= 0x100000001b3ull;
  };
  for (const std::string& w : bow_vocab) eat(w);
  for (const auto& [surface, type] : lexicon.surfaces()) {
    eat(surface);
    eat(entity_type_name(type));
  }
  for (const std::string& t : template_texts) eat(t);
  return h;
}

void SlFeaturizer::check_ready() const {
  if (template_texts.empty()) {
    throw ConfigError("featurizer has no action templates");
  }
  if (config.use_embedding && !embeddings) {
    throw ConfigError("use_embedding set but no embedding table supplied");
  }
  if (config.variant == SlVariant::PlusSentiment) {
    if (!detector) {
      throw ConfigError("plus_sentiment needs a trained sentiment detector");
    }
    if (!detector_tfidf) {
      throw ConfigError("plus_sentiment needs the detector's tfidf vectorizer");
    }
  }
}

Vec SlFeaturizer::featurize_turn(const Dialog& dialog, int turn_index,
                                 int last_action_id) const {
  check_ready();
  if (turn_index < 0 || turn_index >= static_cast<int>(dialog.turns.size())) {
    throw ConfigError("featurize_turn: turn index out of range");
  }
  const Turn& turn = dialog.turns[turn_index];
  Vec x;
  x.reserve(input_dim());

  if (config.use_bow) {
    Vec bow(bow_vocab.size(), 0.0);
    for (const std::string& tok : tokenize(turn.user_text)) {
      auto it = std::lower_bound(bow_vocab.begin(), bow_vocab.end(), tok);
      if (it != bow_vocab.end() && *it == tok) {
        bow[static_cast<std::size_t>(it - bow_vocab.begin())] = 1.0;
      }
    }
    x.insert(x.end(), bow.begin(), bow.end());
  }
  if (config.use_embedding) {
    const Vec emb = embeddings->mean_vector(turn.user_text);
    x.insert(x.end(), emb.begin(), emb.end());
  }

  // Entity presence in the dialog state: any user turn so far mentioned it.
  std::array<bool, kNumEntityTypes> present{};
  for (int i = 0; i <= turn_index; ++i) {
    for (const Binding& b : delexicalize(dialog.turns[i].user_text, lexicon).bindings) {
      present[static_cast<int>(b.type)] = true;
    }
  }
  for (bool p : present) x.push_back(p ? 1.0 : 0.0);

  Vec last(action_count(), 0.0);
  if (last_action_id >= 0) {
    if (last_action_id >= action_count()) {
      throw ConfigError("featurize_turn: last action id out of range");
    }
    last[last_action_id] = 1.0;
  }
  x.insert(x.end(), last.begin(), last.end());

  if (config.variant == SlVariant::PlusDialogic) {
    const auto d = extract_dialogic(dialog, turn_index).to_array();
    x.insert(x.end(), d.begin(), d.end());
  } else if (config.variant == SlVariant::PlusSentiment) {
    const auto d = extract_dialogic(dialog, turn_index).to_array();
    Vec det_in(d.begin(), d.end());
    const Vec text = detector_tfidf->transform_dense(turn.user_text);
    det_in.insert(det_in.end(), text.begin(), text.end());
    const SentimentLabel label = predict_label(*detector, det_in);
    for (int c = 0; c < kNumSentimentClasses; ++c) {
      x.push_back(c == static_cast<int>(label) ? 1.0 : 0.0);
    }
  }
  return x;
}

SlFeaturizer build_sl_featurizer(std::span<const Dialog> corpus,
                                 const EntityLexicon& lexicon,
                                 const std::vector<ActionTemplate>& inventory,
                                 const SlFeatureConfig& config,
                                 const EmbeddingTable* embeddings,
                                 const ForestModel* detector,
                                 const TfidfVectorizer* detector_tfidf) {
  SlFeaturizer f;
  f.config = config;
  f.lexicon = lexicon;
  f.embeddings = embeddings;
  f.detector = detector;
  f.detector_tfidf = detector_tfidf;
  for (const ActionTemplate& t : inventory) f.template_texts.push_back(t.delexicalized_text);
  if (config.use_bow) {
    std::set<std::string> vocab;
    for (const Dialog& d : corpus) {
      for (const Turn& t : d.turns) {
        for (const std::string& tok : tokenize(t.user_text)) vocab.insert(tok);
      }
    }
    f.bow_vocab.assign(vocab.begin(), vocab.end());
  }
  f.check_ready();
  return f;
}

std::vector<SlExample> featurize_dialog(const Dialog& dialog,
                                        const SlFeaturizer& featurizer) {
  std::vector<SlExample> examples;
  examples.reserve(dialog.turns.size());
  int last_action = -1;
  for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
    SlExample ex;
    ex.input = featurizer.featurize_turn(dialog, static_cast<int>(t), last_action);
    ex.target = dialog.turns[t].system_action_id;
    if (ex.target < 0 || ex.target >= featurizer.action_count()) {
      throw DataError("dialog " + dialog.dialog_id +
                      " has unassigned or out-of-range action ids; build the "
                      "template inventory first");
    }
    last_action = ex.target;  // teacher forcing: gold history
    examples.push_back(std::move(ex));
  }
  return examples;
}

void PolicyModel::save(const std::string& path) const {
  nlohmann::json j;
  j["kind"] = "sl-policy";
  j["version"] = 1;
  j["variant"] = sl_variant_name(config.variant);
  j["use_bow"] = config.use_bow;
  j["use_embedding"] = config.use_embedding;
  j["input_dim"] = input_dim;
  j["hidden"] = hidden;
  j["actions"] = action_count();
  j["vocab_hash"] = vocab_hash;
  j["wx"] = cell.wx.a;
  j["wh"] = cell.wh.a;
  j["b"] = cell.b;
  j["head_w"] = head.w.a;
  j["head_b"] = head.b;
  write_file(path, j.dump());
}

PolicyModel PolicyModel::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse model file " + path + ": " + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != "sl-policy") {
    throw DataError("not an sl policy model file: " + path);
  }
  if (j.value("version", 0) != 1) {
    throw DataError("unsupported sl policy version in " + path);
  }
  PolicyModel m;
  const auto variant = sl_variant_from_name(j.at("variant").get<std::string>());
  if (!variant) throw DataError("unknown variant in model file: " + path);
  m.config.variant = *variant;
  m.config.use_bow = j.at("use_bow").get<bool>();
  m.config.use_embedding = j.at("use_embedding").get<bool>();
  m.input_dim = j.at("input_dim").get<int>();
  m.hidden = j.at("hidden").get<int>();
  m.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
  const int actions = j.at("actions").get<int>();
  m.cell.input_size = m.input_dim;
  m.cell.hidden_size = m.hidden;
  m.cell.wx = Mat(4 * m.hidden, m.input_dim);
  m.cell.wh = Mat(4 * m.hidden, m.hidden);
  m.cell.wx.a = j.at("wx").get<std::vector<double>>();
  m.cell.wh.a = j.at("wh").get<std::vector<double>>();
  m.cell.b = j.at("b").get<std::vector<double>>();
  m.head.w = Mat(actions, m.hidden);
  m.head.w.a = j.at("head_w").get<std::vector<double>>();
  m.head.b = j.at("head_b").get<std::vector<double>>();
  if (m.cell.wx.a.size() != static_cast<std::size_t>(4 * m.hidden) * m.input_dim ||
      m.cell.wh.a.size() != static_cast<std::size_t>(4 * m.hidden) * m.hidden ||
      m.cell.b.size() != static_cast<std::size_t>(4 * m.hidden) ||
      m.head.w.a.size() != static_cast<std::size_t>(actions) * m.hidden ||
      m.head.b.size() != static_cast<std::size_t>(actions)) {
    throw DataError("model file tensor sizes are inconsistent: " + path);
  }
  return m;
}

void PolicyModel::check_compatible(const SlFeaturizer& featurizer) const {
  if (!(config == featurizer.config)) {
    throw ConfigError("model feature config does not match the featurizer");
  }
  if (input_dim != featurizer.input_dim()) {
    throw ConfigError("model input dimension " + std::to_string(input_dim) +
                      " does not match featurizer dimension " +
                      std::to_string(featurizer.input_dim()));
  }
  if (action_count() != featurizer.action_count()) {
    throw ConfigError("model action count does not match the template inventory");
  }
  if (vocab_hash != featurizer.vocab_hash()) {
    throw ConfigError("model was trained against a different vocabulary/lexicon/"
                      "template set");
  }
}

namespace {

int argmax_lowest(const Vec& v) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(v.size()); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return best;
}

struct EvalCounts {
  std::vector<int> gold;
  std::vector<int> predicted;
  int dialogs_all_correct = 0;
  int n_dialogs = 0;
};

void eval_dialog(const PolicyModel& model, const Dialog& dialog,
                 const SlFeaturizer& featurizer, EvalCounts& counts) {
  const std::vector<SlExample> examples = featurize_dialog(dialog, featurizer);
  std::vector<Vec> inputs;
  inputs.reserve(examples.size());
  for (const SlExample& ex : examples) inputs.push_back(ex.input);
  const std::vector<Vec> dists = forward_sequence(model.cell, model.head, inputs);
  bool all_correct = true;
  for (std::size_t t = 0; t < examples.size(); ++t) {
    const int pred = argmax_lowest(dists[t]);
    counts.gold.push_back(examples[t].target);
    counts.predicted.push_back(pred);
    all_correct = all_correct && pred == examples[t].target;
  }
  counts.n_dialogs += 1;
  counts.dialogs_all_correct += all_correct ? 1 : 0;
}

SlMetrics metrics_from_counts(const EvalCounts& counts, int n_classes) {
  SlMetrics m;
  m.report = report_from_predictions(counts.gold, counts.predicted, n_classes);
  m.weighted_f1 = m.report.weighted_f1;
  m.turn_accuracy = m.report.accuracy;
  m.n_turns = m.report.n;
  m.n_dialogs = counts.n_dialogs;
  m.dialog_accuracy =
      counts.n_dialogs > 0
          ? static_cast<double>(counts.dialogs_all_correct) / counts.n_dialogs
          : 0.0;
  return m;
}

}  // namespace

PolicyModel train_sl(std::span<const Dialog> dialogs, const SlFeaturizer& featurizer,
                     const SlTrainConfig& config) {
  featurizer.check_ready();
  std::vector<const Dialog*> train;
  std::vector<const Dialog*> dev;
  for (const Dialog& d : dialogs) {
    if (d.turns.empty()) continue;
    if (d.split == Split::Train) train.push_back(&d);
    if (d.split == Split::Dev) dev.push_back(&d);
  }
  if (train.empty()) throw DataError("train_sl: no training dialogs");

  PolicyModel model;
  model.config = featurizer.config;
  model.input_dim = featurizer.input_dim();
  model.hidden = config.hidden;
  model.vocab_hash = featurizer.vocab_hash();
  {
    Rng rng(derive_seed(config.seed, 0x51a9ull));
    model.cell = LstmCell::init(model.input_dim, config.hidden, rng);
    model.head = SoftmaxHead::init(config.hidden, featurizer.action_count(), rng);
  }
  if (config.epochs == 0) return model;

  // Featurization is teacher-forced and static, so precompute per dialog.
  std::vector<std::vector<SlExample>> train_examples;
  train_examples.reserve(train.size());
  for (const Dialog* d : train) train_examples.push_back(featurize_dialog(*d, featurizer));

  AdaDelta optimizer;
  double best_dev_f1 = -1.0;
  int epochs_since_best = 0;
  Vec best_params;

  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, 0xe90cull, epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const std::vector<SlExample>& examples = train_examples[order[oi]];
      std::vector<Vec> inputs;
      inputs.reserve(examples.size());
      for (const SlExample& ex : examples) inputs.push_back(ex.input);
      SeqCache cache;
      const std::vector<Vec> dists =
          forward_sequence(model.cell, model.head, inputs, nullptr, &cache);
      const double scale = 1.0 / static_cast<double>(examples.size());
      std::vector<Vec> dlogits(examples.size());
      for (std::size_t t = 0; t < examples.size(); ++t) {
        Vec d;
        cross_entropy(dists[t], examples[t].target, d);
        for (double& v : d) v *= scale;
        dlogits[t] = std::move(d);
      }
      ModelGrads grads = backward_sequence(model.cell, model.head, cache, dlogits);
      std::vector<std::span<double>> views = {
          std::span<double>(grads.d_wx.a), std::span<double>(grads.d_wh.a),
          std::span<double>(grads.d_b), std::span<double>(grads.d_head_w.a),
          std::span<double>(grads.d_head_b)};
      clip_global_norm(views, config.clip_norm);
      optimizer.step(param_refs(model.cell, model.head), grad_refs(grads));
    }

    if (!dev.empty() && config.patience > 0) {
      EvalCounts counts;
      for (const Dialog* d : dev) eval_dialog(model, *d, featurizer, counts);
      const double dev_f1 =
          metrics_from_counts(counts, featurizer.action_count()).weighted_f1;
      if (dev_f1 > best_dev_f1) {
        best_dev_f1 = dev_f1;
        epochs_since_best = 0;
        best_params = flatten_params(model.cell, model.head);
      } else if (++epochs_since_best >= config.patience) {
        break;
      }
    }
  }
  if (!best_params.empty()) {
    unflatten_params(best_params, model.cell, model.head);
  }
  return model;
}

SlMetrics eval_sl(const PolicyModel& model, std::span<const Dialog> dialogs,
                  Split split, const SlFeaturizer& featurizer) {
  model.check_compatible(featurizer);
  EvalCounts counts;
  for (const Dialog& d : dialogs) {
    if (d.split != split || d.turns.empty()) continue;
    eval_dialog(model, d, featurizer, counts);
  }
  if (counts.n_dialogs == 0) throw DataError("eval_sl: no dialogs in requested split");
  return metrics_from_counts(counts, featurizer.action_count());
}

int predict_action(const PolicyModel& model, SlRunState& state, const Vec& input) {
  if (state.h.empty()) {
    state.h.assign(model.hidden, 0.0);
    state.c.assign(model.hidden, 0.0);
  }
  Vec h_next, c_next;
  lstm_step(model.cell, state.h, state.c, input, h_next, c_next);
  state.h = std::move(h_next);
  state.c = std::move(c_next);
  const Vec probs = softmax(head_logits(model.head, state.h));
  state.last_action = argmax_lowest(probs);
  return state.last_action;
}

}  // namespace sadp
