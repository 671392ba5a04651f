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

#include "sadp/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sadp/errors.hpp"
#include "sadp/io.hpp"
#include "sadp/stats.hpp"

namespace sadp {

bool SentimentProbs::valid(double tol) const {
  for (double v : {neg, neu, pos}) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return std::fabs(neg + neu + pos - 1.0) <= tol;
}

double sentiment_score(const SentimentProbs& p, const ScoreCoeffs& coeffs) {
  return coeffs.neg * p.neg + coeffs.neu * p.neu + coeffs.pos * p.pos;
}

SentimentProbs predict_probs(const ForestModel& model, std::span<const double> x) {
  if (model.n_classes != kNumSentimentClasses) {
    throw ConfigError("predict_probs: model is not a 3-class sentiment forest");
  }
  const std::vector<double> probs = model.predict_proba(x);
  return SentimentProbs{probs[0], probs[1], probs[2]};
}

SentimentLabel predict_label(const ForestModel& model, std::span<const double> x) {
  return static_cast<SentimentLabel>(model.predict(x));
}

EvalReport report_from_predictions(std::span<const int> gold,
                                   std::span<const int> predicted, int n_classes) {
  if (gold.size() != predicted.size()) {
    throw ConfigError("report_from_predictions: size mismatch");
  }
  EvalReport report;
  report.n = static_cast<int>(gold.size());
  report.confusion.assign(n_classes, std::vector<int>(n_classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    report.confusion[gold[i]][predicted[i]] += 1;
  }
  report.per_class.resize(n_classes);
  int correct = 0;
  for (int c = 0; c < n_classes; ++c) {
    int row = 0, col = 0;
    for (int j = 0; j < n_classes; ++j) {
      row += report.confusion[c][j];
      col += report.confusion[j][c];
    }
    const int tp = report.confusion[c][c];
    correct += tp;
    ClassMetrics& m = report.per_class[c];
    m.support = row;
    m.precision = col > 0 ? static_cast<double>(tp) / col : 0.0;
    m.recall = row > 0 ? static_cast<double>(tp) / row : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  if (report.n > 0) {
    report.accuracy = static_cast<double>(correct) / report.n;
    double wf1 = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      wf1 += static_cast<double>(report.per_class[c].support) / report.n *
             report.per_class[c].f1;
    }
    report.weighted_f1 = wf1;
  }
  return report;
}

EvalReport evaluate_classifier(const ForestModel& model,
                               const std::vector<std::vector<double>>& X,
                               const std::vector<int>& y) {
  if (X.empty()) throw ConfigError("evaluate_classifier: empty test set");
  std::vector<int> predicted(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) predicted[i] = model.predict(X[i]);
  return report_from_predictions(y, predicted, model.n_classes);
}

std::string EvalReport::to_csv(std::span<const std::string> class_names) const {
  auto name_of = [&](int c) {
    return c < static_cast<int>(class_names.size()) ? class_names[c]
                                                    : "class" + std::to_string(c);
  };
  std::ostringstream out;
  out << "class,precision,recall,f1,support\n";
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const ClassMetrics& m = per_class[c];
    out << name_of(static_cast<int>(c)) << "," << fmt_double(m.precision) << ","
        << fmt_double(m.recall) << "," << fmt_double(m.f1) << "," << m.support << "\n";
  }
  out << "weighted_f1," << fmt_double(weighted_f1) << ",,,\n";
  out << "accuracy," << fmt_double(accuracy) << ",,," << n << "\n";
  out << "confusion";
  for (std::size_t c = 0; c < per_class.size(); ++c) out << "," << name_of(static_cast<int>(c));
  out << "\n";
  for (std::size_t g = 0; g < confusion.size(); ++g) {
    out << name_of(static_cast<int>(g));
    for (int v : confusion[g]) out << "," << v;
    out << "\n";
  }
  return out.str();
}

std::vector<double> sentiment_feature_vector(const Dialog& dialog, int turn_index,
                                             const SentimentFeatureConfig& config) {
  std::vector<std::vector<double>> parts;
  std::vector<int> dims;
  if (config.use_acoustic) {
    if (!config.acoustic) throw ConfigError("acoustic features requested without a table");
    const Turn& t = dialog.turns[turn_index];
    if (!t.acoustic_key) throw DataError("turn has no acoustic key");
    const std::vector<double>* row = config.acoustic->find(*t.acoustic_key);
    if (!row) throw DataError("acoustic key not found: " + *t.acoustic_key);
    std::vector<double> vec = *row;
    if (config.acoustic_selector) vec = config.acoustic_selector->apply(vec);
    dims.push_back(static_cast<int>(vec.size()));
    parts.push_back(std::move(vec));
  }
  if (config.use_dialogic) {
    const auto arr = extract_dialogic(dialog, turn_index).to_array();
    parts.emplace_back(arr.begin(), arr.end());
    dims.push_back(kDialogicDim);
  }
  if (config.use_textual) {
    if (!config.tfidf) throw ConfigError("textual features requested without a vectorizer");
    std::vector<double> vec = config.tfidf->transform_dense(dialog.turns[turn_index].user_text);
    dims.push_back(static_cast<int>(vec.size()));
    parts.push_back(std::move(vec));
  }
  if (parts.empty()) throw ConfigError("no feature family enabled");
  return concat_features(parts, dims);
}

SentimentDataset build_sentiment_dataset(std::span<const Dialog> dialogs,
                                         const SentimentFeatureConfig& config,
                                         std::span<const Split> splits) {
  SentimentDataset data;
  auto in_splits = [&](Split s) {
    return std::find(splits.begin(), splits.end(), s) != splits.end();
  };
  for (const Dialog& d : dialogs) {
    if (!in_splits(d.split)) continue;
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const Turn& t = d.turns[ti];
      if (!t.sentiment_label) continue;
      if (config.use_acoustic) {
        if (!t.acoustic_key ||
            (config.acoustic && !config.acoustic->find(*t.acoustic_key))) {
          ++data.skipped_missing_acoustic;
          continue;
        }
      }
      std::vector<double> x =
          sentiment_feature_vector(d, static_cast<int>(ti), config);
      if (data.dims.empty()) {
        // record family layout from the first row
        std::vector<int> dims;
        if (config.use_acoustic) {
          int ad = config.acoustic_selector ? config.acoustic_selector->k
                                            : config.acoustic->dim();
          dims.push_back(ad);
        }
        if (config.use_dialogic) dims.push_back(kDialogicDim);
        if (config.use_textual) dims.push_back(config.tfidf->dim());
        data.dims = std::move(dims);
      }
      data.X.push_back(std::move(x));
      data.y.push_back(static_cast<int>(*t.sentiment_label));
    }
  }
  return data;
}

SeedSweepResult sentiment_f1_over_seeds(const SentimentDataset& train,
                                        const SentimentDataset& test,
                                        const ForestHyper& hyper,
                                        std::span<const std::uint64_t> seeds) {
  SeedSweepResult result;
  for (std::uint64_t seed : seeds) {
    const ForestModel model = train_forest(train.X, train.y, hyper, seed);
    result.f1s.push_back(evaluate_classifier(model, test.X, test.y).weighted_f1);
  }
  result.mean = mean(result.f1s);
  result.stdev = stddev(result.f1s);
  result.max = result.f1s.empty()
                   ? 0.0
                   : *std::max_element(result.f1s.begin(), result.f1s.end());
  return result;
}

}  // namespace sadp
