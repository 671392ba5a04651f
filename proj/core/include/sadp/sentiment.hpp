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

#ifndef SADP_SENTIMENT_HPP
#define SADP_SENTIMENT_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sadp/corpus.hpp"
#include "sadp/features.hpp"
#include "sadp/forest.hpp"

namespace sadp {

struct SentimentProbs {
  double neg = 0.0;
  double neu = 0.0;
  double pos = 0.0;

  bool valid(double tol = 1e-9) const;
  std::vector<double> to_vector() const { return {neg, neu, pos}; }
};

struct ScoreCoeffs {
  double neg = -5.0;
  double neu = -1.0;
  double pos = 10.0;
};

// Linear map from the class simplex to a scalar reward.
double sentiment_score(const SentimentProbs& p, const ScoreCoeffs& coeffs = {});

// Mean leaf class frequencies of a 3-class forest.
SentimentProbs predict_probs(const ForestModel& model, std::span<const double> x);
// Argmax label; ties break negative < neutral < positive.
SentimentLabel predict_label(const ForestModel& model, std::span<const double> x);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct EvalReport {
  std::vector<std::vector<int>> confusion;  // [gold][pred]
  std::vector<ClassMetrics> per_class;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  int n = 0;

  std::string to_csv(std::span<const std::string> class_names = {}) const;
};

EvalReport report_from_predictions(std::span<const int> gold,
                                   std::span<const int> predicted, int n_classes);

EvalReport evaluate_classifier(const ForestModel& model,
                               const std::vector<std::vector<double>>& X,
                               const std::vector<int>& y);

// Feature families feeding the detector, concatenated in the fixed order
// acoustic | dialogic | textual.
struct SentimentFeatureConfig {
  bool use_acoustic = false;
  bool use_dialogic = true;
  bool use_textual = false;
  const AcousticTable* acoustic = nullptr;
  const FeatureSelector* acoustic_selector = nullptr;  // optional reduction
  const TfidfVectorizer* tfidf = nullptr;
};

struct SentimentDataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<int> dims;  // per enabled family, in concat order
  int skipped_missing_acoustic = 0;
};

// One row per labeled turn in the requested splits.
SentimentDataset build_sentiment_dataset(std::span<const Dialog> dialogs,
                                         const SentimentFeatureConfig& config,
                                         std::span<const Split> splits);

std::vector<double> sentiment_feature_vector(const Dialog& dialog, int turn_index,
                                             const SentimentFeatureConfig& config);

struct SeedSweepResult {
  std::vector<double> f1s;
  double mean = 0.0;
  double stdev = 0.0;
  double max = 0.0;
};

// Trains one forest per seed and reports test weighted F1 across seeds.
SeedSweepResult sentiment_f1_over_seeds(const SentimentDataset& train,
                                        const SentimentDataset& test,
                                        const ForestHyper& hyper,
                                        std::span<const std::uint64_t> seeds);

}  // namespace sadp

#endif  // SADP_SENTIMENT_HPP
