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

#ifndef SADP_FEATURES_HPP
#define SADP_FEATURES_HPP

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sadp/corpus.hpp"
#include "sadp/forest.hpp"

namespace sadp {

// The eight interaction signals of one user turn: a per-turn flag and the
// cumulative count so far for each of the four event families. Order is
// fixed; to_array() defines the canonical layout.
struct DialogicFeatures {
  double interruption = 0;
  double total_interruptions = 0;
  double button_usage = 0;
  double total_button_usages = 0;
  double repetition = 0;
  double total_repetitions = 0;
  double start_over = 0;
  double total_start_over = 0;

  std::array<double, 8> to_array() const {
    return {interruption, total_interruptions, button_usage, total_button_usages,
            repetition,   total_repetitions,   start_over,   total_start_over};
  }
  static DialogicFeatures from_array(std::span<const double> a);
  bool all_zero() const;
};

constexpr int kDialogicDim = 8;
extern const char* const kDialogicFeatureNames[kDialogicDim];

// Per-turn flags plus inclusive prefix sums up to turn_index. A user
// repeat request and a system re-ask both count as "repetition"; an explicit
// start-over act and the logged flag both count as "start over".
DialogicFeatures extract_dialogic(const Dialog& dialog, int turn_index);

class TfidfVectorizer {
 public:
  // vocabulary = tokens with document frequency >= min_df, indexed in
  // lexicographic order; idf(t) = ln((1+N)/(1+df(t))) + 1.
  static TfidfVectorizer fit(std::span<const std::string> corpus, int min_df = 1);

  // tf * idf, L2-normalized; out-of-vocabulary tokens ignored.
  std::vector<std::pair<int, double>> transform(const std::string& utterance) const;
  std::vector<double> transform_dense(const std::string& utterance) const;

  int dim() const { return static_cast<int>(vocabulary_.size()); }
  const std::map<std::string, int>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  int min_df() const { return min_df_; }

 private:
  std::map<std::string, int> vocabulary_;
  std::vector<double> idf_;
  int min_df_ = 1;
};

// Dense per-key vectors ingested from CSV: header "key,<name>,...", one row
// per key. All rows must share the header's dimension and be finite.
class AcousticTable {
 public:
  static AcousticTable from_csv_file(const std::string& path);
  static AcousticTable from_csv(const std::string& content);

  const std::vector<double>* find(const std::string& key) const;
  int dim() const { return static_cast<int>(names_.size()); }
  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::vector<double>> rows_;
};

struct RankedFeature {
  int index = 0;
  double score = 0.0;
};

// Top-k features by total Gini impurity decrease in a seeded forest.
class FeatureSelector {
 public:
  std::vector<RankedFeature> ranking;  // scores non-increasing
  int k = 0;

  std::vector<double> apply(std::span<const double> x) const;
  // "rank,index,name,score" rows for audit; names optional.
  std::string to_csv(std::span<const std::string> names = {}) const;
};

FeatureSelector select_features(const std::vector<std::vector<double>>& X,
                                const std::vector<int>& y, int k,
                                std::uint64_t seed,
                                const ForestHyper& hyper = {});

// Fixed-order concatenation; each part must match its declared dimension.
std::vector<double> concat_features(std::span<const std::vector<double>> parts,
                                    std::span<const int> declared_dims);

}  // namespace sadp

#endif  // SADP_FEATURES_HPP
