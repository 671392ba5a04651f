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

#include "sadp/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sadp/errors.hpp"
#include "sadp/io.hpp"

namespace sadp {

const char* const kDialogicFeatureNames[kDialogicDim] = {
    "interruption",  "total_interruptions_so_far",
    "button_usage",  "total_button_usages_so_far",
    "repetition",    "total_repetitions_so_far",
    "start_over",    "total_start_over_so_far"};

DialogicFeatures DialogicFeatures::from_array(std::span<const double> a) {
  if (a.size() != kDialogicDim) {
    throw ConfigError("dialogic feature vector must have 8 components");
  }
  DialogicFeatures f;
  f.interruption = a[0];
  f.total_interruptions = a[1];
  f.button_usage = a[2];
  f.total_button_usages = a[3];
  f.repetition = a[4];
  f.total_repetitions = a[5];
  f.start_over = a[6];
  f.total_start_over = a[7];
  return f;
}

bool DialogicFeatures::all_zero() const {
  for (double v : to_array()) {
    if (v != 0.0) return false;
  }
  return true;
}

namespace {

bool turn_repetition(const Turn& t) {
  return t.repetition ||
         (t.user_act && t.user_act->type == UserActType::RepeatRequest);
}

bool turn_start_over(const Turn& t) {
  return t.start_over ||
         (t.user_act && t.user_act->type == UserActType::StartOver);
}

}  // namespace

DialogicFeatures extract_dialogic(const Dialog& dialog, int turn_index) {
  if (turn_index < 0 || turn_index >= static_cast<int>(dialog.turns.size())) {
    throw ConfigError("extract_dialogic: turn index out of range");
  }
  DialogicFeatures f;
  for (int i = 0; i <= turn_index; ++i) {
    const Turn& t = dialog.turns[i];
    f.total_interruptions += t.interrupted ? 1 : 0;
    f.total_button_usages += t.button_used ? 1 : 0;
    f.total_repetitions += turn_repetition(t) ? 1 : 0;
    f.total_start_over += turn_start_over(t) ? 1 : 0;
  }
  const Turn& t = dialog.turns[turn_index];
  f.interruption = t.interrupted ? 1 : 0;
  f.button_usage = t.button_used ? 1 : 0;
  f.repetition = turn_repetition(t) ? 1 : 0;
  f.start_over = turn_start_over(t) ? 1 : 0;
  return f;
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> corpus, int min_df) {
  if (corpus.empty()) throw ConfigError("tfidf fit: empty corpus");
  std::map<std::string, int> df;
  for (const std::string& doc : corpus) {
    std::set<std::string> seen;
    for (const std::string& tok : tokenize(doc)) seen.insert(tok);
    for (const std::string& tok : seen) ++df[tok];
  }
  TfidfVectorizer v;
  v.min_df_ = min_df;
  const double n = static_cast<double>(corpus.size());
  for (const auto& [tok, count] : df) {
    if (count < min_df) continue;
    const int idx = static_cast<int>(v.vocabulary_.size());
    v.vocabulary_[tok] = idx;
    v.idf_.push_back(std::log((1.0 + n) / (1.0 + count)) + 1.0);
  }
  return v;
}

std::vector<std::pair<int, double>> TfidfVectorizer::transform(
    const std::string& utterance) const {
  std::map<int, double> tf;
  for (const std::string& tok : tokenize(utterance)) {
    auto it = vocabulary_.find(tok);
    if (it != vocabulary_.end()) tf[it->second] += 1.0;
  }
  double norm_sq = 0.0;
  std::vector<std::pair<int, double>> entries;
  entries.reserve(tf.size());
  for (const auto& [idx, count] : tf) {
    const double w = count * idf_[idx];
    entries.emplace_back(idx, w);
    norm_sq += w * w;
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& [idx, w] : entries) w *= inv;
  }
  return entries;
}

std::vector<double> TfidfVectorizer::transform_dense(const std::string& utterance) const {
  std::vector<double> out(vocabulary_.size(), 0.0);
  for (const auto& [idx, w] : transform(utterance)) out[idx] = w;
  return out;
}

AcousticTable AcousticTable::from_csv_file(const std::string& path) {
  return from_csv(read_file(path));
}

AcousticTable AcousticTable::from_csv(const std::string& content) {
  AcousticTable table;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (line_no == 1) {
      if (cells.size() < 2) throw DataError("acoustic csv: header needs key + features");
      table.names_.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != table.names_.size() + 1) {
      throw DataError("acoustic csv line " + std::to_string(line_no) +
                      ": expected " + std::to_string(table.names_.size() + 1) +
                      " cells");
    }
    std::vector<double> row(table.names_.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      try {
        row[j] = std::stod(cells[j + 1]);
      } catch (const std::exception&) {
        throw DataError("acoustic csv line " + std::to_string(line_no) +
                        ": bad number '" + cells[j + 1] + "'");
      }
      if (!std::isfinite(row[j])) {
        throw DataError("acoustic csv line " + std::to_string(line_no) +
                        ": non-finite value");
      }
    }
    if (!table.rows_.emplace(trim(cells[0]), std::move(row)).second) {
      throw DataError("acoustic csv line " + std::to_string(line_no) +
                      ": duplicate key " + cells[0]);
    }
  }
  if (table.names_.empty()) throw DataError("acoustic csv: empty file");
  return table;
}

const std::vector<double>* AcousticTable::find(const std::string& key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<double> FeatureSelector::apply(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(k);
  for (int j = 0; j < k; ++j) {
    const int idx = ranking[j].index;
    if (idx < 0 || idx >= static_cast<int>(x.size())) {
      throw ConfigError("feature selector: input dimension too small");
    }
    out.push_back(x[idx]);
  }
  return out;
}

std::string FeatureSelector::to_csv(std::span<const std::string> names) const {
  std::ostringstream out;
  out << "rank,index,name,score\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const RankedFeature& f = ranking[r];
    const std::string name =
        f.index < static_cast<int>(names.size()) ? names[f.index] : "";
    out << r << "," << f.index << "," << name << "," << fmt_double(f.score) << "\n";
  }
  return out.str();
}

FeatureSelector select_features(const std::vector<std::vector<double>>& X,
                                const std::vector<int>& y, int k,
                                std::uint64_t seed, const ForestHyper& hyper) {
  if (X.empty()) throw ConfigError("select_features: empty X");
  const int d = static_cast<int>(X[0].size());
  if (k > d) throw ConfigError("select_features: k exceeds feature count");

  const ForestModel model = train_forest(X, y, hyper, seed);

  std::vector<RankedFeature> ranking(d);
  for (int j = 0; j < d; ++j) ranking[j] = {j, model.feature_importance[j]};
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.index < b.index;
                   });
  FeatureSelector sel;
  sel.ranking = std::move(ranking);
  sel.k = k;
  return sel;
}

std::vector<double> concat_features(std::span<const std::vector<double>> parts,
                                    std::span<const int> declared_dims) {
  if (parts.size() != declared_dims.size()) {
    throw ConfigError("concat_features: part count does not match declared layout");
  }
  std::vector<double> out;
  std::size_t total = 0;
  for (int d : declared_dims) total += d;
  out.reserve(total);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (static_cast<int>(parts[i].size()) != declared_dims[i]) {
      throw ConfigError("concat_features: part " + std::to_string(i) + " has dim " +
                        std::to_string(parts[i].size()) + ", declared " +
                        std::to_string(declared_dims[i]));
    }
    out.insert(out.end(), parts[i].begin(), parts[i].end());
  }
  return out;
}

}  // namespace sadp
