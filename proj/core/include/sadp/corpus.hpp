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

#ifndef SADP_CORPUS_HPP
#define SADP_CORPUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sadp {

enum class Split { Train, Dev, Test };
const char* split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

enum class SentimentLabel { Negative = 0, Neutral = 1, Positive = 2 };
constexpr int kNumSentimentClasses = 3;
const char* sentiment_name(SentimentLabel s);
std::optional<SentimentLabel> sentiment_from_name(const std::string& name);

// Enum order doubles as the tie-break priority when one surface string could
// belong to several entity types.
enum class EntityType { Route = 0, Place = 1, Neighborhood = 2, Time = 3 };
constexpr int kNumEntityTypes = 4;
const char* entity_type_name(EntityType t);
std::optional<EntityType> entity_type_from_name(const std::string& name);
std::string slot_marker(EntityType t);  // "<place>" etc.

enum class UserActType { Inform, Noise, Yes, No, RepeatRequest, StartOver };
struct UserAct {
  UserActType type = UserActType::Noise;
  std::optional<EntityType> entity;  // set for Inform
};
std::string format_user_act(const UserAct& act);
std::optional<UserAct> parse_user_act(const std::string& text);

struct Turn {
  int turn_index = 0;
  std::string user_text;
  std::optional<UserAct> user_act;
  std::string system_text;
  int system_action_id = -1;  // assigned once a template inventory exists
  bool interrupted = false;
  bool button_used = false;
  bool repetition = false;
  bool start_over = false;
  std::optional<SentimentLabel> sentiment_label;
  std::optional<std::string> acoustic_key;
  std::optional<double> asr_confidence;
};

struct Dialog {
  std::string dialog_id;
  std::vector<Turn> turns;
  Split split = Split::Train;
};

struct LineIssue {
  int line_no = 0;  // 1-based; 0 when the issue is dialog-level
  std::string message;
};

struct LoadResult {
  std::vector<Dialog> dialogs;
  std::vector<LineIssue> issues;
};

// Line-delimited JSON, one record per turn, each carrying the schema version
// ("v") and its dialog id. Dialogs keep first-appearance order. Unparseable
// lines and dialogs with gaps in their turn numbering are dropped and
// reported in issues; version mismatches, duplicate (dialog, turn) pairs and
// missing files are hard errors.
LoadResult load_dialog_log(const std::string& path, int expected_version = 1);
void save_dialog_log(std::span<const Dialog> dialogs, const std::string& path);
std::string dialog_log_to_string(std::span<const Dialog> dialogs);

class EntityLexicon {
 public:
  // Empty surfaces are rejected; a surface claimed by two types keeps the
  // higher-priority type.
  void add(EntityType type, const std::string& surface);
  const std::map<std::string, EntityType>& surfaces() const { return by_surface_; }
  bool empty() const { return by_surface_.empty(); }

 private:
  std::map<std::string, EntityType> by_surface_;
};

// One "type<TAB>surface" entry per line; '#' starts a comment.
EntityLexicon load_lexicon(const std::string& path);
void save_lexicon(const EntityLexicon& lexicon, const std::string& path);

struct Binding {
  EntityType type;
  std::string surface;
};

struct DelexResult {
  std::string template_text;
  std::vector<Binding> bindings;  // in replacement order
};

// Longest-match-first, left-to-right replacement of lexicon surfaces by slot
// markers. Matches only at word boundaries.
DelexResult delexicalize(const std::string& text, const EntityLexicon& lexicon);

// Inverse of delexicalize: substitutes bindings back in order.
std::string relexicalize(const std::string& template_text,
                         std::span<const Binding> bindings);

// Fills markers from the most recent binding per type; markers without a
// binding are left in place.
std::string fill_template(const std::string& template_text,
                          const std::map<EntityType, std::string>& values);

struct ActionTemplate {
  int template_id = 0;
  std::string delexicalized_text;
  std::set<EntityType> slots;
};

// Distinct delexicalized system utterances, ids in first-appearance order.
std::vector<ActionTemplate> build_template_inventory(std::span<const Dialog> dialogs,
                                                     const EntityLexicon& lexicon);

// Stamps system_action_id on every turn. Unknown templates are an error.
void assign_action_ids(std::vector<Dialog>& dialogs,
                       const std::vector<ActionTemplate>& inventory,
                       const EntityLexicon& lexicon);

struct CleanDataConfig {
  // A dialog is dropped when any turn has empty user text, or when ASR
  // confidences are present and more than max_low_conf_fraction of turns
  // fall below min_confidence.
  double min_confidence = 0.3;
  double max_low_conf_fraction = 0.5;
};

std::vector<Dialog> filter_clean_data(std::span<const Dialog> dialogs,
                                      const CleanDataConfig& config = {});

struct SplitRatios {
  double train = 0.6;
  double dev = 0.2;
  double test = 0.2;
};

// Seeded shuffle, then partition by dialog.
void assign_splits(std::vector<Dialog>& dialogs, const SplitRatios& ratios,
                   std::uint64_t seed);

struct SynthConfig {
  int n_dialogs = 200;
  int min_turns = 3;
  int max_turns = 8;
  double interruption_rate = 0.15;
  double button_rate = 0.05;
  double repetition_rate = 0.15;
  double start_over_rate = 0.02;
  // Sentiment generation: a turn whose cumulative interruption+repetition
  // count is zero is positive with probability pos_rate, otherwise neutral.
  // At count k >= 1 it is negative with probability score_neg_prob[min(k,3)-1],
  // else neutral. The default curve is steep (separable by construction); a
  // flatter curve yields calibrated mild-to-hot detector scores.
  double pos_rate = 0.02;
  std::array<double, 3> score_neg_prob{0.9, 1.0, 1.0};
  // When set, the system utterance is one of two fixed templates chosen by
  // the turn's sentiment label, and user text carries no sentiment signal.
  bool sentiment_dependent_actions = false;
  bool emit_acoustic = false;
  int acoustic_dim = 12;
  SplitRatios splits{};

  void validate() const;
};

std::vector<Dialog> synth_corpus(std::uint64_t seed, const SynthConfig& config);
EntityLexicon synth_lexicon();

// CSV (key + acoustic_dim columns) for every acoustic key in the corpus,
// with label-dependent cluster means so the acoustic channel is informative.
std::string synth_acoustic_csv(std::span<const Dialog> dialogs, std::uint64_t seed,
                               int dim);

}  // namespace sadp

#endif  // SADP_CORPUS_HPP
