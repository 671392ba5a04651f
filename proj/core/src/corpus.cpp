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

#include "sadp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sadp/errors.hpp"
#include "sadp/io.hpp"
#include "sadp/rng.hpp"

namespace sadp {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

std::optional<Split> split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "dev") return Split::Dev;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

const char* sentiment_name(SentimentLabel s) {
  switch (s) {
    case SentimentLabel::Negative: return "negative";
    case SentimentLabel::Neutral: return "neutral";
    case SentimentLabel::Positive: return "positive";
  }
  return "neutral";
}

std::optional<SentimentLabel> sentiment_from_name(const std::string& name) {
  if (name == "negative") return SentimentLabel::Negative;
  if (name == "neutral") return SentimentLabel::Neutral;
  if (name == "positive") return SentimentLabel::Positive;
  return std::nullopt;
}

const char* entity_type_name(EntityType t) {
  switch (t) {
    case EntityType::Route: return "route";
    case EntityType::Place: return "place";
    case EntityType::Neighborhood: return "neighborhood";
    case EntityType::Time: return "time";
  }
  return "place";
}

std::optional<EntityType> entity_type_from_name(const std::string& name) {
  if (name == "route") return EntityType::Route;
  if (name == "place") return EntityType::Place;
  if (name == "neighborhood") return EntityType::Neighborhood;
  if (name == "time") return EntityType::Time;
  return std::nullopt;
}

std::string slot_marker(EntityType t) {
  return std::string("<") + entity_type_name(t) + ">";
}

std::string format_user_act(const UserAct& act) {
  switch (act.type) {
    case UserActType::Inform:
      return std::string("inform(") +
             (act.entity ? entity_type_name(*act.entity) : "") + ")";
    case UserActType::Noise: return "noise";
    case UserActType::Yes: return "yes";
    case UserActType::No: return "no";
    case UserActType::RepeatRequest: return "repeat";
    case UserActType::StartOver: return "start_over";
  }
  return "noise";
}

std::optional<UserAct> parse_user_act(const std::string& text) {
  if (text == "noise") return UserAct{UserActType::Noise, std::nullopt};
  if (text == "yes") return UserAct{UserActType::Yes, std::nullopt};
  if (text == "no") return UserAct{UserActType::No, std::nullopt};
  if (text == "repeat") return UserAct{UserActType::RepeatRequest, std::nullopt};
  if (text == "start_over") return UserAct{UserActType::StartOver, std::nullopt};
  if (text.starts_with("inform(") && text.ends_with(")")) {
    const std::string inner = text.substr(7, text.size() - 8);
    auto type = entity_type_from_name(inner);
    if (!type) return std::nullopt;
    return UserAct{UserActType::Inform, type};
  }
  return std::nullopt;
}

namespace {

nlohmann::json turn_to_json(const Dialog& dialog, const Turn& turn) {
  nlohmann::json j;
  j["v"] = 1;
  j["dialog"] = dialog.dialog_id;
  j["turn"] = turn.turn_index;
  j["user_text"] = turn.user_text;
  j["system_text"] = turn.system_text;
  if (turn.turn_index == 0) j["split"] = split_name(dialog.split);
  if (turn.user_act) j["act"] = format_user_act(*turn.user_act);
  if (turn.interrupted) j["interrupted"] = true;
  if (turn.button_used) j["button"] = true;
  if (turn.repetition) j["repetition"] = true;
  if (turn.start_over) j["start_over"] = true;
  if (turn.sentiment_label) j["sentiment"] = sentiment_name(*turn.sentiment_label);
  if (turn.acoustic_key) j["acoustic_key"] = *turn.acoustic_key;
  if (turn.asr_confidence) j["asr_conf"] = *turn.asr_confidence;
  if (turn.system_action_id >= 0) j["action_id"] = turn.system_action_id;
  return j;
}

}  // namespace

LoadResult load_dialog_log(const std::string& path, int expected_version) {
  const std::vector<std::string> lines = read_lines(path);
  LoadResult result;
  std::map<std::string, std::size_t> dialog_index;
  std::set<std::pair<std::string, int>> seen_turns;

  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const int line_no = static_cast<int>(ln) + 1;
    const std::string line = trim(lines[ln]);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      result.issues.push_back({line_no, std::string("unparseable line: ") + e.what()});
      continue;
    }
    if (!j.is_object() || !j.contains("v") || !j.contains("dialog") ||
        !j.contains("turn")) {
      result.issues.push_back({line_no, "record missing v/dialog/turn fields"});
      continue;
    }
    const int v = j["v"].get<int>();
    if (v != expected_version) {
      throw DataError("log schema version mismatch at line " + std::to_string(line_no) +
                      ": got " + std::to_string(v) + ", expected " +
                      std::to_string(expected_version));
    }

    Turn turn;
    std::string dialog_id;
    std::optional<Split> split;
    try {
      dialog_id = j["dialog"].get<std::string>();
      turn.turn_index = j["turn"].get<int>();
      turn.user_text = j.value("user_text", std::string());
      turn.system_text = j.value("system_text", std::string());
      if (j.contains("act")) {
        auto act = parse_user_act(j["act"].get<std::string>());
        if (!act) {
          result.issues.push_back({line_no, "unknown user act: " + j["act"].dump()});
          continue;
        }
        turn.user_act = act;
      }
      turn.interrupted = j.value("interrupted", false);
      turn.button_used = j.value("button", false);
      turn.repetition = j.value("repetition", false);
      turn.start_over = j.value("start_over", false);
      if (j.contains("sentiment")) {
        auto s = sentiment_from_name(j["sentiment"].get<std::string>());
        if (!s) {
          result.issues.push_back({line_no, "unknown sentiment label: " + j["sentiment"].dump()});
          continue;
        }
        turn.sentiment_label = s;
      }
      if (j.contains("acoustic_key")) turn.acoustic_key = j["acoustic_key"].get<std::string>();
      if (j.contains("asr_conf")) turn.asr_confidence = j["asr_conf"].get<double>();
      if (j.contains("action_id")) turn.system_action_id = j["action_id"].get<int>();
      if (j.contains("split")) {
        split = split_from_name(j["split"].get<std::string>());
        if (!split) {
          result.issues.push_back({line_no, "unknown split: " + j["split"].dump()});
          continue;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      result.issues.push_back({line_no, std::string("bad field type: ") + e.what()});
      continue;
    }

    if (!seen_turns.insert({dialog_id, turn.turn_index}).second) {
      throw DataError("duplicate dialog/turn pair at line " + std::to_string(line_no) +
                      ": " + dialog_id + " turn " + std::to_string(turn.turn_index));
    }

    auto [it, inserted] = dialog_index.try_emplace(dialog_id, result.dialogs.size());
    if (inserted) {
      Dialog d;
      d.dialog_id = dialog_id;
      result.dialogs.push_back(std::move(d));
    }
    Dialog& dialog = result.dialogs[it->second];
    if (split) dialog.split = *split;
    dialog.turns.push_back(std::move(turn));
  }

  // Enforce contiguous 0..n-1 turn numbering; report and drop violators.
  std::vector<Dialog> kept;
  kept.reserve(result.dialogs.size());
  for (Dialog& d : result.dialogs) {
    std::sort(d.turns.begin(), d.turns.end(),
              [](const Turn& a, const Turn& b) { return a.turn_index < b.turn_index; });
    bool contiguous = true;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      if (d.turns[i].turn_index != static_cast<int>(i)) {
        contiguous = false;
        break;
      }
    }
    if (!contiguous) {
      result.issues.push_back(
          {0, "dialog " + d.dialog_id + " dropped: turn indices not contiguous from 0"});
      continue;
    }
    kept.push_back(std::move(d));
  }
  result.dialogs = std::move(kept);
  return result;
}

std::string dialog_log_to_string(std::span<const Dialog> dialogs) {
  std::ostringstream out;
  for (const Dialog& d : dialogs) {
    for (const Turn& t : d.turns) {
      out << turn_to_json(d, t).dump() << "\n";
    }
  }
  return out.str();
}

void save_dialog_log(std::span<const Dialog> dialogs, const std::string& path) {
  write_file(path, dialog_log_to_string(dialogs));
}

void EntityLexicon::add(EntityType type, const std::string& surface) {
  if (surface.empty()) throw ConfigError("lexicon surface must be non-empty");
  auto [it, inserted] = by_surface_.try_emplace(surface, type);
  if (!inserted && static_cast<int>(type) < static_cast<int>(it->second)) {
    it->second = type;  // higher-priority type wins
  }
}

EntityLexicon load_lexicon(const std::string& path) {
  EntityLexicon lex;
  int line_no = 0;
  for (const std::string& raw : read_lines(path)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("lexicon line " + std::to_string(line_no) +
                      ": expected type<TAB>surface");
    }
    const auto type = entity_type_from_name(trim(line.substr(0, tab)));
    if (!type) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": unknown entity type");
    }
    lex.add(*type, trim(line.substr(tab + 1)));
  }
  return lex;
}

void save_lexicon(const EntityLexicon& lexicon, const std::string& path) {
  std::ostringstream out;
  for (const auto& [surface, type] : lexicon.surfaces()) {
    out << entity_type_name(type) << "\t" << surface << "\n";
  }
  write_file(path, out.str());
}

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

DelexResult delexicalize(const std::string& text, const EntityLexicon& lexicon) {
  DelexResult result;
  const auto& surfaces = lexicon.surfaces();
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t best_len = 0;
    EntityType best_type = EntityType::Time;
    const bool at_boundary = i == 0 || !is_word_char(text[i - 1]);
    if (at_boundary) {
      for (const auto& [surface, type] : surfaces) {
        if (surface.size() < best_len) continue;
        if (i + surface.size() > text.size()) continue;
        if (text.compare(i, surface.size(), surface) != 0) continue;
        const std::size_t end = i + surface.size();
        if (end < text.size() && is_word_char(text[end]) && is_word_char(surface.back()))
          continue;
        if (surface.size() > best_len ||
            (surface.size() == best_len &&
             static_cast<int>(type) < static_cast<int>(best_type))) {
          best_len = surface.size();
          best_type = type;
        }
      }
    }
    if (best_len > 0) {
      result.template_text += slot_marker(best_type);
      result.bindings.push_back({best_type, text.substr(i, best_len)});
      i += best_len;
    } else {
      result.template_text += text[i];
      ++i;
    }
  }
  return result;
}

std::string relexicalize(const std::string& template_text,
                         std::span<const Binding> bindings) {
  std::string out;
  std::size_t next_binding = 0;
  std::size_t i = 0;
  while (i < template_text.size()) {
    bool replaced = false;
    if (template_text[i] == '<' && next_binding < bindings.size()) {
      const std::string marker = slot_marker(bindings[next_binding].type);
      if (template_text.compare(i, marker.size(), marker) == 0) {
        out += bindings[next_binding].surface;
        i += marker.size();
        ++next_binding;
        replaced = true;
      }
    }
    if (!replaced) {
      out += template_text[i];
      ++i;
    }
  }
  return out;
}

std::string fill_template(const std::string& template_text,
                          const std::map<EntityType, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < template_text.size()) {
    bool replaced = false;
    if (template_text[i] == '<') {
      for (int t = 0; t < kNumEntityTypes; ++t) {
        const EntityType type = static_cast<EntityType>(t);
        const std::string marker = slot_marker(type);
        if (template_text.compare(i, marker.size(), marker) == 0) {
          auto it = values.find(type);
          if (it != values.end()) {
            out += it->second;
            i += marker.size();
            replaced = true;
          }
          break;
        }
      }
    }
    if (!replaced) {
      out += template_text[i];
      ++i;
    }
  }
  return out;
}

std::vector<ActionTemplate> build_template_inventory(std::span<const Dialog> dialogs,
                                                     const EntityLexicon& lexicon) {
  std::vector<ActionTemplate> inventory;
  std::map<std::string, int> by_text;
  for (const Dialog& d : dialogs) {
    for (const Turn& t : d.turns) {
      const DelexResult delex = delexicalize(t.system_text, lexicon);
      if (by_text.contains(delex.template_text)) continue;
      ActionTemplate tpl;
      tpl.template_id = static_cast<int>(inventory.size());
      tpl.delexicalized_text = delex.template_text;
      for (const Binding& b : delex.bindings) tpl.slots.insert(b.type);
      by_text[tpl.delexicalized_text] = tpl.template_id;
      inventory.push_back(std::move(tpl));
    }
  }
  return inventory;
}

void assign_action_ids(std::vector<Dialog>& dialogs,
                       const std::vector<ActionTemplate>& inventory,
                       const EntityLexicon& lexicon) {
  std::map<std::string, int> by_text;
  for (const ActionTemplate& tpl : inventory) {
    by_text[tpl.delexicalized_text] = tpl.template_id;
  }
  for (Dialog& d : dialogs) {
    for (Turn& t : d.turns) {
      const DelexResult delex = delexicalize(t.system_text, lexicon);
      auto it = by_text.find(delex.template_text);
      if (it == by_text.end()) {
        throw DataError("system utterance has no template in inventory: " +
                        t.system_text);
      }
      t.system_action_id = it->second;
    }
  }
}

std::vector<Dialog> filter_clean_data(std::span<const Dialog> dialogs,
                                      const CleanDataConfig& config) {
  std::vector<Dialog> kept;
  for (const Dialog& d : dialogs) {
    bool clean = true;
    int with_conf = 0;
    int low_conf = 0;
    for (const Turn& t : d.turns) {
      if (trim(t.user_text).empty()) {
        clean = false;
        break;
      }
      if (t.asr_confidence) {
        ++with_conf;
        if (*t.asr_confidence < config.min_confidence) ++low_conf;
      }
    }
    if (clean && with_conf > 0) {
      const double frac = static_cast<double>(low_conf) / with_conf;
      if (frac > config.max_low_conf_fraction) clean = false;
    }
    if (clean) kept.push_back(d);
  }
  return kept;
}

void assign_splits(std::vector<Dialog>& dialogs, const SplitRatios& ratios,
                   std::uint64_t seed) {
  std::vector<std::size_t> order(dialogs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0xd1a106ull));
  rng.shuffle(order);
  const auto n = static_cast<double>(dialogs.size());
  const auto n_train = static_cast<std::size_t>(ratios.train * n);
  const auto n_dev = static_cast<std::size_t>(ratios.dev * n);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    Split s = Split::Test;
    if (rank < n_train) {
      s = Split::Train;
    } else if (rank < n_train + n_dev) {
      s = Split::Dev;
    }
    dialogs[order[rank]].split = s;
  }
}

void SynthConfig::validate() const {
  auto check_rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError(std::string("synth rate out of [0,1]: ") + name);
    }
  };
  check_rate(interruption_rate, "interruption_rate");
  check_rate(button_rate, "button_rate");
  check_rate(repetition_rate, "repetition_rate");
  check_rate(start_over_rate, "start_over_rate");
  check_rate(pos_rate, "pos_rate");
  for (double p : score_neg_prob) check_rate(p, "score_neg_prob");
  if (n_dialogs < 0) throw ConfigError("n_dialogs must be >= 0");
  if (min_turns < 1 || max_turns < min_turns) {
    throw ConfigError("need 1 <= min_turns <= max_turns");
  }
}

EntityLexicon synth_lexicon() {
  EntityLexicon lex;
  for (const char* s : {"forbes avenue", "fifth avenue", "east pittsburgh",
                        "pittsburgh", "downtown", "the airport", "penn station"}) {
    lex.add(EntityType::Place, s);
  }
  for (const char* s : {"squirrel hill", "shadyside", "oakland"}) {
    lex.add(EntityType::Neighborhood, s);
  }
  for (const char* s : {"61a", "61b", "28x", "71c"}) {
    lex.add(EntityType::Route, s);
  }
  for (const char* s : {"5 pm", "noon", "8 30 am", "midnight"}) {
    lex.add(EntityType::Time, s);
  }
  return lex;
}

namespace {

const char* kPlaces[] = {"forbes avenue", "fifth avenue", "east pittsburgh",
                         "downtown", "the airport", "penn station"};
const char* kNeighborhoods[] = {"squirrel hill", "shadyside", "oakland"};
const char* kRoutes[] = {"61a", "61b", "28x", "71c"};
const char* kTimes[] = {"5 pm", "noon", "8 30 am", "midnight"};

const char* kFillers[] = {"yes",  "no",          "um",
                          "okay", "hello there", "i need the bus",
                          "when", "thanks"};

std::string pick(Rng& rng, std::span<const char* const> pool) {
  return pool[rng.index(pool.size())];
}

struct SynthEntityPick {
  EntityType type;
  std::string surface;
};

SynthEntityPick pick_entity(Rng& rng) {
  switch (rng.index(4)) {
    case 0: return {EntityType::Place, pick(rng, kPlaces)};
    case 1: return {EntityType::Neighborhood, pick(rng, kNeighborhoods)};
    case 2: return {EntityType::Route, pick(rng, kRoutes)};
    default: return {EntityType::Time, pick(rng, kTimes)};
  }
}

std::string synth_user_text(Rng& rng, Turn& turn) {
  if (rng.bernoulli(0.5)) {
    const SynthEntityPick e = pick_entity(rng);
    turn.user_act = UserAct{UserActType::Inform, e.type};
    switch (e.type) {
      case EntityType::Place:
        return (rng.bernoulli(0.5) ? "leaving from " : "i want to go to ") + e.surface;
      case EntityType::Neighborhood:
        return "somewhere in " + e.surface;
      case EntityType::Route:
        return "the " + e.surface;
      case EntityType::Time:
        return "at " + e.surface;
    }
  }
  turn.user_act = UserAct{UserActType::Noise, std::nullopt};
  return pick(rng, kFillers);
}

std::string synth_system_text(Rng& rng) {
  switch (rng.index(8)) {
    case 0: return "where would you like to leave from?";
    case 1:
      return std::string("where are you leaving from? for example, you can say, ") +
             pick(rng, kPlaces) + ".";
    case 2: return "where do you want to go?";
    case 3: return "what time do you want to travel?";
    case 4:
      return std::string("the ") + pick(rng, kRoutes) +
             ". where would you like to leave from?";
    case 5:
      return std::string("there is a ") + pick(rng, kRoutes) + " at " +
             pick(rng, kTimes) + ".";
    case 6: return "sorry, there is no result that matches your request.";
    default: return "okay, where would you like to go?";
  }
}

}  // namespace

std::vector<Dialog> synth_corpus(std::uint64_t seed, const SynthConfig& config) {
  config.validate();
  std::vector<Dialog> dialogs;
  dialogs.reserve(config.n_dialogs);
  Rng rng(derive_seed(seed, 0xc09b05ull));

  for (int di = 0; di < config.n_dialogs; ++di) {
    Dialog d;
    {
      std::ostringstream id;
      id << "syn" << di;
      d.dialog_id = id.str();
    }
    const int n_turns = rng.int_range(config.min_turns, config.max_turns);
    int cum_events = 0;  // interruptions + repetitions, inclusive
    for (int ti = 0; ti < n_turns; ++ti) {
      Turn turn;
      turn.turn_index = ti;
      turn.interrupted = rng.bernoulli(config.interruption_rate);
      turn.button_used = rng.bernoulli(config.button_rate);
      turn.repetition = rng.bernoulli(config.repetition_rate);
      turn.start_over = rng.bernoulli(config.start_over_rate);
      cum_events += (turn.interrupted ? 1 : 0) + (turn.repetition ? 1 : 0);

      SentimentLabel label;
      if (config.sentiment_dependent_actions) {
        // Label driven by this turn's events only, so that neither user text
        // nor the previous system action leaks it.
        label = (turn.interrupted || turn.repetition) ? SentimentLabel::Negative
                                                      : SentimentLabel::Neutral;
      } else if (cum_events == 0) {
        label = rng.bernoulli(config.pos_rate) ? SentimentLabel::Positive
                                               : SentimentLabel::Neutral;
      } else {
        const double p_neg = config.score_neg_prob[std::min(cum_events, 3) - 1];
        label = rng.bernoulli(p_neg) ? SentimentLabel::Negative
                                     : SentimentLabel::Neutral;
      }
      turn.sentiment_label = label;

      if (config.sentiment_dependent_actions) {
        turn.user_act = UserAct{UserActType::Noise, std::nullopt};
        turn.user_text = pick(rng, kFillers);
        turn.system_text =
            label == SentimentLabel::Negative
                ? "where are you leaving from? for example, you can say, forbes avenue."
                : "where would you like to leave from?";
      } else {
        turn.user_text = synth_user_text(rng, turn);
        turn.system_text = synth_system_text(rng);
      }

      if (config.emit_acoustic) {
        std::ostringstream key;
        key << "ak_" << di << "_" << ti;
        turn.acoustic_key = key.str();
      }
      d.turns.push_back(std::move(turn));
    }
    dialogs.push_back(std::move(d));
  }
  assign_splits(dialogs, config.splits, derive_seed(seed, 0x5b117ull));
  return dialogs;
}

std::string synth_acoustic_csv(std::span<const Dialog> dialogs, std::uint64_t seed,
                               int dim) {
  Rng rng(derive_seed(seed, 0xac0057ull));
  std::ostringstream out;
  out << "key";
  for (int j = 0; j < dim; ++j) out << ",ac" << j;
  out << "\n";
  for (const Dialog& d : dialogs) {
    for (const Turn& t : d.turns) {
      if (!t.acoustic_key) continue;
      double center = 0.0;
      if (t.sentiment_label == SentimentLabel::Negative) center = -1.0;
      if (t.sentiment_label == SentimentLabel::Positive) center = 1.0;
      out << *t.acoustic_key;
      for (int j = 0; j < dim; ++j) {
        // Half the columns are informative, half pure noise.
        const double v = (j % 2 == 0) ? center + rng.uniform(-0.6, 0.6)
                                      : rng.uniform(-1.0, 1.0);
        out << "," << fmt_double(v);
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace sadp
