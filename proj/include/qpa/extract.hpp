#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qpa/errors.hpp"
#include "qpa/reward.hpp"
#include "qpa/rng.hpp"
#include "qpa/transcript.hpp"

// Mining of question / pause / answer structures from cue lists. Educational
// shows pose a question, hold a multi-second silence while the scene carries
// the evidence, then speak the answer; the inter-cue gap is the signature we
// key on. Everything here is deterministic rules so extraction is exactly
// reproducible; the JSONL schema stays stable should a smarter extractor
// replace the rules later.

namespace qpa {

struct QpaConfig {
  int64_t pause_min_ms = 2000;       // smallest inter-cue gap that counts as a pause
  int64_t pause_max_ms = 15000;      // cap; longer silences are scene breaks
  int64_t context_window_ms = 60000; // transcript context taken before the question
  int64_t answer_window_ms = 8000;   // window after the pause for answer cues
  int frame_sample_count = 8;        // frame-reference timestamps per example

  // Tag questions dropped by detect_questions (compared lowercased).
  std::vector<std::string> rhetorical_stoplist = {
      "right?", "okay?", "ok?", "huh?", "you know?", "see?", "got it?", "remember?"};
  // Leading acknowledgement tokens stripped from answers (compared lowercased).
  std::vector<std::string> affirmations = {
      "yeah!", "yes!", "right!", "great!", "exactly!", "that's right!",
      "good job!", "¡sí!", "sí!"};

  // Category lexicons, checked in the order: counting, navigation,
  // object selection ("which" + object noun), spatial location, problem
  // solving; anything left is knowledge recall. Single words match whole
  // tokens, phrases match as substrings of the lowercased question.
  std::vector<std::string> lexicon_counting = {"how many"};
  std::vector<std::string> lexicon_navigation = {
      "how do we get", "how do we go", "which way", "how do we cross",
      "how can we reach"};
  std::vector<std::string> lexicon_object_nouns = {
      "one", "path", "tree", "boat", "door", "color", "hat", "box",
      "bridge", "star", "animal", "shape"};
  std::vector<std::string> lexicon_spatial = {
      "where", "left", "right", "up", "down", "behind", "under", "over",
      "above", "below", "near", "beside", "inside", "outside", "between",
      "on top", "in front", "next to"};
  std::vector<std::string> lexicon_problem_solving = {
      "how do we fix", "what should we do", "what do we need",
      "how can we help", "how do we stop"};
  std::vector<std::string> lexicon_sequential = {"first", "then", "order"};

  void validate() const {
    if (!(0 < pause_min_ms && pause_min_ms < pause_max_ms)) {
      throw ConfigError("require 0 < pause_min_ms < pause_max_ms");
    }
    if (context_window_ms <= 0) throw ConfigError("context_window_ms must be positive");
    if (answer_window_ms <= 0) throw ConfigError("answer_window_ms must be positive");
    if (frame_sample_count < 1) throw ConfigError("frame_sample_count must be >= 1");
  }
};

enum class Category {
  spatial_location,
  object_selection,
  navigation,
  knowledge_recall,
  problem_solving,
  counting,
  other,
};

enum class Modality { text_only, visual_only, multimodal };
enum class Reasoning { immediate, sequential };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::spatial_location: return "spatial_location";
    case Category::object_selection: return "object_selection";
    case Category::navigation: return "navigation";
    case Category::knowledge_recall: return "knowledge_recall";
    case Category::problem_solving: return "problem_solving";
    case Category::counting: return "counting";
    case Category::other: return "other";
  }
  return "other";
}

inline const char* to_string(Modality m) {
  switch (m) {
    case Modality::text_only: return "text_only";
    case Modality::visual_only: return "visual_only";
    case Modality::multimodal: return "multimodal";
  }
  return "multimodal";
}

inline const char* to_string(Reasoning r) {
  return r == Reasoning::immediate ? "immediate" : "sequential";
}

inline Category category_from_string(std::string_view s) {
  static const std::array<Category, 7> all = {
      Category::spatial_location, Category::object_selection, Category::navigation,
      Category::knowledge_recall, Category::problem_solving,  Category::counting,
      Category::other};
  for (Category c : all) {
    if (s == to_string(c)) return c;
  }
  throw Error("unknown category '" + std::string(s) + "'");
}

inline Modality modality_from_string(std::string_view s) {
  for (Modality m : {Modality::text_only, Modality::visual_only, Modality::multimodal}) {
    if (s == to_string(m)) return m;
  }
  throw Error("unknown modality '" + std::string(s) + "'");
}

inline Reasoning reasoning_from_string(std::string_view s) {
  for (Reasoning r : {Reasoning::immediate, Reasoning::sequential}) {
    if (s == to_string(r)) return r;
  }
  throw Error("unknown reasoning '" + std::string(s) + "'");
}

struct PauseSpan {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
};

// One training tuple: frame references (opaque timestamps standing in for
// visual input), transcript context, question, pause span and gold answer.
struct QAExample {
  std::string episode_id;
  std::string question_id;  // "<episode_id>:qNNNN"
  int64_t question_ts_ms = 0;
  std::vector<int64_t> frame_refs;  // ascending, all <= question_ts_ms
  std::string context_text;
  std::string question;  // ends with '?'
  PauseSpan pause;
  std::string answer;
  Category category = Category::knowledge_recall;
  Modality modality = Modality::multimodal;
  Reasoning reasoning = Reasoning::immediate;
};

struct Dataset {
  std::vector<QAExample> examples;
  std::string config_fingerprint;
};

struct QuestionHit {
  int cue_index = 0;
  std::string sentence;
  int64_t ts_ms = 0;
};

struct SkipRecord {
  std::string episode_id;
  int cue_index = 0;
  std::string reason;  // "no_pause" | "no_answer"
};

namespace detail {

// Sentence segmentation on final punctuation runs (. ! ? …), keeping the
// terminators with the sentence.
inline std::vector<std::string> split_sentences(std::string_view text) {
  const std::u32string cps = decode_utf8_lossy(text);
  std::vector<std::string> out;
  std::u32string current;
  const auto is_terminator = [](char32_t c) {
    return c == U'.' || c == U'!' || c == U'?' || c == U'…';
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    current.push_back(cps[i]);
    if (is_terminator(cps[i]) && (i + 1 == cps.size() || !is_terminator(cps[i + 1]))) {
      while (i + 1 < cps.size() && is_unicode_space(cps[i + 1])) ++i;
      std::string sentence = encode_utf8(current);
      if (!sentence.empty()) out.push_back(std::move(sentence));
      current.clear();
    }
  }
  if (!current.empty()) {
    const std::string tail = collapse_whitespace(encode_utf8(current));
    if (!tail.empty()) out.push_back(tail);
  }
  return out;
}

inline bool ends_with_question_mark(std::string_view sentence) {
  return !sentence.empty() && sentence.back() == '?';
}

// Tag-question filter: the sentence is exactly a stop pattern or ends with
// ", <pattern>".
inline bool is_rhetorical(std::string_view sentence, const QpaConfig& cfg) {
  const std::string lc = lowercase_utf8(sentence);
  for (const std::string& pattern : cfg.rhetorical_stoplist) {
    const std::string p = lowercase_utf8(pattern);
    if (lc == p) return true;
    if (lc.size() > p.size() + 1 && lc.compare(lc.size() - p.size(), p.size(), p) == 0) {
      const std::string_view before(lc.data(), lc.size() - p.size());
      if (before.size() >= 2 && before[before.size() - 2] == ',' && before.back() == ' ') {
        return true;
      }
    }
  }
  return false;
}

inline bool contains_term(const std::string& question_lc,
                          const std::set<std::string>& tokens,
                          const std::string& term) {
  const std::string t = lowercase_utf8(term);
  if (t.find(' ') != std::string::npos) return question_lc.find(t) != std::string::npos;
  return tokens.count(t) > 0;
}

inline bool contains_any(const std::string& question_lc,
                         const std::set<std::string>& tokens,
                         const std::vector<std::string>& terms) {
  for (const std::string& term : terms) {
    if (contains_term(question_lc, tokens, term)) return true;
  }
  return false;
}

}  // namespace detail

// Keyword classification of a question, first matching rule wins.
inline Category categorize_question(std::string_view question, const QpaConfig& cfg) {
  const std::string lc = lowercase_utf8(question);
  const std::vector<std::string> token_list = tokenize_answer(question);
  const std::set<std::string> tokens(token_list.begin(), token_list.end());
  using detail::contains_any;
  if (contains_any(lc, tokens, cfg.lexicon_counting)) return Category::counting;
  if (contains_any(lc, tokens, cfg.lexicon_navigation)) return Category::navigation;
  if (tokens.count("which") && contains_any(lc, tokens, cfg.lexicon_object_nouns)) {
    return Category::object_selection;
  }
  if (contains_any(lc, tokens, cfg.lexicon_spatial)) return Category::spatial_location;
  if (contains_any(lc, tokens, cfg.lexicon_problem_solving)) return Category::problem_solving;
  return Category::knowledge_recall;
}

inline Modality classify_modality(std::string_view context_text, std::string_view answer) {
  if (context_text.empty()) return Modality::visual_only;
  const std::string ctx = lowercase_utf8(context_text);
  const std::string ans = lowercase_utf8(answer);
  if (!ans.empty() && ctx.find(ans) != std::string::npos) return Modality::text_only;
  return Modality::multimodal;
}

inline Reasoning classify_reasoning(std::string_view question, const QpaConfig& cfg) {
  const std::string lc = lowercase_utf8(question);
  const std::vector<std::string> token_list = tokenize_answer(question);
  const std::set<std::string> tokens(token_list.begin(), token_list.end());
  if (detail::contains_any(lc, tokens, cfg.lexicon_sequential)) return Reasoning::sequential;
  return Reasoning::immediate;
}

// Every '?'-terminated sentence in the cue list, minus tag questions.
// The hit timestamp is the containing cue's end time.
inline std::vector<QuestionHit> detect_questions(const CueList& cues, const QpaConfig& cfg) {
  std::vector<QuestionHit> hits;
  for (const Cue& cue : cues.cues) {
    for (const std::string& sentence : detail::split_sentences(cue.text)) {
      if (!detail::ends_with_question_mark(sentence)) continue;
      if (detail::is_rhetorical(sentence, cfg)) continue;
      hits.push_back({cue.index, sentence, cue.end_ms});
    }
  }
  return hits;
}

// First inter-cue gap g with pause_min_ms <= g <= pause_max_ms, looking at
// most 2 cues past the question (a short prompt like "Do you see it?" may sit
// between the question and the silence).
inline std::optional<PauseSpan> detect_pause(const CueList& cues, int hit_index,
                                             const QpaConfig& cfg) {
  const auto& all = cues.cues;
  for (int j = hit_index; j <= hit_index + 2; ++j) {
    if (j + 1 >= static_cast<int>(all.size()) || j < 0) break;
    const int64_t gap = all[j + 1].start_ms - all[j].end_ms;
    if (gap >= cfg.pause_min_ms && gap <= cfg.pause_max_ms) {
      return PauseSpan{all[j].end_ms, all[j + 1].start_ms};
    }
  }
  return std::nullopt;
}

// Concatenated cue text starting within the answer window after the pause,
// cut at the first follow-up question sentence, with leading acknowledgement
// tokens stripped.
inline std::optional<std::string> extract_answer(const CueList& cues, const PauseSpan& pause,
                                                 const QpaConfig& cfg) {
  std::string answer;
  bool hit_question = false;
  for (const Cue& cue : cues.cues) {
    if (cue.start_ms < pause.end_ms) continue;
    if (cue.start_ms >= pause.end_ms + cfg.answer_window_ms) break;
    for (const std::string& sentence : detail::split_sentences(cue.text)) {
      if (detail::ends_with_question_mark(sentence)) {
        hit_question = true;
        break;
      }
      if (!answer.empty()) answer.push_back(' ');
      answer += sentence;
    }
    if (hit_question) break;
  }

  // Strip leading affirmations, repeatedly, case-insensitively.
  std::u32string cps = decode_utf8_lossy(answer);
  bool stripped = true;
  while (stripped) {
    stripped = false;
    for (const std::string& affirmation : cfg.affirmations) {
      const std::u32string a = decode_utf8_lossy(affirmation);
      if (a.empty() || cps.size() < a.size()) continue;
      bool match = true;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (to_lower(cps[i]) != to_lower(a[i])) {
          match = false;
          break;
        }
      }
      if (match) {
        cps.erase(0, a.size());
        while (!cps.empty() && is_unicode_space(cps[0])) cps.erase(0, 1);
        stripped = true;
      }
    }
  }
  answer = encode_utf8(cps);
  if (answer.empty()) return std::nullopt;
  return answer;
}

inline std::string config_fingerprint(const QpaConfig& cfg);  // defined below

// The full mining pass: question hits -> pause -> answer -> tagged examples.
// Hits without a qualifying pause or answer are recorded in `skip_log`.
inline Dataset build_examples(const CueList& cues, const QpaConfig& cfg,
                              std::vector<SkipRecord>* skip_log = nullptr) {
  cfg.validate();
  Dataset dataset;
  dataset.config_fingerprint = config_fingerprint(cfg);
  int ordinal = 0;
  const auto skip = [&](int cue_index, const char* reason) {
    if (skip_log) skip_log->push_back({cues.episode_id, cue_index, reason});
  };

  for (const QuestionHit& hit : detect_questions(cues, cfg)) {
    const auto pause = detect_pause(cues, hit.cue_index, cfg);
    if (!pause || pause->start_ms < hit.ts_ms) {
      skip(hit.cue_index, "no_pause");
      continue;
    }
    const auto answer = extract_answer(cues, *pause, cfg);
    if (!answer) {
      skip(hit.cue_index, "no_answer");
      continue;
    }

    QAExample ex;
    ex.episode_id = cues.episode_id;
    char id[16];
    std::snprintf(id, sizeof(id), "q%04d", ordinal++);
    ex.question_id = cues.episode_id + ":" + id;
    ex.question_ts_ms = hit.ts_ms;
    ex.question = hit.sentence;
    ex.pause = *pause;
    ex.answer = *answer;

    const int64_t window_start = hit.ts_ms - cfg.context_window_ms;
    std::string context;
    for (const Cue& cue : cues.cues) {
      if (cue.index >= hit.cue_index) break;  // the question cue is not context
      if (cue.start_ms < window_start) continue;
      if (!context.empty()) context.push_back(' ');
      context += cue.text;
    }
    ex.context_text = std::move(context);

    const int n = cfg.frame_sample_count;
    ex.frame_refs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int64_t t = (n == 1) ? hit.ts_ms
                           : window_start + (static_cast<int64_t>(i) *
                                             cfg.context_window_ms) / (n - 1);
      ex.frame_refs.push_back(std::max<int64_t>(0, t));
    }

    ex.category = categorize_question(ex.question, cfg);
    ex.modality = classify_modality(ex.context_text, ex.answer);
    ex.reasoning = classify_reasoning(ex.question, cfg);
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// Splits

// Episode-level split: a deterministic seed-keyed shuffle of episode ids,
// apportioned by largest remainder, so no episode leaks context across
// splits and sizes stay within one episode of the requested ratios.
inline std::array<Dataset, 3> split_dataset(const Dataset& d,
                                            const std::array<double, 3>& ratios,
                                            uint64_t seed) {
  double sum = 0;
  for (double r : ratios) {
    if (r < 0) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  std::vector<std::string> episodes;
  for (const QAExample& ex : d.examples) {
    if (episodes.empty() || std::find(episodes.begin(), episodes.end(), ex.episode_id) ==
                                episodes.end()) {
      episodes.push_back(ex.episode_id);
    }
  }
  std::size_t nonzero = 0;
  for (double r : ratios) nonzero += (r > 0) ? 1 : 0;
  if (episodes.size() < nonzero) throw InsufficientEpisodes(episodes.size(), nonzero);

  seeded_shuffle(episodes, seed);

  const auto e = static_cast<double>(episodes.size());
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> fractional{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double target = ratios[i] * e;
    counts[i] = static_cast<std::size_t>(target);
    fractional[i] = target - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < episodes.size()) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (fractional[i] > fractional[best]) best = i;
    }
    ++counts[best];
    fractional[best] = -1;
    ++assigned;
  }

  std::array<std::set<std::string>, 3> members;
  std::size_t cursor = 0;
  for (int i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < counts[i]; ++k) members[i].insert(episodes[cursor++]);
  }

  std::array<Dataset, 3> out;
  for (auto& split : out) split.config_fingerprint = d.config_fingerprint;
  for (const QAExample& ex : d.examples) {
    for (int i = 0; i < 3; ++i) {
      if (members[i].count(ex.episode_id)) {
        out[i].examples.push_back(ex);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stats

struct DatasetStats {
  std::size_t n = 0;
  std::size_t episode_count = 0;
  double questions_per_episode_mean = 0.0;
  std::map<std::string, std::size_t> category_counts;
  std::map<std::string, double> category_pct;
  std::map<std::string, std::size_t> modality_counts;
  std::map<std::string, double> modality_pct;
  std::map<std::string, std::size_t> reasoning_counts;
  std::map<std::string, double> reasoning_pct;
};

inline DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  s.n = d.examples.size();
  std::set<std::string> episodes;
  for (const QAExample& ex : d.examples) {
    ++s.category_counts[to_string(ex.category)];
    ++s.modality_counts[to_string(ex.modality)];
    ++s.reasoning_counts[to_string(ex.reasoning)];
    episodes.insert(ex.episode_id);
  }
  s.episode_count = episodes.size();
  s.questions_per_episode_mean =
      episodes.empty() ? 0.0
                       : static_cast<double>(s.n) / static_cast<double>(episodes.size());
  const auto fill_pct = [&](const std::map<std::string, std::size_t>& counts,
                            std::map<std::string, double>& pct) {
    for (const auto& [key, count] : counts) {
      pct[key] = s.n == 0 ? 0.0
                          : 100.0 * static_cast<double>(count) / static_cast<double>(s.n);
    }
  };
  fill_pct(s.category_counts, s.category_pct);
  fill_pct(s.modality_counts, s.modality_pct);
  fill_pct(s.reasoning_counts, s.reasoning_pct);
  return s;
}

// ---------------------------------------------------------------------------
// JSON / JSONL serialization (stable field order for byte reproducibility)

inline nlohmann::ordered_json to_json(const QAExample& ex) {
  nlohmann::ordered_json j;
  j["episode_id"] = ex.episode_id;
  j["question_id"] = ex.question_id;
  j["question_ts_ms"] = ex.question_ts_ms;
  j["frame_refs"] = ex.frame_refs;
  j["context_text"] = ex.context_text;
  j["question"] = ex.question;
  j["pause"] = {{"start_ms", ex.pause.start_ms}, {"end_ms", ex.pause.end_ms}};
  j["answer"] = ex.answer;
  j["category"] = to_string(ex.category);
  j["modality"] = to_string(ex.modality);
  j["reasoning"] = to_string(ex.reasoning);
  return j;
}

inline QAExample example_from_json(const nlohmann::json& j) {
  QAExample ex;
  ex.episode_id = j.at("episode_id").get<std::string>();
  ex.question_id = j.at("question_id").get<std::string>();
  ex.question_ts_ms = j.at("question_ts_ms").get<int64_t>();
  ex.frame_refs = j.at("frame_refs").get<std::vector<int64_t>>();
  ex.context_text = j.at("context_text").get<std::string>();
  ex.question = j.at("question").get<std::string>();
  ex.pause.start_ms = j.at("pause").at("start_ms").get<int64_t>();
  ex.pause.end_ms = j.at("pause").at("end_ms").get<int64_t>();
  ex.answer = j.at("answer").get<std::string>();
  ex.category = category_from_string(j.at("category").get<std::string>());
  ex.modality = modality_from_string(j.at("modality").get<std::string>());
  ex.reasoning = reasoning_from_string(j.at("reasoning").get<std::string>());
  return ex;
}

inline std::string dataset_to_jsonl(const Dataset& d) {
  std::string out;
  for (const QAExample& ex : d.examples) {
    out += to_json(ex).dump();
    out.push_back('\n');
  }
  return out;
}

inline Dataset dataset_from_jsonl(std::string_view text,
                                  std::string config_fingerprint = "") {
  Dataset d;
  d.config_fingerprint = std::move(config_fingerprint);
  std::set<std::string> seen_ids;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i != text.size() && text[i] != '\n') continue;
    const std::string_view line = text.substr(start, i - start);
    start = i + 1;
    if (line.empty()) continue;
    QAExample ex = example_from_json(nlohmann::json::parse(line));
    if (!seen_ids.insert(ex.question_id).second) {
      throw Error("duplicate question_id '" + ex.question_id + "' in dataset");
    }
    d.examples.push_back(std::move(ex));
  }
  return d;
}

inline nlohmann::ordered_json to_json(const SkipRecord& r) {
  nlohmann::ordered_json j;
  j["episode_id"] = r.episode_id;
  j["cue_index"] = r.cue_index;
  j["reason"] = r.reason;
  return j;
}

inline nlohmann::ordered_json to_json(const QpaConfig& cfg) {
  nlohmann::ordered_json j;
  j["pause_min_ms"] = cfg.pause_min_ms;
  j["pause_max_ms"] = cfg.pause_max_ms;
  j["context_window_ms"] = cfg.context_window_ms;
  j["answer_window_ms"] = cfg.answer_window_ms;
  j["frame_sample_count"] = cfg.frame_sample_count;
  j["rhetorical_stoplist"] = cfg.rhetorical_stoplist;
  j["affirmations"] = cfg.affirmations;
  j["lexicon_counting"] = cfg.lexicon_counting;
  j["lexicon_navigation"] = cfg.lexicon_navigation;
  j["lexicon_object_nouns"] = cfg.lexicon_object_nouns;
  j["lexicon_spatial"] = cfg.lexicon_spatial;
  j["lexicon_problem_solving"] = cfg.lexicon_problem_solving;
  j["lexicon_sequential"] = cfg.lexicon_sequential;
  return j;
}

inline std::string config_fingerprint(const QpaConfig& cfg) {
  const uint64_t h = fnv1a64(to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qpa
