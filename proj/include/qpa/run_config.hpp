#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qpa/errors.hpp"
#include "qpa/extract.hpp"
#include "qpa/grpo.hpp"
#include "qpa/reward.hpp"

// One structured JSON config drives every command. Unknown keys are errors
// (they are almost always sweep typos), and any key can be overridden from
// the command line with a dotted path. The reward block is shared: the
// trainer's reward configuration is the top-level one.

namespace qpa {

struct Paths {
  std::string transcripts_dir = "transcripts";
  std::string dataset_out = "out/dataset.jsonl";
  std::string checkpoints_dir = "out/checkpoints";
  std::string logs_dir = "out/logs";

  void validate() const {
    if (transcripts_dir.empty() || dataset_out.empty() || checkpoints_dir.empty() ||
        logs_dir.empty()) {
      throw ConfigError("paths must be non-empty");
    }
  }
};

struct RunConfig {
  QpaConfig qpa;
  RewardConfig reward;
  TrainConfig train;
  Paths paths;

  void validate() const {
    qpa.validate();
    reward.validate();
    train.validate();
    paths.validate();
  }
};

inline nlohmann::ordered_json to_json(const RewardConfig& cfg) {
  nlohmann::ordered_json j;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["scaling"] = cfg.scaling;
  j["answer_markers"] = cfg.answer_markers;
  return j;
}

inline nlohmann::ordered_json to_json(const SamplingConfig& cfg) {
  nlohmann::ordered_json j;
  j["temperature"] = cfg.temperature;
  j["top_p"] = cfg.top_p;
  j["max_tokens"] = cfg.max_tokens;
  return j;
}

// The train block omits the nested reward config on purpose; it is filled
// from the top-level reward block at load time.
inline nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["group_size"] = cfg.group_size;
  j["learning_rate"] = cfg.learning_rate;
  j["kl_coefficient"] = cfg.kl_coefficient;
  j["reward_scaling"] = cfg.reward_scaling;
  j["max_steps"] = cfg.max_steps;
  j["batch_size"] = cfg.batch_size;
  j["eval_every"] = cfg.eval_every;
  j["grad_clip_norm"] = cfg.grad_clip_norm;
  j["seed"] = cfg.seed;
  j["normalize_advantages"] = cfg.normalize_advantages;
  j["prompt_feature_dim"] = cfg.prompt_feature_dim;
  j["hash_seed"] = cfg.hash_seed;
  j["eval_threshold"] = cfg.eval_threshold;
  j["sampling"] = to_json(cfg.sampling);
  return j;
}

inline nlohmann::ordered_json to_json(const Paths& paths) {
  nlohmann::ordered_json j;
  j["transcripts_dir"] = paths.transcripts_dir;
  j["dataset_out"] = paths.dataset_out;
  j["checkpoints_dir"] = paths.checkpoints_dir;
  j["logs_dir"] = paths.logs_dir;
  return j;
}

inline nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["qpa"] = to_json(cfg.qpa);
  j["reward"] = to_json(cfg.reward);
  j["train"] = to_json(cfg.train);
  j["paths"] = to_json(cfg.paths);
  return j;
}

namespace detail {

inline void check_unknown_keys(const nlohmann::json& user, const nlohmann::json& schema,
                               const std::string& prefix) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.is_object() || !schema.contains(key)) {
      throw ConfigError("unknown config key '" + path + "'");
    }
    if (value.is_object()) check_unknown_keys(value, schema.at(key), path);
  }
}

inline void merge_onto(nlohmann::ordered_json& base, const nlohmann::json& user) {
  for (const auto& [key, value] : user.items()) {
    if (value.is_object() && base.contains(key) && base.at(key).is_object()) {
      merge_onto(base.at(key), value);
    } else {
      base[key] = value;
    }
  }
}

inline std::vector<std::string> get_strings(const nlohmann::json& j, const char* key) {
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace detail

inline QpaConfig qpa_config_from_json(const nlohmann::json& j) {
  QpaConfig cfg;
  cfg.pause_min_ms = j.at("pause_min_ms").get<int64_t>();
  cfg.pause_max_ms = j.at("pause_max_ms").get<int64_t>();
  cfg.context_window_ms = j.at("context_window_ms").get<int64_t>();
  cfg.answer_window_ms = j.at("answer_window_ms").get<int64_t>();
  cfg.frame_sample_count = j.at("frame_sample_count").get<int>();
  cfg.rhetorical_stoplist = detail::get_strings(j, "rhetorical_stoplist");
  cfg.affirmations = detail::get_strings(j, "affirmations");
  cfg.lexicon_counting = detail::get_strings(j, "lexicon_counting");
  cfg.lexicon_navigation = detail::get_strings(j, "lexicon_navigation");
  cfg.lexicon_object_nouns = detail::get_strings(j, "lexicon_object_nouns");
  cfg.lexicon_spatial = detail::get_strings(j, "lexicon_spatial");
  cfg.lexicon_problem_solving = detail::get_strings(j, "lexicon_problem_solving");
  cfg.lexicon_sequential = detail::get_strings(j, "lexicon_sequential");
  return cfg;
}

inline RewardConfig reward_config_from_json(const nlohmann::json& j) {
  RewardConfig cfg;
  cfg.alpha = j.at("alpha").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.scaling = j.at("scaling").get<double>();
  cfg.answer_markers = detail::get_strings(j, "answer_markers");
  return cfg;
}

inline SamplingConfig sampling_config_from_json(const nlohmann::json& j) {
  SamplingConfig cfg;
  cfg.temperature = j.at("temperature").get<double>();
  cfg.top_p = j.at("top_p").get<double>();
  cfg.max_tokens = j.at("max_tokens").get<int>();
  return cfg;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.group_size = j.at("group_size").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.kl_coefficient = j.at("kl_coefficient").get<double>();
  cfg.reward_scaling = j.at("reward_scaling").get<double>();
  cfg.max_steps = j.at("max_steps").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.eval_every = j.at("eval_every").get<int>();
  cfg.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.normalize_advantages = j.at("normalize_advantages").get<bool>();
  cfg.prompt_feature_dim = j.at("prompt_feature_dim").get<int>();
  cfg.hash_seed = j.at("hash_seed").get<uint64_t>();
  cfg.eval_threshold = j.at("eval_threshold").get<double>();
  cfg.sampling = sampling_config_from_json(j.at("sampling"));
  return cfg;
}

inline Paths paths_from_json(const nlohmann::json& j) {
  Paths paths;
  paths.transcripts_dir = j.at("transcripts_dir").get<std::string>();
  paths.dataset_out = j.at("dataset_out").get<std::string>();
  paths.checkpoints_dir = j.at("checkpoints_dir").get<std::string>();
  paths.logs_dir = j.at("logs_dir").get<std::string>();
  return paths;
}

inline RunConfig run_config_from_json(const nlohmann::json& merged) {
  RunConfig cfg;
  cfg.qpa = qpa_config_from_json(merged.at("qpa"));
  cfg.reward = reward_config_from_json(merged.at("reward"));
  cfg.train = train_config_from_json(merged.at("train"));
  cfg.paths = paths_from_json(merged.at("paths"));
  cfg.train.reward = cfg.reward;  // single source of truth
  return cfg;
}

// Parses a user config document: unknown keys are rejected, known keys are
// merged onto the defaults, and the result is validated.
inline RunConfig load_run_config(const std::string& json_text) {
  nlohmann::json user;
  try {
    user = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw ConfigError("config root must be a JSON object");

  nlohmann::ordered_json merged = to_json(RunConfig{});
  detail::check_unknown_keys(user, merged, "");
  detail::merge_onto(merged, user);

  RunConfig cfg = run_config_from_json(merged);
  cfg.validate();
  return cfg;
}

// Applies one "--section.key value" override onto a config document,
// coercing the string to the type already present at that path.
inline void apply_override(nlohmann::ordered_json& doc, const std::string& dotted_key,
                           const std::string& value) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= dotted_key.size(); ++i) {
    if (i == dotted_key.size() || dotted_key[i] == '.') {
      parts.push_back(dotted_key.substr(start, i - start));
      start = i + 1;
    }
  }

  nlohmann::ordered_json* node = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) {
      throw ConfigError("unknown config key '" + dotted_key + "'");
    }
    node = &node->at(parts[i]);
  }
  const std::string& leaf = parts.back();
  if (!node->is_object() || !node->contains(leaf)) {
    throw ConfigError("unknown config key '" + dotted_key + "'");
  }

  nlohmann::ordered_json& slot = node->at(leaf);
  try {
    if (slot.is_number_float()) {
      slot = std::stod(value);
    } else if (slot.is_number_integer() || slot.is_number_unsigned()) {
      slot = std::stoll(value);
    } else if (slot.is_boolean()) {
      if (value == "true") slot = true;
      else if (value == "false") slot = false;
      else throw ConfigError("expected true/false for '" + dotted_key + "'");
    } else if (slot.is_string()) {
      slot = value;
    } else if (slot.is_array()) {
      slot = nlohmann::json::parse(value);
    } else {
      throw ConfigError("cannot override config key '" + dotted_key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value '" + value + "' for config key '" + dotted_key + "'");
  }
}

}  // namespace qpa
