// qpa: mine question-pause-answer structure from subtitle transcripts, train
// a tiny policy on it with group-relative policy optimization, and evaluate
// open-ended or multiple-choice. One JSON config drives everything; any key
// can be overridden with --section.key <value>.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qpa/errors.hpp"
#include "qpa/eval.hpp"
#include "qpa/extract.hpp"
#include "qpa/grpo.hpp"
#include "qpa/policy.hpp"
#include "qpa/reward.hpp"
#include "qpa/run_config.hpp"
#include "qpa/transcript.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qpa::Error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw qpa::Error("cannot open file for writing: " + path);
  out << content;
  if (!out) throw qpa::Error("failed writing file: " + path);
}

// Applies trailing "--a.b.c value" / "--a.b.c=value" arguments onto the
// config document; anything else is an error.
void apply_extra_args(ordered_json& doc, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos) {
      throw qpa::ConfigError("unrecognized argument '" + arg + "'");
    }
    arg = arg.substr(2);
    std::string value;
    const std::size_t eq = arg.find('=');
    if (eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg = arg.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) {
        throw qpa::ConfigError("missing value for override '--" + arg + "'");
      }
      value = extras[++i];
    }
    qpa::apply_override(doc, arg, value);
  }
}

struct LoadedConfig {
  qpa::RunConfig cfg;
  ordered_json doc;  // merged document, for sweeps that patch train.*
};

LoadedConfig load_config(const std::string& config_path,
                         const std::vector<std::string>& extras) {
  ordered_json doc = qpa::to_json(qpa::RunConfig{});
  if (!config_path.empty()) {
    json user = json::parse(slurp(config_path));
    qpa::detail::check_unknown_keys(user, doc, "");
    qpa::detail::merge_onto(doc, user);
  }
  apply_extra_args(doc, extras);
  qpa::RunConfig cfg = qpa::run_config_from_json(doc);
  cfg.validate();
  return {std::move(cfg), std::move(doc)};
}

qpa::Dataset load_dataset(const std::string& path) {
  qpa::Dataset d = qpa::dataset_from_jsonl(slurp(path));
  if (d.examples.empty()) throw qpa::EmptyDataset();
  return d;
}

// ---------------------------------------------------------------------------

int cmd_extract(const qpa::RunConfig& cfg, const std::string& transcripts_dir,
                const std::string& out_path, const std::string& skip_path) {
  if (!fs::is_directory(transcripts_dir)) {
    std::cerr << "no transcripts found: not a directory: " << transcripts_dir << "\n";
    return 1;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(transcripts_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".srt" || ext == ".vtt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "no transcripts found in " << transcripts_dir << "\n";
    return 1;
  }

  qpa::Dataset merged;
  merged.config_fingerprint = qpa::config_fingerprint(cfg.qpa);
  std::vector<qpa::SkipRecord> skips;
  std::size_t parsed_files = 0;
  for (const fs::path& file : files) {
    std::vector<qpa::ParseWarning> warnings;
    try {
      const qpa::CueList cues = qpa::parse_transcript(
          slurp(file.string()), qpa::SubtitleFormat::auto_detect,
          file.stem().string(), &warnings);
      for (qpa::ParseWarning w : warnings) {
        w.file = file.string();
        ordered_json j{{"file", w.file}, {"line", w.line}, {"category", w.category},
                       {"message", w.message}};
        std::cerr << j.dump() << "\n";
      }
      const std::size_t before = merged.examples.size();
      qpa::Dataset d = qpa::build_examples(cues, cfg.qpa, &skips);
      for (qpa::QAExample& ex : d.examples) merged.examples.push_back(std::move(ex));
      std::cout << "episode=" << cues.episode_id << " cues=" << cues.cues.size()
                << " examples=" << merged.examples.size() - before << "\n";
      ++parsed_files;
    } catch (const qpa::Error& e) {
      std::cerr << "warning: skipping " << file.string() << ": " << e.what() << "\n";
    }
  }
  if (parsed_files == 0) {
    std::cerr << "all transcript files failed to parse\n";
    return 1;
  }

  spill(out_path, qpa::dataset_to_jsonl(merged));
  std::string skip_text;
  for (const qpa::SkipRecord& r : skips) {
    skip_text += qpa::to_json(r).dump();
    skip_text.push_back('\n');
  }
  spill(skip_path, skip_text);

  std::cout << "episodes=" << parsed_files << " examples=" << merged.examples.size()
            << "\n";
  return merged.examples.empty() ? 2 : 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& json_out) {
  const qpa::Dataset d = load_dataset(dataset_path);
  const qpa::DatasetStats s = qpa::dataset_stats(d);
  ordered_json j;
  j["n"] = s.n;
  j["episodes"] = s.episode_count;
  j["questions_per_episode_mean"] = s.questions_per_episode_mean;
  j["category"] = {{"counts", s.category_counts}, {"pct", s.category_pct}};
  j["modality"] = {{"counts", s.modality_counts}, {"pct", s.modality_pct}};
  j["reasoning"] = {{"counts", s.reasoning_counts}, {"pct", s.reasoning_pct}};

  std::printf("examples=%zu episodes=%zu questions/episode=%.2f\n", s.n,
              s.episode_count, s.questions_per_episode_mean);
  const auto print_axis = [](const char* name,
                             const std::map<std::string, std::size_t>& counts,
                             const std::map<std::string, double>& pct) {
    std::printf("%s:\n", name);
    for (const auto& [key, count] : counts) {
      std::printf("  %-18s %6zu  %6.1f%%\n", key.c_str(), count, pct.at(key));
    }
  };
  print_axis("category", s.category_counts, s.category_pct);
  print_axis("modality", s.modality_counts, s.modality_pct);
  print_axis("reasoning", s.reasoning_counts, s.reasoning_pct);
  if (!json_out.empty()) spill(json_out, j.dump(2) + "\n");
  return 0;
}

int cmd_split(const std::string& dataset_path, const std::string& ratios_arg,
              uint64_t seed, const std::string& out_prefix) {
  std::array<double, 3> ratios{};
  if (std::sscanf(ratios_arg.c_str(), "%lf,%lf,%lf", &ratios[0], &ratios[1],
                  &ratios[2]) != 3) {
    throw qpa::ConfigError("--ratios expects three comma-separated fractions");
  }
  const qpa::Dataset d = load_dataset(dataset_path);
  std::cout << "seed=" << seed << "\n";
  const auto splits = qpa::split_dataset(d, ratios, seed);
  const char* names[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    const std::string path = out_prefix + "." + names[i] + ".jsonl";
    spill(path, qpa::dataset_to_jsonl(splits[i]));
    std::cout << names[i] << "=" << splits[i].examples.size() << " -> " << path << "\n";
  }
  return 0;
}

int cmd_train_impl(const qpa::RunConfig& cfg, const qpa::Dataset& train_set,
                   const qpa::Dataset& val_set, const std::string& checkpoints_dir,
                   const std::string& log_path) {
  std::cout << "seed=" << cfg.train.seed << "\n";
  fs::create_directories(checkpoints_dir);
  const auto on_eval = [&](const qpa::EvalPoint& point, const qpa::PolicyParams& params) {
    char name[32];
    std::snprintf(name, sizeof(name), "step-%04d.tlm", point.step);
    qpa::save_policy(params, (fs::path(checkpoints_dir) / name).string());
    std::printf("step=%d val_mean_reward=%.4f top1=%.2f\n", point.step,
                point.mean_reward, point.top1);
  };
  const qpa::TrainResult result = qpa::train(train_set, val_set, cfg.train, on_eval);
  qpa::save_policy(result.best_params,
                   (fs::path(checkpoints_dir) / "best.tlm").string());
  spill(log_path, qpa::metrics_to_jsonl(result));
  std::printf("done: best step=%d val_mean_reward=%.4f top1=%.2f  best.tlm + %s\n",
              result.best_step, result.best_val_reward, result.best_val_top1,
              log_path.c_str());
  return 0;
}

int cmd_train(const qpa::RunConfig& cfg, const std::string& dataset_path,
              const std::string& val_path, const std::string& checkpoints_dir,
              const std::string& log_path) {
  const qpa::Dataset train_set = load_dataset(dataset_path);
  if (!val_path.empty()) {
    return cmd_train_impl(cfg, train_set, load_dataset(val_path), checkpoints_dir,
                          log_path);
  }
  std::vector<std::string> episodes;
  for (const auto& ex : train_set.examples) {
    if (std::find(episodes.begin(), episodes.end(), ex.episode_id) == episodes.end()) {
      episodes.push_back(ex.episode_id);
    }
  }
  if (episodes.size() >= 2) {
    qpa::seeded_shuffle(episodes, cfg.train.seed);
    const std::string held_out = episodes.back();
    qpa::Dataset train_part, val_part;
    train_part.config_fingerprint = train_set.config_fingerprint;
    val_part.config_fingerprint = train_set.config_fingerprint;
    for (const auto& ex : train_set.examples) {
      (ex.episode_id == held_out ? val_part : train_part).examples.push_back(ex);
    }
    std::cout << "no --val given; holding out episode " << held_out << " ("
              << val_part.examples.size() << " examples)\n";
    return cmd_train_impl(cfg, train_part, val_part, checkpoints_dir, log_path);
  }
  std::cout << "no --val given and only one episode; validating on the training set\n";
  return cmd_train_impl(cfg, train_set, train_set, checkpoints_dir, log_path);
}

int cmd_eval(const qpa::RunConfig& cfg, const std::string& dataset_path,
             const std::string& checkpoint, bool open_ended, bool mcq, int mcq_options,
             const std::string& mcq_mode, double threshold, uint64_t seed,
             const std::string& report_path, const std::string& items_path) {
  const qpa::Dataset data = load_dataset(dataset_path);
  const qpa::PolicyParams params = qpa::load_policy(checkpoint);
  std::cout << "seed=" << seed << "\n";
  if (!open_ended && !mcq) open_ended = true;

  ordered_json report;
  if (open_ended) {
    const qpa::EvalReport r =
        qpa::eval_open_ended(params, data, cfg.reward, threshold, seed,
                             cfg.train.sampling.max_tokens, "open_ended");
    std::fputs(qpa::report_table(r).c_str(), stdout);
    report["open_ended"] = qpa::to_json(r);
  }
  if (mcq) {
    const qpa::McqMode mode = [&] {
      if (mcq_mode == "score_options") return qpa::McqMode::score_options;
      if (mcq_mode == "generate_then_match") return qpa::McqMode::generate_then_match;
      throw qpa::ConfigError("unknown --mcq-mode '" + mcq_mode + "'");
    }();
    const auto items = qpa::make_mcq(data, mcq_options, seed);
    if (!items_path.empty()) {
      std::string jsonl;
      for (const qpa::McqItem& item : items) {
        jsonl += qpa::to_json(item).dump();
        jsonl.push_back('\n');
      }
      spill(items_path, jsonl);
    }
    const qpa::EvalReport r = qpa::eval_mcq(params, items, mode, seed, cfg.reward,
                                            cfg.train.sampling.max_tokens, "mcq");
    std::fputs(qpa::report_table(r).c_str(), stdout);
    report["mcq"] = qpa::to_json(r);
  }
  if (!report_path.empty()) spill(report_path, report.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const qpa::RunConfig& cfg, const ordered_json& doc,
              const std::string& spec_path, const std::string& dataset_path,
              const std::string& val_path, const std::string& out_path) {
  const json spec_json = json::parse(slurp(spec_path));
  for (const auto& [key, value] : spec_json.items()) {
    if (key != "dimension" && key != "values" && key != "selection_metric" &&
        key != "base") {
      throw qpa::ConfigError("unknown sweep spec key '" + key + "'");
    }
    (void)value;
  }
  qpa::SweepSpec spec;
  spec.dimension = spec_json.at("dimension").get<std::string>();
  spec.values = spec_json.at("values").get<std::vector<double>>();
  if (spec_json.contains("selection_metric")) {
    spec.selection_metric = qpa::selection_metric_from_string(
        spec_json.at("selection_metric").get<std::string>());
  }
  ordered_json train_doc = doc.at("train");
  if (spec_json.contains("base")) {
    qpa::detail::check_unknown_keys(spec_json.at("base"), train_doc, "base");
    qpa::detail::merge_onto(train_doc, spec_json.at("base"));
  }
  spec.base = qpa::train_config_from_json(train_doc);
  spec.base.reward = cfg.reward;
  spec.validate();

  const qpa::Dataset train_set = load_dataset(dataset_path);
  const qpa::Dataset val_set = val_path.empty() ? train_set : load_dataset(val_path);
  std::cout << "seed=" << spec.base.seed << "\n";

  const qpa::SweepReport report = qpa::sweep(spec, train_set, val_set);
  std::fputs(qpa::sweep_table(report).c_str(), stdout);

  std::string jsonl;
  bool any_ok = false;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    any_ok = any_ok || report.rows[i].ok;
    jsonl += qpa::to_json(report.rows[i], report, i).dump();
    jsonl.push_back('\n');
  }
  if (!out_path.empty()) spill(out_path, jsonl);
  return any_ok ? 0 : 1;
}

int cmd_reward(const qpa::RunConfig& cfg, const std::string& pred,
               const std::string& gold) {
  const qpa::RewardBreakdown rb = qpa::combined_reward(pred, gold, cfg.reward);
  ordered_json j;
  j["f1"] = rb.f1;
  j["lev_distance"] = rb.lev_distance;
  j["lev_sim"] = rb.lev_sim;
  j["reward"] = rb.reward;
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"question-pause-answer mining and group-relative policy training"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration");

  auto* extract = app.add_subcommand("extract", "mine a dataset from transcripts");
  std::string transcripts_dir, out_path, skip_path;
  extract->add_option("--transcripts", transcripts_dir, "directory of .srt/.vtt files");
  extract->add_option("--out", out_path, "output dataset JSONL path");
  extract->add_option("--skip-log", skip_path, "skip log JSONL path");
  extract->allow_extras();

  auto* stats = app.add_subcommand("stats", "dataset distribution report");
  std::string stats_dataset, stats_json;
  stats->add_option("--dataset", stats_dataset)->required();
  stats->add_option("--json", stats_json, "also write the report as JSON");
  stats->allow_extras();

  auto* split = app.add_subcommand("split", "episode-level train/val/test split");
  std::string split_dataset_path, ratios = "0.8,0.1,0.1", out_prefix;
  bool seed_given = false;
  uint64_t split_seed = 0;
  split->add_option("--dataset", split_dataset_path)->required();
  split->add_option("--ratios", ratios, "three fractions summing to 1");
  split->add_option("--seed", split_seed)->each([&](const std::string&) { seed_given = true; });
  split->add_option("--out-prefix", out_prefix)->required();
  split->allow_extras();

  auto* train = app.add_subcommand("train", "GRPO training run");
  std::string train_dataset, train_val, train_ckpt, train_log;
  train->add_option("--dataset", train_dataset)->required();
  train->add_option("--val", train_val, "validation dataset (default: held-out split)");
  train->add_option("--checkpoints", train_ckpt, "checkpoint directory");
  train->add_option("--log", train_log, "metrics JSONL path");
  train->allow_extras();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_dataset, eval_ckpt, eval_report, mcq_mode = "score_options";
  bool open_ended = false, mcq = false;
  int mcq_options = 4;
  double threshold = 0.65;
  bool eval_seed_given = false;
  uint64_t eval_seed = 0;
  eval_cmd->add_option("--dataset", eval_dataset)->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_flag("--open-ended", open_ended, "open-ended generation scoring");
  eval_cmd->add_flag("--mcq", mcq, "multiple-choice evaluation");
  eval_cmd->add_option("--mcq-options", mcq_options, "options per MCQ item");
  eval_cmd->add_option("--mcq-mode", mcq_mode, "score_options | generate_then_match");
  eval_cmd->add_option("--threshold", threshold, "open-ended correctness cutoff");
  eval_cmd->add_option("--seed", eval_seed)->each([&](const std::string&) { eval_seed_given = true; });
  eval_cmd->add_option("--report", eval_report, "write the JSON report here");
  std::string eval_items;
  eval_cmd->add_option("--mcq-items", eval_items, "write the MCQ items as JSONL");
  eval_cmd->allow_extras();

  auto* sweep_cmd = app.add_subcommand("sweep", "one-dimensional hyperparameter sweep");
  std::string sweep_spec, sweep_dataset, sweep_val, sweep_out;
  sweep_cmd->add_option("--spec", sweep_spec)->required();
  sweep_cmd->add_option("--dataset", sweep_dataset)->required();
  sweep_cmd->add_option("--val", sweep_val);
  sweep_cmd->add_option("--out", sweep_out, "JSONL copy of the table");
  sweep_cmd->allow_extras();

  auto* reward_cmd = app.add_subcommand("reward", "score one prediction against gold");
  std::string pred, gold;
  reward_cmd->add_option("--pred", pred)->required();
  reward_cmd->add_option("--gold", gold)->required();
  reward_cmd->allow_extras();

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const LoadedConfig loaded = load_config(config_path, sub->remaining());
    const qpa::RunConfig& cfg = loaded.cfg;

    if (sub == extract) {
      if (transcripts_dir.empty()) transcripts_dir = cfg.paths.transcripts_dir;
      if (out_path.empty()) out_path = cfg.paths.dataset_out;
      if (skip_path.empty()) skip_path = out_path + ".skips.jsonl";
      return cmd_extract(cfg, transcripts_dir, out_path, skip_path);
    }
    if (sub == stats) return cmd_stats(stats_dataset, stats_json);
    if (sub == split) {
      return cmd_split(split_dataset_path, ratios,
                       seed_given ? split_seed : cfg.train.seed, out_prefix);
    }
    if (sub == train) {
      if (train_ckpt.empty()) train_ckpt = cfg.paths.checkpoints_dir;
      if (train_log.empty()) {
        train_log = (fs::path(cfg.paths.logs_dir) / "metrics.jsonl").string();
      }
      return cmd_train(cfg, train_dataset, train_val, train_ckpt, train_log);
    }
    if (sub == eval_cmd) {
      return cmd_eval(cfg, eval_dataset, eval_ckpt, open_ended, mcq, mcq_options,
                      mcq_mode, threshold,
                      eval_seed_given ? eval_seed : cfg.train.seed, eval_report,
                      eval_items);
    }
    if (sub == sweep_cmd) {
      if (sweep_out.empty()) {
        sweep_out = (fs::path(cfg.paths.logs_dir) / "sweep.jsonl").string();
      }
      return cmd_sweep(cfg, loaded.doc, sweep_spec, sweep_dataset, sweep_val, sweep_out);
    }
    if (sub == reward_cmd) return cmd_reward(cfg, pred, gold);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
