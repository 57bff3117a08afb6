#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpa/errors.hpp"
#include "qpa/eval.hpp"
#include "qpa/extract.hpp"
#include "qpa/policy.hpp"
#include "qpa/reward.hpp"
#include "qpa/rng.hpp"

// Group-relative policy optimization: sample K answers per example, score
// them with the similarity reward, center rewards within the group to get
// advantages, and ascend the advantage-weighted log-likelihood with a KL
// penalty tying the policy to its frozen initial snapshot. Plain gradient
// descent with global-norm clipping keeps runs exactly reproducible.

namespace qpa {

struct TrainConfig {
  int group_size = 8;
  double learning_rate = 1e-4;
  double kl_coefficient = 0.01;
  double reward_scaling = 2.0;  // multiplies rewards before advantage centering
  int max_steps = 500;
  int batch_size = 1;
  int eval_every = 100;
  double grad_clip_norm = 1.0;
  uint64_t seed = 0;
  SamplingConfig sampling;
  RewardConfig reward;

  // Plain mean-subtraction is the default; std-normalization is kept as an
  // explicit comparison variant.
  bool normalize_advantages = false;
  int prompt_feature_dim = 64;
  uint64_t hash_seed = 1;
  double eval_threshold = 0.65;  // open-ended correctness cutoff on validation
  // Initial logit bias of <eos> against every previous token: a length prior
  // that keeps early rollouts short. The reference snapshot includes it.
  double init_eos_bias = 0.0;

  void validate() const {
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (kl_coefficient < 0) throw ConfigError("kl_coefficient must be non-negative");
    if (!(reward_scaling > 0)) throw ConfigError("reward_scaling must be positive");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (!(grad_clip_norm > 0)) throw ConfigError("grad_clip_norm must be positive");
    if (prompt_feature_dim < 1) throw ConfigError("prompt_feature_dim must be >= 1");
    if (!(eval_threshold >= 0 && eval_threshold <= 1)) {
      throw ConfigError("eval_threshold must be in [0, 1]");
    }
    sampling.validate();
    reward.validate();
  }
};

// K generations for one example, with their scaled rewards and
// group-relative advantages (filled by the training step).
struct SampleGroup {
  std::string example_id;
  std::vector<Generation> generations;
  std::vector<double> rewards;     // reward_scaling x pre-scaling reward
  std::vector<double> advantages;  // sums to zero within the group
};

struct TrainStepReport {
  int step = 0;
  double mean_reward = 0.0;  // pre-scaling mean over batch x K
  double loss = 0.0;
  double kl_estimate = 0.0;
  double grad_norm = 0.0;  // pre-clipping global norm
};

// Advantage of each generation relative to its group mean. With
// `normalize` set, additionally divides by the group standard deviation
// (the common GRPO variant; off by default here).
inline std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                              bool normalize = false) {
  const int k = static_cast<int>(rewards.size());
  if (k < 2) throw GroupTooSmall(k);
  // tied groups center to exactly zero; the naive mean would leave rounding
  // residue and break the all-tie no-op guarantee
  const bool all_equal =
      std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); });
  if (all_equal) return std::vector<double>(rewards.size(), 0.0);
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                      static_cast<double>(k);
  std::vector<double> advantages(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) advantages[i] = rewards[i] - mean;
  if (normalize) {
    double var = 0;
    for (double a : advantages) var += a * a;
    const double stddev = std::sqrt(var / static_cast<double>(k));
    if (stddev > 0) {
      for (double& a : advantages) a /= stddev + 1e-8;
    }
  }
  return advantages;
}

// K rollouts for one example; rewards/advantages are left for the trainer.
inline SampleGroup sample_group(const PolicyParams& params, const QAExample& example,
                                int k, const SamplingConfig& cfg, uint64_t seed) {
  if (k < 2) throw GroupTooSmall(k);
  SampleGroup group;
  group.example_id = example.question_id;
  group.generations = sample_rollouts(params, example, k, cfg, seed);
  return group;
}

// Simple on-policy estimator: mean over the group's sampled tokens of
// log p_current - log p_reference at the sampled token. Exactly zero for
// identical parameters.
inline double kl_estimate(const PolicyParams& current, const PolicyParams& reference,
                          const SampleGroup& group, const QAExample& example) {
  double diff_sum = 0;
  std::size_t token_count = 0;
  for (const Generation& gen : group.generations) {
    diff_sum += sequence_logprob(current, example, gen.tokens) -
                sequence_logprob(reference, example, gen.tokens);
    token_count += gen.tokens.size();
  }
  return token_count == 0 ? 0.0 : diff_sum / static_cast<double>(token_count);
}

struct TrainerState {
  PolicyParams params;
  PolicyParams reference;  // initial snapshot, never updated
  TrainConfig cfg;
  int step = 0;  // completed steps
};

// One update: per example, sample a group, score it, center rewards into
// advantages, and accumulate the gradient of
//   L = 1/(B*K) * sum_ij (-A_ij * logprob_ij) + kl_coefficient * mean_i kl_i
// then clip the global gradient norm and take a plain gradient-descent step.
inline TrainStepReport grpo_step(TrainerState& state, const std::vector<QAExample>& batch) {
  const TrainConfig& cfg = state.cfg;
  cfg.validate();
  if (batch.empty()) throw EmptyDataset();

  const double batch_k = static_cast<double>(batch.size()) *
                         static_cast<double>(cfg.group_size);
  const uint64_t step_seed = mix_seed(cfg.seed, static_cast<uint64_t>(state.step) + 1);

  std::vector<double> grad(state.params.weight.size(), 0.0);
  double pg_loss = 0;
  double kl_sum = 0;
  double pre_scale_reward_sum = 0;

  for (const QAExample& ex : batch) {
    SampleGroup group = sample_group(state.params, ex, cfg.group_size, cfg.sampling,
                                     step_seed);
    group.rewards.reserve(group.generations.size());
    for (const Generation& gen : group.generations) {
      const std::string pred = extract_final_answer(gen.text, cfg.reward);
      const RewardBreakdown rb = combined_reward(pred, ex.answer, cfg.reward);
      pre_scale_reward_sum += rb.reward;
      group.rewards.push_back(rb.reward * cfg.reward_scaling);
    }
    group.advantages = compute_advantages(group.rewards, cfg.normalize_advantages);

    std::size_t group_tokens = 0;
    for (const Generation& gen : group.generations) group_tokens += gen.tokens.size();

    double kl_diff_sum = 0;
    for (std::size_t j = 0; j < group.generations.size(); ++j) {
      const Generation& gen = group.generations[j];
      auto [lp_cur, g] = sequence_logprob_and_grad(state.params, ex, gen.tokens);
      const double lp_ref = sequence_logprob(state.reference, ex, gen.tokens);
      if (!std::isfinite(lp_cur) || !std::isfinite(lp_ref)) {
        throw NonFiniteLoss(state.step + 1, ex.question_id);
      }
      kl_diff_sum += lp_cur - lp_ref;
      pg_loss += -group.advantages[j] * lp_cur / batch_k;

      // d/dtheta of both the policy-gradient term and the KL estimator pass
      // through the same per-sequence logprob gradient.
      const double coef =
          -group.advantages[j] / batch_k +
          cfg.kl_coefficient / (static_cast<double>(batch.size()) *
                                static_cast<double>(group_tokens));
      for (std::size_t w = 0; w < grad.size(); ++w) grad[w] += coef * g[w];
    }
    kl_sum += group_tokens == 0 ? 0.0 : kl_diff_sum / static_cast<double>(group_tokens);
  }

  const double kl_mean = kl_sum / static_cast<double>(batch.size());
  const double loss = pg_loss + cfg.kl_coefficient * kl_mean;
  if (!std::isfinite(loss)) throw NonFiniteLoss(state.step + 1, batch.front().question_id);

  double norm_sq = 0;
  for (double g : grad) norm_sq += g * g;
  const double grad_norm = std::sqrt(norm_sq);
  if (!std::isfinite(grad_norm)) {
    throw NonFiniteLoss(state.step + 1, batch.front().question_id);
  }
  const double scale = (grad_norm > cfg.grad_clip_norm && grad_norm > 0)
                           ? cfg.grad_clip_norm / grad_norm
                           : 1.0;
  for (std::size_t w = 0; w < grad.size(); ++w) {
    state.params.weight[w] -= cfg.learning_rate * scale * grad[w];
  }

  ++state.step;
  TrainStepReport report;
  report.step = state.step;
  report.mean_reward = pre_scale_reward_sum / batch_k;
  report.loss = loss;
  report.kl_estimate = kl_mean;
  report.grad_norm = grad_norm;
  return report;
}

struct EvalPoint {
  int step = 0;
  double mean_reward = 0.0;  // validation, pre-scaling
  double top1 = 0.0;         // percentage at the configured threshold
};

struct TrainResult {
  PolicyParams final_params;
  PolicyParams best_params;  // highest validation mean reward seen
  int best_step = 0;
  double best_val_reward = 0.0;
  double best_val_top1 = 0.0;
  double final_train_reward = 0.0;  // mean reward of the last step
  std::vector<nlohmann::ordered_json> metrics;  // step and eval records, in order
};

inline std::string metrics_to_jsonl(const TrainResult& result) {
  std::string out;
  for (const auto& record : result.metrics) {
    out += record.dump();
    out.push_back('\n');
  }
  return out;
}

// Builds a vocabulary over the answer tokens of a dataset, sorted for
// determinism. The prompt side is hashed and needs no vocabulary.
inline Vocab vocab_from_dataset(const Dataset& data) {
  std::set<std::string> words;
  for (const QAExample& ex : data.examples) {
    for (const std::string& tok : tokenize_answer(ex.answer)) words.insert(tok);
  }
  return Vocab::from_words({words.begin(), words.end()});
}

// The full loop: seeded-shuffled batches, one grpo_step per batch, periodic
// validation with best-checkpoint retention. The reference policy is the
// initial zero snapshot and never moves. `on_eval` (optional) fires at every
// evaluation point with the current parameters, e.g. to write checkpoints.
inline TrainResult train(
    const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
    const std::function<void(const EvalPoint&, const PolicyParams&)>& on_eval = {}) {
  cfg.validate();
  if (train_set.examples.empty() || val_set.examples.empty()) throw EmptyDataset();

  TrainerState state;
  state.cfg = cfg;
  state.params = PolicyParams::zeros(vocab_from_dataset(train_set),
                                     cfg.prompt_feature_dim, cfg.hash_seed);
  if (cfg.init_eos_bias != 0.0) {
    const int eos = state.params.vocab.eos_id();
    const int dim = state.params.prompt_dim();
    for (int j = 0; j < state.params.vocab.size(); ++j) {
      state.params.at(eos, dim + j) = cfg.init_eos_bias;
    }
  }
  state.reference = state.params;

  TrainResult result;
  result.best_val_reward = -1.0;

  const std::size_t n = train_set.examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;  // forces a shuffle before the first batch
  uint64_t epoch = 0;

  const auto run_eval = [&](int step) {
    const EvalReport report =
        eval_open_ended(state.params, val_set, cfg.reward, cfg.eval_threshold,
                        cfg.seed, cfg.sampling.max_tokens, "val");
    EvalPoint point{step, *report.mean_reward, report.top1_accuracy};
    nlohmann::ordered_json rec;
    rec["step"] = point.step;
    rec["split"] = "val";
    rec["mean_reward"] = point.mean_reward;
    rec["top1"] = point.top1;
    result.metrics.push_back(std::move(rec));
    if (point.mean_reward > result.best_val_reward) {
      result.best_val_reward = point.mean_reward;
      result.best_val_top1 = point.top1;
      result.best_step = point.step;
      result.best_params = state.params;
    }
    if (on_eval) on_eval(point, state.params);
  };

  for (int step = 1; step <= cfg.max_steps; ++step) {
    std::vector<QAExample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= n) {
        seeded_shuffle(order, mix_seed(cfg.seed, fnv1a64("shuffle"), epoch++));
        cursor = 0;
      }
      batch.push_back(train_set.examples[order[cursor++]]);
    }

    const TrainStepReport report = grpo_step(state, batch);
    result.final_train_reward = report.mean_reward;
    nlohmann::ordered_json rec;
    rec["step"] = report.step;
    rec["mean_reward"] = report.mean_reward;
    rec["loss"] = report.loss;
    rec["kl_estimate"] = report.kl_estimate;
    rec["grad_norm"] = report.grad_norm;
    result.metrics.push_back(std::move(rec));

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) run_eval(step);
  }

  result.final_params = std::move(state.params);
  if (result.best_step == 0) {  // unreachable: the final step always evaluates
    result.best_params = result.final_params;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Sequential hyperparameter sweeps: vary one dimension, hold the rest at the
// base configuration, rank candidates by a validation metric.

enum class SelectionMetric { val_mean_reward, val_top1 };

inline const char* to_string(SelectionMetric m) {
  return m == SelectionMetric::val_mean_reward ? "val_mean_reward" : "val_top1";
}

inline SelectionMetric selection_metric_from_string(std::string_view s) {
  if (s == "val_mean_reward") return SelectionMetric::val_mean_reward;
  if (s == "val_top1") return SelectionMetric::val_top1;
  throw ConfigError("unknown selection metric '" + std::string(s) + "'");
}

// Applies `value` to the named TrainConfig dimension. Integer dimensions
// round from the double representation used by sweep value lists.
inline void apply_dimension(TrainConfig& cfg, const std::string& dimension, double value) {
  const auto as_int = [&] { return static_cast<int>(std::llround(value)); };
  if (dimension == "learning_rate") cfg.learning_rate = value;
  else if (dimension == "kl_coefficient") cfg.kl_coefficient = value;
  else if (dimension == "reward_scaling") cfg.reward_scaling = value;
  else if (dimension == "group_size") cfg.group_size = as_int();
  else if (dimension == "max_steps") cfg.max_steps = as_int();
  else if (dimension == "batch_size") cfg.batch_size = as_int();
  else if (dimension == "eval_every") cfg.eval_every = as_int();
  else if (dimension == "grad_clip_norm") cfg.grad_clip_norm = value;
  else if (dimension == "seed") cfg.seed = static_cast<uint64_t>(std::llround(value));
  else if (dimension == "prompt_feature_dim") cfg.prompt_feature_dim = as_int();
  else if (dimension == "eval_threshold") cfg.eval_threshold = value;
  else if (dimension == "sampling.temperature") cfg.sampling.temperature = value;
  else if (dimension == "sampling.top_p") cfg.sampling.top_p = value;
  else if (dimension == "sampling.max_tokens") cfg.sampling.max_tokens = as_int();
  else throw ConfigError("unknown sweep dimension '" + dimension + "'");
}

struct SweepSpec {
  TrainConfig base;
  std::string dimension;
  std::vector<double> values;
  SelectionMetric selection_metric = SelectionMetric::val_mean_reward;

  void validate() const {
    if (values.empty()) throw ConfigError("sweep values must be non-empty");
    TrainConfig probe = base;
    apply_dimension(probe, dimension, values.front());  // throws on unknown name
  }
};

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  double selection_value = 0.0;
  double final_train_reward = 0.0;
};

struct SweepReport {
  std::string dimension;
  SelectionMetric metric = SelectionMetric::val_mean_reward;
  std::vector<SweepRow> rows;  // sorted ascending by swept value
  int best_index = -1;

  double winner_value() const {
    if (best_index < 0) throw Error("sweep produced no successful rows");
    return rows[static_cast<std::size_t>(best_index)].value;
  }
};

// Runs one training per candidate value. Per-row failures are captured in
// the row rather than aborting the remaining candidates.
inline SweepReport sweep(const SweepSpec& spec, const Dataset& train_set,
                         const Dataset& val_set) {
  spec.validate();
  SweepReport report;
  report.dimension = spec.dimension;
  report.metric = spec.selection_metric;

  std::vector<double> values = spec.values;
  std::sort(values.begin(), values.end());

  for (double value : values) {
    SweepRow row;
    row.value = value;
    try {
      TrainConfig cfg = spec.base;
      apply_dimension(cfg, spec.dimension, value);
      const TrainResult result = train(train_set, val_set, cfg);
      row.ok = true;
      row.selection_value = spec.selection_metric == SelectionMetric::val_mean_reward
                                ? result.best_val_reward
                                : result.best_val_top1;
      row.final_train_reward = result.final_train_reward;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (!report.rows[i].ok) continue;
    if (report.best_index < 0 ||
        report.rows[i].selection_value >
            report.rows[static_cast<std::size_t>(report.best_index)].selection_value) {
      report.best_index = static_cast<int>(i);
    }
  }
  return report;
}

// Tab-separated table, one row per candidate, argmax marked with '*'.
inline std::string sweep_table(const SweepReport& report) {
  std::string out = "dimension\tvalue\t" + std::string(to_string(report.metric)) +
                    "\tfinal_train_reward\tbest\n";
  char line[256];
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const SweepRow& row = report.rows[i];
    if (row.ok) {
      std::snprintf(line, sizeof(line), "%s\t%g\t%.6f\t%.6f\t%s\n",
                    report.dimension.c_str(), row.value, row.selection_value,
                    row.final_train_reward,
                    static_cast<int>(i) == report.best_index ? "*" : "");
    } else {
      std::snprintf(line, sizeof(line), "%s\t%g\terror: %s\t\t\n",
                    report.dimension.c_str(), row.value, row.error.c_str());
    }
    out += line;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const SweepRow& row, const SweepReport& report,
                                      std::size_t index) {
  nlohmann::ordered_json j;
  j["dimension"] = report.dimension;
  j["value"] = row.value;
  if (row.ok) {
    j[to_string(report.metric)] = row.selection_value;
    j["final_train_reward"] = row.final_train_reward;
    j["best"] = static_cast<int>(index) == report.best_index;
  } else {
    j["error"] = row.error;
  }
  return j;
}

}  // namespace qpa
