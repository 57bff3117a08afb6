// Acceptance suite: one line per criterion, nonzero exit if any fail.
// Each check pins its tolerances in code; nothing is deferred to later
// calibration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpa/eval.hpp"
#include "qpa/extract.hpp"
#include "qpa/grpo.hpp"
#include "qpa/policy.hpp"
#include "qpa/reward.hpp"
#include "qpa/rng.hpp"
#include "qpa/transcript.hpp"
#include "support/curriculum.hpp"

using namespace qpa;
using namespace qpa::testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fixture_text(const std::string& rel) {
  std::ifstream in(std::string(QPA_FIXTURE_DIR) + "/" + rel, std::ios::binary);
  if (!in) throw Error("missing fixture " + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string random_phrase(SplitMix64& rng) {
  static const std::vector<std::string> chars = {"a", "b", "c", "d", "e", "o", "t",
                                                 "r", "s", "n", "é", "ñ", "ü", " "};
  std::string s;
  const int len = 1 + static_cast<int>(rng.next_below(24));
  for (int i = 0; i < len; ++i) s += chars[rng.next_below(chars.size())];
  if (s.find_first_not_of(' ') == std::string::npos) s += "x";
  return s;
}

// --- criterion 1 -----------------------------------------------------------

Outcome reward_exactness() {
  const double t0 = now_seconds();
  RewardConfig cfg;
  SplitMix64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    const std::string s = random_phrase(rng);
    if (combined_reward(s, s, cfg).reward != 1.0) {
      return {false, "self-reward != 1.0 for '" + s + "'"};
    }
  }
  // near-miss suite: gold vs article-dropped / pluralized variants
  const std::vector<std::pair<std::string, std::string>> near_misses = {
      {"blue tree", "the blue tree"},
      {"the red boats", "the red boat"},
      {"over the bridge", "over the bridges"},
      {"cross the river", "we cross the river"},
      {"a tall mountain", "the tall mountain"},
      {"the yellow stars", "yellow star"},
      {"three little crabs", "the three little crabs"},
      {"behind the door", "behind the doors"},
      {"take the left path", "take the left paths"},
      {"under the big rock", "under a big rock"},
  };
  for (const auto& [pred, gold] : near_misses) {
    const double r = combined_reward(pred, gold, cfg).reward;
    if (!(r >= 0.60 && r < 1.00)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "near-miss '%s' vs '%s' scored %.4f outside [0.60,1)",
                    pred.c_str(), gold.c_str(), r);
      return {false, buf};
    }
  }
  const double elapsed = now_seconds() - t0;
  if (elapsed >= 1.0) return {false, "took " + std::to_string(elapsed) + "s (limit 1s)"};
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "1000 self-rewards exactly 1.0; 10 near-misses in [0.60,1.00); %.3fs",
                elapsed);
  return {true, buf};
}

// --- criterion 2 -----------------------------------------------------------

int64_t lev_dp_oracle(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<int64_t>> d(a.size() + 1,
                                      std::vector<int64_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int64_t>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int64_t>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

Outcome levenshtein_oracle() {
  const double t0 = now_seconds();
  SplitMix64 rng(202);
  static const std::vector<std::string> chars = {"a", "b", "c", "x", "y",
                                                 "z", "é", "ü", " ", "t"};
  for (int trial = 0; trial < 10000; ++trial) {
    std::string a, b;
    const int la = static_cast<int>(rng.next_below(41));
    const int lb = static_cast<int>(rng.next_below(41));
    for (int i = 0; i < la; ++i) a += chars[rng.next_below(chars.size())];
    for (int i = 0; i < lb; ++i) b += chars[rng.next_below(chars.size())];
    const int64_t fast = levenshtein(a, b);
    const int64_t slow = lev_dp_oracle(decode_utf8_lossy(a), decode_utf8_lossy(b));
    if (fast != slow) {
      return {false, "mismatch on pair ('" + a + "', '" + b + "')"};
    }
  }
  const double elapsed = now_seconds() - t0;
  if (elapsed >= 10.0) return {false, "took " + std::to_string(elapsed) + "s (limit 10s)"};
  char buf[96];
  std::snprintf(buf, sizeof(buf), "10000 pairs, zero mismatches, %.2fs", elapsed);
  return {true, buf};
}

// --- criterion 3 -----------------------------------------------------------

Outcome advantage_zero_sum() {
  SplitMix64 rng(303);
  for (int k : {2, 4, 8, 16}) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> rewards;
      for (int i = 0; i < k; ++i) rewards.push_back(2.0 * rng.next_double());
      const auto adv = compute_advantages(rewards);
      const double total = std::accumulate(adv.begin(), adv.end(), 0.0);
      if (std::abs(total) > 1e-9) {
        return {false, "advantage sum " + std::to_string(total) + " at K=" +
                           std::to_string(k)};
      }
    }
  }
  // all-tie group: zero advantages and a zero parameter delta at kl = 0
  const auto tied = compute_advantages({0.5, 0.5, 0.5, 0.5});
  for (double a : tied) {
    if (a != 0.0) return {false, "all-tie group produced nonzero advantage"};
  }
  const Dataset train_set = curriculum_train_set();
  TrainerState state;
  state.cfg = curriculum_train_config();
  state.cfg.kl_coefficient = 0.0;
  state.params = PolicyParams::zeros(curriculum_vocab(), 64, 0);
  const int tok = *state.params.vocab.token_id("tree");
  for (int f = 0; f < state.params.feature_dim; ++f) state.params.at(tok, f) += 40.0;
  state.reference = state.params;
  const std::vector<double> before = state.params.weight;
  grpo_step(state, {train_set.examples[0]});
  if (state.params.weight != before) {
    return {false, "all-tie step changed the parameters"};
  }
  return {true, "4000 fuzzed groups zero-sum; all-tie step is a no-op"};
}

// --- criterion 4 -----------------------------------------------------------

Outcome gradient_correctness() {
  const Dataset train_set = curriculum_train_set();
  const Vocab vocab = Vocab::from_words({"a", "b", "blue", "tree"});
  SplitMix64 rng(404);
  const double eps = 1e-5;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    PolicyParams params = PolicyParams::zeros(vocab, 5, 3);
    for (double& w : params.weight) w = rng.next_double() - 0.5;
    const QAExample& ex =
        train_set.examples[rng.next_below(train_set.examples.size())];
    std::vector<int> tokens;
    const int len = 1 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < len; ++i) {
      tokens.push_back(static_cast<int>(rng.next_below(vocab.size())));
    }
    tokens.push_back(vocab.eos_id());
    const auto [lp, grad] = sequence_logprob_and_grad(params, ex, tokens);
    (void)lp;
    for (std::size_t w = 0; w < params.weight.size(); ++w) {
      PolicyParams plus = params, minus = params;
      plus.weight[w] += eps;
      minus.weight[w] -= eps;
      const double fd =
          (sequence_logprob(plus, ex, tokens) - sequence_logprob(minus, ex, tokens)) /
          (2 * eps);
      const double rel =
          std::abs(fd - grad[w]) / std::max({1.0, std::abs(fd), std::abs(grad[w])});
      worst = std::max(worst, rel);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "100 cases, max relative error %.2e (limit 1e-5)",
                worst);
  return {worst <= 1e-5, buf};
}

// --- criterion 5 -----------------------------------------------------------

Outcome single_step_improvement() {
  const Dataset train_set = curriculum_train_set();
  RewardConfig rc;
  SplitMix64 rng(505);
  int checked = 0, attempts = 0;
  while (checked < 100 && attempts < 1000) {
    ++attempts;
    PolicyParams params = PolicyParams::zeros(curriculum_vocab(), 64, 3);
    for (double& w : params.weight) w = rng.next_double() - 0.5;
    const QAExample& ex =
        train_set.examples[rng.next_below(train_set.examples.size())];
    TrainerState state;
    state.cfg = curriculum_train_config();
    state.cfg.group_size = 2;
    state.cfg.sampling.top_p = 1.0;
    state.cfg.sampling.max_tokens = 3;
    state.cfg.learning_rate = 1e-3;
    state.cfg.kl_coefficient = 0.0;
    state.cfg.seed = rng.next();
    state.params = params;
    state.reference = params;
    const SampleGroup group =
        sample_group(params, ex, 2, state.cfg.sampling, mix_seed(state.cfg.seed, 1));
    const double r0 = combined_reward(
                          extract_final_answer(group.generations[0].text, rc), ex.answer, rc)
                          .reward;
    const double r1 = combined_reward(
                          extract_final_answer(group.generations[1].text, rc), ex.answer, rc)
                          .reward;
    if (r0 == r1) continue;  // ties carry no higher/lower ordering
    const int hi = r0 > r1 ? 0 : 1;
    const double lp_hi = sequence_logprob(params, ex, group.generations[hi].tokens);
    const double lp_lo = sequence_logprob(params, ex, group.generations[1 - hi].tokens);
    grpo_step(state, {ex});
    const double lp_hi_after =
        sequence_logprob(state.params, ex, group.generations[hi].tokens);
    const double lp_lo_after =
        sequence_logprob(state.params, ex, group.generations[1 - hi].tokens);
    if (!(lp_hi_after > lp_hi) || !(lp_lo_after < lp_lo)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "violation at instance %d: dHi=%.3e dLo=%.3e", checked,
                    lp_hi_after - lp_hi, lp_lo_after - lp_lo);
      return {false, buf};
    }
    ++checked;
  }
  if (checked < 100) return {false, "could not assemble 100 distinct-reward instances"};
  return {true, "100 instances: higher-reward logprob up, lower-reward down, strictly"};
}

// --- criteria 6 and 10 share the trained policy -----------------------------

struct LearnedPolicy {
  PolicyParams best;
  double sampled_mean_tail = 0.0;  // mean sampled reward over the last 100 steps
  double seconds = 0.0;
};

LearnedPolicy train_curriculum() {
  const Dataset train_set = curriculum_train_set();
  const TrainConfig cfg = curriculum_train_config();
  const double t0 = now_seconds();
  const TrainResult result = train(train_set, train_set, cfg);
  const double seconds = now_seconds() - t0;
  double tail = 0;
  int count = 0;
  for (const auto& rec : result.metrics) {
    if (!rec.contains("loss")) continue;
    if (rec.at("step").get<int>() > cfg.max_steps - 100) {
      tail += rec.at("mean_reward").get<double>();
      ++count;
    }
  }
  return {result.best_params, tail / std::max(count, 1), seconds};
}

Outcome desk_scale_learning(const LearnedPolicy& learned) {
  // First the declared oracle: plain REINFORCE against the same policy class
  // must already reach the target, establishing the task is learnable.
  const Dataset train_set = curriculum_train_set();
  const ReinforceResult oracle = reinforce_reference(train_set, 6000, 1.5, 7);
  if (oracle.final_mean_reward < 0.9) {
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "REINFORCE oracle reached only %.3f (< 0.9); target not validated",
                  oracle.final_mean_reward);
    return {false, buf};
  }
  if (learned.sampled_mean_tail < 0.9) {
    char buf[120];
    std::snprintf(buf, sizeof(buf), "GRPO mean sampled reward %.3f < 0.9 (oracle %.3f)",
                  learned.sampled_mean_tail, oracle.final_mean_reward);
    return {false, buf};
  }
  if (learned.seconds >= 120.0) {
    return {false, "training took " + std::to_string(learned.seconds) + "s (limit 120s)"};
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "REINFORCE oracle %.3f; GRPO mean sampled reward %.3f >= 0.9 in 2000 "
                "steps, %.1fs",
                oracle.final_mean_reward, learned.sampled_mean_tail, learned.seconds);
  return {true, buf};
}

// --- criterion 7 -----------------------------------------------------------

Outcome extraction_fidelity() {
  QpaConfig cfg;
  const std::vector<std::pair<std::string, std::string>> files = {
      {"episodes/ep_river.srt", "ep_river"},
      {"episodes/ep_star.srt", "ep_star"},
      {"episodes/ep_forest.vtt", "ep_forest"},
  };
  std::size_t total = 0;
  for (const auto& [rel, id] : files) {
    const auto expected = nlohmann::json::parse(
        fixture_text(rel.substr(0, rel.rfind('.')) + ".expected.json"));
    const CueList cues =
        parse_transcript(fixture_text(rel), SubtitleFormat::auto_detect, id);
    std::vector<SkipRecord> skips;
    const Dataset d = build_examples(cues, cfg, &skips);
    const auto& want = expected.at("examples");
    if (d.examples.size() != want.size()) {
      return {false, id + ": extracted " + std::to_string(d.examples.size()) +
                         " examples, planted " + std::to_string(want.size())};
    }
    if (!skips.empty()) return {false, id + ": unexpected skips"};
    for (std::size_t i = 0; i < want.size(); ++i) {
      const auto& e = want.at(i);
      const QAExample& ex = d.examples[i];
      const bool match =
          ex.question_id == e.at("question_id").get<std::string>() &&
          ex.question == e.at("question").get<std::string>() &&
          ex.answer == e.at("answer").get<std::string>() &&
          std::string(to_string(ex.category)) == e.at("category").get<std::string>() &&
          std::string(to_string(ex.modality)) == e.at("modality").get<std::string>() &&
          std::string(to_string(ex.reasoning)) == e.at("reasoning").get<std::string>() &&
          ex.question_ts_ms == e.at("question_ts_ms").get<int64_t>() &&
          ex.pause.start_ms == e.at("pause").at("start_ms").get<int64_t>() &&
          ex.pause.end_ms == e.at("pause").at("end_ms").get<int64_t>();
      if (!match) {
        return {false, id + " example " + std::to_string(i) + " ('" + ex.question +
                           "') deviates from the plant list"};
      }
    }
    total += d.examples.size();
  }

  // perturbed fixture: sub-threshold pauses produce the exact skip log
  const auto expected =
      nlohmann::json::parse(fixture_text("ep_perturbed.expected.json"));
  const CueList cues = parse_transcript(fixture_text("ep_perturbed.srt"),
                                        SubtitleFormat::auto_detect, "ep_perturbed");
  std::vector<SkipRecord> skips;
  const Dataset d = build_examples(cues, cfg, &skips);
  if (d.examples.size() != expected.at("examples").size()) {
    return {false, "perturbed fixture example count mismatch"};
  }
  const auto& want_skips = expected.at("skips");
  if (skips.size() != want_skips.size()) {
    return {false, "perturbed skip log has " + std::to_string(skips.size()) +
                       " records, expected " + std::to_string(want_skips.size())};
  }
  for (std::size_t i = 0; i < skips.size(); ++i) {
    if (skips[i].cue_index != want_skips.at(i).at("cue_index").get<int>() ||
        skips[i].reason != want_skips.at(i).at("reason").get<std::string>()) {
      return {false, "perturbed skip " + std::to_string(i) + " deviates"};
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "%zu planted triples extracted exactly; perturbed skip log exact (%zu)",
                total, skips.size());
  return {true, buf};
}

// --- criterion 8 -----------------------------------------------------------

Outcome kl_behavior() {
  const Dataset train_set = curriculum_train_set();
  const QAExample& probe_ex = train_set.examples[0];
  const Vocab vocab = curriculum_vocab();

  PolicyParams reference = PolicyParams::zeros(vocab, 64, 3);
  {  // identical policies: estimator exactly zero
    PolicyParams noisy = reference;
    SplitMix64 rng(9);
    for (double& w : noisy.weight) w = rng.next_double() - 0.5;
    const SampleGroup group = sample_group(noisy, probe_ex, 4, SamplingConfig{}, 5);
    if (kl_estimate(noisy, noisy, group, probe_ex) != 0.0) {
      return {false, "identical policies gave a nonzero KL estimate"};
    }
  }

  // displaced current policy walks back toward the reference under the
  // penalty alone: all-tie rewards zero the advantages, so only the KL term acts
  PolicyParams current = reference;
  const int eos = current.vocab.eos_id();
  for (int f = 0; f < current.feature_dim; ++f) current.at(eos, f) += 2.0;

  TrainerState state;
  state.cfg = curriculum_train_config();
  state.cfg.kl_coefficient = 0.01;
  state.cfg.learning_rate = 0.5;
  state.params = current;
  state.reference = reference;

  const auto features = encode_prompt(probe_ex, current);
  const auto exact_kl = [&] {
    const auto p = next_token_dist(state.params, features, vocab.bos_id(), 1.0);
    const auto q = next_token_dist(state.reference, features, vocab.bos_id(), 1.0);
    double kl = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0) kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
  };
  double prev = exact_kl();
  const double start = prev;
  for (int step = 0; step < 50; ++step) {
    const TrainStepReport report = grpo_step(state, {probe_ex});
    if (report.mean_reward != 0.0) {
      return {false, "probe rewards did not tie; advantages were not zeroed"};
    }
    const double now = exact_kl();
    if (!(now < prev)) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "KL failed to decrease at step %d (%.9f -> %.9f)",
                    step + 1, prev, now);
      return {false, buf};
    }
    prev = now;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "identical-policy estimate exactly 0; 50/50 strict decreases (%.6f -> %.6f)",
                start, prev);
  return {true, buf};
}

// --- criterion 9 -----------------------------------------------------------

Outcome determinism() {
  const Dataset train_set = curriculum_train_set();
  TrainConfig cfg = curriculum_train_config();
  cfg.max_steps = 200;
  cfg.eval_every = 50;
  const std::string log1 = metrics_to_jsonl(train(train_set, train_set, cfg));
  const std::string log2 = metrics_to_jsonl(train(train_set, train_set, cfg));
  if (log1 != log2) return {false, "metrics logs differ between identical runs"};

  QpaConfig qcfg;
  const CueList cues = parse_transcript(fixture_text("episodes/ep_river.srt"),
                                        SubtitleFormat::auto_detect, "ep_river");
  const std::string jsonl1 = dataset_to_jsonl(build_examples(cues, qcfg));
  const std::string jsonl2 = dataset_to_jsonl(build_examples(cues, qcfg));
  if (jsonl1 != jsonl2) return {false, "extraction JSONL differs between identical runs"};
  return {true, "train metrics and extraction JSONL byte-identical across reruns"};
}

// --- criterion 10 ----------------------------------------------------------

Outcome format_transfer(const LearnedPolicy& learned) {
  const Dataset heldout = curriculum_heldout_set();
  const auto items = make_mcq(heldout, 4, 123);
  const EvalReport transfer =
      eval_mcq(learned.best, items, McqMode::score_options, 0);

  // uniform baseline: a zero policy picks independently of gold placement
  double baseline_sum = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const PolicyParams zero = PolicyParams::zeros(curriculum_vocab(), 512, 0);
    const auto base_items = make_mcq(heldout, 4, 1000 + static_cast<uint64_t>(seed));
    baseline_sum += eval_mcq(zero, base_items, McqMode::score_options, 0).top1_accuracy;
  }
  const double baseline = baseline_sum / 20.0;
  if (!(baseline >= 21.0 && baseline <= 29.0)) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "uniform baseline %.2f%% outside 25%% +/- 4%%",
                  baseline);
    return {false, buf};
  }
  if (transfer.top1_accuracy < 60.0) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "held-out MCQ top1 %.1f%% < 60%% (baseline %.1f%%)",
                  transfer.top1_accuracy, baseline);
    return {false, buf};
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "held-out MCQ top1 %.1f%% (threshold 60%%), uniform baseline %.2f%%",
                transfer.top1_accuracy, baseline);
  return {true, buf};
}

// --- criterion 11 ----------------------------------------------------------

Outcome sweep_protocol() {
  const Dataset train_set = curriculum_train_set();
  SweepSpec spec;
  spec.base = curriculum_train_config();
  spec.base.max_steps = 600;
  spec.base.eval_every = 200;
  // amplified gradients and no clipping so the canonical {1e-3, 1e-2, 1e-1}
  // grid brackets this policy's stable range and oversized rates destabilize
  spec.base.reward_scaling = 2000.0;
  spec.base.grad_clip_norm = 1e9;
  spec.dimension = "learning_rate";
  spec.values = {1e-1, 1e-2, 1e-3};
  const SweepReport report = sweep(spec, train_set, train_set);

  if (report.rows.size() != 3) return {false, "expected 3 rows"};
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (!(report.rows[i - 1].value < report.rows[i].value)) {
      return {false, "rows not sorted by swept value"};
    }
  }
  const std::string table = sweep_table(report);
  if (table.find("learning_rate") == std::string::npos ||
      table.find('*') == std::string::npos) {
    return {false, "table missing dimension column or argmax marker"};
  }
  double metric_1e2 = -1, metric_1e1 = -1;
  for (const SweepRow& row : report.rows) {
    if (row.value == 1e-2 && row.ok) metric_1e2 = row.selection_value;
    if (row.value == 1e-1) metric_1e1 = row.ok ? row.selection_value : -1;
  }
  if (metric_1e2 < 0) return {false, "the 1e-2 row failed"};
  if (!(metric_1e1 < metric_1e2)) {
    char buf[120];
    std::snprintf(buf, sizeof(buf), "1e-1 (%.3f) did not rank below 1e-2 (%.3f)",
                  metric_1e1, metric_1e2);
    return {false, buf};
  }
  char buf[140];
  std::snprintf(buf, sizeof(buf),
                "table well-formed; lr 1e-1 val %.3f ranks below 1e-2 val %.3f",
                metric_1e1, metric_1e2);
  return {true, buf};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int index, const char* name, const Outcome& outcome) {
    std::printf("[%s] %2d. %-24s %s\n", outcome.pass ? "PASS" : "FAIL", index, name,
                outcome.detail.c_str());
    if (!outcome.pass) ++failures;
    std::fflush(stdout);
  };

  try {
    report(1, "reward-exactness", reward_exactness());
    report(2, "levenshtein-oracle", levenshtein_oracle());
    report(3, "advantage-zero-sum", advantage_zero_sum());
    report(4, "gradient-correctness", gradient_correctness());
    report(5, "single-step-direction", single_step_improvement());
    const LearnedPolicy learned = train_curriculum();
    report(6, "desk-scale-learning", desk_scale_learning(learned));
    report(7, "extraction-fidelity", extraction_fidelity());
    report(8, "kl-behavior", kl_behavior());
    report(9, "determinism", determinism());
    report(10, "format-transfer", format_transfer(learned));
    report(11, "sweep-protocol", sweep_protocol());
  } catch (const std::exception& e) {
    std::printf("[FAIL] suite aborted: %s\n", e.what());
    return 1;
  }

  if (failures == 0) {
    std::printf("all 11 acceptance criteria passed\n");
  } else {
    std::printf("%d criterion(s) failed\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
