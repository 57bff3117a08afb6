#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "qpa/errors.hpp"
#include "qpa/extract.hpp"
#include "qpa/reward.hpp"
#include "qpa/rng.hpp"

// TinyLM: a single linear-softmax layer over hashed prompt features plus a
// one-hot of the previous token. It is deliberately the smallest
// autoregressive policy that exercises a full sampling / scoring /
// differentiation contract with exact analytic gradients, so the training
// loop can be verified end to end on one core.

namespace qpa {

struct Vocab {
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";

  std::vector<std::string> tokens;  // unique; contains <bos> and <eos> exactly once

  // Builds a vocab from content words; reserved symbols go first.
  static Vocab from_words(const std::vector<std::string>& words) {
    Vocab v;
    v.tokens.emplace_back(kBos);
    v.tokens.emplace_back(kEos);
    for (const std::string& w : words) {
      if (std::find(v.tokens.begin(), v.tokens.end(), w) == v.tokens.end()) {
        v.tokens.push_back(w);
      }
    }
    v.validate();
    return v;
  }

  void validate() const {
    if (tokens.size() < 3) throw ConfigError("vocab must have at least 3 tokens");
    std::size_t bos = 0, eos = 0;
    std::unordered_map<std::string_view, int> seen;
    for (const std::string& t : tokens) {
      if (++seen[t] > 1) throw ConfigError("vocab token '" + t + "' is duplicated");
      bos += (t == kBos);
      eos += (t == kEos);
    }
    if (bos != 1 || eos != 1) {
      throw ConfigError("vocab must contain <bos> and <eos> exactly once");
    }
  }

  int size() const { return static_cast<int>(tokens.size()); }

  int bos_id() const { return id_of(kBos); }
  int eos_id() const { return id_of(kEos); }

  std::optional<int> token_id(std::string_view t) const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == t) return static_cast<int>(i);
    }
    return std::nullopt;
  }

 private:
  int id_of(std::string_view t) const {
    const auto id = token_id(t);
    if (!id) throw ConfigError("vocab is missing reserved token");
    return *id;
  }
};

// Parameters of the policy: one weight matrix of shape
// (vocab_size x feature_dim), where feature_dim = prompt feature block +
// one-hot previous-token block.
struct PolicyParams {
  Vocab vocab;
  int feature_dim = 0;
  uint64_t hash_seed = 0;
  std::vector<double> weight;  // row-major, vocab.size() rows

  int prompt_dim() const { return feature_dim - vocab.size(); }

  double at(int row, int col) const {
    return weight[static_cast<std::size_t>(row) * feature_dim + col];
  }
  double& at(int row, int col) {
    return weight[static_cast<std::size_t>(row) * feature_dim + col];
  }

  static PolicyParams zeros(Vocab vocab, int prompt_dim, uint64_t hash_seed) {
    vocab.validate();
    if (prompt_dim < 1) throw ConfigError("prompt feature dimension must be >= 1");
    PolicyParams p;
    p.feature_dim = prompt_dim + vocab.size();
    p.hash_seed = hash_seed;
    p.weight.assign(static_cast<std::size_t>(vocab.size()) * p.feature_dim, 0.0);
    p.vocab = std::move(vocab);
    return p;
  }

  void validate() const {
    vocab.validate();
    if (prompt_dim() < 1) throw ConfigError("feature_dim inconsistent with vocab size");
    if (weight.size() != static_cast<std::size_t>(vocab.size()) * feature_dim) {
      throw ConfigError("weight matrix shape inconsistent with vocab/feature_dim");
    }
    for (double w : weight) {
      if (!std::isfinite(w)) throw ConfigError("weight matrix contains non-finite entries");
    }
  }
};

struct SamplingConfig {
  double temperature = 1.0;
  double top_p = 0.9;
  int max_tokens = 16;

  void validate() const {
    if (!(temperature > 0)) throw ConfigError("temperature must be positive");
    if (!(top_p > 0 && top_p <= 1)) throw ConfigError("top_p must be in (0, 1]");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  }
};

// One sampled sequence. `logprob` is the sum of per-token log-probabilities
// under the unfiltered temperature-1 distribution of the parameters that
// produced it; nucleus/temperature shaping affects only which tokens get
// drawn, never the recorded score, so the value is the one the training
// objective differentiates.
struct Generation {
  std::vector<int> tokens;  // ends with <eos>
  std::string text;
  double logprob = 0.0;
};

inline constexpr int64_t kFrameBucketMs = 5000;

// Hashed bag-of-tokens over context + question, with frame references
// contributing coarse timestamp-bucket tokens. L2-normalized; the all-empty
// prompt stays a zero vector.
inline std::vector<double> encode_prompt(const QAExample& example,
                                         const PolicyParams& params) {
  const int dim = params.prompt_dim();
  std::vector<double> features(static_cast<std::size_t>(dim), 0.0);
  const auto bump = [&](std::string_view token) {
    features[fnv1a64(token, params.hash_seed) % static_cast<uint64_t>(dim)] += 1.0;
  };
  for (const std::string& tok : tokenize_answer(example.context_text)) bump(tok);
  for (const std::string& tok : tokenize_answer(example.question)) bump(tok);
  for (int64_t ts : example.frame_refs) {
    bump("frame:" + std::to_string(ts / kFrameBucketMs));
  }
  double norm_sq = 0;
  for (double v : features) norm_sq += v * v;
  if (norm_sq > 0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : features) v *= inv;
  }
  return features;
}

// softmax(W . [features, onehot(prev_token)] / temperature)
inline std::vector<double> next_token_dist(const PolicyParams& params,
                                           const std::vector<double>& features,
                                           int prev_token, double temperature) {
  if (!(temperature > 0)) throw ConfigError("temperature must be positive");
  const int vocab_size = params.vocab.size();
  const int dim = params.prompt_dim();
  if (prev_token < 0 || prev_token >= vocab_size) {
    throw std::out_of_range("prev_token id out of range");
  }
  if (static_cast<int>(features.size()) != dim) {
    throw ConfigError("feature vector length does not match prompt dimension");
  }

  std::vector<double> logits(static_cast<std::size_t>(vocab_size));
  for (int i = 0; i < vocab_size; ++i) {
    double dot = params.at(i, dim + prev_token);
    const double* row = params.weight.data() + static_cast<std::size_t>(i) * params.feature_dim;
    for (int f = 0; f < dim; ++f) dot += row[f] * features[f];
    const double logit = dot / temperature;
    if (!std::isfinite(logit)) throw NonFiniteLogits();
    logits[i] = logit;
  }

  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

// Keeps the smallest probability-mass prefix reaching top_p (descending
// probability, ties by token id), zeroes the rest, renormalizes.
// top_p == 1 is the identity.
inline std::vector<double> nucleus_filter(const std::vector<double>& probs, double top_p) {
  if (!(top_p > 0 && top_p <= 1)) throw ConfigError("top_p must be in (0, 1]");
  if (top_p == 1.0) return probs;

  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });

  std::vector<double> out(probs.size(), 0.0);
  double kept = 0;
  for (int id : order) {
    out[id] = probs[id];
    kept += probs[id];
    if (kept >= top_p) break;
  }
  for (double& p : out) p /= kept;
  return out;
}

namespace detail {

inline int draw_from(const std::vector<double>& probs, double u) {
  double cum = 0;
  int last_nonzero = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    last_nonzero = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_nonzero;  // u landed in rounding slack past the final cumsum
}

inline std::string detokenize(const Vocab& vocab, const std::vector<int>& tokens) {
  std::string text;
  for (int t : tokens) {
    const std::string& s = vocab.tokens[static_cast<std::size_t>(t)];
    if (s == Vocab::kBos || s == Vocab::kEos) continue;
    if (!text.empty()) text.push_back(' ');
    text += s;
  }
  return text;
}

// One autoregressive rollout from <bos> until <eos> or the token cap; a
// capped sequence is closed with a scored <eos> so every Generation is
// <eos>-terminated.
inline Generation rollout_one(const PolicyParams& params,
                              const std::vector<double>& features,
                              const SamplingConfig& cfg, uint64_t rollout_seed) {
  SplitMix64 rng(rollout_seed);
  const int eos = params.vocab.eos_id();
  Generation gen;
  int prev = params.vocab.bos_id();
  for (int step = 0; step < cfg.max_tokens; ++step) {
    const std::vector<double> shaped =
        next_token_dist(params, features, prev, cfg.temperature);
    const std::vector<double> filtered = nucleus_filter(shaped, cfg.top_p);
    const int chosen = draw_from(filtered, rng.next_double());
    const std::vector<double> base =
        cfg.temperature == 1.0 ? shaped : next_token_dist(params, features, prev, 1.0);
    gen.logprob += std::log(base[static_cast<std::size_t>(chosen)]);
    gen.tokens.push_back(chosen);
    if (chosen == eos) break;
    prev = chosen;
  }
  if (gen.tokens.empty() || gen.tokens.back() != eos) {
    const std::vector<double> base = next_token_dist(params, features, prev, 1.0);
    gen.logprob += std::log(base[static_cast<std::size_t>(eos)]);
    gen.tokens.push_back(eos);
  }
  gen.text = detokenize(params.vocab, gen.tokens);
  return gen;
}

}  // namespace detail

// K independent rollouts for one example. Each rollout owns a generator
// seeded by (seed, example id, rollout index), so results do not depend on
// scheduling and are reproducible member by member.
inline std::vector<Generation> sample_rollouts(const PolicyParams& params,
                                               const QAExample& example, int k,
                                               const SamplingConfig& cfg, uint64_t seed) {
  cfg.validate();
  const std::vector<double> features = encode_prompt(example, params);
  std::vector<Generation> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const uint64_t rollout_seed =
        mix_seed(seed, fnv1a64(example.question_id), static_cast<uint64_t>(i));
    out.push_back(detail::rollout_one(params, features, cfg, rollout_seed));
  }
  return out;
}

// Deterministic argmax decode (ties to the lowest token id); used for
// evaluation.
inline Generation greedy_decode(const PolicyParams& params, const QAExample& example,
                                int max_tokens) {
  const std::vector<double> features = encode_prompt(example, params);
  const int eos = params.vocab.eos_id();
  Generation gen;
  int prev = params.vocab.bos_id();
  for (int step = 0; step < max_tokens; ++step) {
    const std::vector<double> probs = next_token_dist(params, features, prev, 1.0);
    const int chosen = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    gen.logprob += std::log(probs[static_cast<std::size_t>(chosen)]);
    gen.tokens.push_back(chosen);
    if (chosen == eos) break;
    prev = chosen;
  }
  if (gen.tokens.empty() || gen.tokens.back() != eos) {
    const std::vector<double> probs = next_token_dist(params, features, prev, 1.0);
    gen.logprob += std::log(probs[static_cast<std::size_t>(eos)]);
    gen.tokens.push_back(eos);
  }
  gen.text = detail::detokenize(params.vocab, gen.tokens);
  return gen;
}

// Sum of per-token log-probabilities of an <eos>-terminated sequence.
inline double sequence_logprob(const PolicyParams& params, const QAExample& example,
                               const std::vector<int>& tokens) {
  if (tokens.empty() || tokens.back() != params.vocab.eos_id()) {
    throw Error("sequence must be <eos>-terminated");
  }
  const std::vector<double> features = encode_prompt(example, params);
  double logprob = 0;
  int prev = params.vocab.bos_id();
  for (int tok : tokens) {
    if (tok < 0 || tok >= params.vocab.size()) {
      throw std::out_of_range("token id out of range");
    }
    const std::vector<double> probs = next_token_dist(params, features, prev, 1.0);
    logprob += std::log(probs[static_cast<std::size_t>(tok)]);
    prev = tok;
  }
  return logprob;
}

// Log-probability plus its exact gradient with respect to the weight matrix:
// per step, (onehot(token) - probs) outer [features, onehot(prev)], summed.
inline std::pair<double, std::vector<double>> sequence_logprob_and_grad(
    const PolicyParams& params, const QAExample& example, const std::vector<int>& tokens) {
  if (tokens.empty() || tokens.back() != params.vocab.eos_id()) {
    throw Error("sequence must be <eos>-terminated");
  }
  const std::vector<double> features = encode_prompt(example, params);
  const int vocab_size = params.vocab.size();
  const int dim = params.prompt_dim();
  std::vector<double> grad(params.weight.size(), 0.0);
  double logprob = 0;
  int prev = params.vocab.bos_id();
  for (int tok : tokens) {
    if (tok < 0 || tok >= vocab_size) throw std::out_of_range("token id out of range");
    const std::vector<double> probs = next_token_dist(params, features, prev, 1.0);
    logprob += std::log(probs[static_cast<std::size_t>(tok)]);
    for (int i = 0; i < vocab_size; ++i) {
      const double coef = (i == tok ? 1.0 : 0.0) - probs[static_cast<std::size_t>(i)];
      double* row = grad.data() + static_cast<std::size_t>(i) * params.feature_dim;
      for (int f = 0; f < dim; ++f) row[f] += coef * features[f];
      row[dim + prev] += coef;
    }
    prev = tok;
  }
  if (!std::isfinite(logprob)) throw NonFiniteLogits();
  return {logprob, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Checkpoint format (.tlm): one JSON header line
//   {"format":"tlm","version":1,"feature_dim":...,"hash_seed":...,"vocab":[...]}
// followed by the row-major weight matrix as little-endian 64-bit floats.

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

inline void save_policy(const PolicyParams& params, const std::string& path) {
  params.validate();
  nlohmann::ordered_json header;
  header["format"] = "tlm";
  header["version"] = 1;
  header["feature_dim"] = params.feature_dim;
  header["hash_seed"] = params.hash_seed;
  header["vocab"] = params.vocab.tokens;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(params.weight.data()),
            static_cast<std::streamsize>(params.weight.size() * sizeof(double)));
  if (!out) throw Error("failed writing checkpoint: " + path);
}

inline PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw Error("checkpoint missing header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception&) {
    throw Error("checkpoint header is not valid JSON: " + path);
  }
  if (header.value("format", "") != "tlm" || header.value("version", 0) != 1) {
    throw Error("unsupported checkpoint format: " + path);
  }

  PolicyParams params;
  params.feature_dim = header.at("feature_dim").get<int>();
  params.hash_seed = header.at("hash_seed").get<uint64_t>();
  params.vocab.tokens = header.at("vocab").get<std::vector<std::string>>();
  params.vocab.validate();

  const std::size_t count =
      static_cast<std::size_t>(params.vocab.size()) * static_cast<std::size_t>(params.feature_dim);
  params.weight.resize(count);
  in.read(reinterpret_cast<char*>(params.weight.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw Error("checkpoint truncated: " + path);
  }
  char extra;
  if (in.read(&extra, 1)) throw Error("checkpoint has trailing bytes: " + path);
  params.validate();
  return params;
}

// Maps answer-style text onto vocab ids (reward tokenization, then lookup).
// Any out-of-vocabulary token makes the text unrepresentable.
inline std::optional<std::vector<int>> text_to_token_ids(const Vocab& vocab,
                                                         std::string_view text) {
  std::vector<int> ids;
  for (const std::string& tok : tokenize_answer(text)) {
    const auto id = vocab.token_id(tok);
    if (!id) return std::nullopt;
    ids.push_back(*id);
  }
  return ids;
}

}  // namespace qpa
