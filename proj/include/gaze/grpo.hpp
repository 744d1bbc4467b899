#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/point_protocol.hpp"
#include "gaze/rewards.hpp"
#include "gaze/rng.hpp"
#include "gaze/types.hpp"

namespace gaze::grpo {

struct Config {
  int group_size = 8;    // G: outputs sampled per context per iteration
  double clip_eps = 0.2; // policy-ratio clip width
  double kl_beta = 0.04; // KL-to-reference penalty weight
  double learn_rate = 1.0;
  int iterations = 2000;
  uint64_t seed = 1;
  int coord_bins = 25;  // B: BxB discretization of the [0,1000]^2 grid
  int max_count = 32;   // K_max: largest declared point count
  bool stochastic_delimiters = false;

  void validate() const {
    if (group_size < 2) fail_validation("grpo: group_size must be >= 2");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
      fail_validation("grpo: clip_eps must be in (0,1)");
    }
    if (kl_beta < 0.0) fail_validation("grpo: kl_beta must be >= 0");
    if (learn_rate <= 0.0) fail_validation("grpo: learn_rate must be > 0");
    if (iterations < 0) fail_validation("grpo: iterations must be >= 0");
    if (coord_bins < 1) fail_validation("grpo: coord_bins must be >= 1");
    if (max_count < 1) fail_validation("grpo: max_count must be >= 1");
  }
};

// Attribute context a policy conditions on: a demographic group plus a
// scene descriptor id.
struct TrainContext {
  GroupLabel group = GroupLabel::all;
  int scene_id = 0;

  bool operator==(const TrainContext&) const = default;
};

struct DatasetEntry {
  TrainContext context;
  FixationSet targets;
};

// Heads of the factorized sequence model. `count` declares the point count
// (and the number of coordinate slots emitted); each `slot` picks one of
// B*B coordinate bins; each `delim` decides whether one of the four
// protocol delimiters is emitted intact (token 0) or corrupted (token 1).
enum class HeadKind : uint8_t { count = 0, slot = 1, delim = 2 };

struct HeadRef {
  HeadKind kind = HeadKind::count;
  int index = 0;  // slot position or delimiter position; 0 for count

  bool operator==(const HeadRef&) const = default;
};

inline constexpr int kNumDelims = 4;  // <ref> </ref> <point> </point>

struct SampledToken {
  HeadRef head;
  int token = 0;
  double logp = 0.0;  // behavior-policy log-probability at sampling time
};

struct SampledOutput {
  int context = 0;
  std::vector<SampledToken> tokens;
};

// Categorical sequence policy with independent per-context parameter
// tables. Logits start at zero (uniform heads); with stochastic delimiters
// each delimiter head is biased so that a full message is valid with
// probability ~0.5 (0.5^(1/4) per delimiter).
class ToyPolicy {
 public:
  ToyPolicy() = default;

  ToyPolicy(int n_contexts, int coord_bins, int max_count,
            bool stochastic_delimiters)
      : n_contexts_(n_contexts),
        bins_(coord_bins),
        max_count_(max_count),
        stochastic_(stochastic_delimiters) {
    if (n_contexts < 1) fail_validation("ToyPolicy: need >= 1 context");
    params_.assign(size_t(n_contexts) * context_stride(), 0.0);
    if (stochastic_) {
      // logit(0.5^(1/4)) so the four-delimiter product is ~0.5
      constexpr double kInitLogit = 1.6651292546497023;
      for (int c = 0; c < n_contexts; ++c) {
        for (int d = 0; d < kNumDelims; ++d) {
          logits(c, HeadRef{HeadKind::delim, d})[0] = kInitLogit;
        }
      }
    }
  }

  static ToyPolicy for_config(int n_contexts, const Config& cfg) {
    return ToyPolicy(n_contexts, cfg.coord_bins, cfg.max_count,
                     cfg.stochastic_delimiters);
  }

  int n_contexts() const { return n_contexts_; }
  int coord_bins() const { return bins_; }
  int max_count() const { return max_count_; }
  bool stochastic_delimiters() const { return stochastic_; }

  int head_size(HeadKind kind) const {
    switch (kind) {
      case HeadKind::count: return max_count_ + 1;
      case HeadKind::slot: return bins_ * bins_;
      case HeadKind::delim: return 2;
    }
    fail_internal("unknown HeadKind");
  }

  size_t head_offset(int context, HeadRef head) const {
    if (context < 0 || context >= n_contexts_) {
      fail_validation("ToyPolicy: context out of range");
    }
    size_t off = size_t(context) * context_stride();
    switch (head.kind) {
      case HeadKind::count:
        return off;
      case HeadKind::slot:
        if (head.index < 0 || head.index >= max_count_) {
          fail_validation("ToyPolicy: slot index out of range");
        }
        return off + size_t(max_count_ + 1) +
               size_t(head.index) * size_t(bins_) * bins_;
      case HeadKind::delim:
        if (head.index < 0 || head.index >= kNumDelims) {
          fail_validation("ToyPolicy: delimiter index out of range");
        }
        return off + size_t(max_count_ + 1) +
               size_t(max_count_) * size_t(bins_) * bins_ +
               size_t(head.index) * 2;
    }
    fail_internal("unknown HeadKind");
  }

  std::span<double> logits(int context, HeadRef head) {
    return {params_.data() + head_offset(context, head),
            size_t(head_size(head.kind))};
  }
  std::span<const double> logits(int context, HeadRef head) const {
    return {params_.data() + head_offset(context, head),
            size_t(head_size(head.kind))};
  }

  std::vector<double> probs(int context, HeadRef head) const {
    const auto l = logits(context, head);
    std::vector<double> p(l.begin(), l.end());
    softmax_in_place(p);
    return p;
  }

  bool same_shape(const ToyPolicy& other) const {
    return n_contexts_ == other.n_contexts_ && bins_ == other.bins_ &&
           max_count_ == other.max_count_ && stochastic_ == other.stochastic_;
  }

  // Grid-unit center of coordinate bin b (row-major over the BxB grid).
  GridPoint bin_center(int bin) const {
    const int bx = bin % bins_;
    const int by = bin / bins_;
    const double step = kGridMax / bins_;
    return GridPoint{(bx + 0.5) * step, (by + 0.5) * step};
  }

  std::vector<double>& raw() { return params_; }
  const std::vector<double>& raw() const { return params_; }

  static void softmax_in_place(std::vector<double>& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    double sum = 0.0;
    for (double& x : v) {
      x = std::exp(x - m);
      sum += x;
    }
    for (double& x : v) x /= sum;
  }

 private:
  size_t context_stride() const {
    return size_t(max_count_ + 1) + size_t(max_count_) * size_t(bins_) * bins_ +
           size_t(kNumDelims) * 2;
  }

  int n_contexts_ = 0;
  int bins_ = 0;
  int max_count_ = 0;
  bool stochastic_ = false;
  std::vector<double> params_;
};

namespace detail {

inline SampledToken draw(const ToyPolicy& policy, int context, HeadRef head,
                         RandomStream& rng) {
  const std::vector<double> p = policy.probs(context, head);
  const int token = rng.categorical(p);
  return SampledToken{head, token, std::log(p[token])};
}

}  // namespace detail

// One full sequence: delimiters (stochastic mode only), the count token,
// then one coordinate token per declared point.
inline SampledOutput sample_output(const ToyPolicy& policy, int context,
                                   RandomStream& rng) {
  SampledOutput out;
  out.context = context;
  const bool st = policy.stochastic_delimiters();
  if (st) out.tokens.push_back(detail::draw(policy, context, {HeadKind::delim, 0}, rng));
  const SampledToken count =
      detail::draw(policy, context, {HeadKind::count, 0}, rng);
  out.tokens.push_back(count);
  if (st) {
    out.tokens.push_back(detail::draw(policy, context, {HeadKind::delim, 1}, rng));
    out.tokens.push_back(detail::draw(policy, context, {HeadKind::delim, 2}, rng));
  }
  for (int s = 0; s < count.token; ++s) {
    out.tokens.push_back(detail::draw(policy, context, {HeadKind::slot, s}, rng));
  }
  if (st) out.tokens.push_back(detail::draw(policy, context, {HeadKind::delim, 3}, rng));
  return out;
}

// G independent outputs with recorded behavior log-probs; each output draws
// from its own derived stream, so results are reproducible and independent
// of evaluation order.
inline std::vector<SampledOutput> sample_group(const ToyPolicy& policy,
                                               int context, int group_size,
                                               uint64_t seed) {
  if (group_size < 2) fail_validation("sample_group: group size must be >= 2");
  std::vector<SampledOutput> outputs;
  outputs.reserve(group_size);
  for (int g = 0; g < group_size; ++g) {
    RandomStream rng = RandomStream::derive(seed, uint64_t(context), uint64_t(g));
    outputs.push_back(sample_output(policy, context, rng));
  }
  return outputs;
}

// Renders the token sequence as protocol text. Corrupted delimiters are
// emitted as a garbled literal so the parser sees a broken message.
inline std::string decode_message(const ToyPolicy& policy,
                                  const SampledOutput& output) {
  bool delim_ok[kNumDelims] = {true, true, true, true};
  long long count = 0;
  std::vector<int> bins;
  for (const SampledToken& t : output.tokens) {
    switch (t.head.kind) {
      case HeadKind::count: count = t.token; break;
      case HeadKind::slot: bins.push_back(t.token); break;
      case HeadKind::delim: delim_ok[t.head.index] = t.token == 0; break;
    }
  }
  static constexpr const char* kIntact[kNumDelims] = {"<ref>", "</ref>",
                                                      "<point>", "</point>"};
  auto delim = [&](int d) {
    return std::string(delim_ok[d] ? kIntact[d] : "<dlm!>");
  };
  std::string text = delim(0) + std::to_string(count) + delim(1) + delim(2) + "[";
  for (size_t i = 0; i < bins.size(); ++i) {
    const GridPoint p = policy.bin_center(bins[i]);
    if (i) text += ',';
    text += '[';
    text += std::to_string(std::llround(p.x));
    text += ',';
    text += std::to_string(std::llround(p.y));
    text += ']';
  }
  text += "]" + delim(3);
  return text;
}

// Group-relative advantage: standardize rewards by the group mean and
// population std (epsilon-guarded), broadcast to every token of an output.
inline std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.empty()) fail_validation("group_advantages: empty group");
  const double n = double(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double denom = std::sqrt(var) + 1e-8;
  std::vector<double> adv(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - mean) / denom;
  }
  return adv;
}

struct BatchItem {
  SampledOutput output;
  double advantage = 0.0;
};

struct StepResult {
  double loss = 0.0;
  double mean_kl = 0.0;  // mean per-token KL estimator vs the reference
};

namespace detail {

struct ObjectiveAccum {
  double objective = 0.0;
  double kl_sum = 0.0;
  size_t token_count = 0;
};

// Shared objective/gradient walk. Per token the clipped surrogate is
// min(r*A, clip(r)*A) with r the ratio of the current policy to the
// recorded behavior log-prob; the KL penalty is the nonnegative estimator
// u - 1 - log(u) with u = pi_ref / pi_theta.
template <bool WithGrad>
inline ObjectiveAccum accumulate(const ToyPolicy& policy,
                                 const ToyPolicy& reference,
                                 const std::vector<BatchItem>& batch,
                                 const Config& cfg, std::vector<double>* grad) {
  if (batch.empty()) fail_validation("grpo: empty batch");
  if (!policy.same_shape(reference)) {
    fail_validation("grpo: policy/reference shape mismatch");
  }
  ObjectiveAccum acc;
  // softmax cache keyed by head parameter offset; heads repeat across the
  // G outputs of a group
  std::unordered_map<size_t, std::vector<double>> probs_new, probs_ref;
  const double item_w = 1.0 / double(batch.size());

  for (const BatchItem& item : batch) {
    const SampledOutput& out = item.output;
    if (out.tokens.empty()) fail_validation("grpo: output with no tokens");
    const double tok_w = item_w / double(out.tokens.size());
    for (const SampledToken& t : out.tokens) {
      const size_t off = policy.head_offset(out.context, t.head);
      auto [it_new, fresh_new] = probs_new.try_emplace(off);
      if (fresh_new) it_new->second = policy.probs(out.context, t.head);
      auto [it_ref, fresh_ref] = probs_ref.try_emplace(off);
      if (fresh_ref) it_ref->second = reference.probs(out.context, t.head);
      const std::vector<double>& pn = it_new->second;
      const std::vector<double>& pr = it_ref->second;
      if (t.token < 0 || t.token >= int(pn.size())) {
        fail_validation("grpo: token index out of range for head");
      }

      const double logp_new = std::log(pn[t.token]);
      const double ratio = std::exp(logp_new - t.logp);
      const double clipped =
          std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      const double s_plain = ratio * item.advantage;
      const double s_clip = clipped * item.advantage;
      const double surrogate = std::min(s_plain, s_clip);

      const double log_u = std::log(pr[t.token]) - logp_new;
      const double u = std::exp(log_u);
      const double kl_est = u - 1.0 - log_u;

      acc.objective += tok_w * (surrogate - cfg.kl_beta * kl_est);
      acc.kl_sum += kl_est;
      acc.token_count++;

      if constexpr (WithGrad) {
        // clip zeroes the surrogate gradient when the clipped branch wins
        const double surr_coef = s_plain <= s_clip ? ratio * item.advantage : 0.0;
        const double kl_coef = cfg.kl_beta * (u - 1.0);
        const double coef = tok_w * (surr_coef + kl_coef);
        double* g = grad->data() + off;
        for (size_t k = 0; k < pn.size(); ++k) {
          g[k] += coef * ((int(k) == t.token ? 1.0 : 0.0) - pn[k]);
        }
      }
    }
  }
  return acc;
}

}  // namespace detail

// Eq.-6-style objective of the current policy against recorded samples; the
// value the ascent step maximizes. Exposed separately so a finite-difference
// oracle can probe it.
inline double grpo_objective(const ToyPolicy& policy, const ToyPolicy& reference,
                             const std::vector<BatchItem>& batch,
                             const Config& cfg) {
  cfg.validate();
  return detail::accumulate<false>(policy, reference, batch, cfg, nullptr)
      .objective;
}

// One gradient-ascent update of `policy`. `old_policy` must be the snapshot
// the batch was sampled from (its log-probs are recorded in the tokens; the
// snapshot is used for shape checking).
inline StepResult grpo_step(ToyPolicy& policy, const ToyPolicy& reference,
                            const ToyPolicy& old_policy,
                            const std::vector<BatchItem>& batch,
                            const Config& cfg) {
  cfg.validate();
  if (!policy.same_shape(old_policy)) {
    fail_validation("grpo: policy/old_policy shape mismatch");
  }
  std::vector<double> grad(policy.raw().size(), 0.0);
  const detail::ObjectiveAccum acc =
      detail::accumulate<true>(policy, reference, batch, cfg, &grad);
  for (size_t i = 0; i < grad.size(); ++i) {
    policy.raw()[i] += cfg.learn_rate * grad[i];
  }
  StepResult result;
  result.loss = -acc.objective;
  result.mean_kl = acc.token_count ? acc.kl_sum / double(acc.token_count) : 0.0;
  return result;
}

// Per-iteration training diagnostics; one entry of each vector per
// iteration.
struct TrainTrace {
  std::vector<double> mean_reward;
  std::vector<double> format_validity;
  std::vector<double> mean_nn_distance;  // grid units; NaN when no valid points
  std::vector<double> mean_kl_to_ref;
  std::vector<double> loss;

  size_t iterations() const { return loss.size(); }
};

struct TrainResult {
  ToyPolicy policy;
  TrainTrace trace;
};

// Full C-GRPO loop: sample a group per context from the iteration snapshot,
// decode through the point protocol, score with the composite reward,
// standardize advantages per group, and take one ascent step. The reference
// policy is the initial one and stays fixed.
inline TrainResult train(const std::vector<DatasetEntry>& dataset,
                         const Config& cfg,
                         const RewardConfig& reward_cfg = {}) {
  cfg.validate();
  reward_cfg.validate();
  if (dataset.empty()) fail_validation("train: empty dataset");
  for (const DatasetEntry& e : dataset) {
    if (e.targets.empty()) fail_validation("train: entry with no targets");
  }

  TrainResult result;
  result.policy = ToyPolicy::for_config(int(dataset.size()), cfg);
  const ToyPolicy reference = result.policy;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const ToyPolicy old_policy = result.policy;
    std::vector<BatchItem> batch;
    batch.reserve(dataset.size() * size_t(cfg.group_size));

    double reward_sum = 0.0;
    int n_outputs = 0;
    int n_valid = 0;
    double nn_sum = 0.0;
    size_t nn_points = 0;

    for (size_t c = 0; c < dataset.size(); ++c) {
      const uint64_t group_seed =
          RandomStream::derive(cfg.seed, 0x67726f75ULL, uint64_t(iter))
              .next_u64();
      std::vector<SampledOutput> outputs =
          sample_group(old_policy, int(c), cfg.group_size, group_seed);
      std::vector<double> rewards(outputs.size());
      for (size_t g = 0; g < outputs.size(); ++g) {
        const std::string text = decode_message(old_policy, outputs[g]);
        const ParseOutcome outcome = parse(text);
        rewards[g] = total_reward(outcome, outcome.points, dataset[c].targets,
                                  reward_cfg);
        reward_sum += rewards[g];
        n_outputs++;
        if (outcome.valid_format) {
          n_valid++;
          for (const GridPoint& p : outcome.points) {
            double best = squared_distance(p, dataset[c].targets.front());
            for (size_t j = 1; j < dataset[c].targets.size(); ++j) {
              best = std::min(best, squared_distance(p, dataset[c].targets[j]));
            }
            nn_sum += std::sqrt(best);
            nn_points++;
          }
        }
      }
      const std::vector<double> adv = group_advantages(rewards);
      for (size_t g = 0; g < outputs.size(); ++g) {
        batch.push_back(BatchItem{std::move(outputs[g]), adv[g]});
      }
    }

    const StepResult step =
        grpo_step(result.policy, reference, old_policy, batch, cfg);
    result.trace.mean_reward.push_back(reward_sum / double(n_outputs));
    result.trace.format_validity.push_back(double(n_valid) / double(n_outputs));
    result.trace.mean_nn_distance.push_back(
        nn_points ? nn_sum / double(nn_points)
                  : std::numeric_limits<double>::quiet_NaN());
    result.trace.mean_kl_to_ref.push_back(step.mean_kl);
    result.trace.loss.push_back(step.loss);
  }
  return result;
}

// Checkpoint format: 8-byte magic, shape words, then the raw parameter
// block. A JSON sidecar with the training configuration is written by the
// pipeline layer.
inline void save_policy(const std::string& path, const ToyPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot open policy file for writing: " + path);
  const char magic[8] = {'G', 'Z', 'P', 'O', 'L', 'Y', '0', '1'};
  out.write(magic, 8);
  const uint32_t words[4] = {uint32_t(policy.n_contexts()),
                             uint32_t(policy.coord_bins()),
                             uint32_t(policy.max_count()),
                             policy.stochastic_delimiters() ? 1u : 0u};
  out.write(reinterpret_cast<const char*>(words), sizeof(words));
  const uint64_t count = policy.raw().size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(policy.raw().data()),
            std::streamsize(count * sizeof(double)));
  if (!out) fail_io("failed writing policy file: " + path);
}

inline ToyPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open policy file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string_view(magic, 8) != "GZPOLY01") {
    fail_validation("not a policy file: " + path);
  }
  uint32_t words[4];
  in.read(reinterpret_cast<char*>(words), sizeof(words));
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) fail_validation("truncated policy file: " + path);
  ToyPolicy policy{int(words[0]), int(words[1]), int(words[2]), words[3] != 0};
  if (policy.raw().size() != count) {
    fail_validation("policy file parameter count mismatch: " + path);
  }
  in.read(reinterpret_cast<char*>(policy.raw().data()),
          std::streamsize(count * sizeof(double)));
  if (!in) fail_validation("truncated policy file: " + path);
  return policy;
}

}  // namespace gaze::grpo
