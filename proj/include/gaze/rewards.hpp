#pragma once

#include <algorithm>
#include <cmath>

#include "gaze/error.hpp"
#include "gaze/point_protocol.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Reward shaping constants. d_max is the maximum possible squared distance
// on the [0,1000]^2 grid (1000^2 + 1000^2).
struct RewardConfig {
  double r_base = 0.2;
  double r_extra = 0.8;
  double d_max = 2'000'000.0;

  void validate() const {
    if (r_base < 0.0 || r_extra < 0.0 || r_base + r_extra > 1.0 + 1e-12) {
      fail_validation("RewardConfig: need r_base, r_extra >= 0 and sum <= 1");
    }
    if (d_max <= 0.0) fail_validation("RewardConfig: d_max must be positive");
  }
};

// Format consistency: zero for an invalid message, otherwise a base reward
// plus an extra share scaled by agreement between the declared and emitted
// point counts. A correctly empty prediction (0/0) counts as full agreement.
inline double format_reward(const ParseOutcome& outcome,
                            const RewardConfig& cfg = {}) {
  cfg.validate();
  if (!outcome.valid_format || !outcome.n_ref.has_value()) return 0.0;
  const long long n_ref = *outcome.n_ref;
  const long long n_actual = outcome.n_actual;
  double ratio = 1.0;
  if (n_ref != 0 || n_actual != 0) {
    ratio = double(std::min(n_ref, n_actual)) / double(std::max(n_ref, n_actual));
  }
  return cfg.r_base + cfg.r_extra * ratio;
}

// Spatial consistency: exp of the negative mean nearest-neighbor squared
// distance from predictions to targets, scaled by d_max. 1.0 when every
// predicted point coincides with some target; decays toward 0 with error.
inline double spatial_reward(const FixationSet& predicted,
                             const FixationSet& targets,
                             const RewardConfig& cfg = {}) {
  cfg.validate();
  if (predicted.empty() || targets.empty()) {
    fail_validation("spatial_reward: undefined reward for empty point set");
  }
  double total = 0.0;
  for (const GridPoint& p : predicted) {
    double best = squared_distance(p, targets.front());
    for (size_t j = 1; j < targets.size(); ++j) {
      best = std::min(best, squared_distance(p, targets[j]));
    }
    total += best;
  }
  return std::exp(-total / (cfg.d_max * double(predicted.size())));
}

// Composite reward: format term plus spatial term. An invalid message or an
// empty prediction contributes no spatial term.
inline double total_reward(const ParseOutcome& outcome,
                           const FixationSet& predicted,
                           const FixationSet& targets,
                           const RewardConfig& cfg = {}) {
  const double fr = format_reward(outcome, cfg);
  if (!outcome.valid_format || predicted.empty()) return fr;
  return fr + spatial_reward(predicted, targets, cfg);
}

}  // namespace gaze
