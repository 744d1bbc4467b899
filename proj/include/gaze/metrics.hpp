#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/saliency.hpp"
#include "gaze/types.hpp"

namespace gaze {

struct MetricReport {
  double kl = 0.0;
  double cc = 0.0;
  double sim = 0.0;
  double nss = 0.0;
  double auc = 0.0;
  std::string scene_id;
  GroupLabel group = GroupLabel::all;
};

namespace detail {

inline void require_same_shape(const SaliencyMap& a, const SaliencyMap& b,
                               const char* who) {
  if (!a.same_shape(b)) {
    fail_validation(std::string(who) + ": dimension mismatch");
  }
}

inline SaliencyMap as_distribution(const SaliencyMap& m) {
  return m.normalized ? m : normalize_map(m);
}

// Nearest pixel for a grid-coordinate fixation, clamped to the frame.
inline size_t fixation_pixel(const GridPoint& p, int width, int height) {
  const auto [px, py] = denormalize_from_grid(p, width, height);
  const int ix = std::clamp(int(std::llround(px)), 0, width - 1);
  const int iy = std::clamp(int(std::llround(py)), 0, height - 1);
  return size_t(iy) * width + ix;
}

}  // namespace detail

// KL(gt || pred) over normalized maps with epsilon regularization.
inline double kl_div(const SaliencyMap& gt, const SaliencyMap& pred) {
  detail::require_same_shape(gt, pred, "kl_div");
  constexpr double kEps = 1e-12;
  const SaliencyMap g = detail::as_distribution(gt);
  const SaliencyMap p = detail::as_distribution(pred);
  double kl = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    kl += g.values[i] * std::log((g.values[i] + kEps) / (p.values[i] + kEps));
  }
  return kl;
}

// Pearson correlation over flattened values.
inline double cc(const SaliencyMap& gt, const SaliencyMap& pred) {
  detail::require_same_shape(gt, pred, "cc");
  const size_t n = gt.size();
  if (n == 0) fail_validation("cc: empty map");
  double mean_g = 0.0, mean_p = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_g += gt.values[i];
    mean_p += pred.values[i];
  }
  mean_g /= double(n);
  mean_p /= double(n);
  double cov = 0.0, var_g = 0.0, var_p = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dg = gt.values[i] - mean_g;
    const double dp = pred.values[i] - mean_p;
    cov += dg * dp;
    var_g += dg * dg;
    var_p += dp * dp;
  }
  if (var_g == 0.0 || var_p == 0.0) fail_validation("cc: zero-variance map");
  return cov / std::sqrt(var_g * var_p);
}

// Histogram intersection: sum of elementwise minima of two distributions.
inline double sim(const SaliencyMap& gt, const SaliencyMap& pred) {
  detail::require_same_shape(gt, pred, "sim");
  if (!gt.normalized || !pred.normalized) {
    fail_validation("sim: inputs must be normalized maps");
  }
  double s = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    s += std::min(gt.values[i], pred.values[i]);
  }
  return s;
}

// Mean of the standardized prediction (zero mean, unit population std)
// sampled at the fixation pixels.
inline double nss(const SaliencyMap& pred, const FixationSet& fixations) {
  if (fixations.empty()) fail_validation("nss: no fixations");
  const size_t n = pred.size();
  if (n == 0) fail_validation("nss: empty map");
  double mean = 0.0;
  for (double v : pred.values) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (double v : pred.values) var += (v - mean) * (v - mean);
  var /= double(n);
  if (var == 0.0) fail_validation("nss: zero-variance map");
  const double inv_std = 1.0 / std::sqrt(var);
  double acc = 0.0;
  for (const GridPoint& p : fixations) {
    const size_t idx = detail::fixation_pixel(p, pred.width, pred.height);
    acc += (pred.values[idx] - mean) * inv_std;
  }
  return acc / double(fixations.size());
}

// AUC-Judd: ROC thresholds at the saliency values of the fixated pixels;
// TPR over fixated pixels, FPR over all other pixels, trapezoidal area.
inline double auc_judd(const SaliencyMap& pred, const FixationSet& fixations) {
  if (fixations.empty()) fail_validation("auc_judd: no fixations");
  if (pred.size() == 0) fail_validation("auc_judd: empty map");

  std::unordered_set<size_t> fix_set;
  for (const GridPoint& p : fixations) {
    fix_set.insert(detail::fixation_pixel(p, pred.width, pred.height));
  }
  const size_t n_fix = fix_set.size();
  const size_t n_non = pred.size() - n_fix;
  if (n_non == 0) fail_validation("auc_judd: every pixel is fixated");

  std::vector<double> fix_vals;
  fix_vals.reserve(n_fix);
  std::vector<double> non_vals;
  non_vals.reserve(n_non);
  for (size_t i = 0; i < pred.size(); ++i) {
    (fix_set.count(i) ? fix_vals : non_vals).push_back(pred.values[i]);
  }
  std::sort(fix_vals.begin(), fix_vals.end());
  std::sort(non_vals.begin(), non_vals.end());

  // Thresholds descend over distinct fixation values; TPR/FPR count values
  // >= threshold, so the curve starts at (0,0) and ends at (1,1).
  std::vector<double> thresholds = fix_vals;
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  double area = 0.0;
  double prev_tp = 0.0, prev_fp = 0.0;
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    const double thr = *it;
    const double tp =
        double(fix_vals.end() -
               std::lower_bound(fix_vals.begin(), fix_vals.end(), thr)) /
        double(n_fix);
    const double fp =
        double(non_vals.end() -
               std::lower_bound(non_vals.begin(), non_vals.end(), thr)) /
        double(n_non);
    area += (fp - prev_fp) * (tp + prev_tp) / 2.0;
    prev_tp = tp;
    prev_fp = fp;
  }
  area += (1.0 - prev_fp) * (1.0 + prev_tp) / 2.0;
  return area;
}

// Composes the five metrics against a ground truth given as fixation
// points; the ground-truth map is rendered with the same kernel as training
// targets. NSS/AUC default to the same points; pass nss_fixations to score
// against a different (e.g. raw, unclustered) set.
inline MetricReport evaluate(const SaliencyMap& pred,
                             const FixationSet& gt_points,
                             const SceneWindow& scene, GroupLabel group,
                             const KernelConfig& cfg = {},
                             const FixationSet* nss_fixations = nullptr) {
  if (gt_points.empty()) fail_validation("evaluate: empty ground truth");
  const SaliencyMap gt = render_heatmap(gt_points, scene, cfg);
  detail::require_same_shape(gt, pred, "evaluate");
  const FixationSet& fx = nss_fixations ? *nss_fixations : gt_points;

  MetricReport report;
  report.kl = kl_div(gt, pred);
  report.cc = cc(gt, pred);
  report.sim = sim(detail::as_distribution(gt), detail::as_distribution(pred));
  report.nss = nss(pred, fx);
  report.auc = auc_judd(pred, fx);
  report.scene_id = scene.video_id + "_s" + std::to_string(scene.second_index);
  report.group = group;
  return report;
}

}  // namespace gaze
