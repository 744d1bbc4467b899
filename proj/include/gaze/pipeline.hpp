#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaze/clustering.hpp"
#include "gaze/dataset.hpp"
#include "gaze/error.hpp"
#include "gaze/geometry.hpp"
#include "gaze/grpo.hpp"
#include "gaze/image_io.hpp"
#include "gaze/io.hpp"
#include "gaze/metrics.hpp"
#include "gaze/point_protocol.hpp"
#include "gaze/rewards.hpp"
#include "gaze/saliency.hpp"
#include "gaze/synthetic.hpp"
#include "gaze/types.hpp"

namespace gaze {

namespace fs = std::filesystem;

// Everything a pipeline run needs: input paths, the output tree, and the
// per-stage configuration blocks. Loadable from a JSON config file; the CLI
// layers flag overrides on top.
struct PipelineConfig {
  std::string gaze_log;
  std::string profiles;
  std::string scene_manifest;
  std::string out_dir;
  Protocol protocol = Protocol::P1;
  ClusterPolicy cluster;
  KernelConfig kernel;
  RewardConfig reward;
  grpo::Config grpo;
  uint64_t seed = 1;
  int jobs = 1;
};

namespace detail {

inline void check_keys(const nlohmann::json& j,
                       std::initializer_list<const char*> allowed,
                       const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return key == k;
        }) == allowed.end()) {
      fail_validation("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
inline void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail_validation(std::string("config: bad value for '") + key + "': " +
                      e.what());
    }
  }
}

}  // namespace detail

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  detail::check_keys(j,
                     {"paths", "protocol", "cluster", "kernel", "reward",
                      "grpo", "seed", "jobs"},
                     "top level");
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::check_keys(p, {"gaze_log", "profiles", "scene_manifest", "out_dir"},
                       "paths");
    detail::get_if_present(p, "gaze_log", cfg.gaze_log);
    detail::get_if_present(p, "profiles", cfg.profiles);
    detail::get_if_present(p, "scene_manifest", cfg.scene_manifest);
    detail::get_if_present(p, "out_dir", cfg.out_dir);
  }
  if (j.contains("protocol")) {
    cfg.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  }
  if (j.contains("cluster")) {
    const auto& c = j.at("cluster");
    detail::check_keys(c,
                       {"skip_below", "base_eps", "base_min_pts", "strict_eps",
                        "strict_min_pts", "strict_above"},
                       "cluster");
    detail::get_if_present(c, "skip_below", cfg.cluster.skip_below);
    detail::get_if_present(c, "base_eps", cfg.cluster.base_eps);
    detail::get_if_present(c, "base_min_pts", cfg.cluster.base_min_pts);
    detail::get_if_present(c, "strict_eps", cfg.cluster.strict_eps);
    detail::get_if_present(c, "strict_min_pts", cfg.cluster.strict_min_pts);
    detail::get_if_present(c, "strict_above", cfg.cluster.strict_above);
  }
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    detail::check_keys(k, {"sigma", "truncate_radius"}, "kernel");
    detail::get_if_present(k, "sigma", cfg.kernel.sigma);
    detail::get_if_present(k, "truncate_radius", cfg.kernel.truncate_radius);
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    detail::check_keys(r, {"r_base", "r_extra", "d_max"}, "reward");
    detail::get_if_present(r, "r_base", cfg.reward.r_base);
    detail::get_if_present(r, "r_extra", cfg.reward.r_extra);
    detail::get_if_present(r, "d_max", cfg.reward.d_max);
  }
  if (j.contains("grpo")) {
    const auto& g = j.at("grpo");
    detail::check_keys(g,
                       {"group_size", "clip_eps", "kl_beta", "learn_rate",
                        "iterations", "coord_bins", "max_count",
                        "stochastic_delimiters"},
                       "grpo");
    detail::get_if_present(g, "group_size", cfg.grpo.group_size);
    detail::get_if_present(g, "clip_eps", cfg.grpo.clip_eps);
    detail::get_if_present(g, "kl_beta", cfg.grpo.kl_beta);
    detail::get_if_present(g, "learn_rate", cfg.grpo.learn_rate);
    detail::get_if_present(g, "iterations", cfg.grpo.iterations);
    detail::get_if_present(g, "coord_bins", cfg.grpo.coord_bins);
    detail::get_if_present(g, "max_count", cfg.grpo.max_count);
    detail::get_if_present(g, "stochastic_delimiters",
                           cfg.grpo.stochastic_delimiters);
  }
  detail::get_if_present(j, "seed", cfg.seed);
  detail::get_if_present(j, "jobs", cfg.jobs);
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail_validation("config " + path + ": bad JSON: " + e.what());
  }
  return pipeline_config_from_json(j);
}

namespace detail {

inline std::vector<fs::path> sorted_files(const fs::path& dir,
                                          std::string_view extension) {
  std::vector<fs::path> files;
  if (!fs::exists(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline SceneFixations load_fixation_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open fixation file: " + path.string());
  return load_scene_fixations(in, path.string());
}

inline void save_fixation_file(const fs::path& path, const SceneFixations& sf) {
  std::ofstream out(path);
  if (!out) fail_io("cannot open fixation file for writing: " + path.string());
  save_scene_fixations(out, sf);
}

inline std::map<std::string, SceneManifestEntry> manifest_by_video(
    const std::vector<SceneManifestEntry>& entries) {
  std::map<std::string, SceneManifestEntry> by_video;
  for (const SceneManifestEntry& e : entries) {
    if (!by_video.emplace(e.video_id, e).second) {
      fail_validation("scene manifest: duplicate video_id " + e.video_id);
    }
  }
  return by_video;
}

inline std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ingest: gaze log + profiles + manifest -> per-(scene,group) fixation files
// ---------------------------------------------------------------------------

struct IngestSummary {
  Protocol protocol = Protocol::P1;
  int scene_units = 0;      // (scene, group) files written
  long long total_points = 0;
  double avg_fixpn = 0.0;   // total_points / scene_units
  std::vector<std::string> warnings;
};

inline IngestSummary cmd_ingest(const PipelineConfig& cfg) {
  if (cfg.gaze_log.empty() || cfg.profiles.empty() ||
      cfg.scene_manifest.empty() || cfg.out_dir.empty()) {
    fail_validation(
        "ingest: gaze_log, profiles, scene_manifest and out_dir are required");
  }
  IngestSummary summary;
  summary.protocol = cfg.protocol;

  std::ifstream log_in(cfg.gaze_log, std::ios::binary);
  if (!log_in) fail_io("cannot open gaze log: " + cfg.gaze_log);
  const std::vector<GazeSample> samples =
      load_gaze_log(log_in, gaze_log_format_from_path(cfg.gaze_log));

  std::ifstream prof_in(cfg.profiles, std::ios::binary);
  if (!prof_in) fail_io("cannot open profiles: " + cfg.profiles);
  ProfileTable profiles = load_profiles(prof_in);
  summary.warnings = profiles.warnings;

  std::ifstream mani_in(cfg.scene_manifest, std::ios::binary);
  if (!mani_in) fail_io("cannot open scene manifest: " + cfg.scene_manifest);
  const auto by_video = detail::manifest_by_video(load_scene_manifest(mani_in));

  std::map<std::string, std::vector<GazeSample>> per_video;
  for (const GazeSample& s : samples) {
    if (!by_video.count(s.video_id)) {
      fail_validation("gaze log references unknown video '" + s.video_id + "'");
    }
    per_video[s.video_id].push_back(s);
  }

  const fs::path raw_dir = fs::path(cfg.out_dir) / "fixations_raw";
  fs::create_directories(raw_dir);

  std::map<GroupLabel, long long> group_points;
  for (const auto& [video_id, video_samples] : per_video) {
    const SceneManifestEntry& video = by_video.at(video_id);
    const auto scenes = segment_scenes(video_samples, video);
    for (const auto& [window, scene_samples] : scenes) {
      const auto groups =
          group_by_protocol(scene_samples, profiles.by_id, cfg.protocol);
      for (const auto& [group, members] : groups) {
        if (members.empty()) continue;
        SceneFixations sf;
        sf.video_id = window.video_id;
        sf.second = window.second_index;
        sf.group = group;
        sf.points.reserve(members.size());
        for (const GazeSample& s : members) {
          sf.points.push_back(
              normalize_to_grid(s.x, s.y, window.width, window.height));
        }
        detail::save_fixation_file(
            raw_dir / (scene_file_stem(sf.video_id, sf.second, group) + ".json"),
            sf);
        summary.scene_units++;
        summary.total_points += (long long)sf.points.size();
        group_points[group] += (long long)sf.points.size();
      }
    }
  }
  if (cfg.protocol == Protocol::P2) {
    for (GroupLabel g : kP2GroupLabels) {
      if (!group_points.count(g)) {
        summary.warnings.push_back(std::string("group ") + to_string(g) +
                                   " has no samples");
      }
    }
  }
  summary.avg_fixpn = summary.scene_units
                          ? double(summary.total_points) / summary.scene_units
                          : 0.0;
  return summary;
}

// ---------------------------------------------------------------------------
// cluster: raw fixation files -> adaptively clustered fixation files
// ---------------------------------------------------------------------------

struct ClusterSummary {
  int files = 0;
  int max_points_after = 0;  // maxN_Pts over scenes
};

inline ClusterSummary cmd_cluster(const PipelineConfig& cfg) {
  const fs::path raw_dir = fs::path(cfg.out_dir) / "fixations_raw";
  const fs::path out_dir = fs::path(cfg.out_dir) / "fixations_clustered";
  const auto files = detail::sorted_files(raw_dir, ".json");
  if (files.empty()) {
    fail_validation("cluster: no fixation files under " + raw_dir.string() +
                    " (run ingest first)");
  }
  fs::create_directories(out_dir);
  ClusterSummary summary;
  for (const fs::path& file : files) {
    SceneFixations sf = detail::load_fixation_file(file);
    sf.points = adaptive_cluster(sf.points, cfg.cluster);
    detail::save_fixation_file(out_dir / file.filename(), sf);
    summary.files++;
    summary.max_points_after =
        std::max(summary.max_points_after, int(sf.points.size()));
  }
  return summary;
}

// ---------------------------------------------------------------------------
// render: fixation files -> heatmap images
// ---------------------------------------------------------------------------

struct RenderSummary {
  int images = 0;
};

inline RenderSummary cmd_render(const PipelineConfig& cfg,
                                const std::string& source = "clustered",
                                bool color = false, bool raw_floats = false) {
  if (source != "raw" && source != "clustered") {
    fail_validation("render: source must be 'raw' or 'clustered'");
  }
  const fs::path in_dir = fs::path(cfg.out_dir) / ("fixations_" + source);
  const fs::path img_dir = fs::path(cfg.out_dir) / ("heatmaps_" + source);
  const auto files = detail::sorted_files(in_dir, ".json");
  if (files.empty()) {
    fail_validation("render: no fixation files under " + in_dir.string());
  }
  std::ifstream mani_in(cfg.scene_manifest, std::ios::binary);
  if (!mani_in) fail_io("cannot open scene manifest: " + cfg.scene_manifest);
  const auto by_video = detail::manifest_by_video(load_scene_manifest(mani_in));
  fs::create_directories(img_dir);

  RenderSummary summary;
  for (const fs::path& file : files) {
    const SceneFixations sf = detail::load_fixation_file(file);
    const auto it = by_video.find(sf.video_id);
    if (it == by_video.end()) {
      fail_validation("render: video '" + sf.video_id + "' not in manifest");
    }
    const SceneWindow scene{sf.video_id, sf.second, it->second.width,
                            it->second.height};
    const SaliencyMap map = render_heatmap(sf.points, scene, cfg.kernel);
    const std::string stem = file.stem().string();
    if (color) {
      write_png_colormapped((img_dir / (stem + ".png")).string(), map);
    } else {
      write_png_gray((img_dir / (stem + ".png")).string(), map);
    }
    if (raw_floats) {
      write_raw_map((img_dir / (stem + ".salmap")).string(), map);
    }
    summary.images++;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// eval: two fixation trees -> five-metric rows and aggregate table
// ---------------------------------------------------------------------------

struct EvalRow {
  std::string scene;
  GroupLabel group = GroupLabel::all;
  double kl = 0, cc = 0, sim = 0, nss = 0, auc = 0;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  std::map<GroupLabel, EvalRow> aggregates;  // per-group means
  int skipped = 0;
  std::string per_scene_csv;
  std::string aggregate_txt;
};

namespace detail {

inline EvalRow mean_of(const std::vector<const EvalRow*>& rows) {
  EvalRow mean;
  for (const EvalRow* r : rows) {
    mean.kl += r->kl;
    mean.cc += r->cc;
    mean.sim += r->sim;
    mean.nss += r->nss;
    mean.auc += r->auc;
  }
  const double n = double(rows.size());
  mean.kl /= n;
  mean.cc /= n;
  mean.sim /= n;
  mean.nss /= n;
  mean.auc /= n;
  return mean;
}

inline std::string eval_rows_to_csv(const std::vector<EvalRow>& rows) {
  std::string csv = "scene,group,kl,cc,sim,nss,auc\n";
  for (const EvalRow& r : rows) {
    csv += r.scene;
    csv += ',';
    csv += to_string(r.group);
    csv += ',' + fmt6(r.kl) + ',' + fmt6(r.cc) + ',' + fmt6(r.sim) + ',' +
           fmt6(r.nss) + ',' + fmt6(r.auc) + '\n';
  }
  return csv;
}

// Aggregate table in the usual benchmark layout: one row per group with the
// five metric columns.
inline std::string eval_aggregate_table(
    const std::map<GroupLabel, EvalRow>& aggregates, Protocol protocol) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-16s %8s %8s %8s %8s %8s\n",
                "Protocol", "Group", "KL", "CC", "SIM", "NSS", "AUC");
  out << line;
  for (const auto& [group, row] : aggregates) {
    std::snprintf(line, sizeof(line),
                  "%-10s %-16s %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                  to_string(protocol), to_string(group), row.kl, row.cc,
                  row.sim, row.nss, row.auc);
    out << line;
  }
  return out.str();
}

}  // namespace detail

// Compares the heatmaps rendered from two fixation trees (prediction vs
// ground truth), matched by file stem. NSS/AUC are scored against the
// ground-truth points of each scene.
inline EvalSummary cmd_eval(const PipelineConfig& cfg,
                            const std::string& pred_source = "clustered",
                            const std::string& gt_source = "raw") {
  const fs::path pred_dir = fs::path(cfg.out_dir) / ("fixations_" + pred_source);
  const fs::path gt_dir = fs::path(cfg.out_dir) / ("fixations_" + gt_source);
  const auto pred_files = detail::sorted_files(pred_dir, ".json");
  if (pred_files.empty()) {
    fail_validation("eval: no fixation files under " + pred_dir.string());
  }
  std::ifstream mani_in(cfg.scene_manifest, std::ios::binary);
  if (!mani_in) fail_io("cannot open scene manifest: " + cfg.scene_manifest);
  const auto by_video = detail::manifest_by_video(load_scene_manifest(mani_in));

  EvalSummary summary;
  for (const fs::path& pred_file : pred_files) {
    const fs::path gt_file = gt_dir / pred_file.filename();
    if (!fs::exists(gt_file)) {
      summary.skipped++;
      continue;
    }
    const SceneFixations pred = detail::load_fixation_file(pred_file);
    const SceneFixations gt = detail::load_fixation_file(gt_file);
    if (pred.points.empty() || gt.points.empty()) {
      summary.skipped++;
      continue;
    }
    const auto it = by_video.find(pred.video_id);
    if (it == by_video.end()) {
      fail_validation("eval: video '" + pred.video_id + "' not in manifest");
    }
    const SceneWindow scene{pred.video_id, pred.second, it->second.width,
                            it->second.height};
    const SaliencyMap pred_map = render_heatmap(pred.points, scene, cfg.kernel);
    const MetricReport rep =
        evaluate(pred_map, gt.points, scene, pred.group, cfg.kernel);
    summary.rows.push_back(EvalRow{rep.scene_id, rep.group, rep.kl, rep.cc,
                                   rep.sim, rep.nss, rep.auc});
  }
  if (summary.rows.empty()) fail_validation("eval: no comparable scenes");

  std::map<GroupLabel, std::vector<const EvalRow*>> by_group;
  for (const EvalRow& r : summary.rows) by_group[r.group].push_back(&r);
  for (const auto& [group, rows] : by_group) {
    EvalRow mean = detail::mean_of(rows);
    mean.group = group;
    mean.scene = "mean";
    summary.aggregates[group] = mean;
  }

  const fs::path eval_dir = fs::path(cfg.out_dir) / "eval";
  fs::create_directories(eval_dir);
  summary.per_scene_csv = (eval_dir / "per_scene.csv").string();
  write_text_file(summary.per_scene_csv, detail::eval_rows_to_csv(summary.rows));
  summary.aggregate_txt = (eval_dir / "aggregate.txt").string();
  write_text_file(summary.aggregate_txt,
                  detail::eval_aggregate_table(summary.aggregates, cfg.protocol));
  return summary;
}

// ---------------------------------------------------------------------------
// score: offline reward scoring of a message batch
// ---------------------------------------------------------------------------

struct ScoreSummary {
  int messages = 0;
  std::string out_path;
};

// Batch lines are {"prompt_id": ..., "text": ...}; ground truth lines are
// {"prompt_id": ..., "points": [[x,y],...]}. With advantages enabled,
// messages sharing a prompt_id form one group and get group-relative
// advantages, so externally generated model outputs can be scored exactly
// as the trainer would.
inline ScoreSummary cmd_score(const PipelineConfig& cfg,
                              const std::string& batch_path,
                              const std::string& gt_path,
                              bool with_advantages = false) {
  std::map<std::string, FixationSet> targets;
  {
    std::ifstream in(gt_path, std::ios::binary);
    if (!in) fail_io("cannot open ground truth: " + gt_path);
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        FixationSet points;
        for (const auto& pt : j.at("points")) {
          points.push_back(
              GridPoint{pt.at(0).get<double>(), pt.at(1).get<double>()});
        }
        targets[j.at("prompt_id").get<std::string>()] = std::move(points);
      } catch (const nlohmann::json::exception& e) {
        fail_validation(gt_path + " row " + std::to_string(row) + ": " +
                        e.what());
      }
    }
  }

  struct Scored {
    std::string prompt_id;
    double r_format = 0, r_distance = 0, r_total = 0;
  };
  std::vector<Scored> scored;
  std::map<std::string, std::vector<size_t>> by_prompt;
  {
    std::ifstream in(batch_path, std::ios::binary);
    if (!in) fail_io("cannot open batch: " + batch_path);
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      std::string prompt_id, text;
      try {
        nlohmann::json j = nlohmann::json::parse(line);
        prompt_id = j.at("prompt_id").get<std::string>();
        text = j.at("text").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        fail_validation(batch_path + " row " + std::to_string(row) + ": " +
                        e.what());
      }
      const auto it = targets.find(prompt_id);
      if (it == targets.end()) {
        fail_validation("score: no ground truth for prompt_id '" + prompt_id +
                        "'");
      }
      const ParseOutcome outcome = parse(text);
      Scored s;
      s.prompt_id = prompt_id;
      s.r_format = format_reward(outcome, cfg.reward);
      s.r_total =
          total_reward(outcome, outcome.points, it->second, cfg.reward);
      s.r_distance = s.r_total - s.r_format;
      by_prompt[s.prompt_id].push_back(scored.size());
      scored.push_back(std::move(s));
    }
  }
  if (scored.empty()) fail_validation("score: empty batch");

  std::map<size_t, double> advantages;
  if (with_advantages) {
    for (const auto& [prompt, indices] : by_prompt) {
      std::vector<double> rewards;
      rewards.reserve(indices.size());
      for (size_t i : indices) rewards.push_back(scored[i].r_total);
      const std::vector<double> adv = grpo::group_advantages(rewards);
      for (size_t k = 0; k < indices.size(); ++k) advantages[indices[k]] = adv[k];
    }
  }

  fs::create_directories(cfg.out_dir);
  const fs::path out_path = fs::path(cfg.out_dir) / "scores.jsonl";
  std::ofstream out(out_path);
  if (!out) fail_io("cannot open scores for writing: " + out_path.string());
  for (size_t i = 0; i < scored.size(); ++i) {
    nlohmann::json j;
    j["prompt_id"] = scored[i].prompt_id;
    j["r_format"] = scored[i].r_format;
    j["r_distance"] = scored[i].r_distance;
    j["r_total"] = scored[i].r_total;
    if (with_advantages) j["advantage"] = advantages.at(i);
    out << j.dump() << '\n';
  }
  return ScoreSummary{int(scored.size()), out_path.string()};
}

// ---------------------------------------------------------------------------
// sweep-dbscan: Table-6-style parameter study on the ingested corpus
// ---------------------------------------------------------------------------

struct DbscanSweepRow {
  double eps = 0;
  int min_pts = 0;
  double kl = 0, cc = 0, sim = 0, nss = 0, auc = 0;
  int max_n_pts = 0;
};

inline std::vector<DbscanSweepRow> cmd_sweep_dbscan(
    const PipelineConfig& cfg,
    const std::vector<std::pair<double, int>>& settings) {
  if (settings.empty()) fail_validation("sweep-dbscan: no settings");
  const fs::path raw_dir = fs::path(cfg.out_dir) / "fixations_raw";
  const auto files = detail::sorted_files(raw_dir, ".json");
  if (files.empty()) {
    fail_validation("sweep-dbscan: no fixation files under " +
                    raw_dir.string() + " (run ingest first)");
  }
  std::ifstream mani_in(cfg.scene_manifest, std::ios::binary);
  if (!mani_in) fail_io("cannot open scene manifest: " + cfg.scene_manifest);
  const auto by_video = detail::manifest_by_video(load_scene_manifest(mani_in));

  struct SceneData {
    SceneWindow scene;
    FixationSet raw;
  };
  std::vector<SceneData> scenes;
  for (const fs::path& file : files) {
    const SceneFixations sf = detail::load_fixation_file(file);
    if (sf.points.empty()) continue;
    const auto it = by_video.find(sf.video_id);
    if (it == by_video.end()) {
      fail_validation("sweep-dbscan: video '" + sf.video_id +
                      "' not in manifest");
    }
    scenes.push_back(SceneData{SceneWindow{sf.video_id, sf.second,
                                           it->second.width, it->second.height},
                               sf.points});
  }

  std::vector<DbscanSweepRow> rows;
  for (const auto& [eps, min_pts] : settings) {
    DbscanSweepRow row;
    row.eps = eps;
    row.min_pts = min_pts;
    int evaluated = 0;
    for (const SceneData& sd : scenes) {
      const ClusterResult cr = dbscan(sd.raw, eps, min_pts);
      row.max_n_pts = std::max(row.max_n_pts, int(cr.centroids.size()));
      if (cr.centroids.empty()) continue;
      const SaliencyMap pred = render_heatmap(cr.centroids, sd.scene, cfg.kernel);
      const MetricReport rep =
          evaluate(pred, sd.raw, sd.scene, GroupLabel::all, cfg.kernel);
      row.kl += rep.kl;
      row.cc += rep.cc;
      row.sim += rep.sim;
      row.nss += rep.nss;
      row.auc += rep.auc;
      evaluated++;
    }
    if (evaluated > 0) {
      row.kl /= evaluated;
      row.cc /= evaluated;
      row.sim /= evaluated;
      row.nss /= evaluated;
      row.auc /= evaluated;
    }
    rows.push_back(row);
  }

  std::string csv = "eps,min_pts,kl,cc,sim,nss,auc,max_n_pts\n";
  for (const DbscanSweepRow& r : rows) {
    csv += detail::fmt4(r.eps) + ',' + std::to_string(r.min_pts) + ',' +
           detail::fmt6(r.kl) + ',' + detail::fmt6(r.cc) + ',' +
           detail::fmt6(r.sim) + ',' + detail::fmt6(r.nss) + ',' +
           detail::fmt6(r.auc) + ',' + std::to_string(r.max_n_pts) + '\n';
  }
  fs::create_directories(cfg.out_dir);
  write_text_file((fs::path(cfg.out_dir) / "sweep_dbscan.csv").string(), csv);
  return rows;
}

// ---------------------------------------------------------------------------
// train-toy and sweep-reward
// ---------------------------------------------------------------------------

// Built-in toy dataset: two scenes per demographic group with targets whose
// x positions diverge by gender and y positions by age band, mirroring the
// synthetic corpus construction.
inline std::vector<grpo::DatasetEntry> builtin_toy_dataset(uint64_t seed) {
  std::vector<grpo::DatasetEntry> dataset;
  int scene_id = 0;
  for (GroupLabel g : kP2GroupLabels) {
    const bool male = g == GroupLabel::male || g == GroupLabel::male_over30 ||
                      g == GroupLabel::male_under30;
    const bool over30 =
        g == GroupLabel::male_over30 || g == GroupLabel::female_over30;
    const bool under30 =
        g == GroupLabel::male_under30 || g == GroupLabel::female_under30;
    const double cx = male ? 300.0 : 700.0;
    const double cy = over30 ? 650.0 : (under30 ? 350.0 : 500.0);
    for (int s = 0; s < 2; ++s) {
      RandomStream rng = RandomStream::derive(seed, 0x746f7964ULL,
                                              (uint64_t(scene_id) << 8) | s);
      grpo::DatasetEntry entry;
      entry.context = grpo::TrainContext{g, scene_id};
      const int n_targets = 4 + rng.uniform_int(0, 3);
      for (int k = 0; k < n_targets; ++k) {
        entry.targets.push_back(GridPoint{
            std::clamp(cx + rng.normal(0.0, 90.0), 0.0, kGridMax),
            std::clamp(cy + rng.normal(0.0, 90.0), 0.0, kGridMax)});
      }
      dataset.push_back(std::move(entry));
      scene_id++;
    }
  }
  return dataset;
}

// Dataset from the clustered fixation tree: one context per file.
inline std::vector<grpo::DatasetEntry> dataset_from_fixation_dir(
    const fs::path& dir) {
  const auto files = detail::sorted_files(dir, ".json");
  if (files.empty()) {
    fail_validation("no fixation files under " + dir.string());
  }
  std::vector<grpo::DatasetEntry> dataset;
  int scene_id = 0;
  for (const fs::path& file : files) {
    const SceneFixations sf = detail::load_fixation_file(file);
    if (sf.points.empty()) continue;
    dataset.push_back(
        grpo::DatasetEntry{grpo::TrainContext{sf.group, scene_id}, sf.points});
    scene_id++;
  }
  if (dataset.empty()) fail_validation("no nonempty fixation files in " + dir.string());
  return dataset;
}

struct TrainSummary {
  int contexts = 0;
  int iterations = 0;
  double first_reward = 0.0;
  double final_reward = 0.0;
  double final_validity = 0.0;
  std::string trace_path;
  std::string policy_path;
  std::string sidecar_path;
};

namespace detail {

inline std::string trace_to_csv(const grpo::TrainTrace& trace) {
  std::string csv =
      "iteration,mean_reward,format_validity,mean_nn_distance,mean_kl_to_ref,"
      "loss\n";
  for (size_t i = 0; i < trace.iterations(); ++i) {
    csv += std::to_string(i) + ',' + fmt6(trace.mean_reward[i]) + ',' +
           fmt6(trace.format_validity[i]) + ',' +
           fmt6(trace.mean_nn_distance[i]) + ',' +
           fmt6(trace.mean_kl_to_ref[i]) + ',' + fmt6(trace.loss[i]) + '\n';
  }
  return csv;
}

inline nlohmann::json grpo_config_to_json(const grpo::Config& g) {
  nlohmann::json j;
  j["group_size"] = g.group_size;
  j["clip_eps"] = g.clip_eps;
  j["kl_beta"] = g.kl_beta;
  j["learn_rate"] = g.learn_rate;
  j["iterations"] = g.iterations;
  j["seed"] = g.seed;
  j["coord_bins"] = g.coord_bins;
  j["max_count"] = g.max_count;
  j["stochastic_delimiters"] = g.stochastic_delimiters;
  return j;
}

}  // namespace detail

// Runs the C-GRPO loop and writes the trace CSV, the policy blob, and its
// JSON sidecar. The dataset comes from the clustered fixation tree unless
// `synthetic` asks for the built-in one.
inline TrainSummary cmd_train_toy(const PipelineConfig& cfg,
                                  bool synthetic = false) {
  grpo::Config gcfg = cfg.grpo;
  gcfg.seed = cfg.seed;
  const std::vector<grpo::DatasetEntry> dataset =
      synthetic
          ? builtin_toy_dataset(cfg.seed)
          : dataset_from_fixation_dir(fs::path(cfg.out_dir) /
                                      "fixations_clustered");

  const grpo::TrainResult result = grpo::train(dataset, gcfg, cfg.reward);

  const fs::path train_dir = fs::path(cfg.out_dir) / "train";
  fs::create_directories(train_dir);
  TrainSummary summary;
  summary.contexts = int(dataset.size());
  summary.iterations = int(result.trace.iterations());
  if (summary.iterations > 0) {
    summary.first_reward = result.trace.mean_reward.front();
    summary.final_reward = result.trace.mean_reward.back();
    summary.final_validity = result.trace.format_validity.back();
  }
  summary.trace_path = (train_dir / "trace.csv").string();
  write_text_file(summary.trace_path, detail::trace_to_csv(result.trace));
  summary.policy_path = (train_dir / "policy.bin").string();
  grpo::save_policy(summary.policy_path, result.policy);

  nlohmann::json sidecar;
  sidecar["grpo"] = detail::grpo_config_to_json(gcfg);
  sidecar["reward"] = {{"r_base", cfg.reward.r_base},
                       {"r_extra", cfg.reward.r_extra},
                       {"d_max", cfg.reward.d_max}};
  nlohmann::json contexts = nlohmann::json::array();
  for (const grpo::DatasetEntry& e : dataset) {
    contexts.push_back({{"group", to_string(e.context.group)},
                        {"scene_id", e.context.scene_id},
                        {"targets", e.targets.size()}});
  }
  sidecar["contexts"] = std::move(contexts);
  summary.sidecar_path = (train_dir / "policy.json").string();
  write_text_file(summary.sidecar_path, sidecar.dump(2) + "\n");
  return summary;
}

struct RewardSweepRow {
  double r_base = 0;
  double r_extra = 0;
  double kl = 0, cc = 0, sim = 0, nss = 0, auc = 0;
};

// Trains one policy per (r_base, r_extra) setting under a shared seed and
// scores the final policies: per context, sampled predictions are pooled
// and their heatmap is compared against the targets' heatmap.
inline std::vector<RewardSweepRow> cmd_sweep_reward(
    const PipelineConfig& cfg,
    const std::vector<std::pair<double, double>>& settings,
    bool synthetic = true) {
  if (settings.empty()) fail_validation("sweep-reward: no settings");
  const std::vector<grpo::DatasetEntry> dataset =
      synthetic
          ? builtin_toy_dataset(cfg.seed)
          : dataset_from_fixation_dir(fs::path(cfg.out_dir) /
                                      "fixations_clustered");
  // Toy policies emit grid points; score on a fixed small frame.
  const SceneWindow eval_scene{"toy", 0, 448, 448};

  std::vector<RewardSweepRow> rows;
  for (const auto& [r_base, r_extra] : settings) {
    grpo::Config gcfg = cfg.grpo;
    gcfg.seed = cfg.seed;  // isolation: only the reward config varies
    RewardConfig rcfg = cfg.reward;
    rcfg.r_base = r_base;
    rcfg.r_extra = r_extra;
    rcfg.validate();
    const grpo::TrainResult result = grpo::train(dataset, gcfg, rcfg);

    RewardSweepRow row;
    row.r_base = r_base;
    row.r_extra = r_extra;
    int evaluated = 0;
    for (size_t c = 0; c < dataset.size(); ++c) {
      FixationSet pooled;
      const uint64_t eval_seed =
          RandomStream::derive(cfg.seed, 0x6576616cULL, c).next_u64();
      const auto outputs =
          grpo::sample_group(result.policy, int(c), 32, eval_seed);
      for (const auto& out : outputs) {
        const ParseOutcome outcome = parse(decode_message(result.policy, out));
        if (!outcome.valid_format) continue;
        pooled.insert(pooled.end(), outcome.points.begin(),
                      outcome.points.end());
      }
      if (pooled.empty()) continue;
      const SaliencyMap pred = render_heatmap(pooled, eval_scene, cfg.kernel);
      const MetricReport rep = evaluate(pred, dataset[c].targets, eval_scene,
                                        dataset[c].context.group, cfg.kernel);
      row.kl += rep.kl;
      row.cc += rep.cc;
      row.sim += rep.sim;
      row.nss += rep.nss;
      row.auc += rep.auc;
      evaluated++;
    }
    if (evaluated > 0) {
      row.kl /= evaluated;
      row.cc /= evaluated;
      row.sim /= evaluated;
      row.nss /= evaluated;
      row.auc /= evaluated;
    }
    rows.push_back(row);
  }

  std::string csv = "r_base,r_extra,kl,cc,sim,nss,auc\n";
  for (const RewardSweepRow& r : rows) {
    csv += detail::fmt4(r.r_base) + ',' + detail::fmt4(r.r_extra) + ',' +
           detail::fmt6(r.kl) + ',' + detail::fmt6(r.cc) + ',' +
           detail::fmt6(r.sim) + ',' + detail::fmt6(r.nss) + ',' +
           detail::fmt6(r.auc) + '\n';
  }
  fs::create_directories(cfg.out_dir);
  write_text_file((fs::path(cfg.out_dir) / "sweep_reward.csv").string(), csv);
  return rows;
}

// ---------------------------------------------------------------------------
// report: per-group heatmap panels plus aggregate metric tables
// ---------------------------------------------------------------------------

struct ReportSummary {
  int heatmaps = 0;
  int composites = 0;
  std::vector<std::string> warnings;
};

inline ReportSummary cmd_report(const PipelineConfig& cfg) {
  const fs::path fix_dir = fs::path(cfg.out_dir) / "fixations_clustered";
  const auto files = detail::sorted_files(fix_dir, ".json");
  if (files.empty()) {
    fail_validation("report: no fixation files under " + fix_dir.string() +
                    " (run ingest and cluster first)");
  }
  std::ifstream mani_in(cfg.scene_manifest, std::ios::binary);
  if (!mani_in) fail_io("cannot open scene manifest: " + cfg.scene_manifest);
  const auto by_video = detail::manifest_by_video(load_scene_manifest(mani_in));

  const fs::path report_dir = fs::path(cfg.out_dir) / "report";
  const fs::path panels_dir = report_dir / "heatmaps";
  fs::create_directories(panels_dir);

  std::map<SceneWindow, std::map<GroupLabel, SceneFixations>> scenes;
  for (const fs::path& file : files) {
    SceneFixations sf = detail::load_fixation_file(file);
    const auto it = by_video.find(sf.video_id);
    if (it == by_video.end()) {
      fail_validation("report: video '" + sf.video_id + "' not in manifest");
    }
    const SceneWindow scene{sf.video_id, sf.second, it->second.width,
                            it->second.height};
    scenes[scene][sf.group] = std::move(sf);
  }

  const std::vector<GroupLabel> wanted =
      cfg.protocol == Protocol::P1
          ? std::vector<GroupLabel>{GroupLabel::all}
          : std::vector<GroupLabel>(kP2GroupLabels.begin(),
                                    kP2GroupLabels.end());

  ReportSummary summary;
  std::set<GroupLabel> warned;
  const fs::path composite_dir = report_dir / "composite";
  if (cfg.protocol == Protocol::P2) fs::create_directories(composite_dir);

  for (const auto& [scene, groups] : scenes) {
    std::vector<ImageRGB> panels;
    for (GroupLabel g : wanted) {
      const auto it = groups.find(g);
      if (it == groups.end() || it->second.points.empty()) {
        if (warned.insert(g).second) {
          summary.warnings.push_back(std::string("group ") + to_string(g) +
                                     " empty in at least one scene; skipped");
        }
        if (cfg.protocol == Protocol::P2) {
          panels.push_back(ImageRGB::filled(scene.width, scene.height, 0, 0, 0));
        }
        continue;
      }
      const SaliencyMap map = render_heatmap(it->second.points, scene, cfg.kernel);
      const std::string stem =
          scene_file_stem(scene.video_id, scene.second_index, g);
      write_png_colormapped((panels_dir / (stem + ".png")).string(), map);
      summary.heatmaps++;
      if (cfg.protocol == Protocol::P2) panels.push_back(colormap(map));
    }
    if (cfg.protocol == Protocol::P2) {
      char sec[16];
      std::snprintf(sec, sizeof(sec), "s%04d", scene.second_index);
      const std::string name =
          sanitize_for_filename(scene.video_id) + "__" + sec + ".png";
      write_png_rgb((composite_dir / name).string(), compose_grid(panels, 3));
      summary.composites++;
    }
  }

  // Aggregate tables over the clustered-vs-raw comparison.
  const EvalSummary eval = cmd_eval(cfg, "clustered", "raw");
  write_text_file((report_dir / "aggregate.txt").string(),
                  detail::eval_aggregate_table(eval.aggregates, cfg.protocol));
  write_text_file((report_dir / "per_scene.csv").string(),
                  detail::eval_rows_to_csv(eval.rows));
  return summary;
}

// ---------------------------------------------------------------------------
// synth: write a synthetic corpus to disk (test/demo support)
// ---------------------------------------------------------------------------

struct SynthSummary {
  int samples = 0;
  int observers = 0;
  int videos = 0;
};

inline SynthSummary cmd_synth(const std::string& out_dir,
                              const SyntheticConfig& scfg) {
  const SyntheticCorpus corpus = generate_synthetic(scfg);
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "gaze.csv", std::ios::binary);
    if (!out) fail_io("cannot write gaze.csv");
    save_gaze_log(out, corpus.samples, GazeLogFormat::csv);
  }
  {
    std::ofstream out(fs::path(out_dir) / "profiles.csv", std::ios::binary);
    if (!out) fail_io("cannot write profiles.csv");
    save_profiles(out, corpus.profiles);
  }
  {
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    if (!out) fail_io("cannot write manifest.json");
    save_scene_manifest(out, corpus.manifest);
  }
  return SynthSummary{int(corpus.samples.size()), int(corpus.profiles.size()),
                      int(corpus.manifest.size())};
}

}  // namespace gaze
