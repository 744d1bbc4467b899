// Pipeline driver: ingest -> cluster -> render -> eval -> report, plus
// offline reward scoring, the parameter sweeps, and the toy C-GRPO trainer.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaze/pipeline.hpp"

namespace {

using gaze::PipelineConfig;

// Parses "a:b" pair lists such as 0.04:1 or 0.2:0.8.
template <typename A, typename B>
std::vector<std::pair<A, B>> parse_pairs(const std::vector<std::string>& specs,
                                         const char* what) {
  std::vector<std::pair<A, B>> out;
  for (const std::string& s : specs) {
    const size_t colon = s.find(':');
    if (colon == std::string::npos) {
      gaze::fail_validation(std::string(what) + ": expected 'a:b', got '" + s +
                            "'");
    }
    try {
      if constexpr (std::is_same_v<B, int>) {
        out.emplace_back(std::stod(s.substr(0, colon)),
                         std::stoi(s.substr(colon + 1)));
      } else {
        out.emplace_back(std::stod(s.substr(0, colon)),
                         std::stod(s.substr(colon + 1)));
      }
    } catch (const std::exception&) {
      gaze::fail_validation(std::string(what) + ": bad pair '" + s + "'");
    }
  }
  return out;
}

void print_eval_table(const gaze::EvalSummary& summary, gaze::Protocol proto) {
  std::cout << gaze::detail::eval_aggregate_table(summary.aggregates, proto);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazetool - personalized gaze saliency pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON pipeline config file");

  PipelineConfig flags;  // flag values; applied over the config file
  std::string protocol_flag;
  auto* o_gaze = app.add_option("--gaze-log", flags.gaze_log, "gaze log (.csv or .jsonl)");
  auto* o_prof = app.add_option("--profiles", flags.profiles, "observer profile CSV");
  auto* o_mani = app.add_option("--manifest", flags.scene_manifest, "scene manifest JSON");
  auto* o_out = app.add_option("--out", flags.out_dir, "output directory");
  auto* o_proto = app.add_option("--protocol", protocol_flag, "P1 or P2");
  auto* o_seed = app.add_option("--seed", flags.seed, "global seed");
  auto* o_jobs = app.add_option("--jobs", flags.jobs, "worker threads for scene-level stages");

  auto* o_sigma = app.add_option("--sigma", flags.kernel.sigma, "kernel sigma in pixels (0 = width/25)");
  auto* o_trunc = app.add_option("--truncate-radius", flags.kernel.truncate_radius, "kernel truncation, in sigmas");

  auto* o_skip = app.add_option("--skip-below", flags.cluster.skip_below, "keep scenes with fewer points raw");
  auto* o_beps = app.add_option("--base-eps", flags.cluster.base_eps, "DBSCAN eps, base config");
  auto* o_bmin = app.add_option("--base-min-pts", flags.cluster.base_min_pts, "DBSCAN minPts, base config");
  auto* o_seps = app.add_option("--strict-eps", flags.cluster.strict_eps, "DBSCAN eps, strict config");
  auto* o_smin = app.add_option("--strict-min-pts", flags.cluster.strict_min_pts, "DBSCAN minPts, strict config");
  auto* o_sabove = app.add_option("--strict-above", flags.cluster.strict_above, "rerun strict config above this many centroids");

  auto* o_rbase = app.add_option("--r-base", flags.reward.r_base, "format reward base share");
  auto* o_rextra = app.add_option("--r-extra", flags.reward.r_extra, "format reward count-agreement share");
  auto* o_dmax = app.add_option("--d-max", flags.reward.d_max, "max squared grid distance");

  auto* o_gsize = app.add_option("--group-size", flags.grpo.group_size, "GRPO group size G");
  auto* o_clip = app.add_option("--clip-eps", flags.grpo.clip_eps, "policy ratio clip width");
  auto* o_beta = app.add_option("--kl-beta", flags.grpo.kl_beta, "KL penalty weight");
  auto* o_lr = app.add_option("--learn-rate", flags.grpo.learn_rate, "ascent step size");
  auto* o_iters = app.add_option("--iterations", flags.grpo.iterations, "training iterations");
  auto* o_bins = app.add_option("--coord-bins", flags.grpo.coord_bins, "coordinate bins per axis");
  auto* o_kmax = app.add_option("--max-count", flags.grpo.max_count, "largest declared point count");
  bool stochastic_flag = false;
  auto* o_stoch = app.add_flag("--stochastic-delimiters", stochastic_flag, "sample delimiter tokens so invalid formats occur");

  auto* c_ingest = app.add_subcommand("ingest", "segment gaze logs into per-scene fixation files");
  auto* c_cluster = app.add_subcommand("cluster", "consolidate fixations with the adaptive DBSCAN policy");

  auto* c_render = app.add_subcommand("render", "render heatmap PNGs from fixation files");
  std::string render_source = "clustered";
  bool render_color = false, render_raw = false;
  c_render->add_option("--source", render_source, "raw or clustered")->check(CLI::IsMember({"raw", "clustered"}));
  c_render->add_flag("--color", render_color, "color-mapped instead of grayscale");
  c_render->add_flag("--raw-floats", render_raw, "also export raw float maps");

  auto* c_eval = app.add_subcommand("eval", "five-metric evaluation of one fixation tree against another");
  std::string eval_pred = "clustered", eval_gt = "raw";
  c_eval->add_option("--pred", eval_pred, "prediction source (raw|clustered)");
  c_eval->add_option("--gt", eval_gt, "ground-truth source (raw|clustered)");

  auto* c_score = app.add_subcommand("score", "score a JSONL message batch against ground-truth points");
  std::string score_batch, score_gt;
  bool score_adv = false;
  c_score->add_option("--batch", score_batch, "JSONL of {prompt_id, text}")->required();
  c_score->add_option("--gt-points", score_gt, "JSONL of {prompt_id, points}")->required();
  c_score->add_flag("--advantages", score_adv, "emit group-relative advantages per prompt_id");

  auto* c_sweep_db = app.add_subcommand("sweep-dbscan", "metric table over DBSCAN settings");
  std::vector<std::string> db_settings;
  c_sweep_db->add_option("--setting", db_settings, "eps:minPts (repeatable)");

  auto* c_sweep_rw = app.add_subcommand("sweep-reward", "train per reward balance and tabulate metrics");
  std::vector<std::string> rw_settings;
  bool sweep_rw_synth = false;
  c_sweep_rw->add_option("--setting", rw_settings, "r_base:r_extra (repeatable)");
  c_sweep_rw->add_flag("--synthetic", sweep_rw_synth, "use the built-in toy dataset");

  auto* c_train = app.add_subcommand("train-toy", "C-GRPO training of the toy point policy");
  bool train_synth = false;
  c_train->add_flag("--synthetic", train_synth, "use the built-in toy dataset");

  auto* c_report = app.add_subcommand("report", "per-group heatmaps and aggregate tables");

  auto* c_synth = app.add_subcommand("synth", "write a synthetic gaze corpus");
  gaze::SyntheticConfig scfg;
  c_synth->add_option("--videos", scfg.videos, "number of videos");
  c_synth->add_option("--seconds", scfg.seconds_per_video, "seconds per video");
  c_synth->add_option("--observers-per-subgroup", scfg.observers_per_subgroup, "observers per gender-age subgroup");
  c_synth->add_option("--width", scfg.width, "frame width");
  c_synth->add_option("--height", scfg.height, "frame height");
  c_synth->add_option("--rate", scfg.samples_per_second, "samples per second");
  c_synth->add_option("--attractors", scfg.attractors_per_scene, "attractors per scene");
  c_synth->add_option("--attractor-std", scfg.attractor_std_px, "attractor spread in pixels");
  c_synth->add_option("--group-shift", scfg.group_shift_px, "demographic divergence in pixels");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = gaze::load_pipeline_config(config_path);
    if (*o_gaze) cfg.gaze_log = flags.gaze_log;
    if (*o_prof) cfg.profiles = flags.profiles;
    if (*o_mani) cfg.scene_manifest = flags.scene_manifest;
    if (*o_out) cfg.out_dir = flags.out_dir;
    if (*o_proto) cfg.protocol = gaze::protocol_from_string(protocol_flag);
    if (*o_seed) cfg.seed = flags.seed;
    if (*o_jobs) cfg.jobs = flags.jobs;
    if (*o_sigma) cfg.kernel.sigma = flags.kernel.sigma;
    if (*o_trunc) cfg.kernel.truncate_radius = flags.kernel.truncate_radius;
    if (*o_skip) cfg.cluster.skip_below = flags.cluster.skip_below;
    if (*o_beps) cfg.cluster.base_eps = flags.cluster.base_eps;
    if (*o_bmin) cfg.cluster.base_min_pts = flags.cluster.base_min_pts;
    if (*o_seps) cfg.cluster.strict_eps = flags.cluster.strict_eps;
    if (*o_smin) cfg.cluster.strict_min_pts = flags.cluster.strict_min_pts;
    if (*o_sabove) cfg.cluster.strict_above = flags.cluster.strict_above;
    if (*o_rbase) cfg.reward.r_base = flags.reward.r_base;
    if (*o_rextra) cfg.reward.r_extra = flags.reward.r_extra;
    if (*o_dmax) cfg.reward.d_max = flags.reward.d_max;
    if (*o_gsize) cfg.grpo.group_size = flags.grpo.group_size;
    if (*o_clip) cfg.grpo.clip_eps = flags.grpo.clip_eps;
    if (*o_beta) cfg.grpo.kl_beta = flags.grpo.kl_beta;
    if (*o_lr) cfg.grpo.learn_rate = flags.grpo.learn_rate;
    if (*o_iters) cfg.grpo.iterations = flags.grpo.iterations;
    if (*o_bins) cfg.grpo.coord_bins = flags.grpo.coord_bins;
    if (*o_kmax) cfg.grpo.max_count = flags.grpo.max_count;
    if (*o_stoch) cfg.grpo.stochastic_delimiters = stochastic_flag;

    if (c_ingest->parsed()) {
      const gaze::IngestSummary s = gaze::cmd_ingest(cfg);
      for (const std::string& w : s.warnings) std::cerr << "warning: " << w << '\n';
      std::printf("%-10s %8s %10s\n", "Protocol", "Scenes", "AvgFixPN");
      std::printf("%-10s %8d %10.1f\n", to_string(s.protocol), s.scene_units,
                  s.avg_fixpn);
    } else if (c_cluster->parsed()) {
      const gaze::ClusterSummary s = gaze::cmd_cluster(cfg);
      std::printf("clustered %d scene files, maxN_Pts %d\n", s.files,
                  s.max_points_after);
    } else if (c_render->parsed()) {
      const gaze::RenderSummary s =
          gaze::cmd_render(cfg, render_source, render_color, render_raw);
      std::printf("rendered %d heatmaps from %s fixations\n", s.images,
                  render_source.c_str());
    } else if (c_eval->parsed()) {
      const gaze::EvalSummary s = gaze::cmd_eval(cfg, eval_pred, eval_gt);
      print_eval_table(s, cfg.protocol);
      if (s.skipped) std::cerr << "warning: skipped " << s.skipped << " scenes\n";
      std::printf("per-scene rows: %zu -> %s\n", s.rows.size(),
                  s.per_scene_csv.c_str());
    } else if (c_score->parsed()) {
      const gaze::ScoreSummary s =
          gaze::cmd_score(cfg, score_batch, score_gt, score_adv);
      std::printf("scored %d messages -> %s\n", s.messages, s.out_path.c_str());
    } else if (c_sweep_db->parsed()) {
      auto settings = parse_pairs<double, int>(db_settings, "sweep-dbscan");
      if (settings.empty()) {
        settings = {{0.03, 1}, {0.04, 1}, {0.05, 1}, {0.03, 2}, {0.04, 2}};
      }
      const auto rows = gaze::cmd_sweep_dbscan(cfg, settings);
      std::printf("%6s %7s %8s %8s %8s %8s %8s %9s\n", "eps", "minPts", "KL",
                  "CC", "SIM", "NSS", "AUC", "maxN_Pts");
      for (const auto& r : rows) {
        std::printf("%6.3f %7d %8.4f %8.4f %8.4f %8.4f %8.4f %9d\n", r.eps,
                    r.min_pts, r.kl, r.cc, r.sim, r.nss, r.auc, r.max_n_pts);
      }
    } else if (c_sweep_rw->parsed()) {
      auto settings = parse_pairs<double, double>(rw_settings, "sweep-reward");
      if (settings.empty()) settings = {{0.2, 0.8}, {0.5, 0.5}, {0.8, 0.2}};
      const auto rows = gaze::cmd_sweep_reward(cfg, settings, sweep_rw_synth);
      std::printf("%7s %8s %8s %8s %8s %8s %8s\n", "r_base", "r_extra", "KL",
                  "CC", "SIM", "NSS", "AUC");
      for (const auto& r : rows) {
        std::printf("%7.2f %8.2f %8.4f %8.4f %8.4f %8.4f %8.4f\n", r.r_base,
                    r.r_extra, r.kl, r.cc, r.sim, r.nss, r.auc);
      }
    } else if (c_train->parsed()) {
      const gaze::TrainSummary s = gaze::cmd_train_toy(cfg, train_synth);
      std::printf("trained %d contexts for %d iterations\n", s.contexts,
                  s.iterations);
      std::printf("mean reward %.4f -> %.4f, final format validity %.3f\n",
                  s.first_reward, s.final_reward, s.final_validity);
      std::printf("trace: %s\npolicy: %s\n", s.trace_path.c_str(),
                  s.policy_path.c_str());
    } else if (c_report->parsed()) {
      const gaze::ReportSummary s = gaze::cmd_report(cfg);
      for (const std::string& w : s.warnings) std::cerr << "warning: " << w << '\n';
      std::printf("wrote %d heatmaps, %d composites under %s/report\n",
                  s.heatmaps, s.composites, cfg.out_dir.c_str());
    } else if (c_synth->parsed()) {
      if (cfg.out_dir.empty()) gaze::fail_validation("synth: --out is required");
      scfg.seed = cfg.seed;
      const gaze::SynthSummary s = gaze::cmd_synth(cfg.out_dir, scfg);
      std::printf("wrote %d samples, %d observers, %d videos under %s\n",
                  s.samples, s.observers, s.videos, cfg.out_dir.c_str());
    }
  } catch (const gaze::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
