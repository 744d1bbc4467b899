#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "gaze/io.hpp"
#include "gaze/rng.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Synthetic corpus: per-scene mixture-of-Gaussians gaze clouds whose
// attractor positions shift per demographic group, so group-level
// divergence is controllable ground truth for tests and sweeps.
struct SyntheticConfig {
  int videos = 4;
  int seconds_per_video = 5;
  int observers_per_subgroup = 3;  // per gender-age subgroup (4 subgroups)
  int width = 960;
  int height = 540;
  int samples_per_second = 30;  // 30 Hz
  int attractors_per_scene = 3;
  double attractor_std_px = 18.0;
  double group_shift_px = 120.0;  // demographic divergence knob
  uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<GazeSample> samples;
  std::vector<ObserverProfile> profiles;
  std::vector<SceneManifestEntry> manifest;
};

namespace detail {

inline double clamp_to_frame(double v, int extent) {
  return std::clamp(v, 0.0, double(extent - 1));
}

}  // namespace detail

inline SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.videos < 1 || cfg.seconds_per_video < 1 ||
      cfg.observers_per_subgroup < 1 || cfg.width < 2 || cfg.height < 2 ||
      cfg.samples_per_second < 1 || cfg.attractors_per_scene < 1) {
    fail_validation("SyntheticConfig: all counts must be positive");
  }
  SyntheticCorpus corpus;

  struct Subgroup {
    Gender gender;
    bool over30;
    const char* tag;
  };
  static constexpr Subgroup kSubgroups[4] = {
      {Gender::male, false, "mu"},
      {Gender::male, true, "mo"},
      {Gender::female, false, "fu"},
      {Gender::female, true, "fo"},
  };

  for (int sg = 0; sg < 4; ++sg) {
    RandomStream rng = RandomStream::derive(cfg.seed, 0x70726f66ULL, uint64_t(sg));
    for (int k = 0; k < cfg.observers_per_subgroup; ++k) {
      ObserverProfile p;
      char id[16];
      std::snprintf(id, sizeof(id), "%s%02d", kSubgroups[sg].tag, k);
      p.observer_id = id;
      p.gender = kSubgroups[sg].gender;
      p.age = kSubgroups[sg].over30 ? rng.uniform_int(30, 55)
                                    : rng.uniform_int(20, 29);
      corpus.profiles.push_back(std::move(p));
    }
  }

  for (int v = 0; v < cfg.videos; ++v) {
    char vid[16];
    std::snprintf(vid, sizeof(vid), "v%02d", v);
    corpus.manifest.push_back(SceneManifestEntry{
        vid, cfg.width, cfg.height, cfg.seconds_per_video});
  }

  const double half_shift = cfg.group_shift_px / 2.0;
  for (int v = 0; v < cfg.videos; ++v) {
    const std::string video_id = corpus.manifest[v].video_id;
    for (int sec = 0; sec < cfg.seconds_per_video; ++sec) {
      // Shared attractors for the scene; observers see them shifted by
      // their demographic offsets.
      RandomStream attr_rng = RandomStream::derive(
          cfg.seed, 0x61747472ULL, (uint64_t(v) << 20) | uint64_t(sec));
      std::vector<std::pair<double, double>> attractors;
      for (int a = 0; a < cfg.attractors_per_scene; ++a) {
        attractors.emplace_back(
            (0.2 + 0.6 * attr_rng.next_double()) * cfg.width,
            (0.2 + 0.6 * attr_rng.next_double()) * cfg.height);
      }
      for (size_t oi = 0; oi < corpus.profiles.size(); ++oi) {
        const ObserverProfile& obs = corpus.profiles[oi];
        const double shift_x =
            obs.gender == Gender::male ? -half_shift : half_shift;
        const double shift_y = obs.age >= 30 ? half_shift : -half_shift;
        RandomStream rng = RandomStream::derive(
            cfg.seed, 0x73616d70ULL,
            (uint64_t(oi) << 40) | (uint64_t(v) << 20) | uint64_t(sec));
        for (int k = 0; k < cfg.samples_per_second; ++k) {
          const auto& [ax, ay] =
              attractors[size_t(rng.uniform_int(0, cfg.attractors_per_scene - 1))];
          GazeSample s;
          s.observer_id = obs.observer_id;
          s.video_id = video_id;
          s.t = sec + double(k) / cfg.samples_per_second;
          s.x = detail::clamp_to_frame(
              rng.normal(ax + shift_x, cfg.attractor_std_px), cfg.width);
          s.y = detail::clamp_to_frame(
              rng.normal(ay + shift_y, cfg.attractor_std_px), cfg.height);
          corpus.samples.push_back(std::move(s));
        }
      }
    }
  }
  return corpus;
}

}  // namespace gaze
