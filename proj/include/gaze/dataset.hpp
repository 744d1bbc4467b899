#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/io.hpp"
#include "gaze/types.hpp"

namespace gaze {

enum class Protocol : uint8_t { P1, P2 };

inline const char* to_string(Protocol p) { return p == Protocol::P1 ? "P1" : "P2"; }

inline Protocol protocol_from_string(std::string_view s) {
  if (s == "P1" || s == "p1") return Protocol::P1;
  if (s == "P2" || s == "p2") return Protocol::P2;
  fail_validation("unknown protocol '" + std::string(s) + "' (expected P1 or P2)");
}

// Buckets one video's samples into one-second scenes: a sample at time t
// lands in second_index floor(t). Every sample lands in exactly one bucket;
// timestamps beyond the declared duration are kept and bucketed normally.
inline std::map<SceneWindow, std::vector<GazeSample>> segment_scenes(
    const std::vector<GazeSample>& samples, const SceneManifestEntry& video) {
  std::map<SceneWindow, std::vector<GazeSample>> scenes;
  for (const GazeSample& s : samples) {
    if (s.video_id != video.video_id) {
      fail_validation("segment_scenes: sample for video '" + s.video_id +
                      "' mixed into '" + video.video_id + "'");
    }
    if (s.x >= video.width || s.y >= video.height) {
      fail_validation("segment_scenes: sample at (" + format_double(s.x) +
                      "," + format_double(s.y) + ") outside " +
                      std::to_string(video.width) + "x" +
                      std::to_string(video.height) + " frame of " +
                      video.video_id);
    }
    SceneWindow window{video.video_id, int(std::floor(s.t)), video.width,
                       video.height};
    scenes[window].push_back(s);
  }
  return scenes;
}

// Splits samples into observer cohorts. P1 pools everything under `all`.
// P2 produces the six demographic groups; they overlap by design: each
// sample is in exactly one gender group and exactly one gender-age group.
inline std::map<GroupLabel, std::vector<GazeSample>> group_by_protocol(
    const std::vector<GazeSample>& samples,
    const std::map<std::string, ObserverProfile>& profiles,
    Protocol protocol) {
  std::map<GroupLabel, std::vector<GazeSample>> groups;
  if (protocol == Protocol::P1) {
    groups[GroupLabel::all] = samples;
    return groups;
  }
  for (GroupLabel g : kP2GroupLabels) groups[g];  // all six keys, even empty
  for (const GazeSample& s : samples) {
    const auto it = profiles.find(s.observer_id);
    if (it == profiles.end()) {
      fail_validation("no profile for observer '" + s.observer_id + "'");
    }
    const ObserverProfile& p = it->second;
    groups[gender_group(p.gender)].push_back(s);
    groups[gender_age_group(p.gender, p.age)].push_back(s);
  }
  return groups;
}

}  // namespace gaze
