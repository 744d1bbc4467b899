#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "gaze/error.hpp"

namespace gaze {

// One raw eye-tracker reading: where observer `observer_id` looked in video
// `video_id` at time `t` (seconds), in native pixel coordinates.
struct GazeSample {
  std::string observer_id;
  std::string video_id;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const GazeSample&) const = default;
};

enum class Gender : uint8_t { male, female };

inline char gender_code(Gender g) { return g == Gender::male ? 'M' : 'F'; }

inline Gender gender_from_code(char c) {
  if (c == 'M' || c == 'm') return Gender::male;
  if (c == 'F' || c == 'f') return Gender::female;
  fail_validation(std::string("unknown gender code '") + c + "'");
}

struct ObserverProfile {
  std::string observer_id;
  int age = 0;
  Gender gender = Gender::male;

  bool operator==(const ObserverProfile&) const = default;
};

// A one-second clip of one video together with its frame geometry.
// Identity is (video_id, second_index); width/height ride along.
struct SceneWindow {
  std::string video_id;
  int second_index = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const SceneWindow& a, const SceneWindow& b) {
    return a.video_id == b.video_id && a.second_index == b.second_index;
  }
  friend bool operator<(const SceneWindow& a, const SceneWindow& b) {
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    return a.second_index < b.second_index;
  }
};

// Observer cohorts. `all` is protocol P1; the remaining six labels are the
// P2 demographic split (gender x age, boundary at 30).
enum class GroupLabel : uint8_t {
  all,
  male,
  female,
  male_over30,
  male_under30,
  female_over30,
  female_under30,
};

inline constexpr std::array<GroupLabel, 7> kAllGroupLabels = {
    GroupLabel::all,          GroupLabel::male,          GroupLabel::female,
    GroupLabel::male_over30,  GroupLabel::male_under30,  GroupLabel::female_over30,
    GroupLabel::female_under30,
};

inline constexpr std::array<GroupLabel, 6> kP2GroupLabels = {
    GroupLabel::male,          GroupLabel::female,
    GroupLabel::male_over30,   GroupLabel::male_under30,
    GroupLabel::female_over30, GroupLabel::female_under30,
};

inline const char* to_string(GroupLabel g) {
  switch (g) {
    case GroupLabel::all: return "all";
    case GroupLabel::male: return "male";
    case GroupLabel::female: return "female";
    case GroupLabel::male_over30: return "male_over30";
    case GroupLabel::male_under30: return "male_under30";
    case GroupLabel::female_over30: return "female_over30";
    case GroupLabel::female_under30: return "female_under30";
  }
  fail_internal("unknown GroupLabel");
}

inline GroupLabel group_label_from_string(std::string_view s) {
  for (GroupLabel g : kAllGroupLabels) {
    if (s == to_string(g)) return g;
  }
  fail_validation("unknown group label '" + std::string(s) + "'");
}

inline GroupLabel gender_group(Gender g) {
  return g == Gender::male ? GroupLabel::male : GroupLabel::female;
}

// Age boundary: "over 30" means age >= 30, "under 30" means age < 30.
inline GroupLabel gender_age_group(Gender g, int age) {
  if (g == Gender::male) {
    return age >= 30 ? GroupLabel::male_over30 : GroupLabel::male_under30;
  }
  return age >= 30 ? GroupLabel::female_over30 : GroupLabel::female_under30;
}

// Coordinates on the fixed [0,1000] x [0,1000] grid every scene is
// normalized to. Raw ingested points land on integral grid values; cluster
// centroids are fractional.
inline constexpr double kGridMax = 1000.0;

struct GridPoint {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const GridPoint&) const = default;

  bool in_range() const {
    return std::isfinite(x) && std::isfinite(y) && x >= 0.0 && x <= kGridMax &&
           y >= 0.0 && y <= kGridMax;
  }
};

inline double squared_distance(const GridPoint& a, const GridPoint& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// The (possibly clustered) fixation points of one scene, in grid units.
using FixationSet = std::vector<GridPoint>;

}  // namespace gaze
