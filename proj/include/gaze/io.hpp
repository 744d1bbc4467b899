#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gaze/error.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double_or_fail(std::string_view s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail_validation(what + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int_or_fail(std::string_view s, const std::string& what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail_validation(what + ": not an integer: '" + std::string(s) + "'");
  }
  return v;
}

namespace detail {

inline std::vector<std::string_view> split_csv_row(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline void validate_sample(GazeSample& s, size_t row) {
  const std::string where = "row " + std::to_string(row);
  if (!std::isfinite(s.t) || s.t < 0.0) {
    fail_validation(where + ": timestamp out of range");
  }
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || s.x < 0.0 || s.y < 0.0) {
    fail_validation(where + ": coordinate out of range");
  }
}

}  // namespace detail

enum class GazeLogFormat { csv, jsonl };

inline GazeLogFormat gaze_log_format_from_path(std::string_view path) {
  if (path.ends_with(".jsonl")) return GazeLogFormat::jsonl;
  if (path.ends_with(".csv")) return GazeLogFormat::csv;
  fail_validation("cannot infer gaze log format from path: " + std::string(path));
}

inline constexpr std::string_view kGazeCsvHeader = "observer_id,video_id,t,x,y";

// Gaze log ingestion. CSV rows are indexed from 1 (the header is row 0);
// malformed rows and negative coordinates abort with the row index.
inline std::vector<GazeSample> load_gaze_log(std::istream& in,
                                             GazeLogFormat format) {
  std::vector<GazeSample> samples;
  std::string line;
  if (format == GazeLogFormat::csv) {
    if (!std::getline(in, line)) return samples;  // empty file -> empty list
    if (detail::strip_cr(line) != kGazeCsvHeader) {
      fail_validation("gaze CSV: bad header, expected '" +
                      std::string(kGazeCsvHeader) + "'");
    }
    size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      line = detail::strip_cr(line);
      if (line.empty()) continue;
      const auto fields = detail::split_csv_row(line);
      const std::string where = "row " + std::to_string(row);
      if (fields.size() != 5) {
        fail_validation(where + ": expected 5 fields, got " +
                        std::to_string(fields.size()));
      }
      GazeSample s;
      s.observer_id = std::string(fields[0]);
      s.video_id = std::string(fields[1]);
      s.t = parse_double_or_fail(fields[2], where);
      s.x = parse_double_or_fail(fields[3], where);
      s.y = parse_double_or_fail(fields[4], where);
      detail::validate_sample(s, row);
      samples.push_back(std::move(s));
    }
    return samples;
  }

  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const std::string where = "row " + std::to_string(row);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_validation(where + ": bad JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("observer_id") || !j.contains("video_id") ||
        !j.contains("t") || !j.contains("x") || !j.contains("y")) {
      fail_validation(where + ": missing gaze sample keys");
    }
    GazeSample s;
    try {
      s.observer_id = j.at("observer_id").get<std::string>();
      s.video_id = j.at("video_id").get<std::string>();
      s.t = j.at("t").get<double>();
      s.x = j.at("x").get<double>();
      s.y = j.at("y").get<double>();
    } catch (const nlohmann::json::exception& e) {
      fail_validation(where + ": bad field type: " + e.what());
    }
    detail::validate_sample(s, row);
    samples.push_back(std::move(s));
  }
  return samples;
}

inline void save_gaze_log(std::ostream& out,
                          const std::vector<GazeSample>& samples,
                          GazeLogFormat format) {
  if (format == GazeLogFormat::csv) {
    out << kGazeCsvHeader << '\n';
    for (const GazeSample& s : samples) {
      out << s.observer_id << ',' << s.video_id << ',' << format_double(s.t)
          << ',' << format_double(s.x) << ',' << format_double(s.y) << '\n';
    }
    return;
  }
  for (const GazeSample& s : samples) {
    nlohmann::json j;
    j["observer_id"] = s.observer_id;
    j["video_id"] = s.video_id;
    j["t"] = s.t;
    j["x"] = s.x;
    j["y"] = s.y;
    out << j.dump() << '\n';
  }
}

inline constexpr std::string_view kProfileCsvHeader = "observer_id,age,gender";

struct ProfileTable {
  std::map<std::string, ObserverProfile> by_id;
  std::vector<std::string> warnings;  // e.g. age outside the study band
};

// Profile CSV: gender coded M/F. Ages outside [20,55] warn but are kept.
inline ProfileTable load_profiles(std::istream& in) {
  ProfileTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  if (detail::strip_cr(line) != kProfileCsvHeader) {
    fail_validation("profile CSV: bad header, expected '" +
                    std::string(kProfileCsvHeader) + "'");
  }
  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_row(line);
    const std::string where = "row " + std::to_string(row);
    if (fields.size() != 3) {
      fail_validation(where + ": expected 3 fields, got " +
                      std::to_string(fields.size()));
    }
    ObserverProfile p;
    p.observer_id = std::string(fields[0]);
    p.age = int(parse_int_or_fail(fields[1], where));
    if (fields[2].size() != 1) {
      fail_validation(where + ": gender must be a single M/F code");
    }
    p.gender = gender_from_code(fields[2][0]);
    if (p.age < 20 || p.age > 55) {
      table.warnings.push_back("observer " + p.observer_id + ": age " +
                               std::to_string(p.age) + " outside [20,55]");
    }
    if (!table.by_id.emplace(p.observer_id, p).second) {
      fail_validation(where + ": duplicate observer_id " + p.observer_id);
    }
  }
  return table;
}

inline void save_profiles(std::ostream& out,
                          const std::vector<ObserverProfile>& profiles) {
  out << kProfileCsvHeader << '\n';
  for (const ObserverProfile& p : profiles) {
    out << p.observer_id << ',' << p.age << ',' << gender_code(p.gender)
        << '\n';
  }
}

// One video's geometry. seconds == 0 means duration metadata is absent and
// the scene count is derived from the data.
struct SceneManifestEntry {
  std::string video_id;
  int width = 0;
  int height = 0;
  int seconds = 0;

  bool operator==(const SceneManifestEntry&) const = default;
};

inline std::vector<SceneManifestEntry> load_scene_manifest(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail_validation(std::string("scene manifest: bad JSON: ") + e.what());
  }
  if (j.is_object()) j = nlohmann::json::array({j});
  if (!j.is_array()) fail_validation("scene manifest: expected array");
  std::vector<SceneManifestEntry> entries;
  for (const auto& item : j) {
    SceneManifestEntry e;
    try {
      e.video_id = item.at("video_id").get<std::string>();
      e.width = item.at("width").get<int>();
      e.height = item.at("height").get<int>();
      if (item.contains("seconds")) e.seconds = item.at("seconds").get<int>();
    } catch (const nlohmann::json::exception& ex) {
      fail_validation(std::string("scene manifest: bad entry: ") + ex.what());
    }
    if (e.width <= 0 || e.height <= 0) {
      fail_validation("scene manifest: dimensions must be positive for " +
                      e.video_id);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void save_scene_manifest(std::ostream& out,
                                const std::vector<SceneManifestEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SceneManifestEntry& e : entries) {
    nlohmann::json j;
    j["video_id"] = e.video_id;
    j["width"] = e.width;
    j["height"] = e.height;
    j["seconds"] = e.seconds;
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

// Intermediate pipeline unit: the normalized fixation points of one
// (scene, group) pair.
struct SceneFixations {
  std::string video_id;
  int second = 0;
  GroupLabel group = GroupLabel::all;
  FixationSet points;
};

inline void save_scene_fixations(std::ostream& out, const SceneFixations& sf) {
  nlohmann::json j;
  j["video_id"] = sf.video_id;
  j["second"] = sf.second;
  j["group"] = to_string(sf.group);
  nlohmann::json pts = nlohmann::json::array();
  for (const GridPoint& p : sf.points) {
    pts.push_back(nlohmann::json::array({p.x, p.y}));
  }
  j["points"] = std::move(pts);
  out << j.dump() << '\n';
}

inline SceneFixations load_scene_fixations(std::istream& in,
                                           const std::string& what) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail_validation(what + ": bad JSON: " + e.what());
  }
  SceneFixations sf;
  try {
    sf.video_id = j.at("video_id").get<std::string>();
    sf.second = j.at("second").get<int>();
    sf.group = group_label_from_string(j.at("group").get<std::string>());
    for (const auto& pt : j.at("points")) {
      sf.points.push_back(
          GridPoint{pt.at(0).get<double>(), pt.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail_validation(what + ": bad fixation record: " + e.what());
  }
  return sf;
}

inline std::string sanitize_for_filename(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

inline std::string scene_file_stem(const std::string& video_id, int second,
                                   GroupLabel group) {
  char sec[16];
  std::snprintf(sec, sizeof(sec), "s%04d", second);
  return sanitize_for_filename(video_id) + "__" + sec + "__" + to_string(group);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot open file for writing: " + path);
  out.write(content.data(), std::streamsize(content.size()));
  if (!out) fail_io("failed writing file: " + path);
}

}  // namespace gaze
