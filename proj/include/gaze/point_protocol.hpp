#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Structured point prediction: a declared fixation count inside
// <ref>...</ref> and a coordinate list inside <point>...</point>. The two
// counts may disagree; the mismatch is what the format reward measures.
struct PointMessage {
  long long n_ref = 0;
  FixationSet points;

  bool operator==(const PointMessage&) const = default;
};

// Result of strictly parsing arbitrary model output. valid_format holds iff
// both token pairs are present, the <ref> payload is a nonnegative integer,
// and every well-formed [x,y] pair sits inside [0,1000]^2. n_actual counts
// every syntactically complete pair, in range or not; `points` keeps only
// the in-range ones.
struct ParseOutcome {
  bool valid_format = false;
  std::optional<long long> n_ref;
  long long n_actual = 0;
  FixationSet points;
  std::vector<std::string> diagnostics;
};

// Wire layout: <ref>N</ref><point>[[x1,y1],[x2,y2],...]</point> with
// integral coordinates and no whitespace outside the brackets.
inline std::string serialize(const PointMessage& msg) {
  if (msg.n_ref < 0) fail_validation("serialize: n_ref must be nonnegative");
  std::string out = "<ref>" + std::to_string(msg.n_ref) + "</ref><point>[";
  bool first = true;
  for (const GridPoint& p : msg.points) {
    if (!p.in_range()) fail_validation("serialize: point outside [0,1000]^2");
    if (!first) out += ',';
    first = false;
    out += '[';
    out += std::to_string(std::llround(p.x));
    out += ',';
    out += std::to_string(std::llround(p.y));
    out += ']';
  }
  out += "]</point>";
  return out;
}

namespace detail {

struct Span {
  size_t content_begin = 0;
  size_t content_end = 0;
  bool found = false;
};

// First <open>...<close> region; extra opening tokens after a complete span
// are reported through `duplicate`.
inline Span find_span(std::string_view text, std::string_view open,
                      std::string_view close, std::string& missing,
                      bool& duplicate) {
  Span span;
  const size_t start = text.find(open);
  if (start == std::string_view::npos) {
    missing = std::string(open);
    return span;
  }
  const size_t content = start + open.size();
  const size_t end = text.find(close, content);
  if (end == std::string_view::npos) {
    missing = std::string(close);
    return span;
  }
  span.content_begin = content;
  span.content_end = end;
  span.found = true;
  duplicate = text.find(open, end + close.size()) != std::string_view::npos;
  return span;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(uint8_t(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(uint8_t(s.back()))) s.remove_suffix(1);
  return s;
}

// Parses an optionally signed integer at `pos`, advancing past it. Leading
// zeros are insignificant; magnitudes beyond 18 significant digits saturate
// (they are far outside the grid either way).
inline bool scan_int(std::string_view s, size_t& pos, long long& value) {
  size_t p = pos;
  while (p < s.size() && std::isspace(uint8_t(s[p]))) ++p;
  bool negative = false;
  if (p < s.size() && (s[p] == '+' || s[p] == '-')) {
    negative = s[p] == '-';
    ++p;
  }
  const size_t digits_begin = p;
  while (p < s.size() && std::isdigit(uint8_t(s[p]))) ++p;
  if (p == digits_begin) return false;
  size_t sig = digits_begin;
  while (sig < p - 1 && s[sig] == '0') ++sig;
  if (p - sig > 18) {
    value = 1'000'000'000'000'000'000LL;
  } else {
    value = 0;
    for (size_t k = sig; k < p; ++k) value = value * 10 + (s[k] - '0');
  }
  if (negative) value = -value;
  pos = p;
  return true;
}

// Matches [ int , int ] starting at `pos` (which must point at '[');
// whitespace is allowed around the numbers.
inline bool scan_pair(std::string_view s, size_t& pos, long long& x,
                      long long& y) {
  size_t p = pos + 1;  // past '['
  if (!scan_int(s, p, x)) return false;
  while (p < s.size() && std::isspace(uint8_t(s[p]))) ++p;
  if (p >= s.size() || s[p] != ',') return false;
  ++p;
  if (!scan_int(s, p, y)) return false;
  while (p < s.size() && std::isspace(uint8_t(s[p]))) ++p;
  if (p >= s.size() || s[p] != ']') return false;
  pos = p + 1;
  return true;
}

}  // namespace detail

// Tolerant scanner over arbitrary text. Never throws; every failure is
// expressed through valid_format = false plus a diagnostic.
inline ParseOutcome parse(std::string_view text) {
  ParseOutcome outcome;

  std::string missing_ref, missing_point;
  bool dup_ref = false, dup_point = false;
  const detail::Span ref_span =
      detail::find_span(text, "<ref>", "</ref>", missing_ref, dup_ref);
  const detail::Span point_span =
      detail::find_span(text, "<point>", "</point>", missing_point, dup_point);

  bool ok = true;
  if (!ref_span.found) {
    outcome.diagnostics.push_back("missing " + missing_ref);
    ok = false;
  }
  if (!point_span.found) {
    outcome.diagnostics.push_back("missing " + missing_point);
    ok = false;
  }
  if (dup_ref) outcome.diagnostics.push_back("duplicate <ref> span ignored");
  if (dup_point) {
    outcome.diagnostics.push_back("duplicate <point> span ignored");
  }

  if (ref_span.found) {
    const std::string_view payload = detail::trim(text.substr(
        ref_span.content_begin, ref_span.content_end - ref_span.content_begin));
    bool digits_only = !payload.empty();
    for (char c : payload) {
      if (!std::isdigit(uint8_t(c))) digits_only = false;
    }
    if (digits_only) {
      size_t pos = 0;
      long long value = 0;
      detail::scan_int(payload, pos, value);
      outcome.n_ref = value;
    } else {
      outcome.diagnostics.push_back("<ref> payload is not a nonnegative integer");
      ok = false;
    }
  }

  if (point_span.found) {
    const std::string_view body = text.substr(
        point_span.content_begin,
        point_span.content_end - point_span.content_begin);
    size_t pos = 0;
    bool any_out_of_range = false;
    while (pos < body.size()) {
      if (body[pos] != '[') {
        ++pos;
        continue;
      }
      size_t next = pos;
      long long x = 0, y = 0;
      if (detail::scan_pair(body, next, x, y)) {
        outcome.n_actual++;
        const bool in_range = x >= 0 && x <= 1000 && y >= 0 && y <= 1000;
        if (in_range) {
          outcome.points.push_back(GridPoint{double(x), double(y)});
        } else {
          any_out_of_range = true;
        }
        pos = next;
      } else {
        ++pos;
      }
    }
    if (any_out_of_range) {
      outcome.diagnostics.push_back("coordinate out of range");
      ok = false;
    }
  }

  outcome.valid_format = ok;
  return outcome;
}

// Round-trip convenience for tests and offline tooling.
inline PointMessage to_message(const ParseOutcome& outcome) {
  PointMessage msg;
  msg.n_ref = outcome.n_ref.value_or(0);
  msg.points = outcome.points;
  return msg;
}

}  // namespace gaze
