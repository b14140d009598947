#include "scanpath/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "scanpath/json_io.hpp"

namespace scanpath {

namespace {

void check_rect(const PageRect& rect) {
  if (!(rect.w > 0.0) || !(rect.h > 0.0)) {
    fail(ErrorCode::DegenerateRect, "page rect must have w > 0 and h > 0");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view s, std::size_t line_no) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    if (s == "nan" || s == "NaN" || s.empty()) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                    ": bad number '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s, std::size_t line_no) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "True") return true;
  if (s == "0" || s == "false" || s == "False") return false;
  fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                  ": bad validity flag '" + std::string(s) + "'");
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(delim, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (next == std::string::npos ? text.size() : next) - pos);
    ++line_no;
    line = trim(line);
    if (!line.empty()) fn(line, line_no);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
}

}  // namespace

PagePoint project_to_pcs(ScreenPoint p, const PageRect& rect, double t_ms) {
  check_rect(rect);
  PagePoint out;
  out.page_index = rect.page_index;
  out.x = (p.x - rect.l) / rect.w;
  out.y = (p.y - rect.t) / rect.h;
  out.t_ms = t_ms;
  return out;
}

ScreenPoint unproject(const PagePoint& p, const PageRect& rect) {
  check_rect(rect);
  return ScreenPoint{p.x * rect.w + rect.l, p.y * rect.h + rect.t};
}

std::vector<PagePoint> project_stream(const SessionBundle& bundle) {
  const auto& rects = bundle.rect_events;
  for (std::size_t i = 1; i < rects.size(); ++i) {
    if (rects[i].t_ms < rects[i - 1].t_ms) {
      fail(ErrorCode::ParseError, "viewport events are not time-ordered");
    }
  }
  std::vector<PagePoint> out;
  out.reserve(bundle.samples.size());
  std::size_t next_rect = 0;  // first rect strictly after the current sample
  for (const auto& s : bundle.samples) {
    if (!s.valid) continue;
    while (next_rect < rects.size() && rects[next_rect].t_ms <= s.t_ms) ++next_rect;
    if (next_rect == 0) {
      fail(ErrorCode::NoViewport, "valid sample at t=" + std::to_string(s.t_ms) +
                                      " ms precedes every viewport event");
    }
    out.push_back(project_to_pcs({s.sx, s.sy}, rects[next_rect - 1], s.t_ms));
  }
  return out;
}

std::vector<GazeSample> parse_gaze_log(const std::string& text,
                                       const std::string& session_id) {
  std::vector<GazeSample> out;
  bool header_seen = false;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    GazeSample s;
    if (line.front() == '{') {
      s = parse_json_or_throw(std::string(line), "gaze log line " +
                                                     std::to_string(line_no))
              .get<GazeSample>();
    } else {
      const char delim = line.find('\t') != std::string_view::npos ? '\t' : ',';
      auto cols = split(line, delim);
      if (!header_seen && !cols.empty() && trim(cols[0]) == "t_ms") {
        if (cols.size() != 4 || trim(cols[1]) != "sx" || trim(cols[2]) != "sy" ||
            trim(cols[3]) != "valid") {
          fail(ErrorCode::ParseError, "gaze header must be t_ms,sx,sy,valid");
        }
        header_seen = true;
        return;
      }
      if (cols.size() != 4) {
        fail(ErrorCode::ParseError,
             "line " + std::to_string(line_no) + ": expected 4 fields");
      }
      s.t_ms = parse_double(cols[0], line_no);
      s.sx = parse_double(cols[1], line_no);
      s.sy = parse_double(cols[2], line_no);
      s.valid = parse_bool(cols[3], line_no);
    }
    if (!std::isfinite(s.t_ms)) {
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": t_ms must be finite");
    }
    if (s.valid && (!std::isfinite(s.sx) || !std::isfinite(s.sy))) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                      ": valid sample needs finite coordinates");
    }
    if (s.session_id.empty()) s.session_id = session_id;
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<PageRect> parse_viewport_log(const std::string& text) {
  std::vector<PageRect> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    out.push_back(parse_json_or_throw(std::string(line), "viewport log line " +
                                                             std::to_string(line_no))
                      .get<PageRect>());
  });
  return out;
}

DocumentLayout parse_layout(const std::string& text) {
  auto layout = parse_json_or_throw(text, "layout").get<DocumentLayout>();
  validate_layout(layout);
  return layout;
}

std::string format_gaze_csv(std::span<const GazeSample> samples) {
  std::string out = "t_ms,sx,sy,valid\n";
  char buf[128];
  for (const auto& s : samples) {
    int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", s.t_ms,
                          s.sx, s.sy, s.valid ? 1 : 0);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

std::string format_viewport_jsonl(std::span<const PageRect> rects) {
  std::string out;
  for (const auto& r : rects) {
    out += json(r).dump();
    out += '\n';
  }
  return out;
}

std::string format_layout_json(const DocumentLayout& layout) {
  return json(layout).dump();
}

void write_session_dir(const std::filesystem::path& dir,
                       const SessionBundle& bundle) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "gaze.csv", format_gaze_csv(bundle.samples));
  write_file_atomic(dir / "viewport.jsonl", format_viewport_jsonl(bundle.rect_events));
  write_file_atomic(dir / "layout.json", format_layout_json(bundle.layout));
  json meta{{"session_id", bundle.session_id},
            {"participant_id", bundle.participant_id},
            {"condition", to_string(bundle.condition)}};
  write_file_atomic(dir / "session.json", meta.dump(2) + "\n");
}

SessionBundle read_session_dir(const std::filesystem::path& dir) {
  SessionBundle b;
  auto meta = read_json_file(dir / "session.json");
  b.session_id = meta.value("session_id", dir.filename().string());
  b.participant_id = meta.value("participant_id", std::string());
  b.condition = parse_condition(meta.value("condition", std::string("in-the-wild")));
  b.samples = parse_gaze_log(read_text_file(dir / "gaze.csv"), b.session_id);
  b.rect_events = parse_viewport_log(read_text_file(dir / "viewport.jsonl"));
  b.layout = parse_layout(read_text_file(dir / "layout.json"));
  return b;
}

}  // namespace scanpath
