#include "scanpath/json_io.hpp"

#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace scanpath {

namespace {

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    fail(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError,
         std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

void put_label(json& j, const char* key, const std::optional<BehaviorLabel>& l) {
  j[key] = l ? json(std::string(to_string(*l))) : json(nullptr);
}

std::optional<BehaviorLabel> get_label(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    fail(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
  }
  return parse_behavior(it->get<std::string>());
}

}  // namespace

void to_json(json& j, const GazeSample& s) {
  j = json{{"t_ms", s.t_ms}, {"sx", s.sx}, {"sy", s.sy}, {"valid", s.valid}};
  if (!s.session_id.empty()) j["session_id"] = s.session_id;
}

void from_json(const json& j, GazeSample& s) {
  s.t_ms = required<double>(j, "t_ms");
  s.valid = required<bool>(j, "valid");
  // Invalid samples may carry null coordinates.
  s.sx = j.contains("sx") && j["sx"].is_number() ? j["sx"].get<double>() : 0.0;
  s.sy = j.contains("sy") && j["sy"].is_number() ? j["sy"].get<double>() : 0.0;
  s.session_id = j.value("session_id", std::string());
}

void to_json(json& j, const PageRect& r) {
  j = json{{"page_index", r.page_index}, {"l", r.l}, {"t", r.t},
           {"w", r.w}, {"h", r.h}, {"t_ms", r.t_ms}};
}

void from_json(const json& j, PageRect& r) {
  r.page_index = required<int>(j, "page_index");
  r.l = required<double>(j, "l");
  r.t = required<double>(j, "t");
  r.w = required<double>(j, "w");
  r.h = required<double>(j, "h");
  r.t_ms = required<double>(j, "t_ms");
}

void to_json(json& j, const PagePoint& p) {
  j = json{{"page_index", p.page_index}, {"x", p.x}, {"y", p.y},
           {"t_ms", p.t_ms}, {"off_page", p.off_page()}};
}

void from_json(const json& j, PagePoint& p) {
  p.page_index = required<int>(j, "page_index");
  p.x = required<double>(j, "x");
  p.y = required<double>(j, "y");
  p.t_ms = required<double>(j, "t_ms");
}

void to_json(json& j, const Fixation& f) {
  j = json{{"start_ms", f.start_ms},
           {"end_ms", f.end_ms},
           {"duration_ms", f.duration_ms()},
           {"page_index", f.centroid.page_index},
           {"x", f.centroid.x},
           {"y", f.centroid.y},
           {"t_ms", f.centroid.t_ms},
           {"off_page", f.centroid.off_page()},
           {"sample_count", f.sample_count}};
}

void from_json(const json& j, Fixation& f) {
  f.start_ms = required<double>(j, "start_ms");
  f.end_ms = required<double>(j, "end_ms");
  f.centroid.page_index = required<int>(j, "page_index");
  f.centroid.x = required<double>(j, "x");
  f.centroid.y = required<double>(j, "y");
  f.centroid.t_ms = j.value("t_ms", f.start_ms);
  f.sample_count = required<int>(j, "sample_count");
}

void to_json(json& j, const Saccade& s) {
  j = json{{"from_idx", s.from_idx},   {"to_idx", s.to_idx},
           {"dx", s.dx},               {"dy", s.dy},
           {"amplitude", s.amplitude}, {"direction", to_string(s.direction)}};
}

void from_json(const json& j, Saccade& s) {
  s.from_idx = required<std::size_t>(j, "from_idx");
  s.to_idx = required<std::size_t>(j, "to_idx");
  s.dx = required<double>(j, "dx");
  s.dy = required<double>(j, "dy");
  s.amplitude = required<double>(j, "amplitude");
  s.direction = parse_saccade_class(required<std::string>(j, "direction"));
}

void to_json(json& j, const Segment& s) {
  j = json{{"segment_id", s.segment_id},
           {"start_ms", s.start_ms},
           {"end_ms", s.end_ms},
           {"words_covered", s.words_covered},
           {"wpm", s.wpm}};
  put_label(j, "label_r1", s.label_r1);
  put_label(j, "label_r2", s.label_r2);
  put_label(j, "label_final", s.label_final);
  j["override_justification"] =
      s.override_justification ? json(*s.override_justification) : json(nullptr);
}

void from_json(const json& j, Segment& s) {
  s.segment_id = j.value("segment_id", std::string());
  s.start_ms = required<double>(j, "start_ms");
  s.end_ms = required<double>(j, "end_ms");
  s.words_covered = j.value("words_covered", 0);
  s.wpm = j.value("wpm", 0.0);
  s.label_r1 = get_label(j, "label_r1");
  s.label_r2 = get_label(j, "label_r2");
  s.label_final = get_label(j, "label_final");
  auto it = j.find("override_justification");
  if (it != j.end() && it->is_string()) {
    s.override_justification = it->get<std::string>();
  } else {
    s.override_justification.reset();
  }
}

void to_json(json& j, const Box& b) { j = json::array({b.x0, b.y0, b.x1, b.y1}); }

void from_json(const json& j, Box& b) {
  if (!j.is_array() || j.size() != 4) {
    fail(ErrorCode::ParseError, "box must be [x0, y0, x1, y1]");
  }
  b = Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>()};
}

void to_json(json& j, const Word& w) {
  j = json{{"word_id", w.word_id},
           {"reading_order", w.reading_order},
           {"text", w.text},
           {"rect", w.rect}};
}

void from_json(const json& j, Word& w) {
  w.word_id = required<int>(j, "word_id");
  w.reading_order = required<int>(j, "reading_order");
  w.text = j.value("text", std::string());
  w.rect = required<Box>(j, "rect");
}

void to_json(json& j, const Line& l) {
  j = json{{"line_id", l.line_id}, {"y_center", l.y_center}, {"word_ids", l.word_ids}};
}

void from_json(const json& j, Line& l) {
  l.line_id = required<int>(j, "line_id");
  l.y_center = required<double>(j, "y_center");
  l.word_ids = required<std::vector<int>>(j, "word_ids");
}

void to_json(json& j, const Page& p) {
  j = json{{"page_index", p.page_index},
           {"width_cm", p.width_cm},
           {"height_cm", p.height_cm},
           {"words", p.words},
           {"lines", p.lines}};
}

void from_json(const json& j, Page& p) {
  p.page_index = required<int>(j, "page_index");
  p.width_cm = j.value("width_cm", kLetterWidthCm);
  p.height_cm = j.value("height_cm", kLetterHeightCm);
  p.words = j.value("words", std::vector<Word>{});
  p.lines = j.value("lines", std::vector<Line>{});
}

void to_json(json& j, const DocumentLayout& d) { j = json{{"pages", d.pages}}; }

void from_json(const json& j, DocumentLayout& d) {
  d.pages = required<std::vector<Page>>(j, "pages");
}

void to_json(json& j, const ValidationReport& r) {
  j = json{{"sample_count", r.sample_count},
           {"invalid_count", r.invalid_count},
           {"out_of_order_count", r.out_of_order_count},
           {"gap_count", r.gap_count},
           {"nonfinite_count", r.nonfinite_count},
           {"rect_count", r.rect_count},
           {"degenerate_rect_count", r.degenerate_rect_count}};
}

json parse_json_or_throw(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, what + ": " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  return parse_json_or_throw(read_text_file(path), path.string());
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content, const FaultHook& fault) {
  auto tmp = path;
  tmp += ".tmp";
  {
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) fail(ErrorCode::Io, "cannot create " + tmp.string());
    auto write_all = [&](const char* data, std::size_t n) {
      while (n > 0) {
        ssize_t w = ::write(fd, data, n);
        if (w < 0) {
          ::close(fd);
          fail(ErrorCode::Io, "write failed for " + tmp.string());
        }
        data += w;
        n -= static_cast<std::size_t>(w);
      }
    };
    const std::size_t half = content.size() / 2;
    write_all(content.data(), half);
    if (fault) {
      try {
        fault("partial");
      } catch (...) {
        ::close(fd);
        throw;
      }
    }
    write_all(content.data() + half, content.size() - half);
    ::fsync(fd);
    ::close(fd);
  }
  if (fault) fault("written");
  if (fault) fault("before_rename");
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "rename failed for " + path.string() + ": " + ec.message());
}

}  // namespace scanpath
