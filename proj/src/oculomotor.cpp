#include "scanpath/oculomotor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scanpath/json_io.hpp"

namespace scanpath {

void FilterConfig::validate() const {
  if (!(dispersion_threshold > 0.0) || !(min_duration_ms > 0.0) ||
      !(max_gap_ms > 0.0)) {
    fail(ErrorCode::InvalidConfig, "filter parameters must be strictly positive");
  }
}

namespace {

struct BBox {
  double x0, y0, x1, y1;
  explicit BBox(const PagePoint& p) : x0(p.x), y0(p.y), x1(p.x), y1(p.y) {}
  void add(const PagePoint& p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  double diagonal() const { return std::hypot(x1 - x0, y1 - y0); }
};

bool breaks_between(const PagePoint& a, const PagePoint& b, const FilterConfig& cfg) {
  return a.page_index != b.page_index || (b.t_ms - a.t_ms) > cfg.max_gap_ms;
}

Fixation make_fixation(std::span<const PagePoint> pts, std::size_t i, std::size_t j) {
  Fixation f;
  f.start_ms = pts[i].t_ms;
  f.end_ms = pts[j].t_ms;
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = i; k <= j; ++k) {
    sx += pts[k].x;
    sy += pts[k].y;
  }
  const double n = static_cast<double>(j - i + 1);
  f.centroid.page_index = pts[i].page_index;
  f.centroid.x = sx / n;
  f.centroid.y = sy / n;
  f.centroid.t_ms = f.start_ms;
  f.sample_count = static_cast<int>(j - i + 1);
  return f;
}

double box_distance(const Box& b, double x, double y) {
  const double dx = std::max({b.x0 - x, 0.0, x - b.x1});
  const double dy = std::max({b.y0 - y, 0.0, y - b.y1});
  return std::hypot(dx, dy);
}

double center_distance(const Box& b, double x, double y) {
  return std::hypot(b.cx() - x, b.cy() - y);
}

const Word* find_word(const Page& page, int word_id) {
  if (word_id >= 0 && static_cast<std::size_t>(word_id) < page.words.size() &&
      page.words[static_cast<std::size_t>(word_id)].word_id == word_id) {
    return &page.words[static_cast<std::size_t>(word_id)];
  }
  for (const auto& w : page.words) {
    if (w.word_id == word_id) return &w;
  }
  return nullptr;
}

int line_rank(const Page& page, int line_idx) {
  const double y = page.lines[static_cast<std::size_t>(line_idx)].y_center;
  int rank = 0;
  for (std::size_t i = 0; i < page.lines.size(); ++i) {
    const double yi = page.lines[i].y_center;
    if (yi < y || (yi == y && static_cast<int>(i) < line_idx)) ++rank;
  }
  return rank;
}

// Reading order of the word on `line` horizontally closest to x.
int reading_order_on_line(const Page& page, const Line& line, double x, double y) {
  const Word* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (int wid : line.word_ids) {
    const Word* w = find_word(page, wid);
    if (!w) continue;
    const double d = box_distance(w->rect, x, y);
    if (d < best_d || (d == best_d && best &&
                       center_distance(w->rect, x, y) <
                           center_distance(best->rect, x, y))) {
      best = w;
      best_d = d;
    }
  }
  return best ? best->reading_order : 0;
}

SaccadeClass displacement_fallback(double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return SaccadeClass::Neutral;
  if (std::abs(dx) >= std::abs(dy)) {
    return dx > 0.0 ? SaccadeClass::Forward : SaccadeClass::Regression;
  }
  return dy > 0.0 ? SaccadeClass::LineForward : SaccadeClass::LineRegression;
}

}  // namespace

std::vector<Fixation> detect_fixations(std::span<const PagePoint> points,
                                       const FilterConfig& cfg) {
  cfg.validate();
  std::vector<Fixation> out;
  const std::size_t n = points.size();
  std::size_t i = 0;
  while (i < n) {
    // Smallest window starting at i that spans min_duration_ms.
    std::size_t j = i;
    BBox box(points[i]);
    bool broken = false;
    while (points[j].t_ms - points[i].t_ms < cfg.min_duration_ms) {
      if (j + 1 >= n) return out;
      if (breaks_between(points[j], points[j + 1], cfg)) {
        i = j + 1;
        broken = true;
        break;
      }
      ++j;
      box.add(points[j]);
    }
    if (broken) continue;
    if (box.diagonal() <= cfg.dispersion_threshold) {
      while (j + 1 < n && !breaks_between(points[j], points[j + 1], cfg)) {
        BBox grown = box;
        grown.add(points[j + 1]);
        if (grown.diagonal() > cfg.dispersion_threshold) break;
        box = grown;
        ++j;
      }
      out.push_back(make_fixation(points, i, j));
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

std::optional<int> hit_word(const Page& page, double x, double y) {
  const Word* inside = nullptr;
  const Word* near = nullptr;
  for (const auto& w : page.words) {
    const double cd = center_distance(w.rect, x, y);
    if (w.rect.contains(x, y)) {
      if (!inside || cd < center_distance(inside->rect, x, y)) inside = &w;
    } else if (!inside && box_distance(w.rect, x, y) <= kWordHitMargin) {
      if (!near || cd < center_distance(near->rect, x, y)) near = &w;
    }
  }
  if (inside) return inside->word_id;
  if (near) return near->word_id;
  return std::nullopt;
}

std::optional<int> nearest_word(const Page& page, double x, double y) {
  const Word* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& w : page.words) {
    const double d = box_distance(w.rect, x, y);
    if (d < best_d || (d == best_d && best &&
                       center_distance(w.rect, x, y) <
                           center_distance(best->rect, x, y))) {
      best = &w;
      best_d = d;
    }
  }
  if (!best) return std::nullopt;
  return best->word_id;
}

std::optional<int> nearest_line(const Page& page, double y) {
  std::optional<int> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < page.lines.size(); ++i) {
    const double d = std::abs(page.lines[i].y_center - y);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

SaccadeClass classify_saccade(const Fixation& from, const Fixation& to,
                              const DocumentLayout& layout) {
  const double dx = to.centroid.x - from.centroid.x;
  const double dy = to.centroid.y - from.centroid.y;
  if (from.centroid.page_index != to.centroid.page_index) {
    return to.centroid.page_index > from.centroid.page_index
               ? SaccadeClass::LineForward
               : SaccadeClass::LineRegression;
  }
  const Page* page = layout.find_page(from.centroid.page_index);
  if (!page || page->words.empty() || page->lines.empty()) {
    return displacement_fallback(dx, dy);
  }
  const int la = *nearest_line(*page, from.centroid.y);
  const int lb = *nearest_line(*page, to.centroid.y);
  const int dline = line_rank(*page, lb) - line_rank(*page, la);
  if (dline == 0) {
    const auto& line = page->lines[static_cast<std::size_t>(la)];
    const int ra = reading_order_on_line(*page, line, from.centroid.x, from.centroid.y);
    const int rb = reading_order_on_line(*page, line, to.centroid.x, to.centroid.y);
    const int dro = rb - ra;
    if (dro >= 2) return SaccadeClass::HorizontalLater;
    if (dro == 1) return SaccadeClass::Forward;
    if (dro < 0) return SaccadeClass::Regression;
    return SaccadeClass::Neutral;
  }
  if (dline == 1 && std::abs(dx) < 0.1) return SaccadeClass::VerticalNext;
  return dline > 0 ? SaccadeClass::LineForward : SaccadeClass::LineRegression;
}

std::vector<Saccade> derive_saccades(std::span<const Fixation> fixations,
                                     const DocumentLayout& layout) {
  std::vector<Saccade> out;
  if (fixations.size() < 2) return out;
  out.reserve(fixations.size() - 1);
  for (std::size_t i = 0; i + 1 < fixations.size(); ++i) {
    Saccade s;
    s.from_idx = i;
    s.to_idx = i + 1;
    s.dx = fixations[i + 1].centroid.x - fixations[i].centroid.x;
    s.dy = fixations[i + 1].centroid.y - fixations[i].centroid.y;
    s.amplitude = std::sqrt(s.dx * s.dx + s.dy * s.dy);
    s.direction = classify_saccade(fixations[i], fixations[i + 1], layout);
    out.push_back(s);
  }
  return out;
}

std::string format_fixations_jsonl(std::span<const Fixation> fixations) {
  std::string out;
  for (const auto& f : fixations) {
    out += json(f).dump();
    out += '\n';
  }
  return out;
}

std::string format_saccades_jsonl(std::span<const Saccade> saccades) {
  std::string out;
  for (const auto& s : saccades) {
    out += json(s).dump();
    out += '\n';
  }
  return out;
}

namespace {
template <typename T>
std::vector<T> parse_jsonl(const std::string& text, const char* what) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto next = text.find('\n', pos);
    auto line = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!line.empty() && line != "\r") out.push_back(parse_json_or_throw(line, what).get<T>());
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}
}  // namespace

std::vector<Fixation> parse_fixations_jsonl(const std::string& text) {
  return parse_jsonl<Fixation>(text, "fixations");
}

std::vector<Saccade> parse_saccades_jsonl(const std::string& text) {
  return parse_jsonl<Saccade>(text, "saccades");
}

}  // namespace scanpath
