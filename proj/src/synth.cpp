#include "scanpath/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "scanpath/json_io.hpp"
#include "scanpath/oculomotor.hpp"

namespace scanpath {

double LogNormal::sample(std::mt19937_64& rng) const {
  if (dispersion <= 0.0) return median;
  std::normal_distribution<double> n(0.0, dispersion);
  return median * std::exp(n(rng));
}

LogNormal LogNormal::from_median_iqr(double median, double iqr) {
  constexpr double kQuartileZ = 0.6744897501960817;
  return {median, std::asinh(iqr / (2.0 * median)) / kQuartileZ};
}

bool FrameworkRegion::contains(double wpm, double inv_disp, double fbsr) const {
  return wpm >= wpm_min && wpm <= wpm_max && inv_disp >= inv_disp_min &&
         inv_disp <= inv_disp_max && fbsr >= fbsr_min && fbsr <= fbsr_max;
}

ArchetypeParams default_params(BehaviorLabel label) {
  ArchetypeParams p;
  p.label = label;
  switch (label) {
    case BehaviorLabel::Static:
      p.segment_duration_s = LogNormal::from_median_iqr(4.98, 2.31);
      p.fixation_duration_ms = LogNormal::from_median_iqr(467.03, 247.04);
      p.gap_ms = {12.0, 0.3};
      p.target_wpm = {1.0, 0.0};
      p.sequentiality = 0.0;
      p.cluster_radius = 0.025;
      p.jitter_sigma = 0.0010;
      p.region = {0.0, 5.0, 1.0, 1e9, 0.0, 1.0};
      break;
    case BehaviorLabel::Deep:
      p.segment_duration_s = LogNormal::from_median_iqr(11.61, 6.16);
      p.fixation_duration_ms = LogNormal::from_median_iqr(262.02, 100.46);
      p.gap_ms = {195.0, 0.35};
      p.target_wpm = {60.0, 0.2};
      p.sequentiality = 0.90;
      p.reread_passes = 3;
      p.reread_span_words = 5;
      p.jitter_sigma = 0.0011;
      p.region = {10.0, 100.0, 0.15, 1e9, 0.6, 1.0};
      break;
    case BehaviorLabel::Sequential:
      p.segment_duration_s = LogNormal::from_median_iqr(25.84, 29.15);
      p.fixation_duration_ms = LogNormal::from_median_iqr(232.55, 51.92);
      p.gap_ms = {215.0, 0.35};
      p.target_wpm = {170.0, 0.15};
      p.sequentiality = 0.95;
      p.jitter_sigma = 0.0012;
      p.region = {60.0, 250.0, 0.0, 0.5, 0.8, 1.0};
      break;
    case BehaviorLabel::NonSequential:
      p.segment_duration_s = LogNormal::from_median_iqr(8.68, 9.86);
      p.fixation_duration_ms = LogNormal::from_median_iqr(221.60, 57.67);
      p.gap_ms = {140.0, 0.35};
      p.target_wpm = {170.0, 0.15};
      p.sequentiality = 0.50;
      p.jitter_sigma = 0.0012;
      p.region = {30.0, 300.0, 0.0, 0.8, 0.0, 0.92};
      break;
    case BehaviorLabel::Skimming:
      p.segment_duration_s = LogNormal::from_median_iqr(5.80, 5.30);
      p.fixation_duration_ms = LogNormal::from_median_iqr(181.67, 47.02);
      p.gap_ms = {290.0, 0.35};
      p.target_wpm = {350.0, 0.2};
      p.sequentiality = 0.85;
      p.skip_geometric_mean = 3.0;
      p.jitter_sigma = 0.0012;
      p.region = {30.0, 250.0, 0.0, 0.8, 0.4, 1.0};
      break;
    case BehaviorLabel::PreviewingMapping:
      p.segment_duration_s = LogNormal::from_median_iqr(7.50, 6.55);
      p.fixation_duration_ms = LogNormal::from_median_iqr(208.70, 55.46);
      p.gap_ms = {720.0, 0.35};
      p.target_wpm = {60.0, 0.3};
      p.sequentiality = 0.50;
      p.page_span = 0.8;
      p.jitter_sigma = 0.0012;
      p.region = {10.0, 150.0, 0.0, 0.8, 0.0, 1.0};
      break;
  }
  return p;
}

ArchetypeParams instructed_params(BehaviorLabel label) {
  ArchetypeParams p = default_params(label);
  p.jitter_sigma *= 0.8;
  if (label == BehaviorLabel::Sequential) {
    p.fixation_duration_ms.median *= 1.15;
    p.target_wpm.median *= 0.85;
    p.sequentiality = 0.98;
  } else if (label == BehaviorLabel::Deep) {
    p.fixation_duration_ms.median *= 1.2;
    p.sequentiality = 0.95;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Text model: words in reading order with line and paragraph structure.
// ---------------------------------------------------------------------------

namespace {

struct TextWord {
  int page = 0;
  Box rect;
  int line = 0;       // global line index in reading order
  int paragraph = 0;
};

struct TextModel {
  std::vector<TextWord> words;
  std::vector<int> line_first;  // first word index of each line
  std::vector<int> para_first;  // first line index of each paragraph
  double x0 = 0.1, x1 = 0.9, y0 = 0.1, y1 = 0.9;
  int page = 0;

  int size() const { return static_cast<int>(words.size()); }
  int line_count() const { return static_cast<int>(line_first.size()); }
  int line_end(int line) const {
    return line + 1 < line_count() ? line_first[static_cast<std::size_t>(line) + 1] : size();
  }
};

TextModel build_text_model(const DocumentLayout& layout) {
  TextModel tm;
  if (!layout.pages.empty()) tm.page = layout.pages.front().page_index;
  struct Entry {
    int page;
    int order;
    Box rect;
    int local_line;
    double line_y;
  };
  std::vector<Entry> entries;
  for (const auto& page : layout.pages) {
    std::map<int, std::pair<int, double>> line_of;
    for (std::size_t li = 0; li < page.lines.size(); ++li) {
      for (int wid : page.lines[li].word_ids) {
        line_of[wid] = {static_cast<int>(li), page.lines[li].y_center};
      }
    }
    for (const auto& w : page.words) {
      auto it = line_of.find(w.word_id);
      const auto [li, ly] = it == line_of.end() ? std::pair<int, double>{-1, w.rect.cy()}
                                                 : it->second;
      entries.push_back({page.page_index, w.reading_order, w.rect, li, ly});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.page != b.page ? a.page < b.page : a.order < b.order;
  });
  if (entries.empty()) return tm;

  std::vector<double> line_y;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const bool new_line = i == 0 || e.page != entries[i - 1].page ||
                          e.local_line != entries[i - 1].local_line ||
                          (e.local_line < 0 && std::abs(e.line_y - entries[i - 1].line_y) > 1e-9);
    if (new_line) {
      tm.line_first.push_back(static_cast<int>(i));
      line_y.push_back(e.line_y);
    }
    tm.words.push_back({e.page, e.rect, tm.line_count() - 1, 0});
  }

  // Paragraph breaks: vertical gap well above the typical line pitch.
  std::vector<double> pitches;
  for (std::size_t l = 1; l < line_y.size(); ++l) {
    const double d = line_y[l] - line_y[l - 1];
    if (d > 0.0) pitches.push_back(d);
  }
  double pitch = 0.0;
  if (!pitches.empty()) {
    std::nth_element(pitches.begin(), pitches.begin() + static_cast<long>(pitches.size() / 2),
                     pitches.end());
    pitch = pitches[pitches.size() / 2];
  }
  std::vector<int> para_of_line(line_y.size(), 0);
  tm.para_first.push_back(0);
  for (std::size_t l = 1; l < line_y.size(); ++l) {
    const int first = tm.line_first[l];
    const bool page_change = tm.words[static_cast<std::size_t>(first)].page !=
                             tm.words[static_cast<std::size_t>(first) - 1].page;
    const double d = line_y[l] - line_y[l - 1];
    if (page_change || (pitch > 0.0 && (d > 1.5 * pitch || d < 0.0))) {
      tm.para_first.push_back(static_cast<int>(l));
    }
    para_of_line[l] = static_cast<int>(tm.para_first.size()) - 1;
  }
  for (auto& w : tm.words) w.paragraph = para_of_line[static_cast<std::size_t>(w.line)];

  tm.x0 = tm.y0 = 1.0;
  tm.x1 = tm.y1 = 0.0;
  for (const auto& w : tm.words) {
    if (w.page != tm.page) continue;
    tm.x0 = std::min(tm.x0, w.rect.x0);
    tm.x1 = std::max(tm.x1, w.rect.x1);
    tm.y0 = std::min(tm.y0, w.rect.y0);
    tm.y1 = std::max(tm.y1, w.rect.y1);
  }
  return tm;
}

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

int uniform_int(std::mt19937_64& rng, int a, int b) {
  if (b <= a) return a;
  return std::uniform_int_distribution<int>(a, b)(rng);
}

bool bernoulli(std::mt19937_64& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Landing point inside a word: left of center, close to the text baseline.
PagePoint land_on(const TextWord& w, std::mt19937_64& rng) {
  PagePoint p;
  p.page_index = w.page;
  const double width = w.rect.x1 - w.rect.x0;
  const double height = w.rect.y1 - w.rect.y0;
  p.x = w.rect.x0 + width * uniform(rng, 0.25, 0.65);
  p.y = w.rect.cy() + std::clamp(std::normal_distribution<double>(0.0, 0.12 * height)(rng),
                                 -0.3 * height, 0.3 * height);
  return p;
}

int forward_step(std::mt19937_64& rng, double mean_words) {
  const double extra = std::max(mean_words - 1.0, 0.0);
  if (extra <= 0.0) return 1;
  return 1 + std::poisson_distribution<int>(extra)(rng);
}

int clamp_word(const TextModel& tm, int i) { return std::clamp(i, 0, tm.size() - 1); }

// Position process state for one segment.
struct PathState {
  int pos = 0;
  int deep_span_first = 0;
  int deep_span_len = 0;
  int deep_pass = 0;
  int deep_in_span = 0;
  int hub = 0;
  bool at_hub = true;
  PagePoint static_center;
  PagePoint last;
  bool has_last = false;
};

int deep_span_start(const TextModel& tm, int pos, int span) {
  const int line = tm.words[static_cast<std::size_t>(pos)].line;
  const int first = tm.line_first[static_cast<std::size_t>(line)];
  const int end = tm.line_end(line);
  return std::clamp(pos, first, std::max(first, end - span));
}

PagePoint next_position(const ArchetypeParams& p, const TextModel& tm, PathState& st,
                        double mean_interval_ms, double seg_wpm, std::mt19937_64& rng) {
  const int n = tm.size();
  switch (p.label) {
    case BehaviorLabel::Static: {
      // Whitespace cluster; consecutive points stay resolvable as fixations.
      for (int attempt = 0;; ++attempt) {
        const double r = p.cluster_radius * std::sqrt(uniform(rng, 0.0, 1.0));
        const double a = uniform(rng, 0.0, 2.0 * M_PI);
        PagePoint q = st.static_center;
        q.x += r * std::cos(a);
        q.y += r * std::sin(a);
        if (!st.has_last || attempt > 50 ||
            std::hypot(q.x - st.last.x, q.y - st.last.y) >= 0.012) {
          return q;
        }
      }
    }
    case BehaviorLabel::Sequential: {
      if (st.has_last) {
        if (bernoulli(rng, p.sequentiality)) {
          st.pos += forward_step(rng, seg_wpm * mean_interval_ms / 60000.0);
        } else if (st.pos > 0) {
          st.pos -= uniform_int(rng, 1, std::min(3, st.pos));
        }
        if (st.pos >= n) st.pos = 0;
        st.pos = clamp_word(tm, st.pos);
      }
      return land_on(tm.words[static_cast<std::size_t>(st.pos)], rng);
    }
    case BehaviorLabel::NonSequential: {
      // Star pattern: short reads from a hub, excursions several lines
      // above or below, and returns to the hub.
      if (st.has_last) {
        if (!st.at_hub) {
          st.pos = clamp_word(tm, st.hub + uniform_int(rng, -1, 1));
          st.at_hub = true;
        } else if (bernoulli(rng, p.sequentiality)) {
          st.pos += forward_step(rng, seg_wpm * mean_interval_ms / 60000.0);
          if (st.pos >= n) st.pos = uniform_int(rng, 0, n / 2);
          st.hub = st.pos;
        } else {
          const auto& w = tm.words[static_cast<std::size_t>(st.hub)];
          const int lines = tm.line_count();
          int d = uniform_int(rng, 3, 10) * (bernoulli(rng, 0.5) ? 1 : -1);
          if (w.line + d < 0 || w.line + d >= lines) d = -d;
          const int target = std::clamp(w.line + d, 0, lines - 1);
          const int col = st.hub - tm.line_first[static_cast<std::size_t>(w.line)] + uniform_int(rng, -3, 3);
          const int first = tm.line_first[static_cast<std::size_t>(target)];
          st.pos = std::clamp(first + col, first, tm.line_end(target) - 1);
          st.at_hub = false;
        }
        st.pos = clamp_word(tm, st.pos);
      } else {
        st.hub = st.pos;
        st.at_hub = true;
      }
      return land_on(tm.words[static_cast<std::size_t>(st.pos)], rng);
    }
    case BehaviorLabel::Skimming: {
      if (st.has_last) {
        if (bernoulli(rng, p.sequentiality)) {
          const int line = tm.words[static_cast<std::size_t>(st.pos)].line;
          if (bernoulli(rng, 0.3) && line + 2 < tm.line_count()) {
            const int target = std::min(line + uniform_int(rng, 2, 4), tm.line_count() - 1);
            const int first = tm.line_first[static_cast<std::size_t>(target)];
            st.pos = uniform_int(rng, first, tm.line_end(target) - 1);
          } else {
            const double mu = std::max(p.skip_geometric_mean - 1.0, 0.0);
            std::geometric_distribution<int> g(1.0 / (1.0 + mu));
            st.pos += 1 + g(rng);
          }
        } else {
          const int back = uniform_int(rng, 2, 8);
          st.pos = st.pos - back >= 0 ? st.pos - back : st.pos + back;
        }
        if (st.pos >= n) st.pos = 0;
        st.pos = clamp_word(tm, st.pos);
      }
      return land_on(tm.words[static_cast<std::size_t>(st.pos)], rng);
    }
    case BehaviorLabel::Deep: {
      if (st.has_last) {
        ++st.deep_in_span;
        if (st.deep_in_span >= st.deep_span_len) {
          st.deep_in_span = 0;
          ++st.deep_pass;
          if (st.deep_pass >= p.reread_passes) {
            st.deep_pass = 0;
            int next = st.deep_span_first + st.deep_span_len;
            if (next >= n) next = 0;
            st.deep_span_first = deep_span_start(tm, next, st.deep_span_len);
          }
          st.pos = st.deep_span_first;
        } else if (bernoulli(rng, p.sequentiality)) {
          st.pos = st.deep_span_first + st.deep_in_span;
        } else {
          // Short regression inside the span; the pass continues from there.
          st.deep_in_span = std::max(0, st.deep_in_span - 2);
          st.pos = st.deep_span_first + st.deep_in_span;
        }
        st.pos = clamp_word(tm, st.pos);
      }
      return land_on(tm.words[static_cast<std::size_t>(st.pos)], rng);
    }
    case BehaviorLabel::PreviewingMapping: {
      const double cx = 0.5 * (tm.x0 + tm.x1), cy = 0.5 * (tm.y0 + tm.y1);
      const double hw = 0.5 * p.page_span * (tm.x1 - tm.x0);
      const double hh = 0.5 * p.page_span * (tm.y1 - tm.y0);
      PagePoint q;
      q.page_index = tm.page;
      for (int attempt = 0; attempt < 50; ++attempt) {
        q.x = uniform(rng, cx - hw, cx + hw);
        if (st.has_last && bernoulli(rng, p.sequentiality) && st.last.y + 0.02 < cy + hh) {
          // Top-to-bottom sweep over the page.
          q.y = uniform(rng, st.last.y + 0.02, std::min(cy + hh, st.last.y + 2.0 * hh / 3.0));
        } else {
          q.y = uniform(rng, cy - hh, cy + hh);
        }
        if (!st.has_last || std::hypot(q.x - st.last.x, q.y - st.last.y) >= 0.05) break;
      }
      return q;
    }
  }
  return {};
}

bool reads_text(BehaviorLabel label) {
  return label != BehaviorLabel::Static && label != BehaviorLabel::PreviewingMapping;
}

}  // namespace

GeneratedSegment generate_segment(const ArchetypeParams& params, const DocumentLayout& layout,
                                  double duration_s, std::mt19937_64& rng, double start_ms,
                                  ReadingCursor& cursor) {
  if (!(duration_s > 0.0)) fail(ErrorCode::InvalidSegment, "duration_s must be > 0");
  const TextModel tm = build_text_model(layout);
  if (tm.size() == 0) fail(ErrorCode::EmptyLayout, "layout has no words");
  if (reads_text(params.label) && tm.size() < 10) {
    fail(ErrorCode::LayoutTooSmall, "reading archetypes need at least 10 words");
  }

  constexpr double kFrameMs = 1000.0 / 60.0;
  const double end_ms = start_ms + duration_s * 1000.0;
  const double mean_interval = params.fixation_duration_ms.median + params.gap_ms.median;
  const double seg_wpm = params.target_wpm.sample(rng);

  PathState st;
  st.pos = std::clamp(cursor.position, 0, tm.size() - 1);
  if (params.label == BehaviorLabel::Deep) {
    const int expected = static_cast<int>(duration_s * 1000.0 / mean_interval);
    st.deep_span_len = std::clamp(expected / std::max(params.reread_passes, 1), 2,
                                  std::max(params.reread_span_words, 2));
    st.deep_span_first = deep_span_start(tm, st.pos, st.deep_span_len);
    st.pos = st.deep_span_first;
  }
  if (params.label == BehaviorLabel::Static) {
    // Cluster in the left or right margin beside the current line.
    const auto& w = tm.words[static_cast<std::size_t>(st.pos)];
    const double margin_l = tm.x0, margin_r = 1.0 - tm.x1;
    const bool left = margin_l >= margin_r ? bernoulli(rng, 0.7) : bernoulli(rng, 0.3);
    const double m = left ? margin_l : margin_r;
    const double off = std::clamp(uniform(rng, 0.35, 0.6) * m, 0.0, m);
    st.static_center.page_index = w.page;
    st.static_center.x = left ? tm.x0 - off : tm.x1 + off;
    st.static_center.y = std::clamp(w.rect.cy(), params.cluster_radius, 1.0 - params.cluster_radius);
  }

  GeneratedSegment out;
  double t = start_ms + 0.5 * params.gap_ms.sample(rng);
  while (true) {
    const double d = std::max(params.fixation_duration_ms.sample(rng), 90.0);
    if (t + d + 2.0 * kFrameMs >= end_ms) break;
    PagePoint c = next_position(params, tm, st, mean_interval, seg_wpm, rng);
    c.t_ms = t;
    Fixation f;
    f.start_ms = t;
    f.end_ms = t + d;
    f.centroid = c;
    f.sample_count = static_cast<int>(std::floor(d / kFrameMs)) + 1;
    out.fixations.push_back(f);
    st.last = c;
    st.has_last = true;
    t += d + std::max(params.gap_ms.sample(rng), 1.0);
  }
  if (reads_text(params.label)) cursor.position = st.pos;

  out.saccades = derive_saccades(out.fixations, layout);
  Segment& seg = out.segment;
  seg.start_ms = start_ms;
  seg.end_ms = end_ms;
  seg.label_r1 = seg.label_r2 = seg.label_final = params.label;
  return out;
}

GeneratedSegment generate_segment(const ArchetypeParams& params, const DocumentLayout& layout,
                                  double duration_s, std::uint64_t rng_seed, double start_ms) {
  std::mt19937_64 rng(rng_seed);
  ReadingCursor cursor;
  return generate_segment(params, layout, duration_s, rng, start_ms, cursor);
}

// ---------------------------------------------------------------------------
// Default layout
// ---------------------------------------------------------------------------

DocumentLayout make_default_layout(int paragraphs, int lines_per_paragraph, int words_per_line) {
  static const char* kVocab[] = {
      "the",    "river",   "ran",      "past",  "old",     "mills",   "where", "workers",
      "once",   "spun",    "cotton",   "into",  "thread",  "and",     "cloth", "that",
      "ships",  "carried", "across",   "cold",  "northern", "seas",   "each",  "morning",
      "bells",  "called",  "children", "to",    "school",  "while",   "their", "parents",
      "walked", "along",   "narrow",   "roads", "toward",  "factory", "gates", "under",
      "grey",   "skies"};
  constexpr int kVocabSize = sizeof(kVocab) / sizeof(kVocab[0]);
  constexpr double kLeft = 0.1, kRight = 0.9, kTop = 0.06;
  constexpr double kPitch = 0.018, kWordHeight = 0.010, kSpace = 0.012;

  Page page;
  page.page_index = 0;
  int word_id = 0, line_id = 0;
  double y = kTop;
  for (int p = 0; p < paragraphs; ++p) {
    for (int l = 0; l < lines_per_paragraph; ++l) {
      Line line;
      line.line_id = line_id++;
      line.y_center = y + 0.5 * kWordHeight;
      std::vector<const char*> texts;
      double letters = 0.0;
      for (int k = 0; k < words_per_line; ++k) {
        const char* txt = kVocab[(word_id + k) * 7 % kVocabSize];
        texts.push_back(txt);
        letters += static_cast<double>(std::string_view(txt).size()) + 2.0;
      }
      const double avail = (kRight - kLeft) - kSpace * (words_per_line - 1);
      double x = kLeft;
      for (int k = 0; k < words_per_line; ++k) {
        const double wlen = avail * (static_cast<double>(std::string_view(texts[k]).size()) + 2.0) /
                            letters;
        Word w;
        w.word_id = word_id;
        w.reading_order = word_id;
        w.text = texts[k];
        w.rect = {x, y, x + wlen, y + kWordHeight};
        page.words.push_back(w);
        line.word_ids.push_back(word_id);
        ++word_id;
        x += wlen + kSpace;
      }
      page.lines.push_back(std::move(line));
      y += kPitch;
    }
    y += kPitch;
  }
  DocumentLayout layout;
  layout.pages.push_back(std::move(page));
  return layout;
}

// ---------------------------------------------------------------------------
// Sample emission
// ---------------------------------------------------------------------------

namespace {

constexpr double kScreenH = 1080.0;
constexpr double kPageWpx = 1000.0;
constexpr double kPageLpx = 460.0;
constexpr double kScrollMarginPx = 60.0;

PageRect initial_rect(int page_index) {
  PageRect r;
  r.page_index = page_index;
  r.l = kPageLpx;
  r.t = 0.0;
  r.w = kPageWpx;
  r.h = kPageWpx * kLetterHeightCm / kLetterWidthCm;
  r.t_ms = 0.0;
  return r;
}

}  // namespace

void emit_samples(const std::vector<Fixation>& planned, double session_end_ms,
                  double jitter_sigma, double sample_rate_hz, std::mt19937_64& rng,
                  SessionBundle& bundle, const std::vector<double>& jitter_per_fixation) {
  const double frame = 1000.0 / sample_rate_hz;
  PageRect rect = initial_rect(planned.empty() ? 0 : planned.front().centroid.page_index);
  bundle.rect_events.push_back(rect);
  std::normal_distribution<double> unit(0.0, 1.0);

  auto frame_at = [&](double t) { return static_cast<long long>(std::ceil(t / frame - 1e-9)); };
  auto push = [&](long long k, const PagePoint* p, double jitter) {
    GazeSample s;
    s.t_ms = static_cast<double>(k) * frame;
    s.session_id = bundle.session_id;
    if (p) {
      PagePoint q = *p;
      q.x += jitter * unit(rng);
      q.y += jitter * unit(rng);
      const ScreenPoint sp = unproject(q, rect);
      s.sx = sp.x;
      s.sy = sp.y;
      s.valid = true;
    } else {
      s.valid = false;
    }
    bundle.samples.push_back(s);
  };

  long long k = 0;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    const Fixation& f = planned[i];
    const double jitter = i < jitter_per_fixation.size() ? jitter_per_fixation[i] : jitter_sigma;
    const long long k0 = std::max(k, frame_at(f.start_ms));
    const long long k1 = std::max(k0 + 1, frame_at(f.end_ms + frame));

    // Scroll so the fixation is comfortably on screen.
    const PagePoint& c = f.centroid;
    const double sy = c.y * rect.h + rect.t;
    if (c.page_index != rect.page_index || sy < kScrollMarginPx ||
        sy > kScreenH - kScrollMarginPx) {
      PageRect next = rect;
      next.page_index = c.page_index;
      next.t = std::clamp(0.5 * kScreenH - c.y * rect.h, kScreenH - rect.h, 0.0);
      next.t_ms = static_cast<double>(k) * frame;
      if (!(next == rect)) {
        rect = next;
        bundle.rect_events.push_back(rect);
      }
    }

    // Transit from the previous fixation, then tracking loss until this one.
    if (i > 0 && k < k0) {
      const PagePoint& a = planned[i - 1].centroid;
      const double amp_cm = std::hypot((c.x - a.x) * kLetterWidthCm, (c.y - a.y) * kLetterHeightCm);
      const double transit_ms = 20.0 + 2.0 * amp_cm;
      const double t_from = static_cast<double>(k) * frame;
      for (; k < k0; ++k) {
        const double tk = static_cast<double>(k) * frame;
        if (tk - t_from < transit_ms && a.page_index == c.page_index) {
          const double u = std::min((tk - t_from + frame) / (transit_ms + frame), 1.0);
          PagePoint m = a;
          m.x = a.x + u * (c.x - a.x);
          m.y = a.y + u * (c.y - a.y);
          push(k, &m, 0.0);
        } else {
          push(k, nullptr, 0.0);
        }
      }
    }
    for (k = k0; k < k1; ++k) push(k, &c, jitter);
  }
  const long long k_end = frame_at(session_end_ms);
  for (; k < k_end; ++k) push(k, nullptr, 0.0);
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string pad2(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

BehaviorLabel draw_label(std::mt19937_64& rng, const std::vector<double>& weights) {
  std::vector<double> w = weights;
  w.resize(kBehaviorCount, 0.0);
  std::discrete_distribution<int> d(w.begin(), w.end());
  return static_cast<BehaviorLabel>(d(rng));
}

SyntheticSession generate_session(const SyntheticParticipant& part, const SessionSpec& spec,
                                  const std::string& session_id, Condition condition,
                                  std::mt19937_64& rng) {
  SyntheticSession s;
  s.bundle.session_id = session_id;
  s.bundle.participant_id = part.participant_id;
  s.bundle.condition = condition;
  s.bundle.layout = spec.layout;

  std::vector<std::pair<BehaviorLabel, double>> plan;
  if (condition == Condition::Instructed) {
    for (BehaviorLabel l :
         {BehaviorLabel::Sequential, BehaviorLabel::Skimming, BehaviorLabel::Deep}) {
      plan.emplace_back(l, spec.instructed_segment_s);
    }
  } else {
    const int count =
        1 + std::poisson_distribution<int>(std::max(spec.mean_behaviors - 1.0, 0.0))(rng);
    for (int i = 0; i < count; ++i) {
      const BehaviorLabel l = i == 0 && bernoulli(rng, spec.open_with_preview)
                                  ? BehaviorLabel::PreviewingMapping
                                  : draw_label(rng, part.grammar_weights);
      const auto& p = part.params[static_cast<std::size_t>(l)];
      plan.emplace_back(l, std::max(p.segment_duration_s.sample(rng), 1.0));
    }
  }

  ReadingCursor cursor;
  std::vector<double> jitters;
  double t = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto [label, dur] = plan[i];
    ArchetypeParams p = condition == Condition::Instructed
                            ? instructed_params(label)
                            : part.params[static_cast<std::size_t>(label)];
    GeneratedSegment g = generate_segment(p, spec.layout, dur, rng, t, cursor);
    g.segment.segment_id = session_id + "-seg" + pad2(static_cast<int>(i) + 1);
    for (const auto& f : g.fixations) {
      s.planned.push_back(f);
      jitters.push_back(p.jitter_sigma);
    }
    s.segments.push_back(g.segment);
    t = g.segment.end_ms;
  }
  emit_samples(s.planned, t, 0.0012, spec.sample_rate_hz, rng, s.bundle, jitters);
  return s;
}

}  // namespace

SyntheticParticipant make_participant(int index, std::uint64_t corpus_seed,
                                      const SessionSpec& spec) {
  SyntheticParticipant part;
  part.participant_id = "P" + pad2(index + 1);
  part.seed = mix_seed(corpus_seed, static_cast<std::uint64_t>(index) + 1);
  part.grammar_weights = spec.grammar_weights;
  std::mt19937_64 rng(mix_seed(part.seed, 0x9e37));
  std::normal_distribution<double> pert(0.0, spec.participant_sigma);
  for (BehaviorLabel l : kAllBehaviors) {
    ArchetypeParams p = default_params(l);
    p.segment_duration_s.median *= std::exp(pert(rng));
    p.fixation_duration_ms.median *= std::exp(pert(rng));
    p.gap_ms.median *= std::exp(pert(rng));
    p.target_wpm.median *= std::exp(pert(rng));
    part.params.push_back(p);
  }
  return part;
}

SyntheticCorpus generate_corpus(int n_participants, const SessionSpec& spec, std::uint64_t seed) {
  if (n_participants < 2) fail(ErrorCode::InvalidConfig, "corpus needs at least 2 participants");
  SyntheticCorpus corpus;
  corpus.participants.resize(static_cast<std::size_t>(n_participants));
  const int per = spec.include_instructed ? 2 : 1;
  corpus.sessions.resize(static_cast<std::size_t>(n_participants * per));

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_participants; ++i) {
    SyntheticParticipant part = make_participant(i, seed, spec);
    std::mt19937_64 rng(part.seed);
    const auto base = static_cast<std::size_t>(i * per);
    corpus.sessions[base] =
        generate_session(part, spec, part.participant_id + "-S1", Condition::InTheWild, rng);
    if (spec.include_instructed) {
      corpus.sessions[base + 1] =
          generate_session(part, spec, part.participant_id + "-I1", Condition::Instructed, rng);
    }
    corpus.participants[static_cast<std::size_t>(i)] = std::move(part);
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  for (const auto& s : corpus.sessions) {
    const auto sdir = dir / s.bundle.session_id;
    write_session_dir(sdir, s.bundle);
    write_file_atomic(sdir / "segments.json", json(s.segments).dump(1) + "\n");
  }
}

}  // namespace scanpath
