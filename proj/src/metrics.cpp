#include "scanpath/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "scanpath/oculomotor.hpp"

namespace scanpath {

const std::array<std::string_view, FeatureVector::kSize>& FeatureVector::field_names() {
  static const std::array<std::string_view, kSize> names = {
      "fixation_count",      "mean_fixation_duration_ms", "fixation_dispersion",
      "mean_saccade_length", "rate_vertical_next",        "rate_horizontal_later",
      "rate_line_regression", "rate_regression",          "wpm",
      "inverse_dispersion",  "scanpath_length_cm",        "fbsr"};
  return names;
}

std::array<double, FeatureVector::kSize> FeatureVector::as_array() const {
  return {fixation_count,       mean_fixation_duration_ms, fixation_dispersion,
          mean_saccade_length,  rate_vertical_next,        rate_horizontal_later,
          rate_line_regression, rate_regression,           wpm,
          inverse_dispersion,   scanpath_length_cm,        fbsr};
}

bool fixation_in_window(const Fixation& f, double t0_ms, double t1_ms) {
  return f.start_ms >= t0_ms && f.end_ms < t1_ms;
}

namespace {

std::pair<double, double> page_size_cm(int page_index, const DocumentLayout& layout) {
  if (const Page* p = layout.find_page(page_index)) return {p->width_cm, p->height_cm};
  return {kLetterWidthCm, kLetterHeightCm};
}

// Index range [lo, hi) of fixations inside the window, assuming time order.
std::pair<std::size_t, std::size_t> window_range(std::span<const Fixation> fx,
                                                 double t0, double t1) {
  auto lo = std::lower_bound(fx.begin(), fx.end(), t0, [](const Fixation& f, double t) {
    return f.start_ms < t;
  });
  auto hi = lo;
  while (hi != fx.end() && hi->start_ms < t1) ++hi;
  // Trailing fixations that start inside but end at/after t1 are excluded.
  while (hi != lo && !((hi - 1)->end_ms < t1)) --hi;
  return {static_cast<std::size_t>(lo - fx.begin()), static_cast<std::size_t>(hi - fx.begin())};
}

int distinct_words(std::span<const Fixation> fx, std::size_t lo, std::size_t hi,
                   const DocumentLayout& layout) {
  std::set<std::pair<int, int>> hits;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto& c = fx[i].centroid;
    const Page* page = layout.find_page(c.page_index);
    if (!page) continue;
    if (auto w = hit_word(*page, c.x, c.y)) hits.emplace(c.page_index, *w);
  }
  return static_cast<int>(hits.size());
}

FeatureVector features_over(std::span<const Fixation> fx, std::size_t lo,
                            std::size_t hi, std::span<const Saccade> saccades,
                            const DocumentLayout& layout, double duration_ms) {
  FeatureVector fv;
  if (lo >= hi) return fv;
  const double n = static_cast<double>(hi - lo);
  fv.fixation_count = n;

  double dur = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto [w, h] = page_size_cm(fx[i].centroid.page_index, layout);
    dur += fx[i].duration_ms();
    mx += fx[i].centroid.x * w;
    my += fx[i].centroid.y * h;
  }
  fv.mean_fixation_duration_ms = dur / n;
  mx /= n;
  my /= n;
  double disp = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const auto [w, h] = page_size_cm(fx[i].centroid.page_index, layout);
    disp += std::hypot(fx[i].centroid.x * w - mx, fx[i].centroid.y * h - my);
  }
  fv.fixation_dispersion = disp / n;
  fv.inverse_dispersion = 1.0 / std::max(fv.fixation_dispersion, kDispersionEpsilonCm);

  auto first = std::lower_bound(saccades.begin(), saccades.end(), lo,
                                [](const Saccade& s, std::size_t v) { return s.from_idx < v; });
  std::size_t count = 0, vnext = 0, hlater = 0, lreg = 0, reg = 0, fwd = 0, back = 0;
  double length = 0.0;
  for (auto it = first; it != saccades.end() && it->from_idx < hi; ++it) {
    if (it->from_idx < lo || it->to_idx < lo || it->to_idx >= hi) continue;
    ++count;
    length += displacement_cm(it->dx, it->dy, fx[it->from_idx].centroid.page_index, layout);
    switch (it->direction) {
      case SaccadeClass::VerticalNext: ++vnext; break;
      case SaccadeClass::HorizontalLater: ++hlater; break;
      case SaccadeClass::LineRegression: ++lreg; break;
      case SaccadeClass::Regression: ++reg; break;
      default: break;
    }
    if (is_forward_type(it->direction)) ++fwd;
    if (is_regression_type(it->direction)) ++back;
  }
  fv.scanpath_length_cm = length;
  if (count > 0) {
    const double c = static_cast<double>(count);
    fv.mean_saccade_length = length / c;
    fv.rate_vertical_next = static_cast<double>(vnext) / c;
    fv.rate_horizontal_later = static_cast<double>(hlater) / c;
    fv.rate_line_regression = static_cast<double>(lreg) / c;
    fv.rate_regression = static_cast<double>(reg) / c;
  }
  if (fwd + back > 0) {
    fv.fbsr = static_cast<double>(fwd) / static_cast<double>(fwd + back);
  }
  fv.wpm = static_cast<double>(distinct_words(fx, lo, hi, layout)) / (duration_ms / 60000.0);
  return fv;
}

}  // namespace

double displacement_cm(double dx, double dy, int page_index, const DocumentLayout& layout) {
  const auto [w, h] = page_size_cm(page_index, layout);
  return std::hypot(dx * w, dy * h);
}

FeatureVector window_features(std::span<const Fixation> fixations,
                              std::span<const Saccade> saccades,
                              const DocumentLayout& layout, double t0_ms, double t1_ms) {
  if (!(t1_ms > t0_ms)) {
    fail(ErrorCode::ZeroDuration, "window must satisfy t1 > t0");
  }
  auto [lo, hi] = window_range(fixations, t0_ms, t1_ms);
  return features_over(fixations, lo, hi, saccades, layout, t1_ms - t0_ms);
}

WordsPerMinute wpm(const Segment& segment, std::span<const Fixation> fixations,
                   const DocumentLayout& layout) {
  const double dur = segment.end_ms - segment.start_ms;
  if (!(dur > 0.0)) fail(ErrorCode::ZeroDuration, "segment has zero duration");
  auto [lo, hi] = window_range(fixations, segment.start_ms, segment.end_ms);
  WordsPerMinute out;
  out.words_covered = distinct_words(fixations, lo, hi, layout);
  out.wpm = static_cast<double>(out.words_covered) / (dur / 60000.0);
  return out;
}

double fbsr(std::span<const Saccade> saccades) {
  std::size_t fwd = 0, back = 0;
  for (const auto& s : saccades) {
    if (is_forward_type(s.direction)) ++fwd;
    if (is_regression_type(s.direction)) ++back;
  }
  if (fwd + back == 0) {
    fail(ErrorCode::NoDirectionalSaccades, "no forward or regression saccades");
  }
  return static_cast<double>(fwd) / static_cast<double>(fwd + back);
}

SegmentFeatures segment_features(const Segment& segment, std::span<const Fixation> fixations,
                                 std::span<const Saccade> saccades,
                                 const DocumentLayout& layout) {
  validate_segment(segment);
  SegmentFeatures out;
  auto [lo, hi] = window_range(fixations, segment.start_ms, segment.end_ms);
  out.features = features_over(fixations, lo, hi, saccades, layout, segment.duration_ms());
  out.summary.duration_s = segment.duration_ms() / 1000.0;
  out.summary.fixation_count = static_cast<int>(hi - lo);
  out.summary.scanpath_length_cm = out.features.scanpath_length_cm;
  if (hi > lo) {
    std::vector<double> d;
    d.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) d.push_back(fixations[i].duration_ms());
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size();
    out.summary.median_fixation_duration_ms =
        m % 2 == 1 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
  }
  return out;
}

std::string format_feature_table(std::span<const FeatureVector> rows,
                                 std::span<const std::string> row_keys,
                                 std::string_view key_header) {
  std::string out;
  const bool keyed = !row_keys.empty();
  if (keyed) {
    out += key_header;
    out += ',';
  }
  const auto& names = FeatureVector::field_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  out += '\n';
  char buf[64];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (keyed) {
      out += r < row_keys.size() ? row_keys[r] : std::string();
      out += ',';
    }
    auto values = rows[r].as_array();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ',';
      int n = std::snprintf(buf, sizeof buf, "%.10g", values[i]);
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

}  // namespace scanpath
