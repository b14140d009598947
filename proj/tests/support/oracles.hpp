#pragma once

// Brute-force reference computations shared by unit and acceptance tests.
// Deliberately naive: no shared code paths with the library beyond types.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "scanpath/core.hpp"
#include "scanpath/metrics.hpp"

namespace oracle {

using namespace scanpath;

inline std::pair<double, double> page_cm(const DocumentLayout& layout, int page_index) {
  for (const auto& p : layout.pages) {
    if (p.page_index == page_index) return {p.width_cm, p.height_cm};
  }
  return {21.59, 27.94};
}

inline const Page* page_of(const DocumentLayout& layout, int page_index) {
  for (const auto& p : layout.pages) {
    if (p.page_index == page_index) return &p;
  }
  return nullptr;
}

// Inside a word box wins (closest center); else any box within 0.005 page
// units (closest center).
inline int word_hit(const Page& page, double x, double y) {
  int inside = -1, near = -1;
  double inside_d = 1e300, near_d = 1e300;
  for (const auto& w : page.words) {
    const double cd = std::sqrt((w.rect.cx() - x) * (w.rect.cx() - x) + (w.rect.cy() - y) * (w.rect.cy() - y));
    const bool in = x >= w.rect.x0 && x <= w.rect.x1 && y >= w.rect.y0 && y <= w.rect.y1;
    if (in) {
      if (cd < inside_d) {
        inside_d = cd;
        inside = w.word_id;
      }
      continue;
    }
    const double dx = std::max({w.rect.x0 - x, 0.0, x - w.rect.x1});
    const double dy = std::max({w.rect.y0 - y, 0.0, y - w.rect.y1});
    if (std::sqrt(dx * dx + dy * dy) <= 0.005 && cd < near_d) {
      near_d = cd;
      near = w.word_id;
    }
  }
  return inside >= 0 ? inside : near;
}

inline bool forward_type(SaccadeClass c) {
  return c == SaccadeClass::Forward || c == SaccadeClass::LineForward || c == SaccadeClass::VerticalNext ||
         c == SaccadeClass::HorizontalLater;
}
inline bool regression_type(SaccadeClass c) {
  return c == SaccadeClass::Regression || c == SaccadeClass::LineRegression;
}

inline FeatureVector window_features(const std::vector<Fixation>& fx, const std::vector<Saccade>& sc,
                                     const DocumentLayout& layout, double t0, double t1) {
  FeatureVector fv;
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    if (fx[i].start_ms >= t0 && fx[i].end_ms < t1) in.push_back(i);
  }
  if (in.empty()) return fv;
  const double n = static_cast<double>(in.size());
  fv.fixation_count = n;
  double dur = 0;
  std::vector<std::pair<double, double>> pts;
  for (auto i : in) {
    dur += fx[i].end_ms - fx[i].start_ms;
    const auto [w, h] = page_cm(layout, fx[i].centroid.page_index);
    pts.emplace_back(fx[i].centroid.x * w, fx[i].centroid.y * h);
  }
  fv.mean_fixation_duration_ms = dur / n;
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double disp = 0;
  for (auto [x, y] : pts) disp += std::sqrt((x - mx) * (x - mx) + (y - my) * (y - my));
  fv.fixation_dispersion = disp / n;
  fv.inverse_dispersion = 1.0 / std::max(fv.fixation_dispersion, 1e-6);

  const std::set<std::size_t> members(in.begin(), in.end());
  double count = 0, len = 0, vn = 0, hl = 0, lr = 0, rg = 0, fwd = 0, back = 0;
  for (const auto& s : sc) {
    if (!members.count(s.from_idx) || !members.count(s.to_idx)) continue;
    count += 1;
    const auto [w, h] = page_cm(layout, fx[s.from_idx].centroid.page_index);
    len += std::sqrt(s.dx * w * s.dx * w + s.dy * h * s.dy * h);
    vn += s.direction == SaccadeClass::VerticalNext;
    hl += s.direction == SaccadeClass::HorizontalLater;
    lr += s.direction == SaccadeClass::LineRegression;
    rg += s.direction == SaccadeClass::Regression;
    fwd += forward_type(s.direction);
    back += regression_type(s.direction);
  }
  fv.scanpath_length_cm = len;
  if (count > 0) {
    fv.mean_saccade_length = len / count;
    fv.rate_vertical_next = vn / count;
    fv.rate_horizontal_later = hl / count;
    fv.rate_line_regression = lr / count;
    fv.rate_regression = rg / count;
  }
  if (fwd + back > 0) fv.fbsr = fwd / (fwd + back);
  std::set<std::pair<int, int>> words;
  for (auto i : in) {
    const auto& c = fx[i].centroid;
    if (const Page* p = page_of(layout, c.page_index)) {
      const int w = word_hit(*p, c.x, c.y);
      if (w >= 0) words.emplace(c.page_index, w);
    }
  }
  fv.wpm = static_cast<double>(words.size()) / ((t1 - t0) / 60000.0);
  return fv;
}

inline double max_feature_error(const FeatureVector& a, const FeatureVector& b) {
  const auto x = a.as_array(), y = b.as_array();
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(x[i] - y[i]) / std::max(1.0, std::abs(y[i])));
  }
  return worst;
}

// Two-sided exact Mann-Whitney p by enumerating every assignment of the
// pooled values to group a.
inline std::pair<double, double> mann_whitney_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  auto u_of = [](const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0;
    for (double xi : x) {
      for (double yj : y) u += xi > yj ? 1.0 : xi == yj ? 0.5 : 0.0;
    }
    return u;
  };
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), n1 = a.size();
  const double mu = 0.5 * static_cast<double>(a.size() * b.size());
  const double obs = u_of(a, b);
  long hits = 0, total = 0;
  std::vector<int> pick(n, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(n1), 1);
  std::sort(pick.begin(), pick.end());
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? x : y).push_back(pooled[i]);
    ++total;
    if (std::abs(u_of(x, y) - mu) >= std::abs(obs - mu) - 1e-9) ++hits;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return {obs, static_cast<double>(hits) / static_cast<double>(total)};
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0;
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
}

}  // namespace oracle
