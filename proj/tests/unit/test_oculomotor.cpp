#include <doctest.h>

#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "scanpath/oculomotor.hpp"
#include "scanpath/synth.hpp"

using namespace scanpath;

namespace {

std::vector<PagePoint> stream(std::initializer_list<std::pair<double, double>> xy, double dt = 16.0) {
  std::vector<PagePoint> out;
  double t = 0;
  for (auto [x, y] : xy) {
    out.push_back({0, x, y, t});
    t += dt;
  }
  return out;
}

std::vector<PagePoint> dwell(std::vector<PagePoint> pts, double x, double y, int n, double dt = 16.0) {
  double t = pts.empty() ? 0.0 : pts.back().t_ms + dt;
  for (int i = 0; i < n; ++i, t += dt) pts.push_back({0, x + 0.001 * (i % 2), y, t});
  return pts;
}

}  // namespace

TEST_CASE("I-DT examples") {
  SUBCASE("12 identical samples over 200 ms") {
    std::vector<PagePoint> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({0, 0.5, 0.5, i * 200.0 / 11.0});
    const auto f = detect_fixations(pts);
    REQUIRE(f.size() == 1);
    CHECK(f[0].centroid.x == 0.5);
    CHECK(f[0].centroid.y == 0.5);
    CHECK(f[0].duration_ms() == doctest::Approx(200.0));
  }
  SUBCASE("two 150 ms clusters 0.2 apart") {
    std::vector<PagePoint> pts;
    for (int i = 0; i < 20; ++i) {
      pts.push_back({0, i < 10 ? 0.3 : 0.5, 0.5, i < 10 ? i * 150.0 / 9 : 200.0 + (i - 10) * 150.0 / 9});
    }
    CHECK(detect_fixations(pts).size() == 2);
  }
  SUBCASE("60 ms cluster") {
    CHECK(detect_fixations(stream({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}, 20.0)).empty());
  }
  SUBCASE("one steady run") {
    const auto pts = dwell({}, 0.3, 0.4, 10);
    const auto f = detect_fixations(pts);
    REQUIRE(f.size() == 1);
    CHECK(f[0].start_ms == 0);
    CHECK(f[0].end_ms == 144);
    CHECK(f[0].sample_count == 10);
    CHECK(f[0].centroid.x == doctest::Approx(0.3005));
  }
  SUBCASE("two dwells separated by a jump") {
    auto pts = dwell({}, 0.3, 0.4, 8);
    pts = dwell(pts, 0.6, 0.4, 8);
    const auto f = detect_fixations(pts);
    REQUIRE(f.size() == 2);
    CHECK(f[1].centroid.x == doctest::Approx(0.6005));
  }
  SUBCASE("too short") {
    CHECK(detect_fixations(dwell({}, 0.3, 0.4, 5)).empty());
  }
  SUBCASE("a gap above max_gap_ms splits the run") {
    auto pts = dwell({}, 0.3, 0.4, 8);
    auto more = dwell({}, 0.3, 0.4, 8);
    for (auto& p : more) p.t_ms += pts.back().t_ms + 200;
    pts.insert(pts.end(), more.begin(), more.end());
    CHECK(detect_fixations(pts).size() == 2);
  }
  SUBCASE("page change splits the run") {
    auto pts = dwell({}, 0.3, 0.4, 16);
    for (std::size_t i = 8; i < pts.size(); ++i) pts[i].page_index = 1;
    const auto f = detect_fixations(pts);
    REQUIRE(f.size() == 2);
    CHECK(f[1].centroid.page_index == 1);
  }
  SUBCASE("saccade samples") {
    const auto pts = stream({{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}, {0.4, 0.4}, {0.5, 0.5}, {0.6, 0.6}, {0.7, 0.7}});
    CHECK(detect_fixations(pts).empty());
  }
  SUBCASE("invalid config") {
    FilterConfig c;
    c.max_gap_ms = 0;
    CHECK_CODE(detect_fixations({}, c), ErrorCode::InvalidConfig);
  }
}

TEST_CASE("I-DT output satisfies its definition on noisy streams") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0, 0.003);
    std::uniform_real_distribution<double> u(0.05, 0.95), gap(0, 1);
    std::vector<PagePoint> pts;
    double t = 0;
    for (int k = 0; k < 30; ++k) {
      const double cx = u(rng), cy = u(rng);
      const int n = 3 + static_cast<int>(gap(rng) * 20);
      for (int i = 0; i < n; ++i) {
        pts.push_back({k / 12, cx + noise(rng), cy + noise(rng), t});
        t += gap(rng) < 0.02 ? 120.0 : 16.7;
      }
    }
    const FilterConfig cfg;
    const auto fx = detect_fixations(pts, cfg);
    std::size_t cursor = 0;
    for (const auto& f : fx) {
      std::size_t i = cursor;
      while (pts[i].t_ms != f.start_ms) ++i;
      std::size_t j = i;
      while (pts[j].t_ms != f.end_ms) ++j;
      double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9, sx = 0;
      for (std::size_t k = i; k <= j; ++k) {
        x0 = std::min(x0, pts[k].x);
        x1 = std::max(x1, pts[k].x);
        y0 = std::min(y0, pts[k].y);
        y1 = std::max(y1, pts[k].y);
        sx += pts[k].x;
        if (k > i) {
          REQUIRE(pts[k].page_index == pts[k - 1].page_index);
          REQUIRE(pts[k].t_ms - pts[k - 1].t_ms <= cfg.max_gap_ms);
        }
      }
      CHECK(std::hypot(x1 - x0, y1 - y0) <= cfg.dispersion_threshold);
      CHECK(f.duration_ms() >= cfg.min_duration_ms);
      CHECK(f.sample_count == static_cast<int>(j - i + 1));
      CHECK(f.centroid.x == doctest::Approx(sx / static_cast<double>(j - i + 1)).epsilon(1e-12));
      // Maximal: the next sample would break the run or the threshold.
      if (j + 1 < pts.size() && pts[j + 1].page_index == pts[j].page_index &&
          pts[j + 1].t_ms - pts[j].t_ms <= cfg.max_gap_ms) {
        const double nx0 = std::min(x0, pts[j + 1].x), nx1 = std::max(x1, pts[j + 1].x);
        const double ny0 = std::min(y0, pts[j + 1].y), ny1 = std::max(y1, pts[j + 1].y);
        CHECK(std::hypot(nx1 - nx0, ny1 - ny0) > cfg.dispersion_threshold);
      }
      cursor = j + 1;
    }
  }
}

TEST_CASE("saccade rule examples on the default layout") {
  const auto layout = make_default_layout(2, 3, 6);
  const auto& page = layout.pages[0];
  auto at = [&](int w) {
    const auto& r = page.words[static_cast<std::size_t>(w)].rect;
    return fixture::fix(0, 100, r.cx(), r.cy());
  };
  CHECK(classify_saccade(at(0), at(1), layout) == SaccadeClass::Forward);
  CHECK(classify_saccade(at(0), at(3), layout) == SaccadeClass::HorizontalLater);
  CHECK(classify_saccade(at(3), at(1), layout) == SaccadeClass::Regression);
  CHECK(classify_saccade(at(2), at(2), layout) == SaccadeClass::Neutral);
  CHECK(classify_saccade(at(5), at(6), layout) == SaccadeClass::LineForward);
  CHECK(classify_saccade(at(0), at(6), layout) == SaccadeClass::VerticalNext);
  CHECK(classify_saccade(at(0), at(12), layout) == SaccadeClass::LineForward);
  CHECK(classify_saccade(at(7), at(1), layout) == SaccadeClass::LineRegression);
  const auto narrow = make_default_layout(1, 4, 4);
  auto on = [&](int w) {
    const auto& r = narrow.pages[0].words[static_cast<std::size_t>(w)].rect;
    return fixture::fix(0, 100, r.cx(), r.cy());
  };
  CHECK(classify_saccade(at(3), at(4), layout) == SaccadeClass::Forward);
  CHECK(classify_saccade(on(10), on(2), narrow) == SaccadeClass::LineRegression);
  auto other = at(0);
  other.centroid.page_index = 1;
  CHECK(classify_saccade(at(0), other, layout) == SaccadeClass::LineForward);
  CHECK(classify_saccade(other, at(0), layout) == SaccadeClass::LineRegression);
}

TEST_CASE("empty layout falls back to displacement") {
  const DocumentLayout empty{{Page{}}};
  auto a = fixture::fix(0, 100, 0.5, 0.5);
  CHECK(classify_saccade(a, fixture::fix(0, 1, 0.6, 0.52), empty) == SaccadeClass::Forward);
  CHECK(classify_saccade(a, fixture::fix(0, 1, 0.4, 0.52), empty) == SaccadeClass::Regression);
  CHECK(classify_saccade(a, fixture::fix(0, 1, 0.51, 0.6), empty) == SaccadeClass::LineForward);
  CHECK(classify_saccade(a, fixture::fix(0, 1, 0.51, 0.4), empty) == SaccadeClass::LineRegression);
  CHECK(classify_saccade(a, a, empty) == SaccadeClass::Neutral);
}

namespace {

// Direct transcription of the rule table with linear scans.
SaccadeClass brute_rule(const Fixation& a, const Fixation& b, const Page& page) {
  auto line_of = [&](double y) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < page.lines.size(); ++i) {
      if (std::abs(page.lines[i].y_center - y) < std::abs(page.lines[best].y_center - y)) best = i;
    }
    return best;
  };
  auto rank = [&](std::size_t li) {
    int r = 0;
    for (std::size_t i = 0; i < page.lines.size(); ++i) {
      if (page.lines[i].y_center < page.lines[li].y_center) ++r;
    }
    return r;
  };
  auto order = [&](const Line& line, double x, double y) {
    double bd = 1e300, bc = 1e300;
    int ro = 0;
    for (int id : line.word_ids) {
      const auto& r = page.words[static_cast<std::size_t>(id)].rect;
      const double dx = std::max({r.x0 - x, 0.0, x - r.x1});
      const double dy = std::max({r.y0 - y, 0.0, y - r.y1});
      const double d = std::sqrt(dx * dx + dy * dy);
      const double c = std::hypot(r.cx() - x, r.cy() - y);
      if (d < bd || (d == bd && c < bc)) {
        bd = d;
        bc = c;
        ro = page.words[static_cast<std::size_t>(id)].reading_order;
      }
    }
    return ro;
  };
  const std::size_t la = line_of(a.centroid.y), lb = line_of(b.centroid.y);
  const int dl = rank(lb) - rank(la);
  if (dl == 0) {
    const int d = order(page.lines[la], b.centroid.x, b.centroid.y) -
                  order(page.lines[la], a.centroid.x, a.centroid.y);
    if (d >= 2) return SaccadeClass::HorizontalLater;
    if (d == 1) return SaccadeClass::Forward;
    if (d < 0) return SaccadeClass::Regression;
    return SaccadeClass::Neutral;
  }
  if (dl == 1 && std::abs(b.centroid.x - a.centroid.x) < 0.1) return SaccadeClass::VerticalNext;
  return dl > 0 ? SaccadeClass::LineForward : SaccadeClass::LineRegression;
}

}  // namespace

TEST_CASE("saccade classes match a brute-force rule evaluator") {
  const auto layout = make_default_layout();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.05, 0.95), uy(0.03, 0.8);
  for (int i = 0; i < 100; ++i) {
    const auto a = fixture::fix(0, 100, ux(rng), uy(rng));
    const auto b = fixture::fix(120, 200, ux(rng), uy(rng));
    REQUIRE(classify_saccade(a, b, layout) == brute_rule(a, b, layout.pages[0]));
  }
}

TEST_CASE("derive_saccades") {
  const auto layout = make_default_layout();
  CHECK(derive_saccades({}, layout).empty());
  const auto fx = fixture::on_words(layout.pages[0], {0, 1, 2, 1, 14, 14}, 0, 200);
  const auto s = derive_saccades(fx, layout);
  REQUIRE(s.size() == fx.size() - 1);
  std::array<int, kSaccadeClassCount> counts{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].from_idx == i);
    CHECK(s[i].to_idx == i + 1);
    CHECK(s[i].amplitude == doctest::Approx(std::hypot(s[i].dx, s[i].dy)));
    ++counts[static_cast<std::size_t>(s[i].direction)];
  }
  int sum = 0;
  for (int c : counts) sum += c;
  CHECK(sum == static_cast<int>(s.size()));
  CHECK(parse_saccades_jsonl(format_saccades_jsonl(s)) == s);
  CHECK(parse_fixations_jsonl(format_fixations_jsonl(fx)) == fx);
}

TEST_CASE("hit_word agrees with the oracle") {
  const auto layout = make_default_layout();
  const auto& page = layout.pages[0];
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double x = u(rng), y = u(rng) * 0.85;
    const auto h = hit_word(page, x, y);
    REQUIRE(h.value_or(-1) == oracle::word_hit(page, x, y));
  }
}
