#include <doctest.h>

#include "scanpath/core.hpp"
#include "scanpath/json_io.hpp"

using namespace scanpath;

TEST_CASE("behavior label names are bijective") {
  const char* names[] = {"static", "deep", "sequential", "non-sequential", "skimming", "previewing/mapping"};
  for (int i = 0; i < kBehaviorCount; ++i) {
    const auto l = kAllBehaviors[static_cast<std::size_t>(i)];
    CHECK(to_string(l) == names[i]);
    CHECK(parse_behavior(names[i]) == l);
  }
  CHECK_FALSE(try_parse_behavior("regular").has_value());
  CHECK_THROWS_AS(parse_behavior("reading"), Error);
}

TEST_CASE("trained class index") {
  CHECK(trained_class_index(BehaviorLabel::Sequential) == 0);
  CHECK(trained_class_index(BehaviorLabel::NonSequential) == 1);
  CHECK(trained_class_index(BehaviorLabel::Skimming) == 2);
  CHECK(trained_class_index(BehaviorLabel::Static) == -1);
  CHECK(trained_class_index(BehaviorLabel::PreviewingMapping) == -1);
}

TEST_CASE("saccade class names round-trip") {
  for (int i = 0; i < kSaccadeClassCount; ++i) {
    const auto c = static_cast<SaccadeClass>(i);
    CHECK(parse_saccade_class(to_string(c)) == c);
  }
}

template <class T>
T round_trip(const T& v) {
  return json::parse(json(v).dump()).template get<T>();
}

TEST_CASE("core types survive JSON round-trips") {
  CHECK(round_trip(GazeSample{12.5, 100.25, -3.0, false, "s1"}) == GazeSample{12.5, 100.25, -3.0, false, "s1"});
  CHECK(round_trip(PageRect{2, 10, 20, 800, 1000, 33.3}) == PageRect{2, 10, 20, 800, 1000, 33.3});
  CHECK(round_trip(PagePoint{1, -0.1, 1.2, 5.0}) == PagePoint{1, -0.1, 1.2, 5.0});
  const Fixation f{100, 300, PagePoint{0, 0.4, 0.5, 200}, 12};
  CHECK(round_trip(f) == f);
  const Saccade s{3, 4, 0.1, -0.2, std::hypot(0.1, 0.2), SaccadeClass::LineRegression};
  CHECK(round_trip(s) == s);
  Segment seg;
  seg.segment_id = "seg-0001";
  seg.start_ms = 80000;
  seg.end_ms = 116000;
  seg.label_r1 = BehaviorLabel::Sequential;
  seg.label_r2 = BehaviorLabel::Skimming;
  seg.label_final = BehaviorLabel::Sequential;
  seg.override_justification = "discussed";
  seg.words_covered = 60;
  seg.wpm = 100;
  CHECK(round_trip(seg) == seg);
  Segment bare;
  bare.start_ms = 0;
  bare.end_ms = 1;
  CHECK(round_trip(bare) == bare);

  DocumentLayout layout;
  Page p;
  p.words.push_back(Word{0, 0, "alpha", Box{0.1, 0.1, 0.2, 0.12}});
  p.words.push_back(Word{1, 1, "beta", Box{0.22, 0.1, 0.3, 0.12}});
  p.lines.push_back(Line{0, 0.11, {0, 1}});
  layout.pages.push_back(p);
  CHECK(round_trip(layout) == layout);
}

TEST_CASE("validate_session counts") {
  SUBCASE("empty stream") {
    const auto r = validate_session({}, {});
    CHECK(r == ValidationReport{});
  }
  SUBCASE("one invalid sample") {
    const std::vector<GazeSample> s = {{0, 0, 0, false, ""}};
    CHECK(validate_session(s, {}).invalid_count == 1);
  }
  SUBCASE("60 Hz stream with one 1000 ms gap") {
    std::vector<GazeSample> s;
    double t = 0;
    for (int i = 0; i < 120; ++i) {
      s.push_back({t, 10, 10, true, ""});
      t += i == 60 ? 1000.0 : 1000.0 / 60.0;
    }
    int brute = 0;
    for (std::size_t i = 1; i < s.size(); ++i) brute += s[i].t_ms - s[i - 1].t_ms > 500;
    const auto r = validate_session(s, {});
    CHECK(r.gap_count == 1);
    CHECK(brute == 1);
    CHECK(r.sample_count == 120);
  }
  SUBCASE("out of order and degenerate rects") {
    const std::vector<GazeSample> s = {{10, 0, 0, true, ""}, {5, 0, 0, true, ""}};
    const std::vector<PageRect> r = {{0, 0, 0, 0, 10, 0}};
    const auto rep = validate_session(s, r);
    CHECK(rep.out_of_order_count == 1);
    CHECK(rep.degenerate_rect_count == 1);
  }
}

namespace {
Segment seg(double a, double b) {
  Segment s;
  s.start_ms = a;
  s.end_ms = b;
  return s;
}
}  // namespace

TEST_CASE("segment validation") {
  CHECK_NOTHROW(validate_segments(std::vector<Segment>{seg(0, 10), seg(10, 20)}));
  try {
    validate_segments(std::vector<Segment>{seg(0, 10), seg(9.999, 20)});
    FAIL("overlap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SegmentOverlap);
  }
  CHECK_THROWS_AS(validate_segment(seg(5, 5)), Error);
  Segment s = seg(0, 1);
  s.label_r1 = BehaviorLabel::Deep;
  s.label_final = BehaviorLabel::Deep;
  CHECK_THROWS_AS(validate_segment(s), Error);
  s.label_r2 = BehaviorLabel::Static;
  CHECK_NOTHROW(validate_segment(s));
  s.label_r2.reset();
  s.override_justification = "reviewer 2 unavailable";
  CHECK_NOTHROW(validate_segment(s));
  s.wpm = -1;
  CHECK_THROWS_AS(validate_segment(s), Error);
}

TEST_CASE("off-page flag") {
  CHECK_FALSE(PagePoint{0, 0.0, 1.0, 0}.off_page());
  CHECK(PagePoint{0, -0.01, 0.5, 0}.off_page());
  CHECK(PagePoint{0, 0.5, 1.01, 0}.off_page());
}
