#include <doctest.h>

#include <filesystem>
#include <random>

#include "scanpath/ingest.hpp"
#include "scanpath/synth.hpp"

using namespace scanpath;

namespace {
const PageRect kRect{0, 100, 200, 800, 1000, 0};
}

TEST_CASE("project_to_pcs examples") {
  auto p = project_to_pcs({100, 200}, kRect);
  CHECK(p.x == 0.0);
  CHECK(p.y == 0.0);
  p = project_to_pcs({500, 700}, kRect);
  CHECK(p.x == 0.5);
  CHECK(p.y == 0.5);
  p = project_to_pcs({50, 100}, kRect);
  CHECK(p.x == -0.0625);
  CHECK(p.y == -0.1);
  CHECK(p.off_page());
  CHECK(project_to_pcs({1, 1}, PageRect{3, 0, 0, 10, 10, 0}).page_index == 3);
}

TEST_CASE("degenerate rects are rejected") {
  CHECK_THROWS_AS(project_to_pcs({0, 0}, PageRect{0, 0, 0, 0, 10, 0}), Error);
  CHECK_THROWS_AS(project_to_pcs({0, 0}, PageRect{0, 0, 0, 10, -1, 0}), Error);
  CHECK_THROWS_AS(unproject(PagePoint{}, PageRect{0, 0, 0, 10, 0, 0}), Error);
}

TEST_CASE("unproject examples and round-trip") {
  auto s = unproject(PagePoint{0, 0, 0, 0}, kRect);
  CHECK(s.x == 100);
  CHECK(s.y == 200);
  s = unproject(PagePoint{0, 1, 1, 0}, kRect);
  CHECK(s.x == 900);
  CHECK(s.y == 1200);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int i = 0; i < 10000; ++i) {
    const PagePoint p{0, u(rng), u(rng), 0};
    const auto q = project_to_pcs(unproject(p, kRect), kRect);
    REQUIRE(std::abs(q.x - p.x) <= 1e-9);
    REQUIRE(std::abs(q.y - p.y) <= 1e-9);
  }
}

TEST_CASE("projection is resolution independent") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-500, 2500), k(0.1, 8);
  for (int i = 0; i < 2000; ++i) {
    const ScreenPoint p{u(rng), u(rng)};
    const double s = k(rng);
    const auto a = project_to_pcs(p, kRect);
    const auto b = project_to_pcs({p.x * s, p.y * s}, PageRect{0, kRect.l * s, kRect.t * s, kRect.w * s, kRect.h * s, 0});
    REQUIRE(std::abs(a.x - b.x) <= 1e-12);
    REQUIRE(std::abs(a.y - b.y) <= 1e-12);
  }
}

TEST_CASE("project_stream") {
  SessionBundle b;
  b.rect_events = {kRect};
  b.samples = {{0, 500, 700, true, ""}, {16, 510, 700, true, ""}, {33, 520, 700, true, ""}};
  SUBCASE("static rect") {
    const auto pts = project_stream(b);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].x == 0.5);
    CHECK(pts[2].x == project_to_pcs({520, 700}, kRect).x);
    CHECK(pts[1].t_ms == 16);
  }
  SUBCASE("scroll shifts later points by -100/h") {
    PageRect scrolled = kRect;
    scrolled.t += 100;
    scrolled.t_ms = 20;
    b.rect_events.push_back(scrolled);
    const auto pts = project_stream(b);
    CHECK(pts[1].y == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pts[2].y == doctest::Approx(0.5 - 100.0 / 1000.0).epsilon(1e-15));
  }
  SUBCASE("invalid samples are dropped") {
    b.samples.clear();
    for (int i = 0; i < 10; ++i) b.samples.push_back({i * 16.0, 500, 700, i != 4, ""});
    CHECK(project_stream(b).size() == 9);
  }
  SUBCASE("sample before every rect") {
    b.rect_events[0].t_ms = 10;
    try {
      project_stream(b);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoViewport);
    }
  }
}

TEST_CASE("log formats round-trip") {
  const std::vector<GazeSample> s = {{0, 1.5, 2.25, true, ""}, {16.667, -3, 4, false, ""}};
  CHECK(parse_gaze_log(format_gaze_csv(s)) == s);
  CHECK(parse_gaze_log("{\"t_ms\":0,\"sx\":1.5,\"sy\":2.25,\"valid\":true}\n"
                       "{\"t_ms\":16.667,\"sx\":-3,\"sy\":4,\"valid\":false}\n") == s);
  const std::vector<PageRect> r = {kRect, PageRect{1, 0, -500, 800, 1000, 120}};
  CHECK(parse_viewport_log(format_viewport_jsonl(r)) == r);
  const auto layout = make_default_layout(2, 3, 5);
  CHECK(parse_layout(format_layout_json(layout)) == layout);
  CHECK_THROWS_AS(parse_gaze_log("t_ms,sx,sy\n1,2,3\n"), Error);
  CHECK_THROWS_AS(parse_gaze_log("t_ms,sx,sy,valid\n1,2,x,1\n"), Error);
  CHECK_THROWS_AS(parse_layout("{"), Error);
}

TEST_CASE("session directory round-trip") {
  const auto corpus = generate_corpus(2, {}, 4);
  const auto& b = corpus.sessions.front().bundle;
  const auto dir = std::filesystem::temp_directory_path() / "scanpath-ingest-test";
  std::filesystem::remove_all(dir);
  write_session_dir(dir, b);
  const auto back = read_session_dir(dir);
  CHECK(back.session_id == b.session_id);
  CHECK(back.participant_id == b.participant_id);
  CHECK(back.condition == b.condition);
  CHECK(back.samples.size() == b.samples.size());
  CHECK(back.rect_events == b.rect_events);
  CHECK(back.layout == b.layout);
  CHECK(project_stream(back).size() == project_stream(b).size());
  std::filesystem::remove_all(dir);
}
