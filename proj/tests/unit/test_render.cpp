#include <doctest.h>
#include <png.h>

#include "../support/fixtures.hpp"
#include "scanpath/render.hpp"
#include "scanpath/synth.hpp"

using namespace scanpath;
using fixture::fix;

namespace {

std::vector<Fixation> diagonal(int n) {
  std::vector<Fixation> fx;
  for (int i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    fx.push_back(fix(i * 300.0, i * 300.0 + 200, 0.1 + 0.8 * t, 0.1 + 0.8 * t));
  }
  return fx;
}

void check_rgb(const ScanplotImage& img, PixelPos p, float r, float g, float b) {
  CHECK(img.at(p.y, p.x, 0) == doctest::Approx(r));
  CHECK(img.at(p.y, p.x, 1) == doctest::Approx(g));
  CHECK(img.at(p.y, p.x, 2) == doctest::Approx(b));
}

}  // namespace

TEST_CASE("polyline colors run from blue to red") {
  const auto fx = diagonal(3);
  const auto img = render_window(fx);
  CHECK(img.width_px == 85);
  CHECK(img.height_px == 110);
  CHECK(img.pixels.size() == 85u * 110u * 3u);
  auto px = [&](const Fixation& f) { return to_pixel(f.centroid.x, f.centroid.y, 85, 110); };
  check_rgb(img, px(fx[0]), 0, 0, 1);
  check_rgb(img, px(fx[1]), 0.5f, 0, 0.5f);
  check_rgb(img, px(fx[2]), 1, 0, 0);
  check_rgb(img, {0, 109, false}, 0, 0, 0);
  CHECK(img.first_fixation == 0);
  CHECK(img.last_fixation == 2);
  CHECK_FALSE(img.clamped);
  for (float v : img.pixels) REQUIRE((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("rendering is deterministic") {
  const auto fx = diagonal(10);
  CHECK(render_window(fx) == render_window(fx));
  ScanplotImage reused;
  render_into(fx, {}, nullptr, reused);
  render_into(diagonal(4), {}, nullptr, reused);
  CHECK(reused == render_window(diagonal(4)));
}

TEST_CASE("render errors") {
  CHECK_CODE(render_window(diagonal(1)), ErrorCode::TooFewFixations);
  CHECK_CODE(render_window(std::vector<Fixation>{}), ErrorCode::TooFewFixations);
  RenderConfig bad;
  bad.width_px = 1;
  CHECK_CODE(render_window(diagonal(3), bad), ErrorCode::InvalidConfig);
}

TEST_CASE("off-page centroids are clamped") {
  const std::vector<Fixation> fx = {fix(0, 100, -0.2, 0.5), fix(200, 300, 1.4, 1.1)};
  const auto img = render_window(fx);
  CHECK(img.clamped);
  check_rgb(img, {0, to_pixel(0, 0.5, 85, 110).y, false}, 0, 0, 1);
  check_rgb(img, {84, 109, false}, 1, 0, 0);
  const auto p = to_pixel(-0.2, 0.5, 85, 110);
  CHECK(p.clamped);
  CHECK(p.x == 0);
  CHECK_FALSE(to_pixel(1.0, 1.0, 85, 110).clamped);
}

TEST_CASE("word boxes are drawn in gray") {
  const auto layout = make_default_layout();
  RenderConfig cfg;
  cfg.draw_word_boxes = true;
  cfg.width_px = 425;
  cfg.height_px = 550;
  const std::vector<Fixation> fx = {fix(0, 100, 0.9, 0.95), fix(200, 300, 0.95, 0.95)};
  const auto img = render_window(fx, cfg, &layout);
  const auto& r = layout.pages[0].words[0].rect;
  const auto a = to_pixel(r.x0, r.y0, cfg.width_px, cfg.height_px);
  check_rgb(img, a, 0.3f, 0.3f, 0.3f);
  CHECK(render_window(fx, cfg) != img);
}

TEST_CASE("PNG and raw encodings round-trip") {
  const auto img = render_window(diagonal(6));
  const auto raw = encode_raw(img);
  CHECK(raw.substr(0, 4) == "SPRF");
  CHECK(raw.size() == 16 + img.pixels.size() * 4);
  const auto back = decode_raw(raw);
  CHECK(back.pixels == img.pixels);
  CHECK(back.width_px == img.width_px);
  CHECK_CODE(decode_raw(raw.substr(0, 20)), ErrorCode::ParseError);

  const auto png = encode_png(img);
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  REQUIRE(png_image_begin_read_from_memory(&pi, png.data(), png.size()));
  pi.format = PNG_FORMAT_RGB;
  CHECK(pi.width == 85u);
  CHECK(pi.height == 110u);
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(pi));
  REQUIRE(png_image_finish_read(&pi, nullptr, px.data(), 0, nullptr));
  CHECK(px == to_rgb8(img));
}

TEST_CASE("sequential scanplot vertices sit on text lines") {
  const auto layout = make_default_layout();
  const auto& page = layout.pages[0];
  const RenderConfig cfg;
  int on_band = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = generate_segment(default_params(BehaviorLabel::Sequential), layout, 20, seed);
    for (const auto& f : g.fixations) {
      const int py = to_pixel(f.centroid.x, f.centroid.y, cfg.width_px, cfg.height_px).y;
      bool hit = false;
      for (const auto& line : page.lines) {
        hit |= std::abs(to_pixel(0.5, line.y_center, cfg.width_px, cfg.height_px).y - py) <= 1;
      }
      on_band += hit;
      ++total;
    }
  }
  CHECK(on_band >= 0.9 * total);
}
