#include "scanpath/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "scanpath/json_io.hpp"

namespace scanpath {

namespace {

struct Rgb {
  float r, g, b;
};

Rgb vertex_color(std::size_t i, std::size_t n) {
  const float t = n > 1 ? static_cast<float>(static_cast<double>(i) / static_cast<double>(n - 1))
                        : 0.0f;
  return {t, 0.0f, 1.0f - t};
}

Rgb lerp(Rgb a, Rgb b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

class Canvas {
 public:
  explicit Canvas(ScanplotImage& img) : img_(img) {}

  void put(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width_px || y >= img_.height_px) return;
    float* p = &img_.pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(img_.width_px) +
                             static_cast<std::size_t>(x)) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  // Integer Bresenham; color interpolated by step along the major axis.
  void line(int x0, int y0, int x1, int y1, Rgb c0, Rgb c1) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    const int steps = std::max(dx, -dy);
    int err = dx + dy;
    for (int s = 0;; ++s) {
      put(x0, y0, steps > 0 ? lerp(c0, c1, static_cast<float>(s) / static_cast<float>(steps)) : c0);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void disc(int cx, int cy, int r, Rgb c) {
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x) {
        if (x * x + y * y <= r * r) put(cx + x, cy + y, c);
      }
    }
  }

  void outline(int x0, int y0, int x1, int y1, Rgb c) {
    for (int x = x0; x <= x1; ++x) {
      put(x, y0, c);
      put(x, y1, c);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0, y, c);
      put(x1, y, c);
    }
  }

 private:
  ScanplotImage& img_;
};

}  // namespace

PixelPos to_pixel(double x, double y, int width_px, int height_px) {
  PixelPos p;
  const double fx = x * static_cast<double>(width_px - 1);
  const double fy = y * static_cast<double>(height_px - 1);
  p.x = static_cast<int>(std::lround(std::clamp(fx, 0.0, static_cast<double>(width_px - 1))));
  p.y = static_cast<int>(std::lround(std::clamp(fy, 0.0, static_cast<double>(height_px - 1))));
  p.clamped = x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0;
  return p;
}

void render_into(std::span<const Fixation> fixations, const RenderConfig& cfg,
                 const DocumentLayout* layout, ScanplotImage& out) {
  if (fixations.size() < 2) fail(ErrorCode::TooFewFixations, "need at least 2 fixations");
  if (cfg.width_px < 2 || cfg.height_px < 2) {
    fail(ErrorCode::InvalidConfig, "image must be at least 2x2 pixels");
  }
  out.width_px = cfg.width_px;
  out.height_px = cfg.height_px;
  out.pixels.assign(static_cast<std::size_t>(cfg.width_px) * static_cast<std::size_t>(cfg.height_px) * 3,
                    0.0f);
  out.first_fixation = 0;
  out.last_fixation = fixations.size() - 1;
  out.clamped = false;
  Canvas canvas(out);

  if (cfg.draw_word_boxes && layout) {
    const Page* page = layout->find_page(fixations.front().centroid.page_index);
    if (page) {
      const Rgb gray{cfg.word_box_gray, cfg.word_box_gray, cfg.word_box_gray};
      for (const auto& w : page->words) {
        const auto a = to_pixel(w.rect.x0, w.rect.y0, cfg.width_px, cfg.height_px);
        const auto b = to_pixel(w.rect.x1, w.rect.y1, cfg.width_px, cfg.height_px);
        canvas.outline(a.x, a.y, b.x, b.y, gray);
      }
    }
  }

  const std::size_t n = fixations.size();
  std::vector<PixelPos> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = to_pixel(fixations[i].centroid.x, fixations[i].centroid.y, cfg.width_px, cfg.height_px);
    out.clamped = out.clamped || pos[i].clamped;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    canvas.line(pos[i].x, pos[i].y, pos[i + 1].x, pos[i + 1].y, vertex_color(i, n),
                vertex_color(i + 1, n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    canvas.disc(pos[i].x, pos[i].y, cfg.disc_radius_px, vertex_color(i, n));
  }
}

ScanplotImage render_window(std::span<const Fixation> fixations, const RenderConfig& cfg,
                            const DocumentLayout* layout) {
  ScanplotImage img;
  render_into(fixations, cfg, layout, img);
  return img;
}

ScanplotImage render_session(std::span<const Fixation> fixations, const DocumentLayout& layout,
                             const RenderConfig& cfg) {
  if (fixations.size() < 2) fail(ErrorCode::TooFewFixations, "need at least 2 fixations");
  ScanplotImage img;
  render_into(fixations, cfg, &layout, img);
  return img;
}

std::vector<std::uint8_t> to_rgb8(const ScanplotImage& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.pixels[i], 0.0f, 1.0f) * 255.0f));
  }
  return out;
}

namespace {

void append_png_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void flush_nothing(png_structp) {}

}  // namespace

std::string encode_png(const ScanplotImage& img) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "png encoding failed");
  }
  png_set_write_fn(png, &out, append_png_bytes, flush_nothing);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width_px),
               static_cast<png_uint_32>(img.height_px), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto rgb = to_rgb8(img);
  for (int y = 0; y < img.height_px; ++y) {
    png_write_row(png, const_cast<png_bytep>(rgb.data()) +
                           static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width_px) * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const ScanplotImage& img) {
  write_file_atomic(path, encode_png(img));
}

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_raw(const ScanplotImage& img) {
  std::string out = "SPRF";
  put_u32(out, static_cast<std::uint32_t>(img.width_px));
  put_u32(out, static_cast<std::uint32_t>(img.height_px));
  put_u32(out, 3);
  for (float f : img.pixels) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
  }
  return out;
}

ScanplotImage decode_raw(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "SPRF") != 0) {
    fail(ErrorCode::ParseError, "not a raw scanplot");
  }
  ScanplotImage img;
  img.width_px = static_cast<int>(get_u32(bytes, 4));
  img.height_px = static_cast<int>(get_u32(bytes, 8));
  const std::uint32_t channels = get_u32(bytes, 12);
  const std::size_t n = static_cast<std::size_t>(img.width_px) * static_cast<std::size_t>(img.height_px) * 3;
  if (channels != 3 || bytes.size() != 16 + 4 * n) fail(ErrorCode::ParseError, "raw scanplot size mismatch");
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(bytes, 16 + 4 * i);
    std::memcpy(&img.pixels[i], &bits, sizeof bits);
  }
  return img;
}

void write_raw(const std::filesystem::path& path, const ScanplotImage& img) {
  write_file_atomic(path, encode_raw(img));
}

}  // namespace scanpath
