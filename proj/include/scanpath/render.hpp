#pragma once

// Scanplot rasterizer: fixation polyline on black, blue at the first
// fixation to red at the last.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scanpath/core.hpp"

namespace scanpath {

struct RenderConfig {
  int width_px = 85;
  int height_px = 110;
  int disc_radius_px = 2;
  bool draw_word_boxes = false;
  float word_box_gray = 0.3f;
};

struct ScanplotImage {
  int width_px = 0;
  int height_px = 0;
  std::vector<float> pixels;  // height x width x 3, row-major, values in [0,1]
  std::string session_id;
  std::size_t first_fixation = 0;
  std::size_t last_fixation = 0;  // inclusive
  bool clamped = false;           // some centroid fell outside the page

  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_px) +
                   static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)];
  }
  bool operator==(const ScanplotImage&) const = default;
};

/// Renders fixations as given (k >= 2, else TooFewFixations). Pass a layout
/// to draw word boxes when the config asks for them.
ScanplotImage render_window(std::span<const Fixation> fixations, const RenderConfig& cfg = {},
                            const DocumentLayout* layout = nullptr);

/// Whole-session overlay on the session's first page geometry.
ScanplotImage render_session(std::span<const Fixation> fixations, const DocumentLayout& layout,
                             const RenderConfig& cfg = {});

/// Renders into a caller-owned buffer (resized as needed); the streaming
/// path reuses one buffer across frames.
void render_into(std::span<const Fixation> fixations, const RenderConfig& cfg,
                 const DocumentLayout* layout, ScanplotImage& out);

/// Image pixel for a page point; flags clamping.
struct PixelPos {
  int x = 0;
  int y = 0;
  bool clamped = false;
};
PixelPos to_pixel(double x, double y, int width_px, int height_px);

std::vector<std::uint8_t> to_rgb8(const ScanplotImage& img);
/// 8-bit RGB PNG.
std::string encode_png(const ScanplotImage& img);
void write_png(const std::filesystem::path& path, const ScanplotImage& img);

/// Raw sidecar: "SPRF", uint32 width, height, channels, then float32 pixels,
/// all little-endian.
std::string encode_raw(const ScanplotImage& img);
ScanplotImage decode_raw(const std::string& bytes);
void write_raw(const std::filesystem::path& path, const ScanplotImage& img);

}  // namespace scanpath
