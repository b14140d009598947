#pragma once

// Screen-to-page projection and gaze/viewport log parsing.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scanpath/core.hpp"

namespace scanpath {

struct ScreenPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Everything recorded for one reading session.
struct SessionBundle {
  std::string session_id;
  std::string participant_id;
  Condition condition = Condition::InTheWild;
  std::vector<GazeSample> samples;
  std::vector<PageRect> rect_events;
  DocumentLayout layout;
};

/// ((sx - l) / w, (sy - t) / h) on the rect's page.
PagePoint project_to_pcs(ScreenPoint p, const PageRect& rect, double t_ms = 0.0);

/// Inverse of project_to_pcs.
ScreenPoint unproject(const PagePoint& p, const PageRect& rect);

/// Projects each valid sample with the latest rect event at or before its
/// timestamp. Throws NoViewport if a valid sample precedes every rect.
std::vector<PagePoint> project_stream(const SessionBundle& bundle);

// Log formats. The gaze log is either CSV with header `t_ms,sx,sy,valid` or
// JSON lines with the same fields; the viewport log is JSON lines of PageRect.

std::vector<GazeSample> parse_gaze_log(const std::string& text,
                                       const std::string& session_id = {});
std::vector<PageRect> parse_viewport_log(const std::string& text);
DocumentLayout parse_layout(const std::string& text);

std::string format_gaze_csv(std::span<const GazeSample> samples);
std::string format_viewport_jsonl(std::span<const PageRect> rects);
std::string format_layout_json(const DocumentLayout& layout);

/// Session directory layout shared by the ingester, the generator and the
/// store: gaze.csv, viewport.jsonl, layout.json, session.json.
void write_session_dir(const std::filesystem::path& dir, const SessionBundle& bundle);
SessionBundle read_session_dir(const std::filesystem::path& dir);

}  // namespace scanpath
