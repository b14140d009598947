#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scanpath/error.hpp"

namespace scanpath {

// ---------------------------------------------------------------------------
// Gaze and page geometry
// ---------------------------------------------------------------------------

/// One raw tracker sample in screen pixels (origin top-left).
struct GazeSample {
  double t_ms = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  bool valid = true;
  std::string session_id;

  bool operator==(const GazeSample&) const = default;
};

/// Bounding rectangle of a rendered page, observed at `t_ms`.
struct PageRect {
  int page_index = 0;
  double l = 0.0;
  double t = 0.0;
  double w = 1.0;
  double h = 1.0;
  double t_ms = 0.0;

  bool operator==(const PageRect&) const = default;
};

/// Gaze position in page-normalized units; [0,1]^2 is the page itself.
struct PagePoint {
  int page_index = 0;
  double x = 0.0;
  double y = 0.0;
  double t_ms = 0.0;

  bool off_page() const { return x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0; }
  bool operator==(const PagePoint&) const = default;
};

struct Fixation {
  double start_ms = 0.0;
  double end_ms = 0.0;
  PagePoint centroid;
  int sample_count = 0;

  double duration_ms() const { return end_ms - start_ms; }
  bool operator==(const Fixation&) const = default;
};

enum class SaccadeClass {
  Forward,
  Regression,
  LineForward,
  LineRegression,
  VerticalNext,
  HorizontalLater,
  Neutral,
};
inline constexpr int kSaccadeClassCount = 7;

std::string_view to_string(SaccadeClass c);
SaccadeClass parse_saccade_class(std::string_view s);

/// Forward-type classes advance in reading order.
constexpr bool is_forward_type(SaccadeClass c) {
  return c == SaccadeClass::Forward || c == SaccadeClass::LineForward ||
         c == SaccadeClass::VerticalNext || c == SaccadeClass::HorizontalLater;
}
constexpr bool is_regression_type(SaccadeClass c) {
  return c == SaccadeClass::Regression || c == SaccadeClass::LineRegression;
}

struct Saccade {
  std::size_t from_idx = 0;
  std::size_t to_idx = 1;
  double dx = 0.0;
  double dy = 0.0;
  double amplitude = 0.0;
  SaccadeClass direction = SaccadeClass::Neutral;

  bool operator==(const Saccade&) const = default;
};

// ---------------------------------------------------------------------------
// Behavior labels and annotation segments
// ---------------------------------------------------------------------------

enum class BehaviorLabel {
  Static,
  Deep,
  Sequential,
  NonSequential,
  Skimming,
  PreviewingMapping,
};
inline constexpr int kBehaviorCount = 6;
inline constexpr std::array<BehaviorLabel, kBehaviorCount> kAllBehaviors = {
    BehaviorLabel::Static,        BehaviorLabel::Deep,
    BehaviorLabel::Sequential,    BehaviorLabel::NonSequential,
    BehaviorLabel::Skimming,      BehaviorLabel::PreviewingMapping};

/// The three behaviors the classifiers are trained on, in class-index order.
inline constexpr std::array<BehaviorLabel, 3> kTrainedBehaviors = {
    BehaviorLabel::Sequential, BehaviorLabel::NonSequential,
    BehaviorLabel::Skimming};

std::string_view to_string(BehaviorLabel label);
BehaviorLabel parse_behavior(std::string_view s);
std::optional<BehaviorLabel> try_parse_behavior(std::string_view s);

/// Index of `label` in kTrainedBehaviors, or -1.
int trained_class_index(BehaviorLabel label);

struct Segment {
  std::string segment_id;
  double start_ms = 0.0;
  double end_ms = 0.0;
  std::optional<BehaviorLabel> label_r1;
  std::optional<BehaviorLabel> label_r2;
  std::optional<BehaviorLabel> label_final;
  std::optional<std::string> override_justification;
  int words_covered = 0;
  double wpm = 0.0;

  double duration_ms() const { return end_ms - start_ms; }
  bool operator==(const Segment&) const = default;
};

/// Throws InvalidSegment / SegmentOverlap when the list breaks ordering,
/// positivity, overlap, or final-label rules.
void validate_segments(std::span<const Segment> segments);
void validate_segment(const Segment& s);

// ---------------------------------------------------------------------------
// Document layout
// ---------------------------------------------------------------------------

/// Axis-aligned box in page-normalized units.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool operator==(const Box&) const = default;
};

struct Word {
  int word_id = 0;
  int reading_order = 0;
  std::string text;
  Box rect;

  bool operator==(const Word&) const = default;
};

struct Line {
  int line_id = 0;
  double y_center = 0.0;
  std::vector<int> word_ids;

  bool operator==(const Line&) const = default;
};

struct Page {
  int page_index = 0;
  double width_cm = 21.59;
  double height_cm = 27.94;
  std::vector<Word> words;
  std::vector<Line> lines;

  bool operator==(const Page&) const = default;
};

inline constexpr double kLetterWidthCm = 21.59;
inline constexpr double kLetterHeightCm = 27.94;

struct DocumentLayout {
  std::vector<Page> pages;

  const Page* find_page(int page_index) const;
  std::size_t word_count() const;
  bool operator==(const DocumentLayout&) const = default;
};

void validate_layout(const DocumentLayout& layout);

// ---------------------------------------------------------------------------
// Session validation
// ---------------------------------------------------------------------------

inline constexpr double kGapReportMs = 500.0;

struct ValidationReport {
  std::size_t sample_count = 0;
  std::size_t invalid_count = 0;
  std::size_t out_of_order_count = 0;
  std::size_t gap_count = 0;
  std::size_t nonfinite_count = 0;
  std::size_t rect_count = 0;
  std::size_t degenerate_rect_count = 0;

  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate_session(std::span<const GazeSample> samples,
                                  std::span<const PageRect> rects);

enum class Condition { Instructed, InTheWild };
std::string_view to_string(Condition c);
Condition parse_condition(std::string_view s);

}  // namespace scanpath
