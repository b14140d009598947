#pragma once

// Fixation detection (dispersion threshold, I-DT) and saccade direction
// classification against a document layout.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scanpath/core.hpp"

namespace scanpath {

struct FilterConfig {
  double dispersion_threshold = 0.01;  // bounding-box diagonal, page widths
  double min_duration_ms = 80.0;
  double max_gap_ms = 75.0;

  void validate() const;
};

/// Maximal runs of points whose bounding-box diagonal stays within the
/// threshold and span at least min_duration_ms. Runs never cross a page
/// change or an inter-sample gap above max_gap_ms.
std::vector<Fixation> detect_fixations(std::span<const PagePoint> points,
                                       const FilterConfig& cfg = {});

/// Hit rule for words covered: a word whose rect contains the point, else the
/// nearest word center among rects within kWordHitMargin of the point.
inline constexpr double kWordHitMargin = 0.005;
std::optional<int> hit_word(const Page& page, double x, double y);

/// Nearest word by distance to its rect (ties by center distance).
std::optional<int> nearest_word(const Page& page, double x, double y);

/// Index into page.lines of the line whose y_center is closest to y.
std::optional<int> nearest_line(const Page& page, double y);

/// Direction rule table, evaluated in order:
///   no words on the page -> displacement fallback
///   different page        -> LineForward / LineRegression by page order
///   same line             -> dRO >= 2 HorizontalLater, 1 Forward, < 0
///                            Regression, 0 Neutral
///   line +1 and |dx| < 0.1 -> VerticalNext
///   line up / down          -> LineRegression / LineForward
SaccadeClass classify_saccade(const Fixation& from, const Fixation& to,
                              const DocumentLayout& layout);

/// One saccade per adjacent fixation pair. Fewer than two fixations yields
/// an empty list.
std::vector<Saccade> derive_saccades(std::span<const Fixation> fixations,
                                     const DocumentLayout& layout);

std::string format_fixations_jsonl(std::span<const Fixation> fixations);
std::string format_saccades_jsonl(std::span<const Saccade> saccades);
std::vector<Fixation> parse_fixations_jsonl(const std::string& text);
std::vector<Saccade> parse_saccades_jsonl(const std::string& text);

}  // namespace scanpath
