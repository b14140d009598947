#pragma once

// Window and segment gaze features.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scanpath/core.hpp"

namespace scanpath {

inline constexpr double kDispersionEpsilonCm = 1e-6;

struct FeatureVector {
  double fixation_count = 0.0;
  double mean_fixation_duration_ms = 0.0;
  double fixation_dispersion = 0.0;  // cm
  double mean_saccade_length = 0.0;  // cm
  double rate_vertical_next = 0.0;
  double rate_horizontal_later = 0.0;
  double rate_line_regression = 0.0;
  double rate_regression = 0.0;
  double wpm = 0.0;
  double inverse_dispersion = 0.0;  // 1/cm
  double scanpath_length_cm = 0.0;
  double fbsr = 0.0;

  static constexpr std::size_t kSize = 12;
  static const std::array<std::string_view, kSize>& field_names();
  std::array<double, kSize> as_array() const;
  bool operator==(const FeatureVector&) const = default;
};

struct SegmentSummary {
  double duration_s = 0.0;
  int fixation_count = 0;
  double scanpath_length_cm = 0.0;
  double median_fixation_duration_ms = 0.0;
};

struct SegmentFeatures {
  FeatureVector features;
  SegmentSummary summary;
};

struct WordsPerMinute {
  int words_covered = 0;
  double wpm = 0.0;
};

/// Fixations counted in [t0, t1): start_ms >= t0 and end_ms < t1.
bool fixation_in_window(const Fixation& f, double t0_ms, double t1_ms);

/// Page-unit displacement to centimetres using the page's physical size
/// (US letter when the page is not in the layout).
double displacement_cm(double dx, double dy, int page_index, const DocumentLayout& layout);

/// `saccades` index into `fixations`. Only saccades whose two fixations both
/// fall inside the window contribute. An empty window yields all zeros.
FeatureVector window_features(std::span<const Fixation> fixations,
                              std::span<const Saccade> saccades,
                              const DocumentLayout& layout, double t0_ms,
                              double t1_ms);

/// Distinct words hit by fixation centroids inside the segment, per minute.
/// Throws ZeroDuration.
WordsPerMinute wpm(const Segment& segment, std::span<const Fixation> fixations,
                   const DocumentLayout& layout);

/// Forward-type / (forward-type + regression-type). Throws
/// NoDirectionalSaccades when neither kind is present.
double fbsr(std::span<const Saccade> saccades);

SegmentFeatures segment_features(const Segment& segment,
                                 std::span<const Fixation> fixations,
                                 std::span<const Saccade> saccades,
                                 const DocumentLayout& layout);

/// Comma-separated table: header row of field names, one row per vector.
/// `row_keys` (may be empty) prefixes each row, under `key_header`.
std::string format_feature_table(std::span<const FeatureVector> rows,
                                 std::span<const std::string> row_keys = {},
                                 std::string_view key_header = "key");

}  // namespace scanpath
