#pragma once

// Sliding time windows (feature classifiers) and fixation windows (CNNs),
// labeled only when the label is unambiguous.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scanpath/core.hpp"

namespace scanpath {

enum class WindowKind { Time, Fixation };

struct LabeledWindow {
  WindowKind kind = WindowKind::Time;
  std::string session_id;
  double t0_ms = 0.0;
  double t1_ms = 0.0;
  std::size_t first = 0;  // fixation windows: [first, last)
  std::size_t last = 0;
  std::optional<BehaviorLabel> label;  // nullopt = Unlabeled
  double coverage = 0.0;

  bool operator==(const LabeledWindow&) const = default;
};

inline constexpr double kMinWindowS = 2.0;
inline constexpr double kMaxWindowS = 15.0;

/// Windows [t0, t0 + t_s) at t0 = 0, stride, ... while t0 + t_s <= end_ms.
/// Labeled iff fully inside one segment with a final label. Throws
/// BadWindowSize when t_s is outside [2, 15] and InvalidConfig for stride <= 0.
std::vector<LabeledWindow> slide_time_windows(std::span<const Segment> segments, double end_ms,
                                              double t_s, double stride_s = 1.0,
                                              const std::string& session_id = {});

/// Every run of k consecutive fixations (stride 1). Labeled iff at least
/// ceil(0.8 k) of them lie inside one labeled segment.
std::vector<LabeledWindow> slide_fixation_windows(std::span<const Fixation> fixations,
                                                  std::span<const Segment> segments,
                                                  std::size_t k = 10,
                                                  const std::string& session_id = {});

/// Per-fixation predictions: each window's prediction lands on its last
/// fixation. Fixations no window ends on stay nullopt.
std::vector<std::optional<BehaviorLabel>> prediction_timeline(
    std::span<const LabeledWindow> windows, std::span<const BehaviorLabel> predictions,
    std::size_t fixation_count);

/// Tab-separated audit table: session, kind, t0_ms, t1_ms, first, last, label, coverage.
std::string format_window_manifest(std::span<const LabeledWindow> windows);

}  // namespace scanpath
