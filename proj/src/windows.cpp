#include "scanpath/windows.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace scanpath {

namespace {

std::vector<Segment> sorted_segments(std::span<const Segment> segments) {
  std::vector<Segment> s(segments.begin(), segments.end());
  std::sort(s.begin(), s.end(), [](const Segment& a, const Segment& b) {
    return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.end_ms < b.end_ms;
  });
  return s;
}

}  // namespace

std::vector<LabeledWindow> slide_time_windows(std::span<const Segment> segments, double end_ms,
                                              double t_s, double stride_s,
                                              const std::string& session_id) {
  if (!(t_s >= kMinWindowS && t_s <= kMaxWindowS)) {
    fail(ErrorCode::BadWindowSize, "time window must be within [2, 15] s");
  }
  if (!(stride_s > 0.0)) fail(ErrorCode::InvalidConfig, "stride must be > 0");
  const auto segs = sorted_segments(segments);
  const double len = t_s * 1000.0, stride = stride_s * 1000.0;
  std::vector<LabeledWindow> out;
  for (long long i = 0;; ++i) {
    const double t0 = static_cast<double>(i) * stride;
    const double t1 = t0 + len;
    if (t1 > end_ms) break;
    LabeledWindow w;
    w.kind = WindowKind::Time;
    w.session_id = session_id;
    w.t0_ms = t0;
    w.t1_ms = t1;
    const Segment* best = nullptr;
    double best_overlap = 0.0;
    for (const auto& s : segs) {
      if (s.end_ms <= t0) continue;
      if (s.start_ms >= t1) break;
      const double ov = std::min(s.end_ms, t1) - std::max(s.start_ms, t0);
      if (ov > best_overlap) {
        best_overlap = ov;
        best = &s;
      }
    }
    w.coverage = best_overlap / len;
    if (best && best->start_ms <= t0 && t1 <= best->end_ms) {
      w.coverage = 1.0;
      w.label = best->label_final;
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<LabeledWindow> slide_fixation_windows(std::span<const Fixation> fixations,
                                                  std::span<const Segment> segments,
                                                  std::size_t k, const std::string& session_id) {
  if (k < 2) fail(ErrorCode::BadWindowSize, "fixation window needs k >= 2");
  const auto segs = sorted_segments(segments);
  // Segment index containing each fixation, or -1.
  std::vector<int> owner(fixations.size(), -1);
  for (std::size_t i = 0; i < fixations.size(); ++i) {
    const auto& f = fixations[i];
    auto it = std::upper_bound(segs.begin(), segs.end(), f.start_ms,
                               [](double t, const Segment& s) { return t < s.start_ms; });
    if (it == segs.begin()) continue;
    --it;
    if (f.start_ms >= it->start_ms && f.end_ms < it->end_ms) {
      owner[i] = static_cast<int>(it - segs.begin());
    }
  }
  const std::size_t need = (8 * k + 9) / 10;  // ceil(0.8 k)
  std::vector<LabeledWindow> out;
  if (fixations.size() < k) return out;
  std::vector<std::size_t> counts(segs.size(), 0);
  for (std::size_t i = 0; i + k <= fixations.size(); ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    std::size_t best_n = 0;
    int best = -1;
    for (std::size_t j = i; j < i + k; ++j) {
      if (owner[j] < 0) continue;
      const std::size_t c = ++counts[static_cast<std::size_t>(owner[j])];
      if (c > best_n) {
        best_n = c;
        best = owner[j];
      }
    }
    LabeledWindow w;
    w.kind = WindowKind::Fixation;
    w.session_id = session_id;
    w.first = i;
    w.last = i + k;
    w.t0_ms = fixations[i].start_ms;
    w.t1_ms = fixations[i + k - 1].end_ms;
    w.coverage = static_cast<double>(best_n) / static_cast<double>(k);
    if (best >= 0 && best_n >= need) w.label = segs[static_cast<std::size_t>(best)].label_final;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::optional<BehaviorLabel>> prediction_timeline(
    std::span<const LabeledWindow> windows, std::span<const BehaviorLabel> predictions,
    std::size_t fixation_count) {
  if (windows.size() != predictions.size()) {
    fail(ErrorCode::LengthMismatch, "one prediction per window required");
  }
  std::vector<std::optional<BehaviorLabel>> out(fixation_count);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].last == 0 || windows[i].last > fixation_count) continue;
    out[windows[i].last - 1] = predictions[i];
  }
  return out;
}

std::string format_window_manifest(std::span<const LabeledWindow> windows) {
  std::string out = "session\tkind\tt0_ms\tt1_ms\tfirst\tlast\tlabel\tcoverage\n";
  char buf[256];
  for (const auto& w : windows) {
    const std::string label = w.label ? std::string(to_string(*w.label)) : "unlabeled";
    std::snprintf(buf, sizeof buf, "\t%s\t%.3f\t%.3f\t%zu\t%zu\t%s\t%.6f\n",
                  w.kind == WindowKind::Time ? "time" : "fixation", w.t0_ms, w.t1_ms, w.first,
                  w.last, label.c_str(), w.coverage);
    out += w.session_id;
    out += buf;
  }
  return out;
}

}  // namespace scanpath
