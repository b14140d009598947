#include "scanpath/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scanpath {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateRect: return "DegenerateRect";
    case ErrorCode::NoViewport: return "NoViewport";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::InvalidSegment: return "InvalidSegment";
    case ErrorCode::SegmentOverlap: return "SegmentOverlap";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyLayout: return "EmptyLayout";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ZeroDuration: return "ZeroDuration";
    case ErrorCode::NoDirectionalSaccades: return "NoDirectionalSaccades";
    case ErrorCode::LayoutTooSmall: return "LayoutTooSmall";
    case ErrorCode::BadWindowSize: return "BadWindowSize";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewFixations: return "TooFewFixations";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateMarginals: return "DegenerateMarginals";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::TooFewParticipants: return "TooFewParticipants";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::Leakage: return "Leakage";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(SaccadeClass c) {
  switch (c) {
    case SaccadeClass::Forward: return "forward";
    case SaccadeClass::Regression: return "regression";
    case SaccadeClass::LineForward: return "line_forward";
    case SaccadeClass::LineRegression: return "line_regression";
    case SaccadeClass::VerticalNext: return "vertical_next";
    case SaccadeClass::HorizontalLater: return "horizontal_later";
    case SaccadeClass::Neutral: return "neutral";
  }
  return "neutral";
}

SaccadeClass parse_saccade_class(std::string_view s) {
  for (int i = 0; i < kSaccadeClassCount; ++i) {
    auto c = static_cast<SaccadeClass>(i);
    if (to_string(c) == s) return c;
  }
  fail(ErrorCode::ParseError, "unknown saccade class '" + std::string(s) + "'");
}

std::string_view to_string(BehaviorLabel label) {
  switch (label) {
    case BehaviorLabel::Static: return "static";
    case BehaviorLabel::Deep: return "deep";
    case BehaviorLabel::Sequential: return "sequential";
    case BehaviorLabel::NonSequential: return "non-sequential";
    case BehaviorLabel::Skimming: return "skimming";
    case BehaviorLabel::PreviewingMapping: return "previewing/mapping";
  }
  return "static";
}

std::optional<BehaviorLabel> try_parse_behavior(std::string_view s) {
  for (auto b : kAllBehaviors) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

BehaviorLabel parse_behavior(std::string_view s) {
  if (auto b = try_parse_behavior(s)) return *b;
  fail(ErrorCode::ParseError, "unknown behavior label '" + std::string(s) + "'");
}

int trained_class_index(BehaviorLabel label) {
  for (std::size_t i = 0; i < kTrainedBehaviors.size(); ++i) {
    if (kTrainedBehaviors[i] == label) return static_cast<int>(i);
  }
  return -1;
}

std::string_view to_string(Condition c) {
  return c == Condition::Instructed ? "instructed" : "in-the-wild";
}

Condition parse_condition(std::string_view s) {
  if (s == "instructed") return Condition::Instructed;
  if (s == "in-the-wild") return Condition::InTheWild;
  fail(ErrorCode::ParseError, "unknown condition '" + std::string(s) + "'");
}

void validate_segment(const Segment& s) {
  if (!std::isfinite(s.start_ms) || !std::isfinite(s.end_ms) ||
      !(s.end_ms > s.start_ms)) {
    fail(ErrorCode::InvalidSegment, "segment '" + s.segment_id +
                                        "' must satisfy end_ms > start_ms");
  }
  if (s.words_covered < 0 || !(s.wpm >= 0.0)) {
    fail(ErrorCode::InvalidSegment,
         "segment '" + s.segment_id + "' has negative words_covered or wpm");
  }
  const bool both = s.label_r1.has_value() && s.label_r2.has_value();
  if (s.label_final && !both && !s.override_justification) {
    fail(ErrorCode::InvalidSegment,
         "segment '" + s.segment_id +
             "' has a final label without both reviewer labels or an override");
  }
}

void validate_segments(std::span<const Segment> segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    validate_segment(segments[i]);
    if (i > 0 && segments[i].start_ms < segments[i - 1].end_ms) {
      if (segments[i].start_ms < segments[i - 1].start_ms) {
        fail(ErrorCode::InvalidSegment, "segments are not time-ordered");
      }
      fail(ErrorCode::SegmentOverlap, "segment '" + segments[i].segment_id +
                                          "' overlaps '" +
                                          segments[i - 1].segment_id + "'");
    }
  }
}

const Page* DocumentLayout::find_page(int page_index) const {
  for (const auto& p : pages) {
    if (p.page_index == page_index) return &p;
  }
  return nullptr;
}

std::size_t DocumentLayout::word_count() const {
  std::size_t n = 0;
  for (const auto& p : pages) n += p.words.size();
  return n;
}

void validate_layout(const DocumentLayout& layout) {
  std::vector<int> orders;
  for (const auto& page : layout.pages) {
    if (!(page.width_cm > 0.0) || !(page.height_cm > 0.0)) {
      fail(ErrorCode::InvalidLayout, "page physical size must be positive");
    }
    std::vector<int> line_of(page.words.size(), -1);
    for (std::size_t li = 0; li < page.lines.size(); ++li) {
      for (int wid : page.lines[li].word_ids) {
        auto it = std::find_if(page.words.begin(), page.words.end(),
                               [&](const Word& w) { return w.word_id == wid; });
        if (it == page.words.end()) {
          fail(ErrorCode::InvalidLayout,
               "line references unknown word " + std::to_string(wid));
        }
        auto wi = static_cast<std::size_t>(it - page.words.begin());
        if (line_of[wi] != -1) {
          fail(ErrorCode::InvalidLayout,
               "word " + std::to_string(wid) + " belongs to two lines");
        }
        line_of[wi] = static_cast<int>(li);
      }
    }
    for (std::size_t wi = 0; wi < page.words.size(); ++wi) {
      const auto& w = page.words[wi];
      const auto& r = w.rect;
      if (!(r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= 1.0 && r.y1 <= 1.0 &&
            r.x0 <= r.x1 && r.y0 <= r.y1)) {
        fail(ErrorCode::InvalidLayout,
             "word " + std::to_string(w.word_id) + " lies outside the page");
      }
      if (line_of[wi] == -1) {
        fail(ErrorCode::InvalidLayout,
             "word " + std::to_string(w.word_id) + " belongs to no line");
      }
      orders.push_back(w.reading_order);
    }
  }
  std::sort(orders.begin(), orders.end());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] != static_cast<int>(i)) {
      fail(ErrorCode::InvalidLayout,
           "reading_order is not a permutation of 0..N-1");
    }
  }
}

ValidationReport validate_session(std::span<const GazeSample> samples,
                                  std::span<const PageRect> rects) {
  ValidationReport r;
  r.sample_count = samples.size();
  r.rect_count = rects.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!s.valid) ++r.invalid_count;
    if (s.valid && (!std::isfinite(s.sx) || !std::isfinite(s.sy))) {
      ++r.nonfinite_count;
    }
    if (i > 0) {
      const double dt = s.t_ms - samples[i - 1].t_ms;
      if (dt < 0.0) ++r.out_of_order_count;
      if (dt > kGapReportMs) ++r.gap_count;
    }
  }
  for (const auto& rect : rects) {
    if (!(rect.w > 0.0) || !(rect.h > 0.0)) ++r.degenerate_rect_count;
  }
  return r;
}

}  // namespace scanpath
