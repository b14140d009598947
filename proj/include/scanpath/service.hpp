#pragma once

// HTTP front end over SessionStore. The caller's role comes from the
// X-Reviewer-Role header (reviewer1, reviewer2, adjudicator).
//
//   GET  /api/sessions
//   POST /api/sessions                              multipart: gaze, viewport, layout
//   GET  /api/sessions/{id}
//   GET  /api/sessions/{id}/fixations?from&to
//   GET  /api/sessions/{id}/segments
//   POST /api/sessions/{id}/segments                {"start_ms", "end_ms"}
//   PUT  /api/sessions/{id}/segments/{seg}/label    {"label"}
//   PUT  /api/sessions/{id}/segments/{seg}/final    {"label", "justification"?}
//   POST /api/sessions/{id}/segments/{seg}/split    {"t_ms"}
//   GET  /api/sessions/{id}/segments/{seg}/labels/{1|2}
//   GET  /api/sessions/{id}/irr
//   GET  /api/sessions/{id}/predictions?model
//   GET  /api/sessions/{id}/export
//   GET  /api/render/{id}?from&to&w&h               image/png

#include <memory>
#include <string>

#include "scanpath/error.hpp"
#include "scanpath/store.hpp"

namespace scanpath {

/// 404 NotFound, 409 Conflict and SegmentOverlap, 403 Forbidden, 500 Io and
/// SchemaMismatch, 422 for everything else.
int http_status(ErrorCode code);

class AnnotationService {
 public:
  explicit AnnotationService(SessionStore& store, FilterConfig filter = {});
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Returns the bound port; port 0 picks a free one. Throws Io on failure.
  int bind(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace scanpath
