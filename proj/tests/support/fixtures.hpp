#pragma once

// Small builders shared by the unit tests.

#include <doctest.h>

#include <vector>

#include "scanpath/core.hpp"

#define CHECK_CODE(expr, ec)                                  \
  do {                                                        \
    try {                                                     \
      (void)(expr);                                           \
      FAIL_CHECK("no error from " #expr);                     \
    } catch (const ::scanpath::Error& e_) {                   \
      CHECK_MESSAGE(e_.code() == (ec), ::scanpath::to_string(e_.code())); \
    }                                                         \
  } while (0)

namespace fixture {

using namespace scanpath;

inline Fixation fix(double start, double end, double x, double y, int page = 0) {
  Fixation f;
  f.start_ms = start;
  f.end_ms = end;
  f.centroid = PagePoint{page, x, y, start};
  f.sample_count = 1;
  return f;
}

// One fixation per word center, back to back, `dur_ms` each.
inline std::vector<Fixation> on_words(const Page& page, const std::vector<int>& word_ids,
                                      double t0, double dur_ms) {
  std::vector<Fixation> out;
  double t = t0;
  for (int id : word_ids) {
    const auto& r = page.words[static_cast<std::size_t>(id)].rect;
    out.push_back(fix(t, t + dur_ms, r.cx(), r.cy()));
    t += dur_ms + 1.0;
  }
  return out;
}

inline Segment segment(double a, double b) {
  Segment s;
  s.start_ms = a;
  s.end_ms = b;
  return s;
}

}  // namespace fixture
