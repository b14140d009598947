#include "scanpath/pipeline.hpp"

#include <algorithm>

#include "scanpath/json_io.hpp"
#include "scanpath/metrics.hpp"

namespace scanpath {

SessionEvents extract_events(const SessionBundle& bundle, const FilterConfig& cfg) {
  SessionEvents ev;
  ev.points = project_stream(bundle);
  ev.fixations = detect_fixations(ev.points, cfg);
  ev.saccades = derive_saccades(ev.fixations, bundle.layout);
  return ev;
}

namespace {

LabeledSession make_labeled(const SessionBundle& bundle, std::vector<Segment> segments,
                            const FilterConfig& cfg) {
  SessionEvents ev = extract_events(bundle, cfg);
  LabeledSession out;
  out.session_id = bundle.session_id;
  out.participant_id = bundle.participant_id;
  out.condition = bundle.condition;
  out.layout = bundle.layout;
  out.fixations = std::move(ev.fixations);
  out.saccades = std::move(ev.saccades);
  for (auto& seg : segments) {
    const auto w = wpm(seg, out.fixations, out.layout);
    seg.words_covered = w.words_covered;
    seg.wpm = w.wpm;
  }
  out.segments = std::move(segments);
  return out;
}

}  // namespace

std::vector<LabeledSession> label_corpus(const SyntheticCorpus& corpus, const FilterConfig& cfg) {
  std::vector<LabeledSession> out(corpus.sessions.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    out[i] = make_labeled(corpus.sessions[i].bundle, corpus.sessions[i].segments, cfg);
  }
  return out;
}

std::vector<LabeledSession> load_corpus_dir(const std::filesystem::path& dir,
                                            const FilterConfig& cfg) {
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "session.json")) {
      dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<LabeledSession> out;
  for (const auto& d : dirs) {
    SessionBundle b = read_session_dir(d);
    std::vector<Segment> segs;
    if (std::filesystem::exists(d / "segments.json")) {
      segs = read_json_file(d / "segments.json").get<std::vector<Segment>>();
      validate_segments(segs);
    }
    out.push_back(make_labeled(b, std::move(segs), cfg));
  }
  return out;
}

}  // namespace scanpath
