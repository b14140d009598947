#pragma once

// Session bundle -> projected points -> fixations -> saccades.

#include <filesystem>
#include <vector>

#include "scanpath/ingest.hpp"
#include "scanpath/oculomotor.hpp"
#include "scanpath/synth.hpp"

namespace scanpath {

struct SessionEvents {
  std::vector<PagePoint> points;
  std::vector<Fixation> fixations;
  std::vector<Saccade> saccades;
};

SessionEvents extract_events(const SessionBundle& bundle, const FilterConfig& cfg = {});

/// A session with its detected events and labeled segments.
struct LabeledSession {
  std::string session_id;
  std::string participant_id;
  Condition condition = Condition::InTheWild;
  DocumentLayout layout;
  std::vector<Fixation> fixations;
  std::vector<Saccade> saccades;
  std::vector<Segment> segments;
};

/// Runs detection on every session and fills words_covered / wpm on each
/// ground-truth segment.
std::vector<LabeledSession> label_corpus(const SyntheticCorpus& corpus,
                                         const FilterConfig& cfg = {});

/// Reads a directory written by write_corpus.
std::vector<LabeledSession> load_corpus_dir(const std::filesystem::path& dir,
                                            const FilterConfig& cfg = {});

}  // namespace scanpath
