#pragma once

// Labeled synthetic scanpaths for the six reading-behavior archetypes.
//
// Every archetype is a position process over the document's words plus a
// timing process (log-normal fixation durations and inter-fixation gaps).
// Medians come from per-behavior corpus statistics; the
// generator emits the same session bundles the ingester consumes, plus
// ground-truth segments.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "scanpath/core.hpp"
#include "scanpath/ingest.hpp"

namespace scanpath {

/// Log-normal distribution given by its median and the standard deviation
/// of the log ("dispersion").
struct LogNormal {
  double median = 1.0;
  double dispersion = 0.0;

  double sample(std::mt19937_64& rng) const;
  /// Median and IQR -> log-normal with the same quartiles.
  static LogNormal from_median_iqr(double median, double iqr);
};

/// Where an archetype's per-segment measurements are expected to land:
/// (wpm, inverse fixation dispersion in 1/cm, FBSR).
struct FrameworkRegion {
  double wpm_min = 0.0;
  double wpm_max = 1e9;
  double inv_disp_min = 0.0;
  double inv_disp_max = 1e9;
  double fbsr_min = 0.0;
  double fbsr_max = 1.0;

  bool contains(double wpm, double inv_disp, double fbsr) const;
};

struct ArchetypeParams {
  BehaviorLabel label = BehaviorLabel::Sequential;
  LogNormal segment_duration_s;
  /// Cursor velocity for line-following archetypes (Sequential,
  /// NonSequential, Deep): mean forward step = wpm * interval / 60000 words.
  LogNormal target_wpm;
  LogNormal fixation_duration_ms;
  /// Time between one fixation's end and the next one's start.
  LogNormal gap_ms;
  double sequentiality = 0.0;        // probability of advancing in reading order
  double cluster_radius = 0.02;      // Static, page units
  int reread_passes = 3;             // Deep: passes over each re-read span
  int reread_span_words = 5;         // Deep
  double skip_geometric_mean = 4.0;  // Skimming: mean forward step, words
  double page_span = 0.8;            // PreviewingMapping: fraction of text block
  double jitter_sigma = 0.0012;      // per-sample gaze noise, page units
  FrameworkRegion region;
};

ArchetypeParams default_params(BehaviorLabel label);

/// Parameters for the instructed-reading condition (cleaner, slower
/// Sequential and Deep; Skimming unchanged).
ArchetypeParams instructed_params(BehaviorLabel label);

struct GeneratedSegment {
  std::vector<Fixation> fixations;
  std::vector<Saccade> saccades;
  Segment segment;
};

/// Reading position carried across the segments of a session.
struct ReadingCursor {
  int position = 0;  // index into words sorted by reading order
};

/// Generates one segment starting at `start_ms`. Throws LayoutTooSmall when
/// the layout has fewer than 10 words and the archetype reads text.
GeneratedSegment generate_segment(const ArchetypeParams& params,
                                  const DocumentLayout& layout, double duration_s,
                                  std::uint64_t rng_seed, double start_ms = 0.0);
GeneratedSegment generate_segment(const ArchetypeParams& params,
                                  const DocumentLayout& layout, double duration_s,
                                  std::mt19937_64& rng, double start_ms,
                                  ReadingCursor& cursor);

/// Single-page US-letter passage: `paragraphs` x `lines_per_paragraph` lines
/// of `words_per_line` words.
DocumentLayout make_default_layout(int paragraphs = 7, int lines_per_paragraph = 6,
                                   int words_per_line = 12);

struct SyntheticParticipant {
  std::string participant_id;
  std::uint64_t seed = 0;
  std::vector<ArchetypeParams> params;  // indexed by BehaviorLabel
  std::vector<double> grammar_weights;  // indexed by BehaviorLabel
};

struct SessionSpec {
  double mean_behaviors = 12.37;
  double open_with_preview = 0.5;
  std::vector<double> grammar_weights = {0.05, 0.07, 0.52, 0.15, 0.17, 0.04};
  double participant_sigma = 0.15;
  bool include_instructed = false;
  double instructed_segment_s = 20.0;
  double sample_rate_hz = 60.0;
  DocumentLayout layout = make_default_layout();
};

struct SyntheticSession {
  SessionBundle bundle;
  std::vector<Segment> segments;    // ground truth; r1 = r2 = final
  std::vector<Fixation> planned;    // fixations the samples were drawn from
};

struct SyntheticCorpus {
  std::vector<SyntheticParticipant> participants;
  std::vector<SyntheticSession> sessions;
};

SyntheticParticipant make_participant(int index, std::uint64_t corpus_seed,
                                      const SessionSpec& spec);

SyntheticCorpus generate_corpus(int n_participants, const SessionSpec& spec = {},
                                std::uint64_t seed = 7);

/// Renders a fixation plan to 60 Hz screen samples with scroll events.
void emit_samples(const std::vector<Fixation>& planned, double session_end_ms,
                  double jitter_sigma, double sample_rate_hz, std::mt19937_64& rng,
                  SessionBundle& bundle, const std::vector<double>& jitter_per_fixation = {});

/// One directory per session (see write_session_dir) plus segments.json.
void write_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

}  // namespace scanpath
