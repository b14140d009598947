#pragma once

// File-backed session store with the dual-reviewer annotation protocol.
//
// <root>/<session_id>/ holds the session bundle (see write_session_dir),
// record.json, fixations.jsonl, saccades.jsonl, segments.json and
// predictions-<model>.json. Trained models live in <root>/models/.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "scanpath/cnn/network.hpp"
#include "scanpath/core.hpp"
#include "scanpath/ingest.hpp"
#include "scanpath/json_io.hpp"
#include "scanpath/oculomotor.hpp"

namespace scanpath {

inline constexpr int kStoreSchemaVersion = 1;

enum class Role { Reviewer1, Reviewer2, Adjudicator };

std::string_view to_string(Role r);
/// Throws Forbidden for anything but reviewer1, reviewer2, adjudicator.
Role parse_role(std::string_view s);

struct SessionRecord {
  std::string session_id;
  std::string participant_id;
  Condition condition = Condition::InTheWild;
  std::map<std::string, std::string> files;  // role -> file name inside the session dir
  std::string created_at;                     // ISO-8601 UTC
  int schema_version = kStoreSchemaVersion;
};

void to_json(json& j, const SessionRecord& r);
void from_json(const json& j, SessionRecord& r);

struct IrrReport {
  std::optional<double> kappa;  // empty when no segment carries both labels
  std::size_t dual_labeled = 0;
  std::size_t agreements = 0;
  std::vector<Segment> disagreements;
};

/// One predicted label (or none) per fixation.
struct PredictionTimeline {
  std::string model;
  std::vector<std::optional<BehaviorLabel>> labels;
};

class SessionStore {
 public:
  /// `fault` is passed to every segments-file write (crash injection).
  explicit SessionStore(std::filesystem::path root, FaultHook fault = {});

  const std::filesystem::path& root() const { return root_; }

  std::vector<SessionRecord> list() const;
  bool exists(const std::string& id) const;
  /// Throws NotFound; SchemaMismatch for an unknown schema_version.
  SessionRecord record(const std::string& id) const;

  /// Stores the bundle and runs fixation detection. Conflict when the id is
  /// taken; an empty id is replaced by a fresh one.
  SessionRecord create(SessionBundle bundle, const FilterConfig& cfg = {});

  SessionBundle bundle(const std::string& id) const;
  std::vector<Fixation> fixations(const std::string& id) const;
  /// Fixations with start_ms >= from and end_ms < to.
  std::vector<Fixation> fixations(const std::string& id, double from_ms, double to_ms) const;
  std::vector<Saccade> saccades(const std::string& id) const;

  /// Stored segments, unfiltered.
  std::vector<Segment> segments(const std::string& id) const;
  /// Segments as `role` may see them (the other reviewer's label is
  /// withheld until both exist; final labels likewise).
  std::vector<Segment> segments_for(const std::string& id, Role role) const;
  static Segment view_for(const Segment& s, Role role);

  /// Reviewer 1 or the adjudicator segments; Conflict on overlap.
  Segment create_segment(const std::string& id, Role role, double start_ms, double end_ms);
  /// Reviewer 1 writes label_r1, reviewer 2 label_r2. Matching labels set
  /// the final label.
  Segment set_label(const std::string& id, const std::string& segment_id, Role role, BehaviorLabel label);
  /// Adjudicator only. Needs both reviewer labels, or a non-empty
  /// justification (override); Conflict otherwise.
  Segment set_final(const std::string& id, const std::string& segment_id, Role role,
                    BehaviorLabel label, std::optional<std::string> justification = std::nullopt);
  /// Splits at t_ms (strictly inside) and clears labels on both halves.
  std::pair<Segment, Segment> split(const std::string& id, const std::string& segment_id, Role role,
                                    double t_ms);
  /// A reviewer's own label or, once both exist, the other's. Forbidden
  /// while withheld.
  std::optional<BehaviorLabel> read_label(const std::string& id, const std::string& segment_id,
                                          Role role, int reviewer) const;

  /// Replaces the segment list wholesale (validated); used for imports.
  void put_segments(const std::string& id, std::vector<Segment> segs);

  IrrReport irr(const std::string& id) const;

  void put_predictions(const std::string& id, const PredictionTimeline& p);
  /// Stored timeline, else one computed from a registered CNN model.
  /// NotFound when neither exists.
  PredictionTimeline predictions(const std::string& id, const std::string& model) const;
  void register_model(const std::string& name, const cnn::Network& net);

  /// start, end (m:ss), label_1, label_2, final_label, words_covered, wpm.
  std::string export_annotation_table(const std::string& id) const;

 private:
  std::filesystem::path dir(const std::string& id) const;
  std::shared_mutex& lock_for(const std::string& id) const;
  std::vector<Segment> load_segments(const std::string& id) const;
  void save_segments(const std::string& id, const std::vector<Segment>& segs) const;
  void ensure_events(const std::string& id) const;
  Segment& find(std::vector<Segment>& segs, const std::string& segment_id) const;
  void refresh_wpm(const std::string& id, Segment& s) const;

  std::filesystem::path root_;
  FaultHook fault_;
  mutable std::mutex locks_mu_;
  mutable std::map<std::string, std::unique_ptr<std::shared_mutex>> locks_;
};

/// "m:ss" with whole seconds truncated.
std::string format_clock(double ms);

/// Tab-separated annotation table for segments whose words_covered and wpm
/// are already filled.
std::string format_annotation_table(const std::vector<Segment>& segments);

}  // namespace scanpath
