#include "scanpath/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "scanpath/cnn/train.hpp"
#include "scanpath/metrics.hpp"
#include "scanpath/pipeline.hpp"
#include "scanpath/stats.hpp"

namespace fs = std::filesystem;

namespace scanpath {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Reviewer1: return "reviewer1";
    case Role::Reviewer2: return "reviewer2";
    case Role::Adjudicator: return "adjudicator";
  }
  return "reviewer1";
}

Role parse_role(std::string_view s) {
  if (s == "reviewer1") return Role::Reviewer1;
  if (s == "reviewer2") return Role::Reviewer2;
  if (s == "adjudicator") return Role::Adjudicator;
  fail(ErrorCode::Forbidden, "unknown reviewer role '" + std::string(s) + "'");
}

void to_json(json& j, const SessionRecord& r) {
  j = {{"session_id", r.session_id},         {"participant_id", r.participant_id},
       {"condition", to_string(r.condition)}, {"files", r.files},
       {"created_at", r.created_at},         {"schema_version", r.schema_version}};
}

void from_json(const json& j, SessionRecord& r) {
  r.session_id = j.at("session_id").get<std::string>();
  r.participant_id = j.value("participant_id", std::string());
  r.condition = parse_condition(j.value("condition", std::string("in-the-wild")));
  r.files = j.value("files", std::map<std::string, std::string>{});
  r.created_at = j.value("created_at", std::string());
  r.schema_version = j.at("schema_version").get<int>();
}

namespace {

const std::map<std::string, std::string> kFiles = {
    {"gaze", "gaze.csv"},           {"viewport", "viewport.jsonl"},
    {"layout", "layout.json"},      {"fixations", "fixations.jsonl"},
    {"saccades", "saccades.jsonl"}, {"segments", "segments.json"}};

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128 || id == "." || id == ".." || id == "models") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string label_cell(const std::optional<BehaviorLabel>& l) {
  return l ? std::string(to_string(*l)) : std::string();
}

}  // namespace

SessionStore::SessionStore(fs::path root, FaultHook fault) : root_(std::move(root)), fault_(std::move(fault)) {
  fs::create_directories(root_);
}

fs::path SessionStore::dir(const std::string& id) const {
  if (!valid_id(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  return root_ / id;
}

std::shared_mutex& SessionStore::lock_for(const std::string& id) const {
  std::lock_guard<std::mutex> g(locks_mu_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::shared_mutex>();
  return *slot;
}

bool SessionStore::exists(const std::string& id) const {
  return valid_id(id) && fs::exists(root_ / id / "session.json");
}

std::vector<SessionRecord> SessionStore::list() const {
  std::vector<SessionRecord> out;
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root_)) {
    if (e.is_directory() && fs::exists(e.path() / "session.json")) ids.push_back(e.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) out.push_back(record(id));
  return out;
}

SessionRecord SessionStore::record(const std::string& id) const {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  const fs::path d = dir(id);
  if (fs::exists(d / "record.json")) {
    const json j = read_json_file(d / "record.json");
    if (!j.contains("schema_version") || j.at("schema_version") != kStoreSchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "session '" + id + "' has an unsupported schema_version");
    }
    return j.get<SessionRecord>();
  }
  // Imported directory (e.g. a synthetic corpus) without a record yet.
  const json meta = read_json_file(d / "session.json");
  SessionRecord r;
  r.session_id = id;
  r.participant_id = meta.value("participant_id", std::string());
  r.condition = parse_condition(meta.value("condition", std::string("in-the-wild")));
  r.files = kFiles;
  return r;
}

SessionRecord SessionStore::create(SessionBundle bundle, const FilterConfig& cfg) {
  static std::atomic<unsigned> counter{0};
  if (bundle.session_id.empty()) {
    const auto ticks = std::chrono::system_clock::now().time_since_epoch().count();
    bundle.session_id = "S" + std::to_string(ticks) + "-" + std::to_string(counter++);
  }
  const std::string id = bundle.session_id;
  const fs::path d = dir(id);
  std::unique_lock lk(lock_for(id));
  if (fs::exists(d / "session.json")) fail(ErrorCode::Conflict, "session '" + id + "' already exists");
  const SessionEvents ev = extract_events(bundle, cfg);
  write_session_dir(d, bundle);
  write_file_atomic(d / "fixations.jsonl", format_fixations_jsonl(ev.fixations));
  write_file_atomic(d / "saccades.jsonl", format_saccades_jsonl(ev.saccades));
  write_file_atomic(d / "segments.json", "[]\n", fault_);
  SessionRecord r;
  r.session_id = id;
  r.participant_id = bundle.participant_id;
  r.condition = bundle.condition;
  r.files = kFiles;
  r.created_at = now_iso();
  write_file_atomic(d / "record.json", json(r).dump(2) + "\n");
  return r;
}

SessionBundle SessionStore::bundle(const std::string& id) const {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  std::shared_lock lk(lock_for(id));
  return read_session_dir(dir(id));
}

void SessionStore::ensure_events(const std::string& id) const {
  const fs::path d = dir(id);
  if (fs::exists(d / "fixations.jsonl") && fs::exists(d / "saccades.jsonl")) return;
  std::unique_lock lk(lock_for(id));
  if (fs::exists(d / "fixations.jsonl") && fs::exists(d / "saccades.jsonl")) return;
  const SessionEvents ev = extract_events(read_session_dir(d));
  write_file_atomic(d / "fixations.jsonl", format_fixations_jsonl(ev.fixations));
  write_file_atomic(d / "saccades.jsonl", format_saccades_jsonl(ev.saccades));
}

std::vector<Fixation> SessionStore::fixations(const std::string& id) const {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  ensure_events(id);
  std::shared_lock lk(lock_for(id));
  return parse_fixations_jsonl(read_text_file(dir(id) / "fixations.jsonl"));
}

std::vector<Fixation> SessionStore::fixations(const std::string& id, double from_ms, double to_ms) const {
  auto all = fixations(id);
  std::vector<Fixation> out;
  for (const auto& f : all) {
    if (fixation_in_window(f, from_ms, to_ms)) out.push_back(f);
  }
  return out;
}

std::vector<Saccade> SessionStore::saccades(const std::string& id) const {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  ensure_events(id);
  std::shared_lock lk(lock_for(id));
  return parse_saccades_jsonl(read_text_file(dir(id) / "saccades.jsonl"));
}

std::vector<Segment> SessionStore::load_segments(const std::string& id) const {
  const fs::path p = dir(id) / "segments.json";
  if (!fs::exists(p)) return {};
  auto segs = read_json_file(p).get<std::vector<Segment>>();
  validate_segments(segs);
  return segs;
}

void SessionStore::save_segments(const std::string& id, const std::vector<Segment>& segs) const {
  validate_segments(segs);
  write_file_atomic(dir(id) / "segments.json", json(segs).dump(1) + "\n", fault_);
}

std::vector<Segment> SessionStore::segments(const std::string& id) const {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  std::shared_lock lk(lock_for(id));
  return load_segments(id);
}

Segment SessionStore::view_for(const Segment& s, Role role) {
  Segment v = s;
  const bool both = s.label_r1 && s.label_r2;
  if (role == Role::Adjudicator || both) return v;
  if (role == Role::Reviewer1) v.label_r2.reset();
  if (role == Role::Reviewer2) v.label_r1.reset();
  v.label_final.reset();
  v.override_justification.reset();
  return v;
}

std::vector<Segment> SessionStore::segments_for(const std::string& id, Role role) const {
  auto segs = segments(id);
  for (auto& s : segs) s = view_for(s, role);
  return segs;
}

Segment& SessionStore::find(std::vector<Segment>& segs, const std::string& segment_id) const {
  for (auto& s : segs) {
    if (s.segment_id == segment_id) return s;
  }
  fail(ErrorCode::NotFound, "no segment '" + segment_id + "'");
}

void SessionStore::refresh_wpm(const std::string& id, Segment& s) const {
  const auto fx = parse_fixations_jsonl(read_text_file(dir(id) / "fixations.jsonl"));
  const auto layout = parse_layout(read_text_file(dir(id) / "layout.json"));
  const auto w = wpm(s, fx, layout);
  s.words_covered = w.words_covered;
  s.wpm = w.wpm;
}

namespace {

std::string next_segment_id(const std::vector<Segment>& segs) {
  int next = 1;
  for (const auto& s : segs) {
    if (s.segment_id.rfind("seg-", 0) == 0) {
      try {
        next = std::max(next, std::stoi(s.segment_id.substr(4)) + 1);
      } catch (const std::exception&) {
      }
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "seg-%04d", next);
  return buf;
}

}  // namespace

Segment SessionStore::create_segment(const std::string& id, Role role, double start_ms, double end_ms) {
  if (role == Role::Reviewer2) fail(ErrorCode::Forbidden, "reviewer2 cannot create segments");
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  ensure_events(id);
  std::unique_lock lk(lock_for(id));
  auto segs = load_segments(id);
  Segment s;
  s.segment_id = next_segment_id(segs);
  s.start_ms = start_ms;
  s.end_ms = end_ms;
  validate_segment(s);
  for (const auto& o : segs) {
    if (start_ms < o.end_ms && o.start_ms < end_ms) {
      fail(ErrorCode::Conflict, "segment overlaps '" + o.segment_id + "'");
    }
  }
  refresh_wpm(id, s);
  segs.push_back(s);
  std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.start_ms < b.start_ms; });
  save_segments(id, segs);
  return s;
}

Segment SessionStore::set_label(const std::string& id, const std::string& segment_id, Role role,
                                BehaviorLabel label) {
  if (role == Role::Adjudicator) fail(ErrorCode::Forbidden, "the adjudicator sets final labels only");
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  std::unique_lock lk(lock_for(id));
  auto segs = load_segments(id);
  Segment& s = find(segs, segment_id);
  (role == Role::Reviewer1 ? s.label_r1 : s.label_r2) = label;
  if (s.label_r1 && s.label_r2 && *s.label_r1 == *s.label_r2 && !s.override_justification) {
    s.label_final = *s.label_r1;
  }
  const Segment out = s;
  save_segments(id, segs);
  return view_for(out, role);
}

Segment SessionStore::set_final(const std::string& id, const std::string& segment_id, Role role,
                                BehaviorLabel label, std::optional<std::string> justification) {
  if (role != Role::Adjudicator) fail(ErrorCode::Forbidden, "only the adjudicator sets final labels");
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  std::unique_lock lk(lock_for(id));
  auto segs = load_segments(id);
  Segment& s = find(segs, segment_id);
  const bool both = s.label_r1 && s.label_r2;
  const bool override = justification && !justification->empty();
  if (!both && !override) {
    fail(ErrorCode::Conflict, "final label needs both reviewer labels or an override justification");
  }
  s.label_final = label;
  if (override) s.override_justification = justification;
  const Segment out = s;
  save_segments(id, segs);
  return out;
}

std::pair<Segment, Segment> SessionStore::split(const std::string& id, const std::string& segment_id,
                                                Role role, double t_ms) {
  if (role == Role::Reviewer2) fail(ErrorCode::Forbidden, "reviewer2 cannot split segments");
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  ensure_events(id);
  std::unique_lock lk(lock_for(id));
  auto segs = load_segments(id);
  Segment& s = find(segs, segment_id);
  if (!(t_ms > s.start_ms && t_ms < s.end_ms)) {
    fail(ErrorCode::InvalidSegment, "split point must lie strictly inside the segment");
  }
  Segment a;
  a.segment_id = s.segment_id;
  a.start_ms = s.start_ms;
  a.end_ms = t_ms;
  Segment b;
  b.segment_id = next_segment_id(segs);
  b.start_ms = t_ms;
  b.end_ms = s.end_ms;
  refresh_wpm(id, a);
  refresh_wpm(id, b);
  s = a;
  segs.push_back(b);
  std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) { return x.start_ms < y.start_ms; });
  save_segments(id, segs);
  return {a, b};
}

std::optional<BehaviorLabel> SessionStore::read_label(const std::string& id, const std::string& segment_id,
                                                      Role role, int reviewer) const {
  if (reviewer != 1 && reviewer != 2) fail(ErrorCode::NotFound, "reviewer must be 1 or 2");
  auto segs = segments(id);
  Segment& s = find(segs, segment_id);
  const bool own = (reviewer == 1 && role == Role::Reviewer1) || (reviewer == 2 && role == Role::Reviewer2);
  if (role != Role::Adjudicator && !own && !(s.label_r1 && s.label_r2)) {
    fail(ErrorCode::Forbidden, "the other reviewer's label is withheld until both labels exist");
  }
  return reviewer == 1 ? s.label_r1 : s.label_r2;
}

void SessionStore::put_segments(const std::string& id, std::vector<Segment> segs) {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  ensure_events(id);
  std::unique_lock lk(lock_for(id));
  for (auto& s : segs) refresh_wpm(id, s);
  save_segments(id, segs);
}

IrrReport SessionStore::irr(const std::string& id) const {
  IrrReport r;
  std::vector<BehaviorLabel> a, b;
  for (const auto& s : segments(id)) {
    if (!(s.label_r1 && s.label_r2)) continue;
    ++r.dual_labeled;
    a.push_back(*s.label_r1);
    b.push_back(*s.label_r2);
    if (*s.label_r1 == *s.label_r2) {
      ++r.agreements;
    } else {
      r.disagreements.push_back(s);
    }
  }
  if (!a.empty()) r.kappa = cohens_kappa(a, b);
  return r;
}

void SessionStore::put_predictions(const std::string& id, const PredictionTimeline& p) {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  if (!valid_id(p.model)) fail(ErrorCode::InvalidConfig, "bad model name");
  json labels = json::array();
  for (const auto& l : p.labels) labels.push_back(l ? json(std::string(to_string(*l))) : json(nullptr));
  std::unique_lock lk(lock_for(id));
  write_file_atomic(dir(id) / ("predictions-" + p.model + ".json"),
                    json{{"model", p.model}, {"labels", labels}}.dump() + "\n");
}

void SessionStore::register_model(const std::string& name, const cnn::Network& net) {
  if (!valid_id(name)) fail(ErrorCode::InvalidConfig, "bad model name");
  fs::create_directories(root_ / "models");
  cnn::save_checkpoint(root_ / "models" / (name + ".spcn"), net);
}

PredictionTimeline SessionStore::predictions(const std::string& id, const std::string& model) const {
  if (!exists(id)) fail(ErrorCode::NotFound, "no session '" + id + "'");
  if (!valid_id(model)) fail(ErrorCode::NotFound, "no model '" + model + "'");
  PredictionTimeline out;
  out.model = model;
  const fs::path stored = dir(id) / ("predictions-" + model + ".json");
  if (fs::exists(stored)) {
    std::shared_lock lk(lock_for(id));
    const json doc = read_json_file(stored);
    for (const auto& l : doc.at("labels")) {
      out.labels.push_back(l.is_null() ? std::nullopt : std::optional(parse_behavior(l.get<std::string>())));
    }
    return out;
  }
  const fs::path ckpt = root_ / "models" / (model + ".spcn");
  if (!fs::exists(ckpt)) fail(ErrorCode::NotFound, "no predictions or model '" + model + "'");
  const auto net = cnn::load_checkpoint(ckpt);
  const auto fx = fixations(id);
  out.labels.assign(fx.size(), std::nullopt);
  for (const auto& p : cnn::predict_stream(net, fx)) {
    out.labels[p.fixation_index] = kTrainedBehaviors[static_cast<std::size_t>(p.label)];
  }
  return out;
}

std::string format_clock(double ms) {
  const long s = static_cast<long>(std::floor(ms / 1000.0));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%ld:%02ld", s / 60, s % 60);
  return buf;
}

std::string format_annotation_table(const std::vector<Segment>& segments) {
  std::string out = "start\tend\tlabel_1\tlabel_2\tfinal_label\twords_covered\twpm\n";
  char buf[64];
  for (const auto& s : segments) {
    std::snprintf(buf, sizeof buf, "%.2f", s.wpm);
    out += format_clock(s.start_ms) + '\t' + format_clock(s.end_ms) + '\t' + label_cell(s.label_r1) + '\t' +
           label_cell(s.label_r2) + '\t' + label_cell(s.label_final) + '\t' +
           std::to_string(s.words_covered) + '\t' + buf + '\n';
  }
  return out;
}

std::string SessionStore::export_annotation_table(const std::string& id) const {
  auto segs = segments(id);
  ensure_events(id);
  std::shared_lock lk(lock_for(id));
  for (auto& s : segs) refresh_wpm(id, s);
  return format_annotation_table(segs);
}

}  // namespace scanpath
