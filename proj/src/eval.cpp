#include "scanpath/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <set>

#include "scanpath/metrics.hpp"
#include "scanpath/windows.hpp"

namespace scanpath {

long Confusion::total() const {
  long t = 0;
  for (long v : counts) t += v;
  return t;
}

long Confusion::support(int c) const {
  long s = 0;
  for (int p = 0; p < k; ++p) s += at(c, p);
  return s;
}

Confusion& Confusion::operator+=(const Confusion& o) {
  if (o.k != k) fail(ErrorCode::ShapeMismatch, "confusion matrices differ in size");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  return *this;
}

Metrics metrics_from_confusion(const Confusion& c) {
  if (c.k < 1 || c.counts.size() != static_cast<std::size_t>(c.k * c.k)) {
    fail(ErrorCode::ShapeMismatch, "confusion matrix is not square");
  }
  for (long v : c.counts) {
    if (v < 0) fail(ErrorCode::DomainError, "negative confusion count");
  }
  const long total = c.total();
  if (total == 0) fail(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  Metrics m;
  long trace = 0;
  int counted = 0;
  for (int i = 0; i < c.k; ++i) {
    ClassMetrics cm;
    const long tp = c.at(i, i);
    trace += tp;
    long predicted = 0;
    for (int t = 0; t < c.k; ++t) predicted += c.at(t, i);
    cm.support = c.support(i);
    cm.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    cm.recall = cm.support > 0 ? static_cast<double>(tp) / static_cast<double>(cm.support) : 0.0;
    cm.f1 = cm.precision + cm.recall > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    m.per_class.push_back(cm);
    if (cm.support == 0) {
      m.warnings.push_back("class " + std::to_string(i) + " has no support; left out of macro averages");
      continue;
    }
    ++counted;
    m.macro_precision += cm.precision;
    m.macro_recall += cm.recall;
    m.macro_f1 += cm.f1;
  }
  m.macro_precision /= counted;
  m.macro_recall /= counted;
  m.macro_f1 /= counted;
  m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  return m;
}

std::pair<int, int> dominant_confusion(const Confusion& c) {
  std::pair<int, int> best{-1, -1};
  long most = -1;
  for (int t = 0; t < c.k; ++t) {
    for (int p = 0; p < c.k; ++p) {
      if (t != p && c.at(t, p) > most) {
        most = c.at(t, p);
        best = {t, p};
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

std::vector<FoldSplit> make_splits(std::span<const std::string> sample_participants,
                                   bool with_validation) {
  const std::set<std::string> unique(sample_participants.begin(), sample_participants.end());
  const std::vector<std::string> ids(unique.begin(), unique.end());
  if (ids.size() < 2) fail(ErrorCode::TooFewParticipants, "LOPOCV needs at least 2 participants");
  std::vector<FoldSplit> out;
  for (std::size_t f = 0; f < ids.size(); ++f) {
    FoldSplit s;
    s.test_participant = ids[f];
    if (with_validation && ids.size() >= 3) s.validation_participant = ids[(f + 1) % ids.size()];
    for (std::size_t i = 0; i < sample_participants.size(); ++i) {
      const auto& p = sample_participants[i];
      if (p == s.test_participant) {
        s.test.push_back(i);
      } else if (p == s.validation_participant) {
        s.validation.push_back(i);
      } else {
        s.train.push_back(i);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void check_split(const FoldSplit& split, std::span<const std::string> sample_participants) {
  auto check = [&](const std::vector<std::size_t>& idx, const char* what) {
    for (auto i : idx) {
      if (i >= sample_participants.size()) fail(ErrorCode::Leakage, "sample index out of range");
      if (sample_participants[i] == split.test_participant) {
        fail(ErrorCode::Leakage, std::string("test participant ") + split.test_participant +
                                     " appears in the " + what + " set");
      }
    }
  };
  check(split.train, "training");
  check(split.validation, "validation");
  std::set<std::size_t> seen(split.test.begin(), split.test.end());
  for (const auto* v : {&split.train, &split.validation}) {
    for (auto i : *v) {
      if (!seen.insert(i).second) fail(ErrorCode::Leakage, "a sample is in more than one split");
    }
  }
}

EvalReport lopocv(const std::string& model, std::span<const std::string> sample_participants,
                  std::span<const int> labels, int n_classes, const FitPredict& fit_predict,
                  bool with_validation, bool parallel_folds) {
  if (labels.size() != sample_participants.size()) {
    fail(ErrorCode::LengthMismatch, "one participant per sample");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto splits = make_splits(sample_participants, with_validation);
  EvalReport report;
  report.model = model;
  report.folds.resize(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());

  const int n = static_cast<int>(splits.size());
#pragma omp parallel for schedule(dynamic) if (parallel_folds)
  for (int f = 0; f < n; ++f) {
    const auto& split = splits[static_cast<std::size_t>(f)];
    auto& out = report.folds[static_cast<std::size_t>(f)];
    try {
      const auto s0 = std::chrono::steady_clock::now();
      check_split(split, sample_participants);
      out.test_participant = split.test_participant;
      out.validation_participant = split.validation_participant;
      out.confusion = Confusion(n_classes);
      out.n_train = split.train.size();
      out.n_test = split.test.size();
      if (!split.test.empty()) {
        const auto pred = fit_predict(split);
        if (pred.size() != split.test.size()) {
          fail(ErrorCode::LengthMismatch, "predictor returned the wrong number of labels");
        }
        for (std::size_t i = 0; i < pred.size(); ++i) {
          out.confusion.add(labels[split.test[i]], pred[i]);
        }
      }
      out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.pooled = Confusion(n_classes);
  for (const auto& f : report.folds) report.pooled += f.confusion;
  report.metrics = metrics_from_confusion(report.pooled);
  report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

WindowCorpus prepare_windows(const std::vector<LabeledSession>& sessions, double window_s,
                             double stride_s, std::size_t fixation_window) {
  WindowCorpus wc;
  for (const auto& s : sessions) {
    if (s.condition != Condition::InTheWild || s.segments.empty()) continue;
    for (const auto& w : slide_fixation_windows(s.fixations, s.segments, fixation_window, s.session_id)) {
      if (!w.label) continue;
      const int c = trained_class_index(*w.label);
      if (c < 0) continue;
      wc.fixation_windows.push_back(
          {std::vector<Fixation>(s.fixations.begin() + static_cast<std::ptrdiff_t>(w.first),
                                 s.fixations.begin() + static_cast<std::ptrdiff_t>(w.last)),
           c, s.participant_id});
    }
    const double end_ms = s.segments.back().end_ms;
    for (const auto& w : slide_time_windows(s.segments, end_ms, window_s, stride_s, s.session_id)) {
      if (!w.label) continue;
      const int c = trained_class_index(*w.label);
      if (c < 0) continue;
      wc.time_features.push_back(window_features(s.fixations, s.saccades, s.layout, w.t0_ms, w.t1_ms));
      wc.time_labels.push_back(c);
      wc.time_participants.push_back(s.participant_id);
    }
  }
  return wc;
}

cnn::TrainConfig ComparisonConfig::default_cnn_config() {
  cnn::TrainConfig c;
  c.max_per_class = 250;
  c.max_validation = 400;
  return c;
}

const EvalReport* ComparisonReport::find(const std::string& model) const {
  for (const auto& r : rows) {
    if (r.model == model) return &r;
  }
  return nullptr;
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, const std::string& participant) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : participant) h = (h ^ ch) * 1099511628211ULL;
  return seed ^ h;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

ComparisonReport model_comparison(const std::vector<LabeledSession>& sessions,
                                  const ComparisonConfig& cfg) {
  const WindowCorpus wc = prepare_windows(sessions, cfg.window_s);
  ComparisonReport report;
  const int k = static_cast<int>(kTrainedBehaviors.size());

  std::vector<std::string> fx_participants;
  std::vector<int> fx_labels;
  for (const auto& s : wc.fixation_windows) {
    fx_participants.push_back(s.participant_id);
    fx_labels.push_back(s.label);
  }

  for (const auto& model : cfg.models) {
    if (cfg.progress) cfg.progress(model);
    if (model == "random") {
      report.rows.push_back(lopocv(model, wc.time_participants, wc.time_labels, k,
                                   [&](const FoldSplit& s) {
                                     return RandomModel{k, fold_seed(cfg.seed, s.test_participant)}
                                         .predict(s.test.size());
                                   },
                                   false, cfg.parallel_folds));
    } else if (model == "majority") {
      report.rows.push_back(lopocv(model, wc.time_participants, wc.time_labels, k,
                                   [&](const FoldSplit& s) {
                                     return MajorityModel::fit(pick(wc.time_labels, s.train))
                                         .predict(s.test.size());
                                   },
                                   false, cfg.parallel_folds));
    } else if (model == "softmax") {
      report.rows.push_back(lopocv(model, wc.time_participants, wc.time_labels, k,
                                   [&](const FoldSplit& s) {
                                     const auto m = train_softmax(pick(wc.time_features, s.train),
                                                                  pick(wc.time_labels, s.train), k,
                                                                  cfg.softmax);
                                     return m.predict(pick(wc.time_features, s.test));
                                   },
                                   false, cfg.parallel_folds));
    } else if (model == "cnn1d" || model == "cnn2d") {
      const bool two_d = model == "cnn2d";
      report.rows.push_back(lopocv(
          model, fx_participants, fx_labels, k,
          [&](const FoldSplit& s) {
            auto tc = two_d ? cfg.cnn2d : cfg.cnn1d;
            tc.seed = fold_seed(cfg.seed, s.test_participant);
            const auto train = pick(wc.fixation_windows, s.train);
            const auto val = pick(wc.fixation_windows, s.validation);
            const auto result = two_d ? cnn::train_2d(train, val, tc) : cnn::train_1d(train, val, tc);
            std::vector<int> pred;
            pred.reserve(s.test.size());
            for (auto i : s.test) {
              pred.push_back(cnn::argmax(cnn::predict_window(result.net, wc.fixation_windows[i].fixations, tc.render)));
            }
            return pred;
          },
          true, cfg.parallel_folds));
    } else {
      fail(ErrorCode::InvalidConfig, "unknown model " + model);
    }
  }
  return report;
}

bool ordering_holds(const ComparisonReport& report, std::string* why) {
  auto say = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  const auto* cnn = report.find("cnn2d");
  const auto* soft = report.find("softmax");
  const auto* maj = report.find("majority");
  if (!cnn || !soft || !maj) return say("cnn2d, softmax and majority rows are required");
  for (const auto& r : report.rows) {
    if (&r != cnn && !(cnn->metrics.macro_f1 > r.metrics.macro_f1)) {
      return say("cnn2d macro F1 is not above " + r.model);
    }
  }
  if (!(soft->metrics.macro_f1 >= maj->metrics.macro_f1)) return say("softmax macro F1 is below majority");
  return true;
}

std::string format_comparison_table(const ComparisonReport& report) {
  std::string out = "model\trecall\tprecision\tmacro_f1\taccuracy\n";
  char buf[160];
  for (const auto& r : report.rows) {
    const int n = std::snprintf(buf, sizeof buf, "%s\t%.2f\t%.2f\t%.2f\t%.2f\n", r.model.c_str(),
                                r.metrics.macro_recall, r.metrics.macro_precision, r.metrics.macro_f1,
                                r.metrics.accuracy);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

std::string format_confusion(const Confusion& c) {
  auto name = [&](int i) {
    return c.k == 3 ? std::string(to_string(kTrainedBehaviors[static_cast<std::size_t>(i)])) : std::to_string(i);
  };
  std::string out = "truth\\pred";
  for (int p = 0; p < c.k; ++p) out += "\t" + name(p);
  out += '\n';
  for (int t = 0; t < c.k; ++t) {
    out += name(t);
    for (int p = 0; p < c.k; ++p) out += "\t" + std::to_string(c.at(t, p));
    out += '\n';
  }
  return out;
}

void to_json(json& j, const Confusion& c) {
  json rows = json::array();
  for (int t = 0; t < c.k; ++t) {
    json row = json::array();
    for (int p = 0; p < c.k; ++p) row.push_back(c.at(t, p));
    rows.push_back(row);
  }
  j = rows;
}

void to_json(json& j, const Metrics& m) {
  json pc = json::array();
  for (const auto& c : m.per_class) {
    pc.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  }
  j = {{"per_class", pc},          {"macro_precision", m.macro_precision},
       {"macro_recall", m.macro_recall}, {"macro_f1", m.macro_f1},
       {"accuracy", m.accuracy},   {"warnings", m.warnings}};
}

void to_json(json& j, const EvalReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"test_participant", f.test_participant},
                     {"validation_participant", f.validation_participant},
                     {"confusion", f.confusion},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"runtime_s", f.runtime_s}});
  }
  j = {{"model", r.model}, {"pooled_confusion", r.pooled}, {"metrics", r.metrics},
       {"folds", folds},   {"runtime_s", r.runtime_s}};
}

void to_json(json& j, const ComparisonReport& r) {
  j = json::object();
  j["classes"] = json::array();
  for (auto b : kTrainedBehaviors) j["classes"].push_back(std::string(to_string(b)));
  j["rows"] = json::array();
  for (const auto& row : r.rows) j["rows"].push_back(row);
}

// ---------------------------------------------------------------------------
// Per-behavior statistics
// ---------------------------------------------------------------------------

std::vector<SegmentPoint> segment_points(const std::vector<LabeledSession>& sessions) {
  std::vector<SegmentPoint> out;
  for (const auto& s : sessions) {
    for (const auto& seg : s.segments) {
      if (!seg.label_final) continue;
      const auto sf = segment_features(seg, s.fixations, s.saccades, s.layout);
      SegmentPoint p;
      p.session_id = s.session_id;
      p.participant_id = s.participant_id;
      p.condition = s.condition;
      p.label = *seg.label_final;
      p.wpm = wpm(seg, s.fixations, s.layout).wpm;
      p.inverse_dispersion = sf.features.inverse_dispersion;
      p.fbsr = sf.features.fbsr;
      for (const auto& sc : s.saccades) {
        const auto& a = s.fixations[sc.from_idx];
        const auto& b = s.fixations[sc.to_idx];
        if (fixation_in_window(a, seg.start_ms, seg.end_ms) &&
            fixation_in_window(b, seg.start_ms, seg.end_ms) &&
            (is_forward_type(sc.direction) || is_regression_type(sc.direction))) {
          ++p.directional_saccades;
        }
      }
      if (sf.summary.fixation_count == 0) continue;
      out.push_back(p);
    }
  }
  return out;
}

Eigen::MatrixXd framework_matrix(std::span<const SegmentPoint> points, BehaviorLabel label,
                                 Condition condition) {
  std::vector<const SegmentPoint*> rows;
  for (const auto& p : points) {
    if (p.label == label && p.condition == condition) rows.push_back(&p);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = std::log10(1.0 + rows[i]->wpm);
    m(r, 1) = std::log10(rows[i]->inverse_dispersion);
    m(r, 2) = rows[i]->fbsr;
  }
  return m;
}

BehaviorStatsReport behavior_statistics(std::span<const SegmentPoint> points, int min_directional) {
  BehaviorStatsReport rep;
  std::vector<Eigen::MatrixXd> groups;
  std::vector<std::string> names;
  for (auto b : kAllBehaviors) {
    groups.push_back(framework_matrix(points, b));
    names.emplace_back(to_string(b));
  }
  rep.hotelling = hotelling_pairwise(groups, names);

  std::vector<double> seq, nonseq;
  for (const auto& p : points) {
    if (p.condition != Condition::InTheWild || p.directional_saccades < min_directional) continue;
    if (p.label == BehaviorLabel::Sequential) seq.push_back(p.fbsr);
    if (p.label == BehaviorLabel::NonSequential) nonseq.push_back(p.fbsr);
  }
  rep.fbsr_ttest = t_test_ind(seq, nonseq);

  for (auto b : {BehaviorLabel::Sequential, BehaviorLabel::Deep, BehaviorLabel::Skimming}) {
    for (int metric = 0; metric < 2; ++metric) {
      std::vector<double> instructed, wild;
      for (const auto& p : points) {
        if (p.label != b) continue;
        const double v = metric == 0 ? p.wpm : p.inverse_dispersion;
        (p.condition == Condition::Instructed ? instructed : wild).push_back(v);
      }
      if (instructed.empty() || wild.empty()) continue;
      rep.condition_tests.push_back(mann_whitney_u(instructed, wild));
      rep.condition_names.push_back(std::string(to_string(b)) + (metric == 0 ? ":wpm" : ":inverse_dispersion"));
    }
  }
  bonferroni(rep.condition_tests);
  return rep;
}

}  // namespace scanpath
