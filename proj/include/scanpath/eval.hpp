#pragma once

// Leave-one-participant-out evaluation, confusion metrics, the model
// comparison table, and the per-behavior statistical battery.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scanpath/classify_baseline.hpp"
#include "scanpath/cnn/train.hpp"
#include "scanpath/json_io.hpp"
#include "scanpath/pipeline.hpp"
#include "scanpath/stats.hpp"

namespace scanpath {

/// Rows are true classes, columns predictions.
struct Confusion {
  int k = 3;
  std::vector<long> counts = std::vector<long>(9, 0);

  explicit Confusion(int classes = 3)
      : k(classes), counts(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {}
  long& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth * k + pred)]; }
  long at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth * k + pred)]; }
  void add(int truth, int pred) { ++at(truth, pred); }
  long total() const;
  long support(int c) const;
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<std::string> warnings;  // zero-support classes left out of the averages
};

/// Throws EmptyMatrix when the matrix holds no observations.
Metrics metrics_from_confusion(const Confusion& c);

/// Largest off-diagonal cell as (truth, prediction).
std::pair<int, int> dominant_confusion(const Confusion& c);

struct FoldSplit {
  std::string test_participant;
  std::string validation_participant;  // empty when there is no validation split
  std::vector<std::size_t> train, validation, test;  // sample indices
};

/// One split per distinct participant (sorted). The validation participant
/// is the next participant after the test one, wrapping around, when
/// `with_validation` and there are at least 3 participants. Throws
/// TooFewParticipants below 2.
std::vector<FoldSplit> make_splits(std::span<const std::string> sample_participants,
                                   bool with_validation);

/// Throws Leakage when any training or validation sample belongs to the
/// test participant, or the index sets overlap.
void check_split(const FoldSplit& split, std::span<const std::string> sample_participants);

struct FoldOutcome {
  std::string test_participant;
  std::string validation_participant;
  Confusion confusion;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double runtime_s = 0.0;
};

struct EvalReport {
  std::string model;
  std::vector<FoldOutcome> folds;
  Confusion pooled;
  Metrics metrics;
  double runtime_s = 0.0;
};

/// Predictions for split.test, in order.
using FitPredict = std::function<std::vector<int>(const FoldSplit&)>;

/// Runs every fold (in parallel when `parallel_folds`), checks each split
/// for leakage, and pools the fold confusions.
EvalReport lopocv(const std::string& model, std::span<const std::string> sample_participants,
                  std::span<const int> labels, int n_classes, const FitPredict& fit_predict,
                  bool with_validation = false, bool parallel_folds = true);

/// Labeled windows over the in-the-wild sessions, trained classes only.
struct WindowCorpus {
  std::vector<cnn::WindowSample> fixation_windows;
  std::vector<FeatureVector> time_features;
  std::vector<int> time_labels;
  std::vector<std::string> time_participants;
};

WindowCorpus prepare_windows(const std::vector<LabeledSession>& sessions, double window_s = 15.0,
                             double stride_s = 1.0, std::size_t fixation_window = 10);

struct ComparisonConfig {
  double window_s = 15.0;
  std::uint64_t seed = 7;
  SoftmaxConfig softmax;
  cnn::TrainConfig cnn2d = default_cnn_config();
  cnn::TrainConfig cnn1d = default_cnn_config();
  std::vector<std::string> models = {"random", "majority", "softmax", "cnn1d", "cnn2d"};
  bool parallel_folds = true;
  std::function<void(const std::string&)> progress;

  /// Per-epoch class cap 250 and 400 validation windows, which keeps a
  /// 27-fold 2D run within desk-scale budgets.
  static cnn::TrainConfig default_cnn_config();
};

struct ComparisonReport {
  std::vector<EvalReport> rows;

  const EvalReport* find(const std::string& model) const;
};

ComparisonReport model_comparison(const std::vector<LabeledSession>& sessions,
                                  const ComparisonConfig& cfg = {});

/// cnn2d strictly above every other row, softmax >= majority. `why`
/// receives the first violated condition.
bool ordering_holds(const ComparisonReport& report, std::string* why = nullptr);

/// model, recall, precision, macro_f1, accuracy (tab-separated).
std::string format_comparison_table(const ComparisonReport& report);
/// Rows = truth, columns = prediction, tab-separated with class names.
std::string format_confusion(const Confusion& c);

void to_json(json& j, const Confusion& c);
void to_json(json& j, const Metrics& m);
void to_json(json& j, const EvalReport& r);
void to_json(json& j, const ComparisonReport& r);

// ---------------------------------------------------------------------------
// Per-behavior statistics
// ---------------------------------------------------------------------------

struct SegmentPoint {
  std::string session_id;
  std::string participant_id;
  Condition condition = Condition::InTheWild;
  BehaviorLabel label = BehaviorLabel::Sequential;
  double wpm = 0.0;
  double inverse_dispersion = 0.0;
  double fbsr = 0.0;
  int directional_saccades = 0;  // forward-type + regression-type inside the segment
};

std::vector<SegmentPoint> segment_points(const std::vector<LabeledSession>& sessions);

/// (log10(1 + wpm), log10(inverse dispersion), fbsr) rows of one behavior.
Eigen::MatrixXd framework_matrix(std::span<const SegmentPoint> points, BehaviorLabel label,
                                 Condition condition = Condition::InTheWild);

struct BehaviorStatsReport {
  PairwiseMatrix hotelling;  // in-the-wild, all six behaviors
  TestResult fbsr_ttest;     // Sequential vs NonSequential, in-the-wild
  /// Instructed vs in-the-wild Mann-Whitney on wpm and inverse dispersion
  /// for Sequential, Deep and Skimming (Bonferroni over all of them). Empty
  /// when the corpus has no instructed sessions.
  std::vector<TestResult> condition_tests;
  std::vector<std::string> condition_names;
};

/// FBSR t-test uses segments with at least `min_directional` directional
/// saccades.
BehaviorStatsReport behavior_statistics(std::span<const SegmentPoint> points,
                                        int min_directional = 1);

}  // namespace scanpath
