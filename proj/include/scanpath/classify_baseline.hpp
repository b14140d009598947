#pragma once

// Non-neural behavior classifiers: framework-region rules, majority class,
// uniform random, and multinomial logistic regression over window features.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scanpath/core.hpp"
#include "scanpath/json_io.hpp"
#include "scanpath/metrics.hpp"

namespace scanpath {

/// Axis-aligned regions in (log10 wpm, log10 inverse dispersion) plus an
/// FBSR threshold. Evaluated as a cascade in label priority order, so every
/// input maps to exactly one label:
///   wpm <= static_max_wpm                      -> Static
///   wpm <  slow_max_wpm:  dense ? Deep : PreviewingMapping
///   wpm >= fast_min_wpm:  dense ? Skimming : PreviewingMapping
///   fbsr < sequential_min_fbsr                 -> NonSequential
///   wpm <  skim_max_wpm                        -> Skimming
///   otherwise                                  -> Sequential
struct RegionRules {
  double static_max_wpm = 5.0;
  double slow_max_wpm = 70.0;
  double deep_min_inv_disp = 0.3;
  double fast_min_wpm = 200.0;
  double skim_min_inv_disp = 0.2;
  double sequential_min_fbsr = 0.75;
  double skim_max_wpm = 100.0;

  bool operator==(const RegionRules&) const = default;
};

BehaviorLabel classify_rules(const FeatureVector& fv, const RegionRules& rules = {});

void to_json(json& j, const RegionRules& r);
void from_json(const json& j, RegionRules& r);

/// Indices into FeatureVector::as_array() of the eight accumulative window
/// metrics (count, duration, dispersion, saccade length, four rates).
inline constexpr std::array<int, 8> kWindowMetricFeatures = {0, 1, 2, 3, 4, 5, 6, 7};

/// Rows of `features` restricted to `columns`.
Eigen::MatrixXd feature_matrix(std::span<const FeatureVector> features,
                               std::span<const int> columns);

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // zero-variance columns use 1

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct SoftmaxConfig {
  double lr = 0.5;
  int epochs = 300;
  double l2 = 1e-3;
};

struct SoftmaxModel {
  int n_classes = 3;
  std::vector<int> feature_columns;  // into FeatureVector::as_array()
  Standardizer standardizer;
  Eigen::MatrixXd weights;  // classes x features
  Eigen::VectorXd bias;
  std::vector<double> loss_history;

  /// Class probabilities for already-selected raw feature rows.
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(std::span<const FeatureVector> features) const;
};

/// Mean cross-entropy plus 0.5 * l2 * |W|^2 on standardized inputs, and its
/// gradient.
double softmax_loss(const Eigen::MatrixXd& z, std::span<const int> y, const Eigen::MatrixXd& w,
                    const Eigen::VectorXd& b, double l2, Eigen::MatrixXd* grad_w = nullptr,
                    Eigen::VectorXd* grad_b = nullptr);

/// Full-batch gradient descent; a step that raises the loss is undone and
/// retried at half the learning rate. Labels are class indices in
/// [0, n_classes). Throws SingleClass when fewer than 2 classes occur.
SoftmaxModel train_softmax(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                           std::vector<int> feature_columns, const SoftmaxConfig& cfg = {});
SoftmaxModel train_softmax(std::span<const FeatureVector> features, std::span<const int> y,
                           int n_classes = 3, const SoftmaxConfig& cfg = {},
                           std::span<const int> columns = kWindowMetricFeatures);

void to_json(json& j, const SoftmaxModel& m);
void from_json(const json& j, SoftmaxModel& m);

struct MajorityModel {
  int label = 0;

  static MajorityModel fit(std::span<const int> y);
  std::vector<int> predict(std::size_t n) const { return std::vector<int>(n, label); }
};

struct RandomModel {
  int n_classes = 3;
  std::uint64_t seed = 0;

  std::vector<int> predict(std::size_t n) const;
};

/// Versioned JSON model file, {"kind": "softmax" | "rules" | "majority", ...}.
void save_model(const std::filesystem::path& path, const json& model, const std::string& kind);
json load_model(const std::filesystem::path& path, const std::string& kind);

}  // namespace scanpath
