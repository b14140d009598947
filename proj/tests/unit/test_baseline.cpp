#include <doctest.h>

#include <filesystem>
#include <random>

#include "../support/fixtures.hpp"
#include "scanpath/classify_baseline.hpp"
#include "scanpath/eval.hpp"

using namespace scanpath;

namespace {

FeatureVector point(double wpm, double inv, double fb) {
  FeatureVector f;
  f.wpm = wpm;
  f.inverse_dispersion = inv;
  f.fbsr = fb;
  return f;
}

// Three Gaussian blobs in the eight window-metric columns.
std::pair<std::vector<FeatureVector>, std::vector<int>> blobs(int per_class, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  std::vector<FeatureVector> x;
  std::vector<int> y;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) {
      FeatureVector f;
      f.fixation_count = 20 + sep * c + n(rng);
      f.mean_fixation_duration_ms = 200 + 30 * n(rng);
      f.fixation_dispersion = 2 + (c == 2 ? sep : 0) + n(rng);
      f.mean_saccade_length = 3 + n(rng);
      f.rate_vertical_next = 0.1 + 0.01 * n(rng);
      f.rate_horizontal_later = 0.2 + 0.01 * n(rng);
      f.rate_line_regression = 0.05 + 0.01 * n(rng);
      f.rate_regression = 0.1 + 0.01 * n(rng);
      x.push_back(f);
      y.push_back(c);
    }
  }
  return {x, y};
}

}  // namespace

TEST_CASE("rule cascade examples") {
  CHECK(classify_rules(point(3, 5, 0.5)) == BehaviorLabel::Static);
  CHECK(classify_rules(point(40, 0.5, 0.9)) == BehaviorLabel::Deep);
  CHECK(classify_rules(point(40, 0.1, 0.9)) == BehaviorLabel::PreviewingMapping);
  CHECK(classify_rules(point(400, 0.1, 0.9)) == BehaviorLabel::PreviewingMapping);
  CHECK(classify_rules(point(400, 0.5, 0.9)) == BehaviorLabel::Skimming);
  CHECK(classify_rules(point(150, 0.3, 0.5)) == BehaviorLabel::NonSequential);
  CHECK(classify_rules(point(90, 0.3, 0.9)) == BehaviorLabel::Skimming);
  CHECK(classify_rules(point(150, 0.3, 0.9)) == BehaviorLabel::Sequential);
  RegionRules r;
  r.static_max_wpm = 10;
  CHECK(classify_rules(point(8, 1, 1), r) == BehaviorLabel::Static);
  CHECK(json(r).get<RegionRules>() == r);
}

TEST_CASE("softmax separates well-separated blobs") {
  auto [x, y] = blobs(60, 8, 1);
  const auto m = train_softmax(x, y);
  const auto p = m.predict(x);
  int right = 0;
  for (std::size_t i = 0; i < y.size(); ++i) right += p[i] == y[i];
  CHECK(right == static_cast<int>(y.size()));
  for (std::size_t i = 1; i < m.loss_history.size(); ++i) {
    CHECK(m.loss_history[i] <= m.loss_history[i - 1] + 1e-12);
  }
  const auto proba = m.predict_proba(feature_matrix(x, kWindowMetricFeatures));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) CHECK(proba.row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("softmax gradient matches finite differences") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd z(30, 4), w(3, 4);
  Eigen::VectorXd b(3);
  std::vector<int> y(30);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.3 * n(rng);
  for (int i = 0; i < 3; ++i) b(i) = 0.1 * n(rng);
  for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = i % 3;
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  softmax_loss(z, y, w, b, 1e-2, &gw, &gb);
  const double h = 1e-6;
  double worst = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::MatrixXd a = w, c = w;
    a.data()[i] += h;
    c.data()[i] -= h;
    const double fd = (softmax_loss(z, y, a, b, 1e-2) - softmax_loss(z, y, c, b, 1e-2)) / (2 * h);
    worst = std::max(worst, std::abs(fd - gw.data()[i]));
  }
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd a = b, c = b;
    a(i) += h;
    c(i) -= h;
    const double fd = (softmax_loss(z, y, w, a, 1e-2) - softmax_loss(z, y, w, c, 1e-2)) / (2 * h);
    worst = std::max(worst, std::abs(fd - gb(i)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("softmax predictions survive positive affine rescaling of features") {
  auto [x, y] = blobs(40, 2, 3);
  const auto base = train_softmax(x, y).predict(x);
  auto scaled = x;
  for (auto& f : scaled) {
    f.fixation_count = 3 * f.fixation_count + 7;
    f.fixation_dispersion *= 1000;
    f.rate_regression = 0.01 * f.rate_regression - 4;
  }
  CHECK(train_softmax(scaled, y).predict(scaled) == base);
}

TEST_CASE("softmax errors") {
  auto [x, y] = blobs(5, 2, 4);
  std::vector<int> same(y.size(), 1);
  CHECK_CODE(train_softmax(x, same), ErrorCode::SingleClass);
}

TEST_CASE("model files round-trip") {
  auto [x, y] = blobs(30, 3, 5);
  const auto m = train_softmax(x, y);
  const auto dir = std::filesystem::temp_directory_path() / "scanpath-baseline-test";
  std::filesystem::create_directories(dir);
  save_model(dir / "m.json", json(m), "softmax");
  const auto back = load_model(dir / "m.json", "softmax").get<SoftmaxModel>();
  CHECK(back.predict(x) == m.predict(x));
  CHECK(back.weights.isApprox(m.weights, 1e-15));
  CHECK_CODE(load_model(dir / "m.json", "rules"), ErrorCode::SchemaMismatch);
  std::filesystem::remove_all(dir);
}

TEST_CASE("majority and random baselines") {
  const std::vector<int> y = {0, 0, 0, 0, 0, 0, 1, 1, 2, 2};
  const auto maj = MajorityModel::fit(y);
  CHECK(maj.label == 0);
  CHECK(maj.predict(3) == std::vector<int>{0, 0, 0});
  CHECK_CODE(MajorityModel::fit({}), ErrorCode::EmptySample);
  Confusion c;
  for (int v : y) c.add(v, maj.label);
  const auto m = metrics_from_confusion(c);
  CHECK(m.accuracy == doctest::Approx(0.6));
  CHECK(m.macro_f1 < m.accuracy);

  const RandomModel r{3, 9};
  const auto a = r.predict(3000);
  CHECK(a == r.predict(3000));
  std::array<int, 3> counts{};
  for (int v : a) ++counts[static_cast<std::size_t>(v)];
  for (int n : counts) CHECK(std::abs(n - 1000) < 120);
}
