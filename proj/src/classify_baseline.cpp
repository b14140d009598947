#include "scanpath/classify_baseline.hpp"

#include <cmath>
#include <map>
#include <random>

namespace scanpath {

BehaviorLabel classify_rules(const FeatureVector& fv, const RegionRules& r) {
  if (fv.wpm <= r.static_max_wpm) return BehaviorLabel::Static;
  if (fv.wpm < r.slow_max_wpm) {
    return fv.inverse_dispersion >= r.deep_min_inv_disp ? BehaviorLabel::Deep
                                                        : BehaviorLabel::PreviewingMapping;
  }
  if (fv.wpm >= r.fast_min_wpm) {
    return fv.inverse_dispersion >= r.skim_min_inv_disp ? BehaviorLabel::Skimming
                                                        : BehaviorLabel::PreviewingMapping;
  }
  if (fv.fbsr < r.sequential_min_fbsr) return BehaviorLabel::NonSequential;
  if (fv.wpm < r.skim_max_wpm) return BehaviorLabel::Skimming;
  return BehaviorLabel::Sequential;
}

void to_json(json& j, const RegionRules& r) {
  j = json{{"static_max_wpm", r.static_max_wpm},     {"slow_max_wpm", r.slow_max_wpm},
           {"deep_min_inv_disp", r.deep_min_inv_disp}, {"fast_min_wpm", r.fast_min_wpm},
           {"skim_min_inv_disp", r.skim_min_inv_disp}, {"sequential_min_fbsr", r.sequential_min_fbsr},
           {"skim_max_wpm", r.skim_max_wpm}};
}

void from_json(const json& j, RegionRules& r) {
  r.static_max_wpm = j.at("static_max_wpm").get<double>();
  r.slow_max_wpm = j.at("slow_max_wpm").get<double>();
  r.deep_min_inv_disp = j.at("deep_min_inv_disp").get<double>();
  r.fast_min_wpm = j.at("fast_min_wpm").get<double>();
  r.skim_min_inv_disp = j.at("skim_min_inv_disp").get<double>();
  r.sequential_min_fbsr = j.at("sequential_min_fbsr").get<double>();
  r.skim_max_wpm = j.at("skim_max_wpm").get<double>();
}

Eigen::MatrixXd feature_matrix(std::span<const FeatureVector> features,
                               std::span<const int> columns) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()),
                    static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto row = features[i].as_array();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          row[static_cast<std::size_t>(columns[c])];
    }
  }
  return x;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = n > 0 ? (x.col(c).array() - s.mean(c)).square().sum() / n : 0.0;
    s.sd(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = x;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    z.col(c) = (z.col(c).array() - mean(c)) / sd(c);
  }
  return z;
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

double softmax_loss(const Eigen::MatrixXd& z, std::span<const int> y, const Eigen::MatrixXd& w,
                    const Eigen::VectorXd& b, double l2, Eigen::MatrixXd* grad_w,
                    Eigen::VectorXd* grad_b) {
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd logits = z * w.transpose();
  logits.rowwise() += b.transpose();
  Eigen::MatrixXd p = softmax_rows(logits);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss -= std::log(std::max(p(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  loss = n > 0 ? loss / static_cast<double>(n) : 0.0;
  loss += 0.5 * l2 * w.squaredNorm();
  if (grad_w || grad_b) {
    Eigen::MatrixXd d = p;
    for (Eigen::Index i = 0; i < n; ++i) d(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    if (n > 0) d /= static_cast<double>(n);
    if (grad_w) *grad_w = d.transpose() * z + l2 * w;
    if (grad_b) *grad_b = d.colwise().sum().transpose();
  }
  return loss;
}

SoftmaxModel train_softmax(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                           std::vector<int> feature_columns, const SoftmaxConfig& cfg) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    fail(ErrorCode::LengthMismatch, "one label per feature row required");
  }
  std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
  for (int v : y) {
    if (v < 0 || v >= n_classes) fail(ErrorCode::InvalidConfig, "label out of range");
    seen[static_cast<std::size_t>(v)] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) < 2) {
    fail(ErrorCode::SingleClass, "softmax needs at least 2 classes");
  }

  SoftmaxModel m;
  m.n_classes = n_classes;
  m.feature_columns = std::move(feature_columns);
  m.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd z = m.standardizer.apply(x);
  m.weights = Eigen::MatrixXd::Zero(n_classes, x.cols());
  m.bias = Eigen::VectorXd::Zero(n_classes);

  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  double lr = cfg.lr;
  double loss = softmax_loss(z, y, m.weights, m.bias, cfg.l2, &gw, &gb);
  m.loss_history.push_back(loss);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd w2 = m.weights - lr * gw;
      Eigen::VectorXd b2 = m.bias - lr * gb;
      Eigen::MatrixXd gw2;
      Eigen::VectorXd gb2;
      const double l2loss = softmax_loss(z, y, w2, b2, cfg.l2, &gw2, &gb2);
      if (l2loss <= loss) {
        m.weights = std::move(w2);
        m.bias = std::move(b2);
        gw = std::move(gw2);
        gb = std::move(gb2);
        loss = l2loss;
        break;
      }
      lr *= 0.5;
    }
    m.loss_history.push_back(loss);
  }
  return m;
}

SoftmaxModel train_softmax(std::span<const FeatureVector> features, std::span<const int> y,
                           int n_classes, const SoftmaxConfig& cfg, std::span<const int> columns) {
  return train_softmax(feature_matrix(features, columns), y, n_classes,
                       std::vector<int>(columns.begin(), columns.end()), cfg);
}

Eigen::MatrixXd SoftmaxModel::predict_proba(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd logits = standardizer.apply(x) * weights.transpose();
  logits.rowwise() += bias.transpose();
  return softmax_rows(logits);
}

std::vector<int> SoftmaxModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd p = predict_proba(x);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> SoftmaxModel::predict(std::span<const FeatureVector> features) const {
  return predict(feature_matrix(features, feature_columns));
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(json& j, const SoftmaxModel& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    rows.push_back(vec_json(m.weights.row(r).transpose()));
  }
  json names = json::array();
  for (int c : m.feature_columns) {
    names.push_back(std::string(FeatureVector::field_names()[static_cast<std::size_t>(c)]));
  }
  json classes = json::array();
  for (int c = 0; c < m.n_classes && c < 3; ++c) {
    classes.push_back(std::string(to_string(kTrainedBehaviors[static_cast<std::size_t>(c)])));
  }
  j = json{{"n_classes", m.n_classes},
           {"classes", classes},
           {"feature_columns", m.feature_columns},
           {"feature_names", names},
           {"mean", vec_json(m.standardizer.mean)},
           {"sd", vec_json(m.standardizer.sd)},
           {"weights", rows},
           {"bias", vec_json(m.bias)}};
}

void from_json(const json& j, SoftmaxModel& m) {
  m.n_classes = j.at("n_classes").get<int>();
  m.feature_columns = j.at("feature_columns").get<std::vector<int>>();
  m.standardizer.mean = json_vec(j.at("mean"));
  m.standardizer.sd = json_vec(j.at("sd"));
  m.bias = json_vec(j.at("bias"));
  const auto& rows = j.at("weights");
  const auto nf = static_cast<Eigen::Index>(m.feature_columns.size());
  if (static_cast<int>(rows.size()) != m.n_classes || m.bias.size() != m.n_classes ||
      m.standardizer.mean.size() != nf || m.standardizer.sd.size() != nf) {
    fail(ErrorCode::SchemaMismatch, "softmax model shapes disagree");
  }
  m.weights.resize(m.n_classes, nf);
  for (int r = 0; r < m.n_classes; ++r) {
    const Eigen::VectorXd row = json_vec(rows[static_cast<std::size_t>(r)]);
    if (row.size() != nf) fail(ErrorCode::SchemaMismatch, "softmax weight row length");
    m.weights.row(r) = row.transpose();
  }
}

MajorityModel MajorityModel::fit(std::span<const int> y) {
  if (y.empty()) fail(ErrorCode::EmptySample, "majority baseline needs labeled windows");
  std::map<int, std::size_t> counts;
  for (int v : y) ++counts[v];
  MajorityModel m;
  std::size_t best = 0;
  for (const auto& [label, n] : counts) {
    if (n > best) {
      best = n;
      m.label = label;
    }
  }
  return m;
}

std::vector<int> RandomModel::predict(std::size_t n) const {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, n_classes - 1);
  std::vector<int> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

void save_model(const std::filesystem::path& path, const json& model, const std::string& kind) {
  json doc{{"format", "scanpath-model"}, {"version", 1}, {"kind", kind}, {"model", model}};
  write_file_atomic(path, doc.dump(1) + "\n");
}

json load_model(const std::filesystem::path& path, const std::string& kind) {
  const json doc = read_json_file(path);
  if (doc.value("format", "") != "scanpath-model" || doc.value("version", 0) != 1) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": not a version 1 model file");
  }
  if (doc.value("kind", "") != kind) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": expected a " + kind + " model");
  }
  return doc.at("model");
}

}  // namespace scanpath
