#include "scanpath/cnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "scanpath/error.hpp"

namespace scanpath::cnn {

void TrainConfig::validate() const {
  if (max_epochs < 1 || max_epochs > 50) fail(ErrorCode::InvalidConfig, "max_epochs must be in [1, 50]");
  if (patience < 1) fail(ErrorCode::InvalidConfig, "patience must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(lr > 0.0) || !(eps > 0.0) || weight_decay < 0.0 || noise_sigma < 0.0 ||
      shift_sigma < 0.0) {
    fail(ErrorCode::InvalidConfig, "bad optimizer settings");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::InvalidConfig, "betas must be in [0, 1)");
  }
  if (max_per_class < 0 || max_validation < 0) fail(ErrorCode::InvalidConfig, "caps must be >= 0");
}

Adam::Adam(const Network& net, const TrainConfig& cfg)
    : lr_(cfg.lr), b1_(cfg.beta1), b2_(cfg.beta2), eps_(cfg.eps), wd_(cfg.weight_decay) {
  for (const auto& t : net.params()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void Adam::step(Network& net, const std::vector<Tensor>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  auto& params = net.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].data;
    const auto& g = grads[k].data;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + wd_ * p[i];
      m[i] = b1_ * m[i] + (1.0 - b1_) * gi;
      v[i] = b2_ * v[i] + (1.0 - b2_) * gi * gi;
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void rasterize(std::span<const Fixation> fixations, const RenderConfig& cfg,
               std::vector<double>& out, ScanplotImage& scratch) {
  render_into(fixations, cfg, nullptr, scratch);
  out.resize(scratch.pixels.size());
  std::copy(scratch.pixels.begin(), scratch.pixels.end(), out.begin());
}

std::vector<double> coordinate_window(std::span<const Fixation> fixations) {
  std::vector<double> out;
  out.reserve(fixations.size() * 2);
  for (const auto& f : fixations) {
    out.push_back(f.centroid.x);
    out.push_back(f.centroid.y);
  }
  return out;
}

int argmax(std::span<const double> p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

namespace {

using Encoder = void (*)(std::span<const Fixation>, const TrainConfig&, std::vector<double>&,
                         ScanplotImage&);

void encode_2d(std::span<const Fixation> fx, const TrainConfig& cfg, std::vector<double>& out,
               ScanplotImage& scratch) {
  rasterize(fx, cfg.render, out, scratch);
}

void encode_1d(std::span<const Fixation> fx, const TrainConfig&, std::vector<double>& out,
               ScanplotImage&) {
  out = coordinate_window(fx);
}

std::vector<Fixation> jittered(std::span<const Fixation> fx, const TrainConfig& cfg,
                               std::mt19937_64& rng) {
  std::vector<Fixation> out(fx.begin(), fx.end());
  double sx = 0.0, sy = 0.0;
  if (cfg.shift_sigma > 0.0) {
    std::normal_distribution<double> s(0.0, cfg.shift_sigma);
    sx = s(rng);
    sy = s(rng);
  }
  if (cfg.noise_sigma <= 0.0 && sx == 0.0 && sy == 0.0) return out;
  std::normal_distribution<double> n(0.0, cfg.noise_sigma);
  for (auto& f : out) {
    f.centroid.x += sx + (cfg.noise_sigma > 0.0 ? n(rng) : 0.0);
    f.centroid.y += sy + (cfg.noise_sigma > 0.0 ? n(rng) : 0.0);
  }
  return out;
}

// Subsample of `validation` scored each epoch.
std::vector<std::size_t> validation_subset(std::size_t n, int cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (cap > 0 && n > static_cast<std::size_t>(cap)) {
    std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(cap));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const Network& net, std::span<const WindowSample> data,
                    const std::vector<std::size_t>& idx, const TrainConfig& cfg, Encoder encode) {
  std::vector<double> loss(idx.size()), hit(idx.size());
#pragma omp parallel
  {
    std::vector<double> input;
    ScanplotImage scratch;
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& s = data[idx[i]];
      encode(s.fixations, cfg, input, scratch);
      const auto p = net.predict_proba(input.data());
      loss[i] = -std::log(std::max(p[static_cast<std::size_t>(s.label)], 1e-300));
      hit[i] = argmax(p) == s.label ? 1.0 : 0.0;
    }
  }
  Evaluation e;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    e.loss += loss[i];
    e.accuracy += hit[i];
  }
  e.loss /= static_cast<double>(idx.size());
  e.accuracy /= static_cast<double>(idx.size());
  return e;
}

// Strength of the prior correction: full correction maximizes accuracy, not
// macro F1, so pick the scale with the best validation macro F1 (ties go to
// the stronger correction).
double tune_prior_scale(Network& net, std::span<const WindowSample> data, const TrainConfig& cfg,
                        Encoder encode) {
  const auto k = static_cast<std::size_t>(net.classes());
  std::vector<std::vector<double>> logits(data.size(), std::vector<double>(k));
#pragma omp parallel
  {
    std::vector<double> input;
    ScanplotImage scratch;
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < data.size(); ++i) {
      encode(data[i].fixations, cfg, input, scratch);
      net.logits(input.data(), logits[i].data());
    }
  }
  const std::vector<double> full = net.logit_adjust;
  double best_scale = 1.0, best_f1 = -1.0;
  for (double scale : {1.0, 0.75, 0.5, 0.25, 0.0}) {
    std::vector<double> tp(k), fp(k), fn(k);
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t pred = 0;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double v = logits[i][c] + scale * full[c];
        if (v > top) {
          top = v;
          pred = c;
        }
      }
      const auto truth = static_cast<std::size_t>(data[i].label);
      if (pred == truth) {
        tp[truth] += 1;
      } else {
        fp[pred] += 1;
        fn[truth] += 1;
      }
    }
    double f1 = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (tp[c] + fn[c] == 0) continue;
      ++present;
      f1 += tp[c] == 0 ? 0.0 : 2 * tp[c] / (2 * tp[c] + fp[c] + fn[c]);
    }
    f1 /= std::max(present, 1);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_scale = scale;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    // Absent classes keep their -1e9 so they are never predicted.
    if (full[c] > -1e8) net.logit_adjust[c] = best_scale * full[c];
  }
  return best_scale;
}

TrainResult train_impl(Network net, std::span<const WindowSample> train,
                       std::span<const WindowSample> validation, const TrainConfig& cfg,
                       Encoder encode) {
  cfg.validate();
  if (validation.empty()) fail(ErrorCode::EmptyValidation, "validation split is empty");
  const int k = net.classes();
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const int y = train[i].label;
    if (y < 0 || y >= k) fail(ErrorCode::ShapeMismatch, "label outside the class range");
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  int present = 0;
  for (const auto& c : by_class) present += c.empty() ? 0 : 1;
  if (present < 2) fail(ErrorCode::SingleClass, "training data has fewer than two classes");

#ifdef _OPENMP
  const int saved_threads = omp_get_max_threads();
  if (cfg.kernel_threads > 0) omp_set_num_threads(cfg.kernel_threads);
#endif

  // Sampled class frequencies differ from the corpus when the per-class cap
  // bites; shift the logits back to the corpus prior.
  std::vector<double> sampled(static_cast<std::size_t>(k));
  double sampled_total = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto n = by_class[static_cast<std::size_t>(c)].size();
    sampled[static_cast<std::size_t>(c)] =
        cfg.max_per_class > 0 ? static_cast<double>(std::min<std::size_t>(n, static_cast<std::size_t>(cfg.max_per_class)))
                              : static_cast<double>(n);
    sampled_total += sampled[static_cast<std::size_t>(c)];
  }
  net.logit_adjust.assign(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    const auto n = static_cast<double>(by_class[static_cast<std::size_t>(c)].size());
    net.logit_adjust[static_cast<std::size_t>(c)] =
        n == 0.0 ? -1e9
                 : std::log(n / static_cast<double>(train.size())) -
                       std::log(sampled[static_cast<std::size_t>(c)] / sampled_total);
  }

  net.init(cfg.seed);
  Adam adam(net, cfg);
  std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
  const auto val_idx = validation_subset(validation.size(), cfg.max_validation, cfg.seed);

  TrainResult result;
  result.net = net;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> grads = net.zeros_like();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::vector<double>> inputs(bs);
  std::vector<std::vector<Fixation>> noisy(bs);
  std::vector<const double*> xs;
  std::vector<int> ys;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order;
    for (auto idx : by_class) {
      std::shuffle(idx.begin(), idx.end(), rng);
      if (cfg.max_per_class > 0 && idx.size() > static_cast<std::size_t>(cfg.max_per_class)) {
        idx.resize(static_cast<std::size_t>(cfg.max_per_class));
      }
      order.insert(order.end(), idx.begin(), idx.end());
    }
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += bs) {
      const std::size_t n = std::min(bs, order.size() - b0);
      for (std::size_t i = 0; i < n; ++i) noisy[i] = jittered(train[order[b0 + i]].fixations, cfg, rng);
      xs.assign(n, nullptr);
      ys.assign(n, 0);
#pragma omp parallel
      {
        ScanplotImage scratch;
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < n; ++i) encode(noisy[i], cfg, inputs[i], scratch);
      }
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = inputs[i].data();
        ys[i] = train[order[b0 + i]].label;
      }
      loss_sum += net.loss_and_grad(xs, ys, grads) * static_cast<double>(n);
      adam.step(net, grads);
    }

    const Evaluation val = evaluate(net, validation, val_idx, cfg, encode);
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), val.loss, val.accuracy});
    if (val.loss < best) {
      best = val.loss;
      result.best_epoch = epoch;
      result.net = net;
    } else if (epoch - result.best_epoch >= cfg.patience) {
      break;
    }
  }
  if (cfg.tune_prior_scale) result.prior_scale = tune_prior_scale(result.net, validation, cfg, encode);
#ifdef _OPENMP
  if (cfg.kernel_threads > 0) omp_set_num_threads(saved_threads);
#endif
  return result;
}

}  // namespace

TrainResult train_2d(std::span<const WindowSample> train, std::span<const WindowSample> validation,
                     const TrainConfig& cfg, const Net2DConfig& net_cfg) {
  if (cfg.render.width_px != net_cfg.width || cfg.render.height_px != net_cfg.height) {
    fail(ErrorCode::ShapeMismatch, "render resolution does not match the network input");
  }
  return train_impl(Network::make_2d(net_cfg), train, validation, cfg, encode_2d);
}

TrainResult train_1d(std::span<const WindowSample> train, std::span<const WindowSample> validation,
                     const TrainConfig& cfg, const Net1DConfig& net_cfg) {
  for (const auto& s : train) {
    if (static_cast<int>(s.fixations.size()) != net_cfg.length) {
      fail(ErrorCode::ShapeMismatch, "window length does not match the 1D network");
    }
  }
  return train_impl(Network::make_1d(net_cfg), train, validation, cfg, encode_1d);
}

std::vector<double> predict_window(const Network& net, std::span<const Fixation> fixations,
                                   const RenderConfig& render) {
  std::vector<double> input;
  if (net.kind() == Network::Kind::Conv1D) {
    input = coordinate_window(fixations);
  } else {
    ScanplotImage scratch;
    rasterize(fixations, render, input, scratch);
  }
  if (static_cast<int>(input.size()) != net.input_size()) {
    fail(ErrorCode::ShapeMismatch, "input does not match the network");
  }
  return net.predict_proba(input.data());
}

double macro_f1(const Network& net, std::span<const WindowSample> data, const RenderConfig& render) {
  const auto k = static_cast<std::size_t>(net.classes());
  std::vector<int> pred(data.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < data.size(); ++i) {
    pred[i] = argmax(predict_window(net, data[i].fixations, render));
  }
  std::vector<double> tp(k), fp(k), fn(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto t = static_cast<std::size_t>(data[i].label), p = static_cast<std::size_t>(pred[i]);
    if (t == p) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (tp[c] + fn[c] == 0.0) continue;
    ++present;
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    sum += denom > 0.0 ? 2 * tp[c] / denom : 0.0;
  }
  if (present == 0) fail(ErrorCode::EmptySample, "no labeled windows to score");
  return sum / present;
}

GridSearchResult grid_search(std::span<const WindowSample> train,
                             std::span<const WindowSample> validation, const TrainConfig& base,
                             Network::Kind kind) {
  GridSearchResult out;
  for (double lr : {1e-3, 3e-4}) {
    for (double wd : {0.0, 1e-4}) {
      for (double noise : {0.0, 0.005}) {
        TrainConfig cfg = base;
        cfg.lr = lr;
        cfg.weight_decay = wd;
        cfg.noise_sigma = noise;
        auto r = kind == Network::Kind::Conv2D ? train_2d(train, validation, cfg)
                                               : train_1d(train, validation, cfg);
        GridPoint g{lr, wd, noise, macro_f1(r.net, validation, cfg.render),
                    r.history[static_cast<std::size_t>(r.best_epoch - 1)].val_loss, r.best_epoch};
        const bool better = out.points.empty() || g.val_macro_f1 > out.points[out.best].val_macro_f1 ||
                            (g.val_macro_f1 == out.points[out.best].val_macro_f1 &&
                             g.val_loss < out.points[out.best].val_loss);
        out.points.push_back(g);
        if (better) {
          out.best = out.points.size() - 1;
          out.model = std::move(r);
        }
      }
    }
  }
  return out;
}

std::string format_history_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,val_loss,val_accuracy\n";
  char buf[128];
  for (const auto& r : history) {
    const int n = std::snprintf(buf, sizeof buf, "%d,%.8g,%.8g,%.6g\n", r.epoch, r.train_loss,
                                r.val_loss, r.val_accuracy);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

StreamPredictor::StreamPredictor(const Network& net, const RenderConfig& render, std::size_t window)
    : net_(net), render_(render), window_(window) {
  if (window_ < 2) fail(ErrorCode::InvalidConfig, "stream window must be >= 2");
}

std::optional<StreamPrediction> StreamPredictor::push(const Fixation& f) {
  ++seen_;
  buffer_.push_back(f);
  if (buffer_.size() > window_) buffer_.pop_front();
  if (buffer_.size() < window_) return std::nullopt;
  const auto t0 = std::chrono::steady_clock::now();
  ordered_.assign(buffer_.begin(), buffer_.end());
  if (net_.kind() == Network::Kind::Conv1D) {
    input_ = coordinate_window(ordered_);
  } else {
    rasterize(ordered_, render_, input_, scratch_);
  }
  if (static_cast<int>(input_.size()) != net_.input_size()) {
    fail(ErrorCode::ShapeMismatch, "input does not match the network");
  }
  StreamPrediction p;
  p.fixation_index = seen_ - 1;
  p.probabilities = net_.predict_proba(input_.data());
  p.label = argmax(p.probabilities);
  p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

std::vector<StreamPrediction> predict_stream(const Network& net, std::span<const Fixation> fixations,
                                             const RenderConfig& render) {
  StreamPredictor sp(net, render);
  std::vector<StreamPrediction> out;
  for (const auto& f : fixations) {
    if (auto p = sp.push(f)) out.push_back(std::move(*p));
  }
  return out;
}

}  // namespace scanpath::cnn
