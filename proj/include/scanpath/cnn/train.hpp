#pragma once

// Adam training with early stopping and fixation-noise augmentation, and the
// streaming predictor.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scanpath/cnn/network.hpp"
#include "scanpath/core.hpp"
#include "scanpath/render.hpp"

namespace scanpath::cnn {

/// One fixation window with its class index into kTrainedBehaviors.
struct WindowSample {
  std::vector<Fixation> fixations;
  int label = 0;
  std::string participant_id;
};

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // L2 term added to every gradient
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 5;
  double noise_sigma = 0.005;  // page units, added to fixation x/y
  double shift_sigma = 0.08;   // page units, one offset per window
  std::uint64_t seed = 1;
  /// Per-epoch class-balanced subsample: at most this many windows of each
  /// class, redrawn every epoch. 0 uses every window every epoch.
  int max_per_class = 0;
  /// Validation windows scored per epoch (deterministic subsample); 0 = all.
  int max_validation = 0;
  RenderConfig render;
  int kernel_threads = 0;  // 0 = leave the OpenMP default
  /// Scale the prior logit correction by the value in {0, .25, .5, .75, 1}
  /// with the best validation macro F1.
  bool tune_prior_scale = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double prior_scale = 1.0;
};

class Adam {
 public:
  Adam(const Network& net, const TrainConfig& cfg);
  void step(Network& net, const std::vector<Tensor>& grads);
  long steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_, wd_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Scanplot of the window as a network input (HWC doubles).
void rasterize(std::span<const Fixation> fixations, const RenderConfig& cfg,
               std::vector<double>& out, ScanplotImage& scratch);

/// 10x2 (length x channel) raw fixation coordinates, channel 0 = x, 1 = y.
std::vector<double> coordinate_window(std::span<const Fixation> fixations);

/// Fixation windows -> 2D CNN. Throws SingleClass when `train` has fewer
/// than two classes and EmptyValidation when `validation` is empty.
TrainResult train_2d(std::span<const WindowSample> train, std::span<const WindowSample> validation,
                     const TrainConfig& cfg, const Net2DConfig& net_cfg = {});

/// Raw fixation coordinates -> 1D CNN; same contract as train_2d.
TrainResult train_1d(std::span<const WindowSample> train, std::span<const WindowSample> validation,
                     const TrainConfig& cfg, const Net1DConfig& net_cfg = {});

/// Macro F1 of argmax predictions over the classes present in `data`.
double macro_f1(const Network& net, std::span<const WindowSample> data,
                const RenderConfig& render = {});

struct GridPoint {
  double lr = 0.0;
  double weight_decay = 0.0;
  double noise_sigma = 0.0;
  double val_macro_f1 = 0.0;
  double val_loss = 0.0;
  int best_epoch = 0;
};

struct GridSearchResult {
  std::vector<GridPoint> points;
  std::size_t best = 0;  // index into points
  TrainResult model;     // trained at points[best]
};

/// {lr 1e-3, 3e-4} x {weight_decay 0, 1e-4} x {noise_sigma 0, 0.005} over
/// `base`; best by validation macro F1, ties to the lower validation loss.
GridSearchResult grid_search(std::span<const WindowSample> train,
                             std::span<const WindowSample> validation, const TrainConfig& base,
                             Network::Kind kind = Network::Kind::Conv2D);

/// Class probabilities (prior-adjusted) for one window.
std::vector<double> predict_window(const Network& net, std::span<const Fixation> fixations,
                                   const RenderConfig& render = {});
int argmax(std::span<const double> p);

/// epoch,train_loss,val_loss,val_accuracy
std::string format_history_csv(std::span<const EpochRecord> history);

struct StreamPrediction {
  std::size_t fixation_index = 0;  // last fixation of the window
  int label = 0;
  std::vector<double> probabilities;
  double latency_ms = 0.0;  // render + inference
};

/// Buffers fixations and predicts on every full 10-window.
class StreamPredictor {
 public:
  explicit StreamPredictor(const Network& net, const RenderConfig& render = {},
                           std::size_t window = 10);
  std::optional<StreamPrediction> push(const Fixation& f);

 private:
  const Network& net_;
  RenderConfig render_;
  std::size_t window_;
  std::size_t seen_ = 0;
  std::deque<Fixation> buffer_;
  std::vector<Fixation> ordered_;
  ScanplotImage scratch_;
  std::vector<double> input_;
};

std::vector<StreamPrediction> predict_stream(const Network& net, std::span<const Fixation> fixations,
                                             const RenderConfig& render = {});

}  // namespace scanpath::cnn
