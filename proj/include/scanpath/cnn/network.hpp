#pragma once

// Small 2D CNN over scanplots and 1D CNN over raw fixation coordinates.
//
// 2D: conv 3->8, 8->16, 16->32 (3x3, pad 1) each followed by ReLU and 2x2
// max-pool, then dense ->128 ->64 (ReLU) ->classes.
// 1D: conv 2->16, 16->32 (kernel 3, pad 1) with ReLU, then dense ->classes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scanpath/cnn/kernels.hpp"

namespace scanpath::cnn {

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;

  std::size_t size() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

struct Net2DConfig {
  int height = 110;
  int width = 85;
  std::array<int, 4> channels = {3, 8, 16, 32};
  std::array<int, 2> hidden = {128, 64};
  int classes = 3;
};

struct Net1DConfig {
  int length = 10;
  int in_channels = 2;
  std::array<int, 2> channels = {16, 32};
  int classes = 3;
};

/// Number of fixed-size chunks a batch is split into for the gradient
/// reduction; keeps results identical for any thread count.
inline constexpr int kGradChunks = 4;

class Network {
 public:
  enum class Kind : std::uint32_t { Conv1D = 1, Conv2D = 2 };

  static Network make_2d(const Net2DConfig& cfg = {});
  static Network make_1d(const Net1DConfig& cfg = {});

  Kind kind() const { return kind_; }
  int input_size() const { return input_size_; }
  int classes() const { return classes_; }
  const std::vector<int>& config() const { return config_; }

  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::size_t parameter_count() const;

  /// He-normal weights, zero biases.
  void init(std::uint64_t seed);
  /// Zeros of the parameter shapes (gradient buffers).
  std::vector<Tensor> zeros_like() const;

  /// Added to the logits by predict_proba; empty means no adjustment.
  std::vector<double> logit_adjust;

  struct Workspace;

  /// Raw logits for one sample.
  void logits(const double* x, double* out, KernelSet ks = KernelSet::Optimized) const;

  /// Softmax over (logits + logit_adjust when `adjusted`).
  std::vector<double> predict_proba(const double* x, bool adjusted = true,
                                    KernelSet ks = KernelSet::Optimized) const;

  /// Mean cross-entropy over the batch; `grads` receives its gradient.
  double loss_and_grad(std::span<const double* const> xs, std::span<const int> ys,
                       std::vector<Tensor>& grads, KernelSet ks = KernelSet::Optimized) const;

  /// Mean cross-entropy without gradients.
  double loss(std::span<const double* const> xs, std::span<const int> ys,
              KernelSet ks = KernelSet::Optimized) const;

  bool operator==(const Network& o) const {
    return kind_ == o.kind_ && config_ == o.config_ && params_ == o.params_ &&
           logit_adjust == o.logit_adjust;
  }

 private:
  struct Stage {
    enum class Op { Conv2D, Conv1D, Dense } op;
    int h = 1, w = 1, cin = 0, cout = 0;  // Conv1D uses w as length; Dense uses cin/cout
    bool relu = true;
    bool pool = false;
    int weight = 0, bias = 0;  // indices into params_
    std::size_t in_size() const;
    std::size_t out_size() const;  // before pooling
    std::size_t next_size() const;
  };

  double sample_forward_backward(const double* x, int y, Workspace& ws, std::vector<Tensor>* grads,
                                 const Kernels& k) const;
  void forward(const double* x, Workspace& ws, const Kernels& k) const;

  Kind kind_ = Kind::Conv2D;
  std::vector<int> config_;
  int input_size_ = 0;
  int classes_ = 3;
  std::vector<Stage> stages_;
  std::vector<Tensor> params_;
};

/// Checkpoint: "SPCN", u32 version, u32 kind, u32 n_config, i32 config...,
/// u32 n_adjust, f64 adjust..., u32 n_tensors, then per tensor u32 name
/// length, name bytes, u32 rank, u32 dims..., f64 data (row-major). All
/// little-endian.
std::string encode_checkpoint(const Network& net);
Network decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace scanpath::cnn
