#include "scanpath/cnn/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "scanpath/error.hpp"
#include "scanpath/json_io.hpp"

namespace scanpath::cnn {

std::size_t Network::Stage::in_size() const {
  return static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(cin);
}

std::size_t Network::Stage::out_size() const {
  return static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(cout);
}

std::size_t Network::Stage::next_size() const {
  if (!pool) return out_size();
  return static_cast<std::size_t>(h / 2) * static_cast<std::size_t>(w / 2) *
         static_cast<std::size_t>(cout);
}

struct Network::Workspace {
  std::vector<std::vector<double>> out;   // per stage, post-ReLU
  std::vector<std::vector<double>> next;  // per pooled stage
  std::vector<std::vector<int>> argmax;
  std::vector<std::vector<double>> grad_a;
  std::vector<std::vector<double>> grad_b;

  explicit Workspace(const std::vector<Stage>& stages) {
    for (const auto& s : stages) {
      out.emplace_back(s.out_size());
      next.emplace_back(s.pool ? s.next_size() : 0);
      argmax.emplace_back(s.pool ? s.next_size() : 0);
    }
    std::size_t biggest = 0;
    for (const auto& s : stages) biggest = std::max({biggest, s.in_size(), s.out_size()});
    grad_a.assign(1, std::vector<double>(biggest));
    grad_b.assign(1, std::vector<double>(biggest));
  }

  const double* stage_output(std::size_t i, const std::vector<Stage>& stages) const {
    return stages[i].pool ? next[i].data() : out[i].data();
  }
};

namespace {

Tensor make_tensor(std::string name, std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)};
}

}  // namespace

Network Network::make_2d(const Net2DConfig& cfg) {
  if (cfg.height < 8 || cfg.width < 8) fail(ErrorCode::InvalidConfig, "image too small for 3 pools");
  Network n;
  n.kind_ = Kind::Conv2D;
  n.config_ = {cfg.height,      cfg.width,      cfg.channels[0], cfg.channels[1], cfg.channels[2],
               cfg.channels[3], cfg.hidden[0],  cfg.hidden[1],   cfg.classes};
  n.classes_ = cfg.classes;
  n.input_size_ = cfg.height * cfg.width * cfg.channels[0];
  int h = cfg.height, w = cfg.width;
  for (int l = 0; l < 3; ++l) {
    Stage s{Stage::Op::Conv2D};
    s.h = h;
    s.w = w;
    s.cin = cfg.channels[static_cast<std::size_t>(l)];
    s.cout = cfg.channels[static_cast<std::size_t>(l) + 1];
    s.pool = true;
    s.weight = static_cast<int>(n.params_.size());
    n.params_.push_back(make_tensor("conv" + std::to_string(l + 1) + ".weight", {3, 3, s.cin, s.cout}));
    s.bias = static_cast<int>(n.params_.size());
    n.params_.push_back(make_tensor("conv" + std::to_string(l + 1) + ".bias", {s.cout}));
    n.stages_.push_back(s);
    h /= 2;
    w /= 2;
  }
  const std::array<int, 4> dims = {h * w * cfg.channels[3], cfg.hidden[0], cfg.hidden[1], cfg.classes};
  for (int l = 0; l < 3; ++l) {
    Stage s{Stage::Op::Dense};
    s.cin = dims[static_cast<std::size_t>(l)];
    s.cout = dims[static_cast<std::size_t>(l) + 1];
    s.relu = l < 2;
    s.weight = static_cast<int>(n.params_.size());
    n.params_.push_back(make_tensor("fc" + std::to_string(l + 1) + ".weight", {s.cout, s.cin}));
    s.bias = static_cast<int>(n.params_.size());
    n.params_.push_back(make_tensor("fc" + std::to_string(l + 1) + ".bias", {s.cout}));
    n.stages_.push_back(s);
  }
  return n;
}

Network Network::make_1d(const Net1DConfig& cfg) {
  if (cfg.length < 1) fail(ErrorCode::InvalidConfig, "1D input length must be positive");
  Network n;
  n.kind_ = Kind::Conv1D;
  n.config_ = {cfg.length, cfg.in_channels, cfg.channels[0], cfg.channels[1], cfg.classes};
  n.classes_ = cfg.classes;
  n.input_size_ = cfg.length * cfg.in_channels;
  int cin = cfg.in_channels;
  for (int l = 0; l < 2; ++l) {
    Stage s{Stage::Op::Conv1D};
    s.w = cfg.length;
    s.cin = cin;
    s.cout = cfg.channels[static_cast<std::size_t>(l)];
    s.weight = static_cast<int>(n.params_.size());
    n.params_.push_back(make_tensor("conv" + std::to_string(l + 1) + ".weight", {3, s.cin, s.cout}));
    s.bias = static_cast<int>(n.params_.size());
    n.params_.push_back(make_tensor("conv" + std::to_string(l + 1) + ".bias", {s.cout}));
    n.stages_.push_back(s);
    cin = s.cout;
  }
  Stage d{Stage::Op::Dense};
  d.cin = cfg.length * cin;
  d.cout = cfg.classes;
  d.relu = false;
  d.weight = static_cast<int>(n.params_.size());
  n.params_.push_back(make_tensor("fc1.weight", {d.cout, d.cin}));
  d.bias = static_cast<int>(n.params_.size());
  n.params_.push_back(make_tensor("fc1.bias", {d.cout}));
  n.stages_.push_back(d);
  return n;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += t.size();
  return n;
}

void Network::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& s : stages_) {
    const int fan_in = s.op == Stage::Op::Dense ? s.cin
                       : s.op == Stage::Op::Conv1D ? 3 * s.cin
                                                   : 9 * s.cin;
    std::normal_distribution<double> d(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : params_[static_cast<std::size_t>(s.weight)].data) v = d(rng);
    std::fill(params_[static_cast<std::size_t>(s.bias)].data.begin(),
              params_[static_cast<std::size_t>(s.bias)].data.end(), 0.0);
  }
}

std::vector<Tensor> Network::zeros_like() const {
  std::vector<Tensor> out = params_;
  for (auto& t : out) std::fill(t.data.begin(), t.data.end(), 0.0);
  return out;
}

void Network::forward(const double* x, Workspace& ws, const Kernels& k) const {
  const double* in = x;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Stage& s = stages_[i];
    const double* wt = params_[static_cast<std::size_t>(s.weight)].data.data();
    const double* b = params_[static_cast<std::size_t>(s.bias)].data.data();
    double* out = ws.out[i].data();
    switch (s.op) {
      case Stage::Op::Conv2D: k.conv2d_forward(in, s.h, s.w, s.cin, wt, b, s.cout, out); break;
      case Stage::Op::Conv1D: k.conv1d_forward(in, s.w, s.cin, wt, b, s.cout, out); break;
      case Stage::Op::Dense: k.dense_forward(in, s.cin, wt, b, s.cout, out); break;
    }
    if (s.relu) k.relu_forward(out, static_cast<int>(s.out_size()));
    if (s.pool) k.maxpool2_forward(out, s.h, s.w, s.cout, ws.next[i].data(), ws.argmax[i].data());
    in = ws.stage_output(i, stages_);
  }
}

namespace {

// Log-softmax cross-entropy; fills probabilities.
double cross_entropy(const double* logits, int n, int y, double* prob) {
  double m = logits[0];
  for (int c = 1; c < n; ++c) m = std::max(m, logits[c]);
  double z = 0.0;
  for (int c = 0; c < n; ++c) z += std::exp(logits[c] - m);
  const double lz = m + std::log(z);
  for (int c = 0; c < n; ++c) prob[c] = std::exp(logits[c] - lz);
  return lz - logits[y];
}

}  // namespace

double Network::sample_forward_backward(const double* x, int y, Workspace& ws,
                                        std::vector<Tensor>* grads, const Kernels& k) const {
  if (y < 0 || y >= classes_) fail(ErrorCode::ShapeMismatch, "label outside the class range");
  forward(x, ws, k);
  const std::size_t last = stages_.size() - 1;
  std::vector<double> prob(static_cast<std::size_t>(classes_));
  const double loss = cross_entropy(ws.out[last].data(), classes_, y, prob.data());
  if (!grads) return loss;

  // d loss / d logits = softmax - onehot.
  std::vector<double>* cur = &ws.grad_a[0];
  std::vector<double>* nxt = &ws.grad_b[0];
  for (int c = 0; c < classes_; ++c) (*cur)[static_cast<std::size_t>(c)] = prob[static_cast<std::size_t>(c)];
  (*cur)[static_cast<std::size_t>(y)] -= 1.0;

  for (std::size_t ii = stages_.size(); ii-- > 0;) {
    const Stage& s = stages_[ii];
    double* dout = cur->data();
    if (s.pool) {
      k.maxpool2_backward(cur->data(), ws.argmax[ii].data(), s.h, s.w, s.cout, nxt->data());
      std::swap(cur, nxt);
      dout = cur->data();
    }
    if (s.relu) k.relu_backward(ws.out[ii].data(), dout, static_cast<int>(s.out_size()));
    const double* in = ii == 0 ? x : ws.stage_output(ii - 1, stages_);
    double* din = ii == 0 ? nullptr : nxt->data();
    const double* wt = params_[static_cast<std::size_t>(s.weight)].data.data();
    double* dw = (*grads)[static_cast<std::size_t>(s.weight)].data.data();
    double* db = (*grads)[static_cast<std::size_t>(s.bias)].data.data();
    switch (s.op) {
      case Stage::Op::Conv2D: k.conv2d_backward(in, s.h, s.w, s.cin, wt, s.cout, dout, din, dw, db); break;
      case Stage::Op::Conv1D: k.conv1d_backward(in, s.w, s.cin, wt, s.cout, dout, din, dw, db); break;
      case Stage::Op::Dense: k.dense_backward(in, s.cin, wt, s.cout, dout, din, dw, db); break;
    }
    std::swap(cur, nxt);
  }
  return loss;
}

void Network::logits(const double* x, double* out, KernelSet ks) const {
  // One workspace per thread, rebuilt when the layer shapes change.
  thread_local std::vector<std::size_t> shape_key;
  thread_local std::unique_ptr<Workspace> ws;
  std::vector<std::size_t> key;
  for (const auto& s : stages_) key.push_back(s.out_size() * 4 + (s.pool ? 1 : 0));
  if (!ws || key != shape_key) {
    ws = std::make_unique<Workspace>(stages_);
    shape_key = key;
  }
  forward(x, *ws, kernels(ks));
  const auto& l = ws->out.back();
  std::copy(l.begin(), l.begin() + classes_, out);
}

std::vector<double> Network::predict_proba(const double* x, bool adjusted, KernelSet ks) const {
  std::vector<double> l(static_cast<std::size_t>(classes_));
  logits(x, l.data(), ks);
  if (adjusted && logit_adjust.size() == l.size()) {
    for (std::size_t c = 0; c < l.size(); ++c) l[c] += logit_adjust[c];
  }
  std::vector<double> p(l.size());
  cross_entropy(l.data(), classes_, 0, p.data());
  return p;
}

double Network::loss_and_grad(std::span<const double* const> xs, std::span<const int> ys,
                              std::vector<Tensor>& grads, KernelSet ks) const {
  if (xs.size() != ys.size() || xs.empty()) {
    fail(ErrorCode::ShapeMismatch, "batch needs one label per input");
  }
  const Kernels& k = kernels(ks);
  const int n = static_cast<int>(xs.size());
  if (grads.size() != params_.size()) grads = zeros_like();

  if (ks == KernelSet::Reference) {
    for (auto& t : grads) std::fill(t.data.begin(), t.data.end(), 0.0);
    Workspace ws(stages_);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += sample_forward_backward(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)], ws, &grads, k);
    }
    for (auto& t : grads) {
      for (auto& v : t.data) v /= n;
    }
    return total / n;
  }

  std::vector<std::vector<Tensor>> chunk_grads(kGradChunks);
  std::vector<double> chunk_loss(kGradChunks, 0.0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < kGradChunks; ++c) {
    const int lo = n * c / kGradChunks, hi = n * (c + 1) / kGradChunks;
    if (lo >= hi) continue;
    chunk_grads[static_cast<std::size_t>(c)] = zeros_like();
    Workspace ws(stages_);
    for (int i = lo; i < hi; ++i) {
      chunk_loss[static_cast<std::size_t>(c)] += sample_forward_backward(
          xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)], ws,
          &chunk_grads[static_cast<std::size_t>(c)], k);
    }
  }
  double total = 0.0;
  for (auto& t : grads) std::fill(t.data.begin(), t.data.end(), 0.0);
  for (int c = 0; c < kGradChunks; ++c) {
    const auto& cg = chunk_grads[static_cast<std::size_t>(c)];
    if (cg.empty()) continue;
    total += chunk_loss[static_cast<std::size_t>(c)];
    for (std::size_t t = 0; t < grads.size(); ++t) {
      auto& dst = grads[t].data;
      const auto& src = cg[t].data;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  const double inv = 1.0 / n;
  for (auto& t : grads) {
    for (auto& v : t.data) v *= inv;
  }
  return total * inv;
}

double Network::loss(std::span<const double* const> xs, std::span<const int> ys, KernelSet ks) const {
  if (xs.size() != ys.size() || xs.empty()) {
    fail(ErrorCode::ShapeMismatch, "batch needs one label per input");
  }
  const Kernels& k = kernels(ks);
  const int n = static_cast<int>(xs.size());
  std::vector<double> per(static_cast<std::size_t>(n));
#pragma omp parallel
  {
    Workspace ws(stages_);
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      per[static_cast<std::size_t>(i)] = sample_forward_backward(
          xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)], ws, nullptr, k);
    }
  }
  double total = 0.0;
  for (double v : per) total += v;
  return total / n;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& s, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s_[pos_++])) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) fail(ErrorCode::ParseError, "checkpoint truncated");
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Network& net) {
  std::string out = "SPCN";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.kind()));
  put_u32(out, static_cast<std::uint32_t>(net.config().size()));
  for (int c : net.config()) put_u32(out, static_cast<std::uint32_t>(c));
  put_u32(out, static_cast<std::uint32_t>(net.logit_adjust.size()));
  for (double v : net.logit_adjust) put_f64(out, v);
  put_u32(out, static_cast<std::uint32_t>(net.params().size()));
  for (const auto& t : net.params()) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data) put_f64(out, v);
  }
  return out;
}

Network decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 4, "SPCN") != 0) {
    fail(ErrorCode::ParseError, "not a scanpath checkpoint");
  }
  Reader r(bytes);
  r.bytes(4);
  if (r.u32() != kCheckpointVersion) fail(ErrorCode::SchemaMismatch, "unsupported checkpoint version");
  const auto kind = static_cast<Network::Kind>(r.u32());
  std::vector<int> cfg(r.u32());
  for (auto& c : cfg) c = static_cast<int>(r.u32());
  Network net;
  if (kind == Network::Kind::Conv2D && cfg.size() == 9) {
    net = Network::make_2d({cfg[0], cfg[1], {cfg[2], cfg[3], cfg[4], cfg[5]}, {cfg[6], cfg[7]}, cfg[8]});
  } else if (kind == Network::Kind::Conv1D && cfg.size() == 5) {
    net = Network::make_1d({cfg[0], cfg[1], {cfg[2], cfg[3]}, cfg[4]});
  } else {
    fail(ErrorCode::SchemaMismatch, "unknown network kind or config");
  }
  net.logit_adjust.resize(r.u32());
  for (auto& v : net.logit_adjust) v = r.f64();
  const std::uint32_t n = r.u32();
  if (n != net.params().size()) fail(ErrorCode::SchemaMismatch, "tensor count mismatch");
  for (auto& t : net.params()) {
    const std::string name = r.bytes(r.u32());
    std::vector<int> shape(r.u32());
    for (auto& d : shape) d = static_cast<int>(r.u32());
    if (name != t.name || shape != t.shape) {
      fail(ErrorCode::SchemaMismatch, "tensor " + name + " does not match the layer table");
    }
    for (auto& v : t.data) v = r.f64();
  }
  if (!r.done()) fail(ErrorCode::ParseError, "trailing bytes in checkpoint");
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
  write_file_atomic(path, encode_checkpoint(net));
}

Network load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_text_file(path));
}

}  // namespace scanpath::cnn
