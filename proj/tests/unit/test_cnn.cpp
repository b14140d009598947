#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "../support/cnn_toys.hpp"
#include "../support/fixtures.hpp"
#include "scanpath/cnn/network.hpp"
#include "scanpath/cnn/train.hpp"
#include "scanpath/synth.hpp"

using namespace scanpath;
using namespace scanpath::cnn;

namespace {

std::vector<std::vector<double>> images(const std::vector<WindowSample>& w) {
  std::vector<std::vector<double>> out(w.size());
  ScanplotImage scratch;
  for (std::size_t i = 0; i < w.size(); ++i) rasterize(w[i].fixations, {}, out[i], scratch);
  return out;
}

std::vector<const double*> ptrs(const std::vector<std::vector<double>>& v) {
  std::vector<const double*> p;
  for (const auto& x : v) p.push_back(x.data());
  return p;
}

TrainConfig quick(int epochs) {
  TrainConfig c;
  c.max_epochs = epochs;
  c.patience = epochs;
  c.noise_sigma = 0;
  c.shift_sigma = 0;
  return c;
}

}  // namespace

TEST_CASE("zero weights give uniform probabilities") {
  auto net = Network::make_2d();
  for (auto& t : net.params()) std::fill(t.data.begin(), t.data.end(), 0.0);
  const auto x = images(toy::separable(1, 1));
  for (const auto& img : x) {
    for (double p : net.predict_proba(img.data())) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("probabilities sum to one and inference is deterministic") {
  auto net = Network::make_2d();
  net.init(3);
  const auto x = images(toy::separable(3, 2));
  for (const auto& img : x) {
    const auto p = net.predict_proba(img.data(), false);
    double s = 0;
    for (double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
    std::array<double, 3> a{}, b{};
    net.logits(img.data(), a.data());
    net.logits(img.data(), b.data());
    CHECK(std::memcmp(a.data(), b.data(), sizeof a) == 0);
  }
}

TEST_CASE("output bias gradient equals mean(softmax - onehot)") {
  auto net = Network::make_2d();
  net.init(4);
  const auto w = toy::separable(2, 3);
  const auto x = images(w);
  std::vector<int> y;
  for (const auto& s : w) y.push_back(s.label);
  auto grads = net.zeros_like();
  const auto xs = ptrs(x);
  const double loss = net.loss_and_grad(xs, y, grads);
  CHECK(loss > 0.0);
  std::array<double, 3> want{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = net.predict_proba(x[i].data(), false);
    for (std::size_t c = 0; c < 3; ++c) {
      want[c] += (p[c] - (static_cast<int>(c) == y[i] ? 1.0 : 0.0)) / static_cast<double>(x.size());
    }
  }
  const auto& gb = grads.back();
  REQUIRE(net.params().back().name == "fc3.bias");
  for (std::size_t c = 0; c < 3; ++c) CHECK(gb.data[c] == doctest::Approx(want[c]).epsilon(1e-10));
  CHECK(net.loss(xs, y) == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("reference and optimized kernels agree") {
  auto net = Network::make_2d();
  net.init(5);
  const auto w = toy::separable(2, 4);
  const auto x = images(w);
  std::vector<int> y;
  for (const auto& s : w) y.push_back(s.label);
  auto ga = net.zeros_like(), gb = net.zeros_like();
  const double la = net.loss_and_grad(ptrs(x), y, ga, KernelSet::Reference);
  const double lb = net.loss_and_grad(ptrs(x), y, gb, KernelSet::Optimized);
  CHECK(la == doctest::Approx(lb).epsilon(1e-12));
  double worst = 0;
  for (std::size_t t = 0; t < ga.size(); ++t) {
    for (std::size_t i = 0; i < ga[t].size(); ++i) {
      worst = std::max(worst, std::abs(ga[t].data[i] - gb[t].data[i]) / std::max(1e-8, std::abs(ga[t].data[i])));
    }
  }
  CHECK(worst < 1e-9);

  auto net1 = Network::make_1d();
  net1.init(6);
  std::vector<std::vector<double>> c;
  for (const auto& s : w) c.push_back(coordinate_window(s.fixations));
  auto g1 = net1.zeros_like(), g2 = net1.zeros_like();
  CHECK(net1.loss_and_grad(ptrs(c), y, g1, KernelSet::Reference) ==
        doctest::Approx(net1.loss_and_grad(ptrs(c), y, g2, KernelSet::Optimized)).epsilon(1e-12));
  for (std::size_t t = 0; t < g1.size(); ++t) {
    for (std::size_t i = 0; i < g1[t].size(); ++i) REQUIRE(g1[t].data[i] == doctest::Approx(g2[t].data[i]).epsilon(1e-9));
  }
}

TEST_CASE("single kernels: optimized matches reference") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  std::bernoulli_distribution zero(0.6);
  const int h = 12, wd = 10, cin = 8, cout = 16;
  std::vector<double> in(h * wd * cin), wt(9 * cin * cout), b(cout), dout(h * wd * cout);
  for (auto& v : in) v = zero(rng) ? 0.0 : n(rng);
  for (auto& v : wt) v = n(rng);
  for (auto& v : b) v = n(rng);
  for (auto& v : dout) v = zero(rng) ? 0.0 : n(rng);
  std::vector<double> o1(h * wd * cout), o2(o1.size());
  reference::conv2d_forward(in.data(), h, wd, cin, wt.data(), b.data(), cout, o1.data());
  optimized::conv2d_forward(in.data(), h, wd, cin, wt.data(), b.data(), cout, o2.data());
  for (std::size_t i = 0; i < o1.size(); ++i) REQUIRE(o1[i] == doctest::Approx(o2[i]).epsilon(1e-12));
  std::vector<double> di1(in.size()), di2(in.size()), dw1(wt.size()), dw2(wt.size()), db1(cout), db2(cout);
  reference::conv2d_backward(in.data(), h, wd, cin, wt.data(), cout, dout.data(), di1.data(), dw1.data(), db1.data());
  optimized::conv2d_backward(in.data(), h, wd, cin, wt.data(), cout, dout.data(), di2.data(), dw2.data(), db2.data());
  for (std::size_t i = 0; i < di1.size(); ++i) REQUIRE(di1[i] == doctest::Approx(di2[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < dw1.size(); ++i) REQUIRE(dw1[i] == doctest::Approx(dw2[i]).epsilon(1e-12));
  for (int i = 0; i < cout; ++i) REQUIRE(db1[static_cast<std::size_t>(i)] == doctest::Approx(db2[static_cast<std::size_t>(i)]));

  std::vector<double> d1(cout), d2(cout);
  reference::dense_forward(in.data(), 64, wt.data(), b.data(), cout, d1.data());
  optimized::dense_forward(in.data(), 64, wt.data(), b.data(), cout, d2.data());
  for (int i = 0; i < cout; ++i) REQUIRE(d1[static_cast<std::size_t>(i)] == doctest::Approx(d2[static_cast<std::size_t>(i)]).epsilon(1e-12));

  std::vector<double> dense_in(in.size());
  for (auto& v : dense_in) v = n(rng);
  std::vector<double> p1(h / 2 * wd / 2 * cin), p2(p1.size());
  std::vector<int> a1(p1.size()), a2(p1.size());
  reference::maxpool2_forward(dense_in.data(), h, wd, cin, p1.data(), a1.data());
  optimized::maxpool2_forward(dense_in.data(), h, wd, cin, p2.data(), a2.data());
  CHECK(p1 == p2);
  CHECK(a1 == a2);
}

TEST_CASE("one Adam step lowers the loss on a fixed batch") {
  const auto w = toy::separable(3, 7);
  const auto x = images(w);
  std::vector<int> y;
  for (const auto& s : w) y.push_back(s.label);
  const auto xs = ptrs(x);
  int lowered = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto net = Network::make_2d();
    net.init(seed);
    TrainConfig cfg;
    Adam adam(net, cfg);
    auto g = net.zeros_like();
    const double before = net.loss_and_grad(xs, y, g);
    adam.step(net, g);
    lowered += net.loss(xs, y) < before;
  }
  CHECK(lowered == 20);
}

TEST_CASE("toy corpus reaches full training accuracy") {
  const auto train = toy::separable(20, 11);
  const auto val = toy::separable(4, 12);
  const auto r = train_2d(train, val, quick(50));
  int right = 0;
  for (const auto& s : train) right += argmax(predict_window(r.net, s.fixations)) == s.label;
  CHECK(right == 60);
  CHECK(r.history.size() <= 50);

  const auto r1 = train_1d(train, val, quick(50));
  right = 0;
  for (const auto& s : train) right += argmax(predict_window(r1.net, s.fixations)) == s.label;
  CHECK(right == 60);
}

TEST_CASE("early stopping honors patience") {
  const auto train = toy::separable(6, 13);
  auto val = toy::separable(3, 14);
  // Shuffled validation labels make validation loss climb quickly.
  for (std::size_t i = 0; i < val.size(); ++i) val[i].label = static_cast<int>((i + 1) % 3);
  for (int patience : {1, 2, 3}) {
    TrainConfig cfg = quick(50);
    cfg.patience = patience;
    const auto r = train_1d(train, val, cfg);
    REQUIRE(r.best_epoch >= 1);
    const int last = r.history.back().epoch;
    CHECK(last - r.best_epoch <= patience);
    if (last < 50) CHECK(last - r.best_epoch == patience);
    double best = 1e300;
    for (const auto& h : r.history) best = std::min(best, h.val_loss);
    CHECK(r.history[static_cast<std::size_t>(r.best_epoch - 1)].val_loss == best);
  }
}

TEST_CASE("training errors") {
  const auto train = toy::separable(3, 15);
  std::vector<WindowSample> one;
  for (const auto& s : train) {
    if (s.label == 1) one.push_back(s);
  }
  CHECK_CODE(train_1d(one, train, quick(2)), ErrorCode::SingleClass);
  CHECK_CODE(train_1d(train, {}, quick(2)), ErrorCode::EmptyValidation);
  TrainConfig bad = quick(2);
  bad.render.width_px = 40;
  CHECK_CODE(train_2d(train, train, bad), ErrorCode::ShapeMismatch);
  bad = quick(2);
  bad.max_epochs = 51;
  CHECK_CODE(train_1d(train, train, bad), ErrorCode::InvalidConfig);
  bad = quick(2);
  bad.patience = 0;
  CHECK_CODE(train_1d(train, train, bad), ErrorCode::InvalidConfig);
}

TEST_CASE("absent classes are never predicted") {
  auto train = toy::separable(10, 16);
  std::erase_if(train, [](const WindowSample& s) { return s.label == 2; });
  const auto r = train_1d(train, toy::separable(3, 17), quick(10));
  for (const auto& s : toy::separable(10, 18)) {
    CHECK(argmax(predict_window(r.net, s.fixations)) != 2);
  }
}

TEST_CASE("prior correction scale comes from the grid and only touches logit_adjust") {
  auto train = toy::separable(12, 21);
  // Imbalanced so the prior correction is nonzero.
  std::erase_if(train, [n = 0](const WindowSample& s) mutable { return s.label == 1 && n++ % 3 != 0; });
  const auto val = toy::separable(4, 22);
  TrainConfig on = quick(3);
  on.max_per_class = 4;
  TrainConfig off = on;
  off.tune_prior_scale = false;
  const auto a = train_1d(train, val, on);
  const auto b = train_1d(train, val, off);
  CHECK(b.prior_scale == 1.0);
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  CHECK(std::find(grid.begin(), grid.end(), a.prior_scale) != grid.end());
  CHECK(a.net.params() == b.net.params());
  REQUIRE(a.net.logit_adjust.size() == b.net.logit_adjust.size());
  for (std::size_t c = 0; c < a.net.logit_adjust.size(); ++c) {
    CHECK(a.net.logit_adjust[c] == doctest::Approx(a.prior_scale * b.net.logit_adjust[c]));
  }
}

TEST_CASE("seeded training is reproducible") {
  const auto train = toy::separable(6, 19);
  const auto val = toy::separable(2, 20);
  TrainConfig cfg = quick(4);
  cfg.noise_sigma = 0.005;
  cfg.shift_sigma = 0.05;
  const auto a = train_2d(train, val, cfg);
  const auto b = train_2d(train, val, cfg);
  CHECK(a.net == b.net);
  CHECK(format_history_csv(a.history) == format_history_csv(b.history));
  cfg.seed = 2;
  CHECK_FALSE(train_2d(train, val, cfg).net == a.net);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  auto net = Network::make_2d();
  net.init(21);
  net.logit_adjust = {0.1, -0.2, 0.05};
  const auto bytes = encode_checkpoint(net);
  CHECK(bytes.substr(0, 4) == "SPCN");
  CHECK(decode_checkpoint(bytes) == net);
  CHECK_CODE(decode_checkpoint("XXXX" + bytes.substr(4)), ErrorCode::ParseError);
  CHECK_CODE(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ErrorCode::ParseError);
  CHECK_CODE(decode_checkpoint(bytes + "x"), ErrorCode::ParseError);
  auto n1 = Network::make_1d();
  n1.init(22);
  CHECK(decode_checkpoint(encode_checkpoint(n1)) == n1);
}

TEST_CASE("architecture") {
  const auto net = Network::make_2d();
  CHECK(net.parameter_count() < 1000000);
  CHECK(net.classes() == 3);
  CHECK(net.input_size() == 85 * 110 * 3);
  CHECK(net.params().size() == 12);
  CHECK(Network::make_1d().input_size() == 20);
  Net2DConfig tiny;
  tiny.height = 4;
  CHECK_CODE(Network::make_2d(tiny), ErrorCode::InvalidConfig);
}

TEST_CASE("streaming emits one prediction per fixation after the first window") {
  auto net = Network::make_2d();
  net.init(23);
  const auto g = generate_segment(default_params(BehaviorLabel::Sequential), make_default_layout(), 20, 5);
  REQUIRE(g.fixations.size() > 12);
  const auto p = predict_stream(net, g.fixations);
  CHECK(p.size() == g.fixations.size() - 9);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i].fixation_index == i + 9);
    CHECK(p[i].probabilities.size() == 3u);
    CHECK(p[i].label == argmax(p[i].probabilities));
  }
  const auto q = predict_stream(net, g.fixations);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i].probabilities == p[i].probabilities);
  CHECK(predict_stream(net, std::span(g.fixations).first(9)).empty());
  StreamPredictor sp(net);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto r = sp.push(g.fixations[i]);
    CHECK(r.has_value() == (i == 9));
  }
}
