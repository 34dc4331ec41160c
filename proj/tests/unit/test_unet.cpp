#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "buzzdet/models/unet.hpp"
#include "buzzdet/nn/dice.hpp"
#include "oracles.hpp"

using namespace buzzdet;
using namespace buzzdet::models;

namespace {

UNetConfig small_cfg() {
  UNetConfig c;
  c.depth = 2;
  c.filters = 2;
  c.segment_length = 64;
  c.batch_size = 4;
  c.learning_rate = 1e-2;
  c.seed = 11;
  return c;
}

SegmentSet toy_segments(oracle::Rng& rng, std::size_t n, std::size_t len) {
  SegmentSet s;
  s.length = len;
  for (std::size_t k = 0; k < n; ++k) {
    Segment seg;
    seg.x = oracle::normal_vec(rng, 4 * len);
    seg.y.resize(len);
    for (std::size_t t = 0; t < len; ++t) seg.y[t] = seg.x[t] > 0.8 ? 1 : 0;
    s.items.push_back(std::move(seg));
  }
  return s;
}

double dice_of(const UNet& net, const nn::Tensor3& x, const std::vector<std::uint8_t>& y) {
  const auto p = net.forward(x);
  return nn::dice_loss<double>(p.data(), y).loss;
}

}  // namespace

TEST(UNet, OutputShapeAndRange) {
  const UNet net(small_cfg());
  oracle::Rng rng(41);
  nn::Tensor3 x(3, 4, 64);
  for (auto& v : x.data()) v = oracle::normal_vec(rng, 1)[0] * 5.0;
  const auto p = net.forward(x);
  EXPECT_EQ(p.batch(), 3u);
  EXPECT_EQ(p.channels(), 1u);
  EXPECT_EQ(p.length(), 64u);
  for (double v : p.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(net.forward(nn::Tensor3(1, 3, 64)), ShapeError);
  EXPECT_THROW(net.forward(nn::Tensor3(1, 4, 66)), ShapeError);
}

TEST(UNet, ParameterCountMatchesClosedForm) {
  for (std::size_t d : {1u, 2u, 4u})
    for (std::size_t f : {1u, 4u, 8u}) {
      UNetConfig c;
      c.depth = d;
      c.filters = f;
      EXPECT_EQ(UNet(c).param_count(), unet_param_count(c));
    }
  UNetConfig a, b;
  b.filters = 8;
  const double ratio = static_cast<double>(unet_param_count(b)) / static_cast<double>(unet_param_count(a));
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.0);
}

TEST(UNet, ZeroInputGivesHalfEverywhere) {
  const UNet net(UNetConfig{});
  const auto p = net.forward(nn::Tensor3(1, 4, 1024));
  for (double v : p.storage()) EXPECT_EQ(v, 0.5);
}

TEST(UNet, ConfigValidation) {
  UNetConfig c;
  c.segment_length = 1000;
  EXPECT_THROW(UNet{c}, ConfigError);
  c = UNetConfig{};
  c.kernel = 4;
  EXPECT_THROW(UNet{c}, ConfigError);
  c = UNetConfig{};
  c.filters = 0;
  EXPECT_THROW(UNet{c}, ConfigError);
}

TEST(UNet, SameSeedSameWeights) {
  EXPECT_TRUE(UNet(small_cfg()) == UNet(small_cfg()));
  auto c = small_cfg();
  c.seed = 12;
  EXPECT_FALSE(UNet(small_cfg()) == UNet(c));
}

TEST(UNet, BackwardMatchesFiniteDifferences) {
  auto cfg = small_cfg();
  cfg.segment_length = 16;
  UNet net(cfg);
  oracle::Rng rng(42);
  // Nonzero biases so no layer sits exactly on a ReLU kink.
  for (auto& l : net.layers())
    for (auto& b : l.bias) b = 0.05 * oracle::normal_vec(rng, 1)[0];
  nn::Tensor3 x(2, 4, 16);
  std::copy_n(oracle::normal_vec(rng, x.data().size()).begin(), x.data().size(), x.data().begin());
  std::vector<std::uint8_t> y(32);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 5 == 0) ? 1 : 0;

  UNet::Cache cache;
  const auto p = net.forward(x, &cache);
  const auto dl = nn::dice_loss<double>(p.data(), y);
  nn::Tensor3 gp(2, 1, 16);
  std::copy(dl.grad.begin(), dl.grad.end(), gp.data().begin());
  const auto grads = net.backward(cache, gp);
  ASSERT_EQ(grads.size(), net.layers().size());

  std::size_t checked = 0, bad = 0;
  const double h = 1e-6;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    auto check = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + h;
      const double up = dice_of(net, x, y);
      param = keep - h;
      const double dn = dice_of(net, x, y);
      param = keep;
      const double fd = (up - dn) / (2.0 * h);
      ++checked;
      if (std::abs(fd - analytic) > 1e-4 * std::max(1.0, std::abs(fd)) + 1e-7) {
        ++bad;
        ADD_FAILURE() << "layer " << li << " fd " << fd << " analytic " << analytic;
      }
    };
    auto& layer = net.layers()[li];
    for (std::size_t i = 0; i < layer.weight.size(); i += 3) check(layer.weight[i], grads[li].grad_w[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i) check(layer.bias[i], grads[li].grad_b[i]);
  }
  EXPECT_GT(checked, 100u);
  EXPECT_EQ(bad, 0u);
}

TEST(UNetTrain, ReproducibleAndReturnsBestSnapshot) {
  oracle::Rng rng(43);
  const auto tr = toy_segments(rng, 12, 64), va = toy_segments(rng, 4, 64);
  auto cfg = small_cfg();
  cfg.max_epochs = 6;
  cfg.patience = 6;
  const auto a = unet_train(UNet(cfg), tr, va, cfg);
  const auto b = unet_train(UNet(cfg), tr, va, cfg);
  EXPECT_TRUE(a.model == b.model);
  ASSERT_EQ(a.trace.size(), 6u);
  double best = 1.0;
  std::size_t best_epoch = 0;
  for (const auto& s : a.trace) {
    EXPECT_EQ(s.val_dice, b.trace[s.epoch - 1].val_dice);
    if (s.val_dice < best) {
      best = s.val_dice;
      best_epoch = s.epoch;
    }
  }
  EXPECT_EQ(a.best_epoch, best_epoch);
  EXPECT_EQ(a.best_val_dice, best);
  EXPECT_EQ(set_dice(a.model, va), best);
  EXPECT_LT(a.trace.back().train_dice, a.trace.front().train_dice);
}

TEST(UNetTrain, PatienceStopsEarly) {
  oracle::Rng rng(44);
  const auto tr = toy_segments(rng, 4, 64), va = toy_segments(rng, 2, 64);
  auto cfg = small_cfg();
  cfg.learning_rate = 0.5;
  cfg.max_epochs = 30;
  cfg.patience = 2;
  const auto r = unet_train(UNet(cfg), tr, va, cfg);
  if (r.trace.size() < cfg.max_epochs) EXPECT_EQ(r.trace.size(), r.best_epoch + cfg.patience);
  for (std::size_t e = r.best_epoch; e < r.trace.size(); ++e) EXPECT_GE(r.trace[e].val_dice, r.best_val_dice);
  EXPECT_THROW(unet_train(UNet(cfg), SegmentSet{}, va, cfg), ConfigError);
}
