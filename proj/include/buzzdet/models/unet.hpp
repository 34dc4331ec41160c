#pragma once

// 1D encoder-decoder segmentation network with skip connections and a
// per-sample sigmoid head, trained on smoothed Dice loss with Adam.
//
// Layer order in `layers`: encoder convs (two per level, shallow to deep),
// two bottleneck convs, decoder convs (two per level, deep to shallow), and
// the width-1 head.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/nn/adam.hpp"
#include "buzzdet/nn/dice.hpp"
#include "buzzdet/nn/ops.hpp"
#include "buzzdet/nn/tensor.hpp"

namespace buzzdet::models {

struct UNetConfig {
  std::size_t in_channels = 4;       // ax, ay, az, depth
  std::size_t depth = 4;             // encoder levels
  std::size_t filters = 4;           // first-level filter count, doubled per level
  std::size_t kernel = 5;
  std::size_t pool = 2;              // pool factor per level
  std::size_t segment_length = 1024; // 10.24 s at 100 Hz, divisible by 2^4
  std::size_t batch_size = 16;
  double learning_rate = 5e-4;
  std::size_t max_epochs = 301;
  std::size_t patience = 150;
  std::uint64_t seed = 0;

  std::size_t total_pool() const {
    std::size_t p = 1;
    for (std::size_t l = 0; l < depth; ++l) p *= pool;
    return p;
  }
  std::size_t filters_at(std::size_t level) const { return filters << level; }

  void validate() const {
    if (in_channels == 0) throw ConfigError("UNetConfig: in_channels must be >= 1");
    if (filters == 0) throw ConfigError("UNetConfig: filters must be >= 1");
    if (kernel % 2 == 0) throw ConfigError("UNetConfig: kernel must be odd");
    if (pool == 0) throw ConfigError("UNetConfig: pool factor must be >= 1");
    if (segment_length == 0 || segment_length % total_pool() != 0)
      throw ConfigError("UNetConfig: segment length " + std::to_string(segment_length) +
                        " must be divisible by the product of pool factors (" + std::to_string(total_pool()) + ")");
    if (batch_size == 0) throw ConfigError("UNetConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("UNetConfig: learning_rate must be > 0");
  }
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

template <class Real>
class BasicUNet {
public:
  using Tensor = nn::BasicTensor3<Real>;
  using Conv = nn::Conv1dParams<Real>;

  BasicUNet() = default;

  /// Builds the layer stack with Glorot-uniform weights and zero biases.
  explicit BasicUNet(const UNetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg.depth, k = cfg.kernel;
    std::size_t in = cfg.in_channels;
    for (std::size_t l = 0; l < d; ++l) {
      layers_.emplace_back(cfg.filters_at(l), in, k);
      layers_.emplace_back(cfg.filters_at(l), cfg.filters_at(l), k);
      in = cfg.filters_at(l);
    }
    layers_.emplace_back(cfg.filters_at(d), in, k);
    layers_.emplace_back(cfg.filters_at(d), cfg.filters_at(d), k);
    in = cfg.filters_at(d);
    for (std::size_t l = d; l-- > 0;) {
      layers_.emplace_back(cfg.filters_at(l), in + cfg.filters_at(l), k);
      layers_.emplace_back(cfg.filters_at(l), cfg.filters_at(l), k);
      in = cfg.filters_at(l);
    }
    layers_.emplace_back(1, in, 1);

    std::mt19937_64 rng(cfg.seed);
    for (auto& layer : layers_) {
      const double bound = std::sqrt(6.0 / static_cast<double>((layer.in_ch + layer.out_ch) * layer.kernel));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& w : layer.weight) w = static_cast<Real>(u(rng));
    }
  }

  const UNetConfig& config() const { return cfg_; }
  std::vector<Conv>& layers() { return layers_; }
  const std::vector<Conv>& layers() const { return layers_; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.param_count();
    return n;
  }

  /// Intermediate values kept for the backward pass.
  struct Cache {
    std::vector<Tensor> conv_in;   // input of every conv
    std::vector<Tensor> conv_out;  // activation output of every conv (ReLU, or sigmoid for the head)
    std::vector<std::vector<std::size_t>> argmax;
    std::vector<std::size_t> pool_in_len;
    std::vector<std::size_t> up_channels;  // channels of the upsampled operand per decoder level
  };

  /// Probabilities of shape (batch, 1, length).
  Tensor forward(const Tensor& x, Cache* cache = nullptr) const {
    if (x.channels() != cfg_.in_channels)
      throw ShapeError("unet: input has " + std::to_string(x.channels()) + " channels, expected " +
                       std::to_string(cfg_.in_channels));
    if (x.length() % cfg_.total_pool() != 0)
      throw ShapeError("unet: input length " + std::to_string(x.length()) + " not divisible by " +
                       std::to_string(cfg_.total_pool()));
    Cache local;
    Cache& c = cache ? *cache : local;
    c = Cache{};
    const std::size_t d = cfg_.depth;
    std::size_t li = 0;
    auto conv_relu = [&](const Tensor& in) {
      c.conv_in.push_back(in);
      Tensor out = nn::relu(nn::conv1d_forward(in, layers_[li++]));
      c.conv_out.push_back(out);
      return out;
    };

    std::vector<Tensor> skips;
    Tensor h = x;
    for (std::size_t l = 0; l < d; ++l) {
      h = conv_relu(conv_relu(h));
      skips.push_back(h);
      auto pooled = nn::maxpool1d(h, cfg_.pool);
      c.argmax.push_back(std::move(pooled.argmax));
      c.pool_in_len.push_back(h.length());
      h = std::move(pooled.y);
    }
    h = conv_relu(conv_relu(h));
    for (std::size_t l = d; l-- > 0;) {
      Tensor up = nn::upsample1d_nearest(h, cfg_.pool);
      c.up_channels.push_back(up.channels());
      h = conv_relu(conv_relu(nn::concat_channels(up, skips[l])));
    }
    c.conv_in.push_back(h);
    Tensor p = nn::sigmoid(nn::conv1d_forward(h, layers_[li++]));
    c.conv_out.push_back(p);
    return p;
  }

  /// Parameter gradients given d loss / d probabilities.
  std::vector<nn::Conv1dGrads<Real>> backward(const Cache& c, const Tensor& grad_p) const {
    const std::size_t d = cfg_.depth;
    std::vector<nn::Conv1dGrads<Real>> grads(layers_.size());
    std::size_t li = layers_.size() - 1;

    Tensor g = nn::sigmoid_backward(grad_p, c.conv_out[li]);
    grads[li] = nn::conv1d_backward(c.conv_in[li], layers_[li], g);
    g = std::move(grads[li].grad_x);

    auto conv_relu_back = [&](Tensor grad) {
      --li;
      grad = nn::relu_backward(std::move(grad), c.conv_out[li]);
      grads[li] = nn::conv1d_backward(c.conv_in[li], layers_[li], grad);
      return std::move(grads[li].grad_x);
    };

    std::vector<Tensor> skip_grads(d);
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t l = k;  // decoder levels were visited deep to shallow
      g = conv_relu_back(conv_relu_back(std::move(g)));
      auto parts = nn::split_channels(g, c.up_channels[d - 1 - l]);
      skip_grads[l] = std::move(parts.grad_b);
      g = nn::upsample1d_nearest_backward(parts.grad_a, cfg_.pool);
    }
    g = conv_relu_back(conv_relu_back(std::move(g)));
    for (std::size_t l = d; l-- > 0;) {
      g = nn::maxpool1d_backward(g, c.argmax[l], c.pool_in_len[l]);
      auto gd = g.data();
      auto sd = skip_grads[l].data();
      for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += sd[i];
      g = conv_relu_back(conv_relu_back(std::move(g)));
    }
    return grads;
  }

  friend bool operator==(const BasicUNet&, const BasicUNet&) = default;

private:
  UNetConfig cfg_;
  std::vector<Conv> layers_;
};

using UNet = BasicUNet<double>;

/// Closed-form parameter count of the network built from cfg.
inline std::size_t unet_param_count(const UNetConfig& cfg) {
  auto conv = [&](std::size_t out, std::size_t in, std::size_t k) { return out * in * k + out; };
  std::size_t n = 0, in = cfg.in_channels;
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    n += conv(cfg.filters_at(l), in, cfg.kernel) + conv(cfg.filters_at(l), cfg.filters_at(l), cfg.kernel);
    in = cfg.filters_at(l);
  }
  n += conv(cfg.filters_at(cfg.depth), in, cfg.kernel) +
       conv(cfg.filters_at(cfg.depth), cfg.filters_at(cfg.depth), cfg.kernel);
  in = cfg.filters_at(cfg.depth);
  for (std::size_t l = cfg.depth; l-- > 0;) {
    n += conv(cfg.filters_at(l), in + cfg.filters_at(l), cfg.kernel) +
         conv(cfg.filters_at(l), cfg.filters_at(l), cfg.kernel);
    in = cfg.filters_at(l);
  }
  return n + conv(1, in, 1);
}

inline UNet unet_build(const UNetConfig& cfg) { return UNet(cfg); }

/// Fixed-length training example: channel-major inputs and per-sample labels.
struct Segment {
  std::vector<double> x;  // channels * length
  std::vector<std::uint8_t> y;
};

struct SegmentSet {
  std::size_t channels = 4;
  std::size_t length = 0;
  std::vector<Segment> items;
  std::size_t size() const { return items.size(); }
};

inline nn::Tensor3 stack_batch(const SegmentSet& set, std::span<const std::size_t> idx,
                               std::vector<std::uint8_t>* labels = nullptr) {
  nn::Tensor3 x(idx.size(), set.channels, set.length);
  if (labels) labels->clear();
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& s = set.items[idx[b]];
    std::copy(s.x.begin(), s.x.end(), x.row(b, 0).data());
    if (labels) labels->insert(labels->end(), s.y.begin(), s.y.end());
  }
  return x;
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_dice = 0.0;
  double val_dice = 0.0;
};

struct TrainResult {
  UNet model;
  std::vector<EpochStats> trace;
  std::size_t best_epoch = 0;
  double best_val_dice = 0.0;
};

/// Dice of the whole set, accumulated over all samples in fixed order.
inline double set_dice(const UNet& net, const SegmentSet& set, std::size_t chunk = 16) {
  double spg = 0.0, sp = 0.0, sg = 0.0;
  std::vector<std::size_t> idx;
  std::vector<std::uint8_t> y;
  for (std::size_t b = 0; b < set.size(); b += chunk) {
    idx.resize(std::min(chunk, set.size() - b));
    std::iota(idx.begin(), idx.end(), b);
    const auto p = net.forward(stack_batch(set, idx, &y));
    auto pd = p.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      spg += pd[i] * y[i];
      sp += pd[i];
      sg += y[i];
    }
  }
  return 1.0 - (2.0 * spg + nn::kDiceSmoothing) / (sp + sg + nn::kDiceSmoothing);
}

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch Adam on Dice loss. Keeps the snapshot with strictly lowest
/// validation Dice and stops after max_epochs or `patience` epochs without
/// improvement; returns that snapshot.
inline TrainResult unet_train(UNet net, const SegmentSet& train, const SegmentSet& val, const UNetConfig& cfg,
                              const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (train.size() == 0) throw ConfigError("unet_train: no training segments");
  if (val.size() == 0) throw ConfigError("unet_train: no validation segments");
  nn::AdamState<double> adam;
  adam.hyper.lr = cfg.learning_rate;
  std::mt19937_64 rng(cfg.seed ^ 0x5deece66dull);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult res;
  res.best_val_dice = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> y;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::span<const std::size_t> idx(order.data() + b, std::min(cfg.batch_size, order.size() - b));
      try {
        const auto x = stack_batch(train, idx, &y);
        typename UNet::Cache cache;
        const auto p = net.forward(x, &cache);
        const auto dl = nn::dice_loss<double>(p.data(), y);
        nn::Tensor3 gp(p.batch(), 1, p.length());
        std::copy(dl.grad.begin(), dl.grad.end(), gp.data().begin());
        auto grads = net.backward(cache, gp);
        std::vector<std::span<double>> params;
        std::vector<std::span<const double>> gs;
        for (std::size_t i = 0; i < grads.size(); ++i) {
          params.emplace_back(net.layers()[i].weight);
          gs.emplace_back(grads[i].grad_w);
          params.emplace_back(net.layers()[i].bias);
          gs.emplace_back(grads[i].grad_b);
        }
        for (auto g : gs) nn::check_finite(g, "unet backward");
        nn::adam_step<double>(params, gs, adam);
        loss_sum += dl.loss;
        ++batches;
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b / cfg.batch_size) + ")");
      }
    }
    EpochStats st{epoch, loss_sum / static_cast<double>(batches), set_dice(net, val)};
    res.trace.push_back(st);
    if (on_epoch) on_epoch(st);
    if (st.val_dice < res.best_val_dice) {
      res.best_val_dice = st.val_dice;
      res.best_epoch = epoch;
      res.model = net;
    } else if (epoch - res.best_epoch >= cfg.patience) {
      break;
    }
  }
  return res;
}

}  // namespace buzzdet::models
