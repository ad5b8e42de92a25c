#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "triplane/nn/tensor.hpp"

namespace triplane::nn {

enum class Padding { Same, Valid };

const char* to_string(Padding p);
Padding padding_from_string(std::string_view s);

struct UNetConfig {
  uint32_t depth = 2;          // down-sampling levels
  uint32_t base_channels = 16; // channels after the first conv pair
  Padding padding = Padding::Same;
  uint32_t tile = 64;          // nominal training tile, must divide by 2^depth
  uint64_t seed = 0;           // weight-init seed

  bool operator==(const UNetConfig&) const = default;
};

void to_json(nlohmann::json& j, const UNetConfig& c);
void from_json(const nlohmann::json& j, UNetConfig& c);

// 2*depth encoder convs + 2 bottleneck + depth up-convs + 2*depth decoder
// convs + the final 1x1 (depth=4 -> 23).
uint32_t conv_layer_count(const UNetConfig& cfg);

// Output spatial dims for an input of (h, w); throws std::invalid_argument if
// the size is not processable (indivisible at a pool, or a valid-mode conv
// would underflow). Same mode returns (h, w).
std::pair<uint32_t, uint32_t> output_dims(const UNetConfig& cfg, uint32_t h, uint32_t w);

enum class LayerKind { Conv3x3, UpConv2x2, Conv1x1 };

// One weight-bearing layer inside the flat parameter arena.
struct LayerInfo {
  std::string name;
  LayerKind kind;
  uint32_t in_ch = 0, out_ch = 0;
  size_t w_off = 0, w_count = 0;
  size_t b_off = 0, b_count = 0;
};

// Per-sample activation cache plus backward scratch, reused across calls to
// avoid reallocation. One workspace per concurrent caller.
template <typename T>
struct Workspace {
  struct EncLevel {
    Tensor<T> a1, a2, pooled;
    std::vector<uint32_t> argmax;
  };
  struct DecLevel {
    Tensor<T> up, cat, a1, a2;
  };
  Tensor<T> input;
  std::vector<EncLevel> enc;
  Tensor<T> b1, b2;
  std::vector<DecLevel> dec;
  Tensor<T> out;

  // backward scratch
  Tensor<T> g1, g2, g3;
  std::vector<Tensor<T>> dskip;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update; t is the post-increment step number (>= 1).
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
               uint64_t t, const AdamConfig& ac);

// loss = inv_n * sum (pred - target)^2, grad_i = 2 * inv_n * (pred_i - target_i).
// Pass inv_n = 1/total_batch_pixels when accumulating over a batch.
template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target, T inv_n, Tensor<T>& grad);

template <typename T>
class UNet {
 public:
  explicit UNet(const UNetConfig& cfg);

  const UNetConfig& config() const { return cfg_; }
  const std::vector<LayerInfo>& layers() const { return layers_; }
  size_t param_count() const { return params_.size(); }

  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::span<T> adam_m() { return m_; }
  std::span<const T> adam_m() const { return m_; }
  std::span<T> adam_v() { return v_; }
  std::span<const T> adam_v() const { return v_; }
  uint64_t step() const { return step_; }
  void set_step(uint64_t t) { step_ = t; }

  // x must be 1xHxW with H, W processable per output_dims. Fills ws and
  // leaves the prediction in ws.out.
  void forward(const Tensor<T>& x, Workspace<T>& ws) const;

  // dLdy matches ws.out; accumulates (+=) parameter gradients into grads,
  // which must be param_count() long. forward must have filled ws.
  void backward(Workspace<T>& ws, const Tensor<T>& dLdy, std::span<T> grads) const;

  // In-place Adam update from accumulated gradients; bumps the step counter.
  void apply_adam(std::span<const T> grads, const AdamConfig& ac);

  bool operator==(const UNet& o) const {
    return cfg_ == o.cfg_ && params_ == o.params_ && m_ == o.m_ && v_ == o.v_ &&
           step_ == o.step_;
  }

 private:
  UNetConfig cfg_;
  std::vector<LayerInfo> layers_;
  std::vector<T> params_, m_, v_;
  uint64_t step_ = 0;

  const T* w(size_t layer) const { return params_.data() + layers_[layer].w_off; }
  const T* b(size_t layer) const { return params_.data() + layers_[layer].b_off; }

  // layer-table indices, fixed by the topology
  size_t enc_conv(uint32_t level, int which) const;   // which in {1,2}
  size_t bott_conv(int which) const;
  size_t up_conv(uint32_t level) const;
  size_t dec_conv(uint32_t level, int which) const;
  size_t final_conv() const;
};

using UNetF = UNet<float>;
using UNetD = UNet<double>;

}  // namespace triplane::nn
