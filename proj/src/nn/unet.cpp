#include "triplane/nn/unet.hpp"

#include <cmath>
#include <stdexcept>

#include "triplane/nn/ops.hpp"
#include "triplane/rng.hpp"

namespace triplane::nn {

const char* to_string(Padding p) { return p == Padding::Same ? "same" : "valid"; }

Padding padding_from_string(std::string_view s) {
  if (s == "same") return Padding::Same;
  if (s == "valid") return Padding::Valid;
  throw std::invalid_argument("unknown padding '" + std::string(s) +
                              "' (expected same or valid)");
}

void to_json(nlohmann::json& j, const UNetConfig& c) {
  j = {{"depth", c.depth},
       {"base_channels", c.base_channels},
       {"padding", to_string(c.padding)},
       {"tile", c.tile},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, UNetConfig& c) {
  j.at("depth").get_to(c.depth);
  j.at("base_channels").get_to(c.base_channels);
  c.padding = padding_from_string(j.at("padding").get<std::string>());
  j.at("tile").get_to(c.tile);
  j.at("seed").get_to(c.seed);
}

uint32_t conv_layer_count(const UNetConfig& cfg) { return 5 * cfg.depth + 3; }

namespace {

// Per-axis size walk. Returns the encoder skip size at each level plus the
// final output size; throws where the topology cannot process `n`.
std::vector<uint32_t> axis_sizes(const UNetConfig& cfg, uint32_t n, const char* axis) {
  const bool valid = cfg.padding == Padding::Valid;
  auto conv_pair = [&](uint32_t s) -> uint32_t {
    if (!valid) return s;
    if (s < 5)
      throw std::invalid_argument(std::string("unet: ") + axis + " size " + std::to_string(s) +
                                  " too small for a valid-mode conv pair");
    return s - 4;
  };

  std::vector<uint32_t> skips;
  uint32_t s = n;
  for (uint32_t k = 0; k < cfg.depth; ++k) {
    s = conv_pair(s);
    skips.push_back(s);
    if (s % 2 != 0 || s == 0)
      throw std::invalid_argument(std::string("unet: ") + axis + " size " + std::to_string(s) +
                                  " at level " + std::to_string(k) + " is not poolable");
    s /= 2;
  }
  s = conv_pair(s);  // bottleneck
  for (uint32_t k = cfg.depth; k-- > 0;) {
    s *= 2;  // up-convolution
    if (valid && skips[k] < s)
      throw std::invalid_argument(std::string("unet: ") + axis + " skip at level " +
                                  std::to_string(k) + " (" + std::to_string(skips[k]) +
                                  ") smaller than upsampled size " + std::to_string(s));
    s = conv_pair(s);
  }
  skips.push_back(s);
  return skips;
}

size_t weight_count(LayerKind kind, uint32_t in_ch, uint32_t out_ch) {
  switch (kind) {
    case LayerKind::Conv3x3: return static_cast<size_t>(out_ch) * in_ch * 9;
    case LayerKind::UpConv2x2: return static_cast<size_t>(in_ch) * out_ch * 4;
    case LayerKind::Conv1x1: return static_cast<size_t>(out_ch) * in_ch;
  }
  return 0;
}

size_t fan_in(LayerKind kind, uint32_t in_ch) {
  switch (kind) {
    case LayerKind::Conv3x3: return static_cast<size_t>(in_ch) * 9;
    case LayerKind::UpConv2x2: return static_cast<size_t>(in_ch) * 4;
    case LayerKind::Conv1x1: return in_ch;
  }
  return 1;
}

}  // namespace

std::pair<uint32_t, uint32_t> output_dims(const UNetConfig& cfg, uint32_t h, uint32_t w) {
  return {axis_sizes(cfg, h, "row").back(), axis_sizes(cfg, w, "col").back()};
}

template <typename T>
UNet<T>::UNet(const UNetConfig& cfg) : cfg_(cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("unet: depth must be >= 1");
  if (cfg.base_channels < 1) throw std::invalid_argument("unet: base_channels must be >= 1");
  if (cfg.tile == 0 || cfg.tile % (1u << cfg.depth) != 0)
    throw std::invalid_argument("unet: tile " + std::to_string(cfg.tile) +
                                " not divisible by 2^depth = " + std::to_string(1u << cfg.depth));
  output_dims(cfg, cfg.tile, cfg.tile);  // must be processable

  const auto ch = [&](uint32_t level) { return cfg.base_channels << level; };
  const uint32_t D = cfg.depth;

  auto add = [&](std::string name, LayerKind kind, uint32_t in_ch, uint32_t out_ch) {
    LayerInfo li;
    li.name = std::move(name);
    li.kind = kind;
    li.in_ch = in_ch;
    li.out_ch = out_ch;
    li.w_count = weight_count(kind, in_ch, out_ch);
    li.b_count = out_ch;
    li.w_off = params_.size();
    params_.resize(params_.size() + li.w_count);
    li.b_off = params_.size();
    params_.resize(params_.size() + li.b_count);
    layers_.push_back(std::move(li));
  };

  for (uint32_t k = 0; k < D; ++k) {
    add("enc" + std::to_string(k) + ".conv1", LayerKind::Conv3x3, k == 0 ? 1 : ch(k - 1), ch(k));
    add("enc" + std::to_string(k) + ".conv2", LayerKind::Conv3x3, ch(k), ch(k));
  }
  add("bott.conv1", LayerKind::Conv3x3, ch(D - 1), ch(D));
  add("bott.conv2", LayerKind::Conv3x3, ch(D), ch(D));
  for (uint32_t k = D; k-- > 0;) {
    add("dec" + std::to_string(k) + ".up", LayerKind::UpConv2x2, ch(k + 1), ch(k));
    add("dec" + std::to_string(k) + ".conv1", LayerKind::Conv3x3, 2 * ch(k), ch(k));
    add("dec" + std::to_string(k) + ".conv2", LayerKind::Conv3x3, ch(k), ch(k));
  }
  add("final.conv", LayerKind::Conv1x1, ch(0), 1);

  // He-normal weights, zero biases, one stream in layer order
  Rng rng(cfg.seed);
  for (const auto& li : layers_) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in(li.kind, li.in_ch)));
    for (size_t i = 0; i < li.w_count; ++i)
      params_[li.w_off + i] = static_cast<T>(rng.normal(0.0, stddev));
  }
  m_.assign(params_.size(), T(0));
  v_.assign(params_.size(), T(0));
}

template <typename T>
size_t UNet<T>::enc_conv(uint32_t level, int which) const {
  return 2 * level + static_cast<size_t>(which - 1);
}
template <typename T>
size_t UNet<T>::bott_conv(int which) const {
  return 2 * static_cast<size_t>(cfg_.depth) + static_cast<size_t>(which - 1);
}
template <typename T>
size_t UNet<T>::up_conv(uint32_t level) const {
  return 2 * static_cast<size_t>(cfg_.depth) + 2 +
         3 * static_cast<size_t>(cfg_.depth - 1 - level);
}
template <typename T>
size_t UNet<T>::dec_conv(uint32_t level, int which) const {
  return up_conv(level) + static_cast<size_t>(which);
}
template <typename T>
size_t UNet<T>::final_conv() const {
  return layers_.size() - 1;
}

template <typename T>
void UNet<T>::forward(const Tensor<T>& x, Workspace<T>& ws) const {
  if (x.c != 1) throw std::invalid_argument("unet: expected a single input channel");
  output_dims(cfg_, x.h, x.w);  // throws on unprocessable sizes
  const uint32_t pad = cfg_.padding == Padding::Same ? 1 : 0;
  const uint32_t D = cfg_.depth;
  ws.enc.resize(D);
  ws.dec.resize(D);

  ws.input = x;
  const Tensor<T>* cur = &ws.input;
  for (uint32_t k = 0; k < D; ++k) {
    auto& lv = ws.enc[k];
    conv3x3_forward(*cur, w(enc_conv(k, 1)), b(enc_conv(k, 1)), layers_[enc_conv(k, 1)].out_ch,
                    pad, lv.a1);
    relu_inplace(lv.a1);
    conv3x3_forward(lv.a1, w(enc_conv(k, 2)), b(enc_conv(k, 2)), layers_[enc_conv(k, 2)].out_ch,
                    pad, lv.a2);
    relu_inplace(lv.a2);
    maxpool2x2_forward(lv.a2, lv.pooled, lv.argmax);
    cur = &lv.pooled;
  }

  conv3x3_forward(*cur, w(bott_conv(1)), b(bott_conv(1)), layers_[bott_conv(1)].out_ch, pad,
                  ws.b1);
  relu_inplace(ws.b1);
  conv3x3_forward(ws.b1, w(bott_conv(2)), b(bott_conv(2)), layers_[bott_conv(2)].out_ch, pad,
                  ws.b2);
  relu_inplace(ws.b2);

  cur = &ws.b2;
  for (uint32_t k = D; k-- > 0;) {
    auto& lv = ws.dec[k];
    tconv2x2_forward(*cur, w(up_conv(k)), b(up_conv(k)), layers_[up_conv(k)].out_ch, lv.up);
    const Tensor<T>& skip = ws.enc[k].a2;
    if (skip.h == lv.up.h && skip.w == lv.up.w) {
      concat_channels(skip, lv.up, lv.cat);
    } else {
      center_crop(skip, lv.up.h, lv.up.w, ws.g3);
      concat_channels(ws.g3, lv.up, lv.cat);
    }
    conv3x3_forward(lv.cat, w(dec_conv(k, 1)), b(dec_conv(k, 1)), layers_[dec_conv(k, 1)].out_ch,
                    pad, lv.a1);
    relu_inplace(lv.a1);
    conv3x3_forward(lv.a1, w(dec_conv(k, 2)), b(dec_conv(k, 2)), layers_[dec_conv(k, 2)].out_ch,
                    pad, lv.a2);
    relu_inplace(lv.a2);
    cur = &lv.a2;
  }

  conv1x1_forward(*cur, w(final_conv()), b(final_conv()), 1, ws.out);
}

template <typename T>
void UNet<T>::backward(Workspace<T>& ws, const Tensor<T>& dLdy, std::span<T> grads) const {
  if (grads.size() != params_.size())
    throw std::invalid_argument("unet: gradient buffer size mismatch");
  if (!dLdy.same_shape(ws.out))
    throw std::invalid_argument("unet: dLdy does not match the forward output");
  const uint32_t pad = cfg_.padding == Padding::Same ? 1 : 0;
  const uint32_t D = cfg_.depth;
  ws.dskip.resize(D);

  auto dw = [&](size_t layer) { return grads.data() + layers_[layer].w_off; };
  auto db = [&](size_t layer) { return grads.data() + layers_[layer].b_off; };

  Tensor<T>& g = ws.g1;
  Tensor<T>& tmp = ws.g2;

  {
    const size_t f = final_conv();
    const Tensor<T>& fin = ws.dec[0].a2;
    conv1x1_wgrad(fin, dLdy, dw(f), db(f));
    conv1x1_dgrad(dLdy, w(f), layers_[f].in_ch, g);
  }

  // decoder, shallowest level first (reverse of the forward decoder order)
  for (uint32_t k = 0; k < D; ++k) {
    auto& lv = ws.dec[k];
    relu_backward_inplace(lv.a2, g);
    conv3x3_wgrad(lv.a1, g, pad, dw(dec_conv(k, 2)), db(dec_conv(k, 2)));
    conv3x3_dgrad(g, w(dec_conv(k, 2)), layers_[dec_conv(k, 2)].in_ch, pad, tmp);
    std::swap(g, tmp);
    relu_backward_inplace(lv.a1, g);
    conv3x3_wgrad(lv.cat, g, pad, dw(dec_conv(k, 1)), db(dec_conv(k, 1)));
    conv3x3_dgrad(g, w(dec_conv(k, 1)), layers_[dec_conv(k, 1)].in_ch, pad, tmp);

    const uint32_t skip_ch = layers_[dec_conv(k, 1)].in_ch / 2;
    split_channels(tmp, skip_ch, ws.g3, g);
    center_crop_backward(ws.g3, ws.enc[k].a2.h, ws.enc[k].a2.w, ws.dskip[k]);

    const Tensor<T>& up_in = (k + 1 < D) ? ws.dec[k + 1].a2 : ws.b2;
    tconv2x2_wgrad(up_in, g, dw(up_conv(k)), db(up_conv(k)));
    tconv2x2_dgrad(g, w(up_conv(k)), layers_[up_conv(k)].in_ch, tmp);
    std::swap(g, tmp);
  }

  relu_backward_inplace(ws.b2, g);
  conv3x3_wgrad(ws.b1, g, pad, dw(bott_conv(2)), db(bott_conv(2)));
  conv3x3_dgrad(g, w(bott_conv(2)), layers_[bott_conv(2)].in_ch, pad, tmp);
  std::swap(g, tmp);
  relu_backward_inplace(ws.b1, g);
  conv3x3_wgrad(ws.enc[D - 1].pooled, g, pad, dw(bott_conv(1)), db(bott_conv(1)));
  conv3x3_dgrad(g, w(bott_conv(1)), layers_[bott_conv(1)].in_ch, pad, tmp);
  std::swap(g, tmp);

  // encoder, deepest level first; g arrives as dL/d pooled[k]
  for (uint32_t k = D; k-- > 0;) {
    auto& lv = ws.enc[k];
    maxpool2x2_backward(g, lv.argmax, lv.a2.h, lv.a2.w, tmp);
    for (size_t i = 0; i < tmp.v.size(); ++i) tmp.v[i] += ws.dskip[k].v[i];
    std::swap(g, tmp);

    relu_backward_inplace(lv.a2, g);
    conv3x3_wgrad(lv.a1, g, pad, dw(enc_conv(k, 2)), db(enc_conv(k, 2)));
    conv3x3_dgrad(g, w(enc_conv(k, 2)), layers_[enc_conv(k, 2)].in_ch, pad, tmp);
    std::swap(g, tmp);
    relu_backward_inplace(lv.a1, g);
    const Tensor<T>& conv1_in = (k == 0) ? ws.input : ws.enc[k - 1].pooled;
    conv3x3_wgrad(conv1_in, g, pad, dw(enc_conv(k, 1)), db(enc_conv(k, 1)));
    if (k > 0) {
      conv3x3_dgrad(g, w(enc_conv(k, 1)), layers_[enc_conv(k, 1)].in_ch, pad, tmp);
      std::swap(g, tmp);
    }
  }
}

template <typename T>
void UNet<T>::apply_adam(std::span<const T> grads, const AdamConfig& ac) {
  ++step_;
  adam_step<T>(params_, grads, m_, v_, step_, ac);
}

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
               uint64_t t, const AdamConfig& ac) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw std::invalid_argument("adam_step: size mismatch");
  if (t == 0) throw std::invalid_argument("adam_step: t must be >= 1");
  const double c1 = 1.0 - std::pow(ac.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(ac.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double mi = ac.beta1 * static_cast<double>(m[i]) + (1.0 - ac.beta1) * g;
    const double vi = ac.beta2 * static_cast<double>(v[i]) + (1.0 - ac.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / c1;
    const double v_hat = vi / c2;
    params[i] = static_cast<T>(static_cast<double>(params[i]) -
                               ac.lr * m_hat / (std::sqrt(v_hat) + ac.eps));
  }
}

template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target, T inv_n, Tensor<T>& grad) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("mse_loss: prediction/target shape mismatch");
  grad.resize(pred.c, pred.h, pred.w);
  double acc = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
    acc += d * d;
    grad.v[i] = static_cast<T>(2 * inv_n * (pred.v[i] - target.v[i]));
  }
  return static_cast<T>(acc * static_cast<double>(inv_n));
}

template class UNet<float>;
template class UNet<double>;
template void adam_step<float>(std::span<float>, std::span<const float>, std::span<float>,
                               std::span<float>, uint64_t, const AdamConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>, std::span<double>,
                                std::span<double>, uint64_t, const AdamConfig&);
template float mse_loss<float>(const Tensor<float>&, const Tensor<float>&, float,
                               Tensor<float>&);
template double mse_loss<double>(const Tensor<double>&, const Tensor<double>&, double,
                                 Tensor<double>&);

}  // namespace triplane::nn
