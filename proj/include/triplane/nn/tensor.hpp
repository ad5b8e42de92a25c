#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "triplane/image.hpp"

namespace triplane::nn {

// Dense CHW activation tensor. Training runs float; double exists for
// finite-difference gradient verification.
template <typename T>
struct Tensor {
  uint32_t c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(uint32_t C, uint32_t H, uint32_t W) { resize(C, H, W); }

  size_t plane_size() const { return static_cast<size_t>(h) * w; }
  size_t size() const { return static_cast<size_t>(c) * h * w; }

  // reshape and zero-fill; keeps capacity across reuse
  void resize(uint32_t C, uint32_t H, uint32_t W) {
    c = C;
    h = H;
    w = W;
    v.assign(size(), T(0));
  }

  // reshape only; for ops that overwrite every element before reading
  void resize_dirty(uint32_t C, uint32_t H, uint32_t W) {
    c = C;
    h = H;
    w = W;
    v.resize(size());
  }

  T* plane(uint32_t ci) { return v.data() + ci * plane_size(); }
  const T* plane(uint32_t ci) const { return v.data() + ci * plane_size(); }
  T* row(uint32_t ci, uint32_t y) { return plane(ci) + static_cast<size_t>(y) * w; }
  const T* row(uint32_t ci, uint32_t y) const { return plane(ci) + static_cast<size_t>(y) * w; }

  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

template <typename T>
Tensor<T> from_image(const Image& img) {
  Tensor<T> t(1, img.rows, img.cols);
  for (size_t i = 0; i < img.size(); ++i) t.v[i] = static_cast<T>(img.pixels[i]);
  return t;
}

template <typename T>
Image to_image(const Tensor<T>& t) {
  Image img(t.h, t.w);
  const T* p = t.plane(0);  // first channel
  for (size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(p[i]);
  return img;
}

}  // namespace triplane::nn
