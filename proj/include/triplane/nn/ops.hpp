#pragma once

#include <cstdint>
#include <vector>

#include "triplane/nn/tensor.hpp"

namespace triplane::nn {

// Row kernels the convolutions are built from. axpy-form loops carry no
// loop-carried dependence, so they vectorize; the dot reduction is annotated
// for the same reason.
template <typename T>
inline void axpy(T a, const T* x, T* y, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
inline T dot_rows(const T* a, const T* b, int n) {
  T acc = T(0);
#pragma omp simd reduction(+ : acc)
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// 3x3 convolution with zero padding `pad` (1 = same, 0 = valid).
// out dims: (out_ch, h + 2*pad - 2, w + 2*pad - 2).
// Weights laid out [out_ch][in_ch][3][3], bias [out_ch].
template <typename T>
void conv3x3_forward(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                     uint32_t pad, Tensor<T>& out);

// dL/din from dL/dout; din is resized and overwritten.
template <typename T>
void conv3x3_dgrad(const Tensor<T>& dout, const T* w, uint32_t in_ch, uint32_t pad,
                   Tensor<T>& din);

// Accumulates (+=) dL/dw and dL/db.
template <typename T>
void conv3x3_wgrad(const Tensor<T>& in, const Tensor<T>& dout, uint32_t pad, T* dw, T* db);

// 1x1 convolution; weights [out_ch][in_ch], bias [out_ch].
template <typename T>
void conv1x1_forward(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                     Tensor<T>& out);
template <typename T>
void conv1x1_dgrad(const Tensor<T>& dout, const T* w, uint32_t in_ch, Tensor<T>& din);
template <typename T>
void conv1x1_wgrad(const Tensor<T>& in, const Tensor<T>& dout, T* dw, T* db);

template <typename T>
void relu_inplace(Tensor<T>& t);

// grad *= (act > 0), using the post-activation values as the mask.
template <typename T>
void relu_backward_inplace(const Tensor<T>& act, Tensor<T>& grad);

// 2x2 max pooling, stride 2; h and w must be even. argmax holds the flat
// input index chosen per output element (first max wins on ties).
template <typename T>
void maxpool2x2_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<uint32_t>& argmax);
template <typename T>
void maxpool2x2_backward(const Tensor<T>& dout, const std::vector<uint32_t>& argmax,
                         uint32_t in_h, uint32_t in_w, Tensor<T>& din);

// Transposed 2x2 convolution, stride 2 (the up-convolution): out is
// (out_ch, 2h, 2w). Weights laid out [in_ch][out_ch][2][2], bias [out_ch].
// Kernel and stride coincide, so output pixels receive exactly one tap.
template <typename T>
void tconv2x2_forward(const Tensor<T>& in, const T* w, const T* b, uint32_t out_ch,
                      Tensor<T>& out);
template <typename T>
void tconv2x2_dgrad(const Tensor<T>& dout, const T* w, uint32_t in_ch, Tensor<T>& din);
template <typename T>
void tconv2x2_wgrad(const Tensor<T>& in, const Tensor<T>& dout, T* dw, T* db);

// out = [a ; b] along channels (shapes must agree spatially).
template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out);
// Inverse: first a_ch channels into da, the rest into db.
template <typename T>
void split_channels(const Tensor<T>& dout, uint32_t a_ch, Tensor<T>& da, Tensor<T>& db);

// Center crop to (h, w); when the margin is odd the extra row/col is dropped
// from the bottom/right. center_crop_backward scatters back into a zeroed
// full-size tensor.
template <typename T>
void center_crop(const Tensor<T>& in, uint32_t h, uint32_t w, Tensor<T>& out);
template <typename T>
void center_crop_backward(const Tensor<T>& dout, uint32_t in_h, uint32_t in_w,
                          Tensor<T>& din);

// Definitions live in ops.cpp, explicitly instantiated for float and double.

}  // namespace triplane::nn
