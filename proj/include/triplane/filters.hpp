#pragma once

#include "triplane/image.hpp"

namespace triplane {

// Classical per-slice baselines. All three use mirror-reflected borders and
// are convex combinations of input pixels, so outputs stay inside
// [min(img), max(img)]. Defaults are the benchmark settings.

// Separable convolution with a normalized 1D Gaussian kernel (sum = 1).
Image gaussian_blur(const Image& img, float sigma = 1.0f, int ksize = 5);

// out(p) = sum_q Gs(|p-q|) * Gr(|I(p)-I(q)|) * I(q) / sum_q (same weights),
// q over the ksize x ksize window.
Image bilateral(const Image& img, float sigma_s = 2.0f, float sigma_r = 0.1f, int ksize = 7);

// Plain Buades non-local means: w(p,q) = exp(-max(0, d2 - 2*sigma0^2) / h^2),
// d2 = mean squared difference of the patch x patch neighborhoods, q over the
// window x window search region.
Image nlm(const Image& img, float h = 0.1f, int patch = 7, int window = 21,
          float sigma0 = 0.0f);

// Half-sample symmetric reflection of i into [0, n): -1 -> 0, n -> n-1.
int mirror_index(int i, int n);

}  // namespace triplane
