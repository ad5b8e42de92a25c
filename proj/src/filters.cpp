#include "triplane/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace triplane {

namespace {

void check_odd(int k, const char* what) {
  if (k < 1 || k % 2 == 0)
    throw std::invalid_argument(std::string(what) + " must be odd and >= 1, got " +
                                std::to_string(k));
}

std::vector<double> gaussian_kernel(double sigma, int ksize) {
  std::vector<double> k(static_cast<size_t>(ksize));
  const int r = ksize / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<size_t>(i + r)] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

}  // namespace

int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Image gaussian_blur(const Image& img, float sigma, int ksize) {
  if (!(sigma > 0.0f)) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
  check_odd(ksize, "gaussian_blur: ksize");

  const auto kernel = gaussian_kernel(sigma, ksize);
  const int r = ksize / 2;
  const int rows = static_cast<int>(img.rows), cols = static_cast<int>(img.cols);

  Image tmp(img.rows, img.cols);  // horizontal pass
  for (int y = 0; y < rows; ++y) {
    const float* src = img.row(static_cast<uint32_t>(y));
    float* dst = tmp.row(static_cast<uint32_t>(y));
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += kernel[static_cast<size_t>(i + r)] * src[mirror_index(x + i, cols)];
      dst[x] = static_cast<float>(acc);
    }
  }

  Image out(img.rows, img.cols);  // vertical pass
  for (int y = 0; y < rows; ++y) {
    float* dst = out.row(static_cast<uint32_t>(y));
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += kernel[static_cast<size_t>(i + r)] * tmp.at(
            static_cast<uint32_t>(mirror_index(y + i, rows)), static_cast<uint32_t>(x));
      dst[x] = static_cast<float>(acc);
    }
  }
  return out;
}

Image bilateral(const Image& img, float sigma_s, float sigma_r, int ksize) {
  if (!(sigma_s > 0.0f) || !(sigma_r > 0.0f))
    throw std::invalid_argument("bilateral: sigmas must be > 0");
  check_odd(ksize, "bilateral: ksize");

  const int r = ksize / 2;
  const int rows = static_cast<int>(img.rows), cols = static_cast<int>(img.cols);
  const double inv2ss = 1.0 / (2.0 * static_cast<double>(sigma_s) * sigma_s);
  const double inv2sr = 1.0 / (2.0 * static_cast<double>(sigma_r) * sigma_r);

  std::vector<double> spatial(static_cast<size_t>(ksize) * ksize);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[static_cast<size_t>(dy + r) * ksize + (dx + r)] =
          std::exp(-(static_cast<double>(dy) * dy + static_cast<double>(dx) * dx) * inv2ss);

  Image out(img.rows, img.cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const double center = img.at(static_cast<uint32_t>(y), static_cast<uint32_t>(x));
      double num = 0.0, den = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = mirror_index(y + dy, rows);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = mirror_index(x + dx, cols);
          const double v = img.at(static_cast<uint32_t>(yy), static_cast<uint32_t>(xx));
          const double d = v - center;
          const double w = spatial[static_cast<size_t>(dy + r) * ksize + (dx + r)] *
                           std::exp(-d * d * inv2sr);
          num += w * v;
          den += w;
        }
      }
      out.at(static_cast<uint32_t>(y), static_cast<uint32_t>(x)) =
          static_cast<float>(num / den);
    }
  }
  return out;
}

Image nlm(const Image& img, float h, int patch, int window, float sigma0) {
  if (!(h > 0.0f)) throw std::invalid_argument("nlm: h must be > 0");
  check_odd(patch, "nlm: patch");
  check_odd(window, "nlm: window");
  if (patch > window) throw std::invalid_argument("nlm: patch must be <= window");
  if (sigma0 < 0.0f) throw std::invalid_argument("nlm: sigma0 must be >= 0");

  const int pr = patch / 2, wr = window / 2;
  const int rows = static_cast<int>(img.rows), cols = static_cast<int>(img.cols);
  const double inv_h2 = 1.0 / (static_cast<double>(h) * h);
  const double two_s02 = 2.0 * static_cast<double>(sigma0) * sigma0;
  const double patch_px = static_cast<double>(patch) * patch;

  Image out(img.rows, img.cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double num = 0.0, den = 0.0;
      for (int qy = y - wr; qy <= y + wr; ++qy) {
        for (int qx = x - wr; qx <= x + wr; ++qx) {
          double d2 = 0.0;
          for (int oy = -pr; oy <= pr; ++oy) {
            const int py = mirror_index(y + oy, rows);
            const int ry = mirror_index(qy + oy, rows);
            const float* prow = img.row(static_cast<uint32_t>(py));
            const float* rrow = img.row(static_cast<uint32_t>(ry));
            for (int ox = -pr; ox <= pr; ++ox) {
              const double diff = static_cast<double>(prow[mirror_index(x + ox, cols)]) -
                                  rrow[mirror_index(qx + ox, cols)];
              d2 += diff * diff;
            }
          }
          d2 /= patch_px;
          const double w = std::exp(-std::max(0.0, d2 - two_s02) * inv_h2);
          num += w * img.at(static_cast<uint32_t>(mirror_index(qy, rows)),
                            static_cast<uint32_t>(mirror_index(qx, cols)));
          den += w;
        }
      }
      out.at(static_cast<uint32_t>(y), static_cast<uint32_t>(x)) =
          static_cast<float>(num / den);
    }
  }
  return out;
}

}  // namespace triplane
