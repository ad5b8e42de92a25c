#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace triplane {

// Dense row-major 2D image. Pipelines keep values in [0,1] but the container
// itself does not enforce a range.
struct Image {
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(uint32_t r, uint32_t c, float fill = 0.0f)
      : rows(r), cols(c), pixels(static_cast<size_t>(r) * c, fill) {}
  Image(uint32_t r, uint32_t c, std::vector<float> data);

  float& at(uint32_t r, uint32_t c) { return pixels[static_cast<size_t>(r) * cols + c]; }
  float at(uint32_t r, uint32_t c) const { return pixels[static_cast<size_t>(r) * cols + c]; }
  float* row(uint32_t r) { return pixels.data() + static_cast<size_t>(r) * cols; }
  const float* row(uint32_t r) const { return pixels.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return pixels.size(); }
  bool same_shape(const Image& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Image&) const = default;
};

}  // namespace triplane
