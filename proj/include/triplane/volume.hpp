#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triplane/image.hpp"

namespace triplane {

struct Dims {
  uint32_t t = 0;  // frames
  uint32_t h = 0;  // rows
  uint32_t w = 0;  // cols

  size_t count() const { return static_cast<size_t>(t) * h * w; }
  bool operator==(const Dims&) const = default;
};

std::string to_string(const Dims& d);

// Space-time intensity grid, row-major (t, y, x). Treated as immutable once
// built; every free function below is pure.
class Volume {
 public:
  Volume() = default;
  explicit Volume(Dims d, float fill = 0.0f);
  Volume(Dims d, std::vector<float> data);

  const Dims& dims() const { return dims_; }
  size_t size() const { return data_.size(); }

  float at(uint32_t t, uint32_t y, uint32_t x) const {
    return data_[(static_cast<size_t>(t) * dims_.h + y) * dims_.w + x];
  }
  float& at(uint32_t t, uint32_t y, uint32_t x) {
    return data_[(static_cast<size_t>(t) * dims_.h + y) * dims_.w + x];
  }
  const float* frame_ptr(uint32_t t) const {
    return data_.data() + static_cast<size_t>(t) * dims_.h * dims_.w;
  }
  float* frame_ptr(uint32_t t) {
    return data_.data() + static_cast<size_t>(t) * dims_.h * dims_.w;
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  Image frame(uint32_t t) const;

  bool operator==(const Volume&) const = default;

 private:
  Dims dims_{};
  std::vector<float> data_;
};

// The three orthogonal cut directions of a (t, y, x) volume.
enum class SliceAxis { XY, XT, YT };

const char* to_string(SliceAxis axis);
SliceAxis axis_from_string(std::string_view s);

struct SliceGeometry {
  uint32_t n_slices = 0;
  uint32_t rows = 0;
  uint32_t cols = 0;
};

// XY: n=T, slice (H,W);  XT: n=H, slice (T,W);  YT: n=W, slice (T,H).
SliceGeometry slice_geometry(const Dims& d, SliceAxis axis);

struct SliceStack {
  SliceAxis axis = SliceAxis::XY;
  Dims source_dims{};
  std::vector<Image> images;

  size_t n_slices() const { return images.size(); }
};

SliceStack slice(const Volume& v, SliceAxis axis);

// Inverse of slice(). Throws std::invalid_argument if the stack is not
// consistent with its source_dims.
Volume reassemble(const SliceStack& s);

// Element-wise (a+b+c)/3 with double accumulation, so fusing three identical
// volumes returns the input bit-for-bit.
Volume fuse_mean(const Volume& a, const Volume& b, const Volume& c);

struct Normalized {
  Volume volume;        // values in [0,1]
  float offset = 0.0f;  // original = value * scale + offset
  float scale = 1.0f;
};

// Min-max scaling. A constant volume maps to all zeros (scale 0, offset at
// the constant), keeping reconstruction via offset valid.
Normalized normalize(const Volume& v);

Volume clamp01(Volume v);

}  // namespace triplane
