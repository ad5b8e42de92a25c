#include "triplane/volume.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace triplane {

Image::Image(uint32_t r, uint32_t c, std::vector<float> data)
    : rows(r), cols(c), pixels(std::move(data)) {
  if (pixels.size() != static_cast<size_t>(r) * c)
    throw std::invalid_argument("Image: data length does not match rows*cols");
}

std::string to_string(const Dims& d) {
  return "(" + std::to_string(d.t) + "," + std::to_string(d.h) + "," + std::to_string(d.w) + ")";
}

Volume::Volume(Dims d, float fill) : dims_(d), data_(d.count(), fill) {
  if (d.t == 0 || d.h == 0 || d.w == 0)
    throw std::invalid_argument("Volume: dims must all be >= 1, got " + to_string(d));
}

Volume::Volume(Dims d, std::vector<float> data) : dims_(d), data_(std::move(data)) {
  if (d.t == 0 || d.h == 0 || d.w == 0)
    throw std::invalid_argument("Volume: dims must all be >= 1, got " + to_string(d));
  if (data_.size() != d.count())
    throw std::invalid_argument("Volume: data length " + std::to_string(data_.size()) +
                                " does not match dims " + to_string(d));
}

Image Volume::frame(uint32_t t) const {
  Image img(dims_.h, dims_.w);
  std::memcpy(img.pixels.data(), frame_ptr(t), sizeof(float) * img.size());
  return img;
}

const char* to_string(SliceAxis axis) {
  switch (axis) {
    case SliceAxis::XY: return "xy";
    case SliceAxis::XT: return "xt";
    case SliceAxis::YT: return "yt";
  }
  return "?";
}

SliceAxis axis_from_string(std::string_view s) {
  if (s == "xy") return SliceAxis::XY;
  if (s == "xt") return SliceAxis::XT;
  if (s == "yt") return SliceAxis::YT;
  throw std::invalid_argument("unknown slice axis '" + std::string(s) + "' (expected xy, xt or yt)");
}

SliceGeometry slice_geometry(const Dims& d, SliceAxis axis) {
  switch (axis) {
    case SliceAxis::XY: return {d.t, d.h, d.w};
    case SliceAxis::XT: return {d.h, d.t, d.w};
    case SliceAxis::YT: return {d.w, d.t, d.h};
  }
  throw std::invalid_argument("invalid slice axis");
}

SliceStack slice(const Volume& v, SliceAxis axis) {
  const Dims d = v.dims();
  const SliceGeometry g = slice_geometry(d, axis);

  SliceStack out;
  out.axis = axis;
  out.source_dims = d;
  out.images.reserve(g.n_slices);

  switch (axis) {
    case SliceAxis::XY:
      for (uint32_t t = 0; t < d.t; ++t) out.images.push_back(v.frame(t));
      break;
    case SliceAxis::XT:
      // slice y: rows are time, cols are x; each row is contiguous in v
      for (uint32_t y = 0; y < d.h; ++y) {
        Image img(g.rows, g.cols);
        for (uint32_t t = 0; t < d.t; ++t)
          std::memcpy(img.row(t), v.frame_ptr(t) + static_cast<size_t>(y) * d.w,
                      sizeof(float) * d.w);
        out.images.push_back(std::move(img));
      }
      break;
    case SliceAxis::YT:
      // slice x: rows are time, cols are y
      for (uint32_t x = 0; x < d.w; ++x) {
        Image img(g.rows, g.cols);
        for (uint32_t t = 0; t < d.t; ++t)
          for (uint32_t y = 0; y < d.h; ++y) img.at(t, y) = v.at(t, y, x);
        out.images.push_back(std::move(img));
      }
      break;
  }
  return out;
}

Volume reassemble(const SliceStack& s) {
  const Dims d = s.source_dims;
  if (d.t == 0 || d.h == 0 || d.w == 0)
    throw std::invalid_argument("reassemble: source_dims must all be >= 1");
  const SliceGeometry g = slice_geometry(d, s.axis);
  if (s.images.size() != g.n_slices)
    throw std::invalid_argument("reassemble: stack holds " + std::to_string(s.images.size()) +
                                " slices but source dims " + to_string(d) + " require " +
                                std::to_string(g.n_slices));
  for (size_t i = 0; i < s.images.size(); ++i)
    if (s.images[i].rows != g.rows || s.images[i].cols != g.cols)
      throw std::invalid_argument("reassemble: slice " + std::to_string(i) + " has shape (" +
                                  std::to_string(s.images[i].rows) + "," +
                                  std::to_string(s.images[i].cols) + "), expected (" +
                                  std::to_string(g.rows) + "," + std::to_string(g.cols) + ")");

  Volume v(d);
  switch (s.axis) {
    case SliceAxis::XY:
      for (uint32_t t = 0; t < d.t; ++t)
        std::memcpy(v.frame_ptr(t), s.images[t].pixels.data(), sizeof(float) * g.rows * g.cols);
      break;
    case SliceAxis::XT:
      for (uint32_t y = 0; y < d.h; ++y)
        for (uint32_t t = 0; t < d.t; ++t)
          std::memcpy(&v.at(t, y, 0), s.images[y].row(t), sizeof(float) * d.w);
      break;
    case SliceAxis::YT:
      for (uint32_t x = 0; x < d.w; ++x)
        for (uint32_t t = 0; t < d.t; ++t)
          for (uint32_t y = 0; y < d.h; ++y) v.at(t, y, x) = s.images[x].at(t, y);
      break;
  }
  return v;
}

Volume fuse_mean(const Volume& a, const Volume& b, const Volume& c) {
  if (!(a.dims() == b.dims()) || !(a.dims() == c.dims()))
    throw std::invalid_argument("fuse_mean: dims mismatch " + to_string(a.dims()) + " vs " +
                                to_string(b.dims()) + " vs " + to_string(c.dims()));
  Volume out(a.dims());
  const auto pa = a.data(), pb = b.data(), pc = c.data();
  auto po = out.data();
  for (size_t i = 0; i < pa.size(); ++i) {
    const double sum = static_cast<double>(pa[i]) + pb[i] + pc[i];
    po[i] = static_cast<float>(sum / 3.0);
  }
  return out;
}

Normalized normalize(const Volume& v) {
  const auto d = v.data();
  float lo = d[0], hi = d[0];
  for (float x : d) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  Normalized result;
  result.offset = lo;
  if (hi == lo) {
    result.scale = 0.0f;
    result.volume = Volume(v.dims(), 0.0f);
    return result;
  }
  result.scale = hi - lo;
  Volume out(v.dims());
  auto po = out.data();
  const float range = hi - lo;
  // per-element division keeps the extrema at exactly 0 and 1
  for (size_t i = 0; i < d.size(); ++i) po[i] = (d[i] - lo) / range;
  result.volume = std::move(out);
  return result;
}

Volume clamp01(Volume v) {
  for (float& x : v.data()) x = std::clamp(x, 0.0f, 1.0f);
  return v;
}

}  // namespace triplane
