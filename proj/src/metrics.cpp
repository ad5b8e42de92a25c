#include "triplane/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace triplane {

double normalized_mse(const Volume& a, const Volume& b) {
  if (a.dims() != b.dims())
    throw std::invalid_argument("normalized_mse: dims mismatch, " + to_string(a.dims()) +
                                " vs " + to_string(b.dims()));
  const auto pa = a.data(), pb = b.data();
  double acc = 0.0;
  for (size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pa.size()) * 1000.0;
}

double temporal_variation(const Volume& v) {
  const Dims& d = v.dims();
  if (d.t < 2) throw std::invalid_argument("temporal_variation: needs at least 2 frames");
  const size_t frame = static_cast<size_t>(d.h) * d.w;
  double acc = 0.0;
  for (uint32_t t = 0; t + 1 < d.t; ++t) {
    const float* cur = v.frame_ptr(t);
    const float* nxt = v.frame_ptr(t + 1);
    for (size_t i = 0; i < frame; ++i) acc += std::abs(static_cast<double>(nxt[i]) - cur[i]);
  }
  return acc / (static_cast<double>(frame) * (d.t - 1));
}

namespace {

// 8-connected components of mask within one frame; returns per-pixel labels
// (0 = background) and each component's area, label i at areas[i-1].
std::vector<uint32_t> label_components(const std::vector<uint8_t>& mask, uint32_t h, uint32_t w,
                                       std::vector<uint32_t>& labels) {
  labels.assign(mask.size(), 0);
  std::vector<uint32_t> areas;
  std::vector<uint32_t> stack;
  for (size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || labels[start]) continue;
    const uint32_t label = static_cast<uint32_t>(areas.size()) + 1;
    uint32_t area = 0;
    stack.push_back(static_cast<uint32_t>(start));
    labels[start] = label;
    while (!stack.empty()) {
      const uint32_t p = stack.back();
      stack.pop_back();
      ++area;
      const int y = static_cast<int>(p / w), x = static_cast<int>(p % w);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<int>(h) || nx >= static_cast<int>(w))
            continue;
          const uint32_t q = static_cast<uint32_t>(ny) * w + static_cast<uint32_t>(nx);
          if (mask[q] && !labels[q]) {
            labels[q] = label;
            stack.push_back(q);
          }
        }
      }
    }
    areas.push_back(area);
  }
  return areas;
}

}  // namespace

uint32_t phantom_events(const Volume& denoised, const Volume& clean, float theta_int,
                        uint32_t theta_area) {
  if (denoised.dims() != clean.dims())
    throw std::invalid_argument("phantom_events: dims mismatch, " +
                                to_string(denoised.dims()) + " vs " + to_string(clean.dims()));
  if (theta_area == 0)
    throw std::invalid_argument("phantom_events: theta_area must be >= 1");
  const Dims& d = denoised.dims();
  const size_t frame = static_cast<size_t>(d.h) * d.w;

  // per-frame: thresholded clean mask + mask of qualifying denoised pixels
  // (members of components with area >= theta_area)
  std::vector<std::vector<uint8_t>> clean_mask(d.t), qual_mask(d.t);
  std::vector<std::vector<uint32_t>> den_labels(d.t);
  std::vector<std::vector<uint32_t>> den_areas(d.t);
  std::vector<uint8_t> mask(frame);
  std::vector<uint32_t> labels;

  for (uint32_t t = 0; t < d.t; ++t) {
    const float* cp = clean.frame_ptr(t);
    clean_mask[t].resize(frame);
    for (size_t i = 0; i < frame; ++i) clean_mask[t][i] = cp[i] > theta_int;

    const float* dp = denoised.frame_ptr(t);
    for (size_t i = 0; i < frame; ++i) mask[i] = dp[i] > theta_int;
    den_areas[t] = label_components(mask, d.h, d.w, labels);
    den_labels[t] = labels;
    qual_mask[t].assign(frame, 0);
    for (size_t i = 0; i < frame; ++i) {
      const uint32_t l = labels[i];
      if (l && den_areas[t][l - 1] >= theta_area) qual_mask[t][i] = 1;
    }
  }

  uint32_t count = 0;
  std::vector<uint8_t> disqualified;
  for (uint32_t t = 0; t < d.t; ++t) {
    const auto& areas = den_areas[t];
    disqualified.assign(areas.size(), 0);
    for (size_t i = 0; i < frame; ++i) {
      const uint32_t l = den_labels[t][i];
      if (!l || areas[l - 1] < theta_area) continue;
      if (clean_mask[t][i] || (t > 0 && qual_mask[t - 1][i]) ||
          (t + 1 < d.t && qual_mask[t + 1][i]))
        disqualified[l - 1] = 1;
    }
    for (size_t l = 0; l < areas.size(); ++l)
      if (areas[l] >= theta_area && !disqualified[l]) ++count;
  }
  return count;
}

nlohmann::json report_json(const MetricsReport& r, bool include_runtime) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& [name, m] : r.methods) {
    nlohmann::json row = {{"method", name},
                          {"normalized_mse_1e-3", m.mse},
                          {"temporal_variation", m.temporal_variation},
                          {"phantom_events", m.phantom_events}};
    if (include_runtime) row["runtime_seconds"] = m.runtime_seconds;
    methods.push_back(std::move(row));
  }
  return {{"format", "triplane-metrics-v1"},
          {"theta_int", r.theta_int},
          {"theta_area", r.theta_area},
          {"test_volumes", r.volumes},
          {"methods", std::move(methods)}};
}

std::string report_table(const MetricsReport& r) {
  const size_t cols = r.methods.size();
  std::vector<std::vector<std::string>> cells(4, std::vector<std::string>(cols + 1));
  cells[0][0] = "normalized MSE (1e-3)";
  cells[1][0] = "temporal variation";
  cells[2][0] = "phantom events";
  cells[3][0] = "runtime (s/volume)";

  char buf[64];
  for (size_t c = 0; c < cols; ++c) {
    const auto& m = r.methods[c].second;
    std::snprintf(buf, sizeof(buf), "%.2f", m.mse);
    cells[0][c + 1] = buf;
    std::snprintf(buf, sizeof(buf), "%.4f", m.temporal_variation);
    cells[1][c + 1] = buf;
    cells[2][c + 1] = std::to_string(m.phantom_events);
    std::snprintf(buf, sizeof(buf), "%.3f", m.runtime_seconds);
    cells[3][c + 1] = buf;
  }

  std::vector<size_t> width(cols + 1, 0);
  width[0] = cells[0][0].size();
  for (const auto& row : cells) width[0] = std::max(width[0], row[0].size());
  for (size_t c = 0; c < cols; ++c) {
    width[c + 1] = r.methods[c].first.size();
    for (const auto& row : cells) width[c + 1] = std::max(width[c + 1], row[c + 1].size());
  }

  auto pad = [](const std::string& s, size_t w) {
    return std::string(w - s.size(), ' ') + s;
  };
  std::string out;
  out += pad("", width[0]);
  for (size_t c = 0; c < cols; ++c) out += "  " + pad(r.methods[c].first, width[c + 1]);
  out += '\n';
  for (const auto& row : cells) {
    out += row[0] + std::string(width[0] - row[0].size(), ' ');
    for (size_t c = 0; c < cols; ++c) out += "  " + pad(row[c + 1], width[c + 1]);
    out += '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.4f", r.theta_int);
  out += "thresholds: theta_int=" + std::string(buf) +
         ", theta_area=" + std::to_string(r.theta_area) +
         "; test volumes: " + std::to_string(r.volumes) + "\n";
  return out;
}

}  // namespace triplane
