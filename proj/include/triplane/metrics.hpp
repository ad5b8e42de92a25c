#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "triplane/volume.hpp"

namespace triplane {

// Mean over all pixels of (a-b)^2, reported in 1e-3 units (value x 1000).
double normalized_mse(const Volume& a, const Volume& b);

// Mean absolute frame-to-frame change per pixel per step; requires T >= 2.
double temporal_variation(const Volume& v);

// Single-frame false particles: 8-connected components of denoised pixels
// above theta_int with area >= theta_area that touch no thresholded clean
// pixel in their frame and no qualifying denoised component in frames t-1 or
// t+1.
uint32_t phantom_events(const Volume& denoised, const Volume& clean, float theta_int,
                        uint32_t theta_area);

struct MethodMetrics {
  double mse = 0.0;                 // normalized MSE x 1e-3, pooled over all test pixels
  double temporal_variation = 0.0;  // mean of per-volume scores
  uint64_t phantom_events = 0;      // total across test volumes
  double runtime_seconds = 0.0;     // mean wall-clock per volume
};

// One benchmark table: methods in display order with the thresholds used.
struct MetricsReport {
  std::vector<std::pair<std::string, MethodMetrics>> methods;
  float theta_int = 0.0f;
  uint32_t theta_area = 4;
  uint32_t volumes = 0;  // test volumes evaluated
};

// include_runtime=false yields the fully deterministic document that rerun
// comparisons rely on; runtimes go to a separate timings file.
nlohmann::json report_json(const MetricsReport& r, bool include_runtime);

// Aligned text table, methods as columns.
std::string report_table(const MetricsReport& r);

}  // namespace triplane
