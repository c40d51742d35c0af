#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "protac/camera.hpp"
#include "protac/error.hpp"
#include "protac/image.hpp"
#include "protac/vec.hpp"

namespace protac {

/// Binary obstacle mask over the image grid.
struct ObstacleMask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> mask;  // 0 or 1
  int threshold = 0;
  bool degenerate = false;  // single-valued input image

  bool at(int x, int y) const { return mask[static_cast<size_t>(y) * width + x] != 0; }
};

/// Back-projected obstacle points with radial and normal distances.
struct ObstaclePointCloud {
  std::vector<Vec3> points;        // link frame, mm
  std::vector<int> pixel_index;    // row-major pixel id (v * width + u)
  std::vector<double> radial;      // sqrt(x^2 + y^2)
  std::vector<double> normal;      // radial - skin radius; filled by normal_distances
  int width = 0;

  size_t size() const { return points.size(); }
};

struct ProximityEstimate {
  bool valid = false;
  double distance = 0.0;  // closest normal distance, mm; negative = penetrating nominal radius
  int argmin_u = -1, argmin_v = -1;
  int view = -1;               // winning camera id
  bool low_confidence = false; // outside the configured reliable range
  bool contact_imminent() const { return valid && distance < 0.0; }
};

/// Maps depth to a near-bright 8-bit image over valid pixels:
/// round(255 * (max - depth) / (max - min)); invalid pixels become 0.
/// A constant-depth map is treated as fully bright.
inline Image8 depth_to_intensity(const DepthMap& depth) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double d : depth.depth) {
    if (!DepthMap::valid_value(d)) continue;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (!(lo <= hi)) throw validation_error("depth_to_intensity: no valid pixels");
  Image8 out(depth.width, depth.height, 0);
  const double range = hi - lo;
  for (size_t i = 0; i < depth.depth.size(); ++i) {
    const double d = depth.depth[i];
    if (!DepthMap::valid_value(d)) continue;
    out.pixels[i] = range > 0.0
                        ? static_cast<std::uint8_t>(std::lround(255.0 * (hi - d) / range))
                        : std::uint8_t{255};
  }
  return out;
}

/// Otsu's threshold over the 256-bin histogram: maximizes between-class
/// variance with exact integer arithmetic; ties resolve toward the lower
/// threshold. Mask = intensity > t. A single-valued image is flagged
/// degenerate (all ones if that value > 0, else all zeros).
inline ObstacleMask otsu_threshold(const Image8& image) {
  std::array<std::uint64_t, 256> hist{};
  for (std::uint8_t p : image.pixels) hist[p]++;

  ObstacleMask out;
  out.width = image.width;
  out.height = image.height;
  out.mask.assign(image.pixels.size(), 0);

  int distinct = 0, single_value = 0;
  for (int v = 0; v < 256; ++v)
    if (hist[size_t(v)] > 0) {
      ++distinct;
      single_value = v;
    }
  if (distinct <= 1) {
    out.degenerate = true;
    out.threshold = 0;
    if (single_value > 0) out.mask.assign(image.pixels.size(), 1);
    return out;
  }

  const std::uint64_t total_n = image.pixels.size();
  std::uint64_t total_s = 0;
  for (int v = 0; v < 256; ++v) total_s += hist[size_t(v)] * static_cast<std::uint64_t>(v);

  // Between-class variance at threshold t is proportional to
  // (s0*n1 - s1*n0)^2 / (n0*n1); compare candidates by cross-multiplication.
  using u128 = unsigned __int128;
  int best_t = -1;
  u128 best_num = 0;
  std::uint64_t best_den = 1;
  std::uint64_t n0 = 0, s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[size_t(t)];
    s0 += hist[size_t(t)] * static_cast<std::uint64_t>(t);
    const std::uint64_t n1 = total_n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::uint64_t s1 = total_s - s0;
    const long long diff = static_cast<long long>(s0 * n1) - static_cast<long long>(s1 * n0);
    const u128 num = static_cast<u128>(diff < 0 ? -diff : diff) *
                     static_cast<u128>(diff < 0 ? -diff : diff);
    const std::uint64_t den = n0 * n1;
    if (best_t < 0 || num * best_den > best_num * den) {
      best_t = t;
      best_num = num;
      best_den = den;
    }
  }
  out.threshold = best_t;
  for (size_t i = 0; i < image.pixels.size(); ++i)
    out.mask[i] = image.pixels[i] > best_t ? 1 : 0;
  return out;
}

/// Back-projects every masked pixel with a valid depth, in row-major order.
inline ObstaclePointCloud masked_obstacle_points(const CameraModel& camera, const DepthMap& depth,
                                                 const ObstacleMask& mask) {
  if (depth.width != mask.width || depth.height != mask.height)
    throw validation_error("masked_obstacle_points: depth and mask sizes differ");
  ObstaclePointCloud cloud;
  cloud.width = depth.width;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!mask.at(x, y) || !depth.valid(x, y)) continue;
      const Vec3 p = back_project(camera, Pixel{double(x), double(y)}, depth.at(x, y));
      cloud.points.push_back(p);
      cloud.pixel_index.push_back(y * depth.width + x);
      cloud.radial.push_back(std::sqrt(p.x * p.x + p.y * p.y));
    }
  }
  cloud.normal.assign(cloud.points.size(), 0.0);
  return cloud;
}

/// Fills the radial clearance from the skin surface. Negative values are
/// kept: they mark points penetrating the nominal skin radius.
inline void normal_distances(ObstaclePointCloud& cloud, double skin_radius) {
  if (!(skin_radius > 0.0)) throw validation_error("normal_distances: skin radius must be positive");
  for (size_t k = 0; k < cloud.size(); ++k) cloud.normal[k] = cloud.radial[k] - skin_radius;
}

/// Minimum normal distance over the cloud; ties resolve to the lowest pixel
/// index. An empty cloud yields an invalid estimate (no obstacle detected).
inline ProximityEstimate closest_distance(const ObstaclePointCloud& cloud, int view = -1) {
  ProximityEstimate est;
  est.view = view;
  if (cloud.size() == 0) return est;
  size_t best = 0;
  for (size_t k = 1; k < cloud.size(); ++k)
    if (cloud.normal[k] < cloud.normal[best]) best = k;
  est.valid = true;
  est.distance = cloud.normal[best];
  est.argmin_u = cloud.pixel_index[best] % cloud.width;
  est.argmin_v = cloud.pixel_index[best] / cloud.width;
  return est;
}

/// Least-squares affine fit true = s * raw + t over calibration pairs.
inline std::pair<double, double> calibrate_depth_affine(const std::vector<double>& raw_depths,
                                                        const std::vector<double>& true_distances) {
  if (raw_depths.size() != true_distances.size() || raw_depths.size() < 2)
    throw validation_error("calibrate_depth_affine: need >= 2 paired samples");
  const double n = static_cast<double>(raw_depths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < raw_depths.size(); ++i) {
    sx += raw_depths[i];
    sy += true_distances[i];
    sxx += raw_depths[i] * raw_depths[i];
    sxy += raw_depths[i] * true_distances[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-12 * std::max(1.0, sxx))
    throw numerical_error("calibrate_depth_affine: raw depths are rank deficient");
  const double s = (n * sxy - sx * sy) / det;
  const double t = (sy - s * sx) / n;
  return {s, t};
}

/// Applies a fitted affine correction; pixels mapping to negative depth
/// cannot be expressed by the back-projection model and become invalid.
inline DepthMap apply_depth_calibration(const DepthMap& depth, double scale, double shift) {
  DepthMap out = depth;
  for (double& d : out.depth) {
    if (!DepthMap::valid_value(d)) continue;
    d = scale * d + shift;
    if (d < 0.0) d = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// Combines opposed camera views: the smaller valid distance wins, so the two
/// half-link sensing ranges merge into full coverage.
inline ProximityEstimate fuse_views(const ProximityEstimate& a, const ProximityEstimate& b) {
  if (!a.valid) return b;
  if (!b.valid) return a;
  return a.distance <= b.distance ? a : b;
}

/// Flags estimates outside the configured reliable range as low confidence.
inline ProximityEstimate annotate_confidence(ProximityEstimate est, double reliable_min,
                                             double reliable_max) {
  if (est.valid) est.low_confidence = est.distance < reliable_min || est.distance > reliable_max;
  return est;
}

}  // namespace protac
