#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "protac/camera.hpp"
#include "protac/image.hpp"
#include "protac/mesh.hpp"
#include "protac/rng.hpp"
#include "protac/scene.hpp"
#include "protac/vec.hpp"

namespace protac {

/// Opaque-mode observation: bright marker disks on a dark background.
struct TactileImage {
  Image8 image;
  int camera_id = 0;
};

/// Renders the marker field as anti-aliased disks (4x4 supersampling).
/// Markers behind the camera are omitted; overlapping disks merge by max
/// coverage. Deterministic.
inline TactileImage render_tactile_image(const CameraModel& camera, const SkinMesh& mesh,
                                         const MarkerSet& markers,
                                         std::span<const Vec3> displacement, int camera_id = 0) {
  TactileImage out;
  out.camera_id = camera_id;
  out.image = Image8(camera.width, camera.height, 0);

  for (const MarkerAnchor& anchor : markers.anchors) {
    const Vec3 world = marker_world_position(mesh, anchor, displacement);
    const Vec3 cam_pt = camera.pose.apply_inverse(world);
    if (!(cam_pt.z > 0.0)) continue;
    const auto center = project(camera, world);
    if (!center) continue;
    const double radius_px = 0.5 * markers.diameter * 0.5 * (camera.fx + camera.fy) / cam_pt.z;
    if (radius_px <= 0.0) continue;

    const int x0 = std::max(0, static_cast<int>(std::floor(center->u - radius_px - 1.0)));
    const int x1 = std::min(camera.width - 1, static_cast<int>(std::ceil(center->u + radius_px + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(center->v - radius_px - 1.0)));
    const int y1 = std::min(camera.height - 1, static_cast<int>(std::ceil(center->v + radius_px + 1.0)));
    const double r2 = radius_px * radius_px;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int covered = 0;
        for (int sy = 0; sy < 4; ++sy) {
          const double py = y - 0.5 + (sy + 0.5) / 4.0 - center->v;
          for (int sx = 0; sx < 4; ++sx) {
            const double px = x - 0.5 + (sx + 0.5) / 4.0 - center->u;
            if (px * px + py * py <= r2) ++covered;
          }
        }
        if (covered == 0) continue;
        const auto value = static_cast<std::uint8_t>(std::lround(255.0 * covered / 16.0));
        auto& dst = out.image.at(x, y);
        dst = std::max(dst, value);
      }
    }
  }
  return out;
}

/// Reference-difference normalization: (image - reference) / 255, in [-1, 1].
/// Cancels any bias common to both frames.
inline FloatImage normalize_tactile(const Image8& image, const Image8& reference) {
  if (!image.same_size(reference))
    throw validation_error("normalize_tactile: image dimensions differ");
  FloatImage out(image.width, image.height);
  for (size_t i = 0; i < image.pixels.size(); ++i)
    out.pixels[i] = (static_cast<float>(image.pixels[i]) - static_cast<float>(reference.pixels[i])) / 255.0f;
  return out;
}

/// Ray-casts the scene through the camera. Each pixel stores the axial depth
/// (link-frame z along this camera's viewing axis) of the nearest hit; misses
/// and hits the camera cannot express under a non-negative axial depth stay
/// invalid. One camera therefore covers the half-link beyond the mid plane;
/// the opposed camera covers the rest.
inline DepthMap render_depth_map(const CameraModel& camera, const ObstacleScene& scene) {
  DepthMap map(camera.width, camera.height);
  if (scene.empty()) return map;
  const Vec3 origin = camera.pose.apply({0.0, 0.0, 0.0});
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Pixel ideal = undistort_pixel(camera, Pixel{double(x), double(y)});
      const Vec3 dir_cam = normalized({(ideal.u - camera.cx) / camera.fx,
                                       (ideal.v - camera.cy) / camera.fy, 1.0});
      const Vec3 dir = camera.pose.rotation * dir_cam;
      const auto t = raycast(scene, origin, dir);
      if (!t) continue;
      const double axial = *t * dir_cam.z - camera.b;
      if (axial >= 0.0) map.at(x, y) = axial;
    }
  }
  return map;
}

/// Applies the affine miscalibration and Gaussian pixel noise s*depth + t + e.
/// Seeded per map; pixel order fixed, so output is reproducible.
inline DepthMap corrupt_depth(const DepthMap& depth, double noise_sigma, double scale,
                              double shift, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw validation_error("corrupt_depth: sigma must be >= 0");
  if (!(scale > 0.0)) throw validation_error("corrupt_depth: scale must be positive");
  DepthMap out = depth;
  Rng rng(seed, 0x9d5cULL);
  for (double& d : out.depth) {
    if (!DepthMap::valid_value(d)) continue;
    const double eps = noise_sigma > 0.0 ? noise_sigma * rng.gaussian() : 0.0;
    d = scale * d + shift + eps;
  }
  return out;
}

}  // namespace protac
