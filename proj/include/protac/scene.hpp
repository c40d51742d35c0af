#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "protac/error.hpp"
#include "protac/vec.hpp"

namespace protac {

struct SphereSpec {
  Vec3 center;
  double radius = 1.0;
};

struct CapsuleSpec {
  Vec3 p0, p1;  // segment endpoints
  double radius = 1.0;
};

struct BoxSpec {
  Vec3 center;
  Vec3 half_extents;
  Mat3 rotation;  // box frame -> link frame
};

struct Primitive {
  std::variant<SphereSpec, CapsuleSpec, BoxSpec> shape;
  std::uint8_t reflectance_tag = 0;
};

/// Analytic obstacle scene in the link frame.
struct ObstacleScene {
  std::vector<Primitive> primitives;

  void add(SphereSpec s, std::uint8_t tag = 0) { primitives.push_back({s, tag}); }
  void add(CapsuleSpec c, std::uint8_t tag = 0) { primitives.push_back({c, tag}); }
  void add(BoxSpec b, std::uint8_t tag = 0) { primitives.push_back({b, tag}); }
  bool empty() const { return primitives.empty(); }
};

namespace detail {

inline std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const SphereSpec& s) {
  const Vec3 oc = o - s.center;
  const double b = dot(oc, d);
  const double c = oc.norm2() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = -b - sq, t1 = -b + sq;
  if (t0 > 1e-9) return t0;
  if (t1 > 1e-9) return t1;
  return std::nullopt;
}

inline std::optional<double> ray_capsule(const Vec3& o, const Vec3& d, const CapsuleSpec& c) {
  // Infinite cylinder about the segment axis, then clamp to caps.
  const Vec3 axis = c.p1 - c.p0;
  const double len2 = axis.norm2();
  std::optional<double> best;
  auto consider = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  if (len2 > 1e-18) {
    const Vec3 u = axis / std::sqrt(len2);
    const Vec3 oc = o - c.p0;
    const Vec3 d_perp = d - dot(d, u) * u;
    const Vec3 oc_perp = oc - dot(oc, u) * u;
    const double a = d_perp.norm2();
    if (a > 1e-18) {
      const double b = dot(d_perp, oc_perp);
      const double cc = oc_perp.norm2() - c.radius * c.radius;
      const double disc = b * b - a * cc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double t : {(-b - sq) / a, (-b + sq) / a}) {
          if (t > 1e-9) {
            const double s = dot(oc + t * d, u);
            if (s >= 0.0 && s * s <= len2) {
              consider(t);
              break;
            }
          }
        }
      }
    }
  }
  consider(ray_sphere(o, d, {c.p0, c.radius}));
  consider(ray_sphere(o, d, {c.p1, c.radius}));
  return best;
}

inline std::optional<double> ray_box(const Vec3& o, const Vec3& d, const BoxSpec& box) {
  const Vec3 ol = box.rotation.transposed() * (o - box.center);
  const Vec3 dl = box.rotation.transposed() * d;
  double t_near = -1e300, t_far = 1e300;
  const double oa[3] = {ol.x, ol.y, ol.z};
  const double da[3] = {dl.x, dl.y, dl.z};
  const double ha[3] = {box.half_extents.x, box.half_extents.y, box.half_extents.z};
  for (int k = 0; k < 3; ++k) {
    if (std::abs(da[k]) < 1e-15) {
      if (oa[k] < -ha[k] || oa[k] > ha[k]) return std::nullopt;
      continue;
    }
    double t0 = (-ha[k] - oa[k]) / da[k];
    double t1 = (ha[k] - oa[k]) / da[k];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > 1e-9) return t_near;
  if (t_far > 1e-9) return t_far;
  return std::nullopt;
}

}  // namespace detail

/// Nearest surface hit of a unit-direction ray, or nullopt on a miss.
/// Ties between primitives resolve to the lower primitive index.
inline std::optional<double> raycast(const ObstacleScene& scene, const Vec3& origin,
                                     const Vec3& dir) {
  std::optional<double> best;
  for (const auto& prim : scene.primitives) {
    std::optional<double> hit;
    if (const auto* s = std::get_if<SphereSpec>(&prim.shape)) hit = detail::ray_sphere(origin, dir, *s);
    else if (const auto* c = std::get_if<CapsuleSpec>(&prim.shape)) hit = detail::ray_capsule(origin, dir, *c);
    else if (const auto* b = std::get_if<BoxSpec>(&prim.shape)) hit = detail::ray_box(origin, dir, *b);
    if (hit && (!best || *hit < *best)) best = hit;
  }
  return best;
}

/// Smallest lateral (xy) distance from the link axis attained by a primitive,
/// minus the skin radius: >= 0 means the primitive stays clear of the skin.
inline double radial_clearance(const Primitive& prim, double skin_radius) {
  if (const auto* s = std::get_if<SphereSpec>(&prim.shape))
    return s->center.radial() - s->radius - skin_radius;
  if (const auto* c = std::get_if<CapsuleSpec>(&prim.shape)) {
    // 2-D distance from the origin to the projected segment.
    const double ax = c->p0.x, ay = c->p0.y;
    const double bx = c->p1.x, by = c->p1.y;
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0) : 0.0;
    const double px = ax + t * dx, py = ay + t * dy;
    return std::sqrt(px * px + py * py) - c->radius - skin_radius;
  }
  const auto& b = std::get<BoxSpec>(prim.shape);
  // Exact for any rotation: the lateral footprint of a convex solid is the
  // convex hull of its corner projections; minimise over hull edges.
  std::vector<std::pair<double, double>> corners;
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sy = -1; sy <= 1; sy += 2)
      for (int sz = -1; sz <= 1; sz += 2) {
        const Vec3 p = b.center + b.rotation * Vec3{sx * b.half_extents.x, sy * b.half_extents.y,
                                                    sz * b.half_extents.z};
        corners.emplace_back(p.x, p.y);
      }
  // The origin lies outside the footprint iff some corner-pair line separates
  // it from every corner; the distance is then attained on a corner segment.
  double best = 1e300;
  bool outside = false;
  for (size_t i = 0; i < corners.size(); ++i) {
    for (size_t j = i + 1; j < corners.size(); ++j) {
      const double ax = corners[i].first, ay = corners[i].second;
      const double dx = corners[j].first - ax, dy = corners[j].second - ay;
      const double len2 = dx * dx + dy * dy;
      if (len2 < 1e-18) continue;
      const double t = std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0);
      const double px = ax + t * dx, py = ay + t * dy;
      best = std::min(best, std::sqrt(px * px + py * py));
      auto side_of = [&](double qx, double qy) { return (qx - ax) * dy - (qy - ay) * dx; };
      const double origin_side = side_of(0.0, 0.0);
      if (std::abs(origin_side) < 1e-12) continue;
      bool separates = true;
      for (const auto& c2 : corners) {
        if (side_of(c2.first, c2.second) * origin_side > 1e-12) {
          separates = false;
          break;
        }
      }
      if (separates) outside = true;
    }
  }
  if (!outside) return -skin_radius;  // axis passes through the footprint
  return best - skin_radius;
}

/// Validates that every primitive keeps non-negative radial clearance from
/// the (undeformed) skin. Scenario loaders call this on static scenes.
inline void validate_scene(const ObstacleScene& scene, double skin_radius) {
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    if (radial_clearance(scene.primitives[i], skin_radius) < 0.0)
      throw validation_error("scene: primitive " + std::to_string(i) +
                             " penetrates the skin surface");
  }
}

}  // namespace protac
