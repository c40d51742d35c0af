#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "protac/error.hpp"
#include "protac/vec.hpp"

namespace protac {

/// Pinhole camera with an optional radial fisheye-style distortion. The link
/// frame (z along the cylinder axis, origin at mid-length) sits `b`
/// millimetres in front of the camera along its optical axis; axial depths
/// measured from the link origin relate to camera depth by z_c = b + depth.
struct CameraModel {
  double fx = 220.0, fy = 220.0;  // focal lengths, px
  double cx = 320.0, cy = 240.0;  // principal point, px
  double b = 150.0;               // link-frame origin offset along the optical axis, mm
  int width = 640, height = 480;
  std::vector<double> distortion;  // radial coefficients; empty or zero = pinhole
  Pose pose;                       // camera frame -> link frame

  bool contains(const Pixel& p) const {
    return p.u >= 0.0 && p.u <= width - 1 && p.v >= 0.0 && p.v <= height - 1;
  }
};

namespace detail {

inline bool has_distortion(const CameraModel& cam) {
  for (double k : cam.distortion)
    if (k != 0.0) return true;
  return false;
}

/// Radial warp factor: r_d = r * (1 + k1*a^2 + k2*a^4 + ...), a = atan(r).
/// Zero coefficients leave the pinhole mapping untouched.
inline double distort_radius(const CameraModel& cam, double r) {
  const double a = std::atan(r);
  double factor = 1.0, a_pow = 1.0;
  for (double k : cam.distortion) {
    a_pow *= a * a;
    factor += k * a_pow;
  }
  return r * factor;
}

inline double distort_radius_derivative(const CameraModel& cam, double r) {
  const double a = std::atan(r);
  const double da_dr = 1.0 / (1.0 + r * r);
  double factor = 1.0, dfactor_da = 0.0, a_pow = 1.0;
  int j = 0;
  for (double k : cam.distortion) {
    ++j;
    dfactor_da += k * 2.0 * j * a_pow * a;
    a_pow *= a * a;
    factor += k * a_pow;
  }
  return factor + r * dfactor_da * da_dr;
}

}  // namespace detail

/// Projects a link-frame point. Returns nullopt when the point lies at or
/// behind the camera plane (z_c <= 0).
inline std::optional<Pixel> project(const CameraModel& cam, const Vec3& point) {
  const Vec3 pc = cam.pose.apply_inverse(point);
  if (!(pc.z > 0.0)) return std::nullopt;
  double xn = pc.x / pc.z, yn = pc.y / pc.z;
  if (detail::has_distortion(cam)) {
    const double r = std::sqrt(xn * xn + yn * yn);
    if (r > 1e-12) {
      const double scale = detail::distort_radius(cam, r) / r;
      xn *= scale;
      yn *= scale;
    }
  }
  return Pixel{cam.fx * xn + cam.cx, cam.fy * yn + cam.cy};
}

/// Removes the fisheye warp from a pixel, returning its ideal-pinhole
/// location. Newton iteration on the radial profile, to 1e-8 px.
inline Pixel undistort_pixel(const CameraModel& cam, const Pixel& px) {
  if (!detail::has_distortion(cam)) return px;
  const double xd = (px.u - cam.cx) / cam.fx;
  const double yd = (px.v - cam.cy) / cam.fy;
  const double rd = std::sqrt(xd * xd + yd * yd);
  if (rd < 1e-12) return px;

  const double tol = 1e-8 / std::max(cam.fx, cam.fy);
  double r = rd;
  bool done = false;
  for (int it = 0; it < 50; ++it) {
    const double g = detail::distort_radius(cam, r) - rd;
    if (std::abs(g) <= tol) {
      done = true;
      break;
    }
    const double dg = detail::distort_radius_derivative(cam, r);
    if (dg <= 0.0) throw numerical_error("undistort: non-monotone radial profile");
    r -= g / dg;
    if (r < 0.0) r = 0.0;
  }
  if (!done && std::abs(detail::distort_radius(cam, r) - rd) > tol)
    throw numerical_error("undistort: Newton iteration did not converge");
  const double scale = r / rd;
  return Pixel{cam.cx + cam.fx * xd * scale, cam.cy + cam.fy * yd * scale};
}

/// Back-projects a pixel at axial depth `depth` (mm from the link origin
/// plane, measured along this camera's viewing axis) to a link-frame point.
inline Vec3 back_project(const CameraModel& cam, const Pixel& px, double depth) {
  if (!(depth >= 0.0) || !std::isfinite(depth))
    throw validation_error("back_project: depth must be finite and >= 0");
  const Pixel ideal = undistort_pixel(cam, px);
  const double zc = cam.b + depth;
  const double xn = (ideal.u - cam.cx) / cam.fx;
  const double yn = (ideal.v - cam.cy) / cam.fy;
  return cam.pose.apply({xn * zc, yn * zc, zc});
}

/// The two opposed end cameras of a link of the given length: camera 0 looks
/// along +z from z = -b, camera 1 looks back along -z from z = +b (b = L/2).
inline std::array<CameraModel, 2> make_camera_pair(double link_length,
                                                   const CameraModel& intrinsics = {}) {
  CameraModel cam0 = intrinsics;
  cam0.b = 0.5 * link_length;
  cam0.pose.rotation = Mat3::identity();
  cam0.pose.translation = {0.0, 0.0, -cam0.b};

  CameraModel cam1 = intrinsics;
  cam1.b = 0.5 * link_length;
  cam1.pose.rotation = Mat3::rot_x(std::numbers::pi);
  cam1.pose.translation = {0.0, 0.0, cam1.b};
  return {cam0, cam1};
}

// ---------------------------------------------------------------------------
// Plain key-value camera parameter file: fx=, fy=, cx=, cy=, b=, k1=

inline std::string dump_camera_file(const CameraModel& cam) {
  char buf[256];
  const double k1 = cam.distortion.empty() ? 0.0 : cam.distortion[0];
  std::snprintf(buf, sizeof buf, "fx=%.17g\nfy=%.17g\ncx=%.17g\ncy=%.17g\nb=%.17g\nk1=%.17g\n",
                cam.fx, cam.fy, cam.cx, cam.cy, cam.b, k1);
  return buf;
}

inline CameraModel load_camera_file(const std::string& text) {
  CameraModel cam;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw validation_error("camera file line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    double parsed = 0.0;
    try {
      parsed = std::stod(value);
    } catch (const std::exception&) {
      throw validation_error("camera file line " + std::to_string(line_no) + ": bad number '" + value + "'");
    }
    if (key == "fx") cam.fx = parsed;
    else if (key == "fy") cam.fy = parsed;
    else if (key == "cx") cam.cx = parsed;
    else if (key == "cy") cam.cy = parsed;
    else if (key == "b") cam.b = parsed;
    else if (key == "k1") cam.distortion = parsed != 0.0 ? std::vector<double>{parsed} : std::vector<double>{};
    else
      throw validation_error("camera file line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) throw validation_error("camera file: focal lengths must be positive");
  if (cam.cx < 0.0 || cam.cx >= cam.width || cam.cy < 0.0 || cam.cy >= cam.height)
    throw validation_error("camera file: principal point outside the image");
  if (!(cam.b > 0.0)) throw validation_error("camera file: b must be positive");
  return cam;
}

}  // namespace protac
