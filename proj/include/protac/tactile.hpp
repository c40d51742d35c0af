#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protac/camera.hpp"
#include "protac/dense.hpp"
#include "protac/error.hpp"
#include "protac/fem.hpp"
#include "protac/image.hpp"
#include "protac/mesh.hpp"
#include "protac/render.hpp"
#include "protac/sparse.hpp"
#include "protac/vec.hpp"

namespace protac {

/// How marker centroids are extracted from an opaque-mode image.
///  - kRawWindow: intensity-weighted centroid of the raw image inside a fixed
///    window around each reference marker ("pure" inputs; any brightness
///    offset dilutes the signal toward the window centre).
///  - kReferenceDiff: the common offset between image and reference is
///    cancelled exactly before thresholding, then connected components give
///    binary centroids (the "normalized" input path).
enum class DetectionMode { kRawWindow, kReferenceDiff };

/// Per-(marker, view) centroid displacements from the reference frame, px.
struct MarkerObservation {
  int marker_count = 0;
  int view_count = 0;
  std::vector<double> du, dv;          // view-major, then marker
  std::vector<std::uint8_t> visible;   // same layout
  DetectionMode mode = DetectionMode::kReferenceDiff;

  int index(int view, int marker) const { return view * marker_count + marker; }
};

struct TrackerOptions {
  int threshold = 127;
  double match_radius = 30.0;    // px
  double tie_tolerance = 0.75;   // px; closer second candidates are ambiguous
  int window_half = 15;          // px, raw-window mode
  double min_mass = 500.0;       // intensity sum for a visible raw-window marker
  int min_area = 2;              // px, component filter
  double min_separation = 9.0;   // px; closer reference pairs are untrackable
                                 // for this camera (foreshortened far rings;
                                 // the opposed camera covers them)
};

namespace detail {

struct Component {
  double cx = 0.0, cy = 0.0;
  int area = 0;
};

/// 8-connected components of mask pixels; binary centroids.
inline std::vector<Component> connected_components(const std::vector<std::uint8_t>& mask, int w,
                                                   int h, int min_area) {
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(mask.size()); ++start) {
    if (!mask[size_t(start)] || label[size_t(start)] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.push_back({});
    Component& comp = out.back();
    long sx = 0, sy = 0;
    stack.assign(1, start);
    label[size_t(start)] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w, y = p / w;
      sx += x;
      sy += y;
      comp.area++;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int q = ny * w + nx;
          if (mask[size_t(q)] && label[size_t(q)] < 0) {
            label[size_t(q)] = id;
            stack.push_back(q);
          }
        }
    }
    comp.cx = double(sx) / comp.area;
    comp.cy = double(sy) / comp.area;
  }
  std::erase_if(out, [&](const Component& c) { return c.area < min_area; });
  return out;
}

/// Median of (image - reference), exact over the integer histogram. With a
/// mostly-background frame this recovers any constant brightness offset.
inline int difference_median(const Image8& image, const Image8& reference) {
  std::array<std::uint32_t, 511> hist{};
  for (size_t i = 0; i < image.pixels.size(); ++i)
    hist[size_t(int(image.pixels[i]) - int(reference.pixels[i]) + 255)]++;
  const std::uint64_t want = (image.pixels.size() + 1) / 2;
  std::uint64_t cum = 0;
  for (int v = 0; v < 511; ++v) {
    cum += hist[size_t(v)];
    if (cum >= want) return v - 255;
  }
  return 0;
}

}  // namespace detail

/// Tracks marker centroids against a fixed reference frame for one camera.
class MarkerTracker {
 public:
  MarkerTracker(const CameraModel& camera, const SkinMesh& mesh, const MarkerSet& markers,
                const Image8& reference, DetectionMode mode, TrackerOptions options = {})
      : reference_(reference), mode_(mode), options_(options),
        marker_count_(static_cast<int>(markers.anchors.size())) {
    // Expected rest locations from projection; refined to detected centroids
    // so that tracking the reference frame itself reports exactly zero.
    std::vector<std::optional<Pixel>> expected(markers.anchors.size());
    const std::vector<Vec3> rest(mesh.nodes.size());
    for (size_t m = 0; m < markers.anchors.size(); ++m)
      expected[m] = project(camera, marker_world_position(mesh, markers.anchors[m], rest));

    ref_centroid_.assign(markers.anchors.size(), Pixel{});
    ref_visible_.assign(markers.anchors.size(), 0);
    if (mode == DetectionMode::kRawWindow) {
      for (size_t m = 0; m < markers.anchors.size(); ++m) {
        if (!expected[m] || !camera.contains(*expected[m])) continue;
        const auto c = window_centroid(reference, *expected[m]);
        if (c) {
          ref_centroid_[m] = *c;
          ref_visible_[m] = 1;
        }
      }
    } else {
      std::vector<std::uint8_t> mask(reference.pixels.size());
      for (size_t i = 0; i < mask.size(); ++i)
        mask[i] = reference.pixels[i] > options_.threshold ? 1 : 0;
      const auto comps = detail::connected_components(mask, reference.width, reference.height,
                                                      options_.min_area);
      for (size_t m = 0; m < markers.anchors.size(); ++m) {
        if (!expected[m]) continue;
        double best = options_.match_radius;
        for (const auto& comp : comps) {
          const double d = pixel_distance({comp.cx, comp.cy}, *expected[m]);
          if (d < best) {
            best = d;
            ref_centroid_[m] = {comp.cx, comp.cy};
            ref_visible_[m] = 1;
          }
        }
      }
    }

    // Markers whose reference centroids crowd below the separation limit are
    // untrackable from this viewpoint; drop both members of each tight pair.
    std::vector<std::uint8_t> keep = ref_visible_;
    for (size_t a = 0; a < ref_centroid_.size(); ++a) {
      if (!ref_visible_[a]) continue;
      for (size_t b = a + 1; b < ref_centroid_.size(); ++b) {
        if (!ref_visible_[b]) continue;
        if (pixel_distance(ref_centroid_[a], ref_centroid_[b]) < options_.min_separation)
          keep[a] = keep[b] = 0;
      }
    }
    ref_visible_ = keep;
  }

  const Pixel& reference_centroid(int marker) const { return ref_centroid_[size_t(marker)]; }
  bool reference_visible(int marker) const { return ref_visible_[size_t(marker)] != 0; }

  MarkerObservation track(const Image8& image) const {
    if (!image.same_size(reference_))
      throw validation_error("marker tracking: image dimensions differ from reference");
    MarkerObservation obs;
    obs.marker_count = marker_count_;
    obs.view_count = 1;
    obs.mode = mode_;
    obs.du.assign(size_t(marker_count_), 0.0);
    obs.dv.assign(size_t(marker_count_), 0.0);
    obs.visible.assign(size_t(marker_count_), 0);

    if (mode_ == DetectionMode::kRawWindow) {
      for (int m = 0; m < marker_count_; ++m) {
        if (!ref_visible_[size_t(m)]) continue;
        const auto c = window_centroid(image, ref_centroid_[size_t(m)]);
        if (!c) continue;
        obs.du[size_t(m)] = c->u - ref_centroid_[size_t(m)].u;
        obs.dv[size_t(m)] = c->v - ref_centroid_[size_t(m)].v;
        obs.visible[size_t(m)] = 1;
      }
      return obs;
    }

    // Cancel any constant brightness offset, threshold, label, then match
    // components to reference markers by nearest neighbour.
    const int offset = detail::difference_median(image, reference_);
    std::vector<std::uint8_t> mask(image.pixels.size());
    for (size_t i = 0; i < mask.size(); ++i)
      mask[i] = int(image.pixels[i]) - offset > options_.threshold ? 1 : 0;
    const auto comps =
        detail::connected_components(mask, image.width, image.height, options_.min_area);

    // Globally greedy assignment by ascending distance: resting markers bind
    // to their own components first, so a large shift toward a neighbouring
    // reference cannot steal it. A later component contesting an assigned
    // marker by less than the tie tolerance is a genuine ambiguity.
    struct Candidate {
      double dist;
      int comp;
      int marker;
    };
    std::vector<Candidate> candidates;
    for (size_t c = 0; c < comps.size(); ++c)
      for (int m = 0; m < marker_count_; ++m) {
        if (!ref_visible_[size_t(m)]) continue;
        const double d = pixel_distance({comps[c].cx, comps[c].cy}, ref_centroid_[size_t(m)]);
        if (d <= options_.match_radius) candidates.push_back({d, static_cast<int>(c), m});
      }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      if (a.marker != b.marker) return a.marker < b.marker;
      return a.comp < b.comp;
    });
    std::vector<double> matched_dist(size_t(marker_count_), -1.0);
    std::vector<std::uint8_t> comp_taken(comps.size(), 0);
    for (const Candidate& cand : candidates) {
      if (obs.visible[size_t(cand.marker)]) {
        if (!comp_taken[size_t(cand.comp)] &&
            cand.dist - matched_dist[size_t(cand.marker)] < options_.tie_tolerance)
          throw numerical_error("marker tracking: ambiguous match for marker " +
                                std::to_string(cand.marker));
        continue;
      }
      if (comp_taken[size_t(cand.comp)]) continue;
      const auto& comp = comps[size_t(cand.comp)];
      obs.du[size_t(cand.marker)] = comp.cx - ref_centroid_[size_t(cand.marker)].u;
      obs.dv[size_t(cand.marker)] = comp.cy - ref_centroid_[size_t(cand.marker)].v;
      obs.visible[size_t(cand.marker)] = 1;
      matched_dist[size_t(cand.marker)] = cand.dist;
      comp_taken[size_t(cand.comp)] = 1;
    }
    return obs;
  }

 private:
  std::optional<Pixel> window_centroid(const Image8& img, const Pixel& center) const {
    const int x0 = std::max(0, int(std::lround(center.u)) - options_.window_half);
    const int x1 = std::min(img.width - 1, int(std::lround(center.u)) + options_.window_half);
    const int y0 = std::max(0, int(std::lround(center.v)) - options_.window_half);
    const int y1 = std::min(img.height - 1, int(std::lround(center.v)) + options_.window_half);
    double mass = 0.0, mx = 0.0, my = 0.0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double w = img.at(x, y);
        mass += w;
        mx += w * x;
        my += w * y;
      }
    if (mass < options_.min_mass) return std::nullopt;
    return Pixel{mx / mass, my / mass};
  }

  Image8 reference_;
  DetectionMode mode_;
  TrackerOptions options_;
  int marker_count_;
  std::vector<Pixel> ref_centroid_;
  std::vector<std::uint8_t> ref_visible_;
};

/// One-shot detection against a reference rendering.
inline MarkerObservation detect_marker_centroids(const Image8& image, const Image8& reference,
                                                 const CameraModel& camera, const SkinMesh& mesh,
                                                 const MarkerSet& markers,
                                                 DetectionMode mode = DetectionMode::kReferenceDiff,
                                                 TrackerOptions options = {}) {
  return MarkerTracker(camera, mesh, markers, reference, mode, options).track(image);
}

/// Concatenates per-view observations, camera-1 block first.
inline MarkerObservation concat_views(const MarkerObservation& a, const MarkerObservation& b) {
  if (a.marker_count != b.marker_count)
    throw validation_error("concat_views: marker counts differ");
  MarkerObservation out;
  out.marker_count = a.marker_count;
  out.view_count = a.view_count + b.view_count;
  out.mode = a.mode;
  out.du = a.du;
  out.du.insert(out.du.end(), b.du.begin(), b.du.end());
  out.dv = a.dv;
  out.dv.insert(out.dv.end(), b.dv.begin(), b.dv.end());
  out.visible = a.visible;
  out.visible.insert(out.visible.end(), b.visible.begin(), b.visible.end());
  return out;
}

/// Fixed-length feature vector for the learned estimator: view-major,
/// (du, dv) interleaved per marker; invisible entries contribute zeros.
inline std::vector<double> to_feature_vector(const MarkerObservation& obs) {
  std::vector<double> f(2 * obs.du.size(), 0.0);
  for (size_t i = 0; i < obs.du.size(); ++i) {
    if (!obs.visible[i]) continue;
    f[2 * i] = obs.du[i];
    f[2 * i + 1] = obs.dv[i];
  }
  return f;
}

// ---------------------------------------------------------------------------
// Graph Laplacian over the free outer-surface nodes

struct FreeLaplacian {
  CsrMatrix l;                    // |M| x |M| combinatorial Laplacian
  std::vector<double> diag_lsq;   // diag(L^2)
};

inline FreeLaplacian build_free_laplacian(const SkinMesh& mesh) {
  const int n = mesh.free_count();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  auto connect = [&](int a, int b) {
    const int fa = mesh.free_lookup[size_t(a)], fb = mesh.free_lookup[size_t(b)];
    if (fa < 0 || fb < 0 || fa == fb) return;
    adj[size_t(fa)].push_back(fb);
  };
  for (const auto& tri : mesh.outer_tris) {
    connect(tri[0], tri[1]);
    connect(tri[1], tri[0]);
    connect(tri[1], tri[2]);
    connect(tri[2], tri[1]);
    connect(tri[2], tri[0]);
    connect(tri[0], tri[2]);
  }
  FreeLaplacian out;
  TripletBuilder builder(n);
  for (int i = 0; i < n; ++i) {
    auto& nb = adj[size_t(i)];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    builder.add(i, i, static_cast<double>(nb.size()));
    for (int j : nb) builder.add(i, j, -1.0);
  }
  out.l = builder.build();
  out.diag_lsq.assign(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = out.l.row_ptr[size_t(i)]; k < out.l.row_ptr[size_t(i) + 1]; ++k)
      out.diag_lsq[size_t(i)] += out.l.val[size_t(k)] * out.l.val[size_t(k)];
  return out;
}

// ---------------------------------------------------------------------------
// Linearized observation model

/// Dense Jacobian of marker pixel coordinates with respect to free-node
/// displacements, built by central finite differences through
/// marker_world_position and project. Rows: view-major, (du, dv) per marker.
struct ObservationJacobian {
  int rows = 0, cols = 0;
  int marker_count = 0, view_count = 0;
  std::vector<double> data;  // row-major

  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
};

inline ObservationJacobian build_observation_jacobian(const SkinMesh& mesh,
                                                      const MarkerSet& markers,
                                                      std::span<const CameraModel> cameras,
                                                      double fd_step = 0.1) {
  ObservationJacobian jac;
  jac.marker_count = static_cast<int>(markers.anchors.size());
  jac.view_count = static_cast<int>(cameras.size());
  jac.rows = 2 * jac.marker_count * jac.view_count;
  jac.cols = 3 * mesh.free_count();
  jac.data.assign(static_cast<size_t>(jac.rows) * static_cast<size_t>(jac.cols), 0.0);

  std::vector<Vec3> field(mesh.nodes.size());
  for (int m = 0; m < jac.marker_count; ++m) {
    const MarkerAnchor& anchor = markers.anchors[size_t(m)];
    const auto& tri = mesh.outer_tris[size_t(anchor.triangle)];
    for (int k = 0; k < 3; ++k) {
      const int node = tri[size_t(k)];
      const int free = mesh.free_lookup[size_t(node)];
      if (free < 0) continue;  // clamped nodes carry no estimate columns
      for (int comp = 0; comp < 3; ++comp) {
        Vec3 step{};
        (comp == 0 ? step.x : comp == 1 ? step.y : step.z) = fd_step;
        field[size_t(node)] = step;
        const Vec3 plus = marker_world_position(mesh, anchor, field);
        field[size_t(node)] = -step;
        const Vec3 minus = marker_world_position(mesh, anchor, field);
        field[size_t(node)] = Vec3{};
        for (int v = 0; v < jac.view_count; ++v) {
          const auto pp = project(cameras[size_t(v)], plus);
          const auto pm = project(cameras[size_t(v)], minus);
          if (!pp || !pm)
            throw numerical_error("observation jacobian: marker behind camera during FD");
          const int row = 2 * (v * jac.marker_count + m);
          jac.at(row, 3 * free + comp) = (pp->u - pm->u) / (2.0 * fd_step);
          jac.at(row + 1, 3 * free + comp) = (pp->v - pm->v) / (2.0 * fd_step);
        }
      }
    }
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Estimators

struct DisplacementEstimate {
  std::vector<Vec3> displacement;  // over free nodes, in mesh.free_set order
  std::vector<int> node_ids;       // copy of mesh.free_set
  std::string estimator;           // "lsq" or "ridge"
  int view_count = 1;
  bool underdetermined = false;
  PcgResult solver_info;
};

struct LsqOptions {
  double rel_tol = 1e-8;
  int max_iter_factor = 10;
};

/// Regularized least squares D = argmin |J d - obs|^2 + mu |L d|^2, solved by
/// Jacobi-preconditioned CG on the normal equations. Rows belonging to
/// invisible markers are dropped.
inline DisplacementEstimate estimate_displacements_lsq(const MarkerObservation& obs,
                                                       const ObservationJacobian& jac,
                                                       const FreeLaplacian& lap, double mu,
                                                       const SkinMesh& mesh,
                                                       const LsqOptions& options = {}) {
  if (obs.marker_count != jac.marker_count || obs.view_count != jac.view_count)
    throw validation_error("estimate_displacements_lsq: observation/jacobian shape mismatch");
  if (3 * lap.l.n != jac.cols)
    throw validation_error("estimate_displacements_lsq: laplacian size mismatch");
  if (!(mu >= 0.0)) throw validation_error("estimate_displacements_lsq: mu must be >= 0");

  std::vector<int> rows;
  std::vector<double> rhs_px;
  for (int i = 0; i < obs.marker_count * obs.view_count; ++i) {
    if (!obs.visible[size_t(i)]) continue;
    rows.push_back(2 * i);
    rhs_px.push_back(obs.du[size_t(i)]);
    rows.push_back(2 * i + 1);
    rhs_px.push_back(obs.dv[size_t(i)]);
  }

  DisplacementEstimate est;
  est.estimator = "lsq";
  est.view_count = obs.view_count;
  est.node_ids = mesh.free_set;
  est.underdetermined = static_cast<int>(rows.size()) < 6;

  const int n = jac.cols;
  const int n_free = lap.l.n;
  std::vector<double> b(static_cast<size_t>(n), 0.0);
  for (size_t r = 0; r < rows.size(); ++r) {
    const double w = rhs_px[r];
    const double* jrow = jac.data.data() + static_cast<size_t>(rows[r]) * n;
    for (int c = 0; c < n; ++c) b[size_t(c)] += jrow[c] * w;
  }

  std::vector<double> tmp_rows(rows.size()), lap_in(static_cast<size_t>(n_free)),
      lap_mid(static_cast<size_t>(n_free)), lap_out(static_cast<size_t>(n_free));
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    y.assign(static_cast<size_t>(n), 0.0);
    for (size_t r = 0; r < rows.size(); ++r) {
      const double* jrow = jac.data.data() + static_cast<size_t>(rows[r]) * n;
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += jrow[c] * x[size_t(c)];
      tmp_rows[r] = s;
    }
    for (size_t r = 0; r < rows.size(); ++r) {
      const double* jrow = jac.data.data() + static_cast<size_t>(rows[r]) * n;
      const double s = tmp_rows[r];
      for (int c = 0; c < n; ++c) y[size_t(c)] += jrow[c] * s;
    }
    if (mu > 0.0) {
      for (int comp = 0; comp < 3; ++comp) {
        for (int i = 0; i < n_free; ++i) lap_in[size_t(i)] = x[size_t(3 * i + comp)];
        lap.l.apply(lap_in, lap_mid);
        lap.l.apply(lap_mid, lap_out);
        for (int i = 0; i < n_free; ++i) y[size_t(3 * i + comp)] += mu * lap_out[size_t(i)];
      }
    }
  };

  std::vector<double> diag(static_cast<size_t>(n), 0.0);
  for (int r : rows) {
    const double* jrow = jac.data.data() + static_cast<size_t>(r) * n;
    for (int c = 0; c < n; ++c) diag[size_t(c)] += jrow[c] * jrow[c];
  }
  if (mu > 0.0)
    for (int i = 0; i < n_free; ++i)
      for (int comp = 0; comp < 3; ++comp) diag[size_t(3 * i + comp)] += mu * lap.diag_lsq[size_t(i)];

  std::vector<double> x;
  est.solver_info = pcg_solve(apply, b, diag, x, options.rel_tol,
                              options.max_iter_factor * n);
  if (!est.solver_info.converged)
    throw numerical_error("estimate_displacements_lsq: CG did not converge (rel residual " +
                          std::to_string(est.solver_info.rel_residual) + ")");

  est.displacement.resize(static_cast<size_t>(n_free));
  for (int i = 0; i < n_free; ++i)
    est.displacement[size_t(i)] = {x[size_t(3 * i)], x[size_t(3 * i + 1)], x[size_t(3 * i + 2)]};
  return est;
}

// ---------------------------------------------------------------------------
// Contact depth (maximum displacement norm over the free set)

struct ContactDepth {
  double depth = 0.0;   // mm
  int node = -1;        // mesh node id of the arg-max
  int free_index = -1;  // position within the free set
};

namespace detail {

inline ContactDepth max_norm_contact(std::span<const Vec3> d, std::span<const int> node_ids) {
  ContactDepth out;
  if (d.empty()) return out;
  double best_sq = d[0].norm2();
  size_t best = 0;
  for (size_t i = 1; i < d.size(); ++i) {
    const double sq = d[i].norm2();
    if (sq > best_sq) {  // ties keep the lowest index
      best_sq = sq;
      best = i;
    }
  }
  out.depth = std::sqrt(best_sq);
  out.free_index = static_cast<int>(best);
  out.node = node_ids.empty() ? static_cast<int>(best) : node_ids[best];
  return out;
}

}  // namespace detail

inline ContactDepth contact_depth(const DisplacementEstimate& est) {
  if (est.displacement.empty()) throw validation_error("contact_depth: empty estimate");
  return detail::max_norm_contact(est.displacement, est.node_ids);
}

/// Ground-truth contact depth of a solved field, over the mesh's free set.
inline ContactDepth contact_depth(const SkinMesh& mesh, const GroundTruthField& field) {
  std::vector<Vec3> d(mesh.free_set.size());
  for (size_t i = 0; i < mesh.free_set.size(); ++i)
    d[i] = field.displacement[size_t(mesh.free_set[i])];
  return detail::max_norm_contact(d, mesh.free_set);
}

// ---------------------------------------------------------------------------
// Learned estimator: closed-form ridge regression on marker features

struct LinearRegressor {
  int feature_dim = 0;
  int output_dim = 0;
  double lambda = 0.0;
  std::vector<double> weights;  // row-major, output_dim x feature_dim

  std::vector<double> predict(const std::vector<double>& features) const {
    if (static_cast<int>(features.size()) != feature_dim)
      throw validation_error("regressor: feature dimension mismatch");
    std::vector<double> out(static_cast<size_t>(output_dim), 0.0);
    for (int r = 0; r < output_dim; ++r) {
      const double* w = weights.data() + static_cast<size_t>(r) * feature_dim;
      double s = 0.0;
      for (int c = 0; c < feature_dim; ++c) s += w[c] * features[size_t(c)];
      out[size_t(r)] = s;
    }
    return out;
  }

  DisplacementEstimate predict_displacements(const std::vector<double>& features,
                                             const SkinMesh& mesh, int view_count) const {
    const auto flat = predict(features);
    if (static_cast<int>(flat.size()) != 3 * mesh.free_count())
      throw validation_error("regressor: output dimension does not match mesh free set");
    DisplacementEstimate est;
    est.estimator = "ridge";
    est.view_count = view_count;
    est.node_ids = mesh.free_set;
    est.displacement.resize(mesh.free_set.size());
    for (size_t i = 0; i < est.displacement.size(); ++i)
      est.displacement[i] = {flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
    return est;
  }
};

struct TrainingSample {
  std::vector<double> features;
  std::vector<double> target;  // flattened free-node displacements
};

struct TrainReport {
  int train_count = 0;
  int holdout_count = 0;
  double holdout_field_rmse = 0.0;  // mm, per displacement component
  double holdout_depth_mae = 0.0;   // mm, on the max-norm contact depth
};

/// Closed-form ridge fit on a deterministic 80/20 split (every fifth record
/// held out). The Gram matrix is sample-count normalized, so duplicating the
/// dataset leaves the fit unchanged.
inline LinearRegressor train_linear_regressor(const std::vector<TrainingSample>& dataset,
                                              double lambda, TrainReport* report = nullptr) {
  if (dataset.size() < 2) throw validation_error("train: need at least 2 samples");
  if (!(lambda >= 0.0)) throw validation_error("train: lambda must be >= 0");
  const int p = static_cast<int>(dataset[0].features.size());
  const int q = static_cast<int>(dataset[0].target.size());
  for (const auto& s : dataset)
    if (static_cast<int>(s.features.size()) != p || static_cast<int>(s.target.size()) != q)
      throw validation_error("train: inconsistent sample dimensions");

  std::vector<int> train_idx, holdout_idx;
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i)
    (i % 5 == 4 ? holdout_idx : train_idx).push_back(i);
  if (train_idx.empty()) train_idx.swap(holdout_idx);

  const double inv_n = 1.0 / static_cast<double>(train_idx.size());
  DenseMatrix gram(p, p);
  std::vector<double> xty(static_cast<size_t>(p) * static_cast<size_t>(q), 0.0);
  for (int i : train_idx) {
    const auto& f = dataset[size_t(i)].features;
    const auto& t = dataset[size_t(i)].target;
    for (int a = 0; a < p; ++a) {
      if (f[size_t(a)] == 0.0) continue;
      for (int b = 0; b < p; ++b) gram.at(a, b) += f[size_t(a)] * f[size_t(b)];
      double* row = xty.data() + static_cast<size_t>(a) * q;
      for (int c = 0; c < q; ++c) row[c] += f[size_t(a)] * t[size_t(c)];
    }
  }
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) gram.at(a, b) *= inv_n;
    gram.at(a, a) += lambda;
  }

  try {
    cholesky_factor(gram);
  } catch (const numerical_error&) {
    throw numerical_error("train: singular system (rank-deficient features with lambda = 0)");
  }

  LinearRegressor reg;
  reg.feature_dim = p;
  reg.output_dim = q;
  reg.lambda = lambda;
  reg.weights.assign(static_cast<size_t>(q) * static_cast<size_t>(p), 0.0);
  std::vector<double> col(static_cast<size_t>(p));
  for (int c = 0; c < q; ++c) {
    for (int a = 0; a < p; ++a) col[size_t(a)] = xty[static_cast<size_t>(a) * q + c] * inv_n;
    cholesky_solve_inplace(gram, col);
    for (int a = 0; a < p; ++a) reg.weights[static_cast<size_t>(c) * p + a] = col[size_t(a)];
  }

  if (report) {
    report->train_count = static_cast<int>(train_idx.size());
    report->holdout_count = static_cast<int>(holdout_idx.size());
    double se = 0.0, depth_err = 0.0;
    long count = 0;
    for (int i : holdout_idx) {
      const auto pred = reg.predict(dataset[size_t(i)].features);
      const auto& t = dataset[size_t(i)].target;
      double best_pred = 0.0, best_true = 0.0;
      for (int k = 0; k + 2 < q; k += 3) {
        const double dp = pred[size_t(k)] * pred[size_t(k)] + pred[size_t(k) + 1] * pred[size_t(k) + 1] +
                          pred[size_t(k) + 2] * pred[size_t(k) + 2];
        const double dt = t[size_t(k)] * t[size_t(k)] + t[size_t(k) + 1] * t[size_t(k) + 1] +
                          t[size_t(k) + 2] * t[size_t(k) + 2];
        best_pred = std::max(best_pred, dp);
        best_true = std::max(best_true, dt);
      }
      depth_err += std::abs(std::sqrt(best_pred) - std::sqrt(best_true));
      for (int k = 0; k < q; ++k) {
        const double e = pred[size_t(k)] - t[size_t(k)];
        se += e * e;
        ++count;
      }
    }
    report->holdout_field_rmse = holdout_idx.empty() ? 0.0 : std::sqrt(se / double(count));
    report->holdout_depth_mae = holdout_idx.empty() ? 0.0 : depth_err / double(holdout_idx.size());
  }
  return reg;
}

// ---------------------------------------------------------------------------
// Regressor serialization: feature dim and output dim as little-endian u32,
// lambda as little-endian f64, then row-major little-endian f64 weights.

inline std::string save_regressor(const LinearRegressor& reg) {
  std::string out;
  auto put_u32 = [&](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  };
  auto put_f64 = [&](double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
  };
  put_u32(static_cast<std::uint32_t>(reg.feature_dim));
  put_u32(static_cast<std::uint32_t>(reg.output_dim));
  put_f64(reg.lambda);
  for (double w : reg.weights) put_f64(w);
  return out;
}

inline LinearRegressor load_regressor(const std::string& data) {
  if (data.size() < 16) throw validation_error("regressor: truncated header");
  auto get_u32 = [&](size_t pos) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + size_t(k)])) << (8 * k);
    return v;
  };
  auto get_f64 = [&](size_t pos) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + size_t(k)])) << (8 * k);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  };
  LinearRegressor reg;
  reg.feature_dim = static_cast<int>(get_u32(0));
  reg.output_dim = static_cast<int>(get_u32(4));
  reg.lambda = get_f64(8);
  const size_t count = static_cast<size_t>(reg.feature_dim) * static_cast<size_t>(reg.output_dim);
  if (data.size() != 16 + 8 * count) throw validation_error("regressor: size mismatch");
  reg.weights.resize(count);
  for (size_t i = 0; i < count; ++i) reg.weights[i] = get_f64(16 + 8 * i);
  return reg;
}

}  // namespace protac
