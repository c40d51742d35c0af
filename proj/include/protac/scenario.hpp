#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protac/camera.hpp"
#include "protac/config.hpp"
#include "protac/fem.hpp"
#include "protac/mesh.hpp"
#include "protac/modes.hpp"
#include "protac/parallel.hpp"
#include "protac/proximity.hpp"
#include "protac/render.hpp"
#include "protac/rng.hpp"
#include "protac/scene.hpp"
#include "protac/tactile.hpp"

namespace protac {

/// Files produced by one scenario run, keyed by relative path. Runs are
/// deterministic: the same config and seed reproduce every byte.
using ScenarioOutput = std::map<std::string, std::string>;

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Everything the runners share, assembled once from a config.
struct SimContext {
  ScenarioConfig cfg;
  SkinMesh mesh;
  MarkerSet markers;
  std::array<CameraModel, 2> cameras;
  MaterialParams material;

  explicit SimContext(const ScenarioConfig& config) : cfg(config) {
    CylinderParams mp;
    mp.radius = cfg.mesh_radius;
    mp.length = cfg.mesh_length;
    mp.element_size = cfg.mesh_element_size;
    mp.fixed_ring_width = cfg.mesh_fixed_ring_width;
    mp.thickness = cfg.mesh_thickness;
    mesh = build_cylinder_mesh(mp);
    markers = place_markers(mesh, cfg.marker_rings, cfg.markers_per_ring, cfg.marker_diameter,
                            cfg.marker_margin);
    CameraModel intr;
    intr.fx = cfg.fx;
    intr.fy = cfg.fy;
    intr.cx = cfg.cx;
    intr.cy = cfg.cy;
    if (cfg.k1 != 0.0) intr.distortion = {cfg.k1};
    cameras = make_camera_pair(cfg.mesh_length, intr);
    material.youngs_modulus = cfg.youngs_modulus;
    material.poisson_ratio = cfg.poisson_ratio;
  }

  DetectionMode detection_mode() const {
    return cfg.detection == "pure" ? DetectionMode::kRawWindow : DetectionMode::kReferenceDiff;
  }
};

namespace detail {

inline std::uint64_t sample_stream(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  std::uint64_t h = 0x100001b3ULL;
  for (std::uint64_t v : {a, b, c}) {
    h ^= v + 0x9e3779b97f4a7c15ULL;
    splitmix64(h);
  }
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tactile side: shared estimation harness

/// Per-camera reference images and trackers plus the linearized model.
struct TactileRig {
  std::array<TactileImage, 2> reference;
  std::vector<MarkerTracker> trackers;  // one per camera
  ObservationJacobian jac_dual;
  ObservationJacobian jac_single;
  FreeLaplacian laplacian;

  TactileRig(const SimContext& ctx) {
    const std::vector<Vec3> rest(ctx.mesh.nodes.size());
    for (int c = 0; c < 2; ++c)
      reference[size_t(c)] =
          render_tactile_image(ctx.cameras[size_t(c)], ctx.mesh, ctx.markers, rest, c);
    trackers.reserve(2);
    for (int c = 0; c < 2; ++c)
      trackers.emplace_back(ctx.cameras[size_t(c)], ctx.mesh, ctx.markers,
                            reference[size_t(c)].image, ctx.detection_mode());
    jac_dual = build_observation_jacobian(ctx.mesh, ctx.markers,
                                          std::span<const CameraModel>(ctx.cameras.data(), 2));
    jac_single = build_observation_jacobian(ctx.mesh, ctx.markers,
                                            std::span<const CameraModel>(ctx.cameras.data(), 1));
    laplacian = build_free_laplacian(ctx.mesh);
  }

  /// Renders and tracks one displacement field; returns per-camera views.
  std::array<MarkerObservation, 2> observe(const SimContext& ctx,
                                           std::span<const Vec3> field) const {
    std::array<MarkerObservation, 2> obs;
    for (int c = 0; c < 2; ++c) {
      const auto img =
          render_tactile_image(ctx.cameras[size_t(c)], ctx.mesh, ctx.markers, field, c);
      obs[size_t(c)] = trackers[size_t(c)].track(img.image);
    }
    return obs;
  }

  DisplacementEstimate estimate(const SimContext& ctx, const std::array<MarkerObservation, 2>& obs,
                                bool dual) const {
    if (dual)
      return estimate_displacements_lsq(concat_views(obs[0], obs[1]), jac_dual, laplacian,
                                        ctx.cfg.tactile_mu, ctx.mesh);
    return estimate_displacements_lsq(obs[0], jac_single, laplacian, ctx.cfg.tactile_mu, ctx.mesh);
  }
};

// ---------------------------------------------------------------------------
// Indentation sweep

inline ScenarioOutput run_indentation_sweep(const ScenarioConfig& cfg) {
  const SimContext ctx(cfg);
  const TactileRig rig(ctx);
  const CsrMatrix stiffness = assemble_stiffness(ctx.mesh, ctx.material);
  const std::vector<int> locations = default_contact_nodes(ctx.mesh, cfg.tactile_locations);

  std::vector<std::string> views;
  if (cfg.views == "single" || cfg.views == "both") views.push_back("single");
  if (cfg.views == "dual" || cfg.views == "both") views.push_back("dual");
  std::vector<std::string> estimators;
  if (cfg.estimators == "lsq" || cfg.estimators == "both") estimators.push_back("lsq");
  if (cfg.estimators == "ridge" || cfg.estimators == "both") estimators.push_back("ridge");

  // The learned estimator trains on the [dataset] grid, one model per view.
  std::map<std::string, LinearRegressor> ridge;
  if (std::find(estimators.begin(), estimators.end(), "ridge") != estimators.end()) {
    const ContactGrid grid{default_contact_nodes(ctx.mesh, cfg.dataset_locations),
                           cfg.dataset_depths};
    const auto records = generate_dataset(ctx.mesh, ctx.material, grid);
    for (const std::string& view : views) {
      std::vector<TrainingSample> samples(records.size());
      parallel_for(static_cast<int>(records.size()), [&](int i) {
        const auto obs = rig.observe(ctx, records[size_t(i)].field.span());
        const MarkerObservation merged =
            view == "dual" ? concat_views(obs[0], obs[1]) : obs[0];
        samples[size_t(i)].features = to_feature_vector(merged);
        auto& target = samples[size_t(i)].target;
        target.resize(3 * ctx.mesh.free_set.size());
        for (size_t f = 0; f < ctx.mesh.free_set.size(); ++f) {
          const Vec3& d = records[size_t(i)].field.displacement[size_t(ctx.mesh.free_set[f])];
          target[3 * f] = d.x;
          target[3 * f + 1] = d.y;
          target[3 * f + 2] = d.z;
        }
      });
      ridge.emplace(view, train_linear_regressor(samples, cfg.ridge_lambda));
    }
  }

  struct Row {
    int sample_id;
    std::string estimator, view;
    double d_true, d_hat;
    int argmax_node;
  };
  const int n_samples = static_cast<int>(locations.size() * cfg.tactile_depths.size());
  std::vector<std::vector<Row>> per_sample(static_cast<size_t>(n_samples));
  parallel_for(n_samples, [&](int s) {
    const int loc = s / static_cast<int>(cfg.tactile_depths.size());
    const double depth = cfg.tactile_depths[size_t(s) % cfg.tactile_depths.size()];
    const auto field = solve_indentation(
        ctx.mesh, stiffness, make_node_indentor(ctx.mesh, locations[size_t(loc)], depth));
    const double d_true = contact_depth(ctx.mesh, field).depth;
    const auto obs = rig.observe(ctx, field.span());
    for (const std::string& est_name : estimators) {
      for (const std::string& view : views) {
        DisplacementEstimate est;
        if (est_name == "lsq") {
          est = rig.estimate(ctx, obs, view == "dual");
        } else {
          const MarkerObservation merged =
              view == "dual" ? concat_views(obs[0], obs[1]) : obs[0];
          est = ridge.at(view).predict_displacements(to_feature_vector(merged), ctx.mesh,
                                                     view == "dual" ? 2 : 1);
        }
        const ContactDepth dc = contact_depth(est);
        per_sample[size_t(s)].push_back({s, est_name, view, d_true, dc.depth, dc.node});
      }
    }
  });

  // Full-scale error reference is the 5 mm measurement range.
  const double full_scale = 5.0;
  std::string csv = "sample_id,estimator,view,d_true_mm,d_hat_mm,abs_err_mm,fs_err_pct,argmax_node\n";
  std::map<std::string, std::pair<double, int>> group_err;  // estimator|view|depth -> (sum, n)
  for (const auto& rows : per_sample)
    for (const Row& r : rows) {
      const double abs_err = std::abs(r.d_hat - r.d_true);
      csv += std::to_string(r.sample_id) + "," + r.estimator + "," + r.view + "," +
             csv_num(r.d_true) + "," + csv_num(r.d_hat) + "," + csv_num(abs_err) + "," +
             csv_num(100.0 * abs_err / full_scale) + "," + std::to_string(r.argmax_node) + "\n";
      auto& acc = group_err[r.estimator + "," + r.view + "," + csv_num(r.d_true)];
      acc.first += abs_err;
      acc.second += 1;
    }
  for (const auto& [key, acc] : group_err) {
    const double mae = acc.first / acc.second;
    csv += "# summary," + key + ",mae_mm=" + csv_num(mae) +
           ",fs_pct=" + csv_num(100.0 * mae / full_scale) + ",n=" + std::to_string(acc.second) + "\n";
  }

  ScenarioOutput out{{"indent.csv", csv}};
  for (int c = 0; c < 2; ++c)
    out["reference_cam" + std::to_string(c) + ".pgm"] = write_pgm(rig.reference[size_t(c)].image);
  return out;
}

// ---------------------------------------------------------------------------
// Distance sweep

inline ObstacleScene make_sweep_scene(const ScenarioConfig& cfg, double clearance) {
  ObstacleScene scene;
  const double r_s = cfg.mesh_radius;
  if (cfg.obstacle == "sphere") {
    scene.add(SphereSpec{{r_s + clearance + cfg.obstacle_radius, 0.0, cfg.obstacle_z},
                         cfg.obstacle_radius},
              1);
  } else if (cfg.obstacle == "capsule") {
    const double x = r_s + clearance + cfg.obstacle_radius;
    scene.add(CapsuleSpec{{x, 0.0, cfg.obstacle_z - 40.0}, {x, 0.0, cfg.obstacle_z + 40.0},
                          cfg.obstacle_radius},
              1);
  } else {
    BoxSpec box;
    box.half_extents = {cfg.obstacle_radius, cfg.obstacle_radius, cfg.obstacle_radius};
    box.center = {r_s + clearance + cfg.obstacle_radius, 0.0, cfg.obstacle_z};
    scene.add(box, 1);
  }
  if (cfg.background) {
    BoxSpec wall;
    wall.center = {400.0, 0.0, 60.0};
    wall.half_extents = {20.0, 500.0, 500.0};
    scene.add(wall, 2);
  }
  return scene;
}

/// One corrupted observation: the affine miscalibration plus a per-sample
/// depth offset (shared by both cameras) and per-pixel noise.
inline std::array<DepthMap, 2> observe_depth(const ScenarioConfig& cfg,
                                             const std::array<DepthMap, 2>& clean,
                                             std::uint64_t stream) {
  Rng rng(cfg.seed, stream);
  const double offset =
      cfg.image_noise_sigma > 0.0 ? cfg.image_noise_sigma * rng.gaussian() : 0.0;
  std::array<DepthMap, 2> out;
  for (int c = 0; c < 2; ++c)
    out[size_t(c)] = corrupt_depth(clean[size_t(c)], cfg.noise_sigma, cfg.miscal_scale,
                                   cfg.miscal_shift + offset,
                                   detail::sample_stream(cfg.seed, stream, size_t(c) + 1));
  return out;
}

/// Runs the masked back-projection pipeline on one camera's depth map.
/// Degenerate thresholding (a single-valued intensity image) is mapped to
/// "no obstacle detected" rather than guessing a mask.
inline ProximityEstimate proximity_pipeline(const CameraModel& camera, const DepthMap& depth,
                                            double skin_radius, int view) {
  if (depth.valid_count() == 0) return ProximityEstimate{.view = view};
  const Image8 intensity = depth_to_intensity(depth);
  const ObstacleMask mask = otsu_threshold(intensity);
  if (mask.degenerate) return ProximityEstimate{.view = view};
  ObstaclePointCloud cloud = masked_obstacle_points(camera, depth, mask);
  normal_distances(cloud, skin_radius);
  return closest_distance(cloud, view);
}

inline ScenarioOutput run_distance_sweep(const ScenarioConfig& cfg) {
  const SimContext ctx(cfg);
  const int n_dist = static_cast<int>(cfg.distances.size());

  // Clean ground-truth renders, one per (distance, camera).
  std::vector<std::array<DepthMap, 2>> clean(static_cast<size_t>(n_dist));
  parallel_for(n_dist, [&](int d) {
    const ObstacleScene scene = make_sweep_scene(cfg, cfg.distances[size_t(d)]);
    validate_scene(scene, cfg.mesh_radius);
    for (int c = 0; c < 2; ++c)
      clean[size_t(d)][size_t(c)] = render_depth_map(ctx.cameras[size_t(c)], scene);
  });

  // Affine depth calibration: a small ball placed at known axial positions
  // (the scenario's configured ground truth) spanning the sensing range,
  // centred on the sweep obstacle's axial depth, gives (mean masked raw
  // depth, configured axial distance) pairs for the least-squares fit.
  double cal_scale = 1.0, cal_shift = 0.0;
  if (cfg.calibrate) {
    const double ball_radius = 8.0;
    std::vector<double> raw, truth;
    for (int zi = 0; zi < 15; ++zi) {
      const double z = cfg.obstacle_z - 60.0 + 10.0 * zi;
      ObstacleScene scene;
      scene.add(SphereSpec{{cfg.mesh_radius + 50.0 + ball_radius, 0.0, z}, ball_radius}, 1);
      const DepthMap clean_map = render_depth_map(ctx.cameras[0], scene);
      if (clean_map.valid_count() == 0) continue;
      for (int rep = 0; rep < cfg.calibration_repetitions; ++rep) {
        const DepthMap corrupted =
            corrupt_depth(clean_map, cfg.noise_sigma, cfg.miscal_scale,
                          cfg.miscal_shift + (cfg.image_noise_sigma > 0.0
                                                  ? cfg.image_noise_sigma *
                                                        Rng(cfg.seed, detail::sample_stream(
                                                                          0xca1, zi, rep))
                                                            .gaussian()
                                                  : 0.0),
                          detail::sample_stream(0xca2, zi, rep));
        const ObstacleMask mask = otsu_threshold(depth_to_intensity(corrupted));
        double sum_raw = 0.0;
        int count = 0;
        for (int y = 0; y < corrupted.height; ++y)
          for (int x = 0; x < corrupted.width; ++x) {
            if (!mask.at(x, y) || !corrupted.valid(x, y)) continue;
            sum_raw += corrupted.at(x, y);
            ++count;
          }
        if (count > 0) {
          raw.push_back(sum_raw / count);
          truth.push_back(z);
        }
      }
    }
    const auto [s, t] = calibrate_depth_affine(raw, truth);
    cal_scale = s;
    cal_shift = t;
  }

  struct Row {
    int sample_id;
    double n_true;
    ProximityEstimate est;
  };
  const int total = n_dist * cfg.repetitions;
  std::vector<Row> rows(static_cast<size_t>(total));
  parallel_for(total, [&](int s) {
    const int d = s / cfg.repetitions;
    const int rep = s % cfg.repetitions;
    const auto maps = observe_depth(cfg, clean[size_t(d)], detail::sample_stream(0x5a3, d, rep));
    ProximityEstimate fused;
    for (int c = 0; c < 2; ++c) {
      const DepthMap calibrated =
          apply_depth_calibration(maps[size_t(c)], cal_scale, cal_shift);
      const ProximityEstimate est =
          proximity_pipeline(ctx.cameras[size_t(c)], calibrated, cfg.mesh_radius, c);
      fused = fuse_views(fused, est);
    }
    fused = annotate_confidence(fused, cfg.reliable_min, cfg.reliable_max);
    rows[size_t(s)] = {s, cfg.distances[size_t(d)], fused};
  });

  std::string csv = "sample_id,n_true_mm,n_hat_mm,view,argmin_u,argmin_v,valid\n";
  for (const Row& r : rows) {
    csv += std::to_string(r.sample_id) + "," + csv_num(r.n_true) + "," +
           (r.est.valid ? csv_num(r.est.distance) : "nan") + "," + std::to_string(r.est.view) +
           "," + std::to_string(r.est.argmin_u) + "," + std::to_string(r.est.argmin_v) + "," +
           (r.est.valid ? "1" : "0") + "\n";
  }
  double reliable_se = 0.0;
  int reliable_n = 0;
  for (int d = 0; d < n_dist; ++d) {
    double sum = 0.0, se = 0.0;
    int n = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const Row& r = rows[size_t(d * cfg.repetitions + rep)];
      if (!r.est.valid) continue;
      sum += r.est.distance;
      se += (r.est.distance - r.n_true) * (r.est.distance - r.n_true);
      ++n;
    }
    const double n_true = cfg.distances[size_t(d)];
    csv += "# summary,distance=" + csv_num(n_true) + ",mean=" + csv_num(n ? sum / n : 0.0) +
           ",rmse=" + csv_num(n ? std::sqrt(se / n) : 0.0) + ",n=" + std::to_string(n) + "\n";
    if (n_true >= cfg.reliable_min && n_true <= cfg.reliable_max) {
      reliable_se += se;
      reliable_n += n;
    }
  }
  csv += "# summary,reliable_range=[" + csv_num(cfg.reliable_min) + "," +
         csv_num(cfg.reliable_max) + "],rmse=" +
         csv_num(reliable_n ? std::sqrt(reliable_se / reliable_n) : 0.0) +
         ",n=" + std::to_string(reliable_n) + "\n";

  ScenarioOutput out{{"distance.csv", csv}};
  if (!clean.empty() && clean[0][0].valid_count() > 0) {
    out["sample_depth_cam0.ptdm"] = write_ptdm(clean[0][0]);
    out["sample_intensity_cam0.pgm"] = write_pgm(depth_to_intensity(clean[0][0]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mode cycle

inline ScenarioOutput run_mode_cycle(const ScenarioConfig& cfg) {
  const SimContext ctx(cfg);
  const TactileRig rig(ctx);
  const CsrMatrix stiffness = assemble_stiffness(ctx.mesh, ctx.material);

  ModeState state;
  state.transition_duration = cfg.transition_duration;
  bool proximity_requested = false, tactile_requested = false;

  std::map<double, GroundTruthField> field_cache;
  std::string csv =
      "t_sim_s,event,state,tactile_valid,proximity_valid,n_hat_mm,d_hat_mm,contact_imminent\n";

  const int steps = static_cast<int>(std::ceil(cfg.cycle_end_t / cfg.cycle_dt));
  std::vector<ModeEvent> events;
  int switches = 0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * cfg.cycle_dt;
    if (!proximity_requested && t + 1e-12 >= cfg.proximity_request_t) {
      state = request_mode(state, SensingMode::kProximity);
      proximity_requested = true;
      ++switches;
    }
    if (!tactile_requested && t + 1e-12 >= cfg.tactile_request_t) {
      state = request_mode(state, SensingMode::kTactile);
      tactile_requested = true;
      ++switches;
    }

    // The obstacle approaches radially and stops once fully indented.
    const double clearance =
        std::max(cfg.start_distance - cfg.approach_speed * t, -cfg.cycle_max_depth);
    const StreamValidity valid = stream_validity(state);
    std::string n_hat = "nan", d_hat = "nan", imminent = "0";
    if (valid.proximity_valid) {
      ObstacleScene scene = make_sweep_scene(cfg, clearance);
      ProximityEstimate fused;
      for (int c = 0; c < 2; ++c) {
        const DepthMap depth = render_depth_map(ctx.cameras[size_t(c)], scene);
        fused = fuse_views(fused, proximity_pipeline(ctx.cameras[size_t(c)], depth,
                                                     cfg.mesh_radius, c));
      }
      if (fused.valid) {
        n_hat = csv_num(fused.distance);
        imminent = fused.contact_imminent() ? "1" : "0";
      }
    }
    if (valid.tactile_valid) {
      const double depth = std::clamp(-clearance, 0.0, cfg.cycle_max_depth);
      if (depth > 0.0) {
        auto it = field_cache.find(depth);
        if (it == field_cache.end()) {
          const auto ind = make_radial_indentor(ctx.mesh, 0.0, cfg.obstacle_z, depth,
                                                cfg.obstacle_radius);
          it = field_cache.emplace(depth, solve_indentation(ctx.mesh, stiffness, ind)).first;
        }
        const auto obs = rig.observe(ctx, it->second.span());
        d_hat = csv_num(contact_depth(rig.estimate(ctx, obs, true)).depth);
      } else {
        d_hat = csv_num(0.0);
      }
    }
    std::string event;
    for (const ModeEvent& e : events) {
      if (!event.empty()) event += ";";
      event += std::string("entered_") + to_string(e.entered);
    }
    csv += csv_num(t) + "," + event + "," + to_string(state.state) + "," +
           (valid.tactile_valid ? "1" : "0") + "," + (valid.proximity_valid ? "1" : "0") + "," +
           n_hat + "," + d_hat + "," + imminent + "\n";

    events.clear();
    state = tick(state, cfg.cycle_dt, events);
  }
  csv += "# summary,switch_requests=" + std::to_string(switches) +
         ",transition_s=" + csv_num(cfg.transition_duration) + "\n";
  return {{"cycle.csv", csv}};
}

// ---------------------------------------------------------------------------
// Dataset generation and training

inline ScenarioOutput run_dataset_gen(const ScenarioConfig& cfg) {
  const SimContext ctx(cfg);
  ContactGrid grid;
  if (cfg.dataset_full_grid) {
    // 441 locations x 25 depths, the full-scale factorization.
    grid.location_nodes = default_contact_nodes(ctx.mesh, 441);
    for (int i = 1; i <= 25; ++i) grid.depths.push_back(5.0 * i / 25.0);
  } else {
    grid.location_nodes = default_contact_nodes(ctx.mesh, cfg.dataset_locations);
    grid.depths = cfg.dataset_depths;
  }
  const auto records = generate_dataset(ctx.mesh, ctx.material, grid);

  ScenarioOutput out;
  std::string manifest;
  for (size_t i = 0; i < records.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "records/record_%05zu.txt", i);
    out[name] = write_dataset_record(records[i]);
    manifest += std::string(name) + "\n";
  }
  out["records/manifest.txt"] = manifest;
  return out;
}

inline ScenarioOutput run_train(const ScenarioConfig& cfg) {
  const SimContext ctx(cfg);
  const TactileRig rig(ctx);
  const ContactGrid grid{default_contact_nodes(ctx.mesh, cfg.dataset_locations),
                         cfg.dataset_depths};
  const auto records = generate_dataset(ctx.mesh, ctx.material, grid);

  const bool dual = cfg.views != "single";
  std::vector<TrainingSample> samples(records.size());
  parallel_for(static_cast<int>(records.size()), [&](int i) {
    const auto obs = rig.observe(ctx, records[size_t(i)].field.span());
    samples[size_t(i)].features = to_feature_vector(dual ? concat_views(obs[0], obs[1]) : obs[0]);
    auto& target = samples[size_t(i)].target;
    target.resize(3 * ctx.mesh.free_set.size());
    for (size_t f = 0; f < ctx.mesh.free_set.size(); ++f) {
      const Vec3& d = records[size_t(i)].field.displacement[size_t(ctx.mesh.free_set[f])];
      target[3 * f] = d.x;
      target[3 * f + 1] = d.y;
      target[3 * f + 2] = d.z;
    }
  });
  TrainReport report;
  const LinearRegressor reg = train_linear_regressor(samples, cfg.ridge_lambda, &report);

  std::string report_csv = "estimator,view,lambda,train_count,holdout_count,holdout_field_rmse_mm,holdout_depth_mae_mm\n";
  report_csv += std::string("ridge,") + (dual ? "dual" : "single") + "," + csv_num(cfg.ridge_lambda) +
                "," + std::to_string(report.train_count) + "," + std::to_string(report.holdout_count) +
                "," + csv_num(report.holdout_field_rmse) + "," + csv_num(report.holdout_depth_mae) + "\n";
  return {{"regressor.bin", save_regressor(reg)}, {"train_report.csv", report_csv}};
}

inline ScenarioOutput run_mesh_export(const ScenarioConfig& cfg) {
  const SimContext ctx(cfg);
  return {{"mesh.txt", export_mesh_text(ctx.mesh)},
          {"camera.txt", dump_camera_file(ctx.cameras[0])}};
}

/// Dispatch on the configured scenario kind.
inline ScenarioOutput run_scenario(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case ScenarioKind::kIndentationSweep: return run_indentation_sweep(cfg);
    case ScenarioKind::kDistanceSweep: return run_distance_sweep(cfg);
    case ScenarioKind::kModeCycle: return run_mode_cycle(cfg);
    case ScenarioKind::kDatasetGen: return run_dataset_gen(cfg);
  }
  throw validation_error("unknown scenario");
}

}  // namespace protac
