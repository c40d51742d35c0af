#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "protac/error.hpp"

namespace protac {

enum class ScenarioKind { kIndentationSweep, kDistanceSweep, kModeCycle, kDatasetGen };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kIndentationSweep: return "indentation_sweep";
    case ScenarioKind::kDistanceSweep: return "distance_sweep";
    case ScenarioKind::kModeCycle: return "mode_cycle";
    case ScenarioKind::kDatasetGen: return "dataset_gen";
  }
  return "?";
}

/// Scenario configuration, loaded from a flat key=value file with [section]
/// headers. Unknown keys are rejected; unset keys take the defaults below.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::kIndentationSweep;
  std::uint64_t seed = 42;

  // [mesh]
  double mesh_radius = 40.0;
  double mesh_length = 300.0;
  double mesh_element_size = 10.0;
  double mesh_fixed_ring_width = 15.0;
  double mesh_thickness = 5.0;

  // [material]
  double youngs_modulus = 0.22;
  double poisson_ratio = 0.49;

  // [camera]
  double fx = 220.0, fy = 220.0, cx = 320.0, cy = 240.0;
  double k1 = 0.0;

  // [markers]
  int marker_rings = 12;
  int markers_per_ring = 16;
  double marker_diameter = 3.0;
  double marker_margin = 40.0;

  // [tactile]
  std::vector<double> tactile_depths{1.0, 2.5, 4.0, 5.0};
  int tactile_locations = 49;
  double tactile_mu = 1e-2;
  double ridge_lambda = 1e-6;
  std::string estimators = "lsq";      // lsq | ridge | both
  std::string views = "dual";          // single | dual | both
  std::string detection = "normalized";  // normalized | pure

  // [dataset]
  std::vector<double> dataset_depths{1.0, 2.0, 3.0, 4.0, 5.0};
  int dataset_locations = 49;
  bool dataset_full_grid = false;

  // [proximity]
  std::vector<double> distances{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  int repetitions = 150;
  std::string obstacle = "sphere";  // sphere | capsule | box
  double obstacle_radius = 30.0;
  double obstacle_z = 100.0;
  bool background = true;
  double noise_sigma = 0.0;        // per-pixel depth noise, mm
  double image_noise_sigma = 0.0;  // per-sample depth offset noise, mm
  double miscal_scale = 1.0;
  double miscal_shift = 0.0;
  bool calibrate = false;
  int calibration_repetitions = 25;
  double reliable_min = 20.0;
  double reliable_max = 100.0;

  // [cycle]
  double cycle_dt = 0.05;
  double approach_speed = 50.0;
  double start_distance = 100.0;
  double cycle_max_depth = 5.0;
  double proximity_request_t = 0.0;
  double tactile_request_t = 2.1;
  double cycle_end_t = 3.2;

  // [modes]
  double transition_duration = 0.3;

  /// Shrinks grids for fast smoke runs.
  void apply_quick_profile() {
    repetitions = std::min(repetitions, 10);
    calibration_repetitions = std::min(calibration_repetitions, 3);
    tactile_locations = std::min(tactile_locations, 9);
    dataset_locations = std::min(dataset_locations, 9);
    if (tactile_depths.size() > 2) tactile_depths = {2.5, 5.0};
    if (dataset_depths.size() > 2) dataset_depths = {2.5, 5.0};
    estimators = "lsq";
    cycle_dt = std::max(cycle_dt, 0.1);
  }
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  // a:b:c denotes start:step:stop inclusive
  if (text.find(':') != std::string::npos) {
    double start, step, stop;
    char extra;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &start, &step, &stop, &extra) != 3 ||
        !(step > 0.0))
      throw validation_error("bad range '" + text + "' (expected start:step:stop)");
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw validation_error("bad number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw validation_error("empty list");
  return out;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& vs) {
  std::string out;
  for (size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += format_number(vs[i]);
  }
  return out;
}

}  // namespace detail

/// Parses and validates a scenario configuration. Parse failures report the
/// offending line; validation collects every violation into one error.
inline ScenarioConfig load_config(const std::string& text) {
  std::map<std::string, detail::ConfigEntry> entries;
  {
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\r");
      std::string body = line.substr(first, last - first + 1);
      if (body.empty() || body[0] == '#' || body[0] == ';') continue;
      if (body.front() == '[') {
        if (body.back() != ']')
          throw validation_error("config line " + std::to_string(line_no) + ": malformed section header");
        section = body.substr(1, body.size() - 2);
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw validation_error("config line " + std::to_string(line_no) + ": expected key = value");
      std::string key = body.substr(0, eq);
      std::string value = body.substr(eq + 1);
      auto trim = [](std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
      };
      trim(key);
      trim(value);
      const std::string full = section.empty() ? key : section + "." + key;
      if (entries.count(full))
        throw validation_error("config line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
      entries[full] = {value, line_no, false};
    }
  }

  ScenarioConfig cfg;
  std::vector<std::string> errors;

  auto take = [&](const std::string& key) -> detail::ConfigEntry* {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  };
  auto get_double = [&](const std::string& key, double& out) {
    if (auto* e = take(key)) {
      try {
        out = std::stod(e->value);
      } catch (const std::exception&) {
        errors.push_back(key + " (line " + std::to_string(e->line) + "): not a number");
      }
    }
  };
  auto get_int = [&](const std::string& key, int& out) {
    if (auto* e = take(key)) {
      try {
        out = std::stoi(e->value);
      } catch (const std::exception&) {
        errors.push_back(key + " (line " + std::to_string(e->line) + "): not an integer");
      }
    }
  };
  auto get_u64 = [&](const std::string& key, std::uint64_t& out) {
    if (auto* e = take(key)) {
      try {
        out = std::stoull(e->value);
      } catch (const std::exception&) {
        errors.push_back(key + " (line " + std::to_string(e->line) + "): not an unsigned integer");
      }
    }
  };
  auto get_bool = [&](const std::string& key, bool& out) {
    if (auto* e = take(key)) {
      if (e->value == "true" || e->value == "1") out = true;
      else if (e->value == "false" || e->value == "0") out = false;
      else errors.push_back(key + " (line " + std::to_string(e->line) + "): expected true/false");
    }
  };
  auto get_list = [&](const std::string& key, std::vector<double>& out) {
    if (auto* e = take(key)) {
      try {
        out = detail::parse_number_list(e->value);
      } catch (const error& ex) {
        errors.push_back(key + " (line " + std::to_string(e->line) + "): " + ex.what());
      }
    }
  };
  auto get_enum = [&](const std::string& key, std::string& out,
                      std::initializer_list<const char*> allowed) {
    if (auto* e = take(key)) {
      if (std::find_if(allowed.begin(), allowed.end(),
                       [&](const char* a) { return e->value == a; }) == allowed.end()) {
        errors.push_back(key + " (line " + std::to_string(e->line) + "): invalid value '" + e->value + "'");
      } else {
        out = e->value;
      }
    }
  };

  if (auto* e = take("scenario")) {
    if (e->value == "indentation_sweep") cfg.scenario = ScenarioKind::kIndentationSweep;
    else if (e->value == "distance_sweep") cfg.scenario = ScenarioKind::kDistanceSweep;
    else if (e->value == "mode_cycle") cfg.scenario = ScenarioKind::kModeCycle;
    else if (e->value == "dataset_gen") cfg.scenario = ScenarioKind::kDatasetGen;
    else errors.push_back("scenario (line " + std::to_string(e->line) + "): unknown scenario '" + e->value + "'");
  }
  get_u64("seed", cfg.seed);

  get_double("mesh.radius_mm", cfg.mesh_radius);
  get_double("mesh.length_mm", cfg.mesh_length);
  get_double("mesh.element_size_mm", cfg.mesh_element_size);
  get_double("mesh.fixed_ring_width_mm", cfg.mesh_fixed_ring_width);
  get_double("mesh.thickness_mm", cfg.mesh_thickness);

  get_double("material.youngs_modulus", cfg.youngs_modulus);
  get_double("material.poisson_ratio", cfg.poisson_ratio);

  get_double("camera.fx_px", cfg.fx);
  get_double("camera.fy_px", cfg.fy);
  get_double("camera.cx_px", cfg.cx);
  get_double("camera.cy_px", cfg.cy);
  get_double("camera.k1", cfg.k1);

  get_int("markers.rings", cfg.marker_rings);
  get_int("markers.per_ring", cfg.markers_per_ring);
  get_double("markers.diameter_mm", cfg.marker_diameter);
  get_double("markers.margin_mm", cfg.marker_margin);

  get_list("tactile.depths_mm", cfg.tactile_depths);
  get_int("tactile.locations", cfg.tactile_locations);
  get_double("tactile.mu", cfg.tactile_mu);
  get_double("tactile.ridge_lambda", cfg.ridge_lambda);
  get_enum("tactile.estimators", cfg.estimators, {"lsq", "ridge", "both"});
  get_enum("tactile.views", cfg.views, {"single", "dual", "both"});
  get_enum("tactile.detection", cfg.detection, {"normalized", "pure"});

  get_list("dataset.depths_mm", cfg.dataset_depths);
  get_int("dataset.locations", cfg.dataset_locations);
  get_bool("dataset.full_grid", cfg.dataset_full_grid);

  get_list("proximity.distances_mm", cfg.distances);
  get_int("proximity.repetitions", cfg.repetitions);
  get_enum("proximity.obstacle", cfg.obstacle, {"sphere", "capsule", "box"});
  get_double("proximity.obstacle_radius_mm", cfg.obstacle_radius);
  get_double("proximity.obstacle_z_mm", cfg.obstacle_z);
  get_bool("proximity.background", cfg.background);
  get_double("proximity.noise_sigma_mm", cfg.noise_sigma);
  get_double("proximity.image_noise_sigma_mm", cfg.image_noise_sigma);
  get_double("proximity.miscal_scale", cfg.miscal_scale);
  get_double("proximity.miscal_shift_mm", cfg.miscal_shift);
  get_bool("proximity.calibrate", cfg.calibrate);
  get_int("proximity.calibration_repetitions", cfg.calibration_repetitions);
  get_double("proximity.reliable_min_mm", cfg.reliable_min);
  get_double("proximity.reliable_max_mm", cfg.reliable_max);

  get_double("cycle.dt_s", cfg.cycle_dt);
  get_double("cycle.approach_speed_mm_s", cfg.approach_speed);
  get_double("cycle.start_distance_mm", cfg.start_distance);
  get_double("cycle.max_depth_mm", cfg.cycle_max_depth);
  get_double("cycle.proximity_request_t_s", cfg.proximity_request_t);
  get_double("cycle.tactile_request_t_s", cfg.tactile_request_t);
  get_double("cycle.end_t_s", cfg.cycle_end_t);

  get_double("modes.transition_s", cfg.transition_duration);

  for (const auto& [key, entry] : entries)
    if (!entry.used)
      errors.push_back(key + " (line " + std::to_string(entry.line) + "): unknown key");

  // Semantic validation; every violation is reported, not just the first.
  auto require = [&](bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  };
  require(cfg.mesh_radius > 0, "mesh.radius_mm: must be positive");
  require(cfg.mesh_element_size > 0 && cfg.mesh_element_size < cfg.mesh_radius,
          "mesh.element_size_mm: must lie in (0, radius)");
  require(cfg.mesh_length > 2 * cfg.mesh_fixed_ring_width,
          "mesh.length_mm: must exceed twice fixed_ring_width_mm");
  require(cfg.mesh_thickness > 0 && cfg.mesh_thickness < cfg.mesh_radius,
          "mesh.thickness_mm: must lie in (0, radius)");
  require(cfg.youngs_modulus > 0, "material.youngs_modulus: must be positive");
  require(cfg.poisson_ratio > 0 && cfg.poisson_ratio < 0.5,
          "material.poisson_ratio: must lie in (0, 0.5)");
  require(cfg.fx > 0 && cfg.fy > 0, "camera focal lengths: must be positive");
  require(cfg.cx >= 0 && cfg.cx < 640 && cfg.cy >= 0 && cfg.cy < 480,
          "camera principal point: must lie inside the 640x480 image");
  require(cfg.marker_rings >= 1 && cfg.markers_per_ring >= 1,
          "markers: rings and per_ring must be >= 1");
  require(cfg.marker_diameter > 0, "markers.diameter_mm: must be positive");
  require(!cfg.tactile_depths.empty(), "tactile.depths_mm: must be non-empty");
  for (double d : cfg.tactile_depths)
    require(d >= 0 && d <= 5.0, "tactile.depths_mm: depth " + detail::format_number(d) +
                                    " outside [0, 5]");
  require(cfg.tactile_locations >= 1, "tactile.locations: must be >= 1");
  require(cfg.tactile_mu >= 0, "tactile.mu: must be >= 0");
  require(cfg.ridge_lambda >= 0, "tactile.ridge_lambda: must be >= 0");
  require(!cfg.dataset_depths.empty(), "dataset.depths_mm: must be non-empty");
  for (double d : cfg.dataset_depths)
    require(d >= 0 && d <= 5.0, "dataset.depths_mm: depth " + detail::format_number(d) +
                                    " outside [0, 5]");
  require(cfg.dataset_locations >= 1, "dataset.locations: must be >= 1");
  require(!cfg.distances.empty(), "proximity.distances_mm: must be non-empty");
  for (double d : cfg.distances)
    require(d >= 0, "proximity.distances_mm: distance " + detail::format_number(d) + " negative");
  require(cfg.repetitions >= 1, "proximity.repetitions: must be >= 1");
  require(cfg.obstacle_radius > 0, "proximity.obstacle_radius_mm: must be positive");
  require(cfg.noise_sigma >= 0, "proximity.noise_sigma_mm: must be >= 0");
  require(cfg.image_noise_sigma >= 0, "proximity.image_noise_sigma_mm: must be >= 0");
  require(cfg.miscal_scale > 0, "proximity.miscal_scale: must be positive");
  require(cfg.calibration_repetitions >= 1, "proximity.calibration_repetitions: must be >= 1");
  require(cfg.reliable_min >= 0 && cfg.reliable_min < cfg.reliable_max,
          "proximity reliable range: need 0 <= min < max");
  require(cfg.cycle_dt > 0, "cycle.dt_s: must be positive");
  require(cfg.approach_speed > 0, "cycle.approach_speed_mm_s: must be positive");
  require(cfg.start_distance > 0, "cycle.start_distance_mm: must be positive");
  require(cfg.cycle_max_depth >= 0 && cfg.cycle_max_depth <= 5.0,
          "cycle.max_depth_mm: must lie in [0, 5]");
  require(cfg.cycle_end_t > 0, "cycle.end_t_s: must be positive");
  require(cfg.transition_duration > 0, "modes.transition_s: must be positive");

  if (!errors.empty()) {
    std::string message = "config validation failed:";
    for (const auto& e : errors) message += "\n  - " + e;
    throw validation_error(message);
  }
  return cfg;
}

/// Canonical dump; load_config(dump_config(c)) reproduces c exactly.
inline std::string dump_config(const ScenarioConfig& cfg) {
  using detail::format_list;
  using detail::format_number;
  std::string out;
  out += "scenario = " + std::string(to_string(cfg.scenario)) + "\n";
  out += "seed = " + std::to_string(cfg.seed) + "\n";
  out += "\n[mesh]\n";
  out += "radius_mm = " + format_number(cfg.mesh_radius) + "\n";
  out += "length_mm = " + format_number(cfg.mesh_length) + "\n";
  out += "element_size_mm = " + format_number(cfg.mesh_element_size) + "\n";
  out += "fixed_ring_width_mm = " + format_number(cfg.mesh_fixed_ring_width) + "\n";
  out += "thickness_mm = " + format_number(cfg.mesh_thickness) + "\n";
  out += "\n[material]\n";
  out += "youngs_modulus = " + format_number(cfg.youngs_modulus) + "\n";
  out += "poisson_ratio = " + format_number(cfg.poisson_ratio) + "\n";
  out += "\n[camera]\n";
  out += "fx_px = " + format_number(cfg.fx) + "\n";
  out += "fy_px = " + format_number(cfg.fy) + "\n";
  out += "cx_px = " + format_number(cfg.cx) + "\n";
  out += "cy_px = " + format_number(cfg.cy) + "\n";
  out += "k1 = " + format_number(cfg.k1) + "\n";
  out += "\n[markers]\n";
  out += "rings = " + std::to_string(cfg.marker_rings) + "\n";
  out += "per_ring = " + std::to_string(cfg.markers_per_ring) + "\n";
  out += "diameter_mm = " + format_number(cfg.marker_diameter) + "\n";
  out += "margin_mm = " + format_number(cfg.marker_margin) + "\n";
  out += "\n[tactile]\n";
  out += "depths_mm = " + format_list(cfg.tactile_depths) + "\n";
  out += "locations = " + std::to_string(cfg.tactile_locations) + "\n";
  out += "mu = " + format_number(cfg.tactile_mu) + "\n";
  out += "ridge_lambda = " + format_number(cfg.ridge_lambda) + "\n";
  out += "estimators = " + cfg.estimators + "\n";
  out += "views = " + cfg.views + "\n";
  out += "detection = " + cfg.detection + "\n";
  out += "\n[dataset]\n";
  out += "depths_mm = " + format_list(cfg.dataset_depths) + "\n";
  out += "locations = " + std::to_string(cfg.dataset_locations) + "\n";
  out += "full_grid = " + std::string(cfg.dataset_full_grid ? "true" : "false") + "\n";
  out += "\n[proximity]\n";
  out += "distances_mm = " + format_list(cfg.distances) + "\n";
  out += "repetitions = " + std::to_string(cfg.repetitions) + "\n";
  out += "obstacle = " + cfg.obstacle + "\n";
  out += "obstacle_radius_mm = " + format_number(cfg.obstacle_radius) + "\n";
  out += "obstacle_z_mm = " + format_number(cfg.obstacle_z) + "\n";
  out += "background = " + std::string(cfg.background ? "true" : "false") + "\n";
  out += "noise_sigma_mm = " + format_number(cfg.noise_sigma) + "\n";
  out += "image_noise_sigma_mm = " + format_number(cfg.image_noise_sigma) + "\n";
  out += "miscal_scale = " + format_number(cfg.miscal_scale) + "\n";
  out += "miscal_shift_mm = " + format_number(cfg.miscal_shift) + "\n";
  out += "calibrate = " + std::string(cfg.calibrate ? "true" : "false") + "\n";
  out += "calibration_repetitions = " + std::to_string(cfg.calibration_repetitions) + "\n";
  out += "reliable_min_mm = " + format_number(cfg.reliable_min) + "\n";
  out += "reliable_max_mm = " + format_number(cfg.reliable_max) + "\n";
  out += "\n[cycle]\n";
  out += "dt_s = " + format_number(cfg.cycle_dt) + "\n";
  out += "approach_speed_mm_s = " + format_number(cfg.approach_speed) + "\n";
  out += "start_distance_mm = " + format_number(cfg.start_distance) + "\n";
  out += "max_depth_mm = " + format_number(cfg.cycle_max_depth) + "\n";
  out += "proximity_request_t_s = " + format_number(cfg.proximity_request_t) + "\n";
  out += "tactile_request_t_s = " + format_number(cfg.tactile_request_t) + "\n";
  out += "end_t_s = " + format_number(cfg.cycle_end_t) + "\n";
  out += "\n[modes]\n";
  out += "transition_s = " + format_number(cfg.transition_duration) + "\n";
  return out;
}

}  // namespace protac
