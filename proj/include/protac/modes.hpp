#pragma once

#include <string>
#include <vector>

#include "protac/error.hpp"

namespace protac {

/// Optical state of the switchable skin film.
enum class SkinState {
  kTactileOpaque,
  kTransitionToProximity,
  kProximityTransparent,
  kTransitionToTactile
};

enum class SensingMode { kTactile, kProximity };

inline const char* to_string(SkinState s) {
  switch (s) {
    case SkinState::kTactileOpaque: return "tactile_opaque";
    case SkinState::kTransitionToProximity: return "transition_to_proximity";
    case SkinState::kProximityTransparent: return "proximity_transparent";
    case SkinState::kTransitionToTactile: return "transition_to_tactile";
  }
  return "?";
}

struct ModeEvent {
  SkinState entered;
};

struct StreamValidity {
  bool tactile_valid = false;
  bool proximity_valid = false;
};

/// Film state machine. Switching takes transition_duration seconds, during
/// which neither sensing stream is valid; the illumination LEDs are on
/// exactly when the film is opaque or darkening.
struct ModeState {
  SkinState state = SkinState::kTactileOpaque;
  double transition_elapsed = 0.0;      // s, meaningful in transition states
  double transition_duration = 0.3;     // s

  bool in_transition() const {
    return state == SkinState::kTransitionToProximity || state == SkinState::kTransitionToTactile;
  }
  bool led_on() const {
    return state == SkinState::kTactileOpaque || state == SkinState::kTransitionToTactile;
  }
};

/// Requests a sensing mode. No-op when already in or heading to the target;
/// reversing an in-flight transition restarts the timer from zero.
inline ModeState request_mode(ModeState s, SensingMode target) {
  const bool want_tactile = target == SensingMode::kTactile;
  if (want_tactile) {
    if (s.state == SkinState::kTactileOpaque || s.state == SkinState::kTransitionToTactile) return s;
    s.state = SkinState::kTransitionToTactile;
  } else {
    if (s.state == SkinState::kProximityTransparent || s.state == SkinState::kTransitionToProximity)
      return s;
    s.state = SkinState::kTransitionToProximity;
  }
  s.transition_elapsed = 0.0;
  return s;
}

/// Advances time by dt seconds. Emits one event when a transition completes;
/// additive over sub-steps, including events.
inline ModeState tick(ModeState s, double dt, std::vector<ModeEvent>& events) {
  if (dt < 0.0) throw validation_error("tick: dt must be >= 0");
  if (!s.in_transition()) return s;
  s.transition_elapsed += dt;
  if (s.transition_elapsed + 1e-12 >= s.transition_duration) {
    s.state = s.state == SkinState::kTransitionToProximity ? SkinState::kProximityTransparent
                                                           : SkinState::kTactileOpaque;
    s.transition_elapsed = 0.0;
    events.push_back({s.state});
  }
  return s;
}

inline StreamValidity stream_validity(const ModeState& s) {
  return {s.state == SkinState::kTactileOpaque, s.state == SkinState::kProximityTransparent};
}

}  // namespace protac
