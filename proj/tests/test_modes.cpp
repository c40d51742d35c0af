#include <catch2/catch_amalgamated.hpp>

#include "protac/modes.hpp"
#include "protac/rng.hpp"

using namespace protac;

namespace {

const SkinState kAllStates[4] = {SkinState::kTactileOpaque, SkinState::kTransitionToProximity,
                                 SkinState::kProximityTransparent, SkinState::kTransitionToTactile};

ModeState in_state(SkinState s, double elapsed = 0.0) {
  ModeState m;
  m.state = s;
  m.transition_elapsed = elapsed;
  return m;
}

}  // namespace

TEST_CASE("mode requests") {
  SECTION("requesting the current mode is a no-op") {
    const ModeState s = request_mode(in_state(SkinState::kTactileOpaque), SensingMode::kTactile);
    CHECK(s.state == SkinState::kTactileOpaque);
  }

  SECTION("requesting the other mode starts a transition") {
    const ModeState s = request_mode(in_state(SkinState::kTactileOpaque), SensingMode::kProximity);
    CHECK(s.state == SkinState::kTransitionToProximity);
    CHECK(s.transition_elapsed == 0.0);
  }

  SECTION("reversing an in-flight transition restarts the timer") {
    const ModeState s =
        request_mode(in_state(SkinState::kTransitionToProximity, 0.1), SensingMode::kTactile);
    CHECK(s.state == SkinState::kTransitionToTactile);
    CHECK(s.transition_elapsed == 0.0);
  }

  SECTION("requesting the in-flight target does not restart") {
    const ModeState s =
        request_mode(in_state(SkinState::kTransitionToProximity, 0.1), SensingMode::kProximity);
    CHECK(s.state == SkinState::kTransitionToProximity);
    CHECK(s.transition_elapsed == 0.1);
  }
}

TEST_CASE("ticking") {
  SECTION("a full transition window completes with one event") {
    std::vector<ModeEvent> events;
    const ModeState s = tick(in_state(SkinState::kTransitionToProximity), 0.3, events);
    CHECK(s.state == SkinState::kProximityTransparent);
    REQUIRE(events.size() == 1);
    CHECK(events[0].entered == SkinState::kProximityTransparent);
  }

  SECTION("stable states ignore time") {
    std::vector<ModeEvent> events;
    const ModeState s = tick(in_state(SkinState::kTactileOpaque), 123.0, events);
    CHECK(s.state == SkinState::kTactileOpaque);
    CHECK(events.empty());
  }

  SECTION("negative dt rejected") {
    std::vector<ModeEvent> events;
    CHECK_THROWS_AS(tick(in_state(SkinState::kTactileOpaque), -0.1, events), validation_error);
  }

  SECTION("tick is additive, events included") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      const double total = rng.uniform(0.0, 0.8);
      const double a = rng.uniform(0.0, total);
      const SkinState start = kAllStates[rng.uniform_int(0, 3)];

      std::vector<ModeEvent> ev_one, ev_two;
      const ModeState one = tick(in_state(start), total, ev_one);
      const ModeState mid = tick(in_state(start), a, ev_two);
      const ModeState two = tick(mid, total - a, ev_two);

      CHECK(one.state == two.state);
      CHECK(one.transition_elapsed == Catch::Approx(two.transition_elapsed).margin(1e-12));
      REQUIRE(ev_one.size() == ev_two.size());
      for (size_t i = 0; i < ev_one.size(); ++i) CHECK(ev_one[i].entered == ev_two[i].entered);
    }
  }

  SECTION("three sub-steps summing to the window match one step") {
    std::vector<ModeEvent> ev_one, ev_three;
    const ModeState one = tick(in_state(SkinState::kTransitionToTactile), 0.3, ev_one);
    ModeState s = in_state(SkinState::kTransitionToTactile);
    for (int i = 0; i < 3; ++i) s = tick(s, 0.1, ev_three);
    CHECK(one.state == s.state);
    CHECK(ev_one.size() == ev_three.size());
  }
}

TEST_CASE("stream validity and LED policy over all reachable states") {
  for (SkinState state : kAllStates) {
    const ModeState s = in_state(state);
    const StreamValidity v = stream_validity(s);
    CHECK(v.tactile_valid == (state == SkinState::kTactileOpaque));
    CHECK(v.proximity_valid == (state == SkinState::kProximityTransparent));
    CHECK((int(v.tactile_valid) + int(v.proximity_valid)) <= 1);
    // LEDs illuminate the markers: on when opaque or darkening.
    CHECK(s.led_on() ==
          (state == SkinState::kTactileOpaque || state == SkinState::kTransitionToTactile));
  }
}

TEST_CASE("exhaustive reachability: requests and ticks preserve the invariants") {
  // Model-check: from every state, every request followed by fine ticking.
  for (SkinState start : kAllStates) {
    for (SensingMode target : {SensingMode::kTactile, SensingMode::kProximity}) {
      ModeState s = request_mode(in_state(start, 0.05), target);
      double both_invalid = 0.0;
      // Remaining blind time: a same-direction request keeps its timer, a
      // reversal or fresh transition starts from zero.
      const double expected_window =
          s.in_transition() ? s.transition_duration - s.transition_elapsed : 0.0;
      std::vector<ModeEvent> events;
      for (int step = 0; step < 100; ++step) {
        const StreamValidity v = stream_validity(s);
        CHECK(int(v.tactile_valid) + int(v.proximity_valid) <= 1);
        CHECK(s.transition_elapsed >= 0.0);
        CHECK(s.transition_elapsed <= s.transition_duration + 1e-12);
        if (!v.tactile_valid && !v.proximity_valid) both_invalid += 0.01;
        s = tick(s, 0.01, events);
      }
      CHECK_FALSE(s.in_transition());
      if (expected_window > 0.0)
        CHECK(both_invalid == Catch::Approx(expected_window).margin(0.0100001));
    }
  }
}

TEST_CASE("both-invalid window equals the transition duration within one tick") {
  const double dt = 0.01;
  ModeState s;  // tactile opaque
  s = request_mode(s, SensingMode::kProximity);
  double window = 0.0;
  std::vector<ModeEvent> events;
  for (int step = 0; step < 200; ++step) {
    const StreamValidity v = stream_validity(s);
    if (!v.tactile_valid && !v.proximity_valid) window += dt;
    s = tick(s, dt, events);
  }
  CHECK(s.state == SkinState::kProximityTransparent);
  CHECK(std::abs(window - s.transition_duration) <= dt + 1e-12);
}
