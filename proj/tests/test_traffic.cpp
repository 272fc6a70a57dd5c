#include <cmath>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vtrackit/traffic.hpp"

using namespace vtrackit;
using namespace vtrackit::traffic;

namespace {

StepContext free_road_ctx(const KinematicState& state, double target_kmph,
                          double friction = 0.9) {
  StepContext ctx;
  ctx.pursuit_target = state.pos + dir_from_heading(state.heading_deg) * 15.0;
  ctx.target_speed_kmph = target_kmph;
  ctx.friction = friction;
  return ctx;
}

}  // namespace

TEST_CASE("normal profiles are sampled inside the bounds") {
  FuzzBounds bounds;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    const auto p = sample_actor_profile(rng, bounds, Temperament::Normal);
    CHECK(p.min_follow_m >= bounds.min_follow_m.lo);
    CHECK(p.min_follow_m <= bounds.min_follow_m.hi);
    CHECK(p.speed_delta_kmph >= bounds.speed_delta_kmph.lo);
    CHECK(p.speed_delta_kmph <= bounds.speed_delta_kmph.hi);
    CHECK(p.p_ignore_vehicles >= 0.0);
    CHECK(p.p_ignore_vehicles <= bounds.p_ignore_vehicles.hi);
    CHECK(p.p_ignore_rules >= 0.0);
    CHECK(p.p_ignore_rules <= bounds.p_ignore_rules.hi);
    for (int c : p.color) {
      CHECK(c >= 0);
      CHECK(c <= 255);
    }
    CHECK(p.length_m > 0.0);
  }
}

TEST_CASE("aggressive and cautious speed deltas fall strictly outside the bounds") {
  FuzzBounds bounds;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    const auto a = sample_actor_profile(rng, bounds, Temperament::Aggressive);
    CHECK(a.speed_delta_kmph > bounds.speed_delta_kmph.hi);
    Rng rng2(seed + 1000);
    const auto c = sample_actor_profile(rng2, bounds, Temperament::Cautious);
    CHECK(c.speed_delta_kmph < bounds.speed_delta_kmph.lo);
  }
}

TEST_CASE("uniform sampling approaches its bounds over 1000 draws") {
  FuzzBounds bounds;
  Rng rng(2024);
  double lo_seen = 1e9, hi_seen = -1e9;
  for (int i = 0; i < 1000; ++i) {
    const auto p = sample_actor_profile(rng, bounds, Temperament::Normal);
    lo_seen = std::min(lo_seen, p.speed_delta_kmph);
    hi_seen = std::max(hi_seen, p.speed_delta_kmph);
  }
  const double span = bounds.speed_delta_kmph.hi - bounds.speed_delta_kmph.lo;
  CHECK(lo_seen < bounds.speed_delta_kmph.lo + 0.05 * span);
  CHECK(hi_seen > bounds.speed_delta_kmph.hi - 0.05 * span);
}

TEST_CASE("free road below target speed accelerates with zero brake") {
  Rng rng(1);
  FuzzBounds bounds;
  const auto profile = sample_actor_profile(rng, bounds, Temperament::Normal);
  KinematicState state;
  state.pos = {0, 0};
  state.heading_deg = 90.0;
  state.speed_kmph = 20.0;
  const auto [control, next] = step_actor(profile, state, free_road_ctx(state, 50.0));
  CHECK(control.throttle > 0.0);
  CHECK(control.brake == 0.0);
  CHECK(next.speed_kmph > state.speed_kmph);
}

TEST_CASE("a lead inside the following distance forces braking") {
  Rng rng(2);
  FuzzBounds bounds;
  auto profile = sample_actor_profile(rng, bounds, Temperament::Normal);
  profile.min_follow_m = 10.0;
  KinematicState state;
  state.heading_deg = 90.0;
  state.speed_kmph = 40.0;
  auto ctx = free_road_ctx(state, 40.0);
  ctx.lead = Lead{6.0, 40.0};  // same speed, gap below the desired minimum
  const auto [control, next] = step_actor(profile, state, ctx);
  CHECK(control.brake > 0.0);
  CHECK(control.throttle == 0.0);
  CHECK(next.speed_kmph < state.speed_kmph);
}

TEST_CASE("wet stopping distance strictly exceeds dry at matched speed") {
  Rng rng(3);
  FuzzBounds bounds;
  const auto profile = sample_actor_profile(rng, bounds, Temperament::Normal);

  auto stopping_distance = [&](double friction) {
    KinematicState state;
    state.pos = {0, 0};
    state.heading_deg = 90.0;  // east
    state.speed_kmph = 60.0;
    double travelled = 0.0;
    for (int i = 0; i < 4000 && state.speed_kmph > 1e-9; ++i) {
      StepContext ctx = free_road_ctx(state, 60.0, friction);
      ctx.stop_distance_m = 0.05;  // emergency stop demand
      const auto [control, next] = step_actor(profile, state, ctx);
      (void)control;
      travelled += next.pos.dist(state.pos);
      state = next;
    }
    return travelled;
  };

  const double dry = stopping_distance(0.9);
  const double wet = stopping_distance(0.5);
  CHECK(dry > 1.0);
  CHECK(wet > dry);
}

TEST_CASE("controls stay in range and pedals are mutually exclusive") {
  Rng rng(4);
  FuzzBounds bounds;
  for (int trial = 0; trial < 300; ++trial) {
    const auto profile = sample_actor_profile(
        rng, bounds,
        trial % 3 == 0 ? Temperament::Aggressive
                       : (trial % 3 == 1 ? Temperament::Cautious : Temperament::Normal));
    KinematicState state;
    state.pos = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
    state.heading_deg = rng.uniform(1.0, 360.0);
    state.speed_kmph = rng.uniform(0.0, 120.0);
    StepContext ctx;
    ctx.pursuit_target = {rng.uniform(-40, 40), rng.uniform(-40, 40)};
    ctx.target_speed_kmph = rng.uniform(5.0, 100.0);
    ctx.friction = rng.uniform(0.4, 0.9);
    if (rng.bernoulli(0.5)) ctx.lead = Lead{rng.uniform(0.5, 60.0), rng.uniform(0.0, 80.0)};
    if (rng.bernoulli(0.3)) ctx.stop_distance_m = rng.uniform(0.1, 50.0);
    const auto [control, next] = step_actor(profile, state, ctx);
    CHECK(control.throttle >= 0.0);
    CHECK(control.throttle <= 1.0);
    CHECK(control.brake >= 0.0);
    CHECK(control.brake <= 1.0);
    CHECK(std::abs(control.steer) < 1.0);
    CHECK(control.throttle * control.brake == 0.0);
    CHECK(next.speed_kmph >= 0.0);
    CHECK(next.heading_deg > 0.0);
    CHECK(next.heading_deg <= 360.0);
  }
}

TEST_CASE("speed never exceeds target by more than one step of acceleration") {
  Rng rng(5);
  FuzzBounds bounds;
  const auto profile = sample_actor_profile(rng, bounds, Temperament::Normal);
  KinematicState state;
  state.heading_deg = 90.0;
  state.speed_kmph = 0.0;
  const double target = 47.0;
  for (int i = 0; i < 2000; ++i) {
    const auto [control, next] = step_actor(profile, state, free_road_ctx(state, target));
    (void)control;
    state = next;
    CHECK(state.speed_kmph <= target + mps_to_kmph(2.5 * kDt) + 1e-9);
  }
  CHECK(state.speed_kmph == doctest::Approx(target).epsilon(0.02));
}

TEST_CASE("target_speed_kmph caps by curvature and friction") {
  Rng rng(6);
  FuzzBounds bounds;
  auto profile = sample_actor_profile(rng, bounds, Temperament::Normal);
  profile.speed_delta_kmph = 0.0;
  const double straight = target_speed_kmph(profile, 90.0, 1.0, 0.0, 0.9);
  CHECK(straight == doctest::Approx(90.0));
  const double curved = target_speed_kmph(profile, 90.0, 1.0, 0.05, 0.9);
  CHECK(curved < 50.0);
  const double wet_curved = target_speed_kmph(profile, 90.0, 1.0, 0.05, 0.5);
  CHECK(wet_curved < curved);
  const double scaled = target_speed_kmph(profile, 90.0, 0.85, 0.0, 0.9);
  CHECK(scaled == doctest::Approx(76.5));
}

TEST_CASE("pure pursuit converges onto an offset target line") {
  Rng rng(7);
  FuzzBounds bounds;
  const auto profile = sample_actor_profile(rng, bounds, Temperament::Normal);
  KinematicState state;
  state.pos = {0.0, 3.0};  // 3 m left of the desired line y = 0
  state.heading_deg = 90.0;
  state.speed_kmph = 30.0;
  for (int i = 0; i < 600; ++i) {
    StepContext ctx;
    ctx.pursuit_target = {state.pos.x + 12.0, 0.0};
    ctx.target_speed_kmph = 30.0;
    ctx.friction = 0.9;
    state = step_actor(profile, state, ctx).second;
  }
  CHECK(std::abs(state.pos.y) < 0.2);
}
