#include "vtrackit/traffic.hpp"

#include <algorithm>
#include <cmath>

namespace vtrackit::traffic {

namespace {

constexpr double kMaxAccel = 2.5;        // comfortable acceleration, m/s^2
constexpr double kComfortBrake = 3.0;    // comfortable deceleration, m/s^2
constexpr double kHeadwayS = 0.9;        // IDM time headway
constexpr double kStopLineMargin = 2.0;  // target gap at a stop line
constexpr double kMaxSteerCurvature = 0.2;  // 1/m at full lock
constexpr double kLateralGripShare = 0.7;   // fraction of friction for cornering

const VehicleSpec kCatalog[] = {
    {"vehicle.tesla.model3", 4.69, 1.85},
    {"vehicle.audi.tt", 4.18, 1.84},
    {"vehicle.bmw.grandtourer", 4.66, 2.11},
    {"vehicle.chevrolet.impala", 5.06, 1.81},
    {"vehicle.ford.mustang", 4.72, 1.92},
    {"vehicle.jeep.wrangler", 3.87, 1.88},
    {"vehicle.mini.cooper", 3.82, 1.68},
    {"vehicle.nissan.patrol", 4.80, 1.94},
    {"vehicle.volkswagen.t2", 4.45, 1.78},
};

// IDM acceleration toward a leader at `gap` with closing speed dv.
double idm_accel(double v, double v0, double gap, double dv, double s0) {
  const double free_term = v0 > 0.1 ? std::pow(v / v0, 4.0) : 1.0;
  double interaction = 0.0;
  if (gap > 0.05) {
    const double s_star =
        s0 + std::max(0.0, v * kHeadwayS + v * dv / (2.0 * std::sqrt(kMaxAccel * kComfortBrake)));
    interaction = (s_star / gap) * (s_star / gap);
  } else {
    interaction = 100.0;
  }
  return kMaxAccel * (1.0 - free_term - interaction);
}

}  // namespace

const char* to_string(ActorType t) { return t == ActorType::Ego ? "Ego" : "Traffic"; }

const char* to_string(Temperament t) {
  switch (t) {
    case Temperament::Normal: return "Normal";
    case Temperament::Aggressive: return "Aggressive";
    case Temperament::Cautious: return "Cautious";
  }
  return "?";
}

double kmph_to_mps(double kmph) { return kmph / 3.6; }
double mps_to_kmph(double mps) { return mps * 3.6; }

const VehicleSpec& ego_vehicle_spec() { return kCatalog[0]; }
const VehicleSpec& catalog_entry(std::size_t i) { return kCatalog[i % catalog_size()]; }
std::size_t catalog_size() { return sizeof(kCatalog) / sizeof(kCatalog[0]); }

ActorProfile sample_actor_profile(Rng& rng, const FuzzBounds& bounds,
                                  Temperament temperament, ActorType actor_type,
                                  int actor_id) {
  ActorProfile p;
  p.actor_id = actor_id;
  p.actor_type = actor_type;
  p.temperament = temperament;

  const VehicleSpec& spec =
      actor_type == ActorType::Ego
          ? ego_vehicle_spec()
          : catalog_entry(rng.uniform_below(catalog_size()));
  p.attr = spec.attr;
  p.length_m = spec.length_m;
  p.width_m = spec.width_m;
  for (int& c : p.color) c = static_cast<int>(rng.uniform_below(256));

  p.min_follow_m = rng.uniform(bounds.min_follow_m.lo, bounds.min_follow_m.hi);
  p.speed_delta_kmph = rng.uniform(bounds.speed_delta_kmph.lo, bounds.speed_delta_kmph.hi);
  p.p_ignore_vehicles = rng.uniform(bounds.p_ignore_vehicles.lo, bounds.p_ignore_vehicles.hi);
  p.p_ignore_rules = rng.uniform(bounds.p_ignore_rules.lo, bounds.p_ignore_rules.hi);

  if (temperament == Temperament::Aggressive) {
    p.speed_delta_kmph = bounds.speed_delta_kmph.hi +
                         rng.uniform(bounds.aggressive_speed_extra.lo,
                                     bounds.aggressive_speed_extra.hi);
    p.min_follow_m = rng.uniform(2.0, std::max(2.5, bounds.min_follow_m.lo));
    p.p_ignore_vehicles = rng.uniform(0.2, 0.5);
    p.p_ignore_rules = rng.uniform(0.2, 0.5);
  } else if (temperament == Temperament::Cautious) {
    p.speed_delta_kmph = bounds.speed_delta_kmph.lo -
                         rng.uniform(bounds.cautious_speed_extra.lo,
                                     bounds.cautious_speed_extra.hi);
    p.min_follow_m = rng.uniform(bounds.min_follow_m.hi, bounds.min_follow_m.hi + 6.0);
    p.p_ignore_vehicles = 0.0;
    p.p_ignore_rules = 0.0;
  }
  return p;
}

double target_speed_kmph(const ActorProfile& profile, double posted_kmph,
                         double limit_scale, double max_curvature,
                         double friction) {
  double v0 = posted_kmph * limit_scale + profile.speed_delta_kmph;
  v0 = std::max(v0, 5.0);
  if (max_curvature > 1e-6) {
    const double cap_mps = std::sqrt(kLateralGripShare * friction * kGravity / max_curvature);
    v0 = std::min(v0, mps_to_kmph(cap_mps));
  }
  return v0;
}

std::pair<ControlState, KinematicState> step_actor(const ActorProfile& profile,
                                                   const KinematicState& state,
                                                   const StepContext& ctx,
                                                   double dt) {
  const double v = kmph_to_mps(state.speed_kmph);
  const double v0 = std::max(0.5, kmph_to_mps(ctx.target_speed_kmph));
  const double max_brake = ctx.friction * kGravity;

  double accel;
  if (ctx.hold_speed) {
    accel = 0.0;
  } else {
    accel = idm_accel(v, v0, 1e9, 0.0, profile.min_follow_m);
    if (ctx.lead) {
      const double dv = v - kmph_to_mps(ctx.lead->speed_kmph);
      accel = std::min(accel, idm_accel(v, v0, ctx.lead->gap_m, dv, profile.min_follow_m));
    }
    if (ctx.stop_distance_m) {
      accel = std::min(accel, idm_accel(v, v0, *ctx.stop_distance_m, v, kStopLineMargin));
    }
    const double cap = kmph_to_mps(ctx.next_speed_cap_kmph);
    if (v > cap) {
      const double d = std::max(0.5, ctx.next_cap_distance_m);
      const double needed = (v * v - cap * cap) / (2.0 * d);
      if (needed > kComfortBrake * 0.5) accel = std::min(accel, -needed);
    }
    accel = std::clamp(accel, -max_brake, kMaxAccel);
  }

  double v_new = std::max(0.0, v + accel * dt);

  // pure pursuit toward the look-ahead point
  const Vec2 hdir = dir_from_heading(state.heading_deg);
  const Vec2 to_target = ctx.pursuit_target - state.pos;
  const double ld = std::max(1.0, to_target.norm());
  double curvature = 0.0;
  if (ld > 0.01 && v_new > 0.01) {
    const double sin_alpha = std::clamp(hdir.cross(to_target * (1.0 / ld)), -1.0, 1.0);
    curvature = 2.0 * sin_alpha / ld;  // positive turns left
    curvature = std::clamp(curvature, -kMaxSteerCurvature, kMaxSteerCurvature);
  }
  const double yaw_rate_deg = -curvature * v_new * kDegPerRad;  // compass turns clockwise
  const double heading_new = normalize_heading(state.heading_deg + yaw_rate_deg * dt);

  ControlState control;
  control.steer = std::clamp(-curvature / kMaxSteerCurvature, -0.9999, 0.9999);
  if (ctx.hold_speed) {
    control.throttle = 0.0;
    control.brake = 0.0;
  } else if (accel >= 0.0) {
    control.throttle = std::min(1.0, accel / kMaxAccel);
    control.brake = 0.0;
  } else {
    control.throttle = 0.0;
    control.brake = std::min(1.0, -accel / max_brake);
  }
  if (v == 0.0 && v_new == 0.0 && !ctx.hold_speed && control.throttle == 0.0) {
    control.brake = std::max(control.brake, 0.3);  // hold at rest
  }

  KinematicState next;
  const Vec2 hdir_new = dir_from_heading(heading_new);
  const double v_avg = 0.5 * (v + v_new);
  next.pos = state.pos + hdir_new * (v_avg * dt);
  next.heading_deg = heading_new;
  next.speed_kmph = mps_to_kmph(v_new);
  next.accel_mps2 = (hdir_new * v_new - hdir * v) * (1.0 / dt);
  return {control, next};
}

}  // namespace vtrackit::traffic
