#pragma once

#include <array>
#include <optional>
#include <string>

#include "vtrackit/geometry.hpp"
#include "vtrackit/rng.hpp"
#include "vtrackit/roadnet.hpp"

namespace vtrackit::traffic {

constexpr double kDt = 0.05;
constexpr double kGravity = 9.81;

enum class ActorType { Ego, Traffic };
enum class Temperament { Normal, Aggressive, Cautious };

const char* to_string(ActorType t);
const char* to_string(Temperament t);

struct FuzzBounds {
  struct Range {
    double lo = 0.0;
    double hi = 0.0;
  };
  Range min_follow_m{5.0, 12.0};
  Range speed_delta_kmph{-10.0, 10.0};
  Range p_ignore_vehicles{0.0, 0.05};
  Range p_ignore_rules{0.0, 0.05};
  // offsets applied beyond the normal band for out-of-distribution drivers
  Range aggressive_speed_extra{5.0, 20.0};
  Range cautious_speed_extra{5.0, 20.0};
};

struct ActorProfile {
  int actor_id = 0;
  ActorType actor_type = ActorType::Traffic;
  std::string attr;                 // vehicle class
  std::array<int, 3> color{0, 0, 0};
  double length_m = 4.5;
  double width_m = 1.9;
  double min_follow_m = 8.0;
  double speed_delta_kmph = 0.0;    // over/under the posted limit
  double p_ignore_vehicles = 0.0;
  double p_ignore_rules = 0.0;
  Temperament temperament = Temperament::Normal;
};

struct ControlState {
  double throttle = 0.0;  // [0, 1]
  double steer = 0.0;     // (-1, 1)
  double brake = 0.0;     // [0, 1]
};

struct KinematicState {
  Vec2 pos;
  double heading_deg = 360.0;  // (0, 360], compass
  double speed_kmph = 0.0;
  Vec2 accel_mps2;
};

// Ego is always the same vehicle model; traffic draws from the catalog.
struct VehicleSpec {
  const char* attr;
  double length_m;
  double width_m;
};
const VehicleSpec& ego_vehicle_spec();
const VehicleSpec& catalog_entry(std::size_t i);
std::size_t catalog_size();

ActorProfile sample_actor_profile(Rng& rng, const FuzzBounds& bounds,
                                  Temperament temperament,
                                  ActorType actor_type = ActorType::Traffic,
                                  int actor_id = 0);

struct Lead {
  double gap_m = 0.0;  // bumper-to-bumper
  double speed_kmph = 0.0;
};

// Everything the controller knows this tick. The scenario engine fills it in
// from the map and neighbor state.
struct StepContext {
  roadnet::LaneContext lane_ctx;
  std::optional<Lead> lead;              // already filtered by ignore draws
  std::optional<double> stop_distance_m; // distance to a red/stop line
  Vec2 pursuit_target;                   // look-ahead point on the path
  double target_speed_kmph = 30.0;       // posted*scale + delta, curve-capped
  double next_speed_cap_kmph = 1e9;      // upcoming limit to anticipate
  double next_cap_distance_m = 1e9;
  double friction = 0.9;
  bool hold_speed = false;               // scripted actors
};

// One control/integration step: IDM longitudinal control plus pure-pursuit
// steering toward the target point. Pure function of its inputs.
std::pair<ControlState, KinematicState> step_actor(const ActorProfile& profile,
                                                   const KinematicState& state,
                                                   const StepContext& ctx,
                                                   double dt = kDt);

// Free-road speed target for a lane: min(posted*scale + delta, curve cap).
double target_speed_kmph(const ActorProfile& profile, double posted_kmph,
                         double limit_scale, double max_curvature,
                         double friction);

double kmph_to_mps(double kmph);
double mps_to_kmph(double mps);

}  // namespace vtrackit::traffic
