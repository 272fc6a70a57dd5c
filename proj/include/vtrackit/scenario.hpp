#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vtrackit/dataset.hpp"
#include "vtrackit/geometry.hpp"
#include "vtrackit/rng.hpp"
#include "vtrackit/roadnet.hpp"
#include "vtrackit/traffic.hpp"

namespace vtrackit::sim {

constexpr double kFps = 20.0;
constexpr double kDt = 0.05;
constexpr double kPoolRadius = 50.0;
constexpr double kMaxDuration = 30.0;

enum class WeatherPreset { ClearNoon, ClearSunset, WetNoon, FogNoon, WetSunset };
enum class Termination { TimeLimit, EgoCollision };

const char* to_string(WeatherPreset p);
const char* to_string(Termination t);
std::optional<WeatherPreset> weather_from_string(const std::string& s);
std::optional<Termination> termination_from_string(const std::string& s);

struct Weather {
  WeatherPreset preset = WeatherPreset::ClearNoon;
  double friction = 0.9;
  double limit_scale = 1.0;

  bool is_wet() const {
    return preset == WeatherPreset::WetNoon || preset == WeatherPreset::WetSunset;
  }
};

Weather sample_weather(Rng& rng);

struct CollisionEvent {
  double time = 0.0;
  int actor_a = 0;
  int actor_b = 0;
  bool involves_ego = false;
};

// Instrumentation counters used by behavior property tests.
struct RuleStats {
  int red_light_crossings = 0;    // entered a junction against a red light
  int solid_crossings = 0;        // lane change over a forbidding marking
  int lane_changes = 0;
};

struct ScenarioLog {
  int scenario_id = 0;
  roadnet::Archetype archetype = roadnet::Archetype::UrbanLow;
  std::uint64_t map_seed = 0;
  Weather weather;
  double fps = kFps;
  std::vector<dataset::FrameRecord> frames;  // grouped by timestep, ego first
  Termination terminated_by = Termination::TimeLimit;
  std::vector<CollisionEvent> collisions;
  RuleStats rule_stats;

  int timestep_count() const;
};

struct SpawnFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scripted spawn used by tests: places one actor at an exact lane position.
struct ScriptedSpawn {
  int lane_id = 0;
  double s = 0.0;
  double speed_kmph = 0.0;
  traffic::ActorProfile profile;
  bool hold_speed = false;
};

struct ScenarioConfig {
  int scenario_id = 0;
  double duration_s = kMaxDuration;
  int n_aggressive = 2;
  int n_cautious = 2;
  traffic::FuzzBounds fuzz;
  double wet_limit_scale = 0.85;
  bool terminate_on_ego_collision = true;
  std::optional<Weather> forced_weather;
  std::vector<ScriptedSpawn> scripted;  // replaces random spawning when set
};

// Runs one scenario at 20 FPS. n_actors counts traffic vehicles; the ego is
// spawned on top of that. Deterministic in (map, rng seed, config).
ScenarioLog run_scenario(const roadnet::RoadMap& map, int n_actors, Rng& rng,
                         const ScenarioConfig& config = {});

struct PooledNeighbor {
  int actor_index = 0;   // index into the actor arrays passed in
  double rel_x = 0.0;    // unsigned lateral offset in the ego frame
  double rel_y = 0.0;    // unsigned longitudinal offset in the ego frame
  double rel_angle = 0.0;  // (0, 360], dead ahead = 90
};

// Actors within 50 m of the ego, excluding the ego itself.
std::vector<PooledNeighbor> pool_neighbors(
    const traffic::KinematicState& ego,
    const std::vector<traffic::KinematicState>& actors, int ego_index);

// Builds the Table-style rows for the ego and its pooled neighbors at time t.
// Skips (with a warning to stderr) any actor whose position resolves off-road.
std::vector<dataset::FrameRecord> annotate_frame(
    double t, int frame, const std::vector<traffic::ActorProfile>& profiles,
    const std::vector<traffic::KinematicState>& states,
    const std::vector<traffic::ControlState>& controls, int ego_index,
    const roadnet::RoadMap& map);

}  // namespace vtrackit::sim
