#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtrackit/geometry.hpp"

namespace vtrackit::roadnet {

enum class Archetype {
  UrbanLow,
  UrbanHighway,
  Highway,
  Hybrid,
  LongHighway,
  UrbanHD,
};

const char* to_string(Archetype a);
std::optional<Archetype> archetype_from_string(const std::string& s);
inline constexpr int kArchetypeCount = 6;

enum class LaneType { Driving, Junction, Shoulder };
enum class MarkType { Solid, Broken, SolidSolid, None };
enum class MarkColor { White, Yellow };
enum class Maneuver { Left, Right, Both, None };

const char* to_string(LaneType t);
const char* to_string(MarkType t);   // "NONE" for None, matching the schema
const char* to_string(MarkColor c);
const char* to_string(Maneuver m);

struct LaneMarking {
  MarkType type = MarkType::None;
  MarkColor color = MarkColor::White;
};

struct Lane {
  int id = -1;
  Polyline centerline;
  double width = 3.5;
  LaneType type = LaneType::Driving;
  LaneMarking left_mark;
  LaneMarking right_mark;
  double speed_limit_kmph = 30.0;
  std::vector<int> successors;
  std::vector<int> predecessors;
  int left_neighbor = -1;   // same-direction only
  int right_neighbor = -1;  // same-direction driving lane only
  int junction_id = -1;
  int signal_id = -1;     // light at the end of this lane
  int stop_sign_id = -1;  // stop sign at the end of this lane
  int road_id = -1;       // -1 for connectors and junction lanes
  double max_curvature = 0.0;

  double length() const { return centerline.length(); }
};

struct Junction {
  int id = -1;
  Vec2 center;
  double radius = 0.0;
  bool is_roundabout = false;
  std::vector<int> incoming;  // approach lanes ending at this junction
  std::vector<int> internal;
  std::vector<std::pair<int, int>> conflicts;  // internal lane pairs that cross/merge
};

struct TrafficLight {
  int id = -1;
  std::vector<int> controlled_lanes;
  double green_s = 10.0;
  double yellow_s = 3.0;
  double red_s = 13.0;
  double phase_offset = 0.0;
  int junction_id = -1;
  int conflict_group = 0;  // lights at one junction with different groups conflict

  double period() const { return green_s + yellow_s + red_s; }
};

struct StopSign {
  int id = -1;
  std::vector<int> controlled_lanes;
  int junction_id = -1;
};

struct SpawnPoint {
  int lane_id = -1;
  double s = 0.0;
};

struct RoadMap {
  Archetype archetype = Archetype::UrbanLow;
  std::uint64_t seed = 0;
  std::vector<Lane> lanes;  // lane id == index
  std::vector<Junction> junctions;
  std::vector<TrafficLight> signals;
  std::vector<StopSign> stop_signs;
  double max_lane_width = 3.5;

  const Lane& lane(int id) const { return lanes.at(static_cast<std::size_t>(id)); }

  // Grid index over lane segments, built once at generation time.
  struct GridIndex {
    double cell = 25.0;
    Vec2 origin;
    int nx = 0, ny = 0;
    std::vector<std::vector<int>> cells;  // lane ids, deduplicated, sorted
  };
  GridIndex index;
};

enum class SignalState { Green, Yellow, Red };
const char* to_string(SignalState s);

struct LaneContext {
  int lane_id = -1;
  LaneType lane_type = LaneType::Driving;
  LaneMarking left_mark;
  LaneMarking right_mark;
  double lane_width = 3.5;
  double off_center = 0.0;
  Maneuver possible_maneuvers = Maneuver::None;
  double speed_limit_kmph = 30.0;
  // projection internals, used by the simulation
  double s = 0.0;
  double lateral_signed = 0.0;
};

struct PositionOffRoad : std::runtime_error {
  PositionOffRoad(double x, double y)
      : std::runtime_error("position off road: (" + std::to_string(x) + ", " +
                           std::to_string(y) + ")") {}
};

// Deterministic map construction; identical (archetype, seed) gives an
// identical map down to serialization bytes.
RoadMap generate_map(Archetype archetype, std::uint64_t seed);

// Recomputes cached fields (sorted links, curvature, max width, spatial
// index). generate_map calls this; hand-built maps must call it too.
void finalize_map(RoadMap& map);

// Nearest direction-compatible lane at a position. Ties broken by distance,
// then heading mismatch, then lower lane id. Throws PositionOffRoad when no
// lane lies within 2x the map's widest lane.
LaneContext query_lane(const RoadMap& map, const Vec2& position, double heading_deg);

SignalState signal_state(const TrafficLight& light, double t_seconds);

// Lane-change permissions from markings plus neighbor existence.
Maneuver maneuvers_for(const RoadMap& map, const Lane& lane);

// Deterministically ordered spawn slots on driving lanes.
std::vector<SpawnPoint> spawn_points(const RoadMap& map);

// lanes.csv + map.json, canonical bytes.
std::string serialize_lanes_csv(const RoadMap& map);
std::string serialize_map_json(const RoadMap& map);
void write_map(const RoadMap& map, const std::string& dir);

}  // namespace vtrackit::roadnet
