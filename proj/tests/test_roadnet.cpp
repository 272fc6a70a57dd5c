#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vtrackit/roadnet.hpp"

using namespace vtrackit;
using namespace vtrackit::roadnet;

namespace {

int reachable_count(const RoadMap& map, int start, bool forward) {
  std::vector<char> seen(map.lanes.size(), 0);
  std::queue<int> q;
  q.push(start);
  seen[static_cast<std::size_t>(start)] = 1;
  int n = 0;
  while (!q.empty()) {
    const int id = q.front();
    q.pop();
    ++n;
    const auto& links = forward ? map.lanes[static_cast<std::size_t>(id)].successors
                                : map.lanes[static_cast<std::size_t>(id)].predecessors;
    for (int nx : links) {
      if (!seen[static_cast<std::size_t>(nx)]) {
        seen[static_cast<std::size_t>(nx)] = 1;
        q.push(nx);
      }
    }
  }
  return n;
}

std::pair<double, double> speed_band(Archetype a) {
  if (a == Archetype::UrbanLow || a == Archetype::UrbanHD) return {20.0, 45.0};
  return {20.0, 90.0};
}

}  // namespace

TEST_CASE("generate_map is deterministic per (archetype, seed)") {
  for (int ai = 0; ai < kArchetypeCount; ++ai) {
    const auto arch = static_cast<Archetype>(ai);
    const RoadMap a = generate_map(arch, 42);
    const RoadMap b = generate_map(arch, 42);
    CHECK(serialize_lanes_csv(a) == serialize_lanes_csv(b));
    CHECK(serialize_map_json(a) == serialize_map_json(b));
    const RoadMap c = generate_map(arch, 43);
    CHECK(serialize_lanes_csv(a) != serialize_lanes_csv(c));
  }
}

TEST_CASE("lane references resolve and widths are positive") {
  for (int ai = 0; ai < kArchetypeCount; ++ai) {
    const RoadMap map = generate_map(static_cast<Archetype>(ai), 7);
    const int n = static_cast<int>(map.lanes.size());
    for (const Lane& lane : map.lanes) {
      CHECK(lane.width > 0.0);
      for (int s : lane.successors) {
        REQUIRE(s >= 0);
        REQUIRE(s < n);
      }
      for (int p : lane.predecessors) {
        REQUIRE(p >= 0);
        REQUIRE(p < n);
      }
      if (lane.left_neighbor >= 0)
        CHECK(map.lane(lane.left_neighbor).right_neighbor == lane.id);
    }
  }
}

TEST_CASE("speed limits stay inside the archetype band") {
  for (int ai = 0; ai < kArchetypeCount; ++ai) {
    const auto arch = static_cast<Archetype>(ai);
    const auto [lo, hi] = speed_band(arch);
    for (std::uint64_t seed : {1ull, 9ull, 77ull}) {
      const RoadMap map = generate_map(arch, seed);
      for (const Lane& lane : map.lanes) {
        CHECK(lane.speed_limit_kmph >= lo);
        CHECK(lane.speed_limit_kmph <= hi);
      }
    }
  }
}

TEST_CASE("drivable lane graph is strongly connected") {
  for (int ai = 0; ai < kArchetypeCount; ++ai) {
    for (std::uint64_t seed : {3ull, 42ull}) {
      const RoadMap map = generate_map(static_cast<Archetype>(ai), seed);
      int drivable = 0, start = -1;
      for (const Lane& lane : map.lanes) {
        if (lane.type == LaneType::Shoulder) continue;
        ++drivable;
        if (start < 0) start = lane.id;
      }
      REQUIRE(start >= 0);
      CHECK(reachable_count(map, start, true) == drivable);
      CHECK(reachable_count(map, start, false) == drivable);
    }
  }
}

TEST_CASE("UrbanLow: single-lane roads and exactly three approaches per junction") {
  for (std::uint64_t seed : {42ull, 5ull}) {
    const RoadMap map = generate_map(Archetype::UrbanLow, seed);
    for (const Lane& lane : map.lanes) {
      CHECK(lane.speed_limit_kmph >= 20.0);
      CHECK(lane.speed_limit_kmph <= 45.0);
      if (lane.road_id >= 0) {
        CHECK(lane.left_neighbor == -1);  // one lane per direction
        CHECK(lane.right_neighbor == -1);
      }
    }
    REQUIRE(!map.junctions.empty());
    for (const Junction& jn : map.junctions) {
      std::set<int> roads;
      for (int in : jn.incoming) roads.insert(map.lane(in).road_id);
      CHECK(roads.size() == 3);
    }
  }
}

TEST_CASE("Highway: contains a lane merge and a ramp") {
  for (std::uint64_t seed : {7ull, 21ull}) {
    const RoadMap map = generate_map(Archetype::Highway, seed);

    bool has_merge = false;
    for (const Lane& lane : map.lanes) {
      if (lane.type != LaneType::Driving) continue;
      int feeding = 0;
      for (int p : lane.predecessors)
        if (map.lane(p).type == LaneType::Driving) ++feeding;
      if (feeding >= 2) has_merge = true;
    }
    CHECK(has_merge);

    // a ramp: a slow non-junction lane feeding directly into a fast one
    bool has_ramp = false;
    for (const Lane& lane : map.lanes) {
      if (lane.type != LaneType::Driving || lane.speed_limit_kmph > 55.0) continue;
      for (int s : lane.successors) {
        const Lane& next = map.lane(s);
        if (next.type == LaneType::Driving && next.speed_limit_kmph >= 70.0)
          has_ramp = true;
      }
    }
    CHECK(has_ramp);
  }
}

TEST_CASE("LongHighway: contains a closed loop of junction lanes (roundabout)") {
  const RoadMap map = generate_map(Archetype::LongHighway, 42);
  bool found = false;
  for (const Junction& jn : map.junctions) {
    if (!jn.is_roundabout) continue;
    // follow successors through ring lanes and require a cycle
    std::set<int> ring(jn.internal.begin(), jn.internal.end());
    for (int start : jn.internal) {
      int cur = start;
      for (int steps = 0; steps < 64; ++steps) {
        bool advanced = false;
        for (int s : map.lane(cur).successors) {
          if (ring.count(s)) {
            cur = s;
            advanced = true;
            break;
          }
        }
        if (!advanced) break;
        if (cur == start) {
          found = true;
          break;
        }
      }
      if (found) break;
    }
  }
  CHECK(found);
}

TEST_CASE("query_lane returns the lane itself on every centerline point") {
  const RoadMap map = generate_map(Archetype::Hybrid, 11);
  for (const Lane& lane : map.lanes) {
    const auto& pts = lane.centerline.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      // skip shared endpoints where two lanes legitimately touch
      if (i == 0 || i + 1 == pts.size()) continue;
      const double s = lane.centerline.project(pts[i]).s;
      const double heading = heading_from_dir(lane.centerline.tangent_at(s));
      const auto ctx = query_lane(map, pts[i], heading);
      CHECK(ctx.lane_id == lane.id);
      CHECK(ctx.off_center < 1e-9);
    }
  }
}

TEST_CASE("query_lane throws PositionOffRoad far from any lane") {
  const RoadMap map = generate_map(Archetype::UrbanLow, 42);
  CHECK_THROWS_AS(query_lane(map, {1e5, 1e5}, 90.0), PositionOffRoad);
}

TEST_CASE("query_lane context fields and maneuvers on a hand-built map") {
  const RoadMap map = testutil::two_lane_map();
  // rightmost lane separated from the left lane by a broken line
  const auto right = query_lane(map, {100.0, -3.5}, 90.0);
  CHECK(right.lane_id == 1);
  CHECK(right.possible_maneuvers == Maneuver::Left);
  const auto left = query_lane(map, {100.0, 0.0}, 90.0);
  CHECK(left.possible_maneuvers == Maneuver::Right);
  CHECK(left.off_center == doctest::Approx(0.0));
  const auto offset = query_lane(map, {100.0, -0.8}, 90.0);
  CHECK(offset.lane_id == 0);
  CHECK(offset.off_center == doctest::Approx(0.8));
}

TEST_CASE("solid markings forbid lane changes") {
  const RoadMap both_solid = testutil::two_lane_map(400.0, 50.0, MarkType::Solid);
  CHECK(maneuvers_for(both_solid, both_solid.lane(0)) == Maneuver::None);
  CHECK(maneuvers_for(both_solid, both_solid.lane(1)) == Maneuver::None);

  for (int ai = 0; ai < kArchetypeCount; ++ai) {
    const RoadMap map = generate_map(static_cast<Archetype>(ai), 3);
    for (const Lane& lane : map.lanes) {
      const bool left_blocked = lane.left_mark.type == MarkType::Solid ||
                                lane.left_mark.type == MarkType::SolidSolid;
      const bool right_blocked = lane.right_mark.type == MarkType::Solid ||
                                 lane.right_mark.type == MarkType::SolidSolid;
      if (left_blocked && right_blocked)
        CHECK(maneuvers_for(map, lane) == Maneuver::None);
    }
  }
}

TEST_CASE("junction internal points resolve to Junction lane type") {
  const RoadMap map = generate_map(Archetype::Hybrid, 11);
  REQUIRE(!map.junctions.empty());
  int checked = 0;
  for (const Junction& jn : map.junctions) {
    for (int id : jn.internal) {
      const Lane& lane = map.lane(id);
      const Vec2 mid = lane.centerline.point_at(0.5 * lane.length());
      const double heading =
          heading_from_dir(lane.centerline.tangent_at(0.5 * lane.length()));
      const auto ctx = query_lane(map, mid, heading);
      CHECK(ctx.lane_type == LaneType::Junction);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("signal_state follows the cycle") {
  TrafficLight light;
  light.green_s = 10;
  light.yellow_s = 3;
  light.red_s = 12;
  light.phase_offset = 0;
  CHECK(signal_state(light, 5.0) == SignalState::Green);
  CHECK(signal_state(light, 11.0) == SignalState::Yellow);
  CHECK(signal_state(light, 14.0) == SignalState::Red);
  CHECK(signal_state(light, 25.0) == SignalState::Green);  // period wraps
  CHECK(signal_state(light, 0.0) == SignalState::Green);
}

TEST_CASE("conflicting junction approaches are never green simultaneously") {
  for (int ai = 0; ai < kArchetypeCount; ++ai) {
    const RoadMap map = generate_map(static_cast<Archetype>(ai), 13);
    std::map<int, std::vector<const TrafficLight*>> by_junction;
    for (const auto& light : map.signals)
      by_junction[light.junction_id].push_back(&light);
    for (const auto& [jid, lights] : by_junction) {
      if (lights.size() < 2) continue;
      const double period = lights[0]->period();
      for (double t = 0.0; t < period; t += 0.05) {
        int greens = 0;
        for (const auto* l : lights)
          if (signal_state(*l, t) == SignalState::Green) ++greens;
        REQUIRE(greens <= 1);
      }
    }
  }
}

TEST_CASE("map serialization round trips through the filesystem") {
  const RoadMap map = generate_map(Archetype::UrbanHD, 99);
  const std::string dir = "roadnet_test_out";
  write_map(map, dir);
  std::ifstream lanes(dir + "/lanes.csv");
  std::stringstream ss;
  ss << lanes.rdbuf();
  CHECK(ss.str() == serialize_lanes_csv(map));
}
