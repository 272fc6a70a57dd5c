#include "vtrackit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>

namespace vtrackit::sim {

namespace {

constexpr double kSignalSightDistance = 60.0;
constexpr double kLeadSightDistance = 80.0;
constexpr double kStopLineMargin = 1.0;
constexpr double kJunctionYieldDistance = 18.0;
constexpr double kMergeYieldDistance = 25.0;
constexpr double kYieldTimeout = 8.0;
constexpr double kLaneChangeCooldown = 4.0;

struct ActorRuntime {
  traffic::ActorProfile profile;
  traffic::KinematicState state;
  traffic::ControlState control;
  int lane = -1;
  double s = 0.0;
  int next_lane = -1;
  bool hold_speed = false;

  // per-approach decisions, re-drawn when the controlling lane changes
  int signal_decision_lane = -1;
  bool ignore_signal = false;
  bool committed_stop = false;
  int stop_sign_lane = -1;
  int stop_phase = 0;  // 0 approach, 1 dwelling, 2 cleared
  double dwell_until = 0.0;
  int yield_decision_lane = -1;
  bool ignore_yield = false;
  double yield_since = -1.0;
  int lead_seen = -1;
  bool ignore_lead = false;
  double lane_change_block_until = 0.0;
};

struct Engine {
  const roadnet::RoadMap& map;
  const ScenarioConfig& cfg;
  Weather weather;
  Rng& rng;
  std::vector<ActorRuntime> actors;
  int ego_index = 0;
  RuleStats stats;
  std::map<int, std::set<int>> conflict_adj;  // internal lane -> conflicting lanes

  Engine(const roadnet::RoadMap& m, const ScenarioConfig& c, Rng& r)
      : map(m), cfg(c), rng(r) {
    for (const auto& jn : map.junctions) {
      for (const auto& [a, b] : jn.conflicts) {
        conflict_adj[a].insert(b);
        conflict_adj[b].insert(a);
      }
    }
  }

  double limit_scale() const { return weather.limit_scale; }

  double lane_target_speed(const ActorRuntime& a, int lane_id) const {
    const roadnet::Lane& lane = map.lane(lane_id);
    return traffic::target_speed_kmph(a.profile, lane.speed_limit_kmph, limit_scale(),
                                      lane.max_curvature, weather.friction);
  }

  void choose_next_lane(ActorRuntime& a) {
    if (a.next_lane >= 0) return;
    const auto& succ = map.lane(a.lane).successors;
    if (succ.empty()) {
      a.next_lane = -1;
      return;
    }
    a.next_lane = succ.size() == 1
                      ? succ.front()
                      : succ[rng.uniform_below(succ.size())];
  }

  Vec2 pursuit_target(const ActorRuntime& a) const {
    const roadnet::Lane& lane = map.lane(a.lane);
    const double v = traffic::kmph_to_mps(a.state.speed_kmph);
    const double ld = std::clamp(0.9 * v, 5.0, 22.0);
    const double want = a.s + ld;
    if (want <= lane.length() || a.next_lane < 0)
      return lane.centerline.point_at(std::min(want, lane.length()));
    const roadnet::Lane& next = map.lane(a.next_lane);
    return next.centerline.point_at(std::min(want - lane.length(), next.length()));
  }

  // Nearest leader on the current lane or along the planned successor chain.
  std::optional<traffic::Lead> find_lead(int self, double* gap_out_for_debug = nullptr) {
    ActorRuntime& me = actors[static_cast<std::size_t>(self)];
    const double my_half = 0.5 * me.profile.length_m;
    double best_gap = kLeadSightDistance;
    double best_speed = 0.0;
    int best_id = -1;

    const double len_cur = map.lane(me.lane).length();
    for (std::size_t j = 0; j < actors.size(); ++j) {
      if (static_cast<int>(j) == self) continue;
      const ActorRuntime& other = actors[j];
      const double other_half = 0.5 * other.profile.length_m;
      double gap = -1.0;
      if (other.lane == me.lane && other.s > me.s) {
        gap = other.s - me.s - my_half - other_half;
      } else if (me.next_lane >= 0 && other.lane == me.next_lane) {
        gap = (len_cur - me.s) + other.s - my_half - other_half;
      } else if (me.next_lane >= 0) {
        // one lane further down the plan
        const auto& succ2 = map.lane(me.next_lane).successors;
        if (succ2.size() == 1 && other.lane == succ2.front()) {
          gap = (len_cur - me.s) + map.lane(me.next_lane).length() + other.s -
                my_half - other_half;
        }
      }
      if (gap >= 0.0 && gap < best_gap) {
        best_gap = gap;
        best_speed = other.state.speed_kmph;
        best_id = other.profile.actor_id;
      }
    }

    if (best_id < 0) {
      me.lead_seen = -1;
      return std::nullopt;
    }
    if (best_id != me.lead_seen) {
      me.lead_seen = best_id;
      me.ignore_lead = rng.bernoulli(me.profile.p_ignore_vehicles);
    }
    if (gap_out_for_debug) *gap_out_for_debug = best_gap;
    if (me.ignore_lead) return std::nullopt;
    return traffic::Lead{std::max(0.05, best_gap), best_speed};
  }

  // Merge courtesy: follow whoever reaches a shared successor first.
  std::optional<traffic::Lead> merge_peer(int self) {
    ActorRuntime& me = actors[static_cast<std::size_t>(self)];
    if (me.next_lane < 0) return std::nullopt;
    const double mine = map.lane(me.lane).length() - me.s;
    if (mine > kMergeYieldDistance) return std::nullopt;
    std::optional<traffic::Lead> out;
    for (int pred : map.lane(me.next_lane).predecessors) {
      if (pred == me.lane) continue;
      for (std::size_t j = 0; j < actors.size(); ++j) {
        if (static_cast<int>(j) == self) continue;
        const ActorRuntime& other = actors[j];
        if (other.lane != pred) continue;
        const double theirs = map.lane(pred).length() - other.s;
        if (theirs > kMergeYieldDistance) continue;
        if (theirs < mine - 1.0) {
          const double gap = mine - theirs - 0.5 * me.profile.length_m -
                             0.5 * other.profile.length_m;
          if (!out || gap < out->gap_m)
            out = traffic::Lead{std::max(0.05, gap), other.state.speed_kmph};
        }
      }
    }
    return out;
  }

  // Red/stop line handling. Returns the distance to hold before, if any.
  std::optional<double> stop_line_distance(int self, double t) {
    ActorRuntime& me = actors[static_cast<std::size_t>(self)];
    const roadnet::Lane& lane = map.lane(me.lane);
    const double d_end = lane.length() - me.s;
    std::optional<double> hold;

    if (lane.signal_id >= 0 && d_end < kSignalSightDistance) {
      if (me.signal_decision_lane != lane.id) {
        me.signal_decision_lane = lane.id;
        me.ignore_signal = rng.bernoulli(me.profile.p_ignore_rules);
        me.committed_stop = false;
      }
      if (!me.ignore_signal) {
        const auto state = roadnet::signal_state(
            map.signals[static_cast<std::size_t>(lane.signal_id)], t);
        if (state == roadnet::SignalState::Green) {
          me.committed_stop = false;
        } else {
          const double v = traffic::kmph_to_mps(me.state.speed_kmph);
          const double brake = 0.9 * weather.friction * traffic::kGravity;
          const bool can_stop =
              d_end - kStopLineMargin > v * v / (2.0 * brake);
          if (me.committed_stop || can_stop) {
            me.committed_stop = true;
            hold = std::max(0.05, d_end - kStopLineMargin);
          }
        }
      }
    }

    if (lane.stop_sign_id >= 0 && d_end < kSignalSightDistance) {
      if (me.stop_sign_lane != lane.id) {
        me.stop_sign_lane = lane.id;
        me.stop_phase = rng.bernoulli(me.profile.p_ignore_rules) ? 2 : 0;
      }
      if (me.stop_phase == 0) {
        const double d = std::max(0.05, d_end - kStopLineMargin);
        hold = hold ? std::min(*hold, d) : d;
        if (me.state.speed_kmph < 0.5 && d_end < 4.0) {
          me.stop_phase = 1;
          me.dwell_until = t + 2.0;
        }
      } else if (me.stop_phase == 1) {
        if (t >= me.dwell_until) {
          me.stop_phase = 2;
        } else {
          const double d = std::max(0.05, d_end - kStopLineMargin);
          hold = hold ? std::min(*hold, d) : d;
        }
      }
    }
    return hold;
  }

  // Yield before entering a junction lane while a conflicting one is occupied.
  std::optional<double> junction_yield(int self, double t) {
    ActorRuntime& me = actors[static_cast<std::size_t>(self)];
    if (me.next_lane < 0) return std::nullopt;
    const roadnet::Lane& next = map.lane(me.next_lane);
    if (next.junction_id < 0) return std::nullopt;
    const double d_end = map.lane(me.lane).length() - me.s;
    if (d_end > kJunctionYieldDistance) return std::nullopt;

    auto it = conflict_adj.find(me.next_lane);
    if (it == conflict_adj.end()) return std::nullopt;

    if (me.yield_decision_lane != me.lane) {
      me.yield_decision_lane = me.lane;
      me.ignore_yield = rng.bernoulli(me.profile.p_ignore_vehicles);
      me.yield_since = -1.0;
    }
    if (me.ignore_yield) return std::nullopt;

    bool blocked = false;
    for (std::size_t j = 0; j < actors.size() && !blocked; ++j) {
      if (static_cast<int>(j) == self) continue;
      if (it->second.count(actors[j].lane)) blocked = true;
    }
    if (!blocked) {
      me.yield_since = -1.0;
      return std::nullopt;
    }
    if (me.yield_since < 0) me.yield_since = t;
    if (t - me.yield_since > kYieldTimeout) return std::nullopt;  // creep through
    return std::max(0.05, d_end - kStopLineMargin);
  }

  void maybe_change_lane(int self, int frame, double t) {
    ActorRuntime& me = actors[static_cast<std::size_t>(self)];
    if ((frame + self) % 10 != 0) return;
    if (t < me.lane_change_block_until) return;
    const roadnet::Lane& lane = map.lane(me.lane);
    if (lane.type != roadnet::LaneType::Driving) return;
    if (lane.length() - me.s < 30.0 || me.s < 8.0) return;

    // only bother when stuck behind someone slower
    double lead_gap = 1e9;
    double lead_speed = 1e9;
    for (std::size_t j = 0; j < actors.size(); ++j) {
      if (static_cast<int>(j) == self) continue;
      const ActorRuntime& other = actors[j];
      if (other.lane != me.lane || other.s <= me.s) continue;
      const double gap = other.s - me.s;
      if (gap < lead_gap) {
        lead_gap = gap;
        lead_speed = other.state.speed_kmph;
      }
    }
    if (lead_gap > 30.0 || lead_speed > lane_target_speed(me, me.lane) - 8.0) return;

    const auto maneuvers = roadnet::maneuvers_for(map, lane);
    auto try_side = [&](int neighbor, bool allowed) -> bool {
      if (neighbor < 0) return false;
      if (map.lane(neighbor).type != roadnet::LaneType::Driving) return false;
      bool crossing_solid = false;
      if (!allowed) {
        if (!rng.bernoulli(me.profile.p_ignore_rules)) return false;
        crossing_solid = true;
      }
      const auto proj = map.lane(neighbor).centerline.project(me.state.pos);
      if (proj.dist > 2.5 * map.lane(neighbor).width) return false;
      if (proj.s < 5.0 || proj.s > map.lane(neighbor).length() - 25.0) return false;
      const double margin = std::max(15.0, traffic::kmph_to_mps(me.state.speed_kmph) * 1.2);
      for (std::size_t j = 0; j < actors.size(); ++j) {
        if (static_cast<int>(j) == self) continue;
        if (actors[j].lane != neighbor) continue;
        if (std::abs(actors[j].s - proj.s) < margin) return false;
      }
      me.lane = neighbor;
      me.s = proj.s;
      me.next_lane = -1;
      me.lane_change_block_until = t + kLaneChangeCooldown;
      me.signal_decision_lane = -1;
      me.stop_sign_lane = -1;
      me.stop_phase = 0;
      me.committed_stop = false;
      stats.lane_changes += 1;
      if (crossing_solid) stats.solid_crossings += 1;
      return true;
    };

    const bool left_ok = maneuvers == roadnet::Maneuver::Left ||
                         maneuvers == roadnet::Maneuver::Both;
    const bool right_ok = maneuvers == roadnet::Maneuver::Right ||
                          maneuvers == roadnet::Maneuver::Both;
    if (try_side(lane.left_neighbor, left_ok)) return;
    try_side(lane.right_neighbor, right_ok);
  }

  void step_all(int frame, double t) {
    // lane-change decisions against the pre-step snapshot
    for (std::size_t i = 0; i < actors.size(); ++i)
      if (!actors[i].hold_speed)
        maybe_change_lane(static_cast<int>(i), frame, t);
    for (auto& a : actors) choose_next_lane(a);

    std::vector<traffic::StepContext> ctxs(actors.size());
    for (std::size_t i = 0; i < actors.size(); ++i) {
      ActorRuntime& a = actors[i];
      traffic::StepContext& ctx = ctxs[i];
      const roadnet::Lane& lane = map.lane(a.lane);

      ctx.lane_ctx.lane_id = lane.id;
      ctx.lane_ctx.lane_type = lane.type;
      ctx.lane_ctx.left_mark = lane.left_mark;
      ctx.lane_ctx.right_mark = lane.right_mark;
      ctx.lane_ctx.lane_width = lane.width;
      ctx.lane_ctx.speed_limit_kmph = lane.speed_limit_kmph;
      ctx.lane_ctx.possible_maneuvers = roadnet::maneuvers_for(map, lane);
      ctx.friction = weather.friction;
      ctx.hold_speed = a.hold_speed;
      ctx.pursuit_target = pursuit_target(a);
      ctx.target_speed_kmph = lane_target_speed(a, a.lane);

      if (a.hold_speed) continue;

      ctx.lead = find_lead(static_cast<int>(i));
      if (auto peer = merge_peer(static_cast<int>(i))) {
        if (!ctx.lead || peer->gap_m < ctx.lead->gap_m) ctx.lead = peer;
      }
      auto stop = stop_line_distance(static_cast<int>(i), t);
      auto yield = junction_yield(static_cast<int>(i), t);
      if (stop && yield) ctx.stop_distance_m = std::min(*stop, *yield);
      else if (stop) ctx.stop_distance_m = stop;
      else if (yield) ctx.stop_distance_m = yield;

      if (a.next_lane >= 0) {
        ctx.next_speed_cap_kmph = lane_target_speed(a, a.next_lane);
        ctx.next_cap_distance_m = std::max(0.5, lane.length() - a.s);
      }
    }

    for (std::size_t i = 0; i < actors.size(); ++i) {
      ActorRuntime& a = actors[i];
      auto [control, next] = traffic::step_actor(a.profile, a.state, ctxs[i]);
      a.control = control;
      a.state = next;

      // track progress along the assigned lane and handle transitions
      const roadnet::Lane& lane = map.lane(a.lane);
      const auto proj = lane.centerline.project(a.state.pos);
      a.s = proj.s;
      if (a.s >= lane.length() - 0.15) {
        choose_next_lane(a);
        if (a.next_lane >= 0) {
          if (lane.signal_id >= 0) {
            const auto state = roadnet::signal_state(
                map.signals[static_cast<std::size_t>(lane.signal_id)], t);
            if (state == roadnet::SignalState::Red) stats.red_light_crossings += 1;
          }
          const int entered = a.next_lane;
          a.lane = entered;
          a.s = map.lane(entered).centerline.project(a.state.pos).s;
          a.next_lane = -1;
          a.committed_stop = false;
          a.stop_phase = 0;
          a.yield_since = -1.0;
        }
      }
    }
  }
};

std::vector<dataset::FrameRecord> annotate_actors(
    double t, int frame, const std::vector<ActorRuntime>& actors, int ego_index,
    const roadnet::RoadMap& map);

}  // namespace

const char* to_string(WeatherPreset p) {
  switch (p) {
    case WeatherPreset::ClearNoon: return "ClearNoon";
    case WeatherPreset::ClearSunset: return "ClearSunset";
    case WeatherPreset::WetNoon: return "WetNoon";
    case WeatherPreset::FogNoon: return "FogNoon";
    case WeatherPreset::WetSunset: return "WetSunset";
  }
  return "?";
}

const char* to_string(Termination t) {
  return t == Termination::TimeLimit ? "TimeLimit" : "EgoCollision";
}

std::optional<WeatherPreset> weather_from_string(const std::string& s) {
  for (int i = 0; i < 5; ++i) {
    const auto p = static_cast<WeatherPreset>(i);
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

std::optional<Termination> termination_from_string(const std::string& s) {
  if (s == "TimeLimit") return Termination::TimeLimit;
  if (s == "EgoCollision") return Termination::EgoCollision;
  return std::nullopt;
}

int ScenarioLog::timestep_count() const {
  std::set<int> frames_seen;
  for (const auto& r : frames) frames_seen.insert(r.frame);
  return static_cast<int>(frames_seen.size());
}

Weather sample_weather(Rng& rng) {
  Weather w;
  w.preset = static_cast<WeatherPreset>(rng.uniform_below(5));
  if (w.preset == WeatherPreset::WetNoon || w.preset == WeatherPreset::WetSunset) {
    w.friction = rng.uniform(0.4, 0.6);
    w.limit_scale = 0.85;
  } else {
    w.friction = 0.9;
    w.limit_scale = 1.0;
  }
  return w;
}

std::vector<PooledNeighbor> pool_neighbors(
    const traffic::KinematicState& ego,
    const std::vector<traffic::KinematicState>& actors, int ego_index) {
  std::vector<PooledNeighbor> out;
  const Vec2 fwd = dir_from_heading(ego.heading_deg);
  const Vec2 right = fwd.perp_right();
  for (std::size_t i = 0; i < actors.size(); ++i) {
    if (static_cast<int>(i) == ego_index) continue;
    const Vec2 d = actors[i].pos - ego.pos;
    if (d.norm() > kPoolRadius) continue;
    PooledNeighbor n;
    n.actor_index = static_cast<int>(i);
    const double lon = fwd.dot(d);
    const double lat = right.dot(d);
    n.rel_y = std::abs(lon);
    n.rel_x = std::abs(lat);
    n.rel_angle = normalize_heading(std::atan2(lon, lat) * kDegPerRad);
    out.push_back(n);
  }
  return out;
}

std::vector<dataset::FrameRecord> annotate_frame(
    double t, int frame, const std::vector<traffic::ActorProfile>& profiles,
    const std::vector<traffic::KinematicState>& states,
    const std::vector<traffic::ControlState>& controls, int ego_index,
    const roadnet::RoadMap& map) {
  std::vector<dataset::FrameRecord> out;
  const auto neighbors = pool_neighbors(states[static_cast<std::size_t>(ego_index)],
                                        states, ego_index);

  auto emit = [&](int idx, double rel_angle, double rel_x, double rel_y) {
    const auto& prof = profiles[static_cast<std::size_t>(idx)];
    const auto& st = states[static_cast<std::size_t>(idx)];
    const auto& ctl = controls[static_cast<std::size_t>(idx)];
    roadnet::LaneContext ctx;
    try {
      ctx = roadnet::query_lane(map, st.pos, st.heading_deg);
    } catch (const roadnet::PositionOffRoad&) {
      std::cerr << "warning: actor " << prof.actor_id << " off road at t=" << t
                << ", record skipped\n";
      return;
    }
    dataset::FrameRecord r;
    r.timestamp = t;
    r.frame = frame;
    r.actor_id = prof.actor_id;
    r.actor_type = prof.actor_type;
    r.attr = prof.attr;
    r.color = prof.color;
    r.pos_x = st.pos.x;
    r.pos_y = st.pos.y;
    r.pos_z = 0.0;
    r.heading = st.heading_deg;
    r.extent_length = prof.length_m;
    r.extent_width = prof.width_m;
    r.speed = st.speed_kmph;
    r.accel_x = st.accel_mps2.x;
    r.accel_y = st.accel_mps2.y;
    r.throttle = ctl.throttle;
    r.steer = ctl.steer;
    r.brake = ctl.brake;
    const roadnet::Lane& lane = map.lane(ctx.lane_id);
    r.red_light = 0;
    if (lane.signal_id >= 0 &&
        roadnet::signal_state(map.signals[static_cast<std::size_t>(lane.signal_id)], t) ==
            roadnet::SignalState::Red)
      r.red_light = 1;
    r.rel_angle = rel_angle;
    r.rel_x = rel_x;
    r.rel_y = rel_y;
    r.lane_type = ctx.lane_type;
    r.right_mark = ctx.right_mark;
    r.left_mark = ctx.left_mark;
    r.possible_maneuvers = ctx.possible_maneuvers;
    r.lane_width = ctx.lane_width;
    r.off_center = ctx.off_center;
    out.push_back(std::move(r));
  };

  emit(ego_index, 0.0, 0.0, 0.0);
  for (const auto& n : neighbors)
    emit(n.actor_index, n.rel_angle, n.rel_x, n.rel_y);
  return out;
}

namespace {

std::vector<dataset::FrameRecord> annotate_actors(double t, int frame,
                                                  const std::vector<ActorRuntime>& actors,
                                                  int ego_index,
                                                  const roadnet::RoadMap& map) {
  std::vector<traffic::ActorProfile> profiles;
  std::vector<traffic::KinematicState> states;
  std::vector<traffic::ControlState> controls;
  profiles.reserve(actors.size());
  for (const auto& a : actors) {
    profiles.push_back(a.profile);
    states.push_back(a.state);
    controls.push_back(a.control);
  }
  return annotate_frame(t, frame, profiles, states, controls, ego_index, map);
}

ActorRuntime make_runtime(const roadnet::RoadMap& map, traffic::ActorProfile profile,
                          int lane_id, double s, double speed_kmph, bool hold) {
  ActorRuntime a;
  a.profile = std::move(profile);
  a.lane = lane_id;
  a.s = s;
  a.hold_speed = hold;
  const roadnet::Lane& lane = map.lane(lane_id);
  a.state.pos = lane.centerline.point_at(s);
  a.state.heading_deg = heading_from_dir(lane.centerline.tangent_at(s));
  a.state.speed_kmph = speed_kmph;
  return a;
}

}  // namespace

ScenarioLog run_scenario(const roadnet::RoadMap& map, int n_actors, Rng& rng,
                         const ScenarioConfig& config) {
  ScenarioLog log;
  log.scenario_id = config.scenario_id;
  log.archetype = map.archetype;
  log.map_seed = map.seed;
  log.fps = kFps;
  log.weather = config.forced_weather ? *config.forced_weather : sample_weather(rng);

  Engine eng(map, config, rng);
  eng.weather = log.weather;

  if (!config.scripted.empty()) {
    for (std::size_t i = 0; i < config.scripted.size(); ++i) {
      const ScriptedSpawn& sp = config.scripted[i];
      eng.actors.push_back(make_runtime(map, sp.profile, sp.lane_id, sp.s,
                                        sp.speed_kmph, sp.hold_speed));
      if (sp.profile.actor_type == traffic::ActorType::Ego)
        eng.ego_index = static_cast<int>(i);
    }
  } else {
    auto slots = roadnet::spawn_points(map);
    if (static_cast<int>(slots.size()) < n_actors + 1)
      throw SpawnFailure("need " + std::to_string(n_actors + 1) + " spawn points, map has " +
                         std::to_string(slots.size()));
    rng.shuffle(slots);
    // cluster traffic near the ego spawn so the 50 m pool stays populated
    {
      const Vec2 ego_pos =
          map.lane(slots[0].lane_id).centerline.point_at(slots[0].s);
      std::stable_partition(slots.begin() + 1, slots.end(),
                            [&](const roadnet::SpawnPoint& sp) {
                              return map.lane(sp.lane_id)
                                         .centerline.point_at(sp.s)
                                         .dist(ego_pos) < 150.0;
                            });
    }

    std::vector<traffic::Temperament> temperaments(static_cast<std::size_t>(n_actors),
                                                   traffic::Temperament::Normal);
    for (int i = 0; i < std::min(config.n_aggressive, n_actors); ++i)
      temperaments[static_cast<std::size_t>(i)] = traffic::Temperament::Aggressive;
    for (int i = config.n_aggressive;
         i < std::min(config.n_aggressive + config.n_cautious, n_actors); ++i)
      temperaments[static_cast<std::size_t>(i)] = traffic::Temperament::Cautious;
    rng.shuffle(temperaments);

    std::vector<Vec2> taken;
    std::size_t slot_idx = 0;
    auto next_slot = [&]() -> roadnet::SpawnPoint {
      while (slot_idx < slots.size()) {
        const auto sp = slots[slot_idx++];
        const Vec2 pos = map.lane(sp.lane_id).centerline.point_at(sp.s);
        bool clear = true;
        for (const Vec2& p : taken) {
          if (p.dist(pos) < 9.0) {
            clear = false;
            break;
          }
        }
        if (clear) {
          taken.push_back(pos);
          return sp;
        }
      }
      throw SpawnFailure("could not place all actors with safe spacing");
    };

    for (int i = 0; i <= n_actors; ++i) {
      const bool is_ego = i == 0;
      traffic::ActorProfile prof = traffic::sample_actor_profile(
          rng, config.fuzz,
          is_ego ? traffic::Temperament::Normal
                 : temperaments[static_cast<std::size_t>(i - 1)],
          is_ego ? traffic::ActorType::Ego : traffic::ActorType::Traffic, i);
      const auto sp = next_slot();
      const roadnet::Lane& lane = map.lane(sp.lane_id);
      double v0 = traffic::target_speed_kmph(prof, lane.speed_limit_kmph,
                                             log.weather.limit_scale,
                                             lane.max_curvature, log.weather.friction);
      double speed = rng.uniform(0.5, 0.85) * v0;
      // never spawn unable to stop for a red line ahead
      if (lane.signal_id >= 0 || lane.stop_sign_id >= 0) {
        const double d = lane.length() - sp.s - kStopLineMargin;
        const double brake = 0.8 * 0.9 * log.weather.friction * traffic::kGravity;
        const double cap = traffic::mps_to_kmph(std::sqrt(std::max(0.0, 2.0 * brake * d)));
        speed = std::min(speed, cap);
      }
      eng.actors.push_back(make_runtime(map, std::move(prof), sp.lane_id, sp.s, speed, false));
      if (is_ego) eng.ego_index = 0;
    }
  }

  const int max_frame = static_cast<int>(std::lround(config.duration_s / kDt));
  std::set<std::pair<int, int>> contacts;

  for (int frame = 0;; ++frame) {
    const double t = frame * kDt;
    auto records = annotate_actors(t, frame, eng.actors, eng.ego_index, map);
    log.frames.insert(log.frames.end(), records.begin(), records.end());

    // collision scan on the current poses
    bool ego_hit = false;
    std::set<std::pair<int, int>> now;
    for (std::size_t i = 0; i < eng.actors.size(); ++i) {
      for (std::size_t j = i + 1; j < eng.actors.size(); ++j) {
        const auto& a = eng.actors[i];
        const auto& b = eng.actors[j];
        if (a.state.pos.dist(b.state.pos) > 12.0) continue;
        Obb oa{a.state.pos, dir_from_heading(a.state.heading_deg),
               0.5 * a.profile.length_m, 0.5 * a.profile.width_m};
        Obb ob{b.state.pos, dir_from_heading(b.state.heading_deg),
               0.5 * b.profile.length_m, 0.5 * b.profile.width_m};
        if (!obb_overlap(oa, ob)) continue;
        const auto key = std::make_pair(static_cast<int>(i), static_cast<int>(j));
        now.insert(key);
        const bool involves_ego = static_cast<int>(i) == eng.ego_index ||
                                  static_cast<int>(j) == eng.ego_index;
        if (!contacts.count(key)) {
          CollisionEvent ev;
          ev.time = t;
          ev.actor_a = a.profile.actor_id;
          ev.actor_b = b.profile.actor_id;
          ev.involves_ego = involves_ego;
          log.collisions.push_back(ev);
        }
        if (involves_ego) ego_hit = true;
      }
    }
    contacts = std::move(now);

    if (ego_hit && config.terminate_on_ego_collision) {
      log.terminated_by = Termination::EgoCollision;
      break;
    }
    if (frame >= max_frame) {
      log.terminated_by = Termination::TimeLimit;
      break;
    }
    eng.step_all(frame, t);
  }

  log.rule_stats = eng.stats;
  return log;
}

}  // namespace vtrackit::sim
