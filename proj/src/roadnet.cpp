#include "vtrackit/roadnet.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "vtrackit/rng.hpp"

namespace vtrackit::roadnet {

namespace {

constexpr double kLaneWidth = 3.5;
constexpr double kShoulderWidth = 2.5;
constexpr double kMedianHalfGap = 0.5;
constexpr double kTaperLength = 30.0;
constexpr double kRingRadius = 13.0;

std::string fmt_double(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

const char* to_string(Archetype a) {
  switch (a) {
    case Archetype::UrbanLow: return "UrbanLow";
    case Archetype::UrbanHighway: return "UrbanHighway";
    case Archetype::Highway: return "Highway";
    case Archetype::Hybrid: return "Hybrid";
    case Archetype::LongHighway: return "LongHighway";
    case Archetype::UrbanHD: return "UrbanHD";
  }
  return "?";
}

std::optional<Archetype> archetype_from_string(const std::string& s) {
  for (int i = 0; i < kArchetypeCount; ++i) {
    const auto a = static_cast<Archetype>(i);
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

const char* to_string(LaneType t) {
  switch (t) {
    case LaneType::Driving: return "Driving";
    case LaneType::Junction: return "Junction";
    case LaneType::Shoulder: return "Shoulder";
  }
  return "?";
}

const char* to_string(MarkType t) {
  switch (t) {
    case MarkType::Solid: return "Solid";
    case MarkType::Broken: return "Broken";
    case MarkType::SolidSolid: return "SolidSolid";
    case MarkType::None: return "NONE";
  }
  return "?";
}

const char* to_string(MarkColor c) {
  return c == MarkColor::White ? "White" : "Yellow";
}

const char* to_string(Maneuver m) {
  switch (m) {
    case Maneuver::Left: return "Left";
    case Maneuver::Right: return "Right";
    case Maneuver::Both: return "Both";
    case Maneuver::None: return "None";
  }
  return "?";
}

const char* to_string(SignalState s) {
  switch (s) {
    case SignalState::Green: return "Green";
    case SignalState::Yellow: return "Yellow";
    case SignalState::Red: return "Red";
  }
  return "?";
}

SignalState signal_state(const TrafficLight& light, double t_seconds) {
  const double period = light.period();
  double local = std::fmod(t_seconds - light.phase_offset, period);
  if (local < 0) local += period;
  if (local < light.green_s) return SignalState::Green;
  if (local < light.green_s + light.yellow_s) return SignalState::Yellow;
  return SignalState::Red;
}

Maneuver maneuvers_for(const RoadMap& map, const Lane& lane) {
  if (lane.type != LaneType::Driving) return Maneuver::None;
  auto neighbor_ok = [&](int id) {
    return id >= 0 && map.lane(id).type == LaneType::Driving;
  };
  const bool left = lane.left_mark.type == MarkType::Broken && neighbor_ok(lane.left_neighbor);
  const bool right = lane.right_mark.type == MarkType::Broken && neighbor_ok(lane.right_neighbor);
  if (left && right) return Maneuver::Both;
  if (left) return Maneuver::Left;
  if (right) return Maneuver::Right;
  return Maneuver::None;
}

// ---------------------------------------------------------------------------
// Blueprint: a sparse node/edge sketch compiled into the lane-level map.
// ---------------------------------------------------------------------------

namespace {

enum class NodeKind { Corner, Joint, Signal, Stop, Roundabout };

struct BNode {
  Vec2 pos;
  NodeKind kind = NodeKind::Corner;
};

struct BEdge {
  int a = -1, b = -1;
  int lanes_fwd = 1;   // direction a -> b
  int lanes_back = 1;  // 0 for one-way
  double speed_kmph = 30.0;
  bool shoulder = false;                 // parking/shoulder strip on each side
  MarkType center_mark = MarkType::SolidSolid;
  std::vector<Vec2> via;                 // optional interior axis points
};

struct Blueprint {
  std::vector<BNode> nodes;
  std::vector<BEdge> edges;

  int node(double x, double y, NodeKind k) {
    nodes.push_back({{x, y}, k});
    return static_cast<int>(nodes.size()) - 1;
  }
  int edge(int a, int b, int lf, int lb, double speed) {
    BEdge e;
    e.a = a;
    e.b = b;
    e.lanes_fwd = lf;
    e.lanes_back = lb;
    e.speed_kmph = speed;
    edges.push_back(e);
    return static_cast<int>(edges.size()) - 1;
  }
};

// Per-direction lane group of a compiled edge at one node.
struct DirLanes {
  std::vector<int> lanes;  // innermost first
};

struct CompiledEdge {
  int id = -1;
  Vec2 a_trim, b_trim;     // axis endpoints after node trims
  Vec2 dir;                // a -> b
  std::vector<int> fwd;    // innermost first
  std::vector<int> back;
  const BEdge* src = nullptr;
};

struct IncidentRef {
  int edge = -1;
  bool forward = true;  // true when the edge's a-end sits at this node
};

double half_extent(const BEdge& e) {
  const int widest = std::max(e.lanes_fwd, e.lanes_back);
  double w = widest * kLaneWidth + (e.lanes_back > 0 ? kMedianHalfGap : 0.0);
  if (e.shoulder) w += kShoulderWidth;
  return w;
}

class Builder {
 public:
  Builder(Archetype archetype, std::uint64_t seed, Rng& rng)
      : rng_(rng) {
    map_.archetype = archetype;
    map_.seed = seed;
  }

  RoadMap compile(const Blueprint& bp);

 private:
  int new_lane(Lane lane) {
    lane.id = static_cast<int>(map_.lanes.size());
    map_.lanes.push_back(std::move(lane));
    return map_.lanes.back().id;
  }

  void link(int from, int to) {
    map_.lanes[from].successors.push_back(to);
    map_.lanes[to].predecessors.push_back(from);
  }

  // Taper/turn connector between a lane end and a lane start.
  int connector(int from, int to, LaneType type, int junction_id, double speed) {
    const Lane& lf = map_.lanes[from];
    const Lane& lt = map_.lanes[to];
    const Vec2 p0 = lf.centerline.points().back();
    const Vec2 p1 = lt.centerline.points().front();
    const Vec2 d0 = lf.centerline.tangent_at(lf.length());
    const Vec2 d1 = lt.centerline.tangent_at(0.0);
    const double chord = p0.dist(p1);
    const double k = std::max(2.0, 0.45 * chord);
    const int n = std::clamp(static_cast<int>(chord / 2.0) + 2, 6, 40);
    Lane lane;
    lane.centerline = Polyline(sample_bezier(p0, p0 + d0 * k, p1 - d1 * k, p1, n));
    lane.type = type;
    lane.width = std::min(lf.width, lt.width);
    lane.speed_limit_kmph = speed;
    lane.left_mark = {MarkType::None, MarkColor::White};
    lane.right_mark = {MarkType::None, MarkColor::White};
    lane.junction_id = junction_id;
    const int id = new_lane(std::move(lane));
    link(from, id);
    link(id, to);
    return id;
  }

  void compile_edges(const Blueprint& bp);
  void compile_node(const Blueprint& bp, int node_id);
  void retime_lane(int lane_id, double s0, double s1);
  void connect_through(const std::vector<int>& in, const std::vector<int>& out,
                       double speed);
  void compile_junction(const Blueprint& bp, int node_id);
  void compile_roundabout(const Blueprint& bp, int node_id);

  std::vector<IncidentRef> incidents(const Blueprint& bp, int node_id) const {
    std::vector<IncidentRef> out;
    for (std::size_t i = 0; i < bp.edges.size(); ++i) {
      if (bp.edges[i].a == node_id) out.push_back({static_cast<int>(i), true});
      if (bp.edges[i].b == node_id) out.push_back({static_cast<int>(i), false});
    }
    return out;
  }

  // Incoming lanes arriving at the node (innermost first) and the direction
  // they arrive from.
  std::vector<int> lanes_into(const IncidentRef& ref) const {
    const CompiledEdge& ce = compiled_[static_cast<std::size_t>(ref.edge)];
    return ref.forward ? ce.back : ce.fwd;
  }
  std::vector<int> lanes_out_of(const IncidentRef& ref) const {
    const CompiledEdge& ce = compiled_[static_cast<std::size_t>(ref.edge)];
    return ref.forward ? ce.fwd : ce.back;
  }
  Vec2 dir_into_node(const IncidentRef& ref) const {
    const CompiledEdge& ce = compiled_[static_cast<std::size_t>(ref.edge)];
    if (!ce.src->via.empty()) {
      // use the axis tangent at the node end
      const Lane* any = nullptr;
      if (ref.forward && !ce.back.empty()) any = &map_.lanes[ce.back.front()];
      if (!ref.forward && !ce.fwd.empty()) any = &map_.lanes[ce.fwd.front()];
      if (any) return any->centerline.tangent_at(any->length());
    }
    return ref.forward ? ce.dir * -1.0 : ce.dir;
  }

  Rng& rng_;
  RoadMap map_;
  std::vector<CompiledEdge> compiled_;
  std::vector<double> node_trim_;
};

void Builder::compile_edges(const Blueprint& bp) {
  node_trim_.assign(bp.nodes.size(), 0.0);
  for (std::size_t n = 0; n < bp.nodes.size(); ++n) {
    const BNode& node = bp.nodes[n];
    double ext = 0.0;
    for (const auto& ref : incidents(bp, static_cast<int>(n)))
      ext = std::max(ext, half_extent(bp.edges[static_cast<std::size_t>(ref.edge)]));
    switch (node.kind) {
      case NodeKind::Joint: node_trim_[n] = 0.0; break;
      case NodeKind::Corner: node_trim_[n] = ext + 8.0; break;
      case NodeKind::Signal:
      case NodeKind::Stop: node_trim_[n] = ext + 6.0; break;
      case NodeKind::Roundabout: node_trim_[n] = kRingRadius + 12.0; break;
    }
  }

  for (std::size_t ei = 0; ei < bp.edges.size(); ++ei) {
    const BEdge& e = bp.edges[ei];
    CompiledEdge ce;
    ce.id = static_cast<int>(ei);
    ce.src = &e;
    const Vec2 pa = bp.nodes[static_cast<std::size_t>(e.a)].pos;
    const Vec2 pb = bp.nodes[static_cast<std::size_t>(e.b)].pos;

    // axis polyline with optional via points, trimmed at both nodes
    std::vector<Vec2> axis;
    axis.push_back(pa);
    for (const Vec2& v : e.via) axis.push_back(v);
    axis.push_back(pb);
    Polyline axis_line(axis);
    const double ta = node_trim_[static_cast<std::size_t>(e.a)];
    const double tb = node_trim_[static_cast<std::size_t>(e.b)];
    const double usable = axis_line.length() - ta - tb;
    assert(usable > 10.0 && "edge too short for node trims");

    const int samples = std::max(2, static_cast<int>(usable / 10.0) + 1);
    std::vector<Vec2> axis_pts;
    std::vector<Vec2> axis_norm;  // right-hand normal of travel a->b
    for (int i = 0; i < samples; ++i) {
      const double s = ta + usable * i / (samples - 1);
      axis_pts.push_back(axis_line.point_at(s));
      axis_norm.push_back(axis_line.tangent_at(s).perp_right());
    }
    ce.a_trim = axis_pts.front();
    ce.b_trim = axis_pts.back();
    ce.dir = (pb - pa).normalized();

    const bool two_way = e.lanes_back > 0;
    auto offset_of = [&](int idx, int count) {
      if (two_way) return kMedianHalfGap + kLaneWidth * (idx + 0.5);
      return -0.5 * kLaneWidth * count + kLaneWidth * (idx + 0.5);
    };
    auto build_dir = [&](int count, bool forward) {
      std::vector<int> ids;
      for (int i = 0; i < count; ++i) {
        const double off = offset_of(i, count);
        std::vector<Vec2> pts;
        pts.reserve(axis_pts.size());
        if (forward) {
          for (std::size_t k = 0; k < axis_pts.size(); ++k)
            pts.push_back(axis_pts[k] + axis_norm[k] * off);
        } else {
          for (std::size_t k = axis_pts.size(); k-- > 0;)
            pts.push_back(axis_pts[k] - axis_norm[k] * off);
        }
        Lane lane;
        lane.centerline = Polyline(std::move(pts));
        lane.type = LaneType::Driving;
        lane.width = kLaneWidth;
        lane.speed_limit_kmph = e.speed_kmph;
        lane.road_id = ce.id;
        // markings: innermost shares the center line, dividers are broken
        if (i == 0) {
          lane.left_mark = two_way ? LaneMarking{e.center_mark, MarkColor::Yellow}
                                   : LaneMarking{MarkType::Solid, MarkColor::White};
        } else {
          lane.left_mark = {MarkType::Broken, MarkColor::White};
        }
        lane.right_mark = (i == count - 1)
                              ? LaneMarking{MarkType::Solid, MarkColor::White}
                              : LaneMarking{MarkType::Broken, MarkColor::White};
        ids.push_back(new_lane(std::move(lane)));
      }
      // same-direction neighbors: index 0 is innermost (driver's left)
      for (int i = 0; i < count; ++i) {
        map_.lanes[ids[static_cast<std::size_t>(i)]].left_neighbor = i > 0 ? ids[static_cast<std::size_t>(i - 1)] : -1;
        map_.lanes[ids[static_cast<std::size_t>(i)]].right_neighbor =
            i + 1 < count ? ids[static_cast<std::size_t>(i + 1)] : -1;
      }
      // optional shoulder strip outside the outermost driving lane
      if (e.shoulder && count > 0) {
        const double off = offset_of(count - 1, count) + 0.5 * (kLaneWidth + kShoulderWidth);
        std::vector<Vec2> pts;
        if (forward) {
          for (std::size_t k = 0; k < axis_pts.size(); ++k)
            pts.push_back(axis_pts[k] + axis_norm[k] * off);
        } else {
          for (std::size_t k = axis_pts.size(); k-- > 0;)
            pts.push_back(axis_pts[k] - axis_norm[k] * off);
        }
        Lane sh;
        sh.centerline = Polyline(std::move(pts));
        sh.type = LaneType::Shoulder;
        sh.width = kShoulderWidth;
        sh.speed_limit_kmph = e.speed_kmph;
        sh.road_id = ce.id;
        sh.left_mark = {MarkType::Solid, MarkColor::White};
        sh.right_mark = {MarkType::None, MarkColor::White};
        new_lane(std::move(sh));
      }
      return ids;
    };

    ce.fwd = build_dir(e.lanes_fwd, true);
    if (two_way) ce.back = build_dir(e.lanes_back, false);
    compiled_.push_back(std::move(ce));
  }
}

// Direct through-links between aligned lanes plus taper connectors for lane
// drops (merges) and added lanes (expansions).
// Trims a lane to [s0, s1] by resampling; start/end points stay exact when
// s0 == 0 / s1 == length.
void Builder::retime_lane(int lane_id, double s0, double s1) {
  Polyline& line = map_.lanes[static_cast<std::size_t>(lane_id)].centerline;
  const double span = s1 - s0;
  std::vector<Vec2> resampled;
  const int n = std::max(2, static_cast<int>(span / 8.0) + 1);
  resampled.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    resampled.push_back(line.point_at(s0 + span * k / (n - 1)));
  line = Polyline(std::move(resampled));
}

void Builder::connect_through(const std::vector<int>& in,
                              const std::vector<int>& out, double speed) {
  if (in.empty() || out.empty()) return;
  const int ni = static_cast<int>(in.size());
  const int no = static_cast<int>(out.size());
  for (int i = 0; i < ni; ++i) {
    const int from_id = in[static_cast<std::size_t>(i)];
    const int to_id = out[static_cast<std::size_t>(std::min(i, no - 1))];
    const Vec2 pe = map_.lanes[static_cast<std::size_t>(from_id)].centerline.points().back();
    const Vec2 ps = map_.lanes[static_cast<std::size_t>(to_id)].centerline.points().front();
    if (pe.dist(ps) < 0.01) {
      link(from_id, to_id);
    } else {
      if (i >= no) {
        // merging lane: retract its end so the taper has room
        const double len = map_.lanes[static_cast<std::size_t>(from_id)].length();
        retime_lane(from_id, 0.0, std::max(5.0, len - kTaperLength));
      }
      connector(from_id, to_id, LaneType::Driving, -1, speed);
    }
  }
  // expansion lanes fan out from the outermost incoming lane
  for (int j = ni; j < no; ++j) {
    const int to_id = out[static_cast<std::size_t>(j)];
    const int from_id = in[static_cast<std::size_t>(ni - 1)];
    const double len = map_.lanes[static_cast<std::size_t>(to_id)].length();
    retime_lane(to_id, std::min(kTaperLength, len - 5.0), len);
    connector(from_id, to_id, LaneType::Driving, -1,
              map_.lanes[static_cast<std::size_t>(from_id)].speed_limit_kmph);
  }
}

void Builder::compile_node(const Blueprint& bp, int node_id) {
  const BNode& node = bp.nodes[static_cast<std::size_t>(node_id)];
  const auto refs = incidents(bp, node_id);
  if (refs.empty()) return;

  switch (node.kind) {
    case NodeKind::Roundabout:
      compile_roundabout(bp, node_id);
      return;
    case NodeKind::Signal:
    case NodeKind::Stop:
      compile_junction(bp, node_id);
      return;
    default:
      break;
  }

  // Joint / Corner: pick the two most anti-parallel edges as the through
  // road; anything else is a ramp attachment.
  int main_a = 0, main_b = -1;
  double best = 2.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (std::size_t j = i + 1; j < refs.size(); ++j) {
      const double d = dir_into_node(refs[i]).dot(dir_into_node(refs[j]));
      if (d < best) {
        best = d;
        main_a = static_cast<int>(i);
        main_b = static_cast<int>(j);
      }
    }
  }

  if (main_b >= 0) {
    const IncidentRef& ra = refs[static_cast<std::size_t>(main_a)];
    const IncidentRef& rb = refs[static_cast<std::size_t>(main_b)];
    const double spd = std::min(bp.edges[static_cast<std::size_t>(ra.edge)].speed_kmph,
                                bp.edges[static_cast<std::size_t>(rb.edge)].speed_kmph);
    connect_through(lanes_into(ra), lanes_out_of(rb), spd);
    connect_through(lanes_into(rb), lanes_out_of(ra), spd);
  }

  // ramp attachments
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (static_cast<int>(i) == main_a || static_cast<int>(i) == main_b) continue;
    const IncidentRef& ramp = refs[i];
    const double ramp_speed = bp.edges[static_cast<std::size_t>(ramp.edge)].speed_kmph;
    const auto ramp_in = lanes_into(ramp);
    const auto ramp_out = lanes_out_of(ramp);
    if (!ramp_in.empty()) {
      // on-ramp: merge into the outermost lane of the best-aligned outgoing main
      const Vec2 d_ramp = dir_into_node(ramp) * -1.0;  // travel direction at node
      int pick = -1;
      double align = -2.0;
      for (int m : {main_a, main_b}) {
        if (m < 0) continue;
        const auto outs = lanes_out_of(refs[static_cast<std::size_t>(m)]);
        if (outs.empty()) continue;
        const Lane& probe = map_.lanes[outs.back()];
        const double a = d_ramp.dot(probe.centerline.tangent_at(0.0));
        if (a > align) {
          align = a;
          pick = outs.back();
        }
      }
      if (pick >= 0) {
        const int from_id = ramp_in.back();
        const double len = map_.lanes[static_cast<std::size_t>(from_id)].length();
        retime_lane(from_id, 0.0, std::max(5.0, len - 25.0));
        connector(from_id, pick, LaneType::Driving, -1, ramp_speed);
      }
    }
    if (!ramp_out.empty()) {
      // off-ramp: exit connector from the best-aligned incoming main outer lane
      const Lane& to = map_.lanes[ramp_out.back()];
      const Vec2 d_out = to.centerline.tangent_at(0.0);
      int pick = -1;
      double align = -2.0;
      for (int m : {main_a, main_b}) {
        if (m < 0) continue;
        const auto ins = lanes_into(refs[static_cast<std::size_t>(m)]);
        if (ins.empty()) continue;
        const Lane& probe = map_.lanes[ins.back()];
        const Vec2 d_in = probe.centerline.tangent_at(probe.length());
        // exits leave to the right of travel
        if (d_in.cross(d_out) > 0.2) continue;
        const double a = d_in.dot(d_out);
        if (a > align) {
          align = a;
          pick = ins.back();
        }
      }
      if (pick >= 0) {
        const int to_id = ramp_out.back();
        const double len = map_.lanes[static_cast<std::size_t>(to_id)].length();
        retime_lane(to_id, std::min(25.0, len - 5.0), len);
        connector(pick, to_id, LaneType::Driving, -1, ramp_speed);
      }
    }
  }
}

void Builder::compile_junction(const Blueprint& bp, int node_id) {
  const BNode& node = bp.nodes[static_cast<std::size_t>(node_id)];
  const auto refs = incidents(bp, node_id);

  Junction jn;
  jn.id = static_cast<int>(map_.junctions.size());
  jn.center = node.pos;
  jn.radius = node_trim_[static_cast<std::size_t>(node_id)];

  // Turn connectors between distinct edges. The pairing covers every
  // incoming lane and every outgoing lane of each edge pair, so the lane
  // graph stays strongly connected across mismatched lane counts.
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto in_lanes = lanes_into(refs[i]);
    for (int lane_id : in_lanes) jn.incoming.push_back(lane_id);
    for (std::size_t j = 0; j < refs.size(); ++j) {
      if (i == j) continue;
      const auto out_lanes = lanes_out_of(refs[j]);
      if (out_lanes.empty() || in_lanes.empty()) continue;
      std::set<std::pair<int, int>> pairs;
      for (std::size_t li = 0; li < in_lanes.size(); ++li)
        pairs.insert({in_lanes[li], out_lanes[std::min(li, out_lanes.size() - 1)]});
      for (std::size_t lo = 0; lo < out_lanes.size(); ++lo)
        pairs.insert({in_lanes[std::min(lo, in_lanes.size() - 1)], out_lanes[lo]});
      for (const auto& [from, to] : pairs) {
        const double spd =
            std::min(map_.lanes[static_cast<std::size_t>(from)].speed_limit_kmph,
                     map_.lanes[static_cast<std::size_t>(to)].speed_limit_kmph);
        const int c = connector(from, to, LaneType::Junction, jn.id, spd);
        jn.internal.push_back(c);
      }
    }
  }

  // conflicts: crossing paths or a shared entry into the same lane
  for (std::size_t i = 0; i < jn.internal.size(); ++i) {
    for (std::size_t j = i + 1; j < jn.internal.size(); ++j) {
      const Lane& a = map_.lanes[static_cast<std::size_t>(jn.internal[i])];
      const Lane& b = map_.lanes[static_cast<std::size_t>(jn.internal[j])];
      if (a.predecessors == b.predecessors) continue;  // diverging pair
      bool conflict = a.successors == b.successors;
      if (!conflict) {
        const auto& pa = a.centerline.points();
        const auto& pb = b.centerline.points();
        for (std::size_t u = 0; u + 1 < pa.size() && !conflict; ++u) {
          for (std::size_t v = 0; v + 1 < pb.size() && !conflict; ++v) {
            const Vec2 p = pa[u], r = pa[u + 1] - pa[u];
            const Vec2 q = pb[v], s = pb[v + 1] - pb[v];
            const double denom = r.cross(s);
            if (std::abs(denom) < 1e-12) continue;
            const double t = (q - p).cross(s) / denom;
            const double u2 = (q - p).cross(r) / denom;
            if (t >= 0 && t <= 1 && u2 >= 0 && u2 <= 1) conflict = true;
          }
        }
      }
      if (conflict) jn.conflicts.emplace_back(jn.internal[i], jn.internal[j]);
    }
  }

  if (node.kind == NodeKind::Stop) {
    StopSign sign;
    sign.id = static_cast<int>(map_.stop_signs.size());
    sign.junction_id = jn.id;
    sign.controlled_lanes = jn.incoming;
    for (int lane_id : jn.incoming) map_.lanes[static_cast<std::size_t>(lane_id)].stop_sign_id = sign.id;
    map_.stop_signs.push_back(std::move(sign));
  } else {
    // two-phase signal plan grouped by road axis; red = green + yellow of the
    // opposing group so conflicting approaches are never green together
    const double green = 8.0 + static_cast<double>(rng_.uniform_below(7));
    const double yellow = 3.0;
    std::vector<int> group_of(refs.size(), 0);
    Vec2 axis;
    bool axis_set = false;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      if (lanes_into(refs[i]).empty()) continue;
      const Vec2 d = dir_into_node(refs[i]);
      if (!axis_set) {
        axis = d;
        axis_set = true;
      }
      group_of[i] = std::abs(d.dot(axis)) >= 0.5 ? 0 : 1;
    }
    for (int g = 0; g < 2; ++g) {
      TrafficLight light;
      light.junction_id = jn.id;
      light.conflict_group = g;
      light.green_s = green;
      light.yellow_s = yellow;
      light.red_s = green + yellow;
      light.phase_offset = g == 0 ? 0.0 : green + yellow;
      for (std::size_t i = 0; i < refs.size(); ++i) {
        if (group_of[i] != g) continue;
        for (int lane_id : lanes_into(refs[i])) light.controlled_lanes.push_back(lane_id);
      }
      if (light.controlled_lanes.empty()) continue;
      light.id = static_cast<int>(map_.signals.size());
      for (int lane_id : light.controlled_lanes)
        map_.lanes[static_cast<std::size_t>(lane_id)].signal_id = light.id;
      map_.signals.push_back(std::move(light));
    }
  }

  map_.junctions.push_back(std::move(jn));
}

void Builder::compile_roundabout(const Blueprint& bp, int node_id) {
  const BNode& node = bp.nodes[static_cast<std::size_t>(node_id)];
  const auto refs = incidents(bp, node_id);

  Junction jn;
  jn.id = static_cast<int>(map_.junctions.size());
  jn.center = node.pos;
  jn.radius = node_trim_[static_cast<std::size_t>(node_id)];
  jn.is_roundabout = true;

  struct Cut {
    double angle;
    bool is_entry;
    std::size_t ref;
  };
  std::vector<Cut> cuts;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const BEdge& e = bp.edges[static_cast<std::size_t>(refs[i].edge)];
    const int other = refs[i].forward ? e.b : e.a;
    const Vec2 away = (bp.nodes[static_cast<std::size_t>(other)].pos - node.pos).normalized();
    const double theta = std::atan2(away.y, away.x);
    if (!lanes_into(refs[i]).empty()) cuts.push_back({theta + 0.45, true, i});
    if (!lanes_out_of(refs[i]).empty()) cuts.push_back({theta - 0.45, false, i});
  }
  for (Cut& c : cuts) {
    c.angle = std::fmod(c.angle, 2 * M_PI);
    if (c.angle < 0) c.angle += 2 * M_PI;
  }
  std::sort(cuts.begin(), cuts.end(), [](const Cut& a, const Cut& b) {
    return a.angle < b.angle;
  });

  // counterclockwise one-lane ring split at every entry/exit
  const double ring_speed = 30.0;
  std::vector<int> arcs;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double a0 = cuts[i].angle;
    double a1 = cuts[(i + 1) % cuts.size()].angle;
    if (a1 <= a0) a1 += 2 * M_PI;
    const int n = std::max(4, static_cast<int>(kRingRadius * (a1 - a0) / 2.0) + 2);
    Lane lane;
    lane.centerline = Polyline(sample_arc(node.pos, kRingRadius, a0, a1, n));
    lane.type = LaneType::Junction;
    lane.width = 4.0;
    lane.speed_limit_kmph = ring_speed;
    lane.left_mark = {MarkType::None, MarkColor::White};
    lane.right_mark = {MarkType::None, MarkColor::White};
    lane.junction_id = jn.id;
    arcs.push_back(new_lane(std::move(lane)));
  }
  for (std::size_t i = 0; i < arcs.size(); ++i)
    link(arcs[i], arcs[(i + 1) % arcs.size()]);
  for (int a : arcs) jn.internal.push_back(a);

  // entries merge onto the arc starting at their cut; exits leave the arc
  // ending at theirs
  for (std::size_t ci = 0; ci < cuts.size(); ++ci) {
    const Cut& cut = cuts[ci];
    const int arc_starting = arcs[ci];
    const int arc_ending = arcs[(ci + arcs.size() - 1) % arcs.size()];
    if (cut.is_entry) {
      for (int lane_id : lanes_into(refs[cut.ref])) {
        jn.incoming.push_back(lane_id);
        const int c = connector(lane_id, arc_starting, LaneType::Junction, jn.id, ring_speed);
        jn.internal.push_back(c);
        jn.conflicts.emplace_back(c, arc_ending);  // yield to ring traffic
      }
    } else {
      for (int lane_id : lanes_out_of(refs[cut.ref])) {
        const int c = connector(arc_ending, lane_id, LaneType::Junction, jn.id, ring_speed);
        jn.internal.push_back(c);
      }
    }
  }

  map_.junctions.push_back(std::move(jn));
}

RoadMap Builder::compile(const Blueprint& bp) {
  compile_edges(bp);
  for (std::size_t n = 0; n < bp.nodes.size(); ++n)
    compile_node(bp, static_cast<int>(n));
  finalize_map(map_);
  return std::move(map_);
}

// ---------------------------------------------------------------------------
// Archetype blueprints
// ---------------------------------------------------------------------------

NodeKind pick_junction_kind(Rng& rng) {
  return rng.bernoulli(0.5) ? NodeKind::Signal : NodeKind::Stop;
}

Blueprint blueprint_urban_low(Rng& rng) {
  Blueprint bp;
  auto jx = [&] { return rng.uniform(-10.0, 10.0); };
  const double urban_lo = 20.0, urban_hi = 45.0;
  auto spd = [&] { return std::floor(rng.uniform(urban_lo + 5, urban_hi)); };

  // ladder: two rails, four rungs; interior rung ends are 3-way junctions
  const int c00 = bp.node(0, 0, NodeKind::Corner);
  const int n10 = bp.node(150 + jx(), jx(), pick_junction_kind(rng));
  const int n20 = bp.node(310 + jx(), jx(), pick_junction_kind(rng));
  const int c30 = bp.node(460, 0, NodeKind::Corner);
  const int c01 = bp.node(0, 170, NodeKind::Corner);
  const int n11 = bp.node(150 + jx(), 170 + jx(), pick_junction_kind(rng));
  const int n21 = bp.node(310 + jx(), 170 + jx(), pick_junction_kind(rng));
  const int c31 = bp.node(460, 170, NodeKind::Corner);

  auto center = [&](BEdge& e) {
    if (rng.bernoulli(0.3)) e.center_mark = MarkType::Broken;
  };
  auto mk = [&](int a, int b, double s) {
    const int id = bp.edge(a, b, 1, 1, s);
    center(bp.edges[static_cast<std::size_t>(id)]);
  };
  mk(c00, n10, spd());
  mk(n10, n20, spd());
  mk(n20, c30, spd());
  mk(c01, n11, spd());
  mk(n11, n21, spd());
  mk(n21, c31, spd());
  mk(c00, c01, std::floor(rng.uniform(urban_lo, 35.0)));
  mk(n10, n11, std::floor(rng.uniform(urban_lo, 35.0)));
  mk(n20, n21, std::floor(rng.uniform(urban_lo, 35.0)));
  mk(c30, c31, std::floor(rng.uniform(urban_lo, 35.0)));
  return bp;
}

Blueprint blueprint_urban_highway(Rng& rng) {
  Blueprint bp;
  auto jx = [&] { return rng.uniform(-10.0, 10.0); };
  auto hwy = [&] { return std::floor(rng.uniform(75, 90)); };
  auto urb = [&] { return std::floor(rng.uniform(30, 45)); };

  const int h0 = bp.node(-320, -220, NodeKind::Corner);
  const int h1 = bp.node(jx(), -220 + jx() * 0.3, NodeKind::Signal);
  const int h2 = bp.node(320, -220, NodeKind::Corner);
  const int a0 = bp.node(-320 + jx(), jx(), pick_junction_kind(rng));
  const int a1 = bp.node(jx(), jx(), NodeKind::Signal);
  const int a2 = bp.node(320 + jx(), jx(), pick_junction_kind(rng));
  const int b0 = bp.node(-320, 170, NodeKind::Corner);
  const int b1 = bp.node(jx(), 170 + jx(), NodeKind::Roundabout);
  const int b2 = bp.node(320, 170, NodeKind::Corner);

  bp.edge(h0, h1, 2, 2, hwy());
  bp.edge(h1, h2, 2, 2, hwy());
  bp.edge(a0, a1, 1, 1, urb());
  bp.edge(a1, a2, 1, 1, urb());
  bp.edge(b0, b1, 1, 1, urb());
  bp.edge(b1, b2, 1, 1, urb());
  bp.edge(h0, a0, 2, 2, std::floor(rng.uniform(45, 60)));
  bp.edge(h1, a1, 1, 1, std::floor(rng.uniform(40, 55)));
  bp.edge(h2, a2, 2, 2, std::floor(rng.uniform(45, 60)));
  bp.edge(a0, b0, 1, 1, urb());
  bp.edge(a1, b1, 1, 1, urb());
  bp.edge(a2, b2, 1, 1, urb());
  return bp;
}

Blueprint blueprint_highway(Rng& rng) {
  Blueprint bp;
  auto jx = [&] { return rng.uniform(-15.0, 15.0); };
  const double hs = std::floor(rng.uniform(78, 90));
  auto svc = [&] { return std::floor(rng.uniform(35, 50)); };

  const int A = bp.node(-540, 0, NodeKind::Corner);
  const int M = bp.node(-220 + jx(), 0, NodeKind::Joint);  // 3 -> 2 lane drop
  const int R = bp.node(30 + jx(), 0, NodeKind::Joint);    // on-ramp merge
  const int X = bp.node(250 + jx(), 0, NodeKind::Joint);   // off-ramp exit
  const int B = bp.node(540, 0, NodeKind::Corner);
  const int V1 = bp.node(-540, -190, NodeKind::Corner);
  const int S1 = bp.node(-220 + jx(), -190, NodeKind::Stop);
  const int S2 = bp.node(30 + jx(), -190, NodeKind::Signal);  // 4-way
  const int S3 = bp.node(250 + jx(), -190, NodeKind::Stop);
  const int V2 = bp.node(540, -190, NodeKind::Corner);
  const int D1 = bp.node(30, -360, NodeKind::Corner);
  const int D2 = bp.node(250, -360, NodeKind::Corner);

  bp.edge(A, M, 3, 3, hs);
  bp.edge(M, R, 2, 2, hs);
  bp.edge(R, X, 2, 2, hs);
  bp.edge(X, B, 2, 2, hs);
  bp.edge(V1, S1, 1, 1, svc());
  bp.edge(S1, S2, 1, 1, svc());
  bp.edge(S2, S3, 1, 1, svc());
  bp.edge(S3, V2, 1, 1, svc());
  bp.edge(A, V1, 1, 1, svc());
  bp.edge(B, V2, 1, 1, svc());
  bp.edge(S2, D1, 1, 1, svc());
  bp.edge(D1, D2, 1, 1, svc());
  bp.edge(D2, S3, 1, 1, svc());
  // on-ramp: service square up to the highway, merging eastbound at a
  // shallow angle
  {
    const double sx = bp.nodes[static_cast<std::size_t>(S2)].pos.x;
    const double rx = bp.nodes[static_cast<std::size_t>(R)].pos.x;
    const int e = bp.edge(S2, R, 1, 0, std::floor(rng.uniform(40, 50)));
    bp.edges[static_cast<std::size_t>(e)].via = {{sx + 30, -115}, {rx - 70, -28}};
  }
  // off-ramp: eastbound exit down to the service road
  {
    const double xx = bp.nodes[static_cast<std::size_t>(X)].pos.x;
    const int e = bp.edge(X, S3, 1, 0, std::floor(rng.uniform(40, 50)));
    bp.edges[static_cast<std::size_t>(e)].via = {{xx + 95, -35}, {xx + 50, -120}};
  }
  return bp;
}

Blueprint blueprint_hybrid(Rng& rng) {
  Blueprint bp;
  auto jx = [&] { return rng.uniform(-12.0, 12.0); };
  auto urb = [&] { return std::floor(rng.uniform(25, 45)); };
  const double fast = std::floor(rng.uniform(70, 85));

  int g[3][3];
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      NodeKind kind;
      const bool corner = (i == 0 || i == 2) && (j == 0 || j == 2);
      if (corner) kind = NodeKind::Corner;
      else if (i == 1 && j == 1) kind = NodeKind::Signal;
      else kind = pick_junction_kind(rng);
      const double x = 190.0 * i + (corner ? 0 : jx());
      const double y = 190.0 * j + (corner ? 0 : jx());
      g[i][j] = bp.node(x, y, kind);
    }
  }
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i + 1 < 3; ++i)
      bp.edge(g[i][j], g[i + 1][j], j == 1 ? 2 : 1, j == 1 ? 2 : 1,
              j == 1 ? fast : urb());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j + 1 < 3; ++j) bp.edge(g[i][j], g[i][j + 1], 1, 1, urb());
  return bp;
}

Blueprint blueprint_long_highway(Rng& rng) {
  Blueprint bp;
  auto jx = [&] { return rng.uniform(-15.0, 15.0); };
  const double hs = std::floor(rng.uniform(80, 90));

  const int C1 = bp.node(-650, 260, NodeKind::Corner);
  const int T = bp.node(jx(), 260, NodeKind::Signal);
  const int C2 = bp.node(650, 260, NodeKind::Corner);
  const int C3 = bp.node(650, -260, NodeKind::Corner);
  const int RB = bp.node(jx(), -260, NodeKind::Roundabout);
  const int C4 = bp.node(-650, -260, NodeKind::Corner);
  const int M = bp.node(-650, jx(), NodeKind::Joint);  // lane drop on west leg
  const int XO = bp.node(-390 + jx(), -260, NodeKind::Joint);
  const int RO = bp.node(-160 + jx(), -260, NodeKind::Joint);
  const int SP = bp.node(-275, -385, NodeKind::Corner);

  bp.edge(C1, T, 2, 2, hs);
  bp.edge(T, C2, 2, 2, hs);
  bp.edge(C2, C3, 2, 2, hs);
  bp.edge(C3, RB, 2, 2, hs);
  bp.edge(RB, RO, 2, 2, hs);
  bp.edge(RO, XO, 2, 2, hs);
  bp.edge(XO, C4, 2, 2, hs);
  bp.edge(C4, M, 2, 2, hs);
  bp.edge(M, C1, 3, 3, hs);  // southbound drops 3 -> 2 at M
  bp.edge(T, RB, 1, 1, std::floor(rng.uniform(40, 55)));
  // eastbound off-ramp at XO loops back on at RO (service pocket)
  {
    const int e = bp.edge(XO, SP, 1, 0, std::floor(rng.uniform(40, 50)));
    bp.edges[static_cast<std::size_t>(e)].via = {{-330, -290}, {-295, -340}};
  }
  {
    const int e = bp.edge(SP, RO, 1, 0, std::floor(rng.uniform(40, 50)));
    bp.edges[static_cast<std::size_t>(e)].via = {{-245, -350}, {-205, -295}};
  }
  return bp;
}

Blueprint blueprint_urban_hd(Rng& rng) {
  Blueprint bp;
  auto jx = [&] { return rng.uniform(-8.0, 8.0); };
  auto urb = [&] { return std::floor(rng.uniform(20, 45)); };

  int g[3][3];
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      NodeKind kind;
      const bool corner = (i == 0 || i == 2) && (j == 0 || j == 2);
      if (corner) kind = NodeKind::Corner;
      else if (i == 1 && j == 1) kind = pick_junction_kind(rng);
      else kind = pick_junction_kind(rng);
      g[i][j] = bp.node(145.0 * i + (corner ? 0 : jx()),
                        145.0 * j + (corner ? 0 : jx()), kind);
    }
  }
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i + 1 < 3; ++i) {
      const int e = bp.edge(g[i][j], g[i + 1][j], 1, 1, urb());
      if (j == 1) bp.edges[static_cast<std::size_t>(e)].shoulder = true;  // parking strips
    }
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j + 1 < 3; ++j) bp.edge(g[i][j], g[i][j + 1], 1, 1, urb());
  return bp;
}

}  // namespace

void finalize_map(RoadMap& map) {
  for (Lane& lane : map.lanes) {
    std::sort(lane.successors.begin(), lane.successors.end());
    lane.successors.erase(std::unique(lane.successors.begin(), lane.successors.end()),
                          lane.successors.end());
    std::sort(lane.predecessors.begin(), lane.predecessors.end());
    lane.predecessors.erase(
        std::unique(lane.predecessors.begin(), lane.predecessors.end()),
        lane.predecessors.end());
    lane.max_curvature = lane.centerline.max_curvature();
    map.max_lane_width = std::max(map.max_lane_width, lane.width);
  }

  // spatial grid over lane segments
  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  for (const Lane& lane : map.lanes) {
    for (const Vec2& p : lane.centerline.points()) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  const double pad = 3.0 * map.max_lane_width;
  auto& idx = map.index;
  idx.cell = 25.0;
  idx.origin = {min_x - pad, min_y - pad};
  idx.nx = static_cast<int>((max_x - min_x + 2 * pad) / idx.cell) + 1;
  idx.ny = static_cast<int>((max_y - min_y + 2 * pad) / idx.cell) + 1;
  idx.cells.assign(static_cast<std::size_t>(idx.nx * idx.ny), {});
  for (const Lane& lane : map.lanes) {
    const auto& pts = lane.centerline.points();
    std::set<int> touched;
    const double infl = lane.width + 2.0;
    auto mark = [&](double x0, double y0, double x1, double y1) {
      const int cx0 = std::clamp(static_cast<int>((std::min(x0, x1) - infl - idx.origin.x) / idx.cell), 0, idx.nx - 1);
      const int cx1 = std::clamp(static_cast<int>((std::max(x0, x1) + infl - idx.origin.x) / idx.cell), 0, idx.nx - 1);
      const int cy0 = std::clamp(static_cast<int>((std::min(y0, y1) - infl - idx.origin.y) / idx.cell), 0, idx.ny - 1);
      const int cy1 = std::clamp(static_cast<int>((std::max(y0, y1) + infl - idx.origin.y) / idx.cell), 0, idx.ny - 1);
      for (int cy = cy0; cy <= cy1; ++cy)
        for (int cx = cx0; cx <= cx1; ++cx) touched.insert(cy * idx.nx + cx);
    };
    if (pts.size() == 1) mark(pts[0].x, pts[0].y, pts[0].x, pts[0].y);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      mark(pts[i].x, pts[i].y, pts[i + 1].x, pts[i + 1].y);
    for (int c : touched) idx.cells[static_cast<std::size_t>(c)].push_back(lane.id);
  }
}

RoadMap generate_map(Archetype archetype, std::uint64_t seed) {
  Rng rng(Rng::derive(Rng::derive(seed, "roadmap"),
                      static_cast<std::uint64_t>(archetype)));
  Blueprint bp;
  switch (archetype) {
    case Archetype::UrbanLow: bp = blueprint_urban_low(rng); break;
    case Archetype::UrbanHighway: bp = blueprint_urban_highway(rng); break;
    case Archetype::Highway: bp = blueprint_highway(rng); break;
    case Archetype::Hybrid: bp = blueprint_hybrid(rng); break;
    case Archetype::LongHighway: bp = blueprint_long_highway(rng); break;
    case Archetype::UrbanHD: bp = blueprint_urban_hd(rng); break;
  }
  Builder builder(archetype, seed, rng);
  return builder.compile(bp);
}

LaneContext query_lane(const RoadMap& map, const Vec2& position, double heading_deg) {
  const auto& idx = map.index;
  std::vector<int> candidates;
  if (idx.nx > 0) {
    const int cx = static_cast<int>((position.x - idx.origin.x) / idx.cell);
    const int cy = static_cast<int>((position.y - idx.origin.y) / idx.cell);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= idx.nx || y >= idx.ny) continue;
        const auto& cell = idx.cells[static_cast<std::size_t>(y * idx.nx + x)];
        candidates.insert(candidates.end(), cell.begin(), cell.end());
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
  }

  const double limit = 2.0 * map.max_lane_width;
  int best_id = -1;
  Polyline::Projection best_proj;
  double best_dist = std::numeric_limits<double>::infinity();
  double best_mismatch = 1e18;
  for (int id : candidates) {
    const Lane& lane = map.lane(id);
    const auto proj = lane.centerline.project(position);
    if (proj.dist > limit) continue;
    const double lane_heading = heading_from_dir(lane.centerline.tangent_at(proj.s));
    const double mismatch = std::abs(heading_diff(heading_deg, lane_heading));
    if (mismatch > 90.0) continue;
    if (proj.dist < best_dist ||
        (proj.dist == best_dist && (mismatch < best_mismatch ||
                                    (mismatch == best_mismatch && id < best_id)))) {
      best_dist = proj.dist;
      best_mismatch = mismatch;
      best_id = id;
      best_proj = proj;
    }
  }
  if (best_id < 0) throw PositionOffRoad(position.x, position.y);

  const Lane& lane = map.lane(best_id);
  LaneContext ctx;
  ctx.lane_id = lane.id;
  ctx.lane_type = lane.type;
  ctx.left_mark = lane.left_mark;
  ctx.right_mark = lane.right_mark;
  ctx.lane_width = lane.width;
  ctx.off_center = best_proj.dist;
  ctx.possible_maneuvers = maneuvers_for(map, lane);
  ctx.speed_limit_kmph = lane.speed_limit_kmph;
  ctx.s = best_proj.s;
  ctx.lateral_signed = best_proj.lateral;
  return ctx;
}

std::vector<SpawnPoint> spawn_points(const RoadMap& map) {
  std::vector<SpawnPoint> out;
  for (const Lane& lane : map.lanes) {
    if (lane.type != LaneType::Driving || lane.road_id < 0) continue;
    const double len = lane.length();
    if (len < 24.0) continue;
    for (double s = 10.0; s <= len - 14.0; s += 24.0) out.push_back({lane.id, s});
  }
  return out;
}

std::string serialize_lanes_csv(const RoadMap& map) {
  std::string out =
      "id,type,road_id,junction_id,width,speed_limit,left_mark_type,left_mark_color,"
      "right_mark_type,right_mark_color,left_neighbor,right_neighbor,signal_id,"
      "stop_sign_id,successors,predecessors,centerline\n";
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ';';
      s += std::to_string(v[i]);
    }
    return s;
  };
  for (const Lane& lane : map.lanes) {
    out += std::to_string(lane.id);
    out += ',';
    out += to_string(lane.type);
    out += ',';
    out += std::to_string(lane.road_id);
    out += ',';
    out += std::to_string(lane.junction_id);
    out += ',';
    out += fmt_double(lane.width);
    out += ',';
    out += fmt_double(lane.speed_limit_kmph);
    out += ',';
    out += to_string(lane.left_mark.type);
    out += ',';
    out += to_string(lane.left_mark.color);
    out += ',';
    out += to_string(lane.right_mark.type);
    out += ',';
    out += to_string(lane.right_mark.color);
    out += ',';
    out += std::to_string(lane.left_neighbor);
    out += ',';
    out += std::to_string(lane.right_neighbor);
    out += ',';
    out += std::to_string(lane.signal_id);
    out += ',';
    out += std::to_string(lane.stop_sign_id);
    out += ',';
    out += join(lane.successors);
    out += ',';
    out += join(lane.predecessors);
    out += ',';
    std::string cl;
    for (std::size_t i = 0; i < lane.centerline.points().size(); ++i) {
      if (i) cl += ';';
      cl += fmt_double(lane.centerline.points()[i].x);
      cl += ':';
      cl += fmt_double(lane.centerline.points()[i].y);
    }
    out += cl;
    out += '\n';
  }
  return out;
}

std::string serialize_map_json(const RoadMap& map) {
  nlohmann::json j;
  j["format"] = "vtrackit-map-v1";
  j["archetype"] = to_string(map.archetype);
  j["seed"] = map.seed;
  j["lane_count"] = map.lanes.size();
  nlohmann::json js = nlohmann::json::array();
  for (const auto& jn : map.junctions) {
    nlohmann::json e;
    e["id"] = jn.id;
    e["center"] = {jn.center.x, jn.center.y};
    e["radius"] = jn.radius;
    e["is_roundabout"] = jn.is_roundabout;
    e["incoming"] = jn.incoming;
    e["internal"] = jn.internal;
    nlohmann::json conflicts = nlohmann::json::array();
    for (const auto& [a, b] : jn.conflicts) conflicts.push_back({a, b});
    e["conflicts"] = conflicts;
    js.push_back(e);
  }
  j["junctions"] = js;
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& s : map.signals) {
    nlohmann::json e;
    e["id"] = s.id;
    e["controlled_lanes"] = s.controlled_lanes;
    e["cycle"] = {s.green_s, s.yellow_s, s.red_s};
    e["phase_offset"] = s.phase_offset;
    e["junction_id"] = s.junction_id;
    e["conflict_group"] = s.conflict_group;
    sig.push_back(e);
  }
  j["signals"] = sig;
  nlohmann::json sto = nlohmann::json::array();
  for (const auto& s : map.stop_signs) {
    nlohmann::json e;
    e["id"] = s.id;
    e["controlled_lanes"] = s.controlled_lanes;
    e["junction_id"] = s.junction_id;
    sto.push_back(e);
  }
  j["stop_signs"] = sto;
  return j.dump(2) + "\n";
}

void write_map(const RoadMap& map, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/lanes.csv");
    f << serialize_lanes_csv(map);
  }
  {
    std::ofstream f(dir + "/map.json");
    f << serialize_map_json(map);
  }
}

}  // namespace vtrackit::roadnet
