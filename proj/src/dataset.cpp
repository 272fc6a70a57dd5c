#include "vtrackit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vtrackit/scenario.hpp"
#include "vtrackit/strfmt.hpp"

namespace vtrackit::dataset {

namespace {

const std::array<const char*, kColumnCount> kColumns = {
    "timestamp",
    "frame",
    "actor_id",
    "actor_type",
    "attr",
    "color",
    "pos_x",
    "pos_y",
    "pos_z",
    "heading",
    "extents",
    "speed",
    "acceleration",
    "throttle",
    "steer",
    "brake",
    "red_light",
    "rel_angle",
    "rel_x",
    "rel_y",
    "lane_type",
    "right_lane_mark_type",
    "right_lane_mark_color",
    "left_lane_mark_type",
    "left_lane_mark_color",
    "possible_maneuvers",
    "lane_width",
    "off_center",
};

constexpr double kEps = 1e-9;

bool finite(double v) { return std::isfinite(v); }

double parse_double(const std::string& s, const char* field, long row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaViolation(field, row);
  }
}

int parse_int(const std::string& s, const char* field, long row) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaViolation(field, row);
  }
}

// "(12,34,56)" / "[1.5,2.5]" style tuples
std::vector<std::string> split_tuple(std::string s, const char* field, long row) {
  if (s.size() < 2) throw SchemaViolation(field, row);
  const char open = s.front();
  const char close = s.back();
  if (!((open == '(' && close == ')') || (open == '[' && close == ']')))
    throw SchemaViolation(field, row);
  s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename Enum, typename Parser>
Enum parse_enum(const std::string& s, Parser parser, const char* field, long row) {
  auto v = parser(s);
  if (!v) throw SchemaViolation(field, row);
  return *v;
}

std::optional<roadnet::LaneType> lane_type_from_string(const std::string& s) {
  if (s == "Driving") return roadnet::LaneType::Driving;
  if (s == "Junction") return roadnet::LaneType::Junction;
  if (s == "Shoulder") return roadnet::LaneType::Shoulder;
  return std::nullopt;
}

std::optional<roadnet::MarkType> mark_type_from_string(const std::string& s) {
  if (s == "Solid") return roadnet::MarkType::Solid;
  if (s == "Broken") return roadnet::MarkType::Broken;
  if (s == "SolidSolid") return roadnet::MarkType::SolidSolid;
  if (s == "NONE") return roadnet::MarkType::None;
  return std::nullopt;
}

std::optional<roadnet::MarkColor> mark_color_from_string(const std::string& s) {
  if (s == "White") return roadnet::MarkColor::White;
  if (s == "Yellow") return roadnet::MarkColor::Yellow;
  return std::nullopt;
}

std::optional<roadnet::Maneuver> maneuver_from_string(const std::string& s) {
  if (s == "Left") return roadnet::Maneuver::Left;
  if (s == "Right") return roadnet::Maneuver::Right;
  if (s == "Both") return roadnet::Maneuver::Both;
  if (s == "None") return roadnet::Maneuver::None;
  return std::nullopt;
}

std::optional<traffic::ActorType> actor_type_from_string(const std::string& s) {
  if (s == "Ego") return traffic::ActorType::Ego;
  if (s == "Traffic") return traffic::ActorType::Traffic;
  return std::nullopt;
}

}  // namespace

const std::array<const char*, kColumnCount>& column_names() { return kColumns; }

std::string header_line() {
  std::string h;
  for (int i = 0; i < kColumnCount; ++i) {
    if (i) h += ',';
    h += kColumns[static_cast<std::size_t>(i)];
  }
  return h;
}

void validate_record(const FrameRecord& r, long row) {
  auto fail = [&](const char* field) { throw SchemaViolation(field, row); };

  if (!finite(r.timestamp) || r.timestamp < 0.0) fail("timestamp");
  if (r.frame < 0) fail("frame");
  if (std::abs(r.timestamp - r.frame * 0.05) > kEps) fail("timestamp");
  if (r.actor_id < 0) fail("actor_id");
  if (r.attr.empty()) fail("attr");
  for (int c : r.color)
    if (c < 0 || c > 255) fail("color");
  if (!finite(r.pos_x)) fail("pos_x");
  if (!finite(r.pos_y)) fail("pos_y");
  if (!finite(r.pos_z)) fail("pos_z");
  if (!finite(r.heading) || r.heading <= 0.0 || r.heading > 360.0) fail("heading");
  if (!finite(r.extent_length) || r.extent_length <= 0.0 ||
      !finite(r.extent_width) || r.extent_width <= 0.0)
    fail("extents");
  if (!finite(r.speed) || r.speed < 0.0) fail("speed");
  if (!finite(r.accel_x) || !finite(r.accel_y)) fail("acceleration");
  if (!finite(r.throttle) || r.throttle < 0.0 || r.throttle > 1.0) fail("throttle");
  if (!finite(r.steer) || r.steer <= -1.0 || r.steer >= 1.0) fail("steer");
  if (!finite(r.brake) || r.brake < 0.0 || r.brake > 1.0) fail("brake");
  if (r.red_light != 0 && r.red_light != 1) fail("red_light");

  if (r.actor_type == traffic::ActorType::Ego) {
    if (r.rel_angle != 0.0) fail("rel_angle");
    if (r.rel_x != 0.0) fail("rel_x");
    if (r.rel_y != 0.0) fail("rel_y");
  } else {
    if (!finite(r.rel_angle) || r.rel_angle <= 0.0 || r.rel_angle > 360.0)
      fail("rel_angle");
    if (!finite(r.rel_x) || r.rel_x < 0.0 || r.rel_x > 50.0) fail("rel_x");
    if (!finite(r.rel_y) || r.rel_y < 0.0 || r.rel_y > 50.0) fail("rel_y");
  }
  if (!finite(r.lane_width) || r.lane_width <= 0.0) fail("lane_width");
  if (!finite(r.off_center) || r.off_center < 0.0) fail("off_center");
}

void validate_log(const sim::ScenarioLog& log) {
  long row = 0;
  std::set<int> ego_frames;
  for (const FrameRecord& r : log.frames) {
    validate_record(r, row);
    if (r.actor_type == traffic::ActorType::Ego &&
        !ego_frames.insert(r.frame).second)
      throw SchemaViolation("actor_type", row);  // duplicate ego in one frame
    ++row;
  }
}

std::string format_record(const FrameRecord& r) {
  std::string out;
  out.reserve(256);
  auto add = [&](const std::string& s) {
    if (!out.empty()) out += ',';
    out += s;
  };
  add(fmt_g9(r.timestamp));
  add(std::to_string(r.frame));
  add(std::to_string(r.actor_id));
  add(traffic::to_string(r.actor_type));
  add(csv_escape(r.attr));
  add(csv_escape("(" + std::to_string(r.color[0]) + "," + std::to_string(r.color[1]) +
                 "," + std::to_string(r.color[2]) + ")"));
  add(fmt_g9(r.pos_x));
  add(fmt_g9(r.pos_y));
  add(fmt_g9(r.pos_z));
  add(fmt_g9(r.heading));
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "[%.2f,%.2f]", r.extent_length, r.extent_width);
    add(csv_escape(buf));
  }
  add(fmt_g9(r.speed));
  add(csv_escape("[" + fmt_g9(r.accel_x) + "," + fmt_g9(r.accel_y) + "]"));
  add(fmt_g9(r.throttle));
  add(fmt_g9(r.steer));
  add(fmt_g9(r.brake));
  add(std::to_string(r.red_light));
  add(fmt_g9(r.rel_angle));
  add(fmt_g9(r.rel_x));
  add(fmt_g9(r.rel_y));
  add(roadnet::to_string(r.lane_type));
  add(roadnet::to_string(r.right_mark.type));
  add(roadnet::to_string(r.right_mark.color));
  add(roadnet::to_string(r.left_mark.type));
  add(roadnet::to_string(r.left_mark.color));
  add(roadnet::to_string(r.possible_maneuvers));
  add(fmt_g9(r.lane_width));
  add(fmt_g9(r.off_center));
  return out;
}

FrameRecord parse_record(const std::vector<std::string>& fields, long row) {
  if (fields.size() != kColumnCount) throw SchemaViolation("column_count", row);
  FrameRecord r;
  int i = 0;
  r.timestamp = parse_double(fields[i++], "timestamp", row);
  r.frame = parse_int(fields[i++], "frame", row);
  r.actor_id = parse_int(fields[i++], "actor_id", row);
  r.actor_type = parse_enum<traffic::ActorType>(fields[i++], actor_type_from_string,
                                                "actor_type", row);
  r.attr = fields[i++];
  {
    const auto parts = split_tuple(fields[i++], "color", row);
    if (parts.size() != 3) throw SchemaViolation("color", row);
    for (int c = 0; c < 3; ++c) r.color[c] = parse_int(parts[c], "color", row);
  }
  r.pos_x = parse_double(fields[i++], "pos_x", row);
  r.pos_y = parse_double(fields[i++], "pos_y", row);
  r.pos_z = parse_double(fields[i++], "pos_z", row);
  r.heading = parse_double(fields[i++], "heading", row);
  {
    const auto parts = split_tuple(fields[i++], "extents", row);
    if (parts.size() != 2) throw SchemaViolation("extents", row);
    r.extent_length = parse_double(parts[0], "extents", row);
    r.extent_width = parse_double(parts[1], "extents", row);
  }
  r.speed = parse_double(fields[i++], "speed", row);
  {
    const auto parts = split_tuple(fields[i++], "acceleration", row);
    if (parts.size() != 2) throw SchemaViolation("acceleration", row);
    r.accel_x = parse_double(parts[0], "acceleration", row);
    r.accel_y = parse_double(parts[1], "acceleration", row);
  }
  r.throttle = parse_double(fields[i++], "throttle", row);
  r.steer = parse_double(fields[i++], "steer", row);
  r.brake = parse_double(fields[i++], "brake", row);
  r.red_light = parse_int(fields[i++], "red_light", row);
  r.rel_angle = parse_double(fields[i++], "rel_angle", row);
  r.rel_x = parse_double(fields[i++], "rel_x", row);
  r.rel_y = parse_double(fields[i++], "rel_y", row);
  r.lane_type = parse_enum<roadnet::LaneType>(fields[i++], lane_type_from_string,
                                              "lane_type", row);
  r.right_mark.type = parse_enum<roadnet::MarkType>(
      fields[i++], mark_type_from_string, "right_lane_mark_type", row);
  r.right_mark.color = parse_enum<roadnet::MarkColor>(
      fields[i++], mark_color_from_string, "right_lane_mark_color", row);
  r.left_mark.type = parse_enum<roadnet::MarkType>(
      fields[i++], mark_type_from_string, "left_lane_mark_type", row);
  r.left_mark.color = parse_enum<roadnet::MarkColor>(
      fields[i++], mark_color_from_string, "left_lane_mark_color", row);
  r.possible_maneuvers = parse_enum<roadnet::Maneuver>(
      fields[i++], maneuver_from_string, "possible_maneuvers", row);
  r.lane_width = parse_double(fields[i++], "lane_width", row);
  r.off_center = parse_double(fields[i++], "off_center", row);
  return r;
}

std::string frames_to_csv(const std::vector<FrameRecord>& records) {
  std::string out = header_line();
  out += '\n';
  for (const FrameRecord& r : records) {
    out += format_record(r);
    out += '\n';
  }
  return out;
}

std::vector<FrameRecord> frames_from_csv(const std::string& text) {
  std::vector<FrameRecord> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaViolation("header", 0);
  // tolerate trailing \r
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != header_line()) throw SchemaViolation("header", 0);
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FrameRecord r = parse_record(split_csv_line(line), row);
    validate_record(r, row);
    out.push_back(std::move(r));
    ++row;
  }
  return out;
}

void write_scenario(const sim::ScenarioLog& log, const std::string& dir) {
  validate_log(log);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/frames.csv");
    if (!f) throw std::runtime_error("cannot write " + dir + "/frames.csv");
    f << frames_to_csv(log.frames);
  }
  nlohmann::json j;
  j["format"] = "vtrackit-meta-v1";
  j["scenario_id"] = log.scenario_id;
  j["archetype"] = roadnet::to_string(log.archetype);
  j["map_seed"] = log.map_seed;
  j["fps"] = log.fps;
  j["weather"] = {{"preset", sim::to_string(log.weather.preset)},
                  {"friction", log.weather.friction},
                  {"limit_scale", log.weather.limit_scale}};
  j["terminated_by"] = sim::to_string(log.terminated_by);
  j["timesteps"] = log.timestep_count();
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : log.collisions) {
    cols.push_back({{"time", c.time},
                    {"actor_a", c.actor_a},
                    {"actor_b", c.actor_b},
                    {"involves_ego", c.involves_ego}});
  }
  j["collisions"] = cols;
  j["rule_stats"] = {{"red_light_crossings", log.rule_stats.red_light_crossings},
                     {"solid_crossings", log.rule_stats.solid_crossings},
                     {"lane_changes", log.rule_stats.lane_changes}};
  std::ofstream f(dir + "/meta.json");
  if (!f) throw std::runtime_error("cannot write " + dir + "/meta.json");
  f << j.dump(2) << "\n";
}

sim::ScenarioLog read_scenario(const std::string& dir) {
  sim::ScenarioLog log;
  {
    std::ifstream f(dir + "/frames.csv");
    if (!f) throw std::runtime_error("cannot read " + dir + "/frames.csv");
    std::stringstream ss;
    ss << f.rdbuf();
    log.frames = frames_from_csv(ss.str());
  }
  std::ifstream f(dir + "/meta.json");
  if (!f) throw std::runtime_error("cannot read " + dir + "/meta.json");
  nlohmann::json j;
  f >> j;
  log.scenario_id = j.at("scenario_id").get<int>();
  log.archetype = roadnet::archetype_from_string(j.at("archetype").get<std::string>())
                      .value_or(roadnet::Archetype::UrbanLow);
  log.map_seed = j.at("map_seed").get<std::uint64_t>();
  log.fps = j.at("fps").get<double>();
  log.weather.preset =
      sim::weather_from_string(j.at("weather").at("preset").get<std::string>())
          .value_or(sim::WeatherPreset::ClearNoon);
  log.weather.friction = j.at("weather").at("friction").get<double>();
  log.weather.limit_scale = j.at("weather").at("limit_scale").get<double>();
  log.terminated_by =
      sim::termination_from_string(j.at("terminated_by").get<std::string>())
          .value_or(sim::Termination::TimeLimit);
  if (j.contains("collisions")) {
    for (const auto& c : j.at("collisions")) {
      sim::CollisionEvent e;
      e.time = c.at("time").get<double>();
      e.actor_a = c.at("actor_a").get<int>();
      e.actor_b = c.at("actor_b").get<int>();
      e.involves_ego = c.at("involves_ego").get<bool>();
      log.collisions.push_back(e);
    }
  }
  if (j.contains("rule_stats")) {
    const auto& rs = j.at("rule_stats");
    log.rule_stats.red_light_crossings = rs.at("red_light_crossings").get<int>();
    log.rule_stats.solid_crossings = rs.at("solid_crossings").get<int>();
    log.rule_stats.lane_changes = rs.at("lane_changes").get<int>();
  }
  return log;
}

Splits split_dataset(const std::vector<SplitItem>& items, int n_train, int n_val,
                     int n_test, std::uint64_t seed) {
  const int total = n_train + n_val + n_test;
  if (total > static_cast<int>(items.size()))
    throw InsufficientScenarios("requested " + std::to_string(total) +
                                " scenarios, only " + std::to_string(items.size()) +
                                " available");

  std::map<std::string, std::vector<int>> groups;
  for (const SplitItem& it : items) groups[it.group].push_back(it.scenario_id);

  const double n = static_cast<double>(items.size());
  auto quotas = [&](int want) {
    // largest-remainder apportionment across groups
    std::map<std::string, int> q;
    std::vector<std::pair<double, std::string>> rema;
    int assigned = 0;
    for (auto& [g, ids] : groups) {
      const double exact = want * static_cast<double>(ids.size()) / n;
      const int base = static_cast<int>(std::floor(exact));
      q[g] = base;
      assigned += base;
      rema.push_back({exact - base, g});
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < want && i < rema.size(); ++i, ++assigned)
      q[rema[i].second] += 1;
    return q;
  };
  const auto val_q = quotas(n_val);
  const auto test_q = quotas(n_test);

  Splits out;
  for (auto& [g, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    Rng rng(Rng::derive(Rng::derive(seed, "split"), g));
    rng.shuffle(ids);
    const int vq = val_q.at(g);
    const int tq = test_q.at(g);
    int k = 0;
    for (int id : ids) {
      if (k < vq) out.val.push_back(id);
      else if (k < vq + tq) out.test.push_back(id);
      else out.train.push_back(id);
      ++k;
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

void write_splits_json(const Splits& s, const std::string& path) {
  nlohmann::json j;
  j["format"] = "vtrackit-splits-v1";
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

Splits read_splits_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  f >> j;
  Splits s;
  s.train = j.at("train").get<std::vector<int>>();
  s.val = j.at("val").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  return s;
}

std::vector<int> filter_training(const std::vector<int>& ids,
                                 const std::map<int, bool>& ego_crashed) {
  std::vector<int> out;
  for (int id : ids) {
    auto it = ego_crashed.find(id);
    if (it != ego_crashed.end() && it->second) continue;
    out.push_back(id);
  }
  return out;
}

sim::ScenarioLog downsample(const sim::ScenarioLog& log, double target_fps) {
  const double ratio = log.fps / target_fps;
  const int stride = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - stride) > 1e-9 || stride < 1)
    throw IncompatibleRate("cannot downsample " + std::to_string(log.fps) + " to " +
                           std::to_string(target_fps) + " fps");
  sim::ScenarioLog out = log;
  out.fps = target_fps;
  out.frames.clear();
  for (const FrameRecord& r : log.frames)
    if (r.frame % stride == 0) out.frames.push_back(r);
  return out;
}

ContextRow context_from_record(const FrameRecord& r) {
  ContextRow c;
  c.heading = r.heading;
  c.speed = r.speed;
  c.accel_x = r.accel_x;
  c.accel_y = r.accel_y;
  c.throttle = r.throttle;
  c.steer = r.steer;
  c.brake = r.brake;
  c.red_light = r.red_light;
  c.lane_type = roadnet::to_string(r.lane_type);
  c.right_mark_type = roadnet::to_string(r.right_mark.type);
  c.left_mark_type = roadnet::to_string(r.left_mark.type);
  c.possible_maneuvers = roadnet::to_string(r.possible_maneuvers);
  c.lane_width = r.lane_width;
  c.off_center = r.off_center;
  return c;
}

std::vector<TrajectoryWindow> extract_windows(const sim::ScenarioLog& log,
                                              int obs_steps, int pred_steps,
                                              int stride) {
  std::vector<TrajectoryWindow> out;
  const int total = obs_steps + pred_steps;

  // group records by timestep
  std::vector<int> frames;
  std::map<int, std::map<int, const FrameRecord*>> by_frame;  // frame -> actor -> rec
  for (const FrameRecord& r : log.frames) {
    auto& m = by_frame[r.frame];
    if (m.empty()) frames.push_back(r.frame);
    m[r.actor_id] = &r;
  }
  std::sort(frames.begin(), frames.end());
  const int n_frames = static_cast<int>(frames.size());
  if (n_frames < total) return out;

  for (int start = 0; start + total <= n_frames; start += stride) {
    // the ego must be present everywhere; find its id at the first frame
    int ego_id = -1;
    for (const auto& [aid, rec] : by_frame[frames[static_cast<std::size_t>(start)]]) {
      if (rec->actor_type == traffic::ActorType::Ego) {
        ego_id = aid;
        break;
      }
    }
    if (ego_id < 0) continue;

    std::vector<int> vehicles;
    for (const auto& [aid, rec] : by_frame[frames[static_cast<std::size_t>(start)]]) {
      bool everywhere = true;
      for (int k = 1; k < total && everywhere; ++k) {
        const auto& m = by_frame[frames[static_cast<std::size_t>(start + k)]];
        everywhere = m.count(aid) > 0;
      }
      if (everywhere) vehicles.push_back(aid);
    }
    if (std::find(vehicles.begin(), vehicles.end(), ego_id) == vehicles.end())
      continue;
    // ego first, the rest in ascending id order
    vehicles.erase(std::remove(vehicles.begin(), vehicles.end(), ego_id),
                   vehicles.end());
    std::sort(vehicles.begin(), vehicles.end());
    vehicles.insert(vehicles.begin(), ego_id);

    const FrameRecord* ego_anchor =
        by_frame[frames[static_cast<std::size_t>(start + obs_steps - 1)]][ego_id];
    const Vec2 origin{ego_anchor->pos_x, ego_anchor->pos_y};

    TrajectoryWindow w;
    w.scenario_id = log.scenario_id;
    w.archetype = roadnet::to_string(log.archetype);
    w.vehicle_ids = vehicles;
    for (int vid : vehicles) {
      std::vector<Vec2> obs, fut;
      std::vector<ContextRow> ctx;
      for (int k = 0; k < obs_steps; ++k) {
        const FrameRecord* rec = by_frame[frames[static_cast<std::size_t>(start + k)]][vid];
        obs.push_back(Vec2{rec->pos_x, rec->pos_y} - origin);
        ctx.push_back(context_from_record(*rec));
      }
      for (int k = obs_steps; k < total; ++k) {
        const FrameRecord* rec = by_frame[frames[static_cast<std::size_t>(start + k)]][vid];
        fut.push_back(Vec2{rec->pos_x, rec->pos_y} - origin);
      }
      w.obs.push_back(std::move(obs));
      w.fut.push_back(std::move(fut));
      w.context.push_back(std::move(ctx));
    }
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

std::array<double, kNumericCount> numeric_features(const ContextRow& c) {
  return {c.speed, c.accel_x, c.accel_y, c.throttle,
          c.steer, c.brake,   c.lane_width, c.off_center};
}

const std::vector<std::string>& lane_type_dict() {
  static const std::vector<std::string> d = {"Driving", "Junction", "Shoulder"};
  return d;
}
const std::vector<std::string>& mark_type_dict() {
  static const std::vector<std::string> d = {"Solid", "Broken", "SolidSolid", "NONE"};
  return d;
}
const std::vector<std::string>& maneuver_dict() {
  static const std::vector<std::string> d = {"Left", "Right", "Both", "None"};
  return d;
}

std::size_t dict_index(const std::vector<std::string>& dict, const std::string& v) {
  for (std::size_t i = 0; i < dict.size(); ++i)
    if (dict[i] == v) return i;
  throw UnknownCategory(v);
}

}  // namespace

FeatureStats FeatureStats::fit(const std::vector<TrajectoryWindow>& windows) {
  FeatureStats st;
  std::array<double, kNumericCount> sum{};
  std::array<double, kNumericCount> sq{};
  long count = 0;
  for (const auto& w : windows) {
    for (const auto& rows : w.context) {
      for (const auto& row : rows) {
        const auto f = numeric_features(row);
        for (int i = 0; i < kNumericCount; ++i) {
          sum[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
          sq[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
        }
        ++count;
      }
    }
  }
  for (int i = 0; i < kNumericCount; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double mean = count > 0 ? sum[idx] / count : 0.0;
    const double var = count > 0 ? std::max(0.0, sq[idx] / count - mean * mean) : 1.0;
    st.mean[idx] = mean;
    st.stddev[idx] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return st;
}

void FeatureStats::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "vtrackit-stats-v1";
  j["numeric_order"] = {"speed", "accel_x", "accel_y", "throttle",
                        "steer", "brake",   "lane_width", "off_center"};
  j["mean"] = mean;
  j["stddev"] = stddev;
  j["dicts"] = {{"lane_type", lane_type_dict()},
                {"mark_type", mark_type_dict()},
                {"possible_maneuvers", maneuver_dict()}};
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

FeatureStats FeatureStats::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  f >> j;
  FeatureStats st;
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("stddev").get<std::vector<double>>();
  if (m.size() != kNumericCount || s.size() != kNumericCount)
    throw std::runtime_error("bad stats file: " + path);
  std::copy(m.begin(), m.end(), st.mean.begin());
  std::copy(s.begin(), s.end(), st.stddev.begin());
  return st;
}

std::array<double, kContextDim> encode_context_row(const ContextRow& row,
                                                   const FeatureStats& stats) {
  std::array<double, kContextDim> out{};
  const auto f = numeric_features(row);
  int k = 0;
  for (int i = 0; i < kNumericCount; ++i, ++k) {
    const auto idx = static_cast<std::size_t>(i);
    out[static_cast<std::size_t>(k)] = (f[idx] - stats.mean[idx]) / stats.stddev[idx];
  }
  const double rad = row.heading / kDegPerRad;
  out[static_cast<std::size_t>(k++)] = std::sin(rad);
  out[static_cast<std::size_t>(k++)] = std::cos(rad);
  out[static_cast<std::size_t>(k++)] = row.red_light ? 1.0 : 0.0;
  const std::size_t lt = dict_index(lane_type_dict(), row.lane_type);
  out[static_cast<std::size_t>(k) + lt] = 1.0;
  k += 3;
  const std::size_t rm = dict_index(mark_type_dict(), row.right_mark_type);
  out[static_cast<std::size_t>(k) + rm] = 1.0;
  k += 4;
  const std::size_t lm = dict_index(mark_type_dict(), row.left_mark_type);
  out[static_cast<std::size_t>(k) + lm] = 1.0;
  k += 4;
  const std::size_t mv = dict_index(maneuver_dict(), row.possible_maneuvers);
  out[static_cast<std::size_t>(k) + mv] = 1.0;
  k += 4;
  return out;
}

}  // namespace vtrackit::dataset
