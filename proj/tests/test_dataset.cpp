#include <filesystem>
#include <set>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vtrackit/dataset.hpp"
#include "vtrackit/scenario.hpp"

using namespace vtrackit;
using namespace vtrackit::dataset;

namespace {

sim::ScenarioLog small_log(std::uint64_t seed = 3, int n_actors = 10) {
  const auto map = roadnet::generate_map(roadnet::Archetype::UrbanLow, 42);
  Rng rng(seed);
  sim::ScenarioConfig cfg;
  cfg.scenario_id = 7;
  return sim::run_scenario(map, n_actors, rng, cfg);
}

// first seed whose scenario survives long enough to slice windows from
sim::ScenarioLog long_log(std::uint64_t seed_from, int n_actors, int min_steps = 400) {
  for (std::uint64_t seed = seed_from; seed < seed_from + 16; ++seed) {
    auto log = small_log(seed, n_actors);
    if (log.timestep_count() >= min_steps) return log;
  }
  FAIL("no crash-free scenario found");
  return {};
}

FrameRecord valid_record() {
  FrameRecord r;
  r.timestamp = 0.25;
  r.frame = 5;
  r.actor_id = 3;
  r.actor_type = traffic::ActorType::Traffic;
  r.attr = "vehicle.audi.tt";
  r.color = {10, 20, 30};
  r.pos_x = 12.5;
  r.pos_y = -3.25;
  r.heading = 90.0;
  r.extent_length = 4.18;
  r.extent_width = 1.84;
  r.speed = 33.3;
  r.accel_x = 0.4;
  r.accel_y = -0.1;
  r.throttle = 0.5;
  r.steer = 0.02;
  r.brake = 0.0;
  r.red_light = 0;
  r.rel_angle = 90.0;
  r.rel_x = 1.0;
  r.rel_y = 11.0;
  r.lane_type = roadnet::LaneType::Driving;
  r.right_mark = {roadnet::MarkType::Solid, roadnet::MarkColor::White};
  r.left_mark = {roadnet::MarkType::Broken, roadnet::MarkColor::Yellow};
  r.possible_maneuvers = roadnet::Maneuver::Left;
  r.lane_width = 3.5;
  r.off_center = 0.12;
  return r;
}

}  // namespace

TEST_CASE("header carries exactly the 28 schema columns in order") {
  const auto& names = column_names();
  CHECK(names.size() == 28);
  CHECK(header_line() ==
        "timestamp,frame,actor_id,actor_type,attr,color,pos_x,pos_y,pos_z,heading,"
        "extents,speed,acceleration,throttle,steer,brake,red_light,rel_angle,rel_x,"
        "rel_y,lane_type,right_lane_mark_type,right_lane_mark_color,left_lane_mark_type,"
        "left_lane_mark_color,possible_maneuvers,lane_width,off_center");
}

TEST_CASE("schema validation rejects out-of-range single fields") {
  FrameRecord r = valid_record();
  CHECK_NOTHROW(validate_record(r, 0));

  SUBCASE("steer 1.5") {
    r.steer = 1.5;
    CHECK_THROWS_AS(validate_record(r, 4), SchemaViolation);
    try {
      validate_record(r, 4);
    } catch (const SchemaViolation& e) {
      CHECK(e.field == "steer");
      CHECK(e.row == 4);
    }
  }
  SUBCASE("heading 0 is outside (0, 360]") {
    r.heading = 0.0;
    CHECK_THROWS_AS(validate_record(r, 0), SchemaViolation);
  }
  SUBCASE("heading 360 is valid") {
    r.heading = 360.0;
    CHECK_NOTHROW(validate_record(r, 0));
  }
  SUBCASE("negative speed") {
    r.speed = -0.1;
    CHECK_THROWS_AS(validate_record(r, 0), SchemaViolation);
  }
  SUBCASE("color component above 255") {
    r.color[1] = 270;
    CHECK_THROWS_AS(validate_record(r, 0), SchemaViolation);
  }
  SUBCASE("rel_x beyond the 50 m pool") {
    r.rel_x = 50.5;
    CHECK_THROWS_AS(validate_record(r, 0), SchemaViolation);
  }
  SUBCASE("ego rows must have zero rel fields") {
    r.actor_type = traffic::ActorType::Ego;
    CHECK_THROWS_AS(validate_record(r, 0), SchemaViolation);
    r.rel_angle = r.rel_x = r.rel_y = 0.0;
    CHECK_NOTHROW(validate_record(r, 0));
  }
  SUBCASE("timestamp must match the frame index") {
    r.timestamp = 0.3;
    CHECK_THROWS_AS(validate_record(r, 0), SchemaViolation);
  }
}

TEST_CASE("mutation fuzzing: every out-of-range mutation is rejected") {
  Rng rng(77);
  int rejected = 0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    FrameRecord r = valid_record();
    switch (rng.uniform_below(12)) {
      case 0: r.heading = rng.bernoulli(0.5) ? rng.uniform(-400, 0) : rng.uniform(360.001, 900); break;
      case 1: r.steer = rng.bernoulli(0.5) ? rng.uniform(1.0, 5.0) : rng.uniform(-5.0, -1.0); break;
      case 2: r.throttle = rng.bernoulli(0.5) ? rng.uniform(1.0001, 3.0) : rng.uniform(-2.0, -0.0001); break;
      case 3: r.brake = rng.bernoulli(0.5) ? rng.uniform(1.0001, 3.0) : rng.uniform(-2.0, -0.0001); break;
      case 4: r.speed = rng.uniform(-100.0, -0.001); break;
      case 5: r.red_light = rng.bernoulli(0.5) ? 2 : -1; break;
      case 6: r.rel_angle = rng.bernoulli(0.5) ? rng.uniform(-300, 0) : rng.uniform(360.001, 700); break;
      case 7: r.rel_x = rng.bernoulli(0.5) ? rng.uniform(-50, -0.001) : rng.uniform(50.001, 200); break;
      case 8: r.lane_width = rng.uniform(-5.0, 0.0); break;
      case 9: r.off_center = rng.uniform(-5.0, -0.001); break;
      case 10: r.color[rng.uniform_below(3)] = rng.bernoulli(0.5) ? -1 - static_cast<int>(rng.uniform_below(100)) : 256 + static_cast<int>(rng.uniform_below(100)); break;
      case 11: r.extent_length = rng.uniform(-4.0, 0.0); break;
    }
    try {
      validate_record(r, i);
    } catch (const SchemaViolation&) {
      ++rejected;
    }
  }
  CHECK(rejected == cases);
}

TEST_CASE("round-trip of a full scenario is field-identical") {
  const auto log = small_log();
  const std::string csv = frames_to_csv(log.frames);
  const auto parsed = frames_from_csv(csv);
  REQUIRE(parsed.size() == log.frames.size());
  // identity at the documented 9-significant-digit precision: re-serializing
  // reproduces the same bytes
  CHECK(frames_to_csv(parsed) == csv);
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].actor_id == log.frames[i].actor_id);
    CHECK(parsed[i].frame == log.frames[i].frame);
    CHECK(parsed[i].attr == log.frames[i].attr);
    CHECK(parsed[i].color == log.frames[i].color);
    CHECK(parsed[i].lane_type == log.frames[i].lane_type);
    CHECK(parsed[i].possible_maneuvers == log.frames[i].possible_maneuvers);
  }
}

TEST_CASE("scenario directory write/read round trip") {
  const auto log = small_log();
  const std::string dir = "dataset_test_out/000007";
  write_scenario(log, dir);
  const auto loaded = read_scenario(dir);
  CHECK(loaded.scenario_id == log.scenario_id);
  CHECK(loaded.archetype == log.archetype);
  CHECK(loaded.weather.preset == log.weather.preset);
  CHECK(loaded.terminated_by == log.terminated_by);
  CHECK(frames_to_csv(loaded.frames) == frames_to_csv(log.frames));
}

TEST_CASE("split_dataset: exact counts, disjoint, exhaustive, stratified") {
  std::vector<SplitItem> items;
  const char* groups[] = {"A", "B", "C", "D", "E", "F"};
  for (int i = 0; i < 600; ++i) items.push_back({i, groups[i / 100]});

  const auto splits = split_dataset(items, 360, 120, 120, 42);
  CHECK(splits.train.size() == 360);
  CHECK(splits.val.size() == 120);
  CHECK(splits.test.size() == 120);

  std::set<int> all;
  for (int id : splits.train) all.insert(id);
  for (int id : splits.val) all.insert(id);
  for (int id : splits.test) all.insert(id);
  CHECK(all.size() == 600);

  // per-group stratification: each group contributes 60/20/20
  for (int g = 0; g < 6; ++g) {
    auto count_in = [&](const std::vector<int>& ids) {
      int n = 0;
      for (int id : ids)
        if (id / 100 == g) ++n;
      return n;
    };
    CHECK(count_in(splits.train) == 60);
    CHECK(count_in(splits.val) == 20);
    CHECK(count_in(splits.test) == 20);
  }

  const auto again = split_dataset(items, 360, 120, 120, 42);
  CHECK(again.train == splits.train);
  CHECK(again.val == splits.val);
  CHECK(again.test == splits.test);
  const auto other = split_dataset(items, 360, 120, 120, 43);
  CHECK(other.train != splits.train);
}

TEST_CASE("split_dataset scales to small sets and rejects impossible requests") {
  std::vector<SplitItem> items;
  for (int i = 0; i < 10; ++i) items.push_back({i, "A"});
  const auto s = split_dataset(items, 6, 2, 2, 1);
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  CHECK_THROWS_AS(split_dataset(items, 9, 2, 2, 1), InsufficientScenarios);
}

TEST_CASE("filter_training drops only ego-crash scenarios") {
  std::vector<int> ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::map<int, bool> crashed = {{2, true}, {5, true}, {7, true}, {3, false}};
  const auto kept = filter_training(ids, crashed);
  CHECK(kept == std::vector<int>{1, 3, 4, 6, 8, 9, 10});
  const auto identity = filter_training(ids, {});
  CHECK(identity == ids);
}

TEST_CASE("downsample keeps every eighth frame") {
  const auto log = small_log();
  const int steps = log.timestep_count();
  const auto low = downsample(log, 2.5);
  CHECK(low.fps == doctest::Approx(2.5));
  std::set<int> frames;
  for (const auto& r : low.frames) {
    CHECK(r.frame % 8 == 0);
    frames.insert(r.frame);
  }
  CHECK(static_cast<int>(frames.size()) == (steps - 1) / 8 + 1);
  if (steps == 601) CHECK(frames.size() == 76);

  const auto identity = downsample(log, 20.0);
  CHECK(identity.frames.size() == log.frames.size());

  CHECK_THROWS_AS(downsample(log, 3.0), IncompatibleRate);
}

TEST_CASE("downsampling a 5-frame log keeps one frame") {
  sim::ScenarioLog log;
  log.fps = 20.0;
  for (int f = 0; f < 5; ++f) {
    FrameRecord r = valid_record();
    r.frame = f;
    r.timestamp = f * 0.05;
    log.frames.push_back(r);
  }
  const auto low = downsample(log, 2.5);
  CHECK(low.frames.size() == 1);
  CHECK(low.frames[0].frame == 0);
}

TEST_CASE("window extraction arithmetic and local frame") {
  const auto log = long_log(11, 14, 601);
  REQUIRE(log.timestep_count() == 601);
  const auto low = downsample(log, 2.5);
  REQUIRE(low.timestep_count() == 76);

  const auto dense = extract_windows(low, 8, 8, 1);
  CHECK(dense.size() == 61);
  const auto sparse = extract_windows(low, 8, 8, 16);
  CHECK(sparse.size() == 4);

  for (const auto& w : dense) {
    REQUIRE(!w.vehicle_ids.empty());
    // the ego's final observed position is the window origin
    CHECK(w.obs[0][7].x == doctest::Approx(0.0));
    CHECK(w.obs[0][7].y == doctest::Approx(0.0));
    for (const auto& track : w.obs) CHECK(track.size() == 8);
    for (const auto& track : w.fut) CHECK(track.size() == 8);
    for (const auto& rows : w.context) CHECK(rows.size() == 8);
  }
}

TEST_CASE("short logs yield zero windows") {
  sim::ScenarioLog log;
  log.fps = 2.5;
  for (int f = 0; f < 15; ++f) {
    FrameRecord r = valid_record();
    r.actor_type = traffic::ActorType::Ego;
    r.rel_angle = r.rel_x = r.rel_y = 0.0;
    r.frame = f * 8;
    r.timestamp = r.frame * 0.05;
    log.frames.push_back(r);
  }
  CHECK(extract_windows(log, 8, 8, 1).empty());
}

TEST_CASE("context encoding: dictionaries, standardization, unknown categories") {
  FeatureStats stats;
  stats.mean = {10.0, 0, 0, 0.5, 0, 0, 3.5, 0.1};
  stats.stddev = {2.0, 1, 1, 0.25, 1, 1, 0.5, 0.05};

  ContextRow row;
  row.heading = 90.0;
  row.speed = 10.0;  // equals the mean -> standardized 0
  row.throttle = 0.75;
  row.lane_type = "Driving";
  row.right_mark_type = "Solid";
  row.left_mark_type = "Broken";
  row.possible_maneuvers = "Left";
  row.lane_width = 3.5;
  row.off_center = 0.1;

  const auto enc = encode_context_row(row, stats);
  CHECK(enc.size() == 26);
  CHECK(enc[0] == doctest::Approx(0.0));          // speed at the mean
  CHECK(enc[3] == doctest::Approx(1.0));          // (0.75-0.5)/0.25
  CHECK(enc[8] == doctest::Approx(1.0));          // sin(90)
  CHECK(enc[9] == doctest::Approx(0.0).epsilon(1e-9));  // cos(90)
  CHECK(enc[11] == 1.0);                          // Driving one-hot
  CHECK(enc[12] == 0.0);
  CHECK(enc[14] == 1.0);                          // right mark Solid
  CHECK(enc[19] == 1.0);                          // left mark Broken
  CHECK(enc[22] == 1.0);                          // maneuvers Left

  ContextRow bad = row;
  bad.possible_maneuvers = "Diagonal";
  CHECK_THROWS_AS(encode_context_row(bad, stats), UnknownCategory);
}

TEST_CASE("encoding width is constant across a generated run") {
  const auto log = long_log(13, 12);
  const auto low = downsample(log, 2.5);
  const auto windows = extract_windows(low, 8, 8, 4);
  REQUIRE(!windows.empty());
  const auto stats = FeatureStats::fit(windows);
  for (const auto& w : windows)
    for (const auto& rows : w.context)
      for (const auto& row : rows)
        CHECK(encode_context_row(row, stats).size() == 26);
}

TEST_CASE("feature stats round trip through stats.json") {
  const auto log = long_log(17, 10);
  const auto windows = extract_windows(downsample(log, 2.5), 8, 8, 8);
  REQUIRE(!windows.empty());
  const auto stats = FeatureStats::fit(windows);
  std::filesystem::create_directories("dataset_test_out");
  stats.save("dataset_test_out/stats.json");
  const auto loaded = FeatureStats::load("dataset_test_out/stats.json");
  for (int i = 0; i < kNumericCount; ++i) {
    CHECK(loaded.mean[static_cast<std::size_t>(i)] ==
          doctest::Approx(stats.mean[static_cast<std::size_t>(i)]).epsilon(1e-12));
    CHECK(loaded.stddev[static_cast<std::size_t>(i)] ==
          doctest::Approx(stats.stddev[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}
