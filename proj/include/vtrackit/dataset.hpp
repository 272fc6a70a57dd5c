#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vtrackit/geometry.hpp"
#include "vtrackit/roadnet.hpp"
#include "vtrackit/traffic.hpp"

namespace vtrackit::sim {
struct ScenarioLog;
}

namespace vtrackit::dataset {

// One per-actor-per-frame annotation row. Composite columns (color, extents,
// acceleration) are kept unpacked here and joined at serialization time.
struct FrameRecord {
  double timestamp = 0.0;
  int frame = 0;
  int actor_id = 0;
  traffic::ActorType actor_type = traffic::ActorType::Traffic;
  std::string attr;
  std::array<int, 3> color{0, 0, 0};
  double pos_x = 0.0, pos_y = 0.0, pos_z = 0.0;
  double heading = 360.0;
  double extent_length = 0.0, extent_width = 0.0;
  double speed = 0.0;
  double accel_x = 0.0, accel_y = 0.0;
  double throttle = 0.0, steer = 0.0, brake = 0.0;
  int red_light = 0;
  // zero for the ego row by convention
  double rel_angle = 0.0, rel_x = 0.0, rel_y = 0.0;
  roadnet::LaneType lane_type = roadnet::LaneType::Driving;
  roadnet::LaneMarking right_mark;
  roadnet::LaneMarking left_mark;
  roadnet::Maneuver possible_maneuvers = roadnet::Maneuver::None;
  double lane_width = 3.5;
  double off_center = 0.0;
};

inline constexpr int kColumnCount = 28;
const std::array<const char*, kColumnCount>& column_names();
std::string header_line();

struct SchemaViolation : std::runtime_error {
  std::string field;
  long row;
  SchemaViolation(std::string field_, long row_)
      : std::runtime_error("schema violation: field '" + field_ + "' at row " +
                           std::to_string(row_)),
        field(std::move(field_)),
        row(row_) {}
};

// Range/value checks for every column; throws SchemaViolation naming the
// first offending field.
void validate_record(const FrameRecord& r, long row);
void validate_log(const sim::ScenarioLog& log);

std::string format_record(const FrameRecord& r);
FrameRecord parse_record(const std::vector<std::string>& fields, long row);

std::string frames_to_csv(const std::vector<FrameRecord>& records);
std::vector<FrameRecord> frames_from_csv(const std::string& text);

// Scenario directory I/O: frames.csv plus meta.json.
void write_scenario(const sim::ScenarioLog& log, const std::string& dir);
sim::ScenarioLog read_scenario(const std::string& dir);

// ---- splits ----

struct SplitItem {
  int scenario_id = 0;
  std::string group;  // archetype, used for stratification
};

struct Splits {
  std::vector<int> train, val, test;
};

struct InsufficientScenarios : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stratified by group, seed-deterministic, disjoint and exhaustive. Val and
// test receive exactly the requested counts; everything else goes to train.
Splits split_dataset(const std::vector<SplitItem>& items, int n_train, int n_val,
                     int n_test, std::uint64_t seed);

void write_splits_json(const Splits& s, const std::string& path);
Splits read_splits_json(const std::string& path);

// Drops scenarios that ended in an ego collision; traffic-only collisions
// stay in.
std::vector<int> filter_training(const std::vector<int>& ids,
                                 const std::map<int, bool>& ego_crashed);

// ---- rate conversion and windows ----

struct IncompatibleRate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Keeps every (source_fps / target_fps)-th frame; timestamps are untouched so
// frame == round(timestamp / 0.05) still holds.
sim::ScenarioLog downsample(const sim::ScenarioLog& log, double target_fps = 2.5);

// The 14 per-step feature variables feeding the correction module, with
// categoricals still in string form so unknown values can be rejected.
struct ContextRow {
  double heading = 360.0;
  double speed = 0.0;
  double accel_x = 0.0, accel_y = 0.0;
  double throttle = 0.0, steer = 0.0, brake = 0.0;
  int red_light = 0;
  std::string lane_type;
  std::string right_mark_type;
  std::string left_mark_type;
  std::string possible_maneuvers;
  double lane_width = 3.5;
  double off_center = 0.0;
};
ContextRow context_from_record(const FrameRecord& r);

struct TrajectoryWindow {
  int scenario_id = 0;
  std::string archetype;
  std::vector<int> vehicle_ids;  // ego first
  // [vehicle][step], scene-local: the ego's last observed position is (0,0)
  std::vector<std::vector<Vec2>> obs;
  std::vector<std::vector<Vec2>> fut;
  std::vector<std::vector<ContextRow>> context;  // [vehicle][observed step]
};

// Sliding windows over a downsampled log. A vehicle joins a window only when
// present in all obs+pred frames; the window survives as long as the ego is.
std::vector<TrajectoryWindow> extract_windows(const sim::ScenarioLog& log,
                                              int obs_steps = 8, int pred_steps = 8,
                                              int stride = 1);

// ---- context encoding ----

inline constexpr int kNumericCount = 8;
inline constexpr int kContextDim = 26;

struct UnknownCategory : std::runtime_error {
  explicit UnknownCategory(const std::string& value)
      : std::runtime_error("unknown category: " + value) {}
};

struct FeatureStats {
  std::array<double, kNumericCount> mean{};
  std::array<double, kNumericCount> stddev{};

  static FeatureStats fit(const std::vector<TrajectoryWindow>& windows);
  void save(const std::string& path) const;
  static FeatureStats load(const std::string& path);
};

// Standardized numerics, heading as (sin, cos), red_light passthrough, fixed
// one-hot dictionaries: d = 26.
std::array<double, kContextDim> encode_context_row(const ContextRow& row,
                                                   const FeatureStats& stats);

}  // namespace vtrackit::dataset
