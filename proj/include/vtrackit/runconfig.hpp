#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vtrackit/eval.hpp"
#include "vtrackit/roadnet.hpp"
#include "vtrackit/traffic.hpp"

namespace vtrackit::config {

// Flat "[section]" + "key = value" file. Unknown keys are an error so typos
// surface immediately; CLI flags override file values.
struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = "out";

  // generation
  std::vector<roadnet::Archetype> maps = {
      roadnet::Archetype::UrbanLow,     roadnet::Archetype::UrbanHighway,
      roadnet::Archetype::Highway,      roadnet::Archetype::Hybrid,
      roadnet::Archetype::LongHighway,  roadnet::Archetype::UrbanHD};
  int scenarios_per_map = 100;
  int n_actors = 24;
  int n_aggressive = 2;
  int n_cautious = 2;
  int workers = 0;  // 0 = hardware concurrency
  double duration_s = 30.0;
  traffic::FuzzBounds fuzz;

  // training
  int epochs = 200;
  int batch = 64;
  double lr = 1e-3;
  int k = 5;
  double lambda_mse = 1.0;
  bool loss_literal_eq8 = false;
  bool cm_inverse_l1 = true;
  int lr_patience = 10;
  int train_stride = 1;
  int eval_stride = 16;

  // eval
  std::vector<int> ks = {1, 3, 5};
  std::vector<int> horizons = {5, 6, 8};
  eval::Task task = eval::Task::AllVehicles;
  bool missrate_per_sample = false;
  int histogram_bins = 40;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig parse_file(const std::string& path);
void apply_entry(RunConfig& cfg, const std::string& section, const std::string& key,
                 const std::string& value);

}  // namespace vtrackit::config
