#pragma once

#include <map>
#include <string>
#include <vector>

#include "vtrackit/dataset.hpp"
#include "vtrackit/runconfig.hpp"
#include "vtrackit/scenario.hpp"

namespace vtrackit::pipeline {

struct GenerateSummary {
  int total = 0;
  int ego_crashes = 0;
  std::map<std::string, int> per_map;
  dataset::Splits splits;
};

std::string scenario_dir(const std::string& root, const std::string& split, int id);

// Generates every scenario into <out>/<split>/<id>/ plus splits.json. Workers
// share nothing but the immutable maps; output bytes do not depend on the
// worker count.
GenerateSummary generate_dataset(const config::RunConfig& cfg,
                                 const std::string& out_dir);

// Reads one split, optionally dropping ego-crash scenarios, downsamples to
// 2.5 FPS and slices windows.
std::vector<dataset::TrajectoryWindow> load_windows(const std::string& data_dir,
                                                    const std::string& split,
                                                    int stride,
                                                    bool exclude_ego_crash);

}  // namespace vtrackit::pipeline
