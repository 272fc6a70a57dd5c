#pragma once

#include <string>

#include "vtrackit/roadnet.hpp"
#include "vtrackit/scenario.hpp"

namespace vtrackit::raster {

// Schematic top-down view: lanes in grey, junction lanes lighter, the ego
// trajectory in red and traffic trajectories in blue.
void render_scenario(const roadnet::RoadMap& map, const sim::ScenarioLog& log,
                     const std::string& png_path, int width_px = 1024);

void render_map(const roadnet::RoadMap& map, const std::string& png_path,
                int width_px = 1024);

}  // namespace vtrackit::raster
