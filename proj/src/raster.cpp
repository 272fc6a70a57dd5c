#include "vtrackit/raster.hpp"

#include <algorithm>
#include <cmath>

#include "vtrackit/png.hpp"

namespace vtrackit::raster {

namespace {

struct Viewport {
  double min_x = 0, min_y = 0, scale = 1.0;
  int width = 0, height = 0;

  double px(double x) const { return (x - min_x) * scale + 10.0; }
  // image y grows downward
  double py(double y) const { return height - ((y - min_y) * scale + 10.0); }
};

Viewport fit(const roadnet::RoadMap& map, int width_px) {
  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  for (const auto& lane : map.lanes) {
    for (const auto& p : lane.centerline.points()) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  Viewport vp;
  vp.min_x = min_x;
  vp.min_y = min_y;
  vp.width = width_px;
  vp.scale = (width_px - 20.0) / std::max(1.0, max_x - min_x);
  vp.height = static_cast<int>((max_y - min_y) * vp.scale) + 20;
  return vp;
}

void draw_lanes(Image& img, const Viewport& vp, const roadnet::RoadMap& map) {
  for (const auto& lane : map.lanes) {
    std::uint8_t r = 120, g = 120, b = 120;
    if (lane.type == roadnet::LaneType::Junction) r = g = b = 170;
    if (lane.type == roadnet::LaneType::Shoulder) {
      r = 190;
      g = 190;
      b = 150;
    }
    const auto& pts = lane.centerline.points();
    const double th = std::max(1.0, lane.width * vp.scale * 0.8);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      img.draw_line(vp.px(pts[i].x), vp.py(pts[i].y), vp.px(pts[i + 1].x),
                    vp.py(pts[i + 1].y), th, r, g, b);
    }
  }
}

}  // namespace

void render_map(const roadnet::RoadMap& map, const std::string& png_path,
                int width_px) {
  Viewport vp = fit(map, width_px);
  Image img(vp.width, vp.height);
  draw_lanes(img, vp, map);
  img.write_png(png_path);
}

void render_scenario(const roadnet::RoadMap& map, const sim::ScenarioLog& log,
                     const std::string& png_path, int width_px) {
  Viewport vp = fit(map, width_px);
  Image img(vp.width, vp.height);
  draw_lanes(img, vp, map);

  // trajectories as dots, ego highlighted
  for (const auto& rec : log.frames) {
    const double x = vp.px(rec.pos_x);
    const double y = vp.py(rec.pos_y);
    if (rec.actor_type == traffic::ActorType::Ego)
      img.fill_rect(static_cast<int>(x) - 1, static_cast<int>(y) - 1,
                    static_cast<int>(x) + 1, static_cast<int>(y) + 1, 200, 30, 30);
    else
      img.set(static_cast<int>(x), static_cast<int>(y), 40, 70, 200);
  }
  img.write_png(png_path);
}

}  // namespace vtrackit::raster
