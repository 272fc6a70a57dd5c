#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace vtrackit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::sqrt(x * x + y * y); }
  double dist(const Vec2& o) const { return (*this - o).norm(); }

  Vec2 normalized() const {
    const double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{1.0, 0.0};
  }
  // 90 degrees clockwise (right-hand normal for a direction vector).
  Vec2 perp_right() const { return {y, -x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

constexpr double kDegPerRad = 57.29577951308232;

// Compass heading in degrees, (0, 360]: North (+y) maps to 360, East (+x)
// to 90.
inline double heading_from_dir(const Vec2& dir) {
  double deg = std::atan2(dir.x, dir.y) * kDegPerRad;
  deg = std::fmod(deg, 360.0);
  if (deg <= 0.0) deg += 360.0;
  return deg;
}

inline Vec2 dir_from_heading(double heading_deg) {
  const double rad = heading_deg / kDegPerRad;
  return {std::sin(rad), std::cos(rad)};
}

inline double normalize_heading(double deg) {
  deg = std::fmod(deg, 360.0);
  if (deg <= 0.0) deg += 360.0;
  return deg;
}

// Smallest signed angular difference a - b in (-180, 180].
inline double heading_diff(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

// Open polyline with cached cumulative arclength.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) { rebuild(); }

  const std::vector<Vec2>& points() const { return pts_; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  std::size_t size() const { return pts_.size(); }

  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;

  struct Projection {
    double s = 0.0;        // arclength of the closest point
    double lateral = 0.0;  // signed offset, positive to the left of travel
    double dist = 0.0;     // unsigned distance
  };
  Projection project(const Vec2& p) const;

  // Max absolute curvature (1/m) estimated from vertex turn angles.
  double max_curvature() const;

 private:
  void rebuild();

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

// Cubic Bezier sampled at n points (n >= 2), used for junction connectors.
std::vector<Vec2> sample_bezier(const Vec2& p0, const Vec2& c0, const Vec2& c1,
                                const Vec2& p1, int n);

// Circular arc from angle a0 to a1 (radians, CCW positive) around center.
std::vector<Vec2> sample_arc(const Vec2& center, double radius, double a0,
                             double a1, int n);

// Oriented rectangle overlap via separating axis test.
struct Obb {
  Vec2 center;
  Vec2 forward;  // unit
  double half_length = 0.0;
  double half_width = 0.0;
};
bool obb_overlap(const Obb& a, const Obb& b);

}  // namespace vtrackit
