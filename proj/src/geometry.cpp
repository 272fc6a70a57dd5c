#include "vtrackit/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace vtrackit {

void Polyline::rebuild() {
  cum_.resize(pts_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (i > 0) acc += pts_[i].dist(pts_[i - 1]);
    cum_[i] = acc;
  }
}

Vec2 Polyline::point_at(double s) const {
  assert(!pts_.empty());
  if (pts_.size() == 1 || s <= 0.0) return pts_.front();
  if (s >= length()) return pts_.back();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
  const double seg = cum_[i] - cum_[i - 1];
  const double t = seg > 0 ? (s - cum_[i - 1]) / seg : 0.0;
  return pts_[i - 1] + (pts_[i] - pts_[i - 1]) * t;
}

Vec2 Polyline::tangent_at(double s) const {
  if (pts_.size() < 2) return {1.0, 0.0};
  if (s <= 0.0) return (pts_[1] - pts_[0]).normalized();
  if (s >= length()) return (pts_[pts_.size() - 1] - pts_[pts_.size() - 2]).normalized();
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
  return (pts_[i] - pts_[i - 1]).normalized();
}

Polyline::Projection Polyline::project(const Vec2& p) const {
  Projection best;
  best.dist = std::numeric_limits<double>::infinity();
  if (pts_.empty()) return best;
  if (pts_.size() == 1) {
    best = {0.0, 0.0, pts_[0].dist(p)};
    return best;
  }
  for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
    const Vec2 a = pts_[i];
    const Vec2 b = pts_[i + 1];
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q = a + ab * t;
    const double d = q.dist(p);
    if (d < best.dist) {
      best.dist = d;
      best.s = cum_[i] + std::sqrt(len2) * t;
      // left of travel is positive
      const double side = ab.normalized().cross(p - q);
      best.lateral = side >= 0 ? d : -d;
    }
  }
  return best;
}

double Polyline::max_curvature() const {
  if (pts_.size() < 3) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < pts_.size(); ++i) {
    const Vec2 d0 = (pts_[i] - pts_[i - 1]);
    const Vec2 d1 = (pts_[i + 1] - pts_[i]);
    const double l0 = d0.norm();
    const double l1 = d1.norm();
    if (l0 < 1e-9 || l1 < 1e-9) continue;
    const double cosang = std::clamp(d0.dot(d1) / (l0 * l1), -1.0, 1.0);
    const double ang = std::acos(cosang);
    const double kappa = ang / (0.5 * (l0 + l1));
    worst = std::max(worst, kappa);
  }
  return worst;
}

std::vector<Vec2> sample_bezier(const Vec2& p0, const Vec2& c0, const Vec2& c1,
                                const Vec2& p1, int n) {
  assert(n >= 2);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const double u = 1.0 - t;
    const Vec2 pt = p0 * (u * u * u) + c0 * (3 * u * u * t) + c1 * (3 * u * t * t) +
                    p1 * (t * t * t);
    out.push_back(pt);
  }
  return out;
}

std::vector<Vec2> sample_arc(const Vec2& center, double radius, double a0,
                             double a1, int n) {
  assert(n >= 2);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = a0 + (a1 - a0) * static_cast<double>(i) / (n - 1);
    out.push_back(center + Vec2{std::cos(t), std::sin(t)} * radius);
  }
  return out;
}

namespace {

void obb_corners(const Obb& r, Vec2 out[4]) {
  const Vec2 f = r.forward * r.half_length;
  const Vec2 s = r.forward.perp_right() * r.half_width;
  out[0] = r.center + f + s;
  out[1] = r.center + f - s;
  out[2] = r.center - f - s;
  out[3] = r.center - f + s;
}

bool separated_on_axis(const Vec2 a[4], const Vec2 b[4], const Vec2& axis) {
  double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
  for (int i = 0; i < 4; ++i) {
    const double pa = a[i].dot(axis);
    const double pb = b[i].dot(axis);
    amin = std::min(amin, pa);
    amax = std::max(amax, pa);
    bmin = std::min(bmin, pb);
    bmax = std::max(bmax, pb);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool obb_overlap(const Obb& a, const Obb& b) {
  Vec2 ca[4], cb[4];
  obb_corners(a, ca);
  obb_corners(b, cb);
  const Vec2 axes[4] = {a.forward, a.forward.perp_right(), b.forward,
                        b.forward.perp_right()};
  for (const Vec2& axis : axes) {
    if (separated_on_axis(ca, cb, axis)) return false;
  }
  return true;
}

}  // namespace vtrackit
