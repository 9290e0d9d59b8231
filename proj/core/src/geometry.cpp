#include "lr3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lr3d::geometry {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("focal lengths must be positive");
  if (!(cx > 0.0 && cx < img_w)) throw std::invalid_argument("cx outside image");
  if (!(cy > 0.0 && cy < img_h)) throw std::invalid_argument("cy outside image");
}

std::array<Eigen::Vector3d, 8> box_corners(const ObjectState& obj) {
  const double hl = 0.5 * obj.size.x();
  const double hw = 0.5 * obj.size.y();
  const double hh = 0.5 * obj.size.z();
  const double c = std::cos(obj.yaw);
  const double s = std::sin(obj.yaw);

  std::array<Eigen::Vector3d, 8> out;
  int k = 0;
  for (int il : {-1, 1}) {
    for (int iw : {-1, 1}) {
      for (int ih : {-1, 1}) {
        const double xl = il * hl;  // length axis (heading)
        const double zl = iw * hw;  // lateral axis
        const double yl = ih * hh;  // vertical axis, y down
        // Rotation about y: at yaw = 0 length lies along camera x.
        const double x = c * xl + s * zl;
        const double z = -s * xl + c * zl;
        out[k++] = obj.center + Eigen::Vector3d(x, yl, z);
      }
    }
  }
  return out;
}

Box2D project_box(const CameraIntrinsics& K, const ObjectState& obj) {
  const auto corners = box_corners(obj);
  double u_min = std::numeric_limits<double>::infinity();
  double u_max = -std::numeric_limits<double>::infinity();
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : corners) {
    if (!(p.z() > 0.0)) throw CornerBehindCamera();
    const double u = K.fx * p.x() / p.z() + K.cx;
    const double v = K.fy * p.y() / p.z() + K.cy;
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
  }
  Box2D b;
  b.w2d = u_max - u_min;
  b.h2d = v_max - v_min;
  b.u = 0.5 * (u_min + u_max);
  b.v = 0.5 * (v_min + v_max);
  return b;
}

RelativeOrientation relative_orientation(const ObjectState& obj) {
  return {wrap_angle(obj.yaw - std::atan2(obj.center.x(), obj.center.z()))};
}

ObjectState move_along_ray(const ObjectState& obj, double d_star) {
  if (!(d_star > 0.0)) throw NonPositiveDepth();
  const double o = relative_orientation(obj).o;
  ObjectState out = obj;
  out.center = obj.center * (d_star / obj.center.z());
  out.yaw = wrap_angle(o + std::atan2(out.center.x(), out.center.z()));
  return out;
}

std::pair<Box2D, double> synthesize_pair(const CameraIntrinsics& K, const ObjectState& obj,
                                         double d_star) {
  return {project_box(K, move_along_ray(obj, d_star)), d_star};
}

double depth_from_h2d(const CameraIntrinsics& K, const ObjectState& obj, double h2d, double d_lo,
                      double d_hi, double tol) {
  // h2d is strictly decreasing in depth; bisect on the residual sign.
  auto h_at = [&](double d) { return synthesize_pair(K, obj, d).first.h2d; };
  double lo = d_lo, hi = d_hi;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (h_at(mid) > h2d) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lr3d::geometry
