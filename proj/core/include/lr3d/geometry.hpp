#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <utility>

namespace lr3d::geometry {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct CameraIntrinsics {
  double fx = 0.0;  // focal length, pixels
  double fy = 0.0;
  double cx = 0.0;  // principal point, pixels
  double cy = 0.0;
  double img_w = 0.0;
  double img_h = 0.0;

  // Throws std::invalid_argument on a non-physical calibration.
  void validate() const;
};

// Camera-frame object state: x right, y down, z forward. Yaw rotates about
// the y (vertical) axis; at yaw = 0 the length axis coincides with camera x.
struct ObjectState {
  Eigen::Vector3d center{0.0, 0.0, 0.0};  // meters
  Eigen::Vector3d size{0.0, 0.0, 0.0};    // l, w, h in meters
  double yaw = 0.0;                       // radians, (-pi, pi]
  int class_id = 0;

  double depth() const { return center.z(); }
  double distance() const { return center.norm(); }
};

// Observation angle: heading relative to the viewing ray through the object
// center. Invariant under sliding the object along that ray.
struct RelativeOrientation {
  double o = 0.0;  // radians, (-pi, pi]
};

// Axis-aligned 2D box. (w2d, h2d) is the descriptor fed to depth estimation;
// (u, v) is the box center, kept for ray reconstruction and matching.
struct Box2D {
  double w2d = 0.0;
  double h2d = 0.0;
  double u = 0.0;
  double v = 0.0;
};

struct CornerBehindCamera : std::runtime_error {
  CornerBehindCamera() : std::runtime_error("3D box corner behind camera (z <= 0)") {}
};

struct NonPositiveDepth : std::runtime_error {
  NonPositiveDepth() : std::runtime_error("depth must be positive") {}
};

// The 8 corners of the oriented box, camera frame.
std::array<Eigen::Vector3d, 8> box_corners(const ObjectState& obj);

// Pinhole projection of the oriented box: AABB of the 8 projected corners,
// no image-boundary clipping. Throws CornerBehindCamera if any corner has
// z <= 0.
Box2D project_box(const CameraIntrinsics& K, const ObjectState& obj);

RelativeOrientation relative_orientation(const ObjectState& obj);

// Slides the object along the viewing ray through its center so that the new
// depth (center z) equals d_star. Size is unchanged; yaw is adjusted so the
// relative orientation is preserved. Throws NonPositiveDepth if d_star <= 0.
ObjectState move_along_ray(const ObjectState& obj, double d_star);

// Projection augmentation pair: the 2D box of the object moved to depth
// d_star, together with d_star itself.
std::pair<Box2D, double> synthesize_pair(const CameraIntrinsics& K, const ObjectState& obj,
                                         double d_star);

// Inverts h2d -> depth for a fixed object template by bisection on
// synthesize_pair. h2d must be attainable within [d_lo, d_hi].
double depth_from_h2d(const CameraIntrinsics& K, const ObjectState& obj, double h2d, double d_lo,
                      double d_hi, double tol = 1e-9);

}  // namespace lr3d::geometry
