#include <doctest.h>

#include <cmath>

#include "lr3d/geometry.hpp"
#include "lr3d/rng.hpp"

using namespace lr3d;
using namespace lr3d::geometry;

namespace {

const CameraIntrinsics kCam{1000.0, 1000.0, 960.0, 540.0, 1920.0, 1080.0};

// Independent corner-projection oracle: rebuilds the 8 corners with its own
// rotation arithmetic and projects them one by one.
Box2D oracle_project(const CameraIntrinsics& K, const ObjectState& obj) {
  double u_min = 1e300, u_max = -1e300, v_min = 1e300, v_max = -1e300;
  for (int il = -1; il <= 1; il += 2) {
    for (int iw = -1; iw <= 1; iw += 2) {
      for (int ih = -1; ih <= 1; ih += 2) {
        const double xl = il * obj.size.x() / 2.0;
        const double zl = iw * obj.size.y() / 2.0;
        const double yl = ih * obj.size.z() / 2.0;
        const double x = obj.center.x() + std::cos(obj.yaw) * xl + std::sin(obj.yaw) * zl;
        const double y = obj.center.y() + yl;
        const double z = obj.center.z() - std::sin(obj.yaw) * xl + std::cos(obj.yaw) * zl;
        REQUIRE(z > 0.0);
        const double u = K.fx * x / z + K.cx;
        const double v = K.fy * y / z + K.cy;
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
        v_min = std::min(v_min, v);
        v_max = std::max(v_max, v);
      }
    }
  }
  return {u_max - u_min, v_max - v_min, (u_min + u_max) / 2.0, (v_min + v_max) / 2.0};
}

ObjectState car_at(double x, double y, double z, double yaw = 0.0) {
  ObjectState obj;
  obj.center = {x, y, z};
  obj.size = {4.0, 2.0, 1.5};
  obj.yaw = yaw;
  return obj;
}

ObjectState random_object(Rng& rng) {
  ObjectState obj;
  const double d = rng.uniform(8.0, 100.0);
  obj.center = {rng.uniform(-0.3, 0.3) * d, rng.uniform(-0.05, 0.05) * d, d};
  obj.size = {rng.uniform(3.0, 6.0), rng.uniform(1.5, 2.2), rng.uniform(1.3, 2.5)};
  obj.yaw = wrap_angle(rng.uniform(-kPi, kPi));
  return obj;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(kPi / 2 + 2.0 * kPi) == doctest::Approx(kPi / 2));
}

TEST_CASE("project_box matches the corner-projection oracle") {
  // Extreme corners sit at z = 49 for this frontal car at 50 m.
  const ObjectState obj = car_at(0.0, 0.0, 50.0);
  const Box2D b = project_box(kCam, obj);
  CHECK(b.w2d == doctest::Approx(2.0 * 2.0 * 1000.0 / 49.0).epsilon(1e-9));  // 81.6327
  CHECK(b.w2d == doctest::Approx(81.6327).epsilon(1e-4));
  CHECK(b.h2d == doctest::Approx(2.0 * 0.75 * 1000.0 / 49.0).epsilon(1e-9));  // 30.6122
  CHECK(b.h2d == doctest::Approx(30.6122).epsilon(1e-4));

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const ObjectState o = random_object(rng);
    const Box2D got = project_box(kCam, o);
    const Box2D want = oracle_project(kCam, o);
    CHECK(got.w2d == doctest::Approx(want.w2d).epsilon(1e-12));
    CHECK(got.h2d == doctest::Approx(want.h2d).epsilon(1e-12));
    CHECK(got.u == doctest::Approx(want.u).epsilon(1e-12));
    CHECK(got.v == doctest::Approx(want.v).epsilon(1e-12));
  }
}

TEST_CASE("project_box degenerate and rotated boxes") {
  ObjectState point = car_at(0.0, 0.0, 50.0);
  point.size = {0.0, 0.0, 0.0};
  const Box2D b = project_box(kCam, point);
  CHECK(b.w2d == 0.0);
  CHECK(b.h2d == 0.0);

  // Length axis rotated onto z: x extent comes from the 2 m width at z = 48.
  const Box2D r = project_box(kCam, car_at(0.0, 0.0, 50.0, kPi / 2.0));
  CHECK(r.w2d == doctest::Approx(2.0 * 1000.0 / 48.0).epsilon(1e-9));  // 41.667
  CHECK(r.w2d == doctest::Approx(41.667).epsilon(1e-3));
}

TEST_CASE("project_box rejects corners behind the camera") {
  CHECK_THROWS_AS(project_box(kCam, car_at(0.0, 0.0, 1.0)), CornerBehindCamera);
}

TEST_CASE("relative_orientation basics") {
  CHECK(relative_orientation(car_at(0.0, 0.0, 50.0, 0.0)).o == doctest::Approx(0.0));
  CHECK(relative_orientation(car_at(50.0, 0.0, 50.0, 0.0)).o == doctest::Approx(-kPi / 4.0));
  CHECK(relative_orientation(car_at(0.0, 0.0, 30.0, kPi)).o == doctest::Approx(kPi));
}

TEST_CASE("move_along_ray") {
  SUBCASE("on-axis object keeps yaw") {
    const ObjectState moved = move_along_ray(car_at(0.0, 0.0, 50.0, 0.3), 100.0);
    CHECK(moved.center.z() == doctest::Approx(100.0));
    CHECK(moved.center.x() == doctest::Approx(0.0));
    CHECK(moved.yaw == doctest::Approx(0.3));
  }
  SUBCASE("off-axis object scales and preserves relative orientation") {
    const ObjectState obj = car_at(10.0, 0.0, 50.0, 0.0);
    const ObjectState moved = move_along_ray(obj, 100.0);
    CHECK(moved.center.x() == doctest::Approx(20.0));
    CHECK(moved.center.z() == doctest::Approx(100.0));
    CHECK(relative_orientation(moved).o ==
          doctest::Approx(relative_orientation(obj).o).epsilon(1e-12));
  }
  SUBCASE("identity at the original depth") {
    const ObjectState obj = car_at(7.0, -1.0, 42.0, 1.1);
    const ObjectState same = move_along_ray(obj, obj.center.z());
    CHECK((same.center - obj.center).norm() == doctest::Approx(0.0));
    CHECK(same.yaw == doctest::Approx(obj.yaw));
  }
  CHECK_THROWS_AS(move_along_ray(car_at(0, 0, 50), 0.0), NonPositiveDepth);
  CHECK_THROWS_AS(move_along_ray(car_at(0, 0, 50), -3.0), NonPositiveDepth);
}

TEST_CASE("synthesize_pair") {
  SUBCASE("thin plane halves when depth doubles") {
    ObjectState plane = car_at(0.0, 0.0, 50.0);
    plane.size = {0.0, 0.0, 1.5};
    const auto [b50, d50] = synthesize_pair(kCam, plane, 50.0);
    const auto [b100, d100] = synthesize_pair(kCam, plane, 100.0);
    CHECK(d100 == 100.0);
    CHECK(b100.h2d == doctest::Approx(b50.h2d / 2.0).epsilon(1e-12));
  }
  SUBCASE("frozen oracle value at d* = 100") {
    // Extreme corners at z = 99 after the move.
    const auto [b, d] = synthesize_pair(kCam, car_at(0.0, 0.0, 50.0), 100.0);
    CHECK(b.h2d == doctest::Approx(2.0 * 0.75 * 1000.0 / 99.0).epsilon(1e-9));  // 15.1515
    CHECK(b.h2d == doctest::Approx(15.1515).epsilon(1e-4));
  }
  SUBCASE("identity at the original depth") {
    const ObjectState obj = car_at(4.0, 0.5, 60.0, 0.7);
    const auto [b, d] = synthesize_pair(kCam, obj, obj.depth());
    const Box2D direct = project_box(kCam, obj);
    CHECK(b.w2d == doctest::Approx(direct.w2d).epsilon(1e-12));
    CHECK(b.h2d == doctest::Approx(direct.h2d).epsilon(1e-12));
    CHECK(d == obj.depth());
  }
}

TEST_CASE("property: box extents strictly decrease along the ray") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const ObjectState obj = random_object(rng);
    double prev_w = 1e300, prev_h = 1e300;
    for (double d = 20.0; d <= 200.0; d *= 1.25) {
      const auto [b, depth] = synthesize_pair(kCam, obj, d);
      CHECK(b.w2d < prev_w);
      CHECK(b.h2d < prev_h);
      prev_w = b.w2d;
      prev_h = b.h2d;
    }
  }
}

TEST_CASE("property: relative orientation is ray-invariant") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const ObjectState obj = random_object(rng);
    const double o = relative_orientation(obj).o;
    const double d = rng.uniform(10.0, 300.0);
    const double o_moved = relative_orientation(move_along_ray(obj, d)).o;
    CHECK(std::abs(wrap_angle(o_moved - o)) < 1e-12);
  }
}

TEST_CASE("property: on-axis thin-plane scale law h2d * d is constant") {
  ObjectState plane;
  plane.center = {0.0, 0.0, 30.0};
  plane.size = {0.0, 0.0, 1.7};
  const double ref = synthesize_pair(kCam, plane, 30.0).first.h2d * 30.0;
  for (double d = 10.0; d < 500.0; d *= 1.7) {
    const double prod = synthesize_pair(kCam, plane, d).first.h2d * d;
    CHECK(prod == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("property: move_along_ray round trip") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const ObjectState obj = random_object(rng);
    const double a = rng.uniform(5.0, 250.0);
    const ObjectState back = move_along_ray(move_along_ray(obj, a), obj.center.z());
    CHECK((back.center - obj.center).norm() < 1e-12 * obj.center.norm());
    CHECK(std::abs(wrap_angle(back.yaw - obj.yaw)) < 1e-12);
  }
}

TEST_CASE("depth_from_h2d inverts the projection") {
  const ObjectState obj = car_at(5.0, 0.0, 50.0, 0.4);
  for (double d : {12.0, 35.0, 80.0, 140.0}) {
    const double h = synthesize_pair(kCam, obj, d).first.h2d;
    const double rec = depth_from_h2d(kCam, obj, h, 5.0, 300.0);
    CHECK(synthesize_pair(kCam, obj, rec).first.h2d == doctest::Approx(h).epsilon(1e-6));
    CHECK(rec == doctest::Approx(d).epsilon(1e-6));
  }
}

TEST_CASE("camera intrinsics validation") {
  CHECK_NOTHROW(kCam.validate());
  CameraIntrinsics bad = kCam;
  bad.fx = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = kCam;
  bad.cx = 5000.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
