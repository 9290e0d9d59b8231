#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include "lr3d/geometry.hpp"
#include "lr3d/iphead.hpp"
#include "lr3d/synthdata.hpp"

namespace lr3d::teacher {

struct MissingFeature : std::runtime_error {
  MissingFeature() : std::runtime_error("record carries no instance feature") {}
};
struct DuplicateId : std::runtime_error {
  explicit DuplicateId(int id)
      : std::runtime_error("duplicate record id " + std::to_string(id)) {}
};

// A reconstructed 3D box for a distant 2D-only record. The center lies on
// the camera ray through the 2D box center, at the teacher's predicted
// depth.
struct PseudoLabel {
  int frame_id = 0;
  int id = 0;
  int class_id = 0;
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  Eigen::Vector3d size{0.0, 0.0, 0.0};
  double yaw = 0.0;
  double teacher_depth = 0.0;  // predicted z-depth, meters
  geometry::Box2D box2d;               // copied from the source record
  iphead::InstanceFeature feature;     // copied from the source record
};

// Runs the trained IP-Head over distant records and reconstructs full 3D
// boxes: depth from the model, center by back-projecting the 2D box center,
// size and yaw decoded from the record's feature descriptor.
std::vector<PseudoLabel> pseudo_label(const iphead::IPHeadModel& model,
                                      const geometry::CameraIntrinsics& K,
                                      const std::vector<synthdata::AnnotationRecord>& records);

// Close GT plus pseudo labels in one schema-valid training set. Record ids
// must be disjoint; pseudo records are flagged via provenance.
synthdata::Dataset merge(const std::vector<synthdata::AnnotationRecord>& close_gt,
                         const std::vector<PseudoLabel>& pseudo,
                         const synthdata::SceneConfig& config);

}  // namespace lr3d::teacher
