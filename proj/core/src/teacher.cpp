#include "lr3d/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lr3d::teacher {

std::vector<PseudoLabel> pseudo_label(const iphead::IPHeadModel& model,
                                      const geometry::CameraIntrinsics& K,
                                      const std::vector<synthdata::AnnotationRecord>& records) {
  std::vector<PseudoLabel> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.feature.dim() == 0) throw MissingFeature();
    const double d = iphead::predict_depth(model, rec.feature, rec.box2d);

    PseudoLabel p;
    p.frame_id = rec.frame_id;
    p.id = rec.id;
    p.class_id = rec.class_id;
    p.teacher_depth = d;
    p.box2d = rec.box2d;
    p.feature = rec.feature;

    // Ray through the 2D box center, scaled so the center z equals the
    // predicted depth.
    p.center = {(rec.box2d.u - K.cx) * d / K.fx, (rec.box2d.v - K.cy) * d / K.fy, d};

    // Size and relative orientation come from the feature descriptor:
    // [l, w, h, sin o, cos o, one-hot...].
    p.size = {rec.feature.vec[0], rec.feature.vec[1], rec.feature.vec[2]};
    const double o = std::atan2(rec.feature.vec[3], rec.feature.vec[4]);
    p.yaw = geometry::wrap_angle(o + std::atan2(p.center.x(), p.center.z()));
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const PseudoLabel& a, const PseudoLabel& b) { return a.id < b.id; });
  return out;
}

synthdata::Dataset merge(const std::vector<synthdata::AnnotationRecord>& close_gt,
                         const std::vector<PseudoLabel>& pseudo,
                         const synthdata::SceneConfig& config) {
  synthdata::Dataset out;
  out.config = config;
  out.view = "merged";

  std::set<int> ids;
  for (const auto& r : close_gt) {
    if (!ids.insert(r.id).second) throw DuplicateId(r.id);
    out.records.push_back(r);
  }
  for (const auto& p : pseudo) {
    if (!ids.insert(p.id).second) throw DuplicateId(p.id);
    synthdata::AnnotationRecord rec;
    rec.frame_id = p.frame_id;
    rec.id = p.id;
    rec.class_id = p.class_id;
    rec.box2d = p.box2d;
    rec.feature = p.feature;
    rec.distant = true;
    rec.provenance = "pseudo";
    geometry::ObjectState obj;
    obj.center = p.center;
    obj.size = p.size;
    obj.yaw = p.yaw;
    obj.class_id = p.class_id;
    rec.box3d = obj;
    out.records.push_back(std::move(rec));
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const synthdata::AnnotationRecord& a, const synthdata::AnnotationRecord& b) {
              return a.id < b.id;
            });
  return out;
}

}  // namespace lr3d::teacher
