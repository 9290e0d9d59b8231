#pragma once

// Private JSON helpers shared by the serialization code in core.

#include <nlohmann/json.hpp>

#include "lr3d/geometry.hpp"
#include "lr3d/metrics.hpp"
#include "lr3d/synthdata.hpp"

namespace lr3d::detail {

using nlohmann::json;

inline json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Eigen::Vector3d vec3_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline json object_to_json(const geometry::ObjectState& o) {
  return {{"center", vec3_to_json(o.center)},
          {"size", vec3_to_json(o.size)},
          {"yaw", o.yaw},
          {"class", o.class_id}};
}

inline geometry::ObjectState object_from_json(const json& j) {
  geometry::ObjectState o;
  o.center = vec3_from_json(j.at("center"));
  o.size = vec3_from_json(j.at("size"));
  o.yaw = j.at("yaw").get<double>();
  o.class_id = j.at("class").get<int>();
  return o;
}

inline json box2d_to_json(const geometry::Box2D& b) {
  return json::array({b.w2d, b.h2d, b.u, b.v});
}

inline geometry::Box2D box2d_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

json scene_config_to_json(const synthdata::SceneConfig& c);
synthdata::SceneConfig scene_config_from_json(const json& j);

json record_to_json(const synthdata::AnnotationRecord& r, synthdata::View view);
synthdata::AnnotationRecord record_from_json(const json& j);

inline json detection_to_json(const metrics::DetectionRecord& d) {
  return {{"frame", d.frame_id}, {"id", d.id},           {"class", d.class_id},
          {"center", vec3_to_json(d.center)}, {"size", vec3_to_json(d.size)},
          {"yaw", d.yaw},        {"score", d.score}};
}

inline metrics::DetectionRecord detection_from_json(const json& j) {
  metrics::DetectionRecord d;
  d.frame_id = j.at("frame").get<int>();
  d.id = j.at("id").get<int>();
  d.class_id = j.at("class").get<int>();
  d.center = vec3_from_json(j.at("center"));
  d.size = vec3_from_json(j.at("size"));
  d.yaw = j.at("yaw").get<double>();
  d.score = j.at("score").get<double>();
  return d;
}

}  // namespace lr3d::detail
