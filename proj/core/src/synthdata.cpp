#include "lr3d/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json_util.hpp"
#include "lr3d/rng.hpp"

namespace lr3d::synthdata {

using nlohmann::json;

void SceneConfig::validate() const {
  auto fail = [](const std::string& field) { throw ConfigInvalid("invalid field: " + field); };
  if (n_frames <= 0) fail("n_frames");
  if (min_objects < 0 || max_objects < min_objects) fail("min_objects/max_objects");
  if (classes.empty()) fail("classes");
  for (const auto& c : classes) {
    if ((c.size_mean.array() <= 0.0).any()) fail("classes.size_mean");
    if ((c.size_std.array() < 0.0).any()) fail("classes.size_std");
  }
  if (!(depth_min > 0.0 && depth_max > depth_min)) fail("depth_min/depth_max");
  if (!(u_min_frac >= 0.0 && u_max_frac <= 1.0 && u_min_frac < u_max_frac)) fail("u_frac");
  if (!(v_min_frac >= 0.0 && v_max_frac <= 1.0 && v_min_frac < v_max_frac)) fail("v_frac");
  if (!(distant_threshold > 0.0)) fail("distant_threshold");
  if (box_noise_std < 0.0) fail("box_noise_std");
  if (feature_noise_std < 0.0) fail("feature_noise_std");
  try {
    camera.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid(std::string("invalid field: camera (") + e.what() + ")");
  }
}

SceneConfig default_config() {
  SceneConfig c;
  c.classes = {
      {"car", {4.5, 1.9, 1.6}, {0.25, 0.10, 0.08}},
      {"van", {5.6, 2.1, 2.3}, {0.30, 0.10, 0.10}},
      {"compact", {3.6, 1.65, 1.45}, {0.20, 0.08, 0.06}},
  };
  return c;
}

Dataset generate(const SceneConfig& config) {
  config.validate();
  const int n_classes = (int)config.classes.size();
  const auto& K = config.camera;

  Dataset ds;
  ds.config = config;
  ds.view = "full";

  for (int frame = 0; frame < config.n_frames; ++frame) {
    Rng rng(mix_seed(config.seed, (uint64_t)frame));
    const int n_obj = rng.uniform_int(config.min_objects, config.max_objects);
    for (int k = 0; k < n_obj; ++k) {
      const int cls = rng.uniform_int(0, n_classes - 1);
      const ClassSpec& spec = config.classes[cls];

      geometry::ObjectState obj;
      for (int a = 0; a < 3; ++a)
        obj.size[a] = std::max(0.3, spec.size_mean[a] + spec.size_std[a] * rng.normal());
      const double d = rng.log_uniform(config.depth_min, config.depth_max);
      const double u = rng.uniform(config.u_min_frac * K.img_w, config.u_max_frac * K.img_w);
      const double v = rng.uniform(config.v_min_frac * K.img_h, config.v_max_frac * K.img_h);
      obj.center = {(u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d};
      obj.yaw = geometry::wrap_angle(rng.uniform(-geometry::kPi, geometry::kPi));
      obj.class_id = cls;

      AnnotationRecord rec;
      rec.frame_id = frame;
      rec.id = frame * 10000 + k;
      rec.class_id = cls;
      rec.box2d = geometry::project_box(K, obj);
      if (config.box_noise_std > 0.0) {
        rec.box2d.w2d = std::max(0.0, rec.box2d.w2d + rng.normal(0.0, config.box_noise_std));
        rec.box2d.h2d = std::max(0.0, rec.box2d.h2d + rng.normal(0.0, config.box_noise_std));
        rec.box2d.u += rng.normal(0.0, config.box_noise_std);
        rec.box2d.v += rng.normal(0.0, config.box_noise_std);
      }

      Eigen::Vector3d feat_size = obj.size;
      double feat_o = geometry::relative_orientation(obj).o;
      if (config.feature_noise_std > 0.0) {
        for (int a = 0; a < 3; ++a)
          feat_size[a] = std::max(0.1, feat_size[a] + rng.normal(0.0, config.feature_noise_std));
        feat_o = geometry::wrap_angle(feat_o + rng.normal(0.0, config.feature_noise_std));
      }
      rec.feature = iphead::make_feature(feat_size, feat_o, cls, n_classes);

      rec.distant = obj.distance() > config.distant_threshold;
      rec.box3d = obj;
      rec.gt_private = obj;
      ds.records.push_back(std::move(rec));
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw BadFractions();

  std::set<int> frames;
  for (const auto& r : dataset.records) frames.insert(r.frame_id);
  std::vector<int> order(frames.begin(), frames.end());

  Rng rng(mix_seed(dataset.config.seed, 0x5eedULL));
  for (int i = (int)order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, i)]);

  const int n_train = (int)std::lround(train_fraction * order.size());
  std::set<int> train_frames(order.begin(), order.begin() + n_train);

  Dataset train, val;
  train.config = dataset.config;
  train.view = dataset.view;
  val.config = dataset.config;
  val.view = dataset.view;
  for (const auto& r : dataset.records)
    (train_frames.count(r.frame_id) ? train : val).records.push_back(r);
  return {train, val};
}

namespace detail_ns = lr3d::detail;

void write_dataset(const Dataset& dataset, const std::string& path, View view) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);

  bool any_pseudo = false;
  for (const auto& r : dataset.records) any_pseudo |= r.provenance == "pseudo";
  const std::string view_name =
      view == View::kEval ? "eval" : (any_pseudo ? "merged" : "train");

  json header = {{"schema", "lr3d.dataset.v1"},
                 {"view", view_name},
                 {"config", detail_ns::scene_config_to_json(dataset.config)}};
  out << header.dump() << "\n";
  for (const auto& r : dataset.records) out << detail_ns::record_to_json(r, view).dump() << "\n";
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaViolation("empty dataset file: " + path);
  const json header = json::parse(line);
  if (header.value("schema", "") != "lr3d.dataset.v1")
    throw SchemaViolation("unsupported dataset schema in " + path);

  Dataset ds;
  ds.config = detail_ns::scene_config_from_json(header.at("config"));
  ds.view = header.value("view", "full");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ds.records.push_back(detail_ns::record_from_json(json::parse(line)));
  }
  return ds;
}

void validate_dataset(const Dataset& dataset) {
  std::set<int> ids;
  const int expect_dim = 5 + (int)dataset.config.classes.size();
  for (const auto& r : dataset.records) {
    if (!ids.insert(r.id).second)
      throw SchemaViolation("duplicate record id " + std::to_string(r.id));
    if (r.provenance != "gt" && r.provenance != "pseudo")
      throw SchemaViolation("unknown provenance: " + r.provenance);
    if (r.feature.dim() != expect_dim)
      throw SchemaViolation("feature dim mismatch on record " + std::to_string(r.id));
    if (!(r.box2d.w2d >= 0.0 && r.box2d.h2d >= 0.0))
      throw SchemaViolation("negative 2D box extent on record " + std::to_string(r.id));
    const bool training_view = dataset.view == "train" || dataset.view == "merged";
    if (training_view && r.provenance == "gt") {
      // A distant training record must carry no recoverable 3D label.
      if (r.distant && (r.box3d.has_value() || r.gt_private.has_value()))
        throw SchemaViolation("3D label leak on distant record " + std::to_string(r.id));
      if (r.gt_private.has_value())
        throw SchemaViolation("private GT leak on training record " + std::to_string(r.id));
    }
  }
}

}  // namespace lr3d::synthdata

namespace lr3d::detail {

json scene_config_to_json(const synthdata::SceneConfig& c) {
  json classes = json::array();
  for (const auto& cl : c.classes)
    classes.push_back({{"name", cl.name},
                       {"size_mean", vec3_to_json(cl.size_mean)},
                       {"size_std", vec3_to_json(cl.size_std)}});
  return {{"seed", c.seed},
          {"n_frames", c.n_frames},
          {"min_objects", c.min_objects},
          {"max_objects", c.max_objects},
          {"classes", classes},
          {"depth_min", c.depth_min},
          {"depth_max", c.depth_max},
          {"u_min_frac", c.u_min_frac},
          {"u_max_frac", c.u_max_frac},
          {"v_min_frac", c.v_min_frac},
          {"v_max_frac", c.v_max_frac},
          {"distant_threshold", c.distant_threshold},
          {"box_noise_std", c.box_noise_std},
          {"feature_noise_std", c.feature_noise_std},
          {"camera",
           {{"fx", c.camera.fx},
            {"fy", c.camera.fy},
            {"cx", c.camera.cx},
            {"cy", c.camera.cy},
            {"img_w", c.camera.img_w},
            {"img_h", c.camera.img_h}}}};
}

synthdata::SceneConfig scene_config_from_json(const json& j) {
  // Partial configs inherit the stock scene, so a file can override only the
  // fields it cares about.
  synthdata::SceneConfig c = synthdata::default_config();
  // Absent keys keep their defaults; present keys must parse.
  auto get = [&](const char* key, auto& dst) {
    using T = std::remove_reference_t<decltype(dst)>;
    if (!j.contains(key)) return;
    try {
      dst = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw synthdata::ConfigInvalid(std::string("invalid field: ") + key);
    }
  };
  get("seed", c.seed);
  get("n_frames", c.n_frames);
  get("min_objects", c.min_objects);
  get("max_objects", c.max_objects);
  get("depth_min", c.depth_min);
  get("depth_max", c.depth_max);
  get("u_min_frac", c.u_min_frac);
  get("u_max_frac", c.u_max_frac);
  get("v_min_frac", c.v_min_frac);
  get("v_max_frac", c.v_max_frac);
  get("distant_threshold", c.distant_threshold);
  get("box_noise_std", c.box_noise_std);
  get("feature_noise_std", c.feature_noise_std);
  if (j.contains("classes")) {
    c.classes.clear();
    try {
      for (const auto& cl : j.at("classes")) {
        synthdata::ClassSpec spec;
        spec.name = cl.at("name").get<std::string>();
        spec.size_mean = vec3_from_json(cl.at("size_mean"));
        spec.size_std = vec3_from_json(cl.at("size_std"));
        c.classes.push_back(spec);
      }
    } catch (const json::exception&) {
      throw synthdata::ConfigInvalid("invalid field: classes");
    }
  }
  if (j.contains("camera")) {
    try {
      const auto& cam = j.at("camera");
      c.camera = {cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                  cam.at("cx").get<double>(), cam.at("cy").get<double>(),
                  cam.at("img_w").get<double>(), cam.at("img_h").get<double>()};
    } catch (const json::exception&) {
      throw synthdata::ConfigInvalid("invalid field: camera");
    }
  }
  return c;
}

json record_to_json(const synthdata::AnnotationRecord& r, synthdata::View view) {
  json j = {{"frame", r.frame_id},
            {"id", r.id},
            {"class", r.class_id},
            {"box2d", box2d_to_json(r.box2d)},
            {"feature", std::vector<double>(r.feature.vec.data(),
                                            r.feature.vec.data() + r.feature.vec.size())},
            {"distant", r.distant},
            {"provenance", r.provenance}};
  const bool keep_box3d =
      r.box3d.has_value() &&
      (view == synthdata::View::kEval || !r.distant || r.provenance == "pseudo");
  if (keep_box3d) j["box3d"] = object_to_json(*r.box3d);
  if (view == synthdata::View::kEval && r.gt_private.has_value())
    j["gt"] = object_to_json(*r.gt_private);
  return j;
}

synthdata::AnnotationRecord record_from_json(const json& j) {
  synthdata::AnnotationRecord r;
  r.frame_id = j.at("frame").get<int>();
  r.id = j.at("id").get<int>();
  r.class_id = j.at("class").get<int>();
  r.box2d = box2d_from_json(j.at("box2d"));
  const auto feat = j.at("feature").get<std::vector<double>>();
  r.feature.vec = Eigen::Map<const Eigen::VectorXd>(feat.data(), (Eigen::Index)feat.size());
  r.distant = j.at("distant").get<bool>();
  r.provenance = j.value("provenance", "gt");
  if (j.contains("box3d")) r.box3d = object_from_json(j.at("box3d"));
  if (j.contains("gt")) r.gt_private = object_from_json(j.at("gt"));
  return r;
}

}  // namespace lr3d::detail
