#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lr3d/geometry.hpp"
#include "lr3d/iphead.hpp"

namespace lr3d::synthdata {

struct ConfigInvalid : std::runtime_error {
  explicit ConfigInvalid(const std::string& what) : std::runtime_error(what) {}
};
struct BadFractions : std::runtime_error {
  BadFractions() : std::runtime_error("split fractions must be in (0, 1) and sum to 1") {}
};
struct SchemaViolation : std::runtime_error {
  explicit SchemaViolation(const std::string& what) : std::runtime_error(what) {}
};

struct ClassSpec {
  std::string name;
  Eigen::Vector3d size_mean{4.5, 1.9, 1.6};  // l, w, h
  Eigen::Vector3d size_std{0.2, 0.1, 0.1};
};

struct SceneConfig {
  uint64_t seed = 0;
  int n_frames = 100;
  int min_objects = 2;
  int max_objects = 6;
  std::vector<ClassSpec> classes;
  double depth_min = 5.0;   // log-uniform sampling range, meters
  double depth_max = 120.0;
  double u_min_frac = 0.15;  // box-center placement inside the image
  double u_max_frac = 0.85;
  double v_min_frac = 0.45;
  double v_max_frac = 0.60;
  double distant_threshold = 40.0;  // on GT Euclidean distance
  double box_noise_std = 0.0;       // pixels, on (w2d, h2d, u, v)
  double feature_noise_std = 0.0;   // meters on sizes, radians on orientation
  geometry::CameraIntrinsics camera{1000.0, 1000.0, 960.0, 540.0, 1920.0, 1080.0};

  void validate() const;  // throws ConfigInvalid, names the offending field
};

// Three car-like classes with distinct size priors.
SceneConfig default_config();

// Which fields a serialized record exposes. Train strips the private GT and
// the 3D box of distant objects; Eval keeps everything.
enum class View { kTrain, kEval };

struct AnnotationRecord {
  int frame_id = 0;
  int id = 0;
  int class_id = 0;
  geometry::Box2D box2d;
  iphead::InstanceFeature feature;
  bool distant = false;
  std::optional<geometry::ObjectState> box3d;      // absent for distant in train view
  std::optional<geometry::ObjectState> gt_private;  // eval view only
  std::string provenance = "gt";  // "gt" or "pseudo"
};

struct Dataset {
  SceneConfig config;
  std::string view = "full";  // full | train | eval | merged
  std::vector<AnnotationRecord> records;
};

// Deterministic per seed; per-frame RNG streams, so frame order never
// affects content.
Dataset generate(const SceneConfig& config);

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction);

// Line-delimited records with a one-line header carrying config and schema
// version.
void write_dataset(const Dataset& dataset, const std::string& path, View view);
Dataset read_dataset(const std::string& path);

// Structural checks: distant training records must not leak 3D labels,
// provenance must be known, ids unique.
void validate_dataset(const Dataset& dataset);

}  // namespace lr3d::synthdata
