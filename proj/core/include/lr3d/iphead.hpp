#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lr3d/geometry.hpp"

namespace lr3d::iphead {

struct DimMismatch : std::runtime_error {
  explicit DimMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct SharedModeMisuse : std::runtime_error {
  SharedModeMisuse() : std::runtime_error("generate_weights called on a shared-weight model") {}
};
struct EmptyTrainingSet : std::runtime_error {
  EmptyTrainingSet() : std::runtime_error("training set is empty") {}
};

// Per-instance conditioning vector. Layout (default):
// [l, w, h, sin(o), cos(o), class one-hot...]. Built from size and relative
// orientation only; never from the object center.
struct InstanceFeature {
  Eigen::VectorXd vec;
  int dim() const { return static_cast<int>(vec.size()); }
};

InstanceFeature make_feature(const Eigen::Vector3d& size, double rel_orientation, int class_id,
                             int num_classes);

// Sine-cosine encoding of (w2d, h2d) with frequencies 2^0 .. 2^{L-1} applied
// after dividing by input_scale. Output dimension is 4L.
struct PositionalEncodingConfig {
  int num_freqs = 8;          // L
  double input_scale = 100.0;  // pixels
  int output_dim() const { return 4 * num_freqs; }
};

// Shape of the per-instance target net f^(theta): [4L -> H -> 1], tanh
// hidden activation, depth = d_ref * exp(raw output).
struct TargetNetShape {
  int hidden = 16;  // H
  int input_dim(const PositionalEncodingConfig& pe) const { return pe.output_dim(); }
  // theta layout: [layer-1 weights row-major (H x 4L), layer-1 biases (H),
  // layer-2 weights (H), layer-2 bias (1)]
  int param_count(const PositionalEncodingConfig& pe) const {
    return pe.output_dim() * hidden + hidden + hidden + 1;
  }
};

enum class WeightMode { kDynamic, kShared };

std::string to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

// Hypernetwork f_g (feature -> G hidden -> P params of the target net) plus
// the fixed target-net shape. In shared mode f_g is unused and shared_theta
// is trained directly.
struct IPHeadModel {
  PositionalEncodingConfig pe;
  TargetNetShape target;
  WeightMode mode = WeightMode::kDynamic;
  double d_ref = 1.0;  // meters
  int feature_dim = 0;
  int hyper_hidden = 64;  // G

  Eigen::MatrixXd hyper_w1;  // G x feature_dim
  Eigen::VectorXd hyper_b1;  // G
  Eigen::MatrixXd hyper_w2;  // P x G
  Eigen::VectorXd hyper_b2;  // P
  Eigen::VectorXd shared_theta;  // P, shared mode only

  uint64_t rng_seed = 0;

  int param_count() const { return target.param_count(pe); }
};

// Fresh model; the hypernet output weight matrix starts at zero and its bias
// carries a neutral target-net init (random first layer, zero output layer),
// so the initial prediction is d_ref everywhere.
IPHeadModel init_model(int feature_dim, const PositionalEncodingConfig& pe,
                       const TargetNetShape& target, WeightMode mode, double d_ref,
                       int hyper_hidden, uint64_t seed);

// Overwrites all trainable parameters with N(0, scale^2) draws; used by
// gradient checks that need a generic point in parameter space.
void randomize_parameters(IPHeadModel& model, uint64_t seed, double scale);

Eigen::VectorXd positional_encode(const geometry::Box2D& b, const PositionalEncodingConfig& cfg);

// theta = f_g(F), in the documented layout. Dynamic mode only.
Eigen::VectorXd generate_weights(const IPHeadModel& model, const InstanceFeature& F);

double target_forward(const Eigen::VectorXd& theta, const Eigen::VectorXd& pe,
                      const TargetNetShape& shape, const PositionalEncodingConfig& pe_cfg,
                      double d_ref);

double predict_depth(const IPHeadModel& model, const InstanceFeature& F, const geometry::Box2D& b);

// Smooth-L1 on log-depth residual; returns (loss, dloss/dpred).
std::pair<double, double> depth_loss(double pred, double gt, double beta = 1.0);

struct TrainConfig {
  double learning_rate = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 400;
  int batch_size = 0;  // objects per step; 0 = full batch
  int k_aug = 8;       // augmented pairs per object per epoch
  double aug_lo = 0.5;  // depth multipliers, log-uniform
  double aug_hi = 3.0;
  double huber_beta = 1.0;
  double val_fraction = 0.1;
  std::string loss = "smooth_l1_log";
  uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;       // mean sample loss per epoch
  std::vector<double> val_error;        // median relative depth error, held-out
  double final_val_error = 0.0;
  bool diverged = false;
  int epochs_run = 0;
};

struct TrainSample {
  InstanceFeature feature;
  geometry::Box2D box;
  double gt_depth = 0.0;
};

// Optimizes f_g (dynamic) or shared_theta (shared) on GT pairs plus k_aug
// synthesized pairs per object, resampled each epoch. `objects` is parallel
// to `close_set` and provides the 3D states used for projection
// augmentation. Deterministic given cfg.seed. A non-finite loss stops
// training and sets report.diverged.
TrainReport train(IPHeadModel& model, const std::vector<TrainSample>& close_set,
                  const geometry::CameraIntrinsics& K,
                  const std::vector<geometry::ObjectState>& objects, const TrainConfig& cfg);

// Max relative error between analytic and central finite-difference
// gradients over every trainable parameter, for one sample.
double gradient_check(const IPHeadModel& model, const TrainSample& sample, double eps = 1e-4);

struct CurveRow {
  double w2d = 0.0;
  double h2d = 0.0;
  double pred_depth = 0.0;
  double gt_depth = 0.0;  // NaN when no geometry template is supplied
};

std::vector<CurveRow> dump_mapping_curve(const IPHeadModel& model, const InstanceFeature& F,
                                         const std::vector<geometry::Box2D>& sweep);

// Same, with a ground-truth depth column obtained by bisection on
// synthesize_pair for the given object template.
std::vector<CurveRow> dump_mapping_curve(const IPHeadModel& model, const InstanceFeature& F,
                                         const std::vector<geometry::Box2D>& sweep,
                                         const geometry::CameraIntrinsics& K,
                                         const geometry::ObjectState& template_obj, double d_lo,
                                         double d_hi);

void save_model(const IPHeadModel& model, const std::string& path);
IPHeadModel load_model(const std::string& path);

}  // namespace lr3d::iphead
