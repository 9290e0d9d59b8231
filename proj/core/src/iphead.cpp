#include "lr3d/iphead.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "lr3d/rng.hpp"

namespace lr3d::iphead {

using nlohmann::json;

InstanceFeature make_feature(const Eigen::Vector3d& size, double rel_orientation, int class_id,
                             int num_classes) {
  InstanceFeature f;
  f.vec = Eigen::VectorXd::Zero(5 + num_classes);
  f.vec[0] = size.x();
  f.vec[1] = size.y();
  f.vec[2] = size.z();
  f.vec[3] = std::sin(rel_orientation);
  f.vec[4] = std::cos(rel_orientation);
  if (class_id < 0 || class_id >= num_classes) throw DimMismatch("class_id out of range");
  f.vec[5 + class_id] = 1.0;
  return f;
}

std::string to_string(WeightMode mode) {
  return mode == WeightMode::kDynamic ? "dynamic" : "shared";
}

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "dynamic") return WeightMode::kDynamic;
  if (s == "shared") return WeightMode::kShared;
  throw std::invalid_argument("unknown weight mode: " + s);
}

IPHeadModel init_model(int feature_dim, const PositionalEncodingConfig& pe,
                       const TargetNetShape& target, WeightMode mode, double d_ref,
                       int hyper_hidden, uint64_t seed) {
  IPHeadModel m;
  m.pe = pe;
  m.target = target;
  m.mode = mode;
  m.d_ref = d_ref;
  m.feature_dim = feature_dim;
  m.hyper_hidden = hyper_hidden;
  m.rng_seed = seed;

  const int P = m.param_count();
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  m.hyper_w1 = Eigen::MatrixXd::Zero(hyper_hidden, feature_dim);
  for (int i = 0; i < m.hyper_w1.rows(); ++i)
    for (int j = 0; j < m.hyper_w1.cols(); ++j) m.hyper_w1(i, j) = rng.normal(0.0, scale);
  m.hyper_b1 = Eigen::VectorXd::Zero(hyper_hidden);
  // Zero output weights: theta is feature-independent at the start. The bias
  // carries a neutral target-net init (random first layer, zero output
  // layer), so the initial prediction is exactly d_ref everywhere. A fully
  // zero theta would be a stationary point: with w2 = 0 and h = 0 every
  // gradient except the output bias vanishes and training can never use the
  // box descriptor.
  m.hyper_w2 = Eigen::MatrixXd::Zero(P, hyper_hidden);
  m.hyper_b2 = Eigen::VectorXd::Zero(P);
  const int in = pe.output_dim();
  const double w1t_scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (int i = 0; i < target.hidden * in; ++i) m.hyper_b2[i] = rng.normal(0.0, w1t_scale);
  m.shared_theta = m.hyper_b2;
  return m;
}

void randomize_parameters(IPHeadModel& model, uint64_t seed, double scale) {
  Rng rng(seed);
  auto fill = [&](auto& block) {
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index j = 0; j < block.cols(); ++j) block(i, j) = rng.normal(0.0, scale);
  };
  fill(model.hyper_w1);
  fill(model.hyper_b1);
  fill(model.hyper_w2);
  fill(model.hyper_b2);
  fill(model.shared_theta);
}

Eigen::VectorXd positional_encode(const geometry::Box2D& b, const PositionalEncodingConfig& cfg) {
  Eigen::VectorXd out(cfg.output_dim());
  const double inputs[2] = {b.w2d / cfg.input_scale, b.h2d / cfg.input_scale};
  int k = 0;
  for (double x : inputs) {
    for (int f = 0; f < cfg.num_freqs; ++f) {
      const double arg = std::ldexp(x, f);  // 2^f * x
      out[k++] = std::sin(arg);
      out[k++] = std::cos(arg);
    }
  }
  return out;
}

namespace {

// Views into the flat theta vector. Layout: [W1 row-major (H x 4L), b1 (H),
// w2 (H), b2 (1)].
struct ThetaView {
  int in, hidden;
  explicit ThetaView(const TargetNetShape& shape, const PositionalEncodingConfig& pe)
      : in(pe.output_dim()), hidden(shape.hidden) {}
  double w1(const Eigen::VectorXd& t, int i, int j) const { return t[i * in + j]; }
  double b1(const Eigen::VectorXd& t, int i) const { return t[in * hidden + i]; }
  double w2(const Eigen::VectorXd& t, int i) const { return t[in * hidden + hidden + i]; }
  double b2(const Eigen::VectorXd& t) const { return t[in * hidden + 2 * hidden]; }

  int w1_idx(int i, int j) const { return i * in + j; }
  int b1_idx(int i) const { return in * hidden + i; }
  int w2_idx(int i) const { return in * hidden + hidden + i; }
  int b2_idx() const { return in * hidden + 2 * hidden; }
};

double target_raw(const Eigen::VectorXd& theta, const Eigen::VectorXd& pe, const ThetaView& tv,
                  Eigen::VectorXd* hidden_act) {
  Eigen::VectorXd a(tv.hidden);
  for (int i = 0; i < tv.hidden; ++i) {
    double z = tv.b1(theta, i);
    for (int j = 0; j < tv.in; ++j) z += tv.w1(theta, i, j) * pe[j];
    a[i] = std::tanh(z);
  }
  double raw = tv.b2(theta);
  for (int i = 0; i < tv.hidden; ++i) raw += tv.w2(theta, i) * a[i];
  if (hidden_act) *hidden_act = std::move(a);
  return raw;
}

// d raw / d theta for one sample, scaled by draw, accumulated into dtheta.
void target_backward(const Eigen::VectorXd& theta, const Eigen::VectorXd& pe,
                     const Eigen::VectorXd& a, double draw, const ThetaView& tv,
                     Eigen::VectorXd& dtheta) {
  for (int i = 0; i < tv.hidden; ++i) {
    const double dz = draw * tv.w2(theta, i) * (1.0 - a[i] * a[i]);
    for (int j = 0; j < tv.in; ++j) dtheta[tv.w1_idx(i, j)] += dz * pe[j];
    dtheta[tv.b1_idx(i)] += dz;
    dtheta[tv.w2_idx(i)] += draw * a[i];
  }
  dtheta[tv.b2_idx()] += draw;
}

double smooth_l1(double r, double beta, double* deriv) {
  const double ar = std::abs(r);
  if (ar < beta) {
    if (deriv) *deriv = r / beta;
    return 0.5 * r * r / beta;
  }
  if (deriv) *deriv = r > 0 ? 1.0 : -1.0;
  return ar - 0.5 * beta;
}

struct ParamGrads {
  Eigen::MatrixXd hyper_w1, hyper_w2;
  Eigen::VectorXd hyper_b1, hyper_b2, shared_theta;

  explicit ParamGrads(const IPHeadModel& m)
      : hyper_w1(Eigen::MatrixXd::Zero(m.hyper_w1.rows(), m.hyper_w1.cols())),
        hyper_w2(Eigen::MatrixXd::Zero(m.hyper_w2.rows(), m.hyper_w2.cols())),
        hyper_b1(Eigen::VectorXd::Zero(m.hyper_b1.size())),
        hyper_b2(Eigen::VectorXd::Zero(m.hyper_b2.size())),
        shared_theta(Eigen::VectorXd::Zero(m.shared_theta.size())) {}
};

// Sum of per-sample losses for one object (one theta) with gradients
// accumulated into g. Samples are (positional encoding, gt depth).
double object_loss_and_grad(const IPHeadModel& m,
                            const InstanceFeature& F,
                            const std::vector<std::pair<Eigen::VectorXd, double>>& samples,
                            double huber_beta, ParamGrads* g) {
  const ThetaView tv(m.target, m.pe);
  Eigen::VectorXd theta;
  Eigen::VectorXd h;  // hypernet hidden activations, dynamic mode
  if (m.mode == WeightMode::kDynamic) {
    const Eigen::VectorXd z = m.hyper_w1 * F.vec + m.hyper_b1;
    h = z.array().tanh();
    theta = m.hyper_w2 * h + m.hyper_b2;
  } else {
    theta = m.shared_theta;
  }

  Eigen::VectorXd dtheta = Eigen::VectorXd::Zero(theta.size());
  double loss_sum = 0.0;
  for (const auto& [pe, gt] : samples) {
    if (!(gt > 0.0)) throw geometry::NonPositiveDepth();
    Eigen::VectorXd a;
    const double raw = target_raw(theta, pe, tv, &a);
    const double resid = raw + std::log(m.d_ref) - std::log(gt);
    double dresid = 0.0;
    loss_sum += smooth_l1(resid, huber_beta, &dresid);
    if (g) target_backward(theta, pe, a, dresid, tv, dtheta);
  }

  if (g) {
    if (m.mode == WeightMode::kDynamic) {
      g->hyper_w2.noalias() += dtheta * h.transpose();
      g->hyper_b2 += dtheta;
      const Eigen::VectorXd dh = m.hyper_w2.transpose() * dtheta;
      const Eigen::VectorXd dz = dh.array() * (1.0 - h.array().square());
      g->hyper_w1.noalias() += dz * F.vec.transpose();
      g->hyper_b1 += dz;
    } else {
      g->shared_theta += dtheta;
    }
  }
  return loss_sum;
}

// Adam state for one parameter block.
struct AdamBlock {
  Eigen::MatrixXd m, v;
  explicit AdamBlock(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}

  template <typename P, typename G>
  void step(P& param, const G& grad, const TrainConfig& cfg, int t) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v.array().matrix() +
        (1.0 - cfg.adam_beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    param.array() -=
        cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  }
};

}  // namespace

Eigen::VectorXd generate_weights(const IPHeadModel& model, const InstanceFeature& F) {
  if (model.mode == WeightMode::kShared) throw SharedModeMisuse();
  if (F.dim() != model.feature_dim)
    throw DimMismatch("feature dim " + std::to_string(F.dim()) + " != model feature dim " +
                      std::to_string(model.feature_dim));
  const Eigen::VectorXd h = (model.hyper_w1 * F.vec + model.hyper_b1).array().tanh();
  return model.hyper_w2 * h + model.hyper_b2;
}

double target_forward(const Eigen::VectorXd& theta, const Eigen::VectorXd& pe,
                      const TargetNetShape& shape, const PositionalEncodingConfig& pe_cfg,
                      double d_ref) {
  if (theta.size() != shape.param_count(pe_cfg)) throw DimMismatch("bad theta size");
  if (pe.size() != pe_cfg.output_dim()) throw DimMismatch("bad encoding size");
  const ThetaView tv(shape, pe_cfg);
  return d_ref * std::exp(target_raw(theta, pe, tv, nullptr));
}

double predict_depth(const IPHeadModel& model, const InstanceFeature& F, const geometry::Box2D& b) {
  const Eigen::VectorXd pe = positional_encode(b, model.pe);
  if (model.mode == WeightMode::kDynamic) {
    return target_forward(generate_weights(model, F), pe, model.target, model.pe, model.d_ref);
  }
  if (F.dim() != model.feature_dim) throw DimMismatch("feature dim mismatch");
  return target_forward(model.shared_theta, pe, model.target, model.pe, model.d_ref);
}

std::pair<double, double> depth_loss(double pred, double gt, double beta) {
  if (!(gt > 0.0) || !(pred > 0.0)) throw geometry::NonPositiveDepth();
  const double resid = std::log(pred) - std::log(gt);
  double dresid = 0.0;
  const double loss = smooth_l1(resid, beta, &dresid);
  return {loss, dresid / pred};
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("adam betas must be in [0, 1)");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (k_aug < 0) throw std::invalid_argument("k_aug must be non-negative");
  if (!(aug_lo > 0.0 && aug_hi >= aug_lo)) throw std::invalid_argument("bad aug depth bounds");
  if (!(huber_beta > 0.0)) throw std::invalid_argument("huber_beta must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("val_fraction must be in [0, 1)");
  if (loss != "smooth_l1_log") throw std::invalid_argument("unknown loss: " + loss);
}

TrainReport train(IPHeadModel& model, const std::vector<TrainSample>& close_set,
                  const geometry::CameraIntrinsics& K,
                  const std::vector<geometry::ObjectState>& objects, const TrainConfig& cfg) {
  cfg.validate();
  if (close_set.empty()) throw EmptyTrainingSet();
  if (cfg.k_aug > 0 && objects.size() != close_set.size())
    throw DimMismatch("objects must parallel close_set when k_aug > 0");
  for (const auto& s : close_set)
    if (s.feature.dim() != model.feature_dim) throw DimMismatch("feature dim mismatch");

  // Deterministic held-out split: every stride-th sample.
  std::vector<int> train_idx, val_idx;
  const int stride = cfg.val_fraction > 0.0 ? std::max(2, (int)std::lround(1.0 / cfg.val_fraction))
                                            : 0;
  for (int i = 0; i < (int)close_set.size(); ++i) {
    if (stride > 0 && i % stride == stride - 1 && (int)close_set.size() > stride)
      val_idx.push_back(i);
    else
      train_idx.push_back(i);
  }

  Rng rng(cfg.seed);
  AdamBlock ad_w1(model.hyper_w1.rows(), model.hyper_w1.cols());
  AdamBlock ad_b1(model.hyper_b1.size(), 1);
  AdamBlock ad_w2(model.hyper_w2.rows(), model.hyper_w2.cols());
  AdamBlock ad_b2(model.hyper_b2.size(), 1);
  AdamBlock ad_shared(model.shared_theta.size(), 1);

  TrainReport report;
  int adam_t = 0;
  const int batch_objs = cfg.batch_size > 0 ? cfg.batch_size : (int)train_idx.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    int epoch_samples = 0;

    for (size_t start = 0; start < train_idx.size(); start += batch_objs) {
      ParamGrads grads(model);
      double batch_loss = 0.0;
      int batch_samples = 0;
      const size_t end = std::min(train_idx.size(), start + batch_objs);
      for (size_t k = start; k < end; ++k) {
        const int i = train_idx[k];
        const TrainSample& s = close_set[i];
        std::vector<std::pair<Eigen::VectorXd, double>> samples;
        samples.reserve(1 + cfg.k_aug);
        samples.emplace_back(positional_encode(s.box, model.pe), s.gt_depth);
        if (cfg.k_aug > 0) {
          const geometry::ObjectState& obj = objects[i];
          const double d = obj.depth();
          // Keep all corners in front of the camera when sliding closer.
          const double safe_lo =
              std::max(cfg.aug_lo * d, 0.5 * std::hypot(obj.size.x(), obj.size.y()) + 0.5);
          const double hi = std::max(cfg.aug_hi * d, safe_lo * 1.001);
          for (int a = 0; a < cfg.k_aug; ++a) {
            const double d_star = rng.log_uniform(safe_lo, hi);
            auto [box, depth] = geometry::synthesize_pair(K, obj, d_star);
            samples.emplace_back(positional_encode(box, model.pe), depth);
          }
        }
        batch_loss += object_loss_and_grad(model, s.feature, samples, cfg.huber_beta, &grads);
        batch_samples += (int)samples.size();
      }

      if (!std::isfinite(batch_loss)) {
        report.diverged = true;
        report.epochs_run = epoch;
        return report;
      }

      const double inv_n = 1.0 / batch_samples;
      ++adam_t;
      if (model.mode == WeightMode::kDynamic) {
        ad_w1.step(model.hyper_w1, (grads.hyper_w1 * inv_n).eval(), cfg, adam_t);
        ad_b1.step(model.hyper_b1, (grads.hyper_b1 * inv_n).eval(), cfg, adam_t);
        ad_w2.step(model.hyper_w2, (grads.hyper_w2 * inv_n).eval(), cfg, adam_t);
        ad_b2.step(model.hyper_b2, (grads.hyper_b2 * inv_n).eval(), cfg, adam_t);
      } else {
        ad_shared.step(model.shared_theta, (grads.shared_theta * inv_n).eval(), cfg, adam_t);
      }
      epoch_loss += batch_loss;
      epoch_samples += batch_samples;
    }

    report.epoch_loss.push_back(epoch_loss / epoch_samples);
    if (!val_idx.empty()) {
      std::vector<double> errs;
      errs.reserve(val_idx.size());
      for (int i : val_idx) {
        const TrainSample& s = close_set[i];
        const double pred = predict_depth(model, s.feature, s.box);
        errs.push_back(std::abs(pred - s.gt_depth) / s.gt_depth);
      }
      std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
      report.val_error.push_back(errs[errs.size() / 2]);
    }
    report.epochs_run = epoch + 1;
  }

  report.final_val_error = report.val_error.empty() ? 0.0 : report.val_error.back();
  return report;
}

double gradient_check(const IPHeadModel& model, const TrainSample& sample, double eps) {
  std::vector<std::pair<Eigen::VectorXd, double>> samples{
      {positional_encode(sample.box, model.pe), sample.gt_depth}};

  ParamGrads analytic(model);
  object_loss_and_grad(model, sample.feature, samples, 1.0, &analytic);

  IPHeadModel probe = model;
  auto loss_at = [&]() {
    return object_loss_and_grad(probe, sample.feature, samples, 1.0, nullptr);
  };

  double max_rel = 0.0;
  auto check_block = [&](auto& param, const auto& grad) {
    for (Eigen::Index i = 0; i < param.rows(); ++i) {
      for (Eigen::Index j = 0; j < param.cols(); ++j) {
        const double save = param(i, j);
        param(i, j) = save + eps;
        const double lp = loss_at();
        param(i, j) = save - eps;
        const double lm = loss_at();
        param(i, j) = save;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double ga = grad(i, j);
        const double denom = std::max({std::abs(ga), std::abs(numeric), 1e-3});
        max_rel = std::max(max_rel, std::abs(ga - numeric) / denom);
      }
    }
  };
  check_block(probe.hyper_w1, analytic.hyper_w1);
  check_block(probe.hyper_b1, analytic.hyper_b1);
  check_block(probe.hyper_w2, analytic.hyper_w2);
  check_block(probe.hyper_b2, analytic.hyper_b2);
  check_block(probe.shared_theta, analytic.shared_theta);
  return max_rel;
}

std::vector<CurveRow> dump_mapping_curve(const IPHeadModel& model, const InstanceFeature& F,
                                         const std::vector<geometry::Box2D>& sweep) {
  std::vector<CurveRow> rows;
  rows.reserve(sweep.size());
  for (const auto& b : sweep) {
    rows.push_back({b.w2d, b.h2d, predict_depth(model, F, b),
                    std::numeric_limits<double>::quiet_NaN()});
  }
  return rows;
}

std::vector<CurveRow> dump_mapping_curve(const IPHeadModel& model, const InstanceFeature& F,
                                         const std::vector<geometry::Box2D>& sweep,
                                         const geometry::CameraIntrinsics& K,
                                         const geometry::ObjectState& template_obj, double d_lo,
                                         double d_hi) {
  auto rows = dump_mapping_curve(model, F, sweep);
  for (auto& r : rows) {
    r.gt_depth = geometry::depth_from_h2d(K, template_obj, r.h2d, d_lo, d_hi);
  }
  return rows;
}

namespace {

json mat_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat[i * m.cols() + j] = m(i, j);
  return flat;
}

Eigen::MatrixXd mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto flat = j.get<std::vector<double>>();
  if ((Eigen::Index)flat.size() != rows * cols) throw std::runtime_error("bad parameter count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = flat[i * cols + j2];
  return m;
}

}  // namespace

void save_model(const IPHeadModel& model, const std::string& path) {
  json j;
  j["schema"] = "lr3d.model.v1";
  j["pe"] = {{"num_freqs", model.pe.num_freqs}, {"input_scale", model.pe.input_scale}};
  j["target"] = {{"hidden", model.target.hidden}};
  j["weight_mode"] = to_string(model.mode);
  j["d_ref"] = model.d_ref;
  j["feature_dim"] = model.feature_dim;
  j["hyper_hidden"] = model.hyper_hidden;
  j["rng_seed"] = model.rng_seed;
  // All matrices row-major.
  j["hyper_w1"] = mat_to_json(model.hyper_w1);
  j["hyper_b1"] = mat_to_json(model.hyper_b1);
  j["hyper_w2"] = mat_to_json(model.hyper_w2);
  j["hyper_b2"] = mat_to_json(model.hyper_b2);
  j["shared_theta"] = mat_to_json(model.shared_theta);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  out << j.dump(2) << "\n";
}

IPHeadModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  json j;
  in >> j;
  if (j.value("schema", "") != "lr3d.model.v1")
    throw std::runtime_error("unsupported model schema in " + path);

  IPHeadModel m;
  m.pe.num_freqs = j["pe"]["num_freqs"].get<int>();
  m.pe.input_scale = j["pe"]["input_scale"].get<double>();
  m.target.hidden = j["target"]["hidden"].get<int>();
  m.mode = weight_mode_from_string(j["weight_mode"].get<std::string>());
  m.d_ref = j["d_ref"].get<double>();
  m.feature_dim = j["feature_dim"].get<int>();
  m.hyper_hidden = j["hyper_hidden"].get<int>();
  m.rng_seed = j["rng_seed"].get<uint64_t>();
  const int P = m.param_count();
  m.hyper_w1 = mat_from_json(j["hyper_w1"], m.hyper_hidden, m.feature_dim);
  m.hyper_b1 = mat_from_json(j["hyper_b1"], m.hyper_hidden, 1);
  m.hyper_w2 = mat_from_json(j["hyper_w2"], P, m.hyper_hidden);
  m.hyper_b2 = mat_from_json(j["hyper_b2"], P, 1);
  m.shared_theta = mat_from_json(j["shared_theta"], P, 1);
  return m;
}

}  // namespace lr3d::iphead
