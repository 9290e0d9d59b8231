#include "lr3d/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "lr3d/teacher.hpp"

namespace lr3d::harness {

using nlohmann::json;

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.scene = synthdata::default_config();
  // Tuned defaults: the base encoding frequency must stay monotone over the
  // pixel range of close-range boxes (w2d can reach ~900 px), and d_ref near
  // the geometric-mean training depth keeps the raw output small.
  cfg.pe.input_scale = 2000.0;
  cfg.d_ref = 20.0;
  cfg.train.epochs = 600;
  cfg.buckets = {{"close", 0.0, 40.0},
                 {"distant", 40.0, std::numeric_limits<double>::infinity()}};
  return cfg;
}

namespace {

json train_config_to_json(const iphead::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},       {"adam_eps", c.adam_eps},
          {"epochs", c.epochs},               {"batch_size", c.batch_size},
          {"k_aug", c.k_aug},                 {"aug_lo", c.aug_lo},
          {"aug_hi", c.aug_hi},               {"huber_beta", c.huber_beta},
          {"val_fraction", c.val_fraction},   {"loss", c.loss},
          {"seed", c.seed}};
}

iphead::TrainConfig train_config_from_json(const json& j) {
  iphead::TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.k_aug = j.value("k_aug", c.k_aug);
  c.aug_lo = j.value("aug_lo", c.aug_lo);
  c.aug_hi = j.value("aug_hi", c.aug_hi);
  c.huber_beta = j.value("huber_beta", c.huber_beta);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.loss = j.value("loss", c.loss);
  c.seed = j.value("seed", c.seed);
  return c;
}

json buckets_to_json(const std::vector<metrics::RangeBucket>& buckets) {
  json out = json::array();
  for (const auto& b : buckets) {
    json jb = {{"label", b.label}, {"d_min", b.d_min}};
    if (std::isfinite(b.d_max)) jb["d_max"] = b.d_max;  // omitted means +inf
    out.push_back(jb);
  }
  return out;
}

std::vector<metrics::RangeBucket> buckets_from_json(const json& j) {
  std::vector<metrics::RangeBucket> out;
  for (const auto& jb : j) {
    metrics::RangeBucket b;
    b.label = jb.at("label").get<std::string>();
    b.d_min = jb.at("d_min").get<double>();
    b.d_max = jb.value("d_max", std::numeric_limits<double>::infinity());
    out.push_back(b);
  }
  return out;
}

json report_to_json(const metrics::LDSReport& r) {
  json ap = json::array();
  for (const auto& a : r.ap_table)
    ap.push_back({{"class", a.class_id}, {"threshold", a.threshold}, {"ap", a.ap}});
  return {{"bucket", r.bucket}, {"defined", r.defined}, {"lds", r.lds},
          {"mAP", r.map},       {"recall", r.recall},   {"mATE", r.mate},
          {"mASE", r.mase},     {"mAOE", r.maoe},       {"n_gt", r.n_gt},
          {"n_pred", r.n_pred}, {"n_tp", r.n_tp},       {"ap_table", ap}};
}

}  // namespace

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw synthdata::ConfigInvalid(std::string("invalid field: <root> (") + e.what() + ")");
  }
  ExperimentConfig cfg = default_experiment();
  if (j.contains("scene")) cfg.scene = detail::scene_config_from_json(j.at("scene"));
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  if (j.contains("model")) {
    const auto& m = j.at("model");
    cfg.pe.num_freqs = m.value("num_freqs", cfg.pe.num_freqs);
    cfg.pe.input_scale = m.value("input_scale", cfg.pe.input_scale);
    cfg.target.hidden = m.value("hidden", cfg.target.hidden);
    cfg.weight_mode = iphead::weight_mode_from_string(
        m.value("weight_mode", iphead::to_string(cfg.weight_mode)));
    cfg.d_ref = m.value("d_ref", cfg.d_ref);
    cfg.hyper_hidden = m.value("hyper_hidden", cfg.hyper_hidden);
  }
  if (j.contains("buckets")) cfg.buckets = buckets_from_json(j.at("buckets"));
  cfg.scene.validate();
  cfg.train.validate();
  return cfg;
}

void save_experiment(const ExperimentConfig& cfg, const std::string& path) {
  json j = {{"scene", detail::scene_config_to_json(cfg.scene)},
            {"train", train_config_to_json(cfg.train)},
            {"model",
             {{"num_freqs", cfg.pe.num_freqs},
              {"input_scale", cfg.pe.input_scale},
              {"hidden", cfg.target.hidden},
              {"weight_mode", iphead::to_string(cfg.weight_mode)},
              {"d_ref", cfg.d_ref},
              {"hyper_hidden", cfg.hyper_hidden}}},
            {"buckets", buckets_to_json(cfg.buckets)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write experiment config: " + path);
  out << j.dump(2) << "\n";
}

GeneratePaths run_generate(const ExperimentConfig& cfg, const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  const synthdata::Dataset ds = synthdata::generate(cfg.scene);
  GeneratePaths paths;
  paths.train_path = (std::filesystem::path(outdir) / "train.jsonl").string();
  paths.eval_path = (std::filesystem::path(outdir) / "eval.jsonl").string();
  synthdata::write_dataset(ds, paths.train_path, synthdata::View::kTrain);
  synthdata::write_dataset(ds, paths.eval_path, synthdata::View::kEval);
  return paths;
}

iphead::TrainReport run_train(const ExperimentConfig& cfg, const std::string& dataset_path,
                              const std::string& model_out, const std::string& report_out) {
  const synthdata::Dataset ds = synthdata::read_dataset(dataset_path);
  synthdata::validate_dataset(ds);

  std::vector<iphead::TrainSample> samples;
  std::vector<geometry::ObjectState> objects;
  for (const auto& r : ds.records) {
    if (!r.box3d.has_value()) continue;  // distant 2D-only records are unusable here
    samples.push_back({r.feature, r.box2d, r.box3d->depth()});
    objects.push_back(*r.box3d);
  }
  if (samples.empty()) throw iphead::EmptyTrainingSet();

  iphead::IPHeadModel model =
      iphead::init_model(samples.front().feature.dim(), cfg.pe, cfg.target, cfg.weight_mode,
                         cfg.d_ref, cfg.hyper_hidden, cfg.train.seed);
  const iphead::TrainReport report =
      iphead::train(model, samples, ds.config.camera, objects, cfg.train);

  if (!model_out.empty()) iphead::save_model(model, model_out);
  if (!report_out.empty()) {
    json j = {{"schema", "lr3d.trainreport.v1"},
              {"epochs_run", report.epochs_run},
              {"diverged", report.diverged},
              {"final_val_error", report.final_val_error},
              {"epoch_loss", report.epoch_loss},
              {"val_error", report.val_error},
              {"train_config", train_config_to_json(cfg.train)}};
    std::ofstream out(report_out);
    if (!out) throw std::runtime_error("cannot write train report: " + report_out);
    out << j.dump(2) << "\n";
  }
  return report;
}

std::vector<metrics::LDSReport> run_eval(const std::string& predictions_path,
                                         const std::string& gt_dataset_path,
                                         const std::vector<metrics::RangeBucket>& buckets,
                                         const std::string& report_out) {
  const auto preds = read_predictions(predictions_path);
  const synthdata::Dataset ds = synthdata::read_dataset(gt_dataset_path);
  const auto gts = ground_truth_from_dataset(ds);

  const auto reports = metrics::bucketed_report(preds, gts, buckets);
  if (!report_out.empty()) {
    json j = {{"schema", "lr3d.ldsreport.v1"}, {"reports", json::array()}};
    for (const auto& r : reports) j["reports"].push_back(report_to_json(r));
    std::ofstream out(report_out);
    if (!out) throw std::runtime_error("cannot write LDS report: " + report_out);
    out << j.dump(2) << "\n";
  }
  return reports;
}

TeachResult run_teach(const std::string& model_path, const std::string& dataset_path,
                      const std::string& merged_out, const std::string& predictions_out) {
  const iphead::IPHeadModel model = iphead::load_model(model_path);
  const synthdata::Dataset ds = synthdata::read_dataset(dataset_path);

  std::vector<synthdata::AnnotationRecord> close_gt, distant;
  for (const auto& r : ds.records) (r.distant ? distant : close_gt).push_back(r);

  const auto pseudo = teacher::pseudo_label(model, ds.config.camera, distant);
  const synthdata::Dataset merged = teacher::merge(close_gt, pseudo, ds.config);
  synthdata::validate_dataset(merged);
  if (!merged_out.empty())
    synthdata::write_dataset(merged, merged_out, synthdata::View::kTrain);

  if (!predictions_out.empty()) {
    std::vector<metrics::DetectionRecord> preds;
    for (const auto& p : pseudo) {
      metrics::DetectionRecord d;
      d.frame_id = p.frame_id;
      d.id = p.id;
      d.class_id = p.class_id;
      d.center = p.center;
      d.size = p.size;
      d.yaw = p.yaw;
      d.score = 1.0;
      preds.push_back(d);
    }
    write_predictions(preds, predictions_out);
  }
  return {(int)close_gt.size(), (int)pseudo.size()};
}

std::vector<iphead::CurveRow> run_curves(const std::string& model_path,
                                         const ExperimentConfig& cfg, const CurveSpec& spec,
                                         const std::string& out_path) {
  const iphead::IPHeadModel model = iphead::load_model(model_path);
  if (spec.class_id < 0 || spec.class_id >= (int)cfg.scene.classes.size())
    throw synthdata::ConfigInvalid("invalid field: curve class_id");
  if (!(spec.d_min > 0.0 && spec.d_max > spec.d_min) || spec.n_points < 1)
    throw synthdata::ConfigInvalid("invalid field: curve sweep range");

  // Class-prior template on the optical axis; on axis the relative
  // orientation equals the yaw.
  geometry::ObjectState obj;
  obj.size = cfg.scene.classes[spec.class_id].size_mean;
  obj.center = {0.0, 0.0, spec.d_min};
  obj.yaw = geometry::wrap_angle(spec.rel_orientation);
  obj.class_id = spec.class_id;

  const iphead::InstanceFeature feature = iphead::make_feature(
      obj.size, spec.rel_orientation, spec.class_id, (int)cfg.scene.classes.size());

  std::vector<geometry::Box2D> sweep;
  for (int i = 0; i < spec.n_points; ++i) {
    const double t = spec.n_points == 1 ? 0.0 : (double)i / (spec.n_points - 1);
    const double d = spec.d_min * std::pow(spec.d_max / spec.d_min, t);
    sweep.push_back(geometry::synthesize_pair(cfg.scene.camera, obj, d).first);
  }

  const auto rows = iphead::dump_mapping_curve(model, feature, sweep, cfg.scene.camera, obj,
                                               0.5 * spec.d_min, 2.0 * spec.d_max);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write curve table: " + out_path);
    out << "# w2d_px h2d_px pred_depth_m geom_depth_m\n";
    char line[160];
    for (const auto& r : rows) {
      std::snprintf(line, sizeof(line), "%.6f %.6f %.9f %.9f\n", r.w2d, r.h2d, r.pred_depth,
                    r.gt_depth);
      out << line;
    }
  }
  return rows;
}

void write_predictions(const std::vector<metrics::DetectionRecord>& preds,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions file: " + path);
  out << json{{"schema", "lr3d.predictions.v1"}}.dump() << "\n";
  for (const auto& p : preds) out << detail::detection_to_json(p).dump() << "\n";
}

std::vector<metrics::DetectionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty predictions file: " + path);
  const json header = json::parse(line);
  if (header.value("schema", "") != "lr3d.predictions.v1")
    throw std::runtime_error("unsupported predictions schema in " + path);
  std::vector<metrics::DetectionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(detail::detection_from_json(json::parse(line)));
  }
  return out;
}

std::vector<metrics::GroundTruthRecord> ground_truth_from_dataset(
    const synthdata::Dataset& dataset) {
  std::vector<metrics::GroundTruthRecord> out;
  for (const auto& r : dataset.records) {
    if (!r.gt_private.has_value()) continue;
    metrics::GroundTruthRecord g;
    g.frame_id = r.frame_id;
    g.id = r.id;
    g.class_id = r.class_id;
    g.center = r.gt_private->center;
    g.size = r.gt_private->size;
    g.yaw = r.gt_private->yaw;
    out.push_back(g);
  }
  return out;
}

std::string format_reports(const std::vector<metrics::LDSReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s %8s %8s %8s %6s %6s %6s\n", "bucket",
                "LDS", "mAP", "recall", "mATE", "mASE", "mAOE", "n_gt", "n_pred", "n_tp");
  os << line;
  for (const auto& r : reports) {
    if (!r.defined) {
      std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s %8s %8s %8s %6d %6d %6d\n",
                    r.bucket.c_str(), "undef", "-", "-", "-", "-", "-", r.n_gt, r.n_pred, r.n_tp);
    } else {
      std::snprintf(line, sizeof(line),
                    "%-12s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %6d %6d %6d\n", r.bucket.c_str(),
                    r.lds, r.map, r.recall, r.mate, r.mase, r.maoe, r.n_gt, r.n_pred, r.n_tp);
    }
    os << line;
  }
  return os.str();
}

}  // namespace lr3d::harness
