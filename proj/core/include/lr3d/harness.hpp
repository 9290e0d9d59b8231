#pragma once

#include <string>
#include <vector>

#include "lr3d/iphead.hpp"
#include "lr3d/metrics.hpp"
#include "lr3d/synthdata.hpp"

namespace lr3d::harness {

// Process exit codes shared by all CLI verbs.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;
inline constexpr int kExitNumericalError = 4;

// Everything needed to re-run generate + train + eval bit-identically.
struct ExperimentConfig {
  synthdata::SceneConfig scene;
  iphead::TrainConfig train;
  iphead::PositionalEncodingConfig pe;
  iphead::TargetNetShape target;
  iphead::WeightMode weight_mode = iphead::WeightMode::kDynamic;
  double d_ref = 1.0;
  int hyper_hidden = 64;
  std::vector<metrics::RangeBucket> buckets;
};

ExperimentConfig default_experiment();

ExperimentConfig load_experiment(const std::string& path);
void save_experiment(const ExperimentConfig& cfg, const std::string& path);

struct GeneratePaths {
  std::string train_path;
  std::string eval_path;
};

// Writes <outdir>/train.jsonl and <outdir>/eval.jsonl.
GeneratePaths run_generate(const ExperimentConfig& cfg, const std::string& outdir);

// Trains on the close records of a training-view dataset; writes the model
// and a JSON train report.
iphead::TrainReport run_train(const ExperimentConfig& cfg, const std::string& dataset_path,
                              const std::string& model_out, const std::string& report_out);

std::vector<metrics::LDSReport> run_eval(const std::string& predictions_path,
                                         const std::string& gt_dataset_path,
                                         const std::vector<metrics::RangeBucket>& buckets,
                                         const std::string& report_out);

struct TeachResult {
  int n_close = 0;
  int n_pseudo = 0;
};

// Pseudo-labels the distant records of a dataset and writes the merged
// training set; optionally also emits the pseudo labels as a predictions
// file (score 1.0) for evaluation.
TeachResult run_teach(const std::string& model_path, const std::string& dataset_path,
                      const std::string& merged_out, const std::string& predictions_out = "");

struct CurveSpec {
  int class_id = 0;
  double rel_orientation = 0.0;
  double d_min = 10.0;
  double d_max = 110.0;
  int n_points = 64;
};

// Sweeps a class-prior object template over a depth range and writes the
// columnar (w2d, h2d, predicted depth, geometric depth) table.
std::vector<iphead::CurveRow> run_curves(const std::string& model_path,
                                         const ExperimentConfig& cfg, const CurveSpec& spec,
                                         const std::string& out_path);

void write_predictions(const std::vector<metrics::DetectionRecord>& preds,
                       const std::string& path);
std::vector<metrics::DetectionRecord> read_predictions(const std::string& path);

// Ground truth for evaluation, from the private GT section of an eval-view
// dataset.
std::vector<metrics::GroundTruthRecord> ground_truth_from_dataset(
    const synthdata::Dataset& dataset);

std::string format_reports(const std::vector<metrics::LDSReport>& reports);

}  // namespace lr3d::harness
