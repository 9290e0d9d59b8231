#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <limits>

#include "lr3d/harness.hpp"

namespace {

using namespace lr3d;

harness::ExperimentConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return harness::default_experiment();
  return harness::load_experiment(config_path);
}

std::vector<metrics::RangeBucket> named_buckets(const std::string& name) {
  const double inf = std::numeric_limits<double>::infinity();
  if (name == "kitti") return {{"close", 0.0, 40.0}, {"distant", 40.0, inf}};
  if (name == "nuscenes")
    return {{"close", 0.0, 40.0}, {"distant-near", 40.0, 51.2}, {"distant-far", 51.2, inf}};
  throw synthdata::ConfigInvalid("invalid field: buckets (unknown preset " + name + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LR3D toolkit: synthetic scenes, IP-Head depth models, long-range teacher, LDS"};
  app.require_subcommand(1);

  std::string config_path, outdir = "out";
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset (train + eval views)");
  gen->add_option("--config", config_path, "Experiment config JSON");
  gen->add_option("--outdir", outdir, "Output directory")->capture_default_str();

  std::string dataset_path, model_out = "model.json", train_report_out = "train_report.json";
  std::string weight_mode_flag;
  bool no_aug = false;
  int epochs_override = -1;
  long long seed_override = -1;
  auto* train = app.add_subcommand("train", "Train an IP-Head on the close records of a dataset");
  train->add_option("--config", config_path, "Experiment config JSON");
  train->add_option("--dataset", dataset_path, "Training-view dataset")->required();
  train->add_option("--model-out", model_out, "Model output path")->capture_default_str();
  train->add_option("--report-out", train_report_out, "Train report path")->capture_default_str();
  train->add_option("--weight-mode", weight_mode_flag, "dynamic | shared");
  train->add_flag("--no-aug", no_aug, "Disable projection augmentation");
  train->add_option("--epochs", epochs_override, "Override epochs");
  train->add_option("--seed", seed_override, "Override training seed");

  std::string predictions_path, gt_path, lds_report_out = "lds_report.json", bucket_preset;
  auto* eval = app.add_subcommand("eval", "Compute bucketed LDS reports");
  eval->add_option("--config", config_path, "Experiment config JSON (bucket source)");
  eval->add_option("--predictions", predictions_path, "Predictions JSONL")->required();
  eval->add_option("--gt", gt_path, "Eval-view dataset with private GT")->required();
  eval->add_option("--buckets", bucket_preset, "Bucket preset: kitti | nuscenes");
  eval->add_option("--report-out", lds_report_out, "Report path")->capture_default_str();

  std::string model_path, merged_out = "merged.jsonl", teach_preds_out;
  auto* teach = app.add_subcommand("teach", "Pseudo-label distant records and merge with close GT");
  teach->add_option("--model", model_path, "Trained IP-Head model")->required();
  teach->add_option("--dataset", dataset_path, "Training-view dataset")->required();
  teach->add_option("--merged-out", merged_out, "Merged dataset path")->capture_default_str();
  teach->add_option("--predictions-out", teach_preds_out,
                    "Also write pseudo labels as a predictions file");

  harness::CurveSpec curve_spec;
  std::string curve_out = "curve.txt";
  auto* curves = app.add_subcommand("curves", "Dump the 2D-box-to-depth mapping curve");
  curves->add_option("--model", model_path, "Trained IP-Head model")->required();
  curves->add_option("--config", config_path, "Experiment config JSON (camera, class priors)");
  curves->add_option("--class-id", curve_spec.class_id, "Class index")->capture_default_str();
  curves->add_option("--orientation", curve_spec.rel_orientation, "Relative orientation, radians")
      ->capture_default_str();
  curves->add_option("--d-min", curve_spec.d_min, "Sweep start depth, m")->capture_default_str();
  curves->add_option("--d-max", curve_spec.d_max, "Sweep end depth, m")->capture_default_str();
  curves->add_option("--points", curve_spec.n_points, "Sweep size")->capture_default_str();
  curves->add_option("--out", curve_out, "Curve table path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = load_or_default(config_path);
      const auto paths = harness::run_generate(cfg, outdir);
      std::cout << "wrote " << paths.train_path << " and " << paths.eval_path << "\n";
    } else if (train->parsed()) {
      auto cfg = load_or_default(config_path);
      if (!weight_mode_flag.empty())
        cfg.weight_mode = iphead::weight_mode_from_string(weight_mode_flag);
      if (no_aug) cfg.train.k_aug = 0;
      if (epochs_override > 0) cfg.train.epochs = epochs_override;
      if (seed_override >= 0) cfg.train.seed = (uint64_t)seed_override;
      const auto report = harness::run_train(cfg, dataset_path, model_out, train_report_out);
      if (report.diverged) {
        std::cerr << "training diverged after " << report.epochs_run << " epochs\n";
        return harness::kExitNumericalError;
      }
      std::cout << "trained " << report.epochs_run << " epochs, final loss "
                << report.epoch_loss.back() << ", held-out median rel depth error "
                << report.final_val_error << "\n";
    } else if (eval->parsed()) {
      std::vector<metrics::RangeBucket> buckets;
      if (!bucket_preset.empty())
        buckets = named_buckets(bucket_preset);
      else
        buckets = load_or_default(config_path).buckets;
      const auto reports = harness::run_eval(predictions_path, gt_path, buckets, lds_report_out);
      std::cout << harness::format_reports(reports);
    } else if (teach->parsed()) {
      const auto result = harness::run_teach(model_path, dataset_path, merged_out, teach_preds_out);
      std::cout << "merged " << result.n_close << " close GT records with " << result.n_pseudo
                << " pseudo labels into " << merged_out << "\n";
    } else if (curves->parsed()) {
      const auto cfg = load_or_default(config_path);
      harness::run_curves(model_path, cfg, curve_spec, curve_out);
      std::cout << "wrote " << curve_out << "\n";
    }
  } catch (const synthdata::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return harness::kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return harness::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness::kExitIoError;
  }
  return harness::kExitOk;
}
