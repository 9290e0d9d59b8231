#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace lr3d::metrics {

struct NonPositiveDistance : std::runtime_error {
  NonPositiveDistance() : std::runtime_error("ground-truth distance must be positive") {}
};
struct OverlappingBuckets : std::runtime_error {
  OverlappingBuckets() : std::runtime_error("range buckets overlap") {}
};

struct DetectionRecord {
  int frame_id = 0;
  int id = 0;  // stable tiebreak key after score
  int class_id = 0;
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  Eigen::Vector3d size{1.0, 1.0, 1.0};  // l, w, h
  double yaw = 0.0;
  double score = 0.0;
  double distance() const { return center.norm(); }
};

struct GroundTruthRecord {
  int frame_id = 0;
  int id = 0;
  int class_id = 0;
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  Eigen::Vector3d size{1.0, 1.0, 1.0};
  double yaw = 0.0;
  double distance() const { return center.norm(); }
};

// Half-open on the far side: d_min <= distance < d_max.
struct RangeBucket {
  std::string label;
  double d_min = 0.0;
  double d_max = 0.0;
};

inline constexpr std::array<double, 4> kApThresholds{0.025, 0.05, 0.1, 0.2};
inline constexpr double kTpThreshold = 0.1;

// || P_c - G_c || / G_d
double rel_dist_err(const Eigen::Vector3d& pred_center, const Eigen::Vector3d& gt_center,
                    double gt_distance);

struct MatchResult {
  std::vector<int> pred_to_gt;  // index into gts, -1 for false positives
  int n_tp = 0;
};

// Greedy matching in descending score order (ties: ascending id). Each
// prediction takes the unmatched same-frame same-class GT with minimal
// relative distance error if that error is below r.
MatchResult match(const std::vector<DetectionRecord>& preds,
                  const std::vector<GroundTruthRecord>& gts, double r);

// 101-point interpolated AP with precision envelope over a single class.
double average_precision(const std::vector<DetectionRecord>& preds,
                         const std::vector<GroundTruthRecord>& gts, double r);

struct ClassThresholdAP {
  int class_id = 0;
  double threshold = 0.0;
  double ap = 0.0;
};

// Mean AP over classes present in gts and the four relative thresholds.
double mean_ap(const std::vector<DetectionRecord>& preds,
               const std::vector<GroundTruthRecord>& gts,
               std::vector<ClassThresholdAP>* table = nullptr);

struct TPMetrics {
  double mate = 1.0;  // mean relative translation error / 0.1
  double mase = 1.0;  // mean (1 - size-aligned IoU)
  double maoe = 1.0;  // mean |wrapped yaw difference|, radians
  double recall = 0.0;
  int n_tp = 0;
};

// Matched at r = 0.1; mTPs default to 1 (worst) when no TP exists.
TPMetrics true_positive_metrics(const std::vector<DetectionRecord>& preds,
                                const std::vector<GroundTruthRecord>& gts);

struct LDSReport {
  std::string bucket;
  bool defined = false;  // false when the bucket holds no ground truth
  double lds = 0.0;
  double map = 0.0;
  double recall = 0.0;
  double mate = 1.0;
  double mase = 1.0;
  double maoe = 1.0;
  std::vector<ClassThresholdAP> ap_table;
  int n_gt = 0;
  int n_pred = 0;
  int n_tp = 0;
};

// Full LDS for one bucket. Ground truth is filtered by GT distance,
// predictions by predicted distance.
LDSReport lds(const std::vector<DetectionRecord>& preds,
              const std::vector<GroundTruthRecord>& gts, const RangeBucket& bucket);

// One report per bucket plus an "overall" report over [0, inf).
std::vector<LDSReport> bucketed_report(const std::vector<DetectionRecord>& preds,
                                       const std::vector<GroundTruthRecord>& gts,
                                       const std::vector<RangeBucket>& buckets);

}  // namespace lr3d::metrics
