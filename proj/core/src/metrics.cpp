#include "lr3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "lr3d/geometry.hpp"

namespace lr3d::metrics {

double rel_dist_err(const Eigen::Vector3d& pred_center, const Eigen::Vector3d& gt_center,
                    double gt_distance) {
  if (!(gt_distance > 0.0)) throw NonPositiveDistance();
  return (pred_center - gt_center).norm() / gt_distance;
}

namespace {

std::vector<int> score_order(const std::vector<DetectionRecord>& preds) {
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    return preds[a].id < preds[b].id;
  });
  return order;
}

double aligned_size_iou(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double inter = std::min(a.x(), b.x()) * std::min(a.y(), b.y()) * std::min(a.z(), b.z());
  const double uni = a.prod() + b.prod() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace

MatchResult match(const std::vector<DetectionRecord>& preds,
                  const std::vector<GroundTruthRecord>& gts, double r) {
  MatchResult result;
  result.pred_to_gt.assign(preds.size(), -1);
  std::vector<bool> gt_taken(gts.size(), false);

  for (int pi : score_order(preds)) {
    const DetectionRecord& p = preds[pi];
    int best_gt = -1;
    double best_err = std::numeric_limits<double>::infinity();
    for (int gi = 0; gi < (int)gts.size(); ++gi) {
      const GroundTruthRecord& g = gts[gi];
      if (gt_taken[gi] || g.frame_id != p.frame_id || g.class_id != p.class_id) continue;
      const double err = rel_dist_err(p.center, g.center, g.distance());
      if (err < best_err) {
        best_err = err;
        best_gt = gi;
      }
    }
    if (best_gt >= 0 && best_err < r) {
      gt_taken[best_gt] = true;
      result.pred_to_gt[pi] = best_gt;
      ++result.n_tp;
    }
  }
  return result;
}

double average_precision(const std::vector<DetectionRecord>& preds,
                         const std::vector<GroundTruthRecord>& gts, double r) {
  if (gts.empty() || preds.empty()) return 0.0;
  const MatchResult m = match(preds, gts, r);

  // Cumulative precision/recall in score order.
  const auto order = score_order(preds);
  std::vector<double> precision, recall;
  int tp = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (m.pred_to_gt[order[k]] >= 0) ++tp;
    precision.push_back((double)tp / (double)(k + 1));
    recall.push_back((double)tp / (double)gts.size());
  }

  // 101-point interpolation with precision envelope.
  double ap = 0.0;
  for (int t = 0; t <= 100; ++t) {
    const double rec = t / 100.0;
    double best = 0.0;
    for (size_t k = 0; k < precision.size(); ++k)
      if (recall[k] >= rec) best = std::max(best, precision[k]);
    ap += best;
  }
  return ap / 101.0;
}

double mean_ap(const std::vector<DetectionRecord>& preds,
               const std::vector<GroundTruthRecord>& gts, std::vector<ClassThresholdAP>* table) {
  std::set<int> classes;
  for (const auto& g : gts) classes.insert(g.class_id);
  if (classes.empty()) return 0.0;

  double sum = 0.0;
  for (int c : classes) {
    std::vector<DetectionRecord> cp;
    std::vector<GroundTruthRecord> cg;
    for (const auto& p : preds)
      if (p.class_id == c) cp.push_back(p);
    for (const auto& g : gts)
      if (g.class_id == c) cg.push_back(g);
    for (double r : kApThresholds) {
      const double ap = average_precision(cp, cg, r);
      sum += ap;
      if (table) table->push_back({c, r, ap});
    }
  }
  return sum / (double)(classes.size() * kApThresholds.size());
}

TPMetrics true_positive_metrics(const std::vector<DetectionRecord>& preds,
                                const std::vector<GroundTruthRecord>& gts) {
  TPMetrics out;
  if (gts.empty()) return out;
  const MatchResult m = match(preds, gts, kTpThreshold);
  out.n_tp = m.n_tp;
  out.recall = (double)m.n_tp / (double)gts.size();
  if (m.n_tp == 0) return out;  // mTPs stay at the worst value 1.0

  double ate = 0.0, ase = 0.0, aoe = 0.0;
  for (size_t pi = 0; pi < preds.size(); ++pi) {
    const int gi = m.pred_to_gt[pi];
    if (gi < 0) continue;
    const DetectionRecord& p = preds[pi];
    const GroundTruthRecord& g = gts[gi];
    ate += rel_dist_err(p.center, g.center, g.distance()) / kTpThreshold;
    ase += 1.0 - aligned_size_iou(p.size, g.size);
    aoe += std::abs(geometry::wrap_angle(p.yaw - g.yaw));
  }
  out.mate = ate / m.n_tp;
  out.mase = ase / m.n_tp;
  out.maoe = aoe / m.n_tp;
  return out;
}

LDSReport lds(const std::vector<DetectionRecord>& preds,
              const std::vector<GroundTruthRecord>& gts, const RangeBucket& bucket) {
  LDSReport rep;
  rep.bucket = bucket.label;

  std::vector<DetectionRecord> bp;
  std::vector<GroundTruthRecord> bg;
  for (const auto& p : preds)
    if (p.distance() >= bucket.d_min && p.distance() < bucket.d_max) bp.push_back(p);
  for (const auto& g : gts)
    if (g.distance() >= bucket.d_min && g.distance() < bucket.d_max) bg.push_back(g);

  rep.n_gt = (int)bg.size();
  rep.n_pred = (int)bp.size();
  if (bg.empty()) return rep;  // undefined, not zero
  rep.defined = true;

  rep.map = mean_ap(bp, bg, &rep.ap_table);
  const TPMetrics tp = true_positive_metrics(bp, bg);
  rep.recall = tp.recall;
  rep.mate = tp.mate;
  rep.mase = tp.mase;
  rep.maoe = tp.maoe;
  rep.n_tp = tp.n_tp;

  double tp_term = 0.0;
  for (double mtp : {rep.mate, rep.mase, rep.maoe}) tp_term += 1.0 - std::min(1.0, mtp);
  rep.lds = (3.0 * rep.map + rep.recall * tp_term) / 6.0;
  return rep;
}

std::vector<LDSReport> bucketed_report(const std::vector<DetectionRecord>& preds,
                                       const std::vector<GroundTruthRecord>& gts,
                                       const std::vector<RangeBucket>& buckets) {
  std::vector<RangeBucket> sorted = buckets;
  std::sort(sorted.begin(), sorted.end(),
            [](const RangeBucket& a, const RangeBucket& b) { return a.d_min < b.d_min; });
  for (size_t i = 0; i + 1 < sorted.size(); ++i)
    if (sorted[i + 1].d_min < sorted[i].d_max) throw OverlappingBuckets();
  for (const auto& b : sorted)
    if (!(b.d_min < b.d_max)) throw OverlappingBuckets();

  std::vector<LDSReport> out;
  for (const auto& b : buckets) out.push_back(lds(preds, gts, b));
  out.push_back(lds(preds, gts, {"overall", 0.0, std::numeric_limits<double>::infinity()}));
  return out;
}

}  // namespace lr3d::metrics
