#pragma once

// Brute-force reference implementation of the long-range detection score,
// written independently of the library code path. Test-only.

#include <vector>

#include "lr3d/metrics.hpp"

namespace lr3d::testref {

struct RefResult {
  bool defined = false;
  double lds = 0.0;
  double map = 0.0;
  double recall = 0.0;
  double mate = 1.0;
  double mase = 1.0;
  double maoe = 1.0;
};

RefResult reference_lds(const std::vector<metrics::DetectionRecord>& preds,
                        const std::vector<metrics::GroundTruthRecord>& gts, double d_min,
                        double d_max);

// Maximum-cardinality assignment of predictions to ground truth under the
// relative-error threshold, by exhaustive search. Small inputs only.
int optimal_tp_count(const std::vector<metrics::DetectionRecord>& preds,
                     const std::vector<metrics::GroundTruthRecord>& gts, double r);

}  // namespace lr3d::testref
