#ifndef TREEGP_CV_HPP
#define TREEGP_CV_HPP

#include "treegp/config.hpp"
#include "treegp/dataset.hpp"
#include "treegp/predict.hpp"

namespace treegp {

struct FoldResult {
  int fold = 0;
  int n_heldout = 0;
  int covered = 0;
  double coverage = 0.0;
};

struct CvReport {
  int folds = 0;
  double level = 0.0;
  std::vector<FoldResult> per_fold;
  int pooled_covered = 0;
  int pooled_total = 0;
  double pooled_coverage = 0.0;
};

// seeded random fold labels, sizes differing by at most one
std::vector<int> fold_assignment(int n, int folds, uint64_t seed);

/* k-fold coverage harness: fit on each complement, predict the held-out
 * rows, record membership in the central `level` interval.  Folds run
 * as independent fit jobs bounded by `workers`. */
CvReport run_cv(const Dataset& data, const FitConfig& config, int folds,
                double level, uint64_t seed, int workers = 0);

}  // namespace treegp

#endif
