#include "treegp/cv.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

namespace treegp {

std::vector<int> fold_assignment(int n, int folds, uint64_t seed) {
  if (folds < 2) throw ParamError("cv needs folds >= 2");
  if (folds > n) throw ParamError("more folds than rows");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x666f6c64ULL));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(i + 1)]);
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[order[i]] = i % folds;
  return label;
}

CvReport run_cv(const Dataset& data, const FitConfig& config, int folds,
                double level, uint64_t seed, int workers) {
  if (!(level > 0.0 && level < 1.0))
    throw ParamError("cv level must lie in (0, 1)");
  const int n = data.n();
  const int n_min = McmcConfig::n_min_for(data.m_x());
  std::vector<int> label = fold_assignment(n, folds, seed);

  CvReport report;
  report.folds = folds;
  report.level = level;
  report.per_fold.resize(folds);

  std::atomic<int> next{0};
  std::vector<std::string> errors(folds);
  auto run_fold = [&](int k) {
    std::vector<int> train, held;
    for (int i = 0; i < n; ++i)
      (label[i] == k ? held : train).push_back(i);
    if (static_cast<int>(train.size()) < n_min) {
      errors[k] = "fold " + std::to_string(k) +
                  " leaves fewer than n_min training rows";
      return;
    }
    Dataset tr = data.subset(train);
    McmcConfig mc = config.mcmc;
    mc.hyper = config.resolve_hyper(data.m_x() + 1);
    mc.seed = derive_seed(seed, 1000 + static_cast<uint64_t>(k));
    mc.out_dir.clear();  // per-fold fits keep no artifacts
    FitResult fit = run_chains(tr.X, tr.Z, mc);

    MatrixXd xq(held.size(), data.m_x());
    for (size_t i = 0; i < held.size(); ++i) xq.row(i) = data.X.row(held[i]);
    std::vector<double> levels{0.5 * (1.0 - level), 1.0 - 0.5 * (1.0 - level)};
    PredictiveSummary s =
        aggregate(xq, fit.samples, tr.X, tr.Z, levels,
                  derive_seed(seed, 2000 + static_cast<uint64_t>(k)),
                  data.scale.z_mean, data.scale.z_sd, 1);

    FoldResult& fr = report.per_fold[k];
    fr.fold = k;
    fr.n_heldout = static_cast<int>(held.size());
    for (size_t i = 0; i < held.size(); ++i) {
      double z = data.Z_raw[held[i]];
      int row = static_cast<int>(i);
      if (z >= s.quantiles(row, 0) && z <= s.quantiles(row, 1)) ++fr.covered;
    }
    fr.coverage = fr.n_heldout > 0
                      ? static_cast<double>(fr.covered) / fr.n_heldout
                      : 0.0;
  };

  int n_workers = workers > 0
                      ? workers
                      : std::max(1u, std::min<unsigned>(
                                         4u, std::thread::hardware_concurrency()));
  n_workers = std::min(n_workers, folds);
  if (n_workers == 1) {
    for (int k = 0; k < folds; ++k) run_fold(k);
  } else {
    auto worker = [&]() {
      for (;;) {
        int k = next.fetch_add(1);
        if (k >= folds) return;
        run_fold(k);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (int k = 0; k < folds; ++k)
    if (!errors[k].empty()) throw ParamError(errors[k]);

  for (const FoldResult& fr : report.per_fold) {
    report.pooled_covered += fr.covered;
    report.pooled_total += fr.n_heldout;
  }
  report.pooled_coverage =
      report.pooled_total > 0
          ? static_cast<double>(report.pooled_covered) / report.pooled_total
          : 0.0;
  return report;
}

}  // namespace treegp
