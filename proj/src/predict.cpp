#include "treegp/predict.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace treegp {

namespace {

VectorXd trend_basis(const VectorXd& x) {
  VectorXd f(x.size() + 1);
  f[0] = 1.0;
  f.tail(x.size()) = x;
  return f;
}

uint64_t sample_key(const PosteriorSample& s) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(s.chain)) << 32) ^
         static_cast<uint32_t>(s.round);
}

}  // namespace

Moments predictive_moments(const VectorXd& x, const LeafState& leaf,
                           const HyperState& hyper) {
  const double t2 = leaf.tau2;
  VectorXd f = trend_basis(x);
  BetaConditional bc = beta_conditional(leaf, hyper);

  Moments out;
  double fWf = f.dot(hyper.W * f);
  double kappa = 1.0 + leaf.corr.g + t2 * fWf;
  if (leaf.n() == 0) {
    out.mean = f.dot(bc.mean);
    out.var = leaf.sigma2 * kappa;
    return out;
  }
  VectorXd k = corr_cross(leaf.X, x, leaf.corr);
  out.mean = f.dot(bc.mean) +
             k.dot(leaf.corr_matrix.Kinv_z - leaf.corr_matrix.Kinv_F * bc.mean);

  MatrixXd c = leaf.corr_matrix.K +
               t2 * (leaf.F * (hyper.W * leaf.F.transpose()));
  SpdFactor cf = SpdFactor::compute(c, "predictive covariance");
  VectorXd q = k + t2 * (leaf.F * (hyper.W * f));
  out.var = leaf.sigma2 * (kappa - q.dot(cf.solve(q)));
  if (!(out.var > 0.0))
    throw NumericError("nonpositive predictive variance");
  return out;
}

Moments LeafPredictor::at(const VectorXd& x) const {
  VectorXd f = trend_basis(x);
  double fWf = f.dot(W * f);
  double kappa = 1.0 + corr.g + tau2 * fWf;
  Moments out;
  if (X.rows() == 0) {
    out.mean = f.dot(beta_mean);
    out.var = sigma2 * kappa;
    return out;
  }
  VectorXd k = corr_cross(X, x, corr);
  out.mean = f.dot(beta_mean) + k.dot(kinv_resid);
  VectorXd q = k + tau2 * (FW * f);
  out.var = sigma2 * (kappa - q.dot(C.solve(q)));
  if (!(out.var > 0.0))
    throw NumericError("nonpositive predictive variance");
  return out;
}

SamplePredictor SamplePredictor::build(const PosteriorSample& sample,
                                       const MatrixXd& Xtrain,
                                       const VectorXd& Ztrain) {
  SamplePredictor out;
  out.tree = sample.tree;
  std::vector<const SampleNode*> leaf_nodes = out.tree.leaves();
  std::vector<int> owner = out.tree.assign(Xtrain);

  MatrixXd w_inv = SpdFactor::compute(sample.W, "sample W")
                       .solve(MatrixXd::Identity(sample.W.rows(),
                                                 sample.W.cols()));

  out.leaves.resize(leaf_nodes.size());
  for (size_t li = 0; li < leaf_nodes.size(); ++li) {
    const SampleLeaf& sl = leaf_nodes[li]->leaf;
    LeafPredictor& lp = out.leaves[li];
    lp.corr = sl.corr;
    lp.sigma2 = sl.sigma2;
    lp.tau2 = sl.tau2;
    lp.W = sample.W;

    std::vector<int> rows;
    for (int r = 0; r < Xtrain.rows(); ++r)
      if (owner[r] == static_cast<int>(li)) rows.push_back(r);
    lp.X.resize(rows.size(), Xtrain.cols());
    VectorXd z(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      lp.X.row(i) = Xtrain.row(rows[i]);
      z[i] = Ztrain[rows[i]];
    }
    const int n = static_cast<int>(rows.size());
    const int m = static_cast<int>(Xtrain.cols()) + 1;

    if (n == 0) {
      lp.beta_mean = sample.beta0;
      continue;
    }
    MatrixXd f(n, m);
    f.col(0).setOnes();
    f.rightCols(m - 1) = lp.X;
    CorrMatrix km = build_corr_matrix(lp.X, lp.corr);
    km.cache_solves(z, f);
    MatrixXd prec = f.transpose() * km.Kinv_F + w_inv / lp.tau2;
    lp.beta_mean = SpdFactor::compute(prec, "beta precision")
                       .solve(f.transpose() * km.Kinv_z +
                              w_inv * sample.beta0 / lp.tau2);
    lp.kinv_resid = km.Kinv_z - km.Kinv_F * lp.beta_mean;
    lp.FW = f * sample.W;
    lp.C = SpdFactor::compute(
        km.K + lp.tau2 * (lp.FW * f.transpose()), "predictive covariance");
  }
  return out;
}

Moments SamplePredictor::at(const VectorXd& x) const {
  const SampleNode* node = tree.root.get();
  std::vector<const SampleNode*> order = tree.leaves();
  while (!node->is_leaf())
    node = x[node->split->var] <= node->split->value ? node->left.get()
                                                     : node->right.get();
  for (size_t i = 0; i < order.size(); ++i)
    if (order[i] == node) return leaves[i].at(x);
  throw StructError("query routed to unknown leaf");
}

std::vector<Moments> predict_sample(const MatrixXd& XX,
                                    const PosteriorSample& sample,
                                    const MatrixXd& Xtrain,
                                    const VectorXd& Ztrain) {
  SamplePredictor pred = SamplePredictor::build(sample, Xtrain, Ztrain);
  std::vector<Moments> out(XX.rows());
  for (int i = 0; i < XX.rows(); ++i) out[i] = pred.at(XX.row(i).transpose());
  return out;
}

double sorted_quantile(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) throw ParamError("quantile of empty sample");
  if (level <= 0.0) return sorted.front();
  if (level >= 1.0) return sorted.back();
  double pos = level * (sorted.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  double frac = pos - lo;
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

PredictiveSummary aggregate(const MatrixXd& XX,
                            const std::vector<PosteriorSample>& samples,
                            const MatrixXd& Xtrain, const VectorXd& Ztrain,
                            std::vector<double> levels, uint64_t seed,
                            double z_mean, double z_sd, int threads) {
  if (samples.empty()) throw ParamError("aggregate needs >= 1 sample");
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0))
      throw ParamError("quantile levels must lie in (0, 1)");

  // canonical (chain, round) order makes the result independent of the
  // incoming sample order
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return sample_key(samples[a]) < sample_key(samples[b]);
  });

  const int n_loc = static_cast<int>(XX.rows());
  const int n_samp = static_cast<int>(samples.size());
  MatrixXd means(n_loc, n_samp);
  MatrixXd draws(n_loc, n_samp);

  int n_threads = threads > 0
                      ? threads
                      : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  n_threads = std::min<int>(n_threads, n_samp);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int j = next.fetch_add(1);
      if (j >= n_samp) return;
      const PosteriorSample& s = samples[order[j]];
      SamplePredictor pred = SamplePredictor::build(s, Xtrain, Ztrain);
      Rng rng(derive_seed(seed, sample_key(s)));
      for (int i = 0; i < n_loc; ++i) {
        Moments m = pred.at(XX.row(i).transpose());
        means(i, j) = m.mean;
        draws(i, j) = rng.normal(m.mean, std::sqrt(m.var));
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  PredictiveSummary out;
  out.locations = XX;
  out.levels = std::move(levels);
  out.draws_per_location = n_samp;
  out.mean.resize(n_loc);
  out.median.resize(n_loc);
  out.quantiles.resize(n_loc, static_cast<int>(out.levels.size()));
  std::vector<double> pool_row(n_samp);
  for (int i = 0; i < n_loc; ++i) {
    out.mean[i] = z_mean + z_sd * means.row(i).mean();
    for (int j = 0; j < n_samp; ++j) pool_row[j] = draws(i, j);
    std::sort(pool_row.begin(), pool_row.end());
    out.median[i] = z_mean + z_sd * sorted_quantile(pool_row, 0.5);
    for (size_t q = 0; q < out.levels.size(); ++q)
      out.quantiles(i, static_cast<int>(q)) =
          z_mean + z_sd * sorted_quantile(pool_row, out.levels[q]);
  }
  return out;
}

}  // namespace treegp
