#ifndef TREEGP_PREDICT_HPP
#define TREEGP_PREDICT_HPP

#include "treegp/sampler.hpp"

namespace treegp {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

// kriging mean and variance at x under one leaf's parameters; x is on
// the unit-cube scale and assumed routed to this leaf
Moments predictive_moments(const VectorXd& x, const LeafState& leaf,
                           const HyperState& hyper);

/*
 * LeafPredictor:
 *
 * per (sample, leaf) factorizations reused across query locations:
 * beta conditional mean, the kriging residual solve, and the marginal
 * covariance factor of the observed responses.
 */
struct LeafPredictor {
  MatrixXd X;        // region training inputs
  CorrParams corr;
  double sigma2 = 1.0, tau2 = 1.0;
  VectorXd beta_mean;
  VectorXd kinv_resid;
  SpdFactor C;       // K + tau2 F W F'
  MatrixXd FW;       // F W
  MatrixXd W;

  Moments at(const VectorXd& x) const;
};

struct SamplePredictor {
  SampleTree tree;
  std::vector<LeafPredictor> leaves;  // SampleTree::leaves() order

  static SamplePredictor build(const PosteriorSample& sample,
                               const MatrixXd& Xtrain, const VectorXd& Ztrain);
  Moments at(const VectorXd& x) const;
};

// route queries through the sample's partition
std::vector<Moments> predict_sample(const MatrixXd& XX,
                                    const PosteriorSample& sample,
                                    const MatrixXd& Xtrain,
                                    const VectorXd& Ztrain);

struct PredictiveSummary {
  MatrixXd locations;  // unit-cube scale
  VectorXd mean;       // original response scale (all outputs below too)
  VectorXd median;
  std::vector<double> levels;
  MatrixXd quantiles;  // n_loc x levels.size()
  int draws_per_location = 0;
};

/*
 * Model-averaged prediction: one normal draw per (sample, location)
 * pooled into empirical quantiles; the mean field averages the
 * per-sample kriging means directly.  Deterministic in (samples, seed)
 * regardless of sample order or thread count.
 */
PredictiveSummary aggregate(const MatrixXd& XX,
                            const std::vector<PosteriorSample>& samples,
                            const MatrixXd& Xtrain, const VectorXd& Ztrain,
                            std::vector<double> levels, uint64_t seed,
                            double z_mean = 0.0, double z_sd = 1.0,
                            int threads = 0);

// type-7 empirical quantile of a sorted vector
double sorted_quantile(const std::vector<double>& sorted, double level);

}  // namespace treegp

#endif
