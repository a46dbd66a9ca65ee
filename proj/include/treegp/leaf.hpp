#ifndef TREEGP_LEAF_HPP
#define TREEGP_LEAF_HPP

#include <vector>

#include "treegp/kernel.hpp"

namespace treegp {

/*
 * FixedHyper:
 *
 * hyperparameters held fixed for a whole run.  Defaults are weakly
 * informative for unit-cube inputs and standardized responses.
 */
struct FixedHyper {
  VectorXd mu;   // prior mean of beta0
  MatrixXd B;    // prior covariance of beta0
  MatrixXd V;    // inverse-Wishart scale for W
  double rho = 0.0;  // inverse-Wishart degrees of freedom (>= m)
  double alpha_sigma = 5.0, q_sigma = 5.0;
  double alpha_tau = 5.0, q_tau = 5.0;
  double lambda_g = 10.0;  // Exp(lambda) nugget prior
  double tree_a = 0.5, tree_b = 2.0;
  double nugget_floor = 1e-8;

  static FixedHyper defaults(int m);
  void validate(int m) const;
};

/*
 * HyperState:
 *
 * the shared hierarchical parameters (beta0, W) plus solver caches for
 * the fixed pieces.  refresh() must be called after W changes.
 */
struct HyperState {
  VectorXd beta0;
  MatrixXd W;
  FixedHyper fixed;

  MatrixXd W_inv;
  double log_det_W = 0.0;
  SpdFactor B_chol;
  MatrixXd B_inv;

  static HyperState init(FixedHyper f);
  void set_W(MatrixXd w);  // refreshes W_inv / log_det_W
  int m() const { return static_cast<int>(beta0.size()); }
};

/*
 * LeafState:
 *
 * one region's GP: linear trend beta, variance sigma2, trend-variance
 * multiplier tau2, correlation parameters, and the cached factorization
 * and sufficient statistics every update formula reuses.
 */
struct LeafState {
  VectorXd beta;
  double sigma2 = 1.0, tau2 = 1.0;
  CorrParams corr;
  CorrMatrix corr_matrix;
  std::vector<int> data_indices;

  // region data (rows already scaled to the unit cube / standardized)
  MatrixXd X;  // n x m_X
  MatrixXd F;  // n x m, first column ones
  VectorXd Z;  // n

  // sufficient statistics against K^{-1}
  MatrixXd FtKiF;
  VectorXd FtKiZ;
  double ZtKiZ = 0.0;

  int n() const { return static_cast<int>(Z.size()); }
  void set_data(MatrixXd x_region, VectorXd z_region,
                std::vector<int> indices);
  // rebuild corr_matrix and the sufficient statistics from corr + X
  void rebuild_cache();
};

/* conditional moments of beta given everything else (Eq. form:
 * cov_unit = (F'K^-1 F + W^-1/tau2)^-1, scaled by sigma2 in the draw) */
struct BetaConditional {
  VectorXd mean;
  MatrixXd cov_unit;
  double log_det_cov_unit = 0.0;
};
BetaConditional beta_conditional(const LeafState& leaf,
                                 const HyperState& hyper);

/* marginal posterior of the correlation parameterization with beta and
 * sigma2 integrated out, prior on (d, g) included, plus the pieces the
 * sigma2 and beta updates reuse */
struct CorrPosterior {
  double log_post = 0.0;  // includes all constants and the corr prior
  double quad = 0.0;      // quadratic form entering the sigma2 scale
  BetaConditional beta;
};
CorrPosterior corr_posterior(const LeafState& leaf, const HyperState& hyper);

// convenience: just the log posterior value
double log_marginal_corr(const LeafState& leaf, const HyperState& hyper);

// Gibbs / marginalized draws
VectorXd draw_beta(const LeafState& leaf, const HyperState& hyper, Rng& rng);
double draw_tau2(const LeafState& leaf, const HyperState& hyper, Rng& rng);
double draw_sigma2_marginal(const LeafState& leaf, const HyperState& hyper,
                            Rng& rng);
MatrixXd draw_W(const std::vector<const LeafState*>& leaves,
                const HyperState& hyper, Rng& rng);

struct Beta0Conditional {
  VectorXd mean;
  MatrixXd cov;
};
Beta0Conditional beta0_conditional(const std::vector<const LeafState*>& leaves,
                                   const HyperState& hyper);
VectorXd draw_beta0(const std::vector<const LeafState*>& leaves,
                    const HyperState& hyper, Rng& rng);

// prior over correlation parameters: mixture of Gammas for each range
// component (shape-rate), Exp(lambda) for the nugget
CorrParams prior_draw_corr(const FixedHyper& fixed, int m_x, CorrFamily family,
                           double p0, Rng& rng);
double corr_log_prior(const CorrParams& params, const FixedHyper& fixed);
double range_log_prior(double d);  // single mixture component density

// uniform sliding window Unif(3c/4, 4c/3) around the current value
double slide_window(double current, Rng& rng);

/* one Metropolis-Hastings block update of (d, g); returns acceptance.
 * Rebuilds the leaf caches on accept. */
bool mh_update_corr(LeafState& leaf, const HyperState& hyper, Rng& rng);

// log MH ratio for moving the leaf's correlation parameters to
// `proposal` (window corrections included); exposed for tests
double corr_mh_log_ratio(const LeafState& leaf, const HyperState& hyper,
                         const CorrParams& proposal);

// Wishart_m(scale, df) draw by Bartlett decomposition
MatrixXd wishart_draw(const MatrixXd& scale, double df, Rng& rng);

// scalar prior log densities shared with the log-posterior bookkeeping
double inv_gamma_log_density(double x, double shape, double scale);
double inv_wishart_log_density(const MatrixXd& w, const MatrixXd& psi,
                               double df);

}  // namespace treegp

#endif
