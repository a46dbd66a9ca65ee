#ifndef TREEGP_KERNEL_HPP
#define TREEGP_KERNEL_HPP

#include "treegp/common.hpp"

namespace treegp {

enum class CorrFamily { Isotropic, Separable };

/*
 * CorrParams:
 *
 * per-region power-family correlation parameterization.  d holds one
 * range for the isotropic family or one per input dimension for the
 * separable family; g is the nugget; the power p0 is fixed per fit.
 */
struct CorrParams {
  CorrFamily family = CorrFamily::Isotropic;
  VectorXd d = VectorXd::Constant(1, 0.5);
  double g = 0.1;
  double p0 = 2.0;

  void validate(int m_x) const;  // throws ParamError
};

double corr_isotropic(const VectorXd& x1, const VectorXd& x2, double d,
                      double p0);
double corr_separable(const VectorXd& x1, const VectorXd& x2,
                      const VectorXd& d, double p0);

// underlying proper correlation (no nugget)
double corr_value(const VectorXd& x1, const VectorXd& x2,
                  const CorrParams& params);

// adds the nugget when the two observation indices coincide
double corr_with_nugget(const VectorXd& xj, const VectorXd& xk,
                        const CorrParams& params, bool same_index);

/*
 * CorrMatrix:
 *
 * dense correlation matrix with its triangular factor, log-determinant
 * and (optionally) solves against the region's responses and design.
 * Immutable after construction; safe to share read-only.
 */
struct CorrMatrix {
  MatrixXd K;
  SpdFactor chol;
  double log_det = 0.0;
  VectorXd Kinv_z;  // filled by cache_solves
  MatrixXd Kinv_F;

  int n() const { return static_cast<int>(K.rows()); }
  // one step of iterative refinement keeps residuals near machine
  // precision even with nuggets down at the 1e-6 scale
  VectorXd solve(const VectorXd& b) const;
  MatrixXd solve(const MatrixXd& b) const;
  void cache_solves(const VectorXd& z, const MatrixXd& f);

  // factor an externally assembled symmetric matrix
  static CorrMatrix from_dense(MatrixXd k, const char* what = "corr matrix");
};

// rows of X live in the unit cube
CorrMatrix build_corr_matrix(const MatrixXd& X, const CorrParams& params);

// correlations of a query point against each row of X (no nugget)
VectorXd corr_cross(const MatrixXd& X, const VectorXd& x,
                    const CorrParams& params);

}  // namespace treegp

#endif
