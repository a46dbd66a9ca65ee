#include "treegp/kernel.hpp"

#include <cmath>

namespace treegp {

void CorrParams::validate(int m_x) const {
  if (!(p0 > 0.0 && p0 <= 2.0))
    throw ParamError("correlation power p0 must lie in (0, 2]");
  if (!(g > 0.0)) throw ParamError("nugget g must be positive");
  const int want = family == CorrFamily::Isotropic ? 1 : m_x;
  if (static_cast<int>(d.size()) != want)
    throw ParamError("range parameter count does not match family/dimension");
  for (int i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0)) throw ParamError("range parameter must be positive");
}

double corr_isotropic(const VectorXd& x1, const VectorXd& x2, double d,
                      double p0) {
  if (!(d > 0.0)) throw ParamError("isotropic range d must be positive");
  if (!(p0 > 0.0 && p0 <= 2.0)) throw ParamError("p0 must lie in (0, 2]");
  if (x1.size() != x2.size()) throw ParamError("point dimension mismatch");
  double dist = (x1 - x2).norm();
  return std::exp(-std::pow(dist, p0) / d);
}

double corr_separable(const VectorXd& x1, const VectorXd& x2,
                      const VectorXd& d, double p0) {
  if (x1.size() != x2.size() || x1.size() != d.size())
    throw ParamError("separable correlation: dimension mismatch");
  if (!(p0 > 0.0 && p0 <= 2.0)) throw ParamError("p0 must lie in (0, 2]");
  double s = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw ParamError("range component must be positive");
    s += std::pow(std::abs(x1[i] - x2[i]), p0) / d[i];
  }
  return std::exp(-s);
}

double corr_value(const VectorXd& x1, const VectorXd& x2,
                  const CorrParams& params) {
  if (params.family == CorrFamily::Isotropic)
    return corr_isotropic(x1, x2, params.d[0], params.p0);
  return corr_separable(x1, x2, params.d, params.p0);
}

double corr_with_nugget(const VectorXd& xj, const VectorXd& xk,
                        const CorrParams& params, bool same_index) {
  double k = corr_value(xj, xk, params);
  return same_index ? k + params.g : k;
}

VectorXd CorrMatrix::solve(const VectorXd& b) const {
  VectorXd x = chol.solve(b);
  x += chol.solve((b - K * x).eval());
  return x;
}

MatrixXd CorrMatrix::solve(const MatrixXd& b) const {
  MatrixXd x = chol.solve(b);
  x += chol.solve((b - K * x).eval());
  return x;
}

void CorrMatrix::cache_solves(const VectorXd& z, const MatrixXd& f) {
  Kinv_z = solve(z);
  Kinv_F = solve(f);
}

CorrMatrix CorrMatrix::from_dense(MatrixXd k, const char* what) {
  CorrMatrix m;
  m.K = std::move(k);
  m.chol = SpdFactor::compute(m.K, what);
  m.log_det = m.chol.log_det;
  return m;
}

CorrMatrix build_corr_matrix(const MatrixXd& X, const CorrParams& params) {
  const int n = static_cast<int>(X.rows());
  if (n < 1) throw ParamError("corr matrix needs at least one row");
  params.validate(static_cast<int>(X.cols()));
  MatrixXd k(n, n);
  for (int j = 0; j < n; ++j) {
    k(j, j) = 1.0 + params.g;
    for (int i = j + 1; i < n; ++i) {
      double v = corr_value(X.row(i).transpose(), X.row(j).transpose(), params);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return CorrMatrix::from_dense(std::move(k), "corr matrix");
}

VectorXd corr_cross(const MatrixXd& X, const VectorXd& x,
                    const CorrParams& params) {
  VectorXd k(X.rows());
  for (int j = 0; j < X.rows(); ++j)
    k[j] = corr_value(x, X.row(j).transpose(), params);
  return k;
}

}  // namespace treegp
