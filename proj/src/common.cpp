#include "treegp/common.hpp"

#include <cmath>

namespace treegp {

SpdFactor SpdFactor::compute(const MatrixXd& a, const char* what) {
  SpdFactor f;
  f.llt.compute(a);
  if (f.llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << what << ": matrix not positive definite (smallest pivot "
       << failing_pivot(a) << ")";
    throw NumericError(os.str());
  }
  const auto& l = f.llt.matrixLLT();
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) s += std::log(l(i, i));
  f.log_det = 2.0 * s;
  return f;
}

double failing_pivot(const MatrixXd& a) {
  // plain right-looking Cholesky, stopping at the first nonpositive pivot
  const int n = static_cast<int>(a.rows());
  MatrixXd w = a;
  double smallest = w.size() > 0 ? w(0, 0) : 0.0;
  for (int k = 0; k < n; ++k) {
    double piv = w(k, k);
    if (piv < smallest) smallest = piv;
    if (piv <= 0.0) return piv;
    double r = std::sqrt(piv);
    w.col(k).tail(n - k - 1) /= r;
    for (int j = k + 1; j < n; ++j)
      w.col(j).tail(n - j) -= w(j, k) * w.col(k).tail(n - j);
  }
  return smallest;
}

double mvn_log_density(const VectorXd& x, const VectorXd& mean,
                       const SpdFactor& cov) {
  const double log2pi = std::log(2.0 * M_PI);
  VectorXd r = x - mean;
  double quad = r.dot(cov.solve(r));
  return -0.5 * (x.size() * log2pi + cov.log_det + quad);
}

}  // namespace treegp
