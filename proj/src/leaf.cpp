#include "treegp/leaf.hpp"

#include <cmath>

namespace treegp {

FixedHyper FixedHyper::defaults(int m) {
  FixedHyper f;
  f.mu = VectorXd::Zero(m);
  f.B = MatrixXd::Identity(m, m);
  f.V = MatrixXd::Identity(m, m);
  f.rho = m;
  return f;
}

void FixedHyper::validate(int m) const {
  if (mu.size() != m) throw ParamError("hyper mu has wrong dimension");
  if (B.rows() != m || B.cols() != m || V.rows() != m || V.cols() != m)
    throw ParamError("hyper B/V have wrong dimension");
  if (rho < m) throw ParamError("hyper rho must be >= m");
  if (!(alpha_sigma > 0 && q_sigma > 0 && alpha_tau > 0 && q_tau > 0))
    throw ParamError("inverse-gamma hyperparameters must be positive");
  if (!(lambda_g > 0)) throw ParamError("nugget prior rate must be positive");
  if (!(tree_a > 0 && tree_a < 1) || tree_b < 0)
    throw ParamError("tree prior needs 0 < a < 1 and b >= 0");
  SpdFactor::compute(B, "hyper B");
  SpdFactor::compute(V, "hyper V");
}

HyperState HyperState::init(FixedHyper f) {
  HyperState h;
  const int m = static_cast<int>(f.mu.size());
  f.validate(m);
  h.beta0 = f.mu;
  h.B_chol = SpdFactor::compute(f.B, "hyper B");
  h.B_inv = h.B_chol.solve(MatrixXd::Identity(m, m));
  h.fixed = std::move(f);
  h.set_W(h.fixed.V);
  return h;
}

void HyperState::set_W(MatrixXd w) {
  W = std::move(w);
  SpdFactor f = SpdFactor::compute(W, "W");
  W_inv = f.solve(MatrixXd::Identity(W.rows(), W.cols()));
  log_det_W = f.log_det;
}

void LeafState::set_data(MatrixXd x_region, VectorXd z_region,
                         std::vector<int> indices) {
  X = std::move(x_region);
  Z = std::move(z_region);
  data_indices = std::move(indices);
  F.resize(X.rows(), X.cols() + 1);
  F.col(0).setOnes();
  if (X.cols() > 0) F.rightCols(X.cols()) = X;
}

void LeafState::rebuild_cache() {
  const int m = static_cast<int>(F.cols());
  if (n() == 0) {
    corr_matrix = CorrMatrix{};
    FtKiF = MatrixXd::Zero(m, m);
    FtKiZ = VectorXd::Zero(m);
    ZtKiZ = 0.0;
    return;
  }
  corr_matrix = build_corr_matrix(X, corr);
  corr_matrix.cache_solves(Z, F);
  FtKiF = F.transpose() * corr_matrix.Kinv_F;
  FtKiZ = F.transpose() * corr_matrix.Kinv_z;
  ZtKiZ = Z.dot(corr_matrix.Kinv_z);
}

BetaConditional beta_conditional(const LeafState& leaf,
                                 const HyperState& hyper) {
  const double it2 = 1.0 / leaf.tau2;
  MatrixXd prec = leaf.FtKiF + hyper.W_inv * it2;
  SpdFactor f = SpdFactor::compute(prec, "beta conditional precision");
  const int m = static_cast<int>(prec.rows());
  BetaConditional out;
  out.cov_unit = f.solve(MatrixXd::Identity(m, m));
  out.mean = f.solve(leaf.FtKiZ + hyper.W_inv * hyper.beta0 * it2);
  out.log_det_cov_unit = -f.log_det;
  return out;
}

CorrPosterior corr_posterior(const LeafState& leaf, const HyperState& hyper) {
  const double log2pi = std::log(2.0 * M_PI);
  const FixedHyper& fx = hyper.fixed;
  const int n = leaf.n();
  const int m = static_cast<int>(leaf.F.cols());

  CorrPosterior out;
  out.beta = beta_conditional(leaf, hyper);

  const double it2 = 1.0 / leaf.tau2;
  VectorXd rhs = leaf.FtKiZ + hyper.W_inv * hyper.beta0 * it2;
  out.quad = leaf.ZtKiZ + hyper.beta0.dot(hyper.W_inv * hyper.beta0) * it2 -
             out.beta.mean.dot(rhs);

  const double shape = 0.5 * (fx.alpha_sigma + n);
  const double scale = 0.5 * (fx.q_sigma + out.quad);
  if (!(scale > 0.0))
    throw NumericError("nonpositive q_sigma + psi in marginal posterior");

  double lp = 0.5 * (out.beta.log_det_cov_unit - n * log2pi -
                     (n > 0 ? leaf.corr_matrix.log_det : 0.0) -
                     hyper.log_det_W - m * std::log(leaf.tau2));
  lp += 0.5 * fx.alpha_sigma * std::log(0.5 * fx.q_sigma);
  lp += std::lgamma(shape) - std::lgamma(0.5 * fx.alpha_sigma);
  lp -= shape * std::log(scale);
  lp += corr_log_prior(leaf.corr, fx);
  out.log_post = lp;
  return out;
}

double log_marginal_corr(const LeafState& leaf, const HyperState& hyper) {
  return corr_posterior(leaf, hyper).log_post;
}

VectorXd draw_beta(const LeafState& leaf, const HyperState& hyper, Rng& rng) {
  BetaConditional c = beta_conditional(leaf, hyper);
  SpdFactor f = SpdFactor::compute(c.cov_unit, "beta conditional cov");
  VectorXd z(c.mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return c.mean +
         std::sqrt(leaf.sigma2) * (f.llt.matrixL() * z).eval();
}

double draw_tau2(const LeafState& leaf, const HyperState& hyper, Rng& rng) {
  const FixedHyper& fx = hyper.fixed;
  const int m = static_cast<int>(leaf.beta.size());
  VectorXd r = leaf.beta - hyper.beta0;
  double b = r.dot(hyper.W_inv * r) / leaf.sigma2;
  return rng.inv_gamma(0.5 * (fx.alpha_tau + m), 0.5 * (fx.q_tau + b));
}

double draw_sigma2_marginal(const LeafState& leaf, const HyperState& hyper,
                            Rng& rng) {
  const FixedHyper& fx = hyper.fixed;
  CorrPosterior p = corr_posterior(leaf, hyper);
  return rng.inv_gamma(0.5 * (fx.alpha_sigma + leaf.n()),
                       0.5 * (fx.q_sigma + p.quad));
}

MatrixXd draw_W(const std::vector<const LeafState*>& leaves,
                const HyperState& hyper, Rng& rng) {
  const FixedHyper& fx = hyper.fixed;
  const int m = hyper.m();
  MatrixXd v_hat = MatrixXd::Zero(m, m);
  for (const LeafState* leaf : leaves) {
    VectorXd r = leaf->beta - hyper.beta0;
    v_hat += r * r.transpose() / (leaf->sigma2 * leaf->tau2);
  }
  MatrixXd scale = SpdFactor::compute(fx.rho * fx.V + v_hat, "W update scale")
                       .solve(MatrixXd::Identity(m, m));
  double df = fx.rho + static_cast<double>(leaves.size());
  MatrixXd w_inv = wishart_draw(scale, df, rng);
  return SpdFactor::compute(w_inv, "sampled W inverse")
      .solve(MatrixXd::Identity(m, m));
}

Beta0Conditional beta0_conditional(const std::vector<const LeafState*>& leaves,
                                   const HyperState& hyper) {
  const int m = hyper.m();
  double s = 0.0;
  VectorXd sb = VectorXd::Zero(m);
  for (const LeafState* leaf : leaves) {
    double w = 1.0 / (leaf->sigma2 * leaf->tau2);
    s += w;
    sb += w * leaf->beta;
  }
  MatrixXd prec = hyper.B_inv + hyper.W_inv * s;
  SpdFactor f = SpdFactor::compute(prec, "beta0 conditional precision");
  Beta0Conditional out;
  out.cov = f.solve(MatrixXd::Identity(m, m));
  out.mean = f.solve(hyper.B_inv * hyper.fixed.mu + hyper.W_inv * sb);
  return out;
}

VectorXd draw_beta0(const std::vector<const LeafState*>& leaves,
                    const HyperState& hyper, Rng& rng) {
  Beta0Conditional c = beta0_conditional(leaves, hyper);
  SpdFactor f = SpdFactor::compute(c.cov, "beta0 conditional cov");
  VectorXd z(c.mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return c.mean + f.llt.matrixL() * z;
}

double range_log_prior(double d) {
  // 0.5 G(1, 20) + 0.5 G(10, 10), shape-rate
  double la = std::log(20.0) - 20.0 * d;
  double lb = 10.0 * std::log(10.0) - std::lgamma(10.0) + 9.0 * std::log(d) -
              10.0 * d;
  double hi = std::max(la, lb);
  return hi + std::log(0.5 * std::exp(la - hi) + 0.5 * std::exp(lb - hi));
}

double corr_log_prior(const CorrParams& params, const FixedHyper& fixed) {
  double lp = 0.0;
  for (int i = 0; i < params.d.size(); ++i) lp += range_log_prior(params.d[i]);
  lp += std::log(fixed.lambda_g) - fixed.lambda_g * params.g;
  return lp;
}

CorrParams prior_draw_corr(const FixedHyper& fixed, int m_x, CorrFamily family,
                           double p0, Rng& rng) {
  CorrParams p;
  p.family = family;
  p.p0 = p0;
  const int k = family == CorrFamily::Isotropic ? 1 : m_x;
  p.d.resize(k);
  for (int i = 0; i < k; ++i)
    p.d[i] = rng.uniform() < 0.5 ? rng.gamma(1.0, 20.0) : rng.gamma(10.0, 10.0);
  p.g = rng.exponential(fixed.lambda_g);
  return p;
}

double slide_window(double current, Rng& rng) {
  return rng.uniform(0.75 * current, current * 4.0 / 3.0);
}

double corr_mh_log_ratio(const LeafState& leaf, const HyperState& hyper,
                         const CorrParams& proposal) {
  LeafState cand = leaf;
  cand.corr = proposal;
  cand.rebuild_cache();
  double lr = log_marginal_corr(cand, hyper) - log_marginal_corr(leaf, hyper);
  // asymmetric window: q(cur|prop)/q(prop|cur) = cur/prop per parameter
  lr += std::log(leaf.corr.g) - std::log(proposal.g);
  for (int i = 0; i < proposal.d.size(); ++i)
    lr += std::log(leaf.corr.d[i]) - std::log(proposal.d[i]);
  return lr;
}

bool mh_update_corr(LeafState& leaf, const HyperState& hyper, Rng& rng) {
  CorrParams prop = leaf.corr;
  prop.g = slide_window(leaf.corr.g, rng);
  for (int i = 0; i < prop.d.size(); ++i)
    prop.d[i] = slide_window(leaf.corr.d[i], rng);
  if (prop.g < hyper.fixed.nugget_floor) return false;

  double lr;
  LeafState cand = leaf;
  try {
    cand.corr = prop;
    cand.rebuild_cache();
    lr = log_marginal_corr(cand, hyper) - log_marginal_corr(leaf, hyper);
  } catch (const NumericError&) {
    return false;  // proposed parameterization not factorizable
  }
  lr += std::log(leaf.corr.g) - std::log(prop.g);
  for (int i = 0; i < prop.d.size(); ++i)
    lr += std::log(leaf.corr.d[i]) - std::log(prop.d[i]);

  if (std::log(rng.uniform()) < lr) {
    leaf = std::move(cand);
    return true;
  }
  return false;
}

MatrixXd wishart_draw(const MatrixXd& scale, double df, Rng& rng) {
  const int m = static_cast<int>(scale.rows());
  if (df < m) throw ParamError("Wishart degrees of freedom below dimension");
  SpdFactor f = SpdFactor::compute(scale, "Wishart scale");
  MatrixXd a = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = std::sqrt(rng.chisq(df - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  MatrixXd l = f.llt.matrixL() * a;
  return l * l.transpose();
}

double inv_gamma_log_density(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

double inv_wishart_log_density(const MatrixXd& w, const MatrixXd& psi,
                               double df) {
  const int m = static_cast<int>(w.rows());
  SpdFactor wf = SpdFactor::compute(w, "inverse-Wishart argument");
  SpdFactor pf = SpdFactor::compute(psi, "inverse-Wishart scale");
  double log_gamma_m = 0.25 * m * (m - 1) * std::log(M_PI);
  for (int j = 1; j <= m; ++j)
    log_gamma_m += std::lgamma(0.5 * (df + 1.0 - j));
  double tr = MatrixXd(wf.solve(psi)).trace();
  return 0.5 * df * pf.log_det - 0.5 * df * m * std::log(2.0) - log_gamma_m -
         0.5 * (df + m + 1.0) * wf.log_det - 0.5 * tr;
}

}  // namespace treegp
