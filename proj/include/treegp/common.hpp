#ifndef TREEGP_COMMON_HPP
#define TREEGP_COMMON_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace treegp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/* Error taxonomy; the CLI maps ParamError/IoError to exit 1 and
 * NumericError to exit 2. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ParamError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};
class StructError : public Error {
 public:
  using Error::Error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// counter-based seed split: stream k of a master seed
inline uint64_t derive_seed(uint64_t master, uint64_t counter) {
  return splitmix64(master ^ splitmix64(counter + 1));
}

/*
 * Rng:
 *
 * one stream, owned by exactly one worker.  Distributions are
 * constructed per call so the stream state is just the engine state,
 * which keeps checkpoints exact.
 */
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
  }
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen_);
  }
  // 0..n-1
  int uniform_int(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(gen_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // shape-rate parameterization, density ~ x^{a-1} e^{-bx}
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(gen_);
  }
  // density ~ x^{-(a+1)} e^{-q/x}
  double inv_gamma(double shape, double scale) {
    return 1.0 / gamma(shape, scale);
  }
  double exponential(double lambda) {
    return std::exponential_distribution<double>(lambda)(gen_);
  }
  double chisq(double df) { return gamma(0.5 * df, 0.5); }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }
  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    if (is.fail()) throw IoError("corrupt rng state");
  }

 private:
  std::mt19937_64 gen_;
};

/* Cholesky factor with cached log-determinant.  Throws NumericError on
 * breakdown, reporting the failing pivot. */
struct SpdFactor {
  Eigen::LLT<MatrixXd> llt;
  double log_det = 0.0;

  static SpdFactor compute(const MatrixXd& a, const char* what);

  template <typename Derived>
  auto solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt.solve(b);
  }
};

// smallest leading pivot of an (attempted) Cholesky, for error reports
double failing_pivot(const MatrixXd& a);

// log N_m(x; mean, cov) through a precomputed factor of cov
double mvn_log_density(const VectorXd& x, const VectorXd& mean,
                       const SpdFactor& cov);

}  // namespace treegp

#endif
