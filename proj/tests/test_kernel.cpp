#include <cmath>

#include "doctest.h"
#include "treegp/kernel.hpp"

using namespace treegp;

namespace {

MatrixXd random_design(int n, int m_x, Rng& rng) {
  MatrixXd x(n, m_x);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m_x; ++j) x(i, j) = rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("isotropic correlation basics") {
  VectorXd a(2), b(2);
  a << 0.3, 0.7;
  b = a;
  CHECK(corr_isotropic(a, b, 0.5, 2.0) == doctest::Approx(1.0));

  b << 0.3, 1.7;  // unit distance
  CHECK(corr_isotropic(a, b, 1.0, 2.0) == doctest::Approx(std::exp(-1.0)));

  // monotone in d at fixed distance
  double prev = 0.0;
  for (double d : {0.5, 1.0, 5.0, 50.0, 5000.0}) {
    double v = corr_isotropic(a, b, d, 2.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 0.999);

  CHECK_THROWS_AS(corr_isotropic(a, b, -1.0, 2.0), ParamError);
  CHECK_THROWS_AS(corr_isotropic(a, b, 1.0, 2.5), ParamError);
  VectorXd c(3);
  c.setZero();
  CHECK_THROWS_AS(corr_isotropic(a, c, 1.0, 2.0), ParamError);
}

TEST_CASE("separable correlation basics") {
  VectorXd a(2), b(2), d(2);
  a << 0.2, 0.9;
  b = a;
  d << 1.0, 5.0;
  CHECK(corr_separable(a, b, d, 2.0) == doctest::Approx(1.0));

  b << 1.2, 0.9;  // displacement (1, 0): inactive dimension contributes zero
  CHECK(corr_separable(a, b, d, 2.0) == doctest::Approx(std::exp(-1.0)));

  VectorXd dshort(1);
  dshort << 1.0;
  CHECK_THROWS_AS(corr_separable(a, b, dshort, 2.0), ParamError);
  d << 1.0, -0.1;
  CHECK_THROWS_AS(corr_separable(a, b, d, 2.0), ParamError);
}

TEST_CASE("separable with equal ranges matches isotropic at p0 = 2") {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    int m_x = 1 + rng.uniform_int(4);
    VectorXd a(m_x), b(m_x);
    for (int j = 0; j < m_x; ++j) {
      a[j] = rng.uniform();
      b[j] = rng.uniform();
    }
    double dval = 0.1 + rng.uniform();
    VectorXd d = VectorXd::Constant(m_x, dval);
    CHECK(corr_separable(a, b, d, 2.0) ==
          doctest::Approx(corr_isotropic(a, b, dval, 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("correlation is symmetric in its arguments") {
  Rng rng(5);
  CorrParams iso;
  iso.d = VectorXd::Constant(1, 0.37);
  CorrParams sep;
  sep.family = CorrFamily::Separable;
  sep.d = VectorXd::Zero(3);
  sep.d << 0.2, 1.1, 0.6;
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a[j] = rng.uniform();
      b[j] = rng.uniform();
    }
    CHECK(corr_value(a, b, iso) == doctest::Approx(corr_value(b, a, iso)));
    CHECK(corr_value(a, b, sep) == doctest::Approx(corr_value(b, a, sep)));
  }
}

TEST_CASE("nugget lands on the diagonal only") {
  CorrParams p;
  p.d = VectorXd::Constant(1, 0.5);
  p.g = 0.1;
  VectorXd a(2), b(2);
  a << 0.4, 0.4;
  b = a;
  CHECK(corr_with_nugget(a, b, p, true) == doctest::Approx(1.1));
  // replicated design point, different observation index
  CHECK(corr_with_nugget(a, b, p, false) == doctest::Approx(1.0));
  b << 0.9, 0.1;
  CHECK(corr_with_nugget(a, b, p, false) ==
        doctest::Approx(corr_value(a, b, p)));
}

TEST_CASE("build_corr_matrix on a single row") {
  MatrixXd x(1, 2);
  x << 0.5, 0.5;
  CorrParams p;
  p.d = VectorXd::Constant(1, 0.5);
  p.g = 0.07;
  CorrMatrix k = build_corr_matrix(x, p);
  CHECK(k.K(0, 0) == doctest::Approx(1.07));
  CHECK(k.log_det == doctest::Approx(std::log(1.07)));
}

TEST_CASE("build_corr_matrix matches entrywise evaluation") {
  Rng rng(42);
  MatrixXd x = random_design(3, 2, rng);
  CorrParams p;
  p.family = CorrFamily::Separable;
  p.d = VectorXd::Zero(2);
  p.d << 0.4, 0.9;
  p.g = 0.01;
  CorrMatrix k = build_corr_matrix(x, p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(k.K(i, j) ==
            doctest::Approx(corr_with_nugget(x.row(i).transpose(),
                                             x.row(j).transpose(), p, i == j))
                .epsilon(1e-15));
}

TEST_CASE("duplicated rows factor with a modest nugget") {
  MatrixXd x(4, 1);
  x << 0.2, 0.2, 0.7, 0.9;
  CorrParams p;
  p.d = VectorXd::Constant(1, 0.5);
  p.g = 0.05;
  CHECK_NOTHROW(build_corr_matrix(x, p));
}

TEST_CASE("vanishing nugget with duplicate rows reports the pivot") {
  MatrixXd x(2, 1);
  x << 0.3, 0.3;
  CorrParams p;
  p.d = VectorXd::Constant(1, 0.5);
  p.g = 1e-17;  // 1 + g rounds to 1: exactly singular
  try {
    build_corr_matrix(x, p);
    FAIL("expected a NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("pivot") != std::string::npos);
  }
}

TEST_CASE("diagonal is exactly 1 + g and K is symmetric") {
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    int n = 2 + rng.uniform_int(20);
    MatrixXd x = random_design(n, 3, rng);
    CorrParams p;
    p.d = VectorXd::Constant(1, 0.2 + rng.uniform());
    p.g = 0.001 + 0.2 * rng.uniform();
    CorrMatrix k = build_corr_matrix(x, p);
    for (int i = 0; i < n; ++i) {
      CHECK(k.K(i, i) == 1.0 + p.g);
      for (int j = 0; j < n; ++j) CHECK(k.K(i, j) == k.K(j, i));
    }
  }
}

TEST_CASE("solve then multiply round-trips") {
  /* n <= 50, g >= 1e-6; ranges kept where 1e-10 is representable at
   * all: once cond(K) * eps exceeds the bound, the final multiply's own
   * rounding breaks the round trip for any solver. */
  struct Instance {
    int n;
    double d, g;
  };
  Rng rng(9);
  for (Instance c : {Instance{5, 0.5, 1e-6}, Instance{20, 0.3, 1e-4},
                     Instance{50, 0.02, 1e-6}, Instance{50, 1.0, 0.01}}) {
    MatrixXd x = random_design(c.n, 2, rng);
    CorrParams p;
    p.d = VectorXd::Constant(1, c.d);
    p.g = c.g;
    CorrMatrix k = build_corr_matrix(x, p);
    VectorXd v(c.n);
    for (int i = 0; i < c.n; ++i) v[i] = rng.normal();
    VectorXd back = k.K * k.solve(v);
    CHECK((back - v).norm() / v.norm() < 1e-10);
  }
}

TEST_CASE("log determinant matches an LU reference for small n") {
  Rng rng(13);
  for (int n = 1; n <= 6; ++n) {
    MatrixXd x = random_design(n, 2, rng);
    CorrParams p;
    p.d = VectorXd::Constant(1, 0.5);
    p.g = 0.05;
    CorrMatrix k = build_corr_matrix(x, p);
    double ref = std::log(k.K.fullPivLu().determinant());
    CHECK(k.log_det == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("cached solves match direct solves") {
  Rng rng(21);
  MatrixXd x = random_design(8, 2, rng);
  CorrParams p;
  p.d = VectorXd::Constant(1, 0.4);
  p.g = 0.02;
  CorrMatrix k = build_corr_matrix(x, p);
  VectorXd z(8);
  for (int i = 0; i < 8; ++i) z[i] = rng.normal();
  MatrixXd f(8, 3);
  f.col(0).setOnes();
  f.rightCols(2) = x;
  k.cache_solves(z, f);
  CHECK((k.K * k.Kinv_z - z).norm() < 1e-9);
  CHECK((k.K * k.Kinv_F - f).norm() < 1e-9);
}
