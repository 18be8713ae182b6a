/*
   Copyright 2026 momrev authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "momrev/poly.hpp"

using momrev::Monomial;
using momrev::Polynomial;

namespace {

// Independent binomial: C(n + d, d) via exact integer recurrence.
unsigned long long binom_count(int nvars, int d) {
  unsigned long long num = 1, den = 1;
  for (int i = 1; i <= d; ++i) {
    num *= static_cast<unsigned long long>(nvars + i);
    den *= static_cast<unsigned long long>(i);
  }
  return num / den;
}

Polynomial random_poly(std::mt19937& rng, int nvars, int maxdeg) {
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_int_distribution<int> nterms(1, 6);
  std::uniform_int_distribution<int> vd(0, maxdeg);
  std::uniform_int_distribution<int> vv(0, nvars - 1);
  std::vector<std::pair<Monomial, double>> terms;
  const int k = nterms(rng);
  for (int i = 0; i < k; ++i) {
    Monomial m;
    int deg = vd(rng);
    for (int j = 0; j < deg; ++j) m = m * Monomial::var(vv(rng));
    terms.push_back({m, coeff(rng)});
  }
  return Polynomial::from_terms(nvars, std::move(terms));
}

Eigen::VectorXd random_point(std::mt19937& rng, int nvars) {
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  Eigen::VectorXd p(nvars);
  for (int i = 0; i < nvars; ++i) p(i) = d(rng);
  return p;
}

}  // namespace

TEST_CASE("eval basics") {
  // x0^2 at (3) -> 9
  auto p = Polynomial::variable(1, 0) * Polynomial::variable(1, 0);
  Eigen::VectorXd pt(1);
  pt << 3.0;
  CHECK(p.eval(pt) == 9.0);

  // zero polynomial evaluates to 0 everywhere
  const Polynomial z = Polynomial::zero(3);
  Eigen::VectorXd anyp(3);
  anyp << 1.0, -7.0, 2.5;
  CHECK(z.eval(anyp) == 0.0);

  // constant product of two rate constants
  const double k1 = 1.4e-3, fe_ex = 4.0;
  const Polynomial c = Polynomial::constant(2, k1 * fe_ex);
  Eigen::VectorXd q(2);
  q << 17.0, -3.0;
  CHECK(c.eval(q) == doctest::Approx(5.6e-3).epsilon(1e-15));
}

TEST_CASE("eval dimension mismatch reports both sizes") {
  const Polynomial p = Polynomial::variable(3, 1);
  Eigen::VectorXd pt(2);
  pt << 1.0, 2.0;
  try {
    p.eval(pt);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("integer evaluation is exact") {
  // (2 x0^3 - 5 x1 + 7)(at integer points) has an exact double value.
  auto p = Polynomial::from_terms(
      2, {{Monomial::var(0, 3), 2.0}, {Monomial::var(1), -5.0}, {Monomial::one(), 7.0}});
  Eigen::VectorXd pt(2);
  pt << 3.0, -4.0;
  CHECK(p.eval(pt) == 2.0 * 27.0 + 20.0 + 7.0);
}

TEST_CASE("monomial_basis examples") {
  auto b21 = momrev::monomial_basis(2, 1);
  REQUIRE(b21.size() == 3);
  CHECK(b21[0] == Monomial::one());
  CHECK(b21[1] == Monomial::var(0));
  CHECK(b21[2] == Monomial::var(1));

  CHECK(momrev::monomial_basis(1, 3).size() == 4);
  CHECK(momrev::monomial_basis(5, 4).size() == binom_count(5, 4));
  CHECK(binom_count(5, 4) == 126);
}

TEST_CASE("monomial_basis ordering, uniqueness, count") {
  std::mt19937 rng(12345);
  std::uniform_int_distribution<int> nv(1, 8), dd(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int nvars = nv(rng), d = dd(rng);
    auto basis = momrev::monomial_basis(nvars, d);
    CHECK(basis.size() == binom_count(nvars, d));
    for (std::size_t i = 1; i < basis.size(); ++i) {
      CHECK(Monomial::grlex_less(basis[i - 1], basis[i]));  // strict order
    }
    // graded index agrees with basis position
    for (std::size_t i = 0; i < basis.size(); ++i) {
      CHECK(momrev::monomial_index(basis[i], nvars) == i);
    }
  }
}

TEST_CASE("degree sentinel for the zero polynomial") {
  CHECK(Polynomial::zero(2).degree() == Polynomial::kZeroDegree);
  CHECK(Polynomial::constant(2, 3.0).degree() == 0);
  CHECK((Polynomial::variable(2, 1) * Polynomial::variable(2, 1)).degree() == 2);
  // cancellation down to zero
  auto p = Polynomial::variable(1, 0);
  CHECK((p - p).degree() == Polynomial::kZeroDegree);
}

TEST_CASE("evaluation is a ring homomorphism") {
  std::mt19937 rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    const int nvars = 1 + (trial % 4);
    const Polynomial p = random_poly(rng, nvars, 3);
    const Polynomial q = random_poly(rng, nvars, 3);
    const Eigen::VectorXd z = random_point(rng, nvars);
    const double sum = (p + q).eval(z);
    const double prod = (p * q).eval(z);
    const double se = p.eval(z) + q.eval(z);
    const double pe = p.eval(z) * q.eval(z);
    CHECK(std::abs(sum - se) <= 1e-12 * (1.0 + std::abs(se)));
    CHECK(std::abs(prod - pe) <= 1e-12 * (1.0 + std::abs(pe)));
  }
}

TEST_CASE("lie derivative of x1 along an uptake field") {
  // v = x1 on (t, x1..x4); field row: k1*Fe_ex - u*x1.
  const double k1 = 1.4e-3, fe_ex = 4.0, k4 = 4.47e-4, k5 = 7.27e-6,
               k6 = 4.47e-4, k8 = 1.14e-5;
  const int nv = 5, nu = 1, na = nv + nu;
  auto X = [&](int i) { return Polynomial::variable(na, i); };
  const Polynomial u = X(5);
  std::vector<Polynomial> f = {
      k1 * fe_ex * Polynomial::constant(na, 1.0) - u * X(1),
      -k4 * X(2) - 4.0 * k5 * X(2) * X(3) + u * X(1),
      k6 * X(2) - 4.0 * k5 * X(2) * X(3),
      k5 * X(2) * X(3) - k8 * X(4)};

  const Polynomial v = Polynomial::variable(nv, 1);
  const Polynomial lv = momrev::lie_derivative(v, f, nu);
  const Polynomial expect = Polynomial::from_terms(
      na, {{Monomial::one(), k1 * fe_ex},
           {Monomial::var(5) * Monomial::var(1), -1.0}});
  CHECK(lv == expect);

  // v = t -> 1 (clock derivative)
  const Polynomial vt = Polynomial::variable(nv, 0);
  CHECK(momrev::lie_derivative(vt, f, nu) == Polynomial::constant(na, 1.0));

  // v = x4^2 -> 2*x4*(k5 x2 x3 - k8 x4), expanded by hand
  const Polynomial v4 = Polynomial::variable(nv, 4) * Polynomial::variable(nv, 4);
  const Polynomial lv4 = momrev::lie_derivative(v4, f, nu);
  const Polynomial expect4 = Polynomial::from_terms(
      na, {{Monomial::var(2) * Monomial::var(3) * Monomial::var(4), 2.0 * k5},
           {Monomial::var(4, 2), -2.0 * k8}});
  CHECK(lv4 == expect4);
}

TEST_CASE("lie derivative rejects fields not affine in u") {
  const int na = 3;  // (t, x1) + u
  auto u = Polynomial::variable(na, 2);
  std::vector<Polynomial> f = {u * u};  // quadratic in the input
  const Polynomial v = Polynomial::variable(2, 1);
  CHECK_THROWS_AS(momrev::lie_derivative(v, f, 1), std::invalid_argument);
}

TEST_CASE("lie derivative matches central finite differences") {
  // Integrate dx/dt = f(t, x, u0) with tiny RK4 steps; compare
  // d/dt v(t, x(t)) against the symbolic Lie derivative.
  std::mt19937 rng(424242);
  std::uniform_real_distribution<double> ud(-0.8, 0.8);
  for (int trial = 0; trial < 25; ++trial) {
    const int nstates = 1 + (trial % 3);
    const int nv = nstates + 1, na = nv + 1;
    std::vector<Polynomial> f;
    for (int k = 0; k < nstates; ++k) {
      // affine in u by construction: a(t,x) + b(t,x)*u
      Polynomial a = random_poly(rng, na, 2);
      // strip any u dependence from a, then add an affine input term
      a = a.substitute(nv, 0.0);
      Polynomial b = random_poly(rng, na, 1).substitute(nv, 0.0);
      f.push_back(a + b * Polynomial::variable(na, nv));
    }
    Polynomial v = random_poly(rng, nv, 3);
    const Polynomial lv = momrev::lie_derivative(v, f, 1);

    const double u0 = ud(rng);
    Eigen::VectorXd x0(nstates);
    for (int k = 0; k < nstates; ++k) x0(k) = ud(rng);
    const double t0 = 0.3;

    auto rhs = [&](double t, const Eigen::VectorXd& x) {
      Eigen::VectorXd point(na);
      point(0) = t;
      point.segment(1, nstates) = x;
      point(na - 1) = u0;
      Eigen::VectorXd dx(nstates);
      for (int k = 0; k < nstates; ++k) dx(k) = f[k].eval(point);
      return dx;
    };
    auto rk4_to = [&](double t1) {
      Eigen::VectorXd x = x0;
      double t = t0;
      const int steps = 16;
      const double h = (t1 - t0) / steps;
      for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd k1 = rhs(t, x);
        Eigen::VectorXd k2 = rhs(t + h / 2, x + h / 2 * k1);
        Eigen::VectorXd k3 = rhs(t + h / 2, x + h / 2 * k2);
        Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
      }
      return x;
    };
    const double h = 1e-4;
    auto veval = [&](double t, const Eigen::VectorXd& x) {
      Eigen::VectorXd pt(nv);
      pt(0) = t;
      pt.segment(1, nstates) = x;
      return v.eval(pt);
    };
    const double fd =
        (veval(t0 + h, rk4_to(t0 + h)) - veval(t0 - h, rk4_to(t0 - h))) /
        (2 * h);
    Eigen::VectorXd full(na);
    full(0) = t0;
    full.segment(1, nstates) = x0;
    full(na - 1) = u0;
    const double sym = lv.eval(full);
    CHECK(std::abs(fd - sym) <= 1e-6 * (1.0 + std::abs(sym)));
  }
}

TEST_CASE("serializer round trip") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int nvars = 1 + (trial % 5);
    const Polynomial p = random_poly(rng, nvars, 4);
    const Polynomial q = Polynomial::parse(p.to_string(), nvars);
    CHECK(p == q);
  }
  CHECK(Polynomial::parse("0", 2) == Polynomial::zero(2));
  CHECK(Polynomial::parse("-x0^2+1e-3*x1", 2) ==
        Polynomial::from_terms(2, {{Monomial::var(0, 2), -1.0},
                                   {Monomial::var(1), 1e-3}}));
  // "t" resolves to variable 0
  CHECK(Polynomial::parse("2*t", 3) ==
        Polynomial::from_terms(3, {{Monomial::var(0), 2.0}}));
  CHECK_THROWS(Polynomial::parse("x7", 2));
  CHECK_THROWS(Polynomial::parse("frog", 2));
}

TEST_CASE("affine composition agrees with evaluation") {
  std::mt19937 rng(555);
  for (int trial = 0; trial < 60; ++trial) {
    const int nx = 1 + (trial % 3), ny = 1 + ((trial + 1) % 3);
    const Polynomial p = random_poly(rng, nx, 3);
    Eigen::MatrixXd A(nx, ny);
    Eigen::VectorXd b(nx);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int i = 0; i < nx; ++i) {
      b(i) = d(rng);
      for (int j = 0; j < ny; ++j) A(i, j) = d(rng);
    }
    const Polynomial c = p.compose_affine(A, b);
    const Eigen::VectorXd y = random_point(rng, ny);
    const double lhs = c.eval(y);
    const double rhs = p.eval(Eigen::VectorXd(A * y + b));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("substitute and remap") {
  // p = t*x1 + x1^2 on (t, x1); fixing t = 4 gives 4*x1 + x1^2
  auto p = Polynomial::from_terms(
      2, {{Monomial::var(0) * Monomial::var(1), 1.0}, {Monomial::var(1, 2), 1.0}});
  auto q = p.substitute(0, 4.0);
  CHECK(q == Polynomial::from_terms(2, {{Monomial::var(1), 4.0},
                                        {Monomial::var(1, 2), 1.0}}));
  // drop the unused t slot
  auto r = q.remap({-1, 0}, 1);
  CHECK(r == Polynomial::from_terms(1, {{Monomial::var(0), 4.0},
                                        {Monomial::var(0, 2), 1.0}}));
  CHECK_THROWS(p.remap({-1, 0}, 1));  // t still used
}
