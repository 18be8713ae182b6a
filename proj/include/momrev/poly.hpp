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

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace momrev {

/// A power product of variables, stored as sorted (variable, exponent)
/// pairs with all exponents strictly positive. Variable 0 is the time
/// variable t by convention whenever the ambient space is time-extended.
class Monomial {
 public:
  Monomial() = default;

  static Monomial one() { return Monomial{}; }
  static Monomial var(int index, unsigned exponent = 1);

  unsigned degree() const;
  unsigned exponent(int var) const;
  bool is_one() const { return exps_.empty(); }
  int max_var() const { return exps_.empty() ? -1 : exps_.back().first; }

  Monomial operator*(const Monomial& rhs) const;
  bool operator==(const Monomial& rhs) const { return exps_ == rhs.exps_; }
  bool operator!=(const Monomial& rhs) const { return !(*this == rhs); }

  /// Graded lexicographic order: lower total degree first; within a
  /// degree, the monomial with the lexicographically greater exponent
  /// tuple (reading variables in increasing index) comes first, so for
  /// two variables the degree-2 run is x0^2, x0*x1, x1^2.
  static bool grlex_less(const Monomial& a, const Monomial& b);

  const std::vector<std::pair<int, unsigned>>& factors() const { return exps_; }

  double eval(std::span<const double> point) const;
  std::string to_string() const;

 private:
  std::vector<std::pair<int, unsigned>> exps_;
};

struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    return Monomial::grlex_less(a, b);
  }
};

/// Sparse multivariate polynomial with real coefficients over variables
/// x0..x{nvars-1}. Terms with zero coefficient are never stored.
/// Immutable in spirit: every operation returns a new polynomial.
class Polynomial {
 public:
  /// degree() of the zero polynomial (stands in for -infinity).
  static constexpr int kZeroDegree = std::numeric_limits<int>::min();

  Polynomial() : nvars_(0) {}
  explicit Polynomial(int nvars) : nvars_(nvars) {}
  Polynomial(int nvars, double constant);

  static Polynomial zero(int nvars) { return Polynomial(nvars); }
  static Polynomial constant(int nvars, double c) { return Polynomial(nvars, c); }
  static Polynomial variable(int nvars, int index);
  static Polynomial from_terms(int nvars,
                               std::vector<std::pair<Monomial, double>> terms);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  std::size_t term_count() const { return terms_.size(); }
  const std::map<Monomial, double, GrlexLess>& terms() const { return terms_; }
  double coefficient(const Monomial& m) const;

  double eval(std::span<const double> point) const;
  double eval(const Eigen::VectorXd& point) const;

  Polynomial operator+(const Polynomial& rhs) const;
  Polynomial operator-(const Polynomial& rhs) const;
  Polynomial operator*(const Polynomial& rhs) const;
  Polynomial operator-() const;
  Polynomial operator*(double s) const;

  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);

  bool operator==(const Polynomial& rhs) const;

  /// Partial derivative with respect to one variable.
  Polynomial derivative(int var) const;

  /// Total degree in the variable block [first, first+count).
  int degree_in(int first, int count) const;

  /// True when every term has degree at most 1 in the block
  /// [first, first+count) of variables (e.g. affine in the inputs).
  bool affine_in(int first, int count) const;

  /// Re-embed into a space with more variables (indices unchanged).
  Polynomial extended(int new_nvars) const;

  /// Substitute x_i = sum_k A(i,k) y_k + b(i) for every variable; the
  /// result lives on y with A.cols() variables. A must have nvars rows.
  Polynomial compose_affine(const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& b) const;

  /// Fix one variable to a value; the variable remains in the ambient
  /// space but no longer occurs.
  Polynomial substitute(int var, double value) const;

  /// Map variable indices through `map` (old index -> new index) into a
  /// space of `new_nvars` variables. Throws if a used variable has no
  /// image. Entries may be -1 for unused variables.
  Polynomial remap(const std::vector<int>& map, int new_nvars) const;

  /// Compact textual form, e.g. "2*x0^2*x1-0.5*x2+3". Terms in
  /// descending graded-lex order; round-trips through parse().
  std::string to_string() const;
  /// Like to_string() but rendering variables through `name`.
  std::string to_string(const std::function<std::string(int)>& name) const;

  /// Parse the textual form. Accepts "xK" names plus optional aliases;
  /// by default "t" maps to x0. See parse() overload for custom names.
  static Polynomial parse(const std::string& text, int nvars);
  static Polynomial parse(const std::string& text, int nvars,
                          const std::function<int(const std::string&)>& resolve);

 private:
  void add_term(const Monomial& m, double c);

  int nvars_;
  std::map<Monomial, double, GrlexLess> terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// All monomials in `nvars` variables of total degree <= d, in graded
/// lexicographic order. Length is C(nvars + d, d).
std::vector<Monomial> monomial_basis(int nvars, int d);

/// C(n + d, d) as a size; the length of monomial_basis(n, d).
std::size_t monomial_count(int nvars, int d);

/// Index of a monomial within monomial_basis(nvars, large-enough-d).
/// The graded ordering makes this independent of the basis truncation.
std::size_t monomial_index(const Monomial& m, int nvars);

/// d/dt v(t, x(t)) along dx/dt = f for v defined on (t, x1..xn) with t
/// at index 0: returns dv/dt + sum_k dv/dx_k * f_k. Each f_k may depend
/// on (t, x, u) and must be affine in the trailing input block; the
/// result lives on (t, x, u). `inputs` is the number of trailing input
/// variables in the f entries.
Polynomial lie_derivative(const Polynomial& v,
                          const std::vector<Polynomial>& f, int inputs);

/// Same contract, but for a fully explicit vector field: f has one entry
/// per variable of v (including the clock row, if any).
Polynomial total_derivative(const Polynomial& v,
                            const std::vector<Polynomial>& f, int inputs);

}  // namespace momrev
