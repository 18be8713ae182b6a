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

#include "momrev/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace momrev {

namespace {

// x^e by repeated multiplication; exact for integer x and small e.
double ipow(double x, unsigned e) {
  double r = 1.0;
  double base = x;
  while (e) {
    if (e & 1u) r *= base;
    base *= base;
    e >>= 1u;
  }
  return r;
}

std::string format_coeff(double c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", c);
  return buf;
}

}  // namespace

Monomial Monomial::var(int index, unsigned exponent) {
  Monomial m;
  if (index < 0) throw std::invalid_argument("Monomial::var: negative index");
  if (exponent > 0) m.exps_.push_back({index, exponent});
  return m;
}

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (const auto& [v, e] : exps_) d += e;
  return d;
}

unsigned Monomial::exponent(int var) const {
  for (const auto& [v, e] : exps_)
    if (v == var) return e;
  return 0;
}

Monomial Monomial::operator*(const Monomial& rhs) const {
  Monomial out;
  out.exps_.reserve(exps_.size() + rhs.exps_.size());
  auto a = exps_.begin();
  auto b = rhs.exps_.begin();
  while (a != exps_.end() || b != rhs.exps_.end()) {
    if (b == rhs.exps_.end() || (a != exps_.end() && a->first < b->first)) {
      out.exps_.push_back(*a++);
    } else if (a == exps_.end() || b->first < a->first) {
      out.exps_.push_back(*b++);
    } else {
      out.exps_.push_back({a->first, a->second + b->second});
      ++a;
      ++b;
    }
  }
  return out;
}

bool Monomial::grlex_less(const Monomial& a, const Monomial& b) {
  const unsigned da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Same degree: compare exponent tuples lexicographically by variable
  // index; the greater tuple sorts first.
  auto ia = a.exps_.begin();
  auto ib = b.exps_.begin();
  while (ia != a.exps_.end() && ib != b.exps_.end()) {
    if (ia->first != ib->first) {
      // The monomial holding the smaller variable index has a positive
      // exponent where the other has zero, hence the greater tuple.
      return ia->first < ib->first;
    }
    if (ia->second != ib->second) return ia->second > ib->second;
    ++ia;
    ++ib;
  }
  return ia != a.exps_.end();
}

double Monomial::eval(std::span<const double> point) const {
  double r = 1.0;
  for (const auto& [v, e] : exps_) {
    if (v >= static_cast<int>(point.size()))
      throw std::invalid_argument("Monomial::eval: point too short");
    r *= ipow(point[v], e);
  }
  return r;
}

std::string Monomial::to_string() const {
  if (exps_.empty()) return "1";
  std::string s;
  bool first = true;
  for (const auto& [v, e] : exps_) {
    if (!first) s += "*";
    first = false;
    s += "x" + std::to_string(v);
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s;
}

Polynomial::Polynomial(int nvars, double constant) : nvars_(nvars) {
  if (constant != 0.0) terms_.emplace(Monomial::one(), constant);
}

Polynomial Polynomial::variable(int nvars, int index) {
  if (index < 0 || index >= nvars)
    throw std::invalid_argument("Polynomial::variable: index " +
                                std::to_string(index) + " outside 0.." +
                                std::to_string(nvars - 1));
  Polynomial p(nvars);
  p.terms_.emplace(Monomial::var(index), 1.0);
  return p;
}

Polynomial Polynomial::from_terms(
    int nvars, std::vector<std::pair<Monomial, double>> terms) {
  Polynomial p(nvars);
  for (auto& [m, c] : terms) {
    if (m.max_var() >= nvars)
      throw std::invalid_argument("Polynomial::from_terms: variable x" +
                                  std::to_string(m.max_var()) +
                                  " outside dimension " + std::to_string(nvars));
    p.add_term(m, c);
  }
  return p;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
  } else {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  if (terms_.empty()) return kZeroDegree;
  // grlex order puts the highest total degree last
  return static_cast<int>(terms_.rbegin()->first.degree());
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::eval(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != nvars_)
    throw std::invalid_argument(
        "Polynomial::eval: point dimension " + std::to_string(point.size()) +
        " does not match nvars " + std::to_string(nvars_));
  double r = 0.0;
  for (const auto& [m, c] : terms_) r += c * m.eval(point);
  return r;
}

double Polynomial::eval(const Eigen::VectorXd& point) const {
  return eval(std::span<const double>(point.data(),
                                      static_cast<std::size_t>(point.size())));
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
  Polynomial out = *this;
  out += rhs;
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  if (nvars_ != rhs.nvars_)
    throw std::invalid_argument("Polynomial::+: nvars " +
                                std::to_string(nvars_) + " vs " +
                                std::to_string(rhs.nvars_));
  for (const auto& [m, c] : rhs.terms_) add_term(m, c);
  return *this;
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const {
  Polynomial out = *this;
  out -= rhs;
  return out;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
  if (nvars_ != rhs.nvars_)
    throw std::invalid_argument("Polynomial::-: nvars " +
                                std::to_string(nvars_) + " vs " +
                                std::to_string(rhs.nvars_));
  for (const auto& [m, c] : rhs.terms_) add_term(m, -c);
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  if (nvars_ != rhs.nvars_)
    throw std::invalid_argument("Polynomial::*: nvars " +
                                std::to_string(nvars_) + " vs " +
                                std::to_string(rhs.nvars_));
  Polynomial out(nvars_);
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : rhs.terms_) out.add_term(ma * mb, ca * cb);
  return out;
}

Polynomial Polynomial::operator-() const {
  Polynomial out(nvars_);
  for (const auto& [m, c] : terms_) out.terms_.emplace(m, -c);
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(nvars_);
  if (s == 0.0) return out;
  for (const auto& [m, c] : terms_) out.terms_.emplace(m, c * s);
  return out;
}

bool Polynomial::operator==(const Polynomial& rhs) const {
  return nvars_ == rhs.nvars_ && terms_ == rhs.terms_;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(nvars_);
  for (const auto& [m, c] : terms_) {
    const unsigned e = m.exponent(var);
    if (e == 0) continue;
    Monomial d;
    for (const auto& [v, ve] : m.factors()) {
      if (v == var) {
        if (ve > 1) d = d * Monomial::var(v, ve - 1);
      } else {
        d = d * Monomial::var(v, ve);
      }
    }
    out.add_term(d, c * static_cast<double>(e));
  }
  return out;
}

int Polynomial::degree_in(int first, int count) const {
  int deg = kZeroDegree;
  for (const auto& [m, c] : terms_) {
    int d = 0;
    for (const auto& [v, e] : m.factors())
      if (v >= first && v < first + count) d += static_cast<int>(e);
    deg = std::max(deg, d);
  }
  return deg;
}

bool Polynomial::affine_in(int first, int count) const {
  if (terms_.empty()) return true;
  return degree_in(first, count) <= 1;
}

Polynomial Polynomial::extended(int new_nvars) const {
  if (new_nvars < nvars_)
    throw std::invalid_argument("Polynomial::extended: shrinking dimension");
  Polynomial out(new_nvars);
  out.terms_ = terms_;
  return out;
}

Polynomial Polynomial::compose_affine(const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& b) const {
  if (A.rows() != nvars_ || b.size() != nvars_)
    throw std::invalid_argument("Polynomial::compose_affine: map has " +
                                std::to_string(A.rows()) + " rows, expected " +
                                std::to_string(nvars_));
  const int ny = static_cast<int>(A.cols());
  // Affine image of each variable, with cached powers.
  std::vector<Polynomial> image(nvars_, Polynomial(ny));
  std::vector<std::vector<Polynomial>> powers(nvars_);
  for (int i = 0; i < nvars_; ++i) {
    Polynomial ai(ny, b(i));
    for (int k = 0; k < ny; ++k) {
      if (A(i, k) != 0.0) ai += Polynomial::variable(ny, k) * A(i, k);
    }
    image[i] = std::move(ai);
    powers[i].push_back(Polynomial::constant(ny, 1.0));
  }
  auto power = [&](int var, unsigned e) -> const Polynomial& {
    auto& cache = powers[var];
    while (cache.size() <= e) cache.push_back(cache.back() * image[var]);
    return cache[e];
  };
  Polynomial out(ny);
  for (const auto& [m, c] : terms_) {
    Polynomial term = Polynomial::constant(ny, c);
    for (const auto& [v, e] : m.factors()) term = term * power(v, e);
    out += term;
  }
  return out;
}

Polynomial Polynomial::substitute(int var, double value) const {
  Polynomial out(nvars_);
  for (const auto& [m, c] : terms_) {
    const unsigned e = m.exponent(var);
    Monomial rest;
    for (const auto& [v, ve] : m.factors())
      if (v != var) rest = rest * Monomial::var(v, ve);
    out.add_term(rest, c * ipow(value, e));
  }
  return out;
}

Polynomial Polynomial::remap(const std::vector<int>& map, int new_nvars) const {
  Polynomial out(new_nvars);
  for (const auto& [m, c] : terms_) {
    Monomial nm;
    for (const auto& [v, e] : m.factors()) {
      if (v >= static_cast<int>(map.size()) || map[v] < 0)
        throw std::invalid_argument("Polynomial::remap: variable x" +
                                    std::to_string(v) + " has no image");
      if (map[v] >= new_nvars)
        throw std::invalid_argument("Polynomial::remap: image outside range");
      nm = nm * Monomial::var(map[v], e);
    }
    out.add_term(nm, c);
  }
  return out;
}

std::string Polynomial::to_string() const {
  return to_string([](int v) { return "x" + std::to_string(v); });
}

std::string Polynomial::to_string(
    const std::function<std::string(int)>& name) const {
  if (terms_.empty()) return "0";
  std::string s;
  // Descending grlex: leading term first.
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    std::string body;
    for (const auto& [v, e] : m.factors()) {
      if (!body.empty()) body += "*";
      body += name(v);
      if (e > 1) body += "^" + std::to_string(e);
    }
    std::string term;
    if (body.empty()) {
      term = format_coeff(c);
    } else if (c == 1.0) {
      term = body;
    } else if (c == -1.0) {
      term = "-" + body;
    } else {
      term = format_coeff(c) + "*" + body;
    }
    if (!s.empty() && term[0] != '-') s += "+";
    s += term;
  }
  return s;
}

namespace {

// Splits at top-level +/- (a sign directly after e/E belongs to a float
// exponent, e.g. 1e-3).
std::vector<std::string> split_terms(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if ((ch == '+' || ch == '-') && !cur.empty() &&
        (std::toupper(static_cast<unsigned char>(cur.back())) != 'E' ||
         cur.size() < 2 ||
         !std::isdigit(static_cast<unsigned char>(cur[cur.size() - 2])))) {
      out.push_back(cur);
      cur.clear();
      if (ch == '-') cur = "-";
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(ch))) cur += ch;
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

Polynomial Polynomial::parse(const std::string& text, int nvars) {
  return parse(text, nvars, [](const std::string& s) -> int {
    if (s == "t") return 0;
    return -1;
  });
}

Polynomial Polynomial::parse(
    const std::string& text, int nvars,
    const std::function<int(const std::string&)>& resolve) {
  auto resolve_name = [&](const std::string& name) -> int {
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
      if (digits) return std::stoi(name.substr(1));
    }
    if (resolve) {
      const int v = resolve(name);
      if (v >= 0) return v;
    }
    throw std::invalid_argument("Polynomial::parse: unknown variable '" +
                                name + "'");
  };

  Polynomial out(nvars);
  for (const std::string& raw : split_terms(text)) {
    if (raw.empty() || raw == "-") continue;
    double coeff = 1.0;
    std::string body = raw;
    if (body[0] == '-') {
      coeff = -1.0;
      body = body.substr(1);
    }
    Monomial mono;
    std::size_t pos = 0;
    bool any_factor = false;
    while (pos < body.size()) {
      std::size_t next = body.find('*', pos);
      std::string factor = body.substr(
          pos, next == std::string::npos ? std::string::npos : next - pos);
      pos = next == std::string::npos ? body.size() : next + 1;
      if (factor.empty())
        throw std::invalid_argument("Polynomial::parse: empty factor in '" +
                                    raw + "'");
      any_factor = true;
      if (std::isdigit(static_cast<unsigned char>(factor[0])) ||
          factor[0] == '.') {
        std::size_t used = 0;
        const double v = std::stod(factor, &used);
        if (used != factor.size())
          throw std::invalid_argument("Polynomial::parse: bad number '" +
                                      factor + "'");
        coeff *= v;
      } else {
        unsigned exp = 1;
        const std::size_t caret = factor.find('^');
        std::string name = factor;
        if (caret != std::string::npos) {
          name = factor.substr(0, caret);
          const std::string es = factor.substr(caret + 1);
          if (es.empty())
            throw std::invalid_argument("Polynomial::parse: bad exponent in '" +
                                        factor + "'");
          exp = static_cast<unsigned>(std::stoul(es));
        }
        const int var = resolve_name(name);
        if (var < 0 || var >= nvars)
          throw std::invalid_argument(
              "Polynomial::parse: variable '" + name + "' (index " +
              std::to_string(var) + ") outside dimension " +
              std::to_string(nvars));
        mono = mono * Monomial::var(var, exp);
      }
    }
    if (!any_factor)
      throw std::invalid_argument("Polynomial::parse: empty term in '" + text +
                                  "'");
    out.add_term(mono, coeff);
  }
  return out;
}

std::size_t monomial_count(int nvars, int d) {
  if (d < 0) return 0;
  // C(nvars + d, d)
  std::size_t r = 1;
  for (int i = 1; i <= nvars; ++i) {
    r = r * static_cast<std::size_t>(d + i) / static_cast<std::size_t>(i);
  }
  return r;
}

namespace {

void enumerate_degree(int nvars, int var, int remaining, Monomial prefix,
                      std::vector<Monomial>& out) {
  if (var == nvars - 1) {
    out.push_back(remaining > 0
                      ? prefix * Monomial::var(var, static_cast<unsigned>(remaining))
                      : prefix);
    return;
  }
  // Greater exponent tuples first.
  for (int e = remaining; e >= 0; --e) {
    enumerate_degree(nvars, var + 1, remaining - e,
                     e > 0 ? prefix * Monomial::var(var, static_cast<unsigned>(e))
                           : prefix,
                     out);
  }
}

}  // namespace

std::vector<Monomial> monomial_basis(int nvars, int d) {
  if (nvars < 0 || d < 0)
    throw std::invalid_argument("monomial_basis: negative argument");
  std::vector<Monomial> out;
  out.reserve(monomial_count(nvars, d));
  if (nvars == 0) {
    out.push_back(Monomial::one());
    return out;
  }
  for (int deg = 0; deg <= d; ++deg)
    enumerate_degree(nvars, 0, deg, Monomial::one(), out);
  return out;
}

std::size_t monomial_index(const Monomial& m, int nvars) {
  const int d = static_cast<int>(m.degree());
  if (m.max_var() >= nvars)
    throw std::invalid_argument("monomial_index: variable outside dimension");
  std::size_t idx = monomial_count(nvars, d - 1);  // all lower degrees
  // Rank within the degree-d block: exponent tuples in decreasing
  // lexicographic order by variable index.
  int remaining = d;
  for (int v = 0; v < nvars - 1 && remaining > 0; ++v) {
    const int e = static_cast<int>(m.exponent(v));
    // Tuples with a larger exponent at position v come first.
    for (int a = remaining; a > e; --a)
      idx += monomial_count(nvars - v - 2, remaining - a);
    remaining -= e;
  }
  return idx;
}

Polynomial total_derivative(const Polynomial& v,
                            const std::vector<Polynomial>& f, int inputs) {
  const int nv = v.nvars();
  if (static_cast<int>(f.size()) != nv)
    throw std::invalid_argument("total_derivative: field has " +
                                std::to_string(f.size()) + " rows, expected " +
                                std::to_string(nv));
  const int nall = nv + inputs;
  Polynomial out(nall);
  for (int k = 0; k < nv; ++k) {
    if (f[k].nvars() != nall)
      throw std::invalid_argument("total_derivative: field row " +
                                  std::to_string(k) + " has nvars " +
                                  std::to_string(f[k].nvars()) + ", expected " +
                                  std::to_string(nall));
    if (!f[k].affine_in(nv, inputs))
      throw std::invalid_argument("total_derivative: field row " +
                                  std::to_string(k) + " is not affine in the " +
                                  std::to_string(inputs) + " input(s)");
    const Polynomial dv = v.derivative(k);
    if (!dv.is_zero()) out += dv.extended(nall) * f[k];
  }
  return out;
}

Polynomial lie_derivative(const Polynomial& v,
                          const std::vector<Polynomial>& f, int inputs) {
  const int nv = v.nvars();
  if (static_cast<int>(f.size()) != nv - 1)
    throw std::invalid_argument("lie_derivative: field has " +
                                std::to_string(f.size()) +
                                " rows, expected " + std::to_string(nv - 1) +
                                " (states only; the clock is implicit)");
  std::vector<Polynomial> full;
  full.reserve(f.size() + 1);
  full.push_back(Polynomial::constant(nv + inputs, 1.0));  // dt/dt = 1
  for (const auto& fk : f) full.push_back(fk);
  return total_derivative(v, full, inputs);
}

}  // namespace momrev
