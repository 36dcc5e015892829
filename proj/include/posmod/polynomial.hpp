#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posmod/errors.hpp"
#include "posmod/rational.hpp"

namespace posmod {

// Ambient variables are an ordered list of names; every polynomial carries
// its own copy and binary operations insist the lists match exactly.
using VarList = std::vector<std::string>;

// Exponent vector; length always equals the ambient variable count.
struct Monomial {
  std::vector<unsigned> exps;

  Monomial() = default;
  explicit Monomial(std::size_t nvars) : exps(nvars, 0u) {}
  explicit Monomial(std::vector<unsigned> e) : exps(std::move(e)) {}

  int degree() const {
    int s = 0;
    for (unsigned e : exps) s += static_cast<int>(e);
    return s;
  }
  bool is_constant() const { return degree() == 0; }

  Monomial operator*(const Monomial& o) const {
    Monomial r = *this;
    for (std::size_t i = 0; i < exps.size(); ++i) r.exps[i] += o.exps[i];
    return r;
  }

  // Componentwise quotient if it exists: returns m with m * o == *this.
  std::optional<Monomial> divide_by(const Monomial& o) const {
    Monomial r = *this;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      if (exps[i] < o.exps[i]) return std::nullopt;
      r.exps[i] -= o.exps[i];
    }
    return r;
  }

  bool operator==(const Monomial& o) const = default;
};

// Graded lexicographic term order: total degree first; ties broken
// lexicographically with the earlier ambient variable more significant.
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return a.exps < b.exps;
  }
};

std::string monomial_to_string(const Monomial& m, const VarList& vars);

namespace detail {
template <class C>
C int_pow(const C& base, unsigned e) {
  C r(1);
  for (unsigned i = 0; i < e; ++i) r = r * base;
  return r;
}
inline bool coeff_is_zero(double c) { return c == 0.0; }
inline bool coeff_is_zero(const Rational& c) { return c.is_zero(); }
std::string coeff_to_string(double c);
std::string coeff_to_string(const Rational& c);
}  // namespace detail

// Sparse multivariate polynomial over coefficient domain C.  Two domains are
// used: Rational (exact; parsing, identity checks, certificate audits) and
// double (solver assembly).  Stored terms always have nonzero coefficients
// and iterate in graded-lex order, which makes every traversal deterministic.
template <class C>
class BasicPolynomial {
public:
  using TermMap = std::map<Monomial, C, GradedLexLess>;

  BasicPolynomial() = default;  // zero polynomial over no variables
  explicit BasicPolynomial(VarList vars) : vars_(std::move(vars)) {}

  static BasicPolynomial constant(VarList vars, C value) {
    BasicPolynomial p(std::move(vars));
    p.add_term(Monomial(p.nvars()), std::move(value));
    return p;
  }

  static BasicPolynomial variable(VarList vars, const std::string& name) {
    BasicPolynomial p(std::move(vars));
    auto it = std::find(p.vars_.begin(), p.vars_.end(), name);
    if (it == p.vars_.end()) throw VarMismatchError("unknown variable: " + name);
    Monomial m(p.nvars());
    m.exps[static_cast<std::size_t>(it - p.vars_.begin())] = 1;
    p.add_term(m, C(1));
    return p;
  }

  static BasicPolynomial term(VarList vars, Monomial m, C coeff) {
    BasicPolynomial p(std::move(vars));
    if (m.exps.size() != p.nvars())
      throw VarMismatchError("monomial arity does not match variable list");
    p.add_term(std::move(m), std::move(coeff));
    return p;
  }

  const VarList& vars() const { return vars_; }
  std::size_t nvars() const { return vars_.size(); }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  // Total degree; the zero polynomial reports -1.
  int degree() const {
    return terms_.empty() ? -1 : terms_.rbegin()->first.degree();
  }

  // Highest power of one variable; -1 again for the zero polynomial.
  int degree_in(const std::string& name) const {
    std::size_t vi = var_index(name);
    if (terms_.empty()) return -1;
    int d = 0;
    for (const auto& [m, c] : terms_)
      d = std::max(d, static_cast<int>(m.exps[vi]));
    return d;
  }

  C coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }

  void add_term(Monomial m, C c) {
    if (detail::coeff_is_zero(c)) return;
    auto [it, fresh] = terms_.try_emplace(std::move(m), c);
    if (!fresh) {
      it->second = it->second + c;
      if (detail::coeff_is_zero(it->second)) terms_.erase(it);
    }
  }

  BasicPolynomial operator+(const BasicPolynomial& o) const {
    check_same_vars(o);
    BasicPolynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
  }

  BasicPolynomial operator-() const {
    BasicPolynomial r(vars_);
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
  }

  BasicPolynomial operator-(const BasicPolynomial& o) const {
    check_same_vars(o);
    BasicPolynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
    return r;
  }

  BasicPolynomial operator*(const BasicPolynomial& o) const {
    check_same_vars(o);
    BasicPolynomial r(vars_);
    for (const auto& [ma, ca] : terms_)
      for (const auto& [mb, cb] : o.terms_) r.add_term(ma * mb, ca * cb);
    return r;
  }

  BasicPolynomial operator*(const C& s) const {
    BasicPolynomial r(vars_);
    if (detail::coeff_is_zero(s)) return r;
    for (const auto& [m, c] : terms_) r.add_term(m, c * s);
    return r;
  }

  bool operator==(const BasicPolynomial& o) const {
    return vars_ == o.vars_ && terms_ == o.terms_;
  }

  C eval(const std::vector<C>& point) const {
    if (point.size() != nvars())
      throw VarMismatchError("evaluation point arity mismatch");
    C acc(0);
    for (const auto& [m, c] : terms_) {
      C t = c;
      for (std::size_t i = 0; i < m.exps.size(); ++i)
        if (m.exps[i]) t = t * detail::int_pow(point[i], m.exps[i]);
      acc = acc + t;
    }
    return acc;
  }

  // Binds some variables to values and drops them from the ambient list;
  // the result lives over the remaining variables in their original order.
  BasicPolynomial substitute(const std::map<std::string, C>& bindings) const {
    std::vector<std::optional<C>> bound(nvars());
    for (const auto& [name, value] : bindings) {
      bound[var_index(name)] = value;
    }
    VarList rest;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < nvars(); ++i) {
      if (!bound[i]) {
        keep.push_back(i);
        rest.push_back(vars_[i]);
      }
    }
    BasicPolynomial r(rest);
    for (const auto& [m, c] : terms_) {
      C t = c;
      for (std::size_t i = 0; i < nvars(); ++i)
        if (bound[i] && m.exps[i]) t = t * detail::int_pow(*bound[i], m.exps[i]);
      Monomial rm(keep.size());
      for (std::size_t k = 0; k < keep.size(); ++k) rm.exps[k] = m.exps[keep[k]];
      r.add_term(std::move(rm), std::move(t));
    }
    return r;
  }

  // Deterministic rendering, leading term first; parses back to the same value.
  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [m, c] = *it;
      std::string cs = detail::coeff_to_string(c);
      bool neg = !cs.empty() && cs[0] == '-';
      std::string mag = neg ? cs.substr(1) : cs;
      if (out.empty())
        out += neg ? "-" : "";
      else
        out += neg ? " - " : " + ";
      std::string ms = monomial_to_string(m, vars_);
      if (ms == "1")
        out += mag;
      else if (mag == "1")
        out += ms;
      else
        out += mag + "*" + ms;
    }
    return out;
  }

private:
  std::size_t var_index(const std::string& name) const {
    auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end()) throw VarMismatchError("unknown variable: " + name);
    return static_cast<std::size_t>(it - vars_.begin());
  }

  void check_same_vars(const BasicPolynomial& o) const {
    if (vars_ != o.vars_)
      throw VarMismatchError("operands have different ambient variables");
  }

  VarList vars_;
  TermMap terms_;
};

using Poly = BasicPolynomial<double>;
using QPoly = BasicPolynomial<Rational>;

// The single sanctioned exact-to-float conversion.
Poly to_double_poly(const QPoly& p);

// Text form: terms joined by +/-, each `[coefficient]['*'] var('^'int)?...`,
// coefficients integers, p/q rationals, or decimals (stored exactly).
// Throws ParseError with 1-based line/column on rejection.
QPoly parse_polynomial(std::string_view text, const VarList& vars);

}  // namespace posmod
