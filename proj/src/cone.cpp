#include "posmod/cone.hpp"

#include <algorithm>
#include <functional>
#include <utility>

#include "posmod/errors.hpp"

namespace posmod {

std::string to_string(ConeMode mode) {
  return mode == ConeMode::QM ? "QM" : "PO";
}

namespace {

constexpr int kMaxPreorderingGenerators = 12;

void check_generator_vars(const ConeDescription& cone) {
  for (const auto& g : cone.generators) {
    if (g.vars() != cone.vars) {
      throw VarMismatchError(
          "generator variable list does not match the cone's variables");
    }
  }
}

}  // namespace

std::vector<ProductEntry> product_set(const ConeDescription& cone) {
  check_generator_vars(cone);
  const int s = static_cast<int>(cone.generators.size());
  const QPoly one = QPoly::constant(cone.vars, Rational(1));

  std::vector<ProductEntry> out;
  if (cone.mode == ConeMode::QM) {
    out.push_back({one, "1"});
    for (int i = 0; i < s; ++i)
      out.push_back({cone.generators[i], "g" + std::to_string(i + 1)});
    return out;
  }

  if (s > kMaxPreorderingGenerators) {
    throw CapacityError("preordering with " + std::to_string(s) +
                        " generators needs 2^" + std::to_string(s) +
                        " product blocks; the limit is 2^" +
                        std::to_string(kMaxPreorderingGenerators));
  }
  const std::size_t count = std::size_t{1} << s;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    QPoly p = one;
    std::string label;
    for (int i = 0; i < s; ++i) {
      if (k >> i & 1u) {
        p = p * cone.generators[i];
        if (!label.empty()) label += "*";
        label += "g" + std::to_string(i + 1);
      }
    }
    if (label.empty()) label = "1";
    out.push_back({std::move(p), std::move(label)});
  }
  return out;
}

std::vector<Monomial> monomial_basis(int nvars, int d) {
  if (nvars < 0 || d < 0)
    throw Error("monomial_basis: arguments must be nonnegative");
  std::vector<Monomial> out;
  Monomial cur;
  cur.exps.assign(static_cast<std::size_t>(nvars), 0u);
  std::function<void(int, int)> fill = [&](int var, int remaining) {
    if (var == nvars) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      cur.exps[static_cast<std::size_t>(var)] = static_cast<unsigned>(e);
      fill(var + 1, remaining - e);
    }
    cur.exps[static_cast<std::size_t>(var)] = 0u;
  };
  fill(0, d);
  std::sort(out.begin(), out.end(), GradedLexLess{});
  return out;
}

SemialgebraicPredicate::SemialgebraicPredicate(const ConeDescription& cone)
    : nvars_(cone.nvars()) {
  check_generator_vars(cone);
  generators_.reserve(cone.generators.size());
  for (const auto& g : cone.generators) generators_.push_back(to_double_poly(g));
}

bool SemialgebraicPredicate::contains(const std::vector<double>& point,
                                      double tol) const {
  if (static_cast<int>(point.size()) != nvars_)
    throw VarMismatchError("point dimension does not match the cone");
  for (const auto& g : generators_)
    if (g.eval(point) < -tol) return false;
  return true;
}

namespace {

ConeAssembly assemble(const ConeDescription& cone, const QPoly& target, int d,
                      bool include_constant_row) {
  if (d < 0) throw Error("truncation level must be nonnegative");
  if (target.vars() != cone.vars)
    throw VarMismatchError(
        "target variable list does not match the cone's variables");

  auto prods = product_set(cone);
  int maxdeg = 0;
  for (const auto& p : prods) maxdeg = std::max(maxdeg, p.poly.degree());

  ConeAssembly out;
  out.d = d;
  out.degree_bound = 2 * d + maxdeg;
  if (target.degree() > out.degree_bound) {
    int required = (target.degree() - maxdeg + 1) / 2;
    throw DegreeError("target degree " + std::to_string(target.degree()) +
                          " exceeds the degree-" + std::to_string(d) +
                          " truncation (matchable up to " +
                          std::to_string(out.degree_bound) + ")",
                      std::max(required, 0));
  }

  out.basis = monomial_basis(cone.nvars(), d);
  const int nb = static_cast<int>(out.basis.size());
  for (auto& p : prods) {
    out.sdp.add_block(p.label, nb);
    out.product_labels.push_back(p.label);
    out.products.push_back(p.poly);
  }

  const auto monos = monomial_basis(cone.nvars(), out.degree_bound);
  std::map<Monomial, int, GradedLexLess> row_of;
  for (std::size_t i = 0; i < monos.size(); ++i)
    row_of.emplace(monos[i], static_cast<int>(i));

  const std::size_t nblocks = prods.size();
  std::vector<std::vector<SparseSym>> acc(
      monos.size(), std::vector<SparseSym>(nblocks));
  for (std::size_t b = 0; b < nblocks; ++b) {
    for (int i = 0; i < nb; ++i) {
      for (int j = i; j < nb; ++j) {
        const Monomial base = out.basis[static_cast<std::size_t>(i)] *
                              out.basis[static_cast<std::size_t>(j)];
        for (const auto& [mono, c] : prods[b].poly.terms()) {
          acc[static_cast<std::size_t>(row_of.at(base * mono))][b].add(
              i, j, to_double(c));
        }
      }
    }
  }

  for (std::size_t ri = 0; ri < monos.size(); ++ri) {
    const Monomial& m = monos[ri];
    const Rational c = target.coeff(m);
    if (m.is_constant()) {
      out.constant_coeff = c;
      if (!include_constant_row) {
        // Constant row becomes the objective: its optimum, subtracted from
        // the target's constant coefficient, is the highest shift still
        // inside the truncation.
        out.sdp.objective = std::move(acc[ri]);
        for (auto& blk : out.sdp.objective) blk.canonicalize();
        continue;
      }
      out.has_constant_row = true;
    }
    bool zero_row = true;
    for (auto& blk : acc[ri]) {
      blk.canonicalize();
      if (!blk.empty()) zero_row = false;
    }
    if (zero_row && c == 0) continue;
    out.sdp.constraints.push_back(std::move(acc[ri]));
    out.sdp.rhs.push_back(to_double(c));
    out.row_monomials.push_back(m);
  }
  return out;
}

}  // namespace

ConeAssembly assemble_membership_system(const ConeDescription& cone,
                                        const QPoly& target, int d) {
  return assemble(cone, target, d, /*include_constant_row=*/true);
}

ConeAssembly assemble_level_system(const ConeDescription& cone,
                                   const QPoly& target, int d) {
  return assemble(cone, target, d, /*include_constant_row=*/false);
}

Eigen::MatrixXd localized_moment_matrix(
    const QPoly& product, const std::vector<Monomial>& basis,
    const std::map<Monomial, double, GradedLexLess>& moments) {
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Monomial base = basis[static_cast<std::size_t>(i)] *
                            basis[static_cast<std::size_t>(j)];
      double v = 0.0;
      for (const auto& [mono, c] : product.terms()) {
        auto it = moments.find(base * mono);
        if (it != moments.end()) v += to_double(c) * it->second;
      }
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  return M;
}

}  // namespace posmod
