#include "posmod/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "posmod/errors.hpp"
#include "posmod/parallel.hpp"

namespace posmod {

std::string to_string(PerturbationRecipe r) {
  switch (r) {
    case PerturbationRecipe::Cylinder:
      return "cylinder";
    case PerturbationRecipe::MonomialSquares:
      return "monomial-squares";
    default:
      return "user";
  }
}

std::string to_string(LevelKind k) {
  switch (k) {
    case LevelKind::Value:
      return "VALUE";
    case LevelKind::Infeasible:
      return "INFEASIBLE";
    case LevelKind::Unbounded:
      return "UNBOUNDED";
    default:
      return "UNKNOWN";
  }
}

namespace {

using Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double min_eigenvalue(const MatrixXd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Is the functional a valid upper-bound witness: unit constant moment and
// psd localized matrices (no separation requirement).
bool moment_bound_ok(const DualFunctional& fun, const VerifyOptions& vo) {
  if (fun.monomials.empty() ||
      fun.y.size() != static_cast<Eigen::Index>(fun.monomials.size()))
    return false;
  if (!fun.y.allFinite()) return false;
  if (!fun.monomials[0].is_constant() || std::abs(fun.y[0] - 1.0) > 1e-12)
    return false;
  std::map<Monomial, double, GradedLexLess> moments;
  for (std::size_t i = 0; i < fun.monomials.size(); ++i)
    moments[fun.monomials[i]] = fun.y[static_cast<Eigen::Index>(i)];
  const auto basis = monomial_basis(fun.cone.nvars(), fun.d);
  for (const auto& entry : product_set(fun.cone)) {
    const MatrixXd M = localized_moment_matrix(entry.poly, basis, moments);
    const double scale = 1.0 + (M.rows() ? M.cwiseAbs().maxCoeff() : 0.0);
    if (min_eigenvalue(M) < -vo.eig_tol * scale) return false;
  }
  return true;
}

Monomial power_monomial(std::size_t nvars, std::size_t var, unsigned e) {
  Monomial m;
  m.exps.assign(nvars, 0u);
  m.exps[var] = e;
  return m;
}

GramCertificate diagonal_certificate(const ConeDescription& cone,
                                     const QPoly& q, int d,
                                     const std::map<Monomial, Rational,
                                                    GradedLexLess>& diag) {
  GramCertificate cert;
  cert.cone = cone;
  cert.d = d;
  cert.target = q;
  cert.basis = monomial_basis(cone.nvars(), d);
  const int nb = static_cast<int>(cert.basis.size());
  for (const auto& entry : product_set(cone)) {
    cert.block_labels.push_back(entry.label);
    cert.products.push_back(entry.poly);
    cert.blocks.push_back(MatrixXd::Zero(nb, nb));
  }
  for (int i = 0; i < nb; ++i) {
    auto it = diag.find(cert.basis[static_cast<std::size_t>(i)]);
    if (it != diag.end()) cert.blocks[0](i, i) = to_double(it->second);
  }
  return cert;
}

}  // namespace

Perturbation build_perturbation(const ConeDescription& cone,
                                const QPoly& objective,
                                PerturbationRecipe recipe,
                                const std::optional<QPoly>& user_q,
                                const std::string& cylinder_var,
                                const MembershipOptions& opt) {
  if (objective.vars() != cone.vars)
    throw VarMismatchError(
        "objective variable list does not match the cone's variables");
  const std::size_t n = cone.vars.size();
  Perturbation out;
  out.recipe = recipe;

  if (recipe == PerturbationRecipe::Cylinder) {
    if (cone.vars.empty())
      throw Error("cylinder perturbation needs at least one variable");
    std::string v = cylinder_var.empty() ? cone.vars.back() : cylinder_var;
    std::size_t vi = n;
    for (std::size_t i = 0; i < n; ++i)
      if (cone.vars[i] == v) vi = i;
    if (vi == n) throw Error("unknown cylinder variable '" + v + "'");
    const int k = std::max(objective.degree_in(v), 0);
    QPoly q = QPoly::constant(cone.vars, Rational(k + 1) / 2);
    std::map<Monomial, Rational, GradedLexLess> diag;
    diag[power_monomial(n, vi, 0)] = Rational(k + 2) / 2;
    for (int j = 0; j <= k; ++j) {
      q.add_term(power_monomial(n, vi, static_cast<unsigned>(2 * j)),
                 Rational(1) / 2);
      if (j > 0)
        diag[power_monomial(n, vi, static_cast<unsigned>(j))] = Rational(1) / 2;
    }
    out.q = q;
    out.certified_d = k;
    out.certificate = diagonal_certificate(cone, q, k, diag);
    return out;
  }

  if (recipe == PerturbationRecipe::MonomialSquares) {
    const int h = (std::max(objective.degree(), 0) + 1) / 2;
    QPoly q = QPoly::constant(cone.vars, Rational(0));
    std::map<Monomial, Rational, GradedLexLess> diag;
    for (const auto& m : monomial_basis(static_cast<int>(n), h)) {
      q.add_term(m * m, Rational(1));
      diag[m] = Rational(1);
    }
    out.q = q;
    out.certified_d = h;
    out.certificate = diagonal_certificate(cone, q, h, diag);
    return out;
  }

  if (!user_q.has_value())
    throw Error("user perturbation recipe needs a polynomial");
  if (user_q->vars() != cone.vars)
    throw VarMismatchError(
        "perturbation variable list does not match the cone's variables");
  MinimalDegreeResult md = minimal_degree(cone, *user_q, 10, opt);
  if (!md.d_min.has_value())
    throw Error(
        "user perturbation could not be certified as a cone member up to "
        "level 10");
  out.q = *user_q;
  out.certified_d = *md.d_min;
  if (md.witness && md.witness->certificate)
    out.certificate = md.witness->certificate;
  return out;
}

LevelResult solve_level(const ConeDescription& cone, const QPoly& target,
                        int d, const LevelOptions& opt) {
  LevelResult res;

  ConeAssembly lvl;
  try {
    lvl = assemble_level_system(cone, target, d);
  } catch (const DegreeError& e) {
    res.kind = LevelKind::Infeasible;
    res.value = -kInf;
    res.primal_bound = -kInf;
    res.dual_bound = -kInf;
    res.detail = std::string("no shift fits: ") + e.what();
    return res;
  }

  const SdpSolution sol = solve_sdp(lvl.sdp, opt.sdp);
  res.iterations = sol.iterations;
  const double c0 = to_double(lvl.constant_coeff);

  auto attach_dual = [&]() {
    DualFunctional fun = moments_from_level_dual(cone, lvl, target, sol.y);
    res.dual_bound = fun.value;  // L applied to the target bounds sup r
    res.dual_certified = moment_bound_ok(fun, opt.verify);
    res.moments = std::move(fun);
  };
  auto attach_primal = [&](double r_cert) -> bool {
    if (sol.X.empty()) return false;
    double objX = 0.0;
    for (std::size_t b = 0; b < sol.X.size(); ++b)
      objX += lvl.sdp.objective[b].inner(sol.X[b]);
    const double r_X = c0 - objX;  // exact anchor of the solved blocks
    if (!std::isfinite(r_X)) return false;
    if (!(r_cert <= r_X)) r_cert = r_X;  // also catches NaN and +inf requests
    std::vector<MatrixXd> blocks = sol.X;
    blocks[0](0, 0) += r_X - r_cert;
    const QPoly shifted =
        target - QPoly::constant(cone.vars, rational_from_double(r_cert));
    GramCertificate cert = make_certificate(cone, lvl, shifted, blocks);
    VerificationReport check = verify_certificate(cert, opt.verify);
    if (!check.ok) return false;
    res.primal_bound = r_cert;
    res.primal_certified = true;
    res.certificate = std::move(cert);
    return true;
  };

  switch (sol.status) {
    case SdpStatus::Feasible: {
      const double mid =
          c0 - 0.5 * (sol.primal_objective + sol.dual_objective);
      res.kind = LevelKind::Value;
      res.value = mid;
      attach_dual();
      if (!attach_primal(mid - opt.backoff)) {
        // Retreat further; the bump only grows the leading diagonal entry.
        if (!attach_primal(mid - opt.backoff -
                           1e-4 * (1.0 + std::abs(mid)))) {
          res.primal_bound = kNaN;
          res.detail += "certificate verification failed; ";
        }
      }
      break;
    }
    case SdpStatus::Infeasible: {
      res.kind = LevelKind::Infeasible;
      res.value = -kInf;
      res.primal_bound = -kInf;
      res.dual_bound = -kInf;
      if (sol.farkas) {
        DualFunctional ray =
            moments_from_level_dual(cone, lvl, target, sol.farkas->y);
        ray.y[0] = 0.0;  // improving direction, not a normalized functional
        refresh_functional(ray);
        res.moments = std::move(ray);
      }
      res.detail += "no shift of the target fits the truncation; ";
      break;
    }
    case SdpStatus::Unbounded: {
      res.kind = LevelKind::Unbounded;
      res.value = kInf;
      res.primal_bound = kInf;
      res.dual_bound = kInf;
      res.detail += "every shift of the target fits the truncation; ";
      break;
    }
    default: {
      res.kind = LevelKind::Unknown;
      res.value = kNaN;
      attach_dual();
      if (!attach_primal(kInf)) {  // settle for the exact anchor, no retreat
        res.primal_bound = kNaN;
      }
      res.detail += "level solve inconclusive: " + sol.detail;
      break;
    }
  }
  return res;
}

HierarchyReport run_hierarchy(const ConeDescription& cone,
                              const QPoly& objective,
                              const HierarchyOptions& opt) {
  if (objective.vars() != cone.vars)
    throw VarMismatchError(
        "objective variable list does not match the cone's variables");

  HierarchyReport rep;
  rep.objective = objective;

  rep.epsilons = opt.epsilons;
  if (rep.epsilons.empty())
    for (int i = 1; i <= 6; ++i) rep.epsilons.push_back(1.0 / i);
  for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
    if (!(rep.epsilons[i] > 0) || !std::isfinite(rep.epsilons[i]))
      throw Error("hierarchy epsilons must be positive and finite");
    if (i > 0 && !(rep.epsilons[i] < rep.epsilons[i - 1]))
      throw Error("hierarchy epsilons must be strictly decreasing");
  }

  rep.degrees = opt.degrees;
  if (rep.degrees.empty()) {
    const int d0 = std::max(1, (std::max(objective.degree(), 0) + 1) / 2);
    for (int d = d0; d <= std::max(8, d0); ++d) rep.degrees.push_back(d);
  }
  for (std::size_t j = 0; j < rep.degrees.size(); ++j) {
    if (rep.degrees[j] < 0) throw Error("hierarchy levels must be nonnegative");
    if (j > 0 && rep.degrees[j] <= rep.degrees[j - 1])
      throw Error("hierarchy levels must be strictly increasing");
  }

  rep.perturbation = build_perturbation(cone, objective, opt.recipe,
                                        opt.user_q, opt.cylinder_var,
                                        opt.membership);

  const std::size_t ne = rep.epsilons.size();
  const std::size_t nd = rep.degrees.size();
  rep.table.assign(ne, std::vector<HierarchyCell>(nd));
  parallel_for(ne * nd, [&](std::size_t flat) {
    const std::size_t i = flat / nd;
    const std::size_t j = flat % nd;
    const QPoly g = objective +
                    rep.perturbation.q * rational_from_double(rep.epsilons[i]);
    const LevelResult lr = solve_level(cone, g, rep.degrees[j], opt.level);
    HierarchyCell& cell = rep.table[i][j];
    cell.kind = lr.kind;
    cell.value = lr.value;
    cell.primal_bound = lr.primal_bound;
    cell.dual_bound = lr.dual_bound;
    cell.certified = lr.primal_certified;
  });

  rep.stabilized_at.assign(ne, std::nullopt);
  rep.per_epsilon.assign(ne, kNaN);
  rep.stabilized = true;
  for (std::size_t i = 0; i < ne; ++i) {
    for (std::size_t j = 1; j < nd; ++j) {
      const HierarchyCell& a = rep.table[i][j - 1];
      const HierarchyCell& b = rep.table[i][j];
      if (a.kind == LevelKind::Value && b.kind == LevelKind::Value &&
          std::abs(a.value - b.value) < opt.stabilize_tol) {
        rep.stabilized_at[i] = rep.degrees[j];
        rep.per_epsilon[i] = b.value;
        break;
      }
    }
    if (!rep.stabilized_at[i].has_value()) {
      rep.stabilized = false;
      for (std::size_t j = nd; j-- > 0;) {
        if (rep.table[i][j].kind == LevelKind::Value) {
          rep.per_epsilon[i] = rep.table[i][j].value;
          break;
        }
      }
      rep.detail += "no stabilization at epsilon " +
                    std::to_string(rep.epsilons[i]) + "; ";
    }
  }

  if (ne == 1) {
    rep.estimate = rep.per_epsilon[0];
  } else {
    const double e1 = rep.epsilons[ne - 2], f1 = rep.per_epsilon[ne - 2];
    const double e2 = rep.epsilons[ne - 1], f2 = rep.per_epsilon[ne - 1];
    if (std::isfinite(f1) && std::isfinite(f2)) {
      rep.estimate = (e1 * f2 - e2 * f1) / (e1 - e2);
    } else {
      rep.estimate = kNaN;
      rep.detail += "extrapolation impossible; ";
    }
  }
  return rep;
}

GridOracleResult grid_oracle(const ConeDescription& cone,
                             const QPoly& objective,
                             const std::vector<std::pair<double, double>>& box,
                             int points_per_axis) {
  if (objective.vars() != cone.vars)
    throw VarMismatchError(
        "objective variable list does not match the cone's variables");
  const std::size_t n = cone.vars.size();
  std::vector<std::pair<double, double>> bounds = box;
  if (bounds.empty()) bounds.assign(n, {-10.0, 10.0});
  if (bounds.size() != n)
    throw Error("grid box needs one interval per variable");
  for (const auto& [lo, hi] : bounds)
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw Error("grid box intervals must be finite with lo <= hi");
  const int ppa = std::max(10, points_per_axis);

  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) {
    total *= static_cast<std::size_t>(ppa);
    if (total > 2000000) throw CapacityError("grid has over 2000000 points");
  }

  const SemialgebraicPredicate pred(cone);
  const Poly f = to_double_poly(objective);
  GridOracleResult res;
  res.samples_total = total;
  res.min_value = kInf;
  std::vector<double> x(n);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rem = p;
    for (std::size_t a = n; a-- > 0;) {
      const std::size_t idx = rem % static_cast<std::size_t>(ppa);
      rem /= static_cast<std::size_t>(ppa);
      const auto& [lo, hi] = bounds[a];
      x[a] = ppa == 1 ? 0.5 * (lo + hi)
                      : lo + (hi - lo) * static_cast<double>(idx) /
                                 static_cast<double>(ppa - 1);
    }
    if (!pred.contains(x)) continue;
    ++res.samples_in_set;
    const double v = f.eval(x);
    if (v < res.min_value) {
      res.min_value = v;
      res.argmin = x;
    }
  }
  res.feasible_found = res.samples_in_set > 0;
  if (!res.feasible_found) res.min_value = kNaN;
  return res;
}

}  // namespace posmod
