#include "posmod/membership.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "posmod/errors.hpp"

namespace posmod {

std::string to_string(MembershipStatus s) {
  switch (s) {
    case MembershipStatus::Member:
      return "MEMBER";
    case MembershipStatus::NotMember:
      return "NOT_MEMBER";
    default:
      return "UNKNOWN";
  }
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Exact psd test by symmetric elimination with max-diagonal pivoting.  A
// zero maximal diagonal forces the whole remaining submatrix to vanish.
bool rational_psd(std::vector<std::vector<Rational>> M) {
  const int n = static_cast<int>(M.size());
  std::vector<int> live(static_cast<std::size_t>(n));
  std::iota(live.begin(), live.end(), 0);
  while (!live.empty()) {
    std::size_t kpos = 0;
    for (std::size_t t = 1; t < live.size(); ++t)
      if (M[live[t]][live[t]] > M[live[kpos]][live[kpos]]) kpos = t;
    const int k = live[kpos];
    const Rational piv = M[k][k];
    if (piv < 0) return false;
    if (piv == 0) {
      for (int i : live)
        for (int j : live)
          if (M[i][j] != 0) return false;
      return true;
    }
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(kpos));
    for (int i : live) {
      if (M[i][k] == 0) continue;
      const Rational factor = M[i][k] / piv;
      for (int j : live) M[i][j] -= factor * M[k][j];
    }
  }
  return true;
}

double matrix_scale(const MatrixXd& A) {
  return 1.0 + A.cwiseAbs().maxCoeff();
}

double min_eigenvalue(const MatrixXd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// target - sum_e basis' G_e basis * product_e, coefficientwise, exactly.
QPoly rational_residual(const GramCertificate& cert,
                        const std::vector<std::vector<std::vector<Rational>>>& G) {
  QPoly acc = QPoly::constant(cert.cone.vars, Rational(0));
  const int nb = static_cast<int>(cert.basis.size());
  for (std::size_t e = 0; e < G.size(); ++e) {
    QPoly combo = QPoly::constant(cert.cone.vars, Rational(0));
    for (int i = 0; i < nb; ++i) {
      for (int j = i; j < nb; ++j) {
        Rational c = G[e][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (c == 0) continue;
        if (i != j) c *= 2;
        combo.add_term(cert.basis[static_cast<std::size_t>(i)] *
                           cert.basis[static_cast<std::size_t>(j)],
                       c);
      }
    }
    acc = acc + combo * cert.products[e];
  }
  return cert.target - acc;
}

Poly double_residual(const GramCertificate& cert) {
  Poly acc = Poly::constant(cert.cone.vars, 0.0);
  const int nb = static_cast<int>(cert.basis.size());
  for (std::size_t e = 0; e < cert.blocks.size(); ++e) {
    Poly combo = Poly::constant(cert.cone.vars, 0.0);
    for (int i = 0; i < nb; ++i) {
      for (int j = i; j < nb; ++j) {
        double c = cert.blocks[e](i, j);
        if (c == 0.0) continue;
        if (i != j) c *= 2.0;
        combo.add_term(cert.basis[static_cast<std::size_t>(i)] *
                           cert.basis[static_cast<std::size_t>(j)],
                       c);
      }
    }
    acc = acc + combo * to_double_poly(cert.products[e]);
  }
  return to_double_poly(cert.target) - acc;
}

double max_abs_coeff(const QPoly& p) {
  double m = 0.0;
  for (const auto& [mono, c] : p.terms())
    m = std::max(m, std::abs(to_double(c)));
  return m;
}

double max_abs_coeff(const Poly& p) {
  double m = 0.0;
  for (const auto& [mono, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

std::optional<std::vector<double>> sample_set_point(
    const SemialgebraicPredicate& pred, int attempts, unsigned seed) {
  std::mt19937 rng(seed);
  const double scales[4] = {1.0, 2.0, 4.0, 8.0};
  const int per = std::max(1, attempts / 4);
  std::vector<double> x(static_cast<std::size_t>(pred.nvars()));
  for (double s : scales) {
    std::uniform_real_distribution<double> dist(-s, s);
    for (int t = 0; t < per; ++t) {
      for (auto& xi : x) xi = dist(rng);
      if (pred.contains(x)) return x;
    }
  }
  return std::nullopt;
}

void finish_functional(DualFunctional& fun) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < fun.y.size(); ++i)
    norm = std::max(norm, std::abs(fun.y[i]));
  double L = 0.0;
  std::map<Monomial, Eigen::Index, GradedLexLess> index;
  for (std::size_t i = 0; i < fun.monomials.size(); ++i)
    index.emplace(fun.monomials[i], static_cast<Eigen::Index>(i));
  for (const auto& [mono, c] : fun.target.terms()) {
    auto it = index.find(mono);
    if (it != index.end()) L += to_double(c) * fun.y[it->second];
  }
  fun.value = L;
  fun.margin = std::abs(L) / (1.0 + norm);
  fun.normalized =
      !fun.monomials.empty() && fun.monomials[0].is_constant() && fun.y[0] == 1.0;
}

DualFunctional functional_from_rows(const ConeDescription& cone,
                                    const ConeAssembly& assembly,
                                    const QPoly& target,
                                    const VectorXd& row_values,
                                    bool set_unit_constant) {
  DualFunctional fun;
  fun.cone = cone;
  fun.d = assembly.d;
  fun.target = target;
  fun.monomials = monomial_basis(cone.nvars(), assembly.degree_bound);
  fun.y = VectorXd::Zero(static_cast<Eigen::Index>(fun.monomials.size()));
  std::map<Monomial, Eigen::Index, GradedLexLess> index;
  for (std::size_t i = 0; i < fun.monomials.size(); ++i)
    index.emplace(fun.monomials[i], static_cast<Eigen::Index>(i));
  for (std::size_t r = 0; r < assembly.row_monomials.size(); ++r)
    fun.y[index.at(assembly.row_monomials[r])] =
        -row_values[static_cast<Eigen::Index>(r)];
  if (set_unit_constant) fun.y[0] = 1.0;
  finish_functional(fun);
  return fun;
}

// Separator for a target whose degree exceeds every representable degree:
// extract the leading coefficient.  All localized matrices vanish on it.
DualFunctional degree_separator(const ConeDescription& cone,
                                const QPoly& target, int d) {
  DualFunctional fun;
  fun.cone = cone;
  fun.d = d;
  fun.target = target;
  fun.monomials = monomial_basis(cone.nvars(), target.degree());
  fun.y = VectorXd::Zero(static_cast<Eigen::Index>(fun.monomials.size()));
  const Monomial lead = target.terms().rbegin()->first;
  const double c = to_double(target.terms().rbegin()->second);
  for (std::size_t i = 0; i < fun.monomials.size(); ++i) {
    if (fun.monomials[i] == lead) {
      fun.y[static_cast<Eigen::Index>(i)] = c > 0 ? -1.0 : 1.0;
      break;
    }
  }
  finish_functional(fun);
  return fun;
}

}  // namespace

GramCertificate make_certificate(const ConeDescription& cone,
                                 const ConeAssembly& assembly,
                                 const QPoly& target,
                                 const std::vector<MatrixXd>& blocks) {
  GramCertificate cert;
  cert.cone = cone;
  cert.d = assembly.d;
  cert.target = target;
  cert.basis = assembly.basis;
  cert.block_labels = assembly.product_labels;
  cert.products = assembly.products;
  cert.blocks.reserve(blocks.size());
  for (const auto& B : blocks)
    cert.blocks.push_back(0.5 * (B + B.transpose()));
  return cert;
}

DualFunctional moments_from_level_dual(const ConeDescription& cone,
                                       const ConeAssembly& assembly,
                                       const QPoly& target,
                                       const VectorXd& dual_y) {
  return functional_from_rows(cone, assembly, target, dual_y,
                              /*set_unit_constant=*/true);
}

void refresh_functional(DualFunctional& fun) { finish_functional(fun); }

VerificationReport verify_certificate(const GramCertificate& cert,
                                      const VerifyOptions& opt) {
  VerificationReport rep;
  const std::size_t nblocks = cert.blocks.size();
  if (cert.block_labels.size() != nblocks || cert.products.size() != nblocks) {
    rep.detail = "malformed certificate: block metadata sizes disagree";
    return rep;
  }
  const int nb = static_cast<int>(cert.basis.size());
  for (const auto& B : cert.blocks) {
    if (B.rows() != nb || B.cols() != nb) {
      rep.detail = "malformed certificate: block shape does not match basis";
      return rep;
    }
  }

  // Exact path: rationalize, prove psd by exact elimination, reconstruct.
  bool exact_ok = true;
  std::vector<std::vector<std::vector<Rational>>> G;
  G.reserve(nblocks);
  for (std::size_t e = 0; e < nblocks && exact_ok; ++e) {
    std::vector<std::vector<Rational>> B(
        static_cast<std::size_t>(nb),
        std::vector<Rational>(static_cast<std::size_t>(nb)));
    for (int i = 0; i < nb && exact_ok; ++i) {
      for (int j = i; j < nb; ++j) {
        double v = cert.blocks[e](i, j);
        if (!std::isfinite(v)) {
          exact_ok = false;
          break;
        }
        Rational q;
        try {
          q = rationalize(v, opt.max_denominator);
        } catch (const Error&) {
          exact_ok = false;
          break;
        }
        B[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = q;
        B[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = q;
      }
    }
    if (exact_ok) G.push_back(std::move(B));
  }
  if (exact_ok) {
    for (const auto& B : G) {
      if (!rational_psd(B)) {
        exact_ok = false;
        break;
      }
    }
  }
  if (exact_ok) {
    rep.residual = max_abs_coeff(rational_residual(cert, G));
    rep.min_eigenvalue = 0.0;
    rep.exact = true;
    rep.ok = rep.residual <= opt.residual_tol;
    if (!rep.ok) rep.detail = "reconstruction residual above tolerance";
    return rep;
  }

  // Float fallback: eigenvalue slack on the matrices as given.
  double worst = 0.0;
  for (const auto& B : cert.blocks) {
    if (!B.allFinite()) {
      rep.detail = "certificate block contains a non-finite entry";
      return rep;
    }
    worst = std::min(worst, min_eigenvalue(B) / matrix_scale(B));
  }
  rep.min_eigenvalue = worst;
  rep.residual = max_abs_coeff(double_residual(cert));
  rep.ok = worst >= -opt.eig_tol && rep.residual <= opt.residual_tol;
  rep.detail = "exact psd check unavailable; float fallback";
  if (!rep.ok) rep.detail += "; witness outside tolerance";
  return rep;
}

VerificationReport verify_functional(const DualFunctional& fun,
                                     const VerifyOptions& opt) {
  VerificationReport rep;
  if (fun.y.size() != static_cast<Eigen::Index>(fun.monomials.size())) {
    rep.detail = "malformed functional: vector length mismatch";
    return rep;
  }
  if (!fun.y.allFinite()) {
    rep.detail = "functional contains a non-finite entry";
    return rep;
  }

  std::map<Monomial, double, GradedLexLess> moments;
  double norm = 0.0;
  for (std::size_t i = 0; i < fun.monomials.size(); ++i) {
    moments[fun.monomials[i]] = fun.y[static_cast<Eigen::Index>(i)];
    norm = std::max(norm, std::abs(fun.y[static_cast<Eigen::Index>(i)]));
  }

  double L = 0.0;
  for (const auto& [mono, c] : fun.target.terms()) {
    auto it = moments.find(mono);
    if (it == moments.end()) {
      // A target monomial the functional never sees cannot be separated.
      rep.detail = "functional does not cover the target's support";
      return rep;
    }
    L += to_double(c) * it->second;
  }
  rep.value = L;
  rep.margin = std::abs(L) / (1.0 + norm);

  const auto basis = monomial_basis(fun.cone.nvars(), fun.d);
  double worst = 0.0;
  for (const auto& entry : product_set(fun.cone)) {
    const MatrixXd M = localized_moment_matrix(entry.poly, basis, moments);
    worst = std::min(worst, min_eigenvalue(M) / matrix_scale(M));
  }
  rep.min_eigenvalue = worst;
  rep.exact = false;
  rep.ok = L < 0 && rep.margin >= opt.margin_threshold && worst >= -opt.eig_tol;
  if (!rep.ok) rep.detail = "separation margin or psd condition failed";
  return rep;
}

MembershipReport test_membership(const ConeDescription& cone,
                                 const QPoly& target, int d,
                                 const MembershipOptions& opt) {
  MembershipReport rep;
  rep.d = d;

  ConeAssembly memb;
  try {
    memb = assemble_membership_system(cone, target, d);
  } catch (const DegreeError&) {
    DualFunctional fun = degree_separator(cone, target, d);
    rep.check = verify_functional(fun, opt.verify);
    if (rep.check.ok) {
      rep.status = MembershipStatus::NotMember;
      rep.separator = std::move(fun);
      rep.detail = "target degree exceeds the truncation";
    } else {
      rep.detail = "degree separator failed verification";
    }
    return rep;
  }

  const SdpSolution sol = solve_sdp(memb.sdp, opt.sdp);
  rep.iterations += sol.iterations;

  if (sol.status == SdpStatus::Feasible) {
    GramCertificate cert = make_certificate(cone, memb, target, sol.X);
    rep.check = verify_certificate(cert, opt.verify);
    if (rep.check.ok) {
      rep.status = MembershipStatus::Member;
      rep.certificate = std::move(cert);
      return rep;
    }
    rep.detail += "feasibility witness failed verification; ";
  } else if (sol.status == SdpStatus::Infeasible && sol.farkas) {
    DualFunctional fun = functional_from_rows(cone, memb, target,
                                              sol.farkas->y,
                                              /*set_unit_constant=*/false);
    rep.check = verify_functional(fun, opt.verify);
    if (rep.check.ok) {
      rep.status = MembershipStatus::NotMember;
      rep.separator = std::move(fun);
      return rep;
    }
    rep.detail += "infeasibility witness failed verification; ";
  } else {
    rep.detail += "feasibility solve inconclusive; ";
  }

  // Second chance through the level system: its dual either separates the
  // target or its optimum shifts the target strictly inside the cone.
  ConeAssembly lvl = assemble_level_system(cone, target, d);
  const SdpSolution lsol = solve_sdp(lvl.sdp, opt.sdp);
  rep.iterations += lsol.iterations;

  if (lsol.status == SdpStatus::Feasible) {
    DualFunctional fun = moments_from_level_dual(cone, lvl, target, lsol.y);
    if (fun.value < 0) {
      rep.check = verify_functional(fun, opt.verify);
      if (rep.check.ok) {
        rep.status = MembershipStatus::NotMember;
        rep.separator = std::move(fun);
        return rep;
      }
      rep.detail += "separating functional failed verification; ";
    }
    double objX = 0.0;
    for (std::size_t b = 0; b < lsol.X.size(); ++b)
      objX += lvl.sdp.objective[b].inner(lsol.X[b]);
    const double r_X = to_double(lvl.constant_coeff) - objX;
    if (r_X > 0 && !lsol.X.empty()) {
      std::vector<MatrixXd> blocks = lsol.X;
      blocks[0](0, 0) += r_X;
      GramCertificate cert = make_certificate(cone, lvl, target, blocks);
      rep.check = verify_certificate(cert, opt.verify);
      if (rep.check.ok) {
        rep.status = MembershipStatus::Member;
        rep.certificate = std::move(cert);
        rep.detail += "certified through the level optimum; ";
        return rep;
      }
      rep.detail += "level-shift certificate failed verification; ";
    }
    rep.detail += "level value " + std::to_string(to_double(lvl.constant_coeff) -
                                                  0.5 * (lsol.primal_objective +
                                                         lsol.dual_objective)) +
                  " is marginal";
  } else if (lsol.status == SdpStatus::Infeasible && lsol.farkas) {
    // No shift of the target fits the truncation, so the functional side is
    // unbounded below.  Anchor the improving direction at a sampled point of
    // the set to regain a normalized separator.
    DualFunctional ray = functional_from_rows(cone, lvl, target,
                                              lsol.farkas->y,
                                              /*set_unit_constant=*/false);
    SemialgebraicPredicate pred(cone);
    auto anchor = sample_set_point(pred, opt.sample_attempts, opt.sample_seed);
    if (anchor) {
      const double fx = to_double_poly(target).eval(*anchor);
      const double t = 2.0 + std::abs(fx);
      DualFunctional fun = ray;
      for (std::size_t i = 0; i < fun.monomials.size(); ++i) {
        double mono_val = 1.0;
        const auto& exps = fun.monomials[i].exps;
        for (std::size_t v = 0; v < exps.size(); ++v)
          mono_val *= std::pow((*anchor)[v], static_cast<int>(exps[v]));
        fun.y[static_cast<Eigen::Index>(i)] =
            mono_val + t * fun.y[static_cast<Eigen::Index>(i)];
      }
      finish_functional(fun);
      rep.check = verify_functional(fun, opt.verify);
      if (rep.check.ok) {
        rep.status = MembershipStatus::NotMember;
        rep.separator = std::move(fun);
        return rep;
      }
    }
    rep.check = verify_functional(ray, opt.verify);
    if (rep.check.ok) {
      rep.status = MembershipStatus::NotMember;
      rep.separator = std::move(ray);
      return rep;
    }
    rep.detail += "unbounded separator failed verification; ";
  } else if (lsol.status == SdpStatus::Unbounded) {
    rep.detail += "every shift of the target fits; degenerate truncation; ";
  } else {
    rep.detail += "level solve inconclusive; ";
  }

  rep.status = MembershipStatus::Unknown;
  return rep;
}

MinimalDegreeResult minimal_degree(const ConeDescription& cone,
                                   const QPoly& target, int d_max,
                                   const MembershipOptions& opt) {
  if (d_max < 0) throw Error("minimal_degree: negative search bound");
  MinimalDegreeResult res;
  res.d_searched = d_max;

  int maxdeg = 0;
  for (const auto& entry : product_set(cone))
    maxdeg = std::max(maxdeg, entry.poly.degree());
  const int required =
      std::max(0, (std::max(target.degree(), 0) - maxdeg + 1) / 2);

  for (int d = 0; d <= d_max; ++d) {
    if (d < required) {
      res.impossible.push_back(d);
      res.statuses.emplace_back(d, MembershipStatus::NotMember);
      continue;
    }
    MembershipReport rep = test_membership(cone, target, d, opt);
    res.statuses.emplace_back(d, rep.status);
    if (rep.status == MembershipStatus::Member) {
      res.d_min = d;
      res.witness = std::move(rep);
      break;
    }
  }
  for (const auto& [d, st] : res.statuses)
    if (st == MembershipStatus::Unknown &&
        (!res.d_min.has_value() || d < *res.d_min))
      res.marginal = true;
  return res;
}

ClosureProbeReport closure_probe(const ConeDescription& cone,
                                 const QPoly& target,
                                 const QPoly& perturbation,
                                 const std::vector<double>& epsilons,
                                 int d_max, const MembershipOptions& opt) {
  if (epsilons.empty())
    throw Error("closure probe needs a nonempty epsilon schedule");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0) || !std::isfinite(epsilons[i]))
      throw Error("closure probe epsilons must be positive and finite");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw Error("closure probe epsilons must be strictly decreasing");
  }
  if (perturbation.vars() != target.vars())
    throw VarMismatchError(
        "perturbation variable list does not match the target");

  ClosureProbeReport rep;
  rep.perturbation = perturbation;
  rep.all_member = true;
  for (double eps : epsilons) {
    const QPoly probe = target + perturbation * rational_from_double(eps);
    MinimalDegreeResult md = minimal_degree(cone, probe, d_max, opt);
    ClosureProbePoint pt;
    pt.epsilon = eps;
    pt.d_min = md.d_min;
    if (md.d_min.has_value()) {
      pt.status = MembershipStatus::Member;
    } else {
      bool any_unknown = false;
      for (const auto& [d, st] : md.statuses)
        if (st == MembershipStatus::Unknown) any_unknown = true;
      pt.status = any_unknown ? MembershipStatus::Unknown
                              : MembershipStatus::NotMember;
    }
    if (pt.status != MembershipStatus::Member) rep.all_member = false;
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace posmod
