#include "posmod/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include "posmod/errors.hpp"

namespace posmod {

void SparseSym::canonicalize() {
  std::sort(entries.begin(), entries.end(), [](const SymEntry& a, const SymEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<SymEntry> merged;
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
      merged.back().value += e.value;
    else
      merged.push_back(e);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const SymEntry& e) { return e.value == 0.0; }),
               merged.end());
  entries = std::move(merged);
}

Eigen::MatrixXd SparseSym::dense(int side) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(side, side);
  add_scaled_to(M, 1.0);
  return M;
}

void SparseSym::add_scaled_to(Eigen::MatrixXd& target, double scale) const {
  for (const auto& e : entries) {
    target(e.row, e.col) += scale * e.value;
    if (e.row != e.col) target(e.col, e.row) += scale * e.value;
  }
}

double SparseSym::inner(const Eigen::MatrixXd& X) const {
  double acc = 0.0;
  for (const auto& e : entries)
    acc += e.value * (e.row == e.col ? X(e.row, e.col) : 2.0 * X(e.row, e.col));
  return acc;
}

double SparseSym::frobenius_norm() const {
  double acc = 0.0;
  for (const auto& e : entries)
    acc += e.value * e.value * (e.row == e.col ? 1.0 : 2.0);
  return std::sqrt(acc);
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Feasible: return "FEASIBLE";
    case SdpStatus::Infeasible: return "INFEASIBLE";
    case SdpStatus::Unbounded: return "UNBOUNDED";
    case SdpStatus::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double min_eigenvalue(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Largest alpha in (0, cap] with M + alpha*D psd, given a Cholesky factor
// L of M.  Computed from the smallest eigenvalue of L^-1 D L^-T.
double psd_step_length(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& D, double cap) {
  MatrixXd T = llt.matrixL().solve(D);
  T = llt.matrixL().solve(T.transpose()).eval();
  T = 0.5 * (T + T.transpose()).eval();
  double lmin = min_eigenvalue(T);
  if (lmin >= -1e-14) return cap;
  return std::min(cap, -1.0 / lmin);
}

struct BlockScaling {
  MatrixXd R;     // NT scaling factor: W = R R', X = R Lam R', S = R^-T Lam R^-1
  MatrixXd Rinv;  // R^-1
  VectorXd lam;   // scaled point (diagonal), same for X and S
};

// The homogeneous self-dual model solved here:
//   A(X) = b*tau,  A*(y) + S = C*tau,  <C,X> - <b,y> + kappa = 0,
//   X,S psd, tau,kappa >= 0.
// tau > 0 at convergence recovers an optimal pair (X,y,S)/tau; kappa > 0
// yields an infeasibility certificate instead.
class HsdSolver {
public:
  HsdSolver(std::vector<int> sides, std::vector<std::vector<SparseSym>> A,
            VectorXd b, std::vector<SparseSym> C, const SdpOptions& opts)
      : side_(std::move(sides)), A_(std::move(A)), b_(std::move(b)),
        C_(std::move(C)), opt_(opts) {
    nb_ = static_cast<int>(side_.size());
    m_ = static_cast<int>(b_.size());
    norm_b_ = b_.norm();
    norm_C_ = 0.0;
    for (const auto& c : C_) {
      double f = c.frobenius_norm();
      norm_C_ = std::sqrt(norm_C_ * norm_C_ + f * f);
    }
    rows_in_block_.assign(nb_, {});
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < nb_; ++k)
        if (!A_[i][k].empty()) rows_in_block_[k].push_back(i);
  }

  SdpSolution run() {
    SdpSolution sol;
    // Interior starting point of the embedding.
    X_.clear();
    S_.clear();
    for (int k = 0; k < nb_; ++k) {
      X_.push_back(MatrixXd::Identity(side_[k], side_[k]));
      S_.push_back(MatrixXd::Identity(side_[k], side_[k]));
    }
    y_ = VectorXd::Zero(m_);
    tau_ = 1.0;
    kappa_ = 1.0;
    nu_ = 0;
    for (int k = 0; k < nb_; ++k) nu_ += side_[k];

    int it = 0;
    bool broke = false;
    for (; it < opt_.max_iters; ++it) {
      if (check_termination(sol)) {
        sol.iterations = it;
        return sol;
      }
      if (!iterate()) {
        sol.status = SdpStatus::Unknown;
        sol.detail = "numerical breakdown in search direction";
        broke = true;
        break;
      }
    }
    sol.iterations = it;
    if (!broke && check_termination(sol)) return sol;  // converged on the last step
    if (sol.detail.empty()) sol.detail = "iteration limit reached";
    sol.status = SdpStatus::Unknown;
    fill_point(sol);
    return sol;
  }

private:
  // ----- linear operators -----

  VectorXd applyA(const std::vector<MatrixXd>& X) const {
    VectorXd v = VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i)
      for (int k = 0; k < nb_; ++k)
        if (!A_[i][k].empty()) v[i] += A_[i][k].inner(X[k]);
    return v;
  }

  std::vector<MatrixXd> applyAT(const VectorXd& y) const {
    std::vector<MatrixXd> Z;
    for (int k = 0; k < nb_; ++k) {
      MatrixXd M = MatrixXd::Zero(side_[k], side_[k]);
      for (int i : rows_in_block_[k]) A_[i][k].add_scaled_to(M, y[i]);
      Z.push_back(std::move(M));
    }
    return Z;
  }

  double innerC(const std::vector<MatrixXd>& X) const {
    double v = 0.0;
    for (int k = 0; k < nb_; ++k)
      if (!C_[k].empty()) v += C_[k].inner(X[k]);
    return v;
  }

  static double inner_blocks(const std::vector<MatrixXd>& A,
                             const std::vector<MatrixXd>& B) {
    double v = 0.0;
    for (std::size_t k = 0; k < A.size(); ++k)
      v += (A[k].array() * B[k].array()).sum();
    return v;
  }

  // ----- termination -----

  bool check_termination(SdpSolution& sol) {
    const double t = tau_;
    VectorXd ax = applyA(X_);
    auto aty = applyAT(y_);
    double pobj = innerC(X_) / t;
    double dobj = b_.dot(y_) / t;

    double rp = (ax / t - b_).norm() / (1.0 + norm_b_);
    double rd = 0.0;
    for (int k = 0; k < nb_; ++k) {
      MatrixXd Rd = aty[k] + S_[k];
      C_[k].add_scaled_to(Rd, -t);
      rd += Rd.squaredNorm();
    }
    rd = std::sqrt(rd) / t / (1.0 + norm_C_);
    double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (rp <= opt_.feas_tol && rd <= opt_.feas_tol && gap <= opt_.gap_tol) {
      sol.status = SdpStatus::Feasible;
      fill_point(sol);
      return true;
    }

    // Primal infeasibility: a dual improving ray.  Normalized so b'y = 1.
    double by = b_.dot(y_);
    if (by > 0.0) {
      VectorXd yn = y_ / by;
      auto Z = applyAT(yn);
      double viol = 0.0, scale = 1.0;
      for (int k = 0; k < nb_; ++k) {
        viol = std::max(viol, std::max(0.0, max_eigenvalue(Z[k])));
        scale = std::max(scale, Z[k].norm());
      }
      if (viol <= opt_.feas_tol * scale) {
        sol.status = SdpStatus::Infeasible;
        FarkasCertificate cert;
        cert.y = yn;
        cert.psd_violation = viol;
        sol.farkas = std::move(cert);
        fill_point(sol);
        return true;
      }
    }

    // Dual infeasibility: a primal improving ray, normalized <C,X> = -1.
    double cx = innerC(X_);
    if (cx < 0.0) {
      double s = -1.0 / cx;
      VectorXd axn = ax * s;
      double scale = 1.0;
      for (int k = 0; k < nb_; ++k) scale = std::max(scale, s * X_[k].norm());
      if (axn.lpNorm<Eigen::Infinity>() <= opt_.feas_tol * scale) {
        sol.status = SdpStatus::Unbounded;
        ImprovingRay ray;
        for (int k = 0; k < nb_; ++k) ray.X.push_back(X_[k] * s);
        ray.eq_violation = axn.lpNorm<Eigen::Infinity>();
        sol.ray = std::move(ray);
        fill_point(sol);
        return true;
      }
    }

    // The embedding collapsed without a usable certificate.
    if (tau_ <= 1e-12 * std::max(1.0, kappa_)) {
      sol.status = SdpStatus::Unknown;
      sol.detail = "embedding degenerate (tau -> 0 without certificate)";
      fill_point(sol);
      return true;
    }
    return false;
  }

  void fill_point(SdpSolution& sol) const {
    const double t = std::max(tau_, 1e-300);
    sol.X.clear();
    sol.S.clear();
    for (int k = 0; k < nb_; ++k) {
      sol.X.push_back(X_[k] / t);
      sol.S.push_back(S_[k] / t);
    }
    sol.y = y_ / t;
    sol.primal_objective = innerC(X_) / t;
    sol.dual_objective = b_.dot(y_) / t;
    sol.primal_residual = (applyA(X_) / t - b_).norm() / (1.0 + norm_b_);
    double rd = 0.0;
    auto aty = applyAT(y_);
    for (int k = 0; k < nb_; ++k) {
      MatrixXd Rd = aty[k] + S_[k];
      C_[k].add_scaled_to(Rd, -tau_);
      rd += Rd.squaredNorm();
    }
    sol.dual_residual = std::sqrt(rd) / t / (1.0 + norm_C_);
    sol.gap = std::abs(sol.primal_objective - sol.dual_objective) /
              (1.0 + std::abs(sol.primal_objective) + std::abs(sol.dual_objective));
    double xs = 0.0;
    for (int k = 0; k < nb_; ++k) xs += (X_[k].array() * S_[k].array()).sum();
    sol.complementarity = xs / (t * t) /
                          (1.0 + std::abs(sol.primal_objective) +
                           std::abs(sol.dual_objective));
  }

  // ----- Nesterov-Todd scaling -----

  static MatrixXd chol_with_jitter(MatrixXd M, Eigen::LLT<MatrixXd>& llt) {
    double jitter = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      llt.compute(M);
      if (llt.info() == Eigen::Success) return M;
      double bump = std::max(1e-14, 1e-14 * M.trace() / M.rows());
      jitter = jitter == 0.0 ? bump : jitter * 10.0;
      M += jitter * MatrixXd::Identity(M.rows(), M.cols());
    }
    throw InternalError("interior-point iterate lost positive definiteness");
  }

  bool compute_scaling() {
    scal_.clear();
    for (int k = 0; k < nb_; ++k) {
      Eigen::LLT<MatrixXd> lltX, lltS;
      chol_with_jitter(X_[k], lltX);
      chol_with_jitter(S_[k], lltS);
      MatrixXd Lx = lltX.matrixL();
      MatrixXd Ls = lltS.matrixL();
      Eigen::JacobiSVD<MatrixXd> svd(Ls.transpose() * Lx,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
      VectorXd sig = svd.singularValues();
      if (sig.minCoeff() <= 0.0) return false;
      VectorXd isqrt = sig.array().sqrt().inverse();
      BlockScaling bs;
      bs.R = Lx * svd.matrixV() * isqrt.asDiagonal();
      bs.Rinv = isqrt.asDiagonal() * svd.matrixU().transpose() * Ls.transpose();
      bs.lam = sig;
      scal_.push_back(std::move(bs));
    }
    return true;
  }

  // ----- one predictor-corrector iteration -----

  struct Direction {
    std::vector<MatrixXd> dX, dS;
    VectorXd dy;
    double dtau = 0.0, dkappa = 0.0;
  };

  // Solves the Newton system for the given centering parameter and scaled
  // complementarity right-hand side D (per block) and tau*kappa target.
  bool solve_newton(double gamma, const std::vector<MatrixXd>& D, double r_tk,
                    const Eigen::LDLT<MatrixXd>& schur, Direction& dir) {
    const double one_m_g = 1.0 - gamma;

    // rp = b*tau - A(X);  Rd = C*tau - A*(y) - S  (per block).
    VectorXd rp = b_ * tau_ - applyA(X_);
    auto aty = applyAT(y_);
    std::vector<MatrixXd> Rd;
    for (int k = 0; k < nb_; ++k) {
      MatrixXd M = -aty[k] - S_[k];
      C_[k].add_scaled_to(M, tau_);
      Rd.push_back(std::move(M));
    }
    double rg = innerC(X_) - b_.dot(y_) + kappa_;

    // rhs1 = (1-g) rp - A(R D R') - (1-g) A(W Rd W);  rhs2 = b + A(W C W).
    VectorXd rhs1 = one_m_g * rp;
    VectorXd rhs2 = b_;
    std::vector<MatrixXd> RDRt, WRdW, WCW;
    for (int k = 0; k < nb_; ++k) {
      const auto& sc = scal_[k];
      RDRt.push_back(sc.R * D[k] * sc.R.transpose());
      WRdW.push_back(sandwich(sc, Rd[k]));
      WCW.push_back(sandwich(sc, C_[k].dense(side_[k])));
    }
    for (int i = 0; i < m_; ++i) {
      for (int k = 0; k < nb_; ++k) {
        if (A_[i][k].empty()) continue;
        rhs1[i] -= A_[i][k].inner(RDRt[k]) + one_m_g * A_[i][k].inner(WRdW[k]);
        rhs2[i] += A_[i][k].inner(WCW[k]);
      }
    }

    VectorXd y1 = schur.solve(rhs1);
    VectorXd y2 = schur.solve(rhs2);
    if (!y1.allFinite() || !y2.allFinite()) return false;

    // dX = X1 + dtau*X2, dS = S1 + dtau*S2.
    auto aty1 = applyAT(y1);
    auto aty2 = applyAT(y2);
    std::vector<MatrixXd> X1, X2, S1, S2;
    for (int k = 0; k < nb_; ++k) {
      const auto& sc = scal_[k];
      X1.push_back(RDRt[k] + sandwich(sc, aty1[k]) + one_m_g * WRdW[k]);
      X2.push_back(sandwich(sc, aty2[k]) - WCW[k]);
      S1.push_back(-aty1[k] - one_m_g * Rd[k]);
      MatrixXd s2 = -aty2[k];
      C_[k].add_scaled_to(s2, 1.0);
      S2.push_back(std::move(s2));
    }

    double c_x1 = innerC(X1), c_x2 = innerC(X2);
    double b_y1 = b_.dot(y1), b_y2 = b_.dot(y2);
    double denom = c_x2 - b_y2 - kappa_ / tau_;
    double numer = -one_m_g * rg - c_x1 + b_y1 - r_tk / tau_;
    double dtau = std::abs(denom) < 1e-300 ? 0.0 : numer / denom;

    dir.dtau = dtau;
    dir.dkappa = (r_tk - kappa_ * dtau) / tau_;
    dir.dy = y1 + dtau * y2;
    dir.dX.clear();
    dir.dS.clear();
    for (int k = 0; k < nb_; ++k) {
      MatrixXd dX = X1[k] + dtau * X2[k];
      MatrixXd dS = S1[k] + dtau * S2[k];
      dir.dX.push_back(0.5 * (dX + dX.transpose()));
      dir.dS.push_back(0.5 * (dS + dS.transpose()));
    }
    return dir.dy.allFinite() && std::isfinite(dir.dtau) && std::isfinite(dir.dkappa);
  }

  static MatrixXd sandwich(const BlockScaling& sc, const MatrixXd& Z) {
    // W Z W computed with the factor R: R (R' Z R) R'.
    MatrixXd t = sc.R.transpose() * Z * sc.R;
    return sc.R * t * sc.R.transpose();
  }

  double step_length(const Direction& dir, double cap) const {
    double alpha = cap;
    for (int k = 0; k < nb_; ++k) {
      Eigen::LLT<MatrixXd> lltX, lltS;
      chol_with_jitter(X_[k], lltX);
      chol_with_jitter(S_[k], lltS);
      alpha = std::min(alpha, psd_step_length(lltX, dir.dX[k], cap));
      alpha = std::min(alpha, psd_step_length(lltS, dir.dS[k], cap));
    }
    if (dir.dtau < 0.0) alpha = std::min(alpha, -tau_ / dir.dtau);
    if (dir.dkappa < 0.0) alpha = std::min(alpha, -kappa_ / dir.dkappa);
    return alpha;
  }

  bool iterate() {
    if (!compute_scaling()) return false;

    double mu = 0.0;
    for (int k = 0; k < nb_; ++k) mu += (X_[k].array() * S_[k].array()).sum();
    mu = (mu + tau_ * kappa_) / (nu_ + 1);

    // Schur complement M_ij = <A_i, W A_j W>, shared by both solves.
    MatrixXd M = MatrixXd::Zero(m_, m_);
    for (int k = 0; k < nb_; ++k) {
      const auto& rows = rows_in_block_[k];
      const auto& sc = scal_[k];
      for (int i : rows) {
        MatrixXd T = sandwich(sc, A_[i][k].dense(side_[k]));
        for (int j : rows)
          if (j <= i) M(i, j) += A_[j][k].inner(T);
      }
    }
    M = M.selfadjointView<Eigen::Lower>();
    Eigen::LDLT<MatrixXd> schur(M);
    auto schur_ok = [&]() {
      if (schur.info() != Eigen::Success || !schur.isPositive()) return false;
      // Near-zero pivots make the solve explode; treat them as singular.
      double dmax = schur.vectorD().maxCoeff();
      return schur.vectorD().minCoeff() > 1e-13 * std::max(1.0, dmax);
    };
    if (!schur_ok()) {
      // Rank-deficient Schur complement: retry with a tiny ridge.
      double ridge = 1e-12 * (1.0 + M.trace() / std::max(1, m_));
      for (int attempt = 0; attempt < 8 && !schur_ok(); ++attempt, ridge *= 100.0)
        schur.compute(M + ridge * MatrixXd::Identity(m_, m_));
    }

    // Predictor: gamma = 0, D = -Lam, r_tk = -tau*kappa.
    std::vector<MatrixXd> Daff;
    for (int k = 0; k < nb_; ++k)
      Daff.push_back(MatrixXd((-scal_[k].lam).asDiagonal()));
    Direction aff;
    if (!solve_newton(0.0, Daff, -tau_ * kappa_, schur, aff)) return false;

    double alpha_aff = step_length(aff, 1.0);
    double mu_aff = 0.0;
    for (int k = 0; k < nb_; ++k)
      mu_aff += ((X_[k] + alpha_aff * aff.dX[k]).array() *
                 (S_[k] + alpha_aff * aff.dS[k]).array())
                    .sum();
    mu_aff = (mu_aff + (tau_ + alpha_aff * aff.dtau) *
                           (kappa_ + alpha_aff * aff.dkappa)) /
             (nu_ + 1);
    double ratio = std::max(0.0, mu_aff / mu);
    double gamma = std::min(1.0, ratio * ratio * ratio);

    // Corrector: D = gamma*mu*Lam^-1 - Lam - H, with H the Lyapunov solve of
    // the symmetrized second-order term in the scaled space.
    std::vector<MatrixXd> Dcomb;
    for (int k = 0; k < nb_; ++k) {
      const auto& sc = scal_[k];
      MatrixXd dxt = sc.Rinv * aff.dX[k] * sc.Rinv.transpose();
      MatrixXd dst = sc.R.transpose() * aff.dS[k] * sc.R;
      MatrixXd P = 0.5 * (dxt * dst + dst * dxt);
      MatrixXd H(side_[k], side_[k]);
      for (int i = 0; i < side_[k]; ++i)
        for (int j = 0; j < side_[k]; ++j)
          H(i, j) = (P(i, j) + P(j, i)) / (sc.lam[i] + sc.lam[j]);
      MatrixXd D = MatrixXd::Zero(side_[k], side_[k]);
      for (int i = 0; i < side_[k]; ++i)
        D(i, i) = gamma * mu / sc.lam[i] - sc.lam[i];
      D -= H;
      Dcomb.push_back(std::move(D));
    }
    double r_tk = gamma * mu - tau_ * kappa_ - aff.dtau * aff.dkappa;
    Direction dir;
    if (!solve_newton(gamma, Dcomb, r_tk, schur, dir)) return false;

    double alpha = 0.99 * step_length(dir, 1.0 / 0.99);
    alpha = std::min(alpha, 1.0);
    if (!(alpha > 0.0)) return false;

    for (int k = 0; k < nb_; ++k) {
      X_[k] += alpha * dir.dX[k];
      S_[k] += alpha * dir.dS[k];
      X_[k] = 0.5 * (X_[k] + X_[k].transpose()).eval();
      S_[k] = 0.5 * (S_[k] + S_[k].transpose()).eval();
    }
    y_ += alpha * dir.dy;
    tau_ += alpha * dir.dtau;
    kappa_ += alpha * dir.dkappa;
    return tau_ > 0.0 && kappa_ > 0.0;
  }

  std::vector<int> side_;
  std::vector<std::vector<SparseSym>> A_;
  VectorXd b_;
  std::vector<SparseSym> C_;
  SdpOptions opt_;

  int nb_ = 0, m_ = 0, nu_ = 0;
  double norm_b_ = 0.0, norm_C_ = 0.0;
  std::vector<std::vector<int>> rows_in_block_;

  std::vector<MatrixXd> X_, S_;
  VectorXd y_;
  double tau_ = 1.0, kappa_ = 1.0;
  std::vector<BlockScaling> scal_;
};

std::string row_signature(const std::vector<SparseSym>& row) {
  std::string sig;
  char buf[64];
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k].entries.empty()) continue;
    std::snprintf(buf, sizeof buf, "|%zu:", k);
    sig += buf;
    for (const auto& e : row[k].entries) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g;", e.row, e.col, e.value);
      sig += buf;
    }
  }
  return sig;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts) {
  const int nb = static_cast<int>(problem.blocks.size());
  const int m_orig = static_cast<int>(problem.constraints.size());
  for (const auto& blk : problem.blocks)
    if (blk.side <= 0) throw InternalError("SDP block with nonpositive side");
  if (problem.objective.size() != static_cast<std::size_t>(nb) ||
      problem.rhs.size() != static_cast<std::size_t>(m_orig))
    throw InternalError("inconsistent SDP problem arrays");

  std::vector<int> sides;
  for (const auto& blk : problem.blocks) sides.push_back(blk.side);

  // Canonicalize rows; drop trivial ones; catch structurally contradictory
  // rows (empty or exactly duplicated lhs with conflicting rhs) up front so
  // the iterative solve never sees a singular system it cannot handle.
  std::vector<std::vector<SparseSym>> rows;
  std::vector<double> rhs;
  std::vector<int> orig_index;
  std::vector<double> row_scale;
  std::map<std::string, int> seen;

  auto make_result_shell = [&](SdpStatus st) {
    SdpSolution sol;
    sol.status = st;
    for (int k = 0; k < nb; ++k) {
      sol.X.push_back(Eigen::MatrixXd::Zero(sides[k], sides[k]));
      sol.S.push_back(Eigen::MatrixXd::Zero(sides[k], sides[k]));
    }
    sol.y = Eigen::VectorXd::Zero(m_orig);
    return sol;
  };

  for (int i = 0; i < m_orig; ++i) {
    std::vector<SparseSym> row = problem.constraints[i];
    for (auto& s : row) s.canonicalize();
    bool empty = true;
    for (const auto& s : row)
      if (!s.empty()) empty = false;
    if (empty) {
      if (problem.rhs[i] == 0.0) continue;  // 0 = 0, nothing to do
      // 0 = b with b != 0: trivially infeasible with an explicit ray.
      SdpSolution sol = make_result_shell(SdpStatus::Infeasible);
      FarkasCertificate cert;
      cert.y = Eigen::VectorXd::Zero(m_orig);
      cert.y[i] = 1.0 / problem.rhs[i];
      cert.psd_violation = 0.0;
      sol.farkas = std::move(cert);
      sol.detail = "constraint row has empty lhs and nonzero rhs";
      return sol;
    }
    std::string sig = row_signature(row);
    auto it = seen.find(sig);
    if (it != seen.end()) {
      int j = it->second;
      double db = problem.rhs[i] - problem.rhs[orig_index[j]];
      if (db == 0.0) continue;  // exact duplicate row
      SdpSolution sol = make_result_shell(SdpStatus::Infeasible);
      FarkasCertificate cert;
      cert.y = Eigen::VectorXd::Zero(m_orig);
      cert.y[i] = 1.0 / db;
      cert.y[orig_index[j]] = -1.0 / db;
      cert.psd_violation = 0.0;
      sol.farkas = std::move(cert);
      sol.detail = "duplicate constraint rows with conflicting rhs";
      return sol;
    }
    seen.emplace(std::move(sig), static_cast<int>(rows.size()));

    double fn = 0.0;
    for (const auto& s : row) {
      double f = s.frobenius_norm();
      fn = std::sqrt(fn * fn + f * f);
    }
    double sc = fn > 0.0 ? fn : 1.0;
    for (auto& s : row)
      for (auto& e : s.entries) e.value /= sc;
    rows.push_back(std::move(row));
    rhs.push_back(problem.rhs[i] / sc);
    orig_index.push_back(i);
    row_scale.push_back(sc);
  }

  std::vector<SparseSym> C = problem.objective;
  for (auto& c : C) c.canonicalize();

  const int m = static_cast<int>(rows.size());
  if (m == 0) {
    // No constraints: X = 0 is optimal iff C is psd; otherwise the most
    // negative eigendirection is an improving ray.
    SdpSolution sol = make_result_shell(SdpStatus::Feasible);
    double lmin = 0.0;
    int bad_block = -1;
    Eigen::VectorXd bad_vec;
    for (int k = 0; k < nb; ++k) {
      Eigen::MatrixXd Ck = C[k].dense(sides[k]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ck);
      if (es.eigenvalues().minCoeff() < lmin) {
        lmin = es.eigenvalues().minCoeff();
        bad_block = k;
        bad_vec = es.eigenvectors().col(0);
      }
      sol.S[k] = Ck;
    }
    if (lmin < -opts.eig_tol) {
      sol.status = SdpStatus::Unbounded;
      ImprovingRay ray;
      for (int k = 0; k < nb; ++k)
        ray.X.push_back(Eigen::MatrixXd::Zero(sides[k], sides[k]));
      ray.X[bad_block] = bad_vec * bad_vec.transpose() / (-lmin);
      ray.eq_violation = 0.0;
      sol.ray = std::move(ray);
      sol.detail = "objective not psd with no constraints";
      return sol;
    }
    return sol;
  }

  Eigen::Map<const Eigen::VectorXd> bt(rhs.data(), m);
  HsdSolver solver(sides, rows, Eigen::VectorXd(bt), C, opts);
  SdpSolution inner = solver.run();

  // Map dual variables back onto the original rows (dropped rows get 0).
  SdpSolution sol = std::move(inner);
  Eigen::VectorXd y_full = Eigen::VectorXd::Zero(m_orig);
  for (int i = 0; i < m; ++i) y_full[orig_index[i]] = sol.y[i] / row_scale[i];
  sol.y = std::move(y_full);
  if (sol.farkas) {
    Eigen::VectorXd f_full = Eigen::VectorXd::Zero(m_orig);
    for (int i = 0; i < m; ++i) f_full[orig_index[i]] = sol.farkas->y[i] / row_scale[i];
    double bf = 0.0;
    for (int i = 0; i < m_orig; ++i) bf += problem.rhs[i] * f_full[i];
    if (bf > 0.0) f_full /= bf;  // renormalize in original scaling
    sol.farkas->y = std::move(f_full);
  }
  return sol;
}

void write_sdpa(const SdpProblem& problem, std::ostream& os) {
  char buf[128];
  const int m = static_cast<int>(problem.constraints.size());
  os << m << "\n";
  os << problem.blocks.size() << "\n";
  for (std::size_t k = 0; k < problem.blocks.size(); ++k)
    os << problem.blocks[k].side << (k + 1 < problem.blocks.size() ? " " : "\n");
  if (problem.blocks.empty()) os << "\n";
  for (int i = 0; i < m; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", problem.rhs[i]);
    os << buf << (i + 1 < m ? " " : "");
  }
  os << "\n";
  auto emit = [&](int matno, const std::vector<SparseSym>& mats, double scale) {
    for (std::size_t k = 0; k < mats.size(); ++k) {
      SparseSym s = mats[k];
      s.canonicalize();
      for (const auto& e : s.entries) {
        std::snprintf(buf, sizeof buf, "%d %zu %d %d %.17g", matno, k + 1,
                      e.row + 1, e.col + 1, scale * e.value);
        os << buf << "\n";
      }
    }
  };
  emit(0, problem.objective, -1.0);  // F_0 = -C
  for (int i = 0; i < m; ++i) emit(i + 1, problem.constraints[i], 1.0);
}

}  // namespace posmod
