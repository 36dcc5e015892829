#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace posmod {

// One symmetric coefficient matrix, stored sparsely as upper-triangle
// entries (row <= col).  Off-diagonal entries represent the symmetric pair.
struct SymEntry {
  int row;
  int col;
  double value;
};

struct SparseSym {
  std::vector<SymEntry> entries;

  void add(int r, int c, double v) {
    if (v == 0.0) return;
    if (r > c) std::swap(r, c);
    entries.push_back({r, c, v});
  }
  bool empty() const { return entries.empty(); }

  // Sorts by (row, col), merges duplicates, drops exact zeros.
  void canonicalize();

  Eigen::MatrixXd dense(int side) const;
  void add_scaled_to(Eigen::MatrixXd& target, double scale) const;
  // <A, X> for symmetric X (off-diagonal entries count twice).
  double inner(const Eigen::MatrixXd& X) const;
  double frobenius_norm() const;
};

struct SdpBlockInfo {
  std::string label;
  int side = 0;
};

// Standard primal form over a product of PSD cones:
//   minimize <C, X>  subject to  <A_i, X> = b_i (i = 1..m),  X psd.
// The dual reads  maximize b'y  s.t.  C - sum_i y_i A_i psd.
struct SdpProblem {
  std::vector<SdpBlockInfo> blocks;
  std::vector<SparseSym> objective;                 // one entry per block
  std::vector<std::vector<SparseSym>> constraints;  // [row][block]
  std::vector<double> rhs;

  int add_block(std::string label, int side) {
    blocks.push_back({std::move(label), side});
    objective.emplace_back();
    for (auto& row : constraints) row.emplace_back();
    return static_cast<int>(blocks.size()) - 1;
  }
  int add_constraint(double b) {
    constraints.emplace_back(blocks.size());
    rhs.push_back(b);
    return static_cast<int>(constraints.size()) - 1;
  }
  std::size_t num_constraints() const { return constraints.size(); }
  std::size_t num_blocks() const { return blocks.size(); }
};

enum class SdpStatus { Feasible, Infeasible, Unbounded, Unknown };

const char* to_string(SdpStatus s);

// Dual improving ray proving primal infeasibility:
//   sum_i y_i A_i is psd-negative (up to psd_violation) and b'y = 1.
struct FarkasCertificate {
  Eigen::VectorXd y;
  double psd_violation = 0.0;  // max over blocks of max(0, lambda_max(A*(y)))
};

// Primal improving ray proving dual infeasibility (unbounded objective):
//   X psd, A(X) ~ 0, <C, X> = -1.
struct ImprovingRay {
  std::vector<Eigen::MatrixXd> X;
  double eq_violation = 0.0;  // ||A(X)||_inf
};

struct SdpSolution {
  SdpStatus status = SdpStatus::Unknown;

  std::vector<Eigen::MatrixXd> X;  // primal blocks (valid when Feasible)
  Eigen::VectorXd y;               // dual multipliers per constraint row
  std::vector<Eigen::MatrixXd> S;  // dual slack blocks

  double primal_objective = 0.0;
  double dual_objective = 0.0;

  // Relative KKT residuals of the returned point.
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double complementarity = 0.0;

  int iterations = 0;
  std::optional<FarkasCertificate> farkas;  // set when Infeasible
  std::optional<ImprovingRay> ray;          // set when Unbounded
  std::string detail;                       // diagnostics, mainly for Unknown
};

struct SdpOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double eig_tol = 1e-8;
  int max_iters = 200;
};

// Dense primal-dual interior-point solve of the homogeneous self-dual
// embedding (Nesterov-Todd scaling, Mehrotra predictor-corrector, dense
// Cholesky on the Schur complement).  Single-threaded and deterministic:
// identical input yields identical output bits.  UNKNOWN is a first-class
// status; the caller decides what to do with it.
SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& opts = {});

// Plain-text export in the sparse SDPA layout, for cross-validation with
// external solvers.  Mapping: constraint matrices A_i and rhs b become the
// SDPA F_i/c data and -C becomes F_0, so the SDPA "dual" is this problem.
// Field order is fixed and values print with %.17g, so output is bit-exact
// for a given problem.
void write_sdpa(const SdpProblem& problem, std::ostream& os);

}  // namespace posmod
