#pragma once

#include <optional>
#include <string>
#include <vector>

#include "posmod/membership.hpp"

namespace posmod {

// How the strictly positive perturbation direction q is produced.
enum class PerturbationRecipe { Cylinder, MonomialSquares, User };

std::string to_string(PerturbationRecipe r);

struct Perturbation {
  QPoly q;
  PerturbationRecipe recipe = PerturbationRecipe::Cylinder;
  int certified_d = 0;  // level of the attached membership witness
  std::optional<GramCertificate> certificate;
};

// Cylinder: q = sum_{j=0..k} (v^{2j} + 1)/2 where v is `cylinder_var` (last
// variable when empty) and k is the objective's degree in v; certified by an
// explicit diagonal Gram matrix.  MonomialSquares: the sum of squares of all
// monomials up to half the objective's degree, certified by the identity
// Gram matrix.  User: the supplied polynomial, certified by a membership
// search (throws if no certificate is found).
Perturbation build_perturbation(const ConeDescription& cone,
                                const QPoly& objective,
                                PerturbationRecipe recipe,
                                const std::optional<QPoly>& user_q = {},
                                const std::string& cylinder_var = {},
                                const MembershipOptions& opt = {});

enum class LevelKind {
  Value,       // finite optimum, certificate attached
  Infeasible,  // no shift of the target fits the truncation (value -inf)
  Unbounded,   // every shift fits (value +inf)
  Unknown,
};

std::string to_string(LevelKind k);

struct LevelOptions {
  SdpOptions sdp;
  VerifyOptions verify;
  double backoff = 1e-7;  // distance the certificate retreats below the value
};

// Largest shift r such that target - r stays inside the degree-d truncation.
struct LevelResult {
  LevelKind kind = LevelKind::Unknown;
  double value = 0.0;        // midpoint estimate of sup r
  double primal_bound = 0.0; // certified: target - primal_bound is a member
  double dual_bound = 0.0;   // functional bound: sup r <= dual_bound
  bool primal_certified = false;
  bool dual_certified = false;
  std::optional<GramCertificate> certificate;  // witness at primal_bound
  std::optional<DualFunctional> moments;       // functional behind dual_bound
  int iterations = 0;
  std::string detail;
};

LevelResult solve_level(const ConeDescription& cone, const QPoly& target,
                        int d, const LevelOptions& opt = {});

struct HierarchyOptions {
  std::vector<double> epsilons;  // default 1, 1/2, ..., 1/6
  std::vector<int> degrees;      // default: from half the degree up to 8
  PerturbationRecipe recipe = PerturbationRecipe::Cylinder;
  std::optional<QPoly> user_q;
  std::string cylinder_var;      // cylinder recipe only; empty = last var
  double stabilize_tol = 1e-7;   // successive-level agreement threshold
  LevelOptions level;
  MembershipOptions membership;  // used when certifying a user perturbation
};

struct HierarchyCell {
  LevelKind kind = LevelKind::Unknown;
  double value = 0.0;
  double primal_bound = 0.0;
  double dual_bound = 0.0;
  bool certified = false;  // primal witness verified
};

struct HierarchyReport {
  QPoly objective;
  Perturbation perturbation;
  std::vector<double> epsilons;
  std::vector<int> degrees;
  std::vector<std::vector<HierarchyCell>> table;  // [epsilon][degree]
  // Per epsilon: first level whose value repeats the previous one within
  // stabilize_tol, and the value there.
  std::vector<std::optional<int>> stabilized_at;
  std::vector<double> per_epsilon;
  bool stabilized = false;  // every epsilon stabilized
  double estimate = 0.0;    // linear extrapolation of per_epsilon to 0
  std::string detail;
};

// Fills the whole epsilon-by-level table of perturbed shift optima (cells
// solved in parallel; POSMOD_THREADS caps the workers), marks where each
// epsilon run stabilizes, and extrapolates the per-epsilon values to an
// unperturbed estimate.
HierarchyReport run_hierarchy(const ConeDescription& cone,
                              const QPoly& objective,
                              const HierarchyOptions& opt = {});

struct GridOracleResult {
  bool feasible_found = false;
  double min_value = 0.0;
  std::vector<double> argmin;
  std::size_t samples_in_set = 0;
  std::size_t samples_total = 0;
};

// Brute-force check value: minimum of the objective over the grid points of
// a box that satisfy every generator inequality.  At least 10 points per
// axis.  feasible_found == false diagnoses an empty (or missed) set.
GridOracleResult grid_oracle(const ConeDescription& cone,
                             const QPoly& objective,
                             const std::vector<std::pair<double, double>>& box,
                             int points_per_axis = 10);

}  // namespace posmod
