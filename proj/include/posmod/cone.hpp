#pragma once

#include <map>
#include <string>
#include <vector>

#include "posmod/polynomial.hpp"
#include "posmod/sdp.hpp"

namespace posmod {

// Which closure operation generates the cone from its generator list.
enum class ConeMode {
  QM,  // sums sigma_0 + sum_i sigma_i g_i with sigma SOS
  PO,  // sums over all subset products of the generators
};

std::string to_string(ConeMode mode);

struct ConeDescription {
  VarList vars;
  ConeMode mode = ConeMode::QM;
  std::vector<QPoly> generators;
  std::string name;  // optional display label

  int nvars() const { return static_cast<int>(vars.size()); }
};

// One summand family of the cone: a product of generators together with a
// printable label ("1", "g2", "g1*g3", ...).
struct ProductEntry {
  QPoly poly;
  std::string label;
};

// QM: {1, g_1, ..., g_s}.  PO: all 2^s subset products, subsets enumerated as
// a binary counter with g_1 in the least significant bit; the empty subset
// (constant 1) comes first.  Throws CapacityError for PO with more than 12
// generators.
std::vector<ProductEntry> product_set(const ConeDescription& cone);

// All monomials in `nvars` variables of total degree <= d, graded order,
// constant first.
std::vector<Monomial> monomial_basis(int nvars, int d);

// Pointwise test "x satisfies every generator inequality g_i(x) >= -tol".
class SemialgebraicPredicate {
 public:
  explicit SemialgebraicPredicate(const ConeDescription& cone);
  bool contains(const std::vector<double>& point, double tol = 1e-9) const;
  int nvars() const { return nvars_; }

 private:
  int nvars_;
  std::vector<Poly> generators_;
};

// A degree-d truncation, compiled to a block SDP.  Every PSD block is the
// Gram matrix of one product entry over the monomial basis of degree <= d;
// every equality row matches one coefficient of the target polynomial.
struct ConeAssembly {
  SdpProblem sdp;
  std::vector<Monomial> basis;              // Gram row/column monomials
  std::vector<QPoly> products;              // per block, exact coefficients
  std::vector<std::string> product_labels;  // per block
  int d = 0;                                // truncation level
  int degree_bound = 0;                     // highest matchable total degree
  std::vector<Monomial> row_monomials;      // SDP row i <-> monomial
  Rational constant_coeff;                  // target's constant coefficient
  bool has_constant_row = false;            // membership systems only
};

// Feasibility system for "f lies in the degree-d truncation": zero objective,
// one equality per monomial of degree <= degree_bound (identically-zero rows
// with zero right-hand side are dropped).  Throws DegreeError when deg f
// exceeds the matchable bound, with the smallest admissible d attached.
ConeAssembly assemble_membership_system(const ConeDescription& cone,
                                        const QPoly& target, int d);

// Level system for "sup r : target - r lies in the degree-d truncation".
// Identical rows except the constant-coefficient row, which becomes the
// objective: the optimum value equals constant_coeff - optimal objective.
// The dual multipliers, negated and extended by y_0 = 1, form a pseudo-moment
// vector whose localized matrices are the dual slack blocks.
ConeAssembly assemble_level_system(const ConeDescription& cone,
                                   const QPoly& target, int d);

// Localized matrix of a linear functional: entry (i,j) applies the moment
// vector to product * basis[i] * basis[j].  Monomials absent from `moments`
// count as zero.
Eigen::MatrixXd localized_moment_matrix(
    const QPoly& product, const std::vector<Monomial>& basis,
    const std::map<Monomial, double, GradedLexLess>& moments);

}  // namespace posmod
