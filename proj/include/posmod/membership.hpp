#pragma once

#include <optional>
#include <string>
#include <vector>

#include "posmod/cone.hpp"

namespace posmod {

enum class MembershipStatus { Member, NotMember, Unknown };

std::string to_string(MembershipStatus s);

// Constructive witness that `target` lies in the degree-d truncation:
// target = sum over blocks of  b_d' G_e b_d * product_e  with every G_e psd.
struct GramCertificate {
  ConeDescription cone;
  int d = 0;
  QPoly target;
  std::vector<Monomial> basis;
  std::vector<std::string> block_labels;
  std::vector<QPoly> products;
  std::vector<Eigen::MatrixXd> blocks;
};

// Linear functional separating `target` from the degree-d truncation:
// nonnegative on the truncation (all localized matrices psd), negative on
// the target.  `monomials` indexes `y`; `normalized` says y_0 == 1.
struct DualFunctional {
  ConeDescription cone;
  int d = 0;
  QPoly target;
  std::vector<Monomial> monomials;
  Eigen::VectorXd y;
  bool normalized = false;
  double value = 0.0;   // functional applied to the target
  double margin = 0.0;  // |value| / (1 + max_m |y_m|)
};

struct VerifyOptions {
  double residual_tol = 1e-6;
  double eig_tol = 1e-8;
  double margin_threshold = 1e-6;
  std::int64_t max_denominator = 1000000;
};

struct VerificationReport {
  bool ok = false;
  bool exact = false;       // every psd check closed in exact arithmetic
  double residual = 0.0;    // max |coefficient| of reconstruction error
  double min_eigenvalue = 0.0;  // worst block eigenvalue (float path)
  double value = 0.0;           // functional checks: L(target)
  double margin = 0.0;
  std::string detail;
};

// Re-derives everything the certificate claims: rationalizes each Gram block
// (denominators up to max_denominator), proves psd by fraction-free
// elimination with max-diagonal pivoting, and reconstructs the target
// coefficient-by-coefficient.  Falls back to a float eigenvalue check for
// blocks whose rounding breaks psd.
VerificationReport verify_certificate(const GramCertificate& cert,
                                      const VerifyOptions& opt = {});

// Recomputes the localized matrices and the functional value from scratch
// and checks psd-ness and the separation margin.
VerificationReport verify_functional(const DualFunctional& fun,
                                     const VerifyOptions& opt = {});

struct MembershipOptions {
  SdpOptions sdp;
  VerifyOptions verify;
  // Sampling used to anchor a separating ray at a point of the set.
  int sample_attempts = 2000;
  unsigned sample_seed = 20240901u;
};

struct MembershipReport {
  MembershipStatus status = MembershipStatus::Unknown;
  int d = 0;
  std::optional<GramCertificate> certificate;  // set when Member
  std::optional<DualFunctional> separator;     // set when NotMember
  VerificationReport check;                    // for whichever witness is set
  std::string detail;
  int iterations = 0;  // interior-point iterations spent, all solves
};

// Decision procedure for one truncation level.  MEMBER and NOT_MEMBER are
// only ever reported with an independently verified witness attached;
// anything marginal comes back UNKNOWN with diagnostics.
MembershipReport test_membership(const ConeDescription& cone,
                                 const QPoly& target, int d,
                                 const MembershipOptions& opt = {});

struct MinimalDegreeResult {
  std::optional<int> d_min;       // least level with a verified certificate
  int d_searched = 0;             // inclusive upper end of the scan
  std::vector<int> impossible;    // levels that cannot match the degree
  std::vector<std::pair<int, MembershipStatus>> statuses;
  bool marginal = false;  // some level below d_min came back UNKNOWN
  std::optional<MembershipReport> witness;  // report at d_min
};

MinimalDegreeResult minimal_degree(const ConeDescription& cone,
                                   const QPoly& target, int d_max = 10,
                                   const MembershipOptions& opt = {});

struct ClosureProbePoint {
  double epsilon = 0.0;
  MembershipStatus status = MembershipStatus::Unknown;
  std::optional<int> d_min;
};

struct ClosureProbeReport {
  QPoly perturbation;
  std::vector<ClosureProbePoint> points;
  bool all_member = false;  // every probed perturbation was certified
};

// Tests target + epsilon * perturbation for each epsilon in the schedule
// (which must be positive and strictly decreasing), searching levels up to
// d_max.  Certifying every perturbed target places the target in the
// sequential closure of the union of the truncations.
ClosureProbeReport closure_probe(const ConeDescription& cone,
                                 const QPoly& target,
                                 const QPoly& perturbation,
                                 const std::vector<double>& epsilons,
                                 int d_max = 10,
                                 const MembershipOptions& opt = {});

// Internal reuse: build a certificate shell from solved Gram blocks.
GramCertificate make_certificate(const ConeDescription& cone,
                                 const ConeAssembly& assembly,
                                 const QPoly& target,
                                 const std::vector<Eigen::MatrixXd>& blocks);

// Internal reuse: turn level-system dual multipliers into a pseudo-moment
// functional (y_0 = 1, remaining moments are the negated multipliers).
DualFunctional moments_from_level_dual(const ConeDescription& cone,
                                       const ConeAssembly& assembly,
                                       const QPoly& target,
                                       const Eigen::VectorXd& dual_y);

// Recomputes value, margin, and the normalization flag after the moment
// entries of a functional were edited in place.
void refresh_functional(DualFunctional& fun);

}  // namespace posmod
