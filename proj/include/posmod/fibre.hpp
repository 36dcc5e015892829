#pragma once

#include <optional>
#include <string>
#include <vector>

#include "posmod/membership.hpp"

namespace posmod {

// How a fibre pins a bounded quantity to a value:
//   Ideal         append both inequalities b - r >= 0 and r - b >= 0;
//   Substitution  replace the (coordinate) variable by the value and drop it.
enum class FibreStyle { Ideal, Substitution };

std::string to_string(FibreStyle s);

// One quantity that is bounded on the set, together with its range and an
// optional explicit scan grid (ascending; empty means the default grid).
struct BoundedQuantity {
  QPoly poly;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> grid;
};

struct FibreSpec {
  std::vector<BoundedQuantity> bounded;
};

// Extrema-included cosine-spaced grid on [lo, hi], ascending, n >= 1 points.
std::vector<double> chebyshev_grid(double lo, double hi, int n);

// The cone of the fibre at `values` (one value per bounded quantity).
// Generators that become identically zero or positive constants are dropped,
// and exact duplicates are merged.  Substitution style requires every
// bounded polynomial to be a plain coordinate variable.
ConeDescription fibre_cone(const ConeDescription& cone, const FibreSpec& spec,
                           const std::vector<double>& values,
                           FibreStyle style);

// The target as seen inside that fibre (substitution drops the pinned
// variables; ideal style leaves the target untouched).
QPoly fibre_target(const QPoly& target, const FibreSpec& spec,
                   const std::vector<double>& values, FibreStyle style);

struct FibreScanOptions {
  FibreStyle style = FibreStyle::Substitution;
  int d = 2;                     // truncation level tested at every fibre
  bool minimal_degrees = false;  // additionally search d_min per fibre
  int d_max = 10;                // search cap for minimal degrees
  int grid_points = 9;           // default grid size per axis
  MembershipOptions membership;
};

struct FibrePointResult {
  std::vector<double> values;  // one per bounded quantity
  std::vector<std::string> fibre_generators;
  std::vector<MembershipStatus> status;       // per target, at level d
  std::vector<std::optional<int>> d_min;      // per target (when searched)
};

struct FibreScanReport {
  FibreStyle style = FibreStyle::Substitution;
  int d = 0;
  std::vector<std::vector<double>> grids;  // per axis, ascending
  std::vector<QPoly> targets;
  std::vector<FibrePointResult> points;  // odometer order, first axis slowest
  bool all_member = false;  // every target MEMBER at every fibre, at level d
};

// Tests every target against the fibre cone at every grid point.  Points are
// processed in parallel (POSMOD_THREADS caps the workers) and reported in
// deterministic odometer order.
FibreScanReport fibre_scan(const ConeDescription& cone, const FibreSpec& spec,
                           const std::vector<QPoly>& targets,
                           const FibreScanOptions& opt = {});

struct BoundsCheckItem {
  std::size_t index = 0;     // which bounded quantity
  std::string side;          // "upper" or "lower"
  QPoly target;              // hi - b or b - lo
  MembershipReport report;
};

struct BoundsCheckReport {
  int d = 0;
  std::vector<BoundsCheckItem> items;
  bool all_ok = false;
};

// Certifies the scan hypotheses themselves: for each bounded quantity b with
// range [lo, hi], both hi - b and b - lo must lie in the degree-d truncation.
BoundsCheckReport check_bounded_membership(const ConeDescription& cone,
                                           const FibreSpec& spec, int d,
                                           const MembershipOptions& opt = {});

}  // namespace posmod
