#include "posmod/fibre.hpp"

#include <cmath>
#include <set>
#include <utility>

#include "posmod/errors.hpp"
#include "posmod/parallel.hpp"

namespace posmod {

std::string to_string(FibreStyle s) {
  return s == FibreStyle::Ideal ? "ideal" : "subst";
}

std::vector<double> chebyshev_grid(double lo, double hi, int n) {
  if (n < 1) throw Error("grid needs at least one point");
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error("grid range must be finite with lo <= hi");
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  if (n == 1) return {mid};
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = n - 1; j >= 0; --j) {
    double t = std::cos(j * M_PI / (n - 1));
    if (std::abs(t) < 1e-15) t = 0.0;  // keep odd grids exactly symmetric
    out.push_back(mid + half * t);
  }
  return out;
}

namespace {

// Bindings var-name -> exact value for substitution-style fibres; validates
// that every bounded polynomial is a distinct coordinate variable.
std::map<std::string, Rational> substitution_bindings(
    const FibreSpec& spec, const std::vector<double>& values,
    const VarList& vars) {
  std::map<std::string, Rational> bindings;
  for (std::size_t i = 0; i < spec.bounded.size(); ++i) {
    const QPoly& b = spec.bounded[i].poly;
    std::string name;
    if (b.terms().size() == 1) {
      const auto& [mono, c] = *b.terms().begin();
      if (mono.degree() == 1 && c == 1) {
        for (std::size_t v = 0; v < mono.exps.size(); ++v)
          if (mono.exps[v] == 1) name = vars[v];
      }
    }
    if (name.empty())
      throw Error(
          "substitution-style fibres need each bounded quantity to be a "
          "plain variable; use ideal style instead");
    if (!bindings.emplace(name, rational_from_double(values[i])).second)
      throw Error("variable '" + name + "' is pinned twice");
  }
  return bindings;
}

std::vector<QPoly> tidy_generators(std::vector<QPoly> gens) {
  std::vector<QPoly> out;
  for (auto& g : gens) {
    if (g.is_zero()) continue;  // vacuous inequality
    if (g.degree() == 0 && g.terms().begin()->second > 0)
      continue;  // positive constants generate nothing new
    bool dup = false;
    for (const auto& kept : out)
      if (kept == g) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(g));
  }
  return out;
}

void check_values(const FibreSpec& spec, const std::vector<double>& values) {
  if (values.size() != spec.bounded.size())
    throw Error("fibre point has the wrong number of coordinates");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("fibre point must be finite");
}

}  // namespace

ConeDescription fibre_cone(const ConeDescription& cone, const FibreSpec& spec,
                           const std::vector<double>& values,
                           FibreStyle style) {
  check_values(spec, values);
  ConeDescription out;
  out.mode = cone.mode;
  out.name = cone.name;

  if (style == FibreStyle::Ideal) {
    out.vars = cone.vars;
    out.generators = cone.generators;
    for (std::size_t i = 0; i < spec.bounded.size(); ++i) {
      if (spec.bounded[i].poly.vars() != cone.vars)
        throw VarMismatchError(
            "bounded quantity does not share the cone's variables");
      const QPoly r =
          QPoly::constant(cone.vars, rational_from_double(values[i]));
      out.generators.push_back(spec.bounded[i].poly - r);
      out.generators.push_back(r - spec.bounded[i].poly);
    }
    out.generators = tidy_generators(std::move(out.generators));
    return out;
  }

  const auto bindings = substitution_bindings(spec, values, cone.vars);
  std::vector<QPoly> gens;
  gens.reserve(cone.generators.size());
  for (const auto& g : cone.generators) gens.push_back(g.substitute(bindings));
  if (gens.empty()) {
    VarList reduced;
    for (const auto& v : cone.vars)
      if (!bindings.count(v)) reduced.push_back(v);
    out.vars = reduced;
  } else {
    out.vars = gens.front().vars();
  }
  out.generators = tidy_generators(std::move(gens));
  return out;
}

QPoly fibre_target(const QPoly& target, const FibreSpec& spec,
                   const std::vector<double>& values, FibreStyle style) {
  check_values(spec, values);
  if (style == FibreStyle::Ideal) return target;
  const auto bindings = substitution_bindings(spec, values, target.vars());
  return target.substitute(bindings);
}

FibreScanReport fibre_scan(const ConeDescription& cone, const FibreSpec& spec,
                           const std::vector<QPoly>& targets,
                           const FibreScanOptions& opt) {
  if (spec.bounded.empty())
    throw Error("fibre scan needs at least one bounded quantity");
  if (targets.empty()) throw Error("fibre scan needs at least one target");
  if (opt.d < 0) throw Error("fibre scan level must be nonnegative");
  if (opt.minimal_degrees && opt.d > opt.d_max)
    throw Error("fibre scan level exceeds the minimal-degree search cap");

  FibreScanReport rep;
  rep.style = opt.style;
  rep.d = opt.d;
  rep.targets = targets;

  std::size_t total = 1;
  for (const auto& b : spec.bounded) {
    std::vector<double> g = b.grid;
    if (g.empty()) g = chebyshev_grid(b.lo, b.hi, opt.grid_points);
    for (double v : g)
      if (!std::isfinite(v)) throw Error("grid values must be finite");
    if (g.empty()) throw Error("grid needs at least one point");
    rep.grids.push_back(std::move(g));
    total *= rep.grids.back().size();
    if (total > 100000) throw CapacityError("fibre grid has over 100000 points");
  }

  const std::size_t axes = rep.grids.size();
  rep.points.resize(total);
  parallel_for(total, [&](std::size_t p) {
    FibrePointResult& pt = rep.points[p];
    pt.values.resize(axes);
    std::size_t rem = p;
    for (std::size_t a = axes; a-- > 0;) {
      const std::size_t n = rep.grids[a].size();
      pt.values[a] = rep.grids[a][rem % n];
      rem /= n;
    }
    const ConeDescription fc = fibre_cone(cone, spec, pt.values, opt.style);
    for (const auto& g : fc.generators)
      pt.fibre_generators.push_back(g.str());
    for (const auto& t : targets) {
      const QPoly ft = fibre_target(t, spec, pt.values, opt.style);
      if (opt.minimal_degrees) {
        MinimalDegreeResult md =
            minimal_degree(fc, ft, opt.d_max, opt.membership);
        pt.d_min.push_back(md.d_min);
        MembershipStatus st = MembershipStatus::Unknown;
        if (md.d_min.has_value() && *md.d_min <= opt.d) {
          st = MembershipStatus::Member;
        } else {
          for (const auto& [dd, s] : md.statuses)
            if (dd == opt.d) st = s;
        }
        pt.status.push_back(st);
      } else {
        pt.status.push_back(
            test_membership(fc, ft, opt.d, opt.membership).status);
        pt.d_min.emplace_back();
      }
    }
  });

  rep.all_member = true;
  for (const auto& pt : rep.points)
    for (const auto& st : pt.status)
      if (st != MembershipStatus::Member) rep.all_member = false;
  return rep;
}

BoundsCheckReport check_bounded_membership(const ConeDescription& cone,
                                           const FibreSpec& spec, int d,
                                           const MembershipOptions& opt) {
  if (spec.bounded.empty())
    throw Error("bounds check needs at least one bounded quantity");
  BoundsCheckReport rep;
  rep.d = d;
  for (std::size_t i = 0; i < spec.bounded.size(); ++i) {
    const auto& b = spec.bounded[i];
    if (!(b.lo <= b.hi)) throw Error("bounded quantity has an empty range");
    if (b.poly.vars() != cone.vars)
      throw VarMismatchError(
          "bounded quantity does not share the cone's variables");
    const QPoly hi = QPoly::constant(cone.vars, rational_from_double(b.hi));
    const QPoly lo = QPoly::constant(cone.vars, rational_from_double(b.lo));
    BoundsCheckItem upper;
    upper.index = i;
    upper.side = "upper";
    upper.target = hi - b.poly;
    rep.items.push_back(std::move(upper));
    BoundsCheckItem lower;
    lower.index = i;
    lower.side = "lower";
    lower.target = b.poly - lo;
    rep.items.push_back(std::move(lower));
  }
  parallel_for(rep.items.size(), [&](std::size_t k) {
    rep.items[k].report =
        test_membership(cone, rep.items[k].target, d, opt);
  });
  rep.all_ok = true;
  for (const auto& item : rep.items)
    if (item.report.status != MembershipStatus::Member) rep.all_ok = false;
  return rep;
}

}  // namespace posmod
