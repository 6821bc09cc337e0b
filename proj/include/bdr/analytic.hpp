#pragma once

#include "bdr/core.hpp"

#include <functional>
#include <memory>

namespace bdr {

/// Smooth 1D profile with closed-form value and derivative and a
/// high-accuracy cumulative. Support is [a,b] (value exactly 0 outside);
/// profiles that never vanish use a = -inf / b = +inf.
struct Analytic1D {
  std::function<Real(Real)> f;
  std::function<Real(Real)> df;
  std::function<Real(Real)> F;  // cumulative from a; empty if not needed
  Real a = 0, b = 1;

  Real value(Real t) const { return f(t); }
  Real deriv(Real t) const { return df(t); }
  Real cumulative(Real t) const { return F(t); }
  bool has_cumulative() const { return static_cast<bool>(F); }
  bool bounded_support() const;
};

/// Normalized exp-based mollifier on (a,b): c * exp(-1/((t-a)(b-t))),
/// with c fixed so the integral is 1. Exposes the computed constants.
struct MollifierInfo {
  Real a, b;
  Real shape_mass;  // integral of the unnormalized shape
  Real sup;         // sup of the normalized bump (attained at the midpoint)
  Real dsup;        // sup of |derivative| of the normalized bump
};

Analytic1D mollifier_1d_profile(Real a, Real b);
const MollifierInfo& mollifier_info(Real a, Real b);

/// C-infinity step: 0 for t<=0, 1 for t>=1, E(t)/(E(t)+E(1-t)) between.
Analytic1D smoothstep_profile();

/// Smooth plateau: 0 outside (lo,hi), exactly 1 on [lo+rise, hi-fall],
/// smoothstep ramps in between.
Analytic1D plateau_profile(Real lo, Real rise, Real hi, Real fall);

/// Constant profile (unbounded support).
Analytic1D constant_profile(Real c);

/// value = F_up(t) - F_lo(t) for two mollifiers; derivative up - lo.
/// This is the axial factor of a tube primitive.
Analytic1D cumulative_difference_profile(const Analytic1D& up, const Analytic1D& lo);

/// Dense-scan oracle used by tests to re-derive the cached constants.
MollifierInfo mollifier_dense_scan(Real a, Real b, long samples);

namespace constants {
// Frozen by a high-precision refinement/dense-scan oracle run before the
// main build; tests re-derive them.
inline constexpr Real kMollifier01Mass = 0.0070298584066096562;
inline constexpr Real kMollifier01Sup = 2.6054065145200277;
inline constexpr Real kMollifier01DSup = 11.035565147939463;
inline constexpr Real kMollifier08Mass = 0.00049563294955960094;  // support (0.1, 0.9)
inline constexpr Real kMollifier08Sup = 3.8949269574249089;
inline constexpr Real kMollifier08DSup = 23.771678311932345;
inline constexpr Real kK2 = 8.7898539148498178;
inline constexpr Real kK3 = 157.30640201248697;
}  // namespace constants

}  // namespace bdr
