#pragma once

#include "bdr/expr.hpp"
#include "bdr/grid.hpp"

namespace bdr {

/// Grid-sampled scalar function with a declared extension mode and an
/// optional analytic generator for exact off-grid evaluation.
///
/// period[a] = 0 : zero extension beyond the window on axis a
/// period[a] = p : lattice-periodic with period p (window must cover one period)
class ScalarField {
 public:
  Grid grid;
  ArrayXr samples;
  VecXi period;
  ExprPtr gen;

  ScalarField() = default;
  ScalarField(Grid g, VecXi period_ = VecXi());
  ScalarField(Grid g, ExprPtr generator, VecXi period_ = VecXi());

  int dim() const { return grid.dim(); }
  bool periodic(int a) const { return period.size() > 0 && period[a] > 0; }

  /// Sample lookup by global step index; wraps periodic axes, zero outside.
  Real value_at_steps(VecXi t) const;

  /// Fill samples from the generator.
  void resample();

  void require_same_layout(const ScalarField& o, const char* what) const;
};

// arithmetic (same grid layout; generators combine when both present)
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(Real c, const ScalarField& f);

/// Pullback by the deck translation g (in cells): result(x) = f(x + g).
/// Exact index shift; periodic axes rotate samples in place.
ScalarField shift_field(const ScalarField& f, const VecXi& g_cells);

/// Definite integral over a sub-box. Fields with a generator use composite
/// Simpson at the grid resolution (O(h^4)); sampled fields use the midpoint
/// rule with fractional weights for cells straddling the region boundary.
/// A region outside the window contributes zero under zero extension; an
/// empty region is an error.
Real integrate(const ScalarField& f, const Box& region);

/// High-accuracy quadrature of a generator over a box (composite
/// Gauss-Legendre, panels aligned to unit cells). Used by the class-level
/// maps, whose tolerances sit far below Simpson's O(h^4).
Real integrate_hi(const FieldExpr& e, const Box& region, int panels_per_unit = 8, int deg = 12);
Real integrate_hi(const ScalarField& f, const Box& region);

/// Running integral H(x) = int_0^{x_axis} f along one axis, from the lower
/// window face. order 2 = trapezoid (default); order 4 adds the
/// Euler-Maclaurin endpoint-slope correction.
ScalarField cumulative_integral(const ScalarField& f, int axis, int order = 2);

/// Integrate out the trailing axes, keeping the first `keep` >= 1 axes
/// (midpoint rule; positive weights summing to the axis length, so
/// sup-norm contraction holds samplewise).
ScalarField trailing_integral(const ScalarField& f, int keep);

/// Total integral over the whole window by the same midpoint rule.
Real integrate_samples(const ScalarField& f);

/// Centered finite differences of the stated order (2, 4, 6); one-sided
/// O(h^2) stencils at zero-extension window edges.
ScalarField partial_derivative(const ScalarField& f, int axis, int order = 2);

/// Exact derivative sampled from the generator.
ScalarField partial_derivative_analytic(const ScalarField& f, int axis);

Real sup_norm(const ScalarField& f);

/// f += w * e, touching only the samples inside the support of e.
void add_sampled(ScalarField& f, const FieldExpr& e, Real w = 1);

/// Largest margin (in samples) on which the field vanishes exactly,
/// measured from the given face.
Index zero_margin(const ScalarField& f, int axis, int side);

}  // namespace bdr
