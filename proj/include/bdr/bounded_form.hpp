#pragma once

#include "bdr/forms.hpp"
#include "bdr/model.hpp"

#include <optional>
#include <random>

namespace bdr {

/// Grid over the fundamental window of a model: one lattice cell per
/// periodic axis (the full circle for Z/m), the whole [0,1] fiber for the
/// strip's bounded axis.
Grid fundamental_grid(const Model& model, int N);

/// Grid over the cells [-W, W] of the lattice axes (circle: the whole M).
Grid window_grid(const Model& model, int N, int W);

/// Bounded form on a model space in the lattice-periodic-plus-deviation
/// family: the only family the class maps need, and one that keeps every
/// G-sum finitely representable with zero truncation error.
struct BoundedForm {
  Model model;
  std::optional<DifferentialForm> periodic;   // on fundamental_grid, periodic axes marked
  std::optional<DifferentialForm> deviation;  // zero-extended window

  int degree() const;
  int N() const;
  bool has_gen() const;
};

BoundedForm operator+(const BoundedForm& a, const BoundedForm& b);
BoundedForm operator-(const BoundedForm& a, const BoundedForm& b);
BoundedForm operator*(Real c, const BoundedForm& f);

BoundedForm pullback_translation(const BoundedForm& w, const GroupVec& g);
BoundedForm exterior_derivative_analytic(const BoundedForm& w);
BoundedForm exterior_derivative(const BoundedForm& w, int fd_order = 2);
Real sup_norm_bounded(const BoundedForm& w);

/// Combined ambient-space expression of one component (periodic part folded
/// over the lattice plus the deviation part).
ExprPtr component_expr(const BoundedForm& w, int comp);

/// Sample the total form (periodic overlay plus deviation) onto a window.
DifferentialForm sample_on_window(const BoundedForm& w, const Grid& grid);

// ---- builders ------------------------------------------------------------

/// Top form: weight * unit-integral tensor mollifier bump supported in the
/// given cell (strip: vertical support inside (0,1)).
BoundedForm cell_bump_top(const Model& model, int N, const GroupVec& cell, Real weight);

/// Deviation top form with several weighted cell bumps.
BoundedForm cell_bumps_top(const Model& model, int N,
                           const std::vector<std::pair<GroupVec, Real>>& cells);

/// Lattice-periodic comb of unit bumps, scaled.
BoundedForm periodic_comb_top(const Model& model, int N, Real weight);

struct RandomFormOptions {
  bool with_periodic = true;
  int deviation_cells = 3;
  int window = 2;        // deviation cells within [-window, window]
  Real zero_cell_mass_periodic = false;  // make the periodic part integrate to 0 per cell
};

/// Seeded random top form in the family (generators attached).
BoundedForm random_top_form(const Model& model, int N, std::mt19937_64& rng,
                            const RandomFormOptions& opts = {});

/// Seeded random zero-class top form (pure deviation).
BoundedForm random_zero_class_top(const Model& model, int N, std::mt19937_64& rng,
                                  int cells = 3, int window = 2);

/// Random bounded (n-1)-form on the strip; relative = boundary pullback
/// forced to vanish.
BoundedForm random_strip_oneform(int N, std::mt19937_64& rng, bool relative,
                                 bool with_deviation = true);

/// Tangential restriction of a strip (n-1)-form to one boundary line,
/// with the induced boundary orientation folded in (lower face +, upper
/// face -). Returns a top form on the Line model.
BoundedForm boundary_restriction_model(const BoundedForm& w, int side);

}  // namespace bdr
