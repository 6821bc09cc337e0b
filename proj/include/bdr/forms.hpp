#pragma once

#include "bdr/scalar_field.hpp"

#include <map>
#include <vector>

namespace bdr {

struct FaceKey {
  int axis, side;  // side 0 = lower face, 1 = upper face
  bool operator<(const FaceKey& o) const {
    return axis != o.axis ? axis < o.axis : side < o.side;
  }
};

/// Differential k-form on an n-dimensional window: one coefficient field
/// per increasing multi-index (lexicographic). Boundary traces, when known
/// exactly, are carried along explicitly so that relative conditions can be
/// asserted as equalities rather than tolerances.
class DifferentialForm {
 public:
  int n = 0, k = 0;
  std::vector<ScalarField> comps;
  std::map<FaceKey, std::vector<ScalarField>> traces;  // tangential comps on the face grid

  DifferentialForm() = default;
  DifferentialForm(int n_, int k_, const Grid& grid, VecXi period = VecXi());

  const Grid& grid() const { return comps.at(0).grid; }
  VecXi period() const { return comps.at(0).period; }
  bool has_gen() const;
  const std::vector<std::vector<int>>& multi_indices() const;
  int comp_of(const std::vector<int>& idx) const { return combination_index(n, idx); }
};

DifferentialForm operator+(const DifferentialForm& a, const DifferentialForm& b);
DifferentialForm operator-(const DifferentialForm& a, const DifferentialForm& b);
DifferentialForm operator*(Real c, const DifferentialForm& f);

/// Exterior derivative by finite differences of the stated order.
DifferentialForm exterior_derivative(const DifferentialForm& w, int fd_order = 2);

/// Exterior derivative through the coefficient generators (exact up to
/// sampling); used for construction, with the finite-difference route kept
/// as the independent verifier.
DifferentialForm exterior_derivative_analytic(const DifferentialForm& w);

/// Pointwise Euclidean norm of the coefficient vector, maximized over the
/// grid. Exact for the alternating-form operator norm in degrees n and n-1;
/// the same convention is applied in other degrees (comass-equivalent).
Real sup_norm_form(const DifferentialForm& w);

/// Pullback by the deck translation g (ambient integer vector):
/// coefficients c(x) -> c(x + g). Sample-exact.
DifferentialForm pullback_translation(const DifferentialForm& w, const VecXi& g);

/// Affine tube x = A q + b from Q = (0,1)^n into the model window; det A > 0,
/// lower third (q_n < 1/3) lands in the declared source cell, upper third in
/// the declared target cell.
struct TubeEmbedding {
  MatXr A;
  VecXr b;
  Box source_cell, target_cell;

  MatXr Ainv;
  Real det = 0;

  void finalize();  // computes Ainv/det, validates orientation and thirds
  Box image_box(const Box& q_region) const;
};

/// Extend-by-zero pushforward (theta^{-1})^* of a compactly supported form
/// on Q. Coefficients come out in closed form (the input must carry
/// generators); degrees 0, n-1 and n are supported.
DifferentialForm pushforward_tube(const DifferentialForm& nu, const TubeEmbedding& theta,
                                  const Grid& window, const VecXi& period = VecXi());

/// Tangential restriction to a window face, as a form on the face grid.
/// Uses, in order: an explicit trace, the generators, an exact-zero margin,
/// and finally one-sided extrapolation (the only approximate route).
DifferentialForm face_restriction(const DifferentialForm& w, int axis, int side);

/// True when both traces on the given axis vanish identically.
bool is_relative(const DifferentialForm& w, int axis);

/// a += w * b with b's window contained in a's (sample-aligned); generators
/// are not combined (accumulators keep their own expression ledger).
void accumulate(DifferentialForm& a, const DifferentialForm& b, Real w = 1);

/// Zero form of the same shape.
DifferentialForm zero_like(const DifferentialForm& w);

/// Drop the generator pointers (samples only).
void strip_generators(DifferentialForm& w);

}  // namespace bdr
