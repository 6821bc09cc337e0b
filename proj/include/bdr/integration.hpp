#pragma once

#include "bdr/bounded_form.hpp"
#include "bdr/ellinfty.hpp"

namespace bdr {

/// Compactly supported phi with unit orbit sums, the weight against which
/// forms are integrated per group element. Indicator mode is the
/// characteristic function of the fundamental cell; smooth mode carries a
/// partition-of-unity expression (and its per-patch pieces, used by the
/// transport machinery).
struct PartitionFunction {
  enum class Mode { Indicator, Smooth };
  Mode mode = Mode::Indicator;
  Model model;
  int N = 0;
  GroupVec shift;  // the applied L^1 action

  ExprPtr phi;  // smooth mode only
  Box support;  // ambient support box (cell-aligned hull)

  std::vector<ExprPtr> phi_i;  // smooth mode: lifted per-patch pieces
  std::vector<Box> phi_i_support;

  Real eval(const VecXr& x) const;  // pointwise value (indicator included)
};

PartitionFunction build_phi_indicator(const Model& model, int N);

/// Fixed Gauss-Legendre tensor rule over a unit cell (strip cells span the
/// whole fiber). All class-level quadratures run on these nodes, which
/// makes them cell-aligned, deterministic, and shift-covariant.
struct CellRule {
  int n = 0;
  std::vector<VecXr> locals;
  ArrayXr weights;
  static const CellRule& get(int n);
};

/// Lazily cached node-value tables of an expression over unit cells.
class ExprCellTab {
 public:
  ExprCellTab(ExprPtr e, int n) : e_(std::move(e)), rule_(&CellRule::get(n)) {}
  const ArrayXr& values(const VecXi& cell) const;
  const CellRule& rule() const { return *rule_; }

 private:
  ExprPtr e_;
  const CellRule* rule_;
  mutable std::map<std::vector<int>, ArrayXr> cache_;
};

/// g . phi (the L^1 action); exact cell-level shift.
PartitionFunction act_on_phi(const GroupVec& g, const PartitionFunction& phi);

/// sum_{g in window(R)} phi(x + g); equals 1 for valid phi at interior x.
Real orbit_sum(const PartitionFunction& phi, const VecXr& x, int R);

/// The integration map: g -> integral of phi . g^* omega. The result is an
/// exact EllInftyFn (background = periodic value, deviation = the finitely
/// many influenced cells; the circle gets all m values as deviation).
/// Throws window_error when the deviation influence escapes [-R,R]^d;
/// strict = false clips to the window instead (the values inside stay
/// exact, the packaging is no longer complete).
EllInftyFn integrate_phi(const PartitionFunction& phi, const BoundedForm& w, int R,
                         bool strict = true);

struct ClassDescriptor {
  Real fingerprint = 0;
  EllInftyFn rep;
};

/// Coinvariant class: fingerprint plus a representative.
ClassDescriptor class_of(const BoundedForm& w, const PartitionFunction& phi, int R);

struct PhiIndependenceReport {
  Real fingerprint_residual = 0;
  EllInftyFn snapped_difference;
  CoinvariantCertificate cert;
  bool validated = false;
};

/// Lemma-level phi independence: the difference of representatives is
/// certified trivial; a fingerprint residual beyond tol flags a quadrature
/// or construction bug.
PhiIndependenceReport check_phi_independence(const PartitionFunction& a,
                                             const PartitionFunction& b, const BoundedForm& w,
                                             int R, Real tol = 1e-9);

/// Exact equality of integrate(g . phi) and g . integrate(phi) on the
/// window (identical quadrature node pairings make this bitwise).
bool check_equivariance(const PartitionFunction& phi, const BoundedForm& w, const GroupVec& g,
                        int R);

struct StokesReport {
  Real interior_fingerprint = 0;
  Real boundary_fingerprint = 0;
  Real fingerprint_gap = 0;
  EllInftyFn snapped_difference;
  CoinvariantCertificate cert;
  bool cert_ok = false;
  bool boundary_identically_zero = false;
};

/// Prop-level Stokes check on the strip: the class of d(omega) against the
/// summed classes of the oriented boundary restrictions. Boundary classes
/// are computed per component with an indicator phi rebuilt on each line.
StokesReport stokes_check(const BoundedForm& omega, const PartitionFunction& phi, int R,
                          int check_R = 20, Real tol = 1e-6);

}  // namespace bdr
