#pragma once

#include "bdr/cover.hpp"

#include <map>

namespace bdr {

/// Tube form pair: a top form rho_M of total integral zero, mass -1 inside
/// the source core and +1 inside the target core, vanishing on the central
/// band, together with a compactly supported primitive nu_M (d nu_M = rho_M).
/// Adding w * rho_M to a form moves w units of phi-mass between the cells.
struct TransportPair {
  TubeEmbedding tube;
  DifferentialForm rho_M;
  DifferentialForm nu_M;
  ExprPtr rho_expr;
  Box source_box, target_box;  // mass supports, inside the cores
  Real source_mass = 0, target_mass = 0;
  Real d_residual = 0;
};

/// Straight affine tube between two core boxes. The declared tube cells are
/// the enclosing patch-cube translates (their size is what makes an affine
/// tube with thirds inside the cells feasible); the mass bumps land inside
/// the cores, where the partition pieces are exactly one.
TransportPair make_transport(const Model& model, int N, const Box& source_core,
                             const Box& source_cell, const Box& target_core,
                             const Box& target_cell);

/// Per-(patch, group element) phi_i masses; the periodic field contributes a
/// g-independent channel per patch.
struct MassLedger {
  std::map<std::pair<int, GroupVec>, Real> dev;
  std::vector<Real> periodic;

  Real at(int patch, const GroupVec& g) const {
    Real v = periodic.empty() ? 0 : periodic[patch];
    auto it = dev.find({patch, g});
    return it == dev.end() ? v : v + it->second;
  }
};

MassLedger measure_masses(const BoundedForm& w, const CoverData& cover, int R);

struct NormalizeGlobalResult {
  BoundedForm omega1;
  DifferentialForm eta1;
  Real eta1_sup = 0;
  Real interior_residual = 0;  // max |integral of phi . g^* omega1| on the interior
  long steps_applied = 0;
  std::map<std::pair<int, GroupVec>, Real> mass_delta;
};

/// Kill the certified class representative: subtract d(eta1) built from
/// tube combs so that the integration map of omega1 vanishes on the
/// interior window. Group elements are telescoped into unit generator
/// steps, so only the d axis-step tube templates are needed.
NormalizeGlobalResult normalize_global(const BoundedForm& omega,
                                       const CoinvariantCertificate& cert,
                                       const PartitionFunction& phi, const CoverData& cover,
                                       int R);

struct NormalizeLocalResult {
  BoundedForm omega2;
  DifferentialForm eta2;
  Real eta2_sup = 0;
  Real root_residual = 0;       // leftover mass at the tree root (the class residue)
  Real spot_check_residual = 0; // re-measured masses at g = 0
  long transports_applied = 0;
};

/// Move the per-patch masses to zero along the fixed spanning tree, for
/// every group element in the working window (all of G when it is finite).
NormalizeLocalResult normalize_local(const BoundedForm& omega1, const CoverData& cover,
                                     const MassLedger& masses, int R);

/// Same contract as normalize_local, but the per-patch rebalancing uses
/// composite tubes between the wide probe boxes (solved against their
/// measured mass splits) instead of core-to-core tubes. The wide bumps keep
/// the finite-difference constants of the final residual small; the solve
/// pipeline uses this router.
NormalizeLocalResult normalize_local_wide(const BoundedForm& omega1, const CoverData& cover,
                                          const MassLedger& masses, int R);

struct GlobalPrimitiveResult {
  DifferentialForm eta3;
  Real eta3_sup = 0;
  Real k_stage = 0;  // patch count times K_n
  Real max_cell_integral = 0;
  long cells_solved = 0;
};

/// Per-cell Poincare primitives of phi_i . g^* omega2, pushed back and
/// summed; d(eta3) = omega2 where the used partition translates sum to one.
GlobalPrimitiveResult global_primitive(const BoundedForm& omega2, const CoverData& cover, int R);

struct SolveReport {
  Real fingerprint = 0;
  size_t certificate_size = 0;
  Real stage1_interior_residual = 0;
  Real stage2_root_residual = 0;
  Real stage2_spot_residual = 0;
  Real max_cell_integral = 0;
  Real d_residual = 0;
  Real omega_sup = 0;
  Real eta_sup = 0;
  Real k_total = 0;
  int interior_radius = 0;
  bool boundary_zero = true;
  DifferentialForm eta;
};

/// The injectivity pipeline: certificate, global normalization, local
/// normalization, per-cell primitives. Throws not_certifiable when the
/// class fingerprint exceeds class_tol (the form is not solvable).
SolveReport solve_primitive(const BoundedForm& omega, const PartitionFunction& phi,
                            const CoverData& cover, int R, Real class_tol = 1e-8);

/// omega_f = sum_g f(g) (g^{-1})^* beta with beta a unit bump in the first
/// core; its integration map reproduces f on the window (rays truncated).
BoundedForm surjectivity_witness(const EllInftyFn& f, const CoverData& cover, int R);

}  // namespace bdr
