#pragma once

#include "bdr/integration.hpp"
#include "bdr/poincare.hpp"

namespace bdr {

/// Finite cover of the quotient by cube patches trivializing the covering
/// map, with disjoint middle-third cores, a subordinate partition of unity
/// that is exactly 1 on each core, and fixed lifts.
///
/// Torus quotients get 2^d unit-cube patches at offsets in {0, 1/2}^d.
/// The strip quotient gets two full-height patches at x1 offsets {0, 1/2},
/// each a slab (both horizontal faces are boundary); this keeps every patch
/// map a pure translation, so patch pullbacks are exact sample shifts.
struct CoverData {
  struct Patch {
    VecXr offset;          // lower corner of the lift C_i
    VecXi offset_steps;    // offset * N, exact
    PrimitiveDomain domain;
    Box patch_box;         // C_i
    Box core;              // D_i
    ExprPtr lambda;        // on the quotient (lattice-periodic)
    ExprPtr phi;           // lifted phi_i, supported in C_i
    Box phi_support;
  };

  Model model;
  int N = 0;
  std::vector<Patch> patches;
  /// Mass-routing tree: (child, parent) pairs in leaf-to-root order.
  std::vector<std::pair<int, int>> tree_edges;
  ExprPtr phi_total;
  Box phi_total_support;

  /// The region where the summed lift phi is exactly 1 (one box per
  /// fundamental cell, [1/3, 7/6] per lattice axis up to safety margins).
  /// Mass bumps placed here are counted exactly once by exactly one
  /// translate of phi, which is all the transport identities need; wide
  /// bumps keep the finite-difference constants of the tube primitives
  /// small.
  Box wide_region;
  /// Probe boxes inside wide_region whose per-patch mass splits are
  /// affinely independent (one per patch, indexed alike).
  std::vector<Box> probes;
};

/// Refuses lattice dimension > 3 (desk-scale guard).
CoverData build_cover(const Model& model, int N);

/// Smooth partition function from the cover (phi = sum of the lifted
/// pieces; orbit sums are exactly 1 by construction).
PartitionFunction build_phi_smooth(const CoverData& cover);

}  // namespace bdr
