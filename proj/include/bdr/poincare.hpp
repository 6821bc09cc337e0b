#pragma once

#include "bdr/forms.hpp"

namespace bdr {

/// Domain flavors for the primitive construction. Box is (0,1)^n with all
/// faces margined. HalfBox is (0,1)^{n-1} x [0,1): support may touch the
/// lower face of the last axis and the constructed primitive pulls back to
/// exactly zero there. Slab is (0,1)^{n-1} x [0,1]: both faces of the last
/// axis are boundary, both traces come out exactly zero (the strip cover
/// uses this variant).
enum class PrimitiveDomain { Box, HalfBox, Slab };

struct PrimitiveOptions {
  Real margin = 0.05;
  int cumulative_order = 4;
  int verify_order = 6;
  bool keep_steps = false;
  Real zero_integral_factor = 10.0;  // tolerance = factor * h^2 * ||omega||
};

struct PrimitiveResult {
  DifferentialForm eta;
  std::vector<DifferentialForm> steps;
  Real residual = 0;      // ||d eta - omega||_inf, independent FD verification
  Real ratio = 0;         // ||eta||_inf / ||omega||_inf
  Real kn = 0;            // certified norm constant
  Real margin_leak = 0;   // max |eta| on the margined faces
  Real input_integral = 0;
  std::vector<Real> condition_residuals;  // discrete trailing-integral residue per step
};

/// Valid norm constant from the construction's estimates:
/// K_n = sum_k r_k prod_{j<k} (1 + r_j), r_k the tensor-mollifier sups.
Real kn_constant(int n);

/// Sup of the 1D mollifier used for the rho factors (support (0.1, 0.9)).
Real rho_axis_sup();

PrimitiveResult primitive_box(const DifferentialForm& omega, const PrimitiveOptions& opts = {});
PrimitiveResult primitive_halfbox(const DifferentialForm& omega,
                                  const PrimitiveOptions& opts = {});
PrimitiveResult primitive_slab(const DifferentialForm& omega, const PrimitiveOptions& opts = {});

}  // namespace bdr
