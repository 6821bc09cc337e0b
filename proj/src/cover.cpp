#include "bdr/cover.hpp"

#include "bdr/analytic.hpp"

#include <cmath>

namespace bdr {

namespace {

constexpr Real kThird = 1.0 / 3.0;

// plateau along one lattice axis: support (1/6, 5/6), exactly 1 on [1/3, 2/3]
Analytic1D axis_plateau() {
  return plateau_profile(1.0 / 6, 1.0 / 6, 5.0 / 6, 1.0 / 6);
}

}  // namespace

CoverData build_cover(const Model& model, int N) {
  if (model.lattice_dim() > 3) throw invalid_input("build_cover: lattice dimension > 3 refused");
  if (N % 2 != 0) throw invalid_input("build_cover: N must be even (half-cell offsets)");
  CoverData cover;
  cover.model = model;
  cover.N = N;
  int n = model.ambient_dim();
  int d = model.lattice_dim();
  int k = 1 << d;

  // mu_i bumps: plateau tensor at the patch offset (lattice axes only);
  // the strip's fiber axis carries no partition
  std::vector<ExprPtr> mu_local(k);
  VecXi unit_period = VecXi::Zero(n);
  for (int a = 0; a < d; ++a) unit_period[a] = 1;

  for (int i = 0; i < k; ++i) {
    VecXr offset = VecXr::Zero(n);
    for (int a = 0; a < d; ++a) offset[a] = (i >> a & 1) ? 0.5 : 0.0;
    std::vector<Analytic1D> axes;
    for (int a = 0; a < n; ++a) {
      if (a < d) {
        Analytic1D p = axis_plateau();
        Real off = offset[a];
        Analytic1D shifted;
        shifted.a = p.a + off;
        shifted.b = p.b + off;
        shifted.f = [p, off](Real t) { return p.f(t - off); };
        shifted.df = [p, off](Real t) { return p.df(t - off); };
        axes.push_back(std::move(shifted));
      } else {
        axes.push_back(constant_profile(1));
      }
    }
    mu_local[i] = separable_expr(std::move(axes));
  }

  // denominator: sum of all mu, periodized over the lattice
  std::vector<std::pair<Real, ExprPtr>> den_terms;
  for (int i = 0; i < k; ++i) den_terms.push_back({1, mu_local[i]});
  ExprPtr den = periodize_expr(lincomb_expr(den_terms, n), unit_period);

  VecXi circle_period = VecXi::Zero(n);
  if (model.finite_group()) circle_period[0] = model.m;

  std::vector<std::pair<Real, ExprPtr>> phi_terms;
  for (int i = 0; i < k; ++i) {
    CoverData::Patch patch;
    patch.offset = VecXr::Zero(n);
    for (int a = 0; a < d; ++a) patch.offset[a] = (i >> a & 1) ? 0.5 : 0.0;
    patch.offset_steps = VecXi::Zero(n);
    for (int a = 0; a < d; ++a) patch.offset_steps[a] = (i >> a & 1) ? N / 2 : 0;
    patch.domain = model.has_boundary() ? PrimitiveDomain::Slab : PrimitiveDomain::Box;
    VecXr lo = patch.offset, hi = patch.offset + VecXr::Ones(n);
    patch.patch_box = Box(lo, hi);
    VecXr clo = lo + VecXr::Constant(n, kThird), chi = hi - VecXr::Constant(n, kThird);
    patch.core = Box(clo, chi);
    patch.lambda = ratio_expr(periodize_expr(mu_local[i], unit_period), den);
    ExprPtr num = model.finite_group() ? periodize_expr(mu_local[i], circle_period) : mu_local[i];
    patch.phi = ratio_expr(num, den);
    VecXr plo = lo, phi_hi = hi;
    for (int a = 0; a < d; ++a) {
      plo[a] = patch.offset[a] + 1.0 / 6;
      phi_hi[a] = patch.offset[a] + 5.0 / 6;
    }
    patch.phi_support = Box(plo, phi_hi);
    phi_terms.push_back({1, patch.phi});
    cover.patches.push_back(std::move(patch));
  }

  cover.phi_total = lincomb_expr(phi_terms, n);
  VecXr tlo = VecXr::Zero(n), thi = VecXr::Ones(n);
  for (int a = 0; a < d; ++a) {
    tlo[a] = 1.0 / 6;
    thi[a] = 1.0 / 2 + 5.0 / 6;
  }
  cover.phi_total_support = Box(tlo, thi);

  // wide exactly-one region and the probe boxes
  {
    VecXr wlo(n), whi(n);
    for (int a = 0; a < n; ++a) {
      if (a < d) {
        wlo[a] = 0.36;
        whi[a] = 1.13;
      } else {
        wlo[a] = 0.08;
        whi[a] = 0.92;
      }
    }
    cover.wide_region = Box(wlo, whi);
    // probes: wide boxes inside the exactly-one region, offset per patch so
    // their per-patch mass splits stay affinely independent; width beats
    // split purity here (the router solves against the measured splits)
    for (int i = 0; i < k; ++i) {
      VecXr plo(n), phi_(n);
      for (int a = 0; a < n; ++a) {
        if (a < d) {
          bool hi = (i >> a & 1) != 0;
          plo[a] = hi ? 0.69 : 0.36;
          phi_[a] = hi ? 1.13 : 0.80;
        } else {
          plo[a] = 0.08;
          phi_[a] = 0.92;
        }
      }
      cover.probes.push_back(Box(plo, phi_));
    }
  }

  // axis-aligned adjacency, BFS from patch 0; edges in leaf-to-root order
  std::vector<int> parent(k, -1), order;
  std::vector<bool> seen(k, false);
  seen[0] = true;
  order.push_back(0);
  for (size_t q = 0; q < order.size(); ++q) {
    int u = order[q];
    for (int a = 0; a < d; ++a) {
      int v = u ^ (1 << a);
      if (!seen[v]) {
        seen[v] = true;
        parent[v] = u;
        order.push_back(v);
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (parent[*it] >= 0) cover.tree_edges.push_back({*it, parent[*it]});

  return cover;
}

PartitionFunction build_phi_smooth(const CoverData& cover) {
  PartitionFunction phi;
  phi.mode = PartitionFunction::Mode::Smooth;
  phi.model = cover.model;
  phi.N = cover.N;
  phi.shift = cover.model.identity();
  phi.phi = cover.phi_total;
  phi.support = cover.phi_total_support;
  for (const auto& p : cover.patches) {
    phi.phi_i.push_back(p.phi);
    phi.phi_i_support.push_back(p.phi_support);
  }
  return phi;
}

}  // namespace bdr
