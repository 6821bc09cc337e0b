#include "bdr/integration.hpp"

#include <cmath>

namespace bdr {

namespace {

Box fundamental_box(const Model& model) {
  int n = model.ambient_dim();
  VecXr lo = VecXr::Zero(n), hi = VecXr::Ones(n);
  if (model.finite_group()) hi[0] = 1;  // one cell; shifts rotate the form instead
  return Box(lo, hi);
}

Box shifted_box(const Box& b, const VecXi& s) {
  Box out = b;
  for (int a = 0; a < b.dim(); ++a) {
    out.lo[a] += s[a];
    out.hi[a] += s[a];
  }
  return out;
}

}  // namespace

Real PartitionFunction::eval(const VecXr& x) const {
  if (mode == Mode::Indicator) {
    for (int a = 0; a < x.size(); ++a)
      if (x[a] < support.lo[a] || x[a] >= support.hi[a]) return 0;
    return 1;
  }
  return phi->eval_abs(x);
}

PartitionFunction build_phi_indicator(const Model& model, int N) {
  PartitionFunction p;
  p.mode = PartitionFunction::Mode::Indicator;
  p.model = model;
  p.N = N;
  p.shift = model.identity();
  p.support = fundamental_box(model);
  return p;
}

PartitionFunction act_on_phi(const GroupVec& g, const PartitionFunction& phi) {
  PartitionFunction out = phi;
  out.shift = phi.model.g_add(phi.shift, g);
  VecXi s = phi.model.ambient_shift(g);
  out.support = shifted_box(phi.support, s);
  if (phi.phi) out.phi = shift_expr(phi.phi, -s);
  for (size_t i = 0; i < out.phi_i.size(); ++i) {
    out.phi_i[i] = shift_expr(phi.phi_i[i], -s);
    out.phi_i_support[i] = shifted_box(phi.phi_i_support[i], s);
  }
  return out;
}

Real orbit_sum(const PartitionFunction& phi, const VecXr& x, int R) {
  Real s = 0;
  for (const auto& g : phi.model.window(R)) {
    VecXi amb = phi.model.ambient_shift(g);
    VecXr xg = x;
    for (int a = 0; a < x.size(); ++a) {
      xg[a] += amb[a];
      if (phi.model.finite_group()) xg[a] -= phi.model.m * std::floor(xg[a] / phi.model.m);
    }
    s += phi.eval(xg);
  }
  return s;
}

namespace {

// Gauss-Legendre nodes on [-1,1] (same generator as the quadrature backend)
void gl_nodes(int n, std::vector<Real>& x, std::vector<Real>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1, p1 = t;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      Real dp = n * (t * p1 - p0) / (t * t - 1);
      Real dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    Real p0 = 1, p1 = t;
    for (int k = 2; k <= n; ++k) {
      Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    Real dp = n * (t * p1 - p0) / (t * t - 1);
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2 / ((1 - t * t) * dp * dp);
  }
}

}  // namespace

const CellRule& CellRule::get(int n) {
  static std::map<int, CellRule> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n > 2) throw invalid_input("CellRule: only ambient dimensions 1 and 2");
  constexpr int kPanels = 16, kDeg = 12;
  std::vector<Real> gx, gw;
  gl_nodes(kDeg, gx, gw);
  std::vector<Real> ax_n, ax_w;
  for (int p = 0; p < kPanels; ++p) {
    Real mid = (p + 0.5) / kPanels, half = 0.5 / kPanels;
    for (int i = 0; i < kDeg; ++i) {
      ax_n.push_back(mid + half * gx[i]);
      ax_w.push_back(half * gw[i]);
    }
  }
  CellRule r;
  r.n = n;
  int m = static_cast<int>(ax_n.size());
  long total = 1;
  for (int a = 0; a < n; ++a) total *= m;
  r.locals.reserve(total);
  r.weights.resize(total);
  VecXi j = VecXi::Zero(n);
  Index f = 0;
  while (true) {
    VecXr loc(n);
    Real w = 1;
    for (int a = 0; a < n; ++a) {
      loc[a] = ax_n[j[a]];
      w *= ax_w[j[a]];
    }
    r.locals.push_back(loc);
    r.weights[f++] = w;
    int a = n - 1;
    while (a >= 0) {
      if (++j[a] < m) break;
      j[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return cache.emplace(n, std::move(r)).first->second;
}

const ArrayXr& ExprCellTab::values(const VecXi& cell) const {
  std::vector<int> key(cell.data(), cell.data() + cell.size());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ArrayXr vals(rule_->weights.size());
  for (Index i = 0; i < vals.size(); ++i) vals[i] = e_->eval(cell, rule_->locals[i]);
  return cache_.emplace(std::move(key), std::move(vals)).first->second;
}

namespace {

// cells covered by a partition function's support (strip fibers collapse)
std::vector<VecXi> phi_cells(const PartitionFunction& phi) {
  int n = phi.model.ambient_dim();
  VecXi lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    lo[a] = static_cast<int>(std::floor(phi.support.lo[a] + 1e-12));
    hi[a] = static_cast<int>(std::ceil(phi.support.hi[a] - 1e-12)) - 1;
  }
  if (phi.model.has_boundary()) lo[1] = hi[1] = 0;
  std::vector<VecXi> out;
  VecXi c = lo;
  while (true) {
    out.push_back(c);
    int a = n - 1;
    while (a >= 0) {
      if (++c[a] <= hi[a]) break;
      c[a] = lo[a];
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

// weights * phi values per cell (indicator: plain weights)
std::vector<ArrayXr> phi_weighted(const PartitionFunction& phi, const std::vector<VecXi>& cells) {
  const CellRule& rule = CellRule::get(phi.model.ambient_dim());
  std::vector<ArrayXr> out;
  if (phi.mode == PartitionFunction::Mode::Indicator) {
    for (size_t i = 0; i < cells.size(); ++i) out.push_back(rule.weights);
    return out;
  }
  ExprCellTab tab(phi.phi, phi.model.ambient_dim());
  for (const auto& c : cells) out.push_back(rule.weights * tab.values(c));
  return out;
}

// integral of phi * (component expr shifted by `shift`), via the cell tabs
Real phi_weighted_integral(const std::vector<VecXi>& cells, const std::vector<ArrayXr>& phiw,
                           const ExprCellTab& tab, const VecXi& shift) {
  Real v = 0;
  for (size_t i = 0; i < cells.size(); ++i) {
    VecXi c = cells[i] + shift;
    v += (phiw[i] * tab.values(c)).sum();
  }
  return v;
}

}  // namespace

EllInftyFn integrate_phi(const PartitionFunction& phi, const BoundedForm& w, int R,
                         bool strict) {
  const Model& model = w.model;
  if (w.degree() != model.ambient_dim())
    throw invalid_input("integrate_phi: expects a top-degree form");
  EllInftyFn out(model);
  std::vector<VecXi> cells = phi_cells(phi);
  std::vector<ArrayXr> phiw = phi_weighted(phi, cells);

  if (model.finite_group()) {
    ExprPtr e = component_expr(w, 0);
    if (!e) throw invalid_input("integrate_phi: form lacks generators");
    ExprCellTab tab(e, model.ambient_dim());
    for (const auto& g : model.window(R)) {
      VecXi s = model.ambient_shift(g);
      out.add_dev(g, phi_weighted_integral(cells, phiw, tab, s));
    }
    return out;
  }

  if (w.periodic) {
    const ScalarField& p = w.periodic->comps[0];
    if (!p.gen) throw invalid_input("integrate_phi: periodic part lacks a generator");
    ExprCellTab tab(p.gen, model.ambient_dim());
    out.background = phi_weighted_integral(cells, phiw, tab, VecXi::Zero(model.ambient_dim()));
  }

  if (w.deviation) {
    const ScalarField& dv = w.deviation->comps[0];
    if (!dv.gen) throw invalid_input("integrate_phi: deviation part lacks a generator");
    ExprCellTab tab(dv.gen, model.ambient_dim());
    auto sup = dv.gen->support();
    Box dev_box = sup ? *sup : dv.grid.box();
    int d = model.lattice_dim();
    // lattice g with (supp - g) meeting the phi support
    std::vector<std::pair<int, int>> ranges(d);
    int needed = 0;
    for (int a = 0; a < d; ++a) {
      int lo = static_cast<int>(std::ceil(dev_box.lo[a] - phi.support.hi[a])) - 1;
      int hi = static_cast<int>(std::floor(dev_box.hi[a] - phi.support.lo[a])) + 1;
      ranges[a] = {lo, hi};
      needed = std::max(needed, std::max(std::abs(lo), std::abs(hi)));
    }
    if (needed > R) {
      if (strict) throw window_error("integrate_phi: deviation influence escapes the window", needed);
      for (int a = 0; a < d; ++a)
        ranges[a] = {std::max(ranges[a].first, -R), std::min(ranges[a].second, R)};
    }
    GroupVec g(d);
    for (int a = 0; a < d; ++a) g[a] = ranges[a].first;
    while (true) {
      VecXi s = model.ambient_shift(g);
      Box moved = shifted_box(dev_box, -s);
      if (moved.intersects(phi.support)) {
        Real v = phi_weighted_integral(cells, phiw, tab, s);
        if (v != 0) out.add_dev(g, v);
      }
      int a = d - 1;
      while (a >= 0) {
        if (++g[a] <= ranges[a].second) break;
        g[a] = ranges[a].first;
        --a;
      }
      if (a < 0) break;
    }
  }
  return out;
}

ClassDescriptor class_of(const BoundedForm& w, const PartitionFunction& phi, int R) {
  ClassDescriptor out;
  out.rep = integrate_phi(phi, w, R);
  out.fingerprint = class_fingerprint(out.rep);
  return out;
}

PhiIndependenceReport check_phi_independence(const PartitionFunction& a,
                                             const PartitionFunction& b, const BoundedForm& w,
                                             int R, Real tol) {
  EllInftyFn ra = integrate_phi(a, w, R);
  EllInftyFn rb = integrate_phi(b, w, R);
  EllInftyFn d = ra - rb;
  PhiIndependenceReport rep;
  rep.fingerprint_residual = std::abs(class_fingerprint(d));
  if (rep.fingerprint_residual > tol)
    throw pipeline_error("phi_independence",
                         "fingerprint residual " + std::to_string(rep.fingerprint_residual) +
                             " exceeds tolerance (quadrature or construction bug)");
  rep.snapped_difference = snap_fingerprint(d);
  rep.snapped_difference.prune(0);
  rep.cert = certify_trivial(rep.snapped_difference);
  rep.validated = check_certificate(rep.snapped_difference, rep.cert, R);
  return rep;
}

bool check_equivariance(const PartitionFunction& phi, const BoundedForm& w, const GroupVec& g,
                        int R) {
  int gmax = 0;
  for (int c : g) gmax = std::max(gmax, std::abs(c));
  EllInftyFn lhs = integrate_phi(act_on_phi(g, phi), w, R + 1 + gmax);
  EllInftyFn rhs = act(g, integrate_phi(phi, w, R + 1 + gmax));
  for (const auto& h : w.model.window(R))
    if (lhs.eval(h) != rhs.eval(h)) return false;
  return true;
}

StokesReport stokes_check(const BoundedForm& omega, const PartitionFunction& phi, int R,
                          int check_R, Real tol) {
  if (!omega.model.has_boundary()) throw invalid_input("stokes_check: needs the strip model");
  StokesReport out;

  BoundedForm dw = exterior_derivative_analytic(omega);
  ClassDescriptor interior = class_of(dw, phi, R);
  out.interior_fingerprint = interior.fingerprint;

  PartitionFunction line_phi = build_phi_indicator(Model::line(), omega.N());
  BoundedForm bottom = boundary_restriction_model(omega, 0);
  BoundedForm top = boundary_restriction_model(omega, 1);
  ClassDescriptor cb = class_of(bottom, line_phi, R);
  ClassDescriptor ct = class_of(top, line_phi, R);
  out.boundary_fingerprint = cb.fingerprint + ct.fingerprint;
  out.boundary_identically_zero =
      sup_norm_bounded(bottom) == 0 && sup_norm_bounded(top) == 0;

  out.fingerprint_gap = std::abs(out.interior_fingerprint - out.boundary_fingerprint);
  if (!(out.fingerprint_gap <= tol))
    throw pipeline_error("stokes", "fingerprint gap " + std::to_string(out.fingerprint_gap) +
                                       " exceeds tolerance");

  EllInftyFn diff = interior.rep - (cb.rep + ct.rep);
  out.snapped_difference = snap_fingerprint(diff);
  out.snapped_difference.prune(0);
  out.cert = certify_trivial(out.snapped_difference);
  out.cert_ok = check_certificate(out.snapped_difference, out.cert, check_R);
  return out;
}

}  // namespace bdr
