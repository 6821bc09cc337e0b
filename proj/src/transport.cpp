#include "bdr/transport.hpp"

#include "bdr/analytic.hpp"

#include <cmath>

namespace bdr {

namespace {

VecXr box_center(const Box& b) { return (b.lo + b.hi) / 2; }

Box shift_box(const Box& b, const VecXr& s) {
  Box out = b;
  out.lo += s;
  out.hi += s;
  return out;
}

Grid assembly_grid(const Model& model, int N, int R) {
  if (model.finite_group()) return fundamental_grid(model, N);
  return window_grid(model, N, R + 2);
}

VecXi assembly_period(const Model& model) {
  if (model.finite_group()) return model.field_period();
  return VecXi::Zero(model.ambient_dim());
}

/// dst += w * src, with src's window placed at (its own steps + shift);
/// periodic axes of dst wrap, others must contain the translated support.
void add_shifted(ScalarField& dst, const ScalarField& src, Real w, const VecXi& shift_steps) {
  int n = dst.dim();
  VecXi idx = VecXi::Zero(n);
  for (Index s = 0; s < src.grid.size(); ++s) {
    Real v = src.samples[s];
    if (v != 0) {
      VecXi t(n);
      bool in = true;
      for (int a = 0; a < n; ++a) {
        t[a] = src.grid.lo_steps[a] + idx[a] + shift_steps[a] - dst.grid.lo_steps[a];
        if (dst.periodic(a)) {
          t[a] = mod_floor(t[a], dst.period[a] * dst.grid.N);
        } else if (t[a] < 0 || t[a] >= dst.grid.count[a]) {
          in = false;
          break;
        }
      }
      if (!in) throw invalid_input("add_shifted: support escapes the assembly window");
      dst.samples[dst.grid.flat(t)] += w * v;
    }
    int a = n - 1;
    while (a >= 0) {
      if (++idx[a] < src.grid.count[a]) break;
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

void add_shifted_form(DifferentialForm& dst, const DifferentialForm& src, Real w,
                      const VecXi& shift_steps) {
  for (size_t i = 0; i < dst.comps.size(); ++i)
    add_shifted(dst.comps[i], src.comps[i], w, shift_steps);
}

GroupVec axis_step(const Model& model, int axis, int dir) {
  GroupVec s = model.identity();
  s[axis] = dir;
  return s;
}

Grid face_grid_of(const Grid& g, int axis) {
  int n = g.dim();
  VecXi lo(n - 1), cnt(n - 1);
  int j = 0;
  for (int a = 0; a < n; ++a) {
    if (a == axis) continue;
    lo[j] = g.lo_steps[a];
    cnt[j] = g.count[a];
    ++j;
  }
  return Grid(g.N, lo, cnt);
}

/// Attach exact-zero boundary traces to a strip (n-1)-form. `by_margin`
/// demands the samples near the face vanish identically (tube forms);
/// otherwise the constituents must have carried exact traces themselves.
void attach_zero_traces(DifferentialForm& f, int axis, bool by_margin) {
  if (by_margin)
    for (auto& c : f.comps)
      for (int side : {0, 1})
        if (zero_margin(c, axis, side) < 2)
          throw pipeline_error("traces", "expected an interior-supported form");
  Grid fg = face_grid_of(f.grid(), axis);
  std::vector<ScalarField> zero{ScalarField(fg)};
  f.traces[FaceKey{axis, 0}] = zero;
  f.traces[FaceKey{axis, 1}] = zero;
}

}  // namespace

TransportPair make_transport(const Model& model, int N, const Box& source_core,
                             const Box& source_cell, const Box& target_core,
                             const Box& target_cell) {
  int n = model.ambient_dim();
  if (n > 2) throw invalid_input("make_transport: ambient dimension > 2 unsupported");
  VecXr s = box_center(source_core), t = box_center(target_core);
  VecXr u = t - s;
  if (u.norm() < 1e-12) throw invalid_input("make_transport: source equals target");

  bool reversed = false;
  Box S = source_core, T = target_core, Sc = source_cell, Tc = target_cell;
  if (n == 1 && u[0] < 0) {
    std::swap(S, T);
    std::swap(Sc, Tc);
    std::swap(s, t);
    u = -u;
    reversed = true;
  }

  Real ulen = u.norm();
  VecXr uhat = u / ulen;
  std::vector<VecXr> cross;
  if (n == 2) {
    VecXr w(2);
    w << uhat[1], -uhat[0];  // makes det(A) positive
    cross.push_back(w);
  }

  // the two mass bumps are sized independently: each fills 0.92 of its own
  // region (a wide target keeps its bump wide even when the source is small)
  VecXr rS = (S.hi - S.lo) / 2, rT = (T.hi - T.lo) / 2;
  Real min_r = std::min(rS.minCoeff(), rT.minCoeff());
  Real qw_cap = 1.0 / 6 - 0.026;
  Real c = 1.2 * min_r, delta_lo = 0, delta_up = 0;
  int guard = 0;
  while (true) {
    delta_lo = qw_cap * 1.5 * ulen;
    delta_up = qw_cap * 1.5 * ulen;
    bool ok = true;
    for (int a = 0; a < n; ++a) {
      Real crossw = 0;
      for (auto& w : cross) crossw += std::abs(w[a]);
      Real slack_lo = 0.92 * rS[a] - 0.45 * c * crossw;
      Real slack_up = 0.92 * rT[a] - 0.45 * c * crossw;
      if (slack_lo <= 0 || slack_up <= 0) {
        ok = false;
        break;
      }
      if (std::abs(uhat[a]) > 1e-12) {
        delta_lo = std::min(delta_lo, slack_lo / std::abs(uhat[a]));
        delta_up = std::min(delta_up, slack_up / std::abs(uhat[a]));
      }
    }
    if (ok && delta_lo > 0.01 && delta_up > 0.01) break;
    c *= 0.9;
    if (++guard > 200) throw invalid_input("make_transport: cores too small for a tube");
  }

  TransportPair out;
  out.tube.A.resize(n, n);
  for (int j = 0; j < n - 1; ++j) out.tube.A.col(j) = c * cross[j];
  out.tube.A.col(n - 1) = 1.5 * u;
  out.tube.b = s - u / 4;
  for (int j = 0; j < n - 1; ++j) out.tube.b -= (c / 2) * cross[j];
  out.tube.source_cell = Sc;
  out.tube.target_cell = Tc;
  out.tube.finalize();

  if (model.has_boundary()) {
    Box img = out.tube.image_box(Box::unit(n));
    if (img.lo[1] < 0.01 || img.hi[1] > 0.99)
      throw invalid_input("make_transport: tube touches the strip boundary");
  }

  Real qw_lo = delta_lo / (1.5 * ulen);
  Real qw_up = delta_up / (1.5 * ulen);
  Analytic1D up = mollifier_1d_profile(5.0 / 6 - qw_up, 5.0 / 6 + qw_up);
  Analytic1D lo = mollifier_1d_profile(1.0 / 6 - qw_lo, 1.0 / 6 + qw_lo);

  auto cross_axes = [&] {
    std::vector<Analytic1D> ax;
    for (int j = 0; j < n - 1; ++j) ax.push_back(mollifier_1d_profile(0.05, 0.95));
    return ax;
  };

  Grid qg = Grid::unit(N, n);
  DifferentialForm rhoQ(n, n, qg);
  {
    auto axes_up = cross_axes();
    axes_up.push_back(up);
    auto axes_lo = cross_axes();
    axes_lo.push_back(lo);
    rhoQ.comps[0] = ScalarField(
        qg, lincomb_expr({{1, separable_expr(std::move(axes_up))},
                          {-1, separable_expr(std::move(axes_lo))}},
                         n));
  }
  DifferentialForm nuQ(n, n - 1, qg);
  {
    Real sign = ((n - 1) % 2) ? -1.0 : 1.0;
    auto axes = cross_axes();
    axes.push_back(cumulative_difference_profile(up, lo));
    nuQ.comps[0] = ScalarField(qg, separable_expr(std::move(axes), sign));
    for (size_t i = 1; i < nuQ.comps.size(); ++i)
      nuQ.comps[i] = ScalarField(qg, const_expr(n, 0.0));
  }

  // window: cell hull of the tube image and the declared cells
  Box img = out.tube.image_box(Box::unit(n));
  VecXi wlo(n), wcnt(n);
  for (int a = 0; a < n; ++a) {
    Real lo_r = std::min({img.lo[a], Sc.lo[a], Tc.lo[a]});
    Real hi_r = std::max({img.hi[a], Sc.hi[a], Tc.hi[a]});
    int lc = static_cast<int>(std::floor(lo_r));
    int hc = static_cast<int>(std::ceil(hi_r));
    if (model.has_boundary() && a == 1) {
      lc = 0;
      hc = 1;
    }
    wlo[a] = lc;
    wcnt[a] = hc - lc;
  }
  Grid window = Grid::from_cells(N, wlo, wcnt);

  Real flip = reversed ? -1.0 : 1.0;
  out.rho_M = flip * pushforward_tube(rhoQ, out.tube, window);
  out.nu_M = flip * pushforward_tube(nuQ, out.tube, window);
  out.rho_expr = out.rho_M.comps[0].gen;

  Box upQ = Box::unit(n), loQ = Box::unit(n);
  upQ.lo[n - 1] = 5.0 / 6 - qw_up;
  upQ.hi[n - 1] = 5.0 / 6 + qw_up;
  loQ.lo[n - 1] = 1.0 / 6 - qw_lo;
  loQ.hi[n - 1] = 1.0 / 6 + qw_lo;
  for (int j = 0; j < n - 1; ++j) {
    upQ.lo[j] = loQ.lo[j] = 0.05;
    upQ.hi[j] = loQ.hi[j] = 0.95;
  }
  out.source_box = out.tube.image_box(reversed ? upQ : loQ);
  out.target_box = out.tube.image_box(reversed ? loQ : upQ);

  out.source_mass = integrate_hi(*out.rho_expr, out.source_box);
  out.target_mass = integrate_hi(*out.rho_expr, out.target_box);
  if (std::abs(out.source_mass + 1) > 1e-6 || std::abs(out.target_mass - 1) > 1e-6)
    throw pipeline_error("make_transport", "tube masses failed validation: " +
                                               std::to_string(out.source_mass) + ", " +
                                               std::to_string(out.target_mass));
  out.d_residual = sup_norm_form(exterior_derivative(out.nu_M, 2) - out.rho_M);
  return out;
}

MassLedger measure_masses(const BoundedForm& w, const CoverData& cover, int R) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  MassLedger out;
  out.periodic.assign(cover.patches.size(), 0);
  const CellRule& rule = CellRule::get(n);

  for (size_t i = 0; i < cover.patches.size(); ++i) {
    const auto& patch = cover.patches[i];
    // cells covering the phi_i support
    std::vector<VecXi> cells;
    {
      VecXi lo(n), hi(n);
      for (int a = 0; a < n; ++a) {
        lo[a] = static_cast<int>(std::floor(patch.phi_support.lo[a] + 1e-12));
        hi[a] = static_cast<int>(std::ceil(patch.phi_support.hi[a] - 1e-12)) - 1;
      }
      if (model.has_boundary()) lo[1] = hi[1] = 0;
      VecXi c = lo;
      while (true) {
        cells.push_back(c);
        int a = n - 1;
        while (a >= 0) {
          if (++c[a] <= hi[a]) break;
          c[a] = lo[a];
          --a;
        }
        if (a < 0) break;
      }
    }
    ExprCellTab phitab(patch.phi, n);
    std::vector<ArrayXr> phiw;
    for (auto& c : cells) phiw.push_back(rule.weights * phitab.values(c));

    if (w.periodic) {
      ExprCellTab tab(w.periodic->comps[0].gen, n);
      if (model.finite_group()) {
        for (const auto& g : model.window(R)) {
          VecXi s = model.ambient_shift(g);
          Real v = 0;
          for (size_t ci = 0; ci < cells.size(); ++ci) {
            VecXi c = cells[ci] + s;
            v += (phiw[ci] * tab.values(c)).sum();
          }
          out.dev[{static_cast<int>(i), g}] += v;
        }
      } else {
        Real v = 0;
        for (size_t ci = 0; ci < cells.size(); ++ci)
          v += (phiw[ci] * tab.values(cells[ci])).sum();
        out.periodic[i] = v;
      }
    }
    if (w.deviation) {
      ExprCellTab tab(w.deviation->comps[0].gen, n);
      auto sup = w.deviation->comps[0].gen->support();
      for (const auto& g : model.window(R)) {
        VecXi s = model.ambient_shift(g);
        if (sup) {
          Box moved = *sup;
          bool hit = false;
          for (auto& c : cells) {
            Box cb(VecXr::Zero(n), VecXr::Ones(n));
            for (int a = 0; a < n; ++a) {
              cb.lo[a] = c[a] + s[a];
              cb.hi[a] = c[a] + s[a] + 1;
            }
            if (model.has_boundary()) {
              cb.lo[1] = 0;
              cb.hi[1] = 1;
            }
            if (moved.intersects(cb)) hit = true;
          }
          if (!hit) continue;
        }
        Real v = 0;
        for (size_t ci = 0; ci < cells.size(); ++ci) {
          VecXi c = cells[ci] + s;
          v += (phiw[ci] * tab.values(c)).sum();
        }
        if (v != 0) out.dev[{static_cast<int>(i), g}] += v;
      }
    }
  }
  return out;
}

NormalizeGlobalResult normalize_global(const BoundedForm& omega,
                                       const CoinvariantCertificate& cert,
                                       const PartitionFunction& phi, const CoverData& cover,
                                       int R) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  int d = model.lattice_dim();
  int N = cover.N;

  // the certificate must reproduce the snapped representative
  EllInftyFn rep = integrate_phi(phi, omega, R);
  EllInftyFn snapped = snap_fingerprint(rep);
  if (!check_certificate(snapped, cert, R, 1e-12 * std::max<Real>(1, snapped.bound())))
    throw pipeline_error("normalize_global", "certificate does not match the representative");

  // telescope every pair into canonical positive unit steps
  struct Item {
    EllInftyFn F;
    int axis;
  };
  std::vector<Item> items;
  for (const auto& [f, gj] : cert.pairs) {
    GroupVec g = model.canonical(gj);
    EllInftyFn F = f;
    for (int a = 0; a < d; ++a) {
      int steps = g[a];
      int dir = steps >= 0 ? 1 : -1;
      GroupVec s = axis_step(model, a, dir);
      for (int t = 0; t < std::abs(steps); ++t) {
        EllInftyFn Fnext = act(s, F);
        if (dir > 0)
          items.push_back({F, a});
        else
          items.push_back({-1.0 * Fnext, a});
        F = std::move(Fnext);
      }
    }
  }

  // one tube template per axis: (wide region - e_a) -> wide region; the
  // bumps are wide, which keeps the primitive's derivatives tame, and they
  // sit where the summed phi is exactly one
  const Box& A = cover.wide_region;
  auto hull_cell = [&](const Box& b) {
    Box out = b;
    for (int a = 0; a < n; ++a) {
      out.lo[a] -= 0.75;
      out.hi[a] += 0.75;
    }
    return out;
  };
  std::vector<TransportPair> tubes;
  std::vector<std::vector<Real>> split_src(d), split_tgt(d);
  int k = static_cast<int>(cover.patches.size());
  for (int a = 0; a < d; ++a) {
    VecXr sh = VecXr::Zero(n);
    sh[a] = -1;
    tubes.push_back(make_transport(model, N, shift_box(A, sh), hull_cell(shift_box(A, sh)), A,
                                   hull_cell(A)));
    // per-patch attribution of the tube's two mass bumps
    const TransportPair& tp = tubes.back();
    split_src[a].resize(k);
    split_tgt[a].resize(k);
    Real ssum = 0, tsum = 0;
    VecXi amb_e = VecXi::Zero(n);
    amb_e[a] = 1;
    for (int i = 0; i < k; ++i) {
      // the source bump lives one cell down; attribute it in phi_i coordinates
      split_src[a][i] = -integrate_hi(
          *product_expr(cover.patches[i].phi, shift_expr(tp.rho_expr, -amb_e)),
          shift_box(tp.source_box, VecXr::Unit(n, a)));
      split_tgt[a][i] =
          integrate_hi(*product_expr(cover.patches[i].phi, tp.rho_expr), tp.target_box);
      ssum += split_src[a][i];
      tsum += split_tgt[a][i];
    }
    if (std::abs(ssum - 1) > 1e-8 || std::abs(tsum - 1) > 1e-8)
      throw pipeline_error("normalize_global", "tube mass splits failed validation");
  }

  Grid ag = assembly_grid(model, N, R);
  VecXi period = assembly_period(model);
  NormalizeGlobalResult res;
  res.eta1 = DifferentialForm(n, n - 1, ag, period);
  DifferentialForm deta1(n, n, ag, period);
  CellComb comb(n);

  auto win = model.window(R);
  for (const auto& item : items) {
    const auto& tp = tubes[item.axis];
    GroupVec estep = axis_step(model, item.axis, 1);
    for (const auto& g : win) {
      Real w = item.F.eval(g);
      if (w == 0) continue;
      VecXi amb = model.ambient_shift(g);
      add_shifted_form(res.eta1, tp.nu_M, w, amb * N);
      add_shifted_form(deta1, tp.rho_M, w, amb * N);
      comb.add(w, shift_expr(tp.rho_expr, -amb));
      // omega1 = omega - d eta1, so the masses move opposite to the tube,
      // attributed across the patches by the measured splits
      GroupVec gm = model.g_add(g, model.g_neg(estep));
      for (int i = 0; i < k; ++i) {
        if (split_tgt[item.axis][i] != 0)
          res.mass_delta[{i, model.canonical(g)}] -= w * split_tgt[item.axis][i];
        if (split_src[item.axis][i] != 0)
          res.mass_delta[{i, gm}] += w * split_src[item.axis][i];
      }
      ++res.steps_applied;
    }
  }
  if (model.has_boundary()) attach_zero_traces(res.eta1, 1, /*by_margin=*/true);
  res.eta1_sup = sup_norm_form(res.eta1);

  // omega1 = omega - d eta1
  res.omega1.model = model;
  if (model.finite_group()) {
    ExprPtr dexpr = comb.size() ? periodize_expr(comb.build(), VecXi::Constant(1, model.m))
                                : const_expr(n, 0.0);
    DifferentialForm per = *omega.periodic;
    per.comps[0].samples -= deta1.comps[0].samples;
    per.comps[0].gen = lincomb_expr({{1, omega.periodic->comps[0].gen}, {-1, dexpr}}, n);
    res.omega1.periodic = std::move(per);
  } else {
    res.omega1.periodic = omega.periodic;
    DifferentialForm dev(n, n, ag);
    if (omega.deviation) accumulate(dev, *omega.deviation, 1);
    dev.comps[0].samples -= deta1.comps[0].samples;
    std::vector<std::pair<Real, ExprPtr>> terms;
    if (omega.deviation) terms.push_back({1, omega.deviation->comps[0].gen});
    if (comb.size()) terms.push_back({-1, comb.build()});
    dev.comps[0].gen = terms.empty() ? const_expr(n, 0.0) : lincomb_expr(std::move(terms), n);
    res.omega1.deviation = std::move(dev);
  }

  // interior residual of the integration map (truncated evaluation; only
  // the interior values matter)
  EllInftyFn rep1 = integrate_phi(phi, res.omega1, R, /*strict=*/false);
  int Rint = model.finite_group() ? 0 : std::max(0, R - 2);
  Real worst = 0;
  for (const auto& g : model.window(Rint)) worst = std::max(worst, std::abs(rep1.eval(g)));
  res.interior_residual = worst;
  return res;
}

NormalizeLocalResult normalize_local(const BoundedForm& omega1, const CoverData& cover,
                                     const MassLedger& masses, int R) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  int N = cover.N;
  int k = static_cast<int>(cover.patches.size());

  std::map<std::pair<int, int>, TransportPair> edge_tubes;
  for (const auto& [child, parent] : cover.tree_edges)
    edge_tubes.emplace(std::make_pair(child, parent),
                       make_transport(model, N, cover.patches[child].core,
                                      cover.patches[child].patch_box, cover.patches[parent].core,
                                      cover.patches[parent].patch_box));

  Grid ag = assembly_grid(model, N, R);
  VecXi period = assembly_period(model);
  NormalizeLocalResult res;
  res.eta2 = DifferentialForm(n, n - 1, ag, period);
  DifferentialForm deta2(n, n, ag, period);
  CellComb comb(n);

  Real scale = 1;
  for (auto& [key, v] : masses.dev) scale = std::max(scale, std::abs(v));
  for (Real v : masses.periodic) scale = std::max(scale, std::abs(v));
  Real eps = 1e-13 * scale;

  auto win = model.window(model.finite_group() ? 0 : std::max(0, R - 1));
  for (const auto& g : win) {
    std::vector<Real> m(k);
    for (int i = 0; i < k; ++i) m[i] = masses.at(i, g);
    VecXi amb = model.ambient_shift(g);
    for (const auto& [child, parent] : cover.tree_edges) {
      Real w = m[child];
      if (std::abs(w) <= eps) continue;
      const auto& tp = edge_tubes.at({child, parent});
      // omega2 = omega1 - d eta2: moving w units child -> parent needs the
      // child->parent tube applied with weight -w
      add_shifted_form(res.eta2, tp.nu_M, -w, amb * N);
      add_shifted_form(deta2, tp.rho_M, -w, amb * N);
      comb.add(-w, shift_expr(tp.rho_expr, -amb));
      m[parent] += w;
      m[child] = 0;
      ++res.transports_applied;
    }
    for (int i = 0; i < k; ++i) res.root_residual = std::max(res.root_residual, std::abs(m[i]));
  }
  if (model.has_boundary()) attach_zero_traces(res.eta2, 1, /*by_margin=*/true);
  res.eta2_sup = sup_norm_form(res.eta2);

  // omega2 = omega1 - d eta2
  res.omega2.model = model;
  if (model.finite_group()) {
    ExprPtr dexpr = comb.size() ? periodize_expr(comb.build(), VecXi::Constant(1, model.m))
                                : const_expr(n, 0.0);
    DifferentialForm per = *omega1.periodic;
    per.comps[0].samples -= deta2.comps[0].samples;
    per.comps[0].gen = lincomb_expr({{1, omega1.periodic->comps[0].gen}, {-1, dexpr}}, n);
    res.omega2.periodic = std::move(per);
  } else {
    res.omega2.periodic = omega1.periodic;
    DifferentialForm dev = *omega1.deviation;
    dev.comps[0].samples -= deta2.comps[0].samples;
    std::vector<std::pair<Real, ExprPtr>> terms;
    terms.push_back({1, omega1.deviation->comps[0].gen});
    if (comb.size()) terms.push_back({-1, comb.build()});
    dev.comps[0].gen = lincomb_expr(std::move(terms), n);
    res.omega2.deviation = std::move(dev);
  }

  // spot-check the masses of omega2 at the identity
  MassLedger check = measure_masses(res.omega2, cover, 0);
  for (int i = 0; i < k; ++i)
    res.spot_check_residual =
        std::max(res.spot_check_residual, std::abs(check.at(i, model.identity())));
  return res;
}

NormalizeLocalResult normalize_local_wide(const BoundedForm& omega1, const CoverData& cover,
                                          const MassLedger& masses, int R) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  int N = cover.N;
  int k = static_cast<int>(cover.patches.size());

  auto hull_cell = [&](const Box& b) {
    Box out = b;
    for (int a = 0; a < n; ++a) {
      out.lo[a] -= 0.75;
      out.hi[a] += 0.75;
    }
    return out;
  };

  // probe tubes: P_alpha -> the wide region of the next cell along axis 0,
  // cross-aligned with the probe so the tube stays axis-aligned and its
  // bumps stay as wide as the regions allow
  VecXr e0 = VecXr::Unit(n, 0);
  std::vector<TransportPair> T;
  for (int alpha = 0; alpha < k; ++alpha) {
    const Box& P = cover.probes[alpha];
    Box target = shift_box(cover.wide_region, e0);
    for (int a = 1; a < n; ++a) {
      target.lo[a] = std::max(cover.wide_region.lo[a], P.lo[a] - 0.05);
      target.hi[a] = std::min(cover.wide_region.hi[a], P.hi[a] + 0.05);
    }
    T.push_back(make_transport(model, N, P, hull_cell(P), target, hull_cell(target)));
  }

  // per-patch source fractions (near-diagonal: each probe sits where its
  // own phi_i is exactly 1) and next-cell spill fractions
  VecXi amb_e0 = VecXi::Zero(n);
  amb_e0[0] = 1;
  MatXr M(k, k), Sp(k, k);  // [patch][alpha]
  for (int alpha = 0; alpha < k; ++alpha) {
    Real fs = 0, ts = 0;
    for (int i = 0; i < k; ++i) {
      M(i, alpha) = -integrate_hi(*product_expr(cover.patches[i].phi, T[alpha].rho_expr),
                                  T[alpha].source_box);
      Sp(i, alpha) = integrate_hi(
          *product_expr(cover.patches[i].phi, shift_expr(T[alpha].rho_expr, amb_e0)),
          shift_box(T[alpha].target_box, -e0));
      fs += M(i, alpha);
      ts += Sp(i, alpha);
    }
    if (std::abs(fs - 1) > 1e-8 || std::abs(ts - 1) > 1e-8)
      throw pipeline_error("normalize_local", "probe mass splits failed validation");
    if (M(alpha, alpha) < 0.45)
      throw pipeline_error("normalize_local", "probe split lost its diagonal dominance");
  }
  Eigen::ColPivHouseholderQR<MatXr> qr(M);

  Grid ag = assembly_grid(model, N, R);
  VecXi period = assembly_period(model);
  NormalizeLocalResult res;
  res.eta2 = DifferentialForm(n, n - 1, ag, period);
  DifferentialForm deta2(n, n, ag, period);
  CellComb comb(n);

  // current masses over the working window, swept along axis 0 so that the
  // spill is consumed before its cell is processed (the circle wraps, so it
  // iterates until the wrapped spill dies out)
  auto win = model.window(model.finite_group() ? 0 : std::max(0, R - 1));
  std::sort(win.begin(), win.end(), [](const GroupVec& x, const GroupVec& y) {
    for (size_t a = x.size(); a-- > 1;)
      if (x[a] != y[a]) return x[a] < y[a];
    return x[0] < y[0];
  });
  std::map<GroupVec, VecXr> cur;
  for (const auto& g : win) {
    VecXr m(k);
    for (int i = 0; i < k; ++i) m[i] = masses.at(i, g);
    cur[g] = m;
  }
  Real scale = 1;
  for (auto& [g, m] : cur) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  GroupVec e0g = axis_step(model, 0, 1);

  for (int pass = 0; pass < 16; ++pass) {
    Real moved = 0;
    for (const auto& g : win) {
      VecXr m = cur[g];
      if (m.cwiseAbs().maxCoeff() <= 1e-13 * scale) continue;
      VecXr c = qr.solve(-m);
      VecXi amb = model.ambient_shift(g);
      for (int alpha = 0; alpha < k; ++alpha) {
        Real w = c[alpha];
        if (w == 0) continue;
        add_shifted_form(res.eta2, T[alpha].nu_M, w, amb * N);
        add_shifted_form(deta2, T[alpha].rho_M, w, amb * N);
        comb.add(w, shift_expr(T[alpha].rho_expr, -amb));
        ++res.transports_applied;
      }
      cur[g] = m + M * c;
      moved = std::max(moved, c.cwiseAbs().maxCoeff());
      GroupVec gnext = model.g_add(g, e0g);
      auto it = cur.find(model.canonical(gnext));
      if (it != cur.end()) it->second -= Sp * c;
    }
    if (!model.finite_group() || moved <= 1e-13 * scale) break;
  }
  for (auto& [g, m] : cur) res.root_residual = std::max(res.root_residual, m.cwiseAbs().maxCoeff());

  // omega2 = omega1 - d eta2 (same packaging as the tree router)
  res.omega2.model = model;
  if (model.finite_group()) {
    ExprPtr dexpr = comb.size() ? periodize_expr(comb.build(), VecXi::Constant(1, model.m))
                                : const_expr(n, 0.0);
    DifferentialForm per = *omega1.periodic;
    per.comps[0].samples -= deta2.comps[0].samples;
    per.comps[0].gen = lincomb_expr({{1, omega1.periodic->comps[0].gen}, {-1, dexpr}}, n);
    res.omega2.periodic = std::move(per);
  } else {
    res.omega2.periodic = omega1.periodic;
    DifferentialForm dev = *omega1.deviation;
    dev.comps[0].samples -= deta2.comps[0].samples;
    std::vector<std::pair<Real, ExprPtr>> terms;
    terms.push_back({1, omega1.deviation->comps[0].gen});
    if (comb.size()) terms.push_back({-1, comb.build()});
    dev.comps[0].gen = lincomb_expr(std::move(terms), n);
    res.omega2.deviation = std::move(dev);
  }
  if (model.has_boundary()) attach_zero_traces(res.eta2, 1, /*by_margin=*/true);
  res.eta2_sup = sup_norm_form(res.eta2);

  MassLedger check = measure_masses(res.omega2, cover, 0);
  for (int i = 0; i < k; ++i)
    res.spot_check_residual =
        std::max(res.spot_check_residual, std::abs(check.at(i, model.identity())));
  return res;
}

GlobalPrimitiveResult global_primitive(const BoundedForm& omega2, const CoverData& cover, int R) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  int N = cover.N;

  Grid ag = assembly_grid(model, N, R);
  VecXi period = assembly_period(model);
  GlobalPrimitiveResult res;
  res.eta3 = DifferentialForm(n, n - 1, ag, period);
  res.k_stage = Real(cover.patches.size()) * kn_constant(n);

  DifferentialForm omega_w = sample_on_window(omega2, ag);
  Grid qg = Grid::unit(N, n);
  Real w2sup = sup_norm_form(omega_w);

  PrimitiveOptions popts;
  popts.margin = 0.1;

  for (const auto& patch : cover.patches) {
    Grid pg(N, patch.offset_steps, VecXi::Constant(n, N));
    ScalarField phis(pg, patch.phi);

    for (const auto& g : model.window(model.finite_group() ? 0 : std::max(0, R - 1))) {
      VecXi amb = model.ambient_shift(g);
      ScalarField wq(qg);
      Real sup = 0;
      VecXi idx = VecXi::Zero(n);
      for (Index si = 0; si < pg.size(); ++si) {
        VecXi t(n);
        for (int a = 0; a < n; ++a) t[a] = pg.lo_steps[a] + idx[a] + amb[a] * N;
        // the assembly field wraps for the circle
        if (model.finite_group()) t[0] = mod_floor(t[0], model.m * N);
        Real v = phis.samples[si] * omega_w.comps[0].value_at_steps(t);
        wq.samples[si] = v;
        sup = std::max(sup, std::abs(v));
        int a = n - 1;
        while (a >= 0) {
          if (++idx[a] < pg.count[a]) break;
          idx[a] = 0;
          --a;
        }
        if (a < 0) break;
      }
      // cells carrying only solver and cancellation residue contribute
      // nothing a primitive could meaningfully invert
      if (sup <= 1e-7 * w2sup) continue;

      DifferentialForm wform(n, n, qg);
      wform.comps[0] = std::move(wq);
      PrimitiveResult pr = (patch.domain == PrimitiveDomain::Slab) ? primitive_slab(wform, popts)
                                                                   : primitive_box(wform, popts);
      if (patch.domain == PrimitiveDomain::Slab &&
          (!pr.eta.traces.count(FaceKey{n - 1, 0}) || !pr.eta.traces.count(FaceKey{n - 1, 1})))
        throw pipeline_error("global_primitive", "slab primitive lost its exact traces");
      res.max_cell_integral = std::max(res.max_cell_integral, std::abs(pr.input_integral));
      add_shifted_form(res.eta3, pr.eta, 1.0, patch.offset_steps + amb * N);
      ++res.cells_solved;
    }
  }
  if (model.has_boundary()) attach_zero_traces(res.eta3, 1, /*by_margin=*/false);
  res.eta3_sup = sup_norm_form(res.eta3);
  return res;
}

SolveReport solve_primitive(const BoundedForm& omega, const PartitionFunction& phi,
                            const CoverData& cover, int R, Real class_tol) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  int N = cover.N;

  SolveReport rep;
  rep.omega_sup = sup_norm_bounded(omega);

  EllInftyFn values = integrate_phi(phi, omega, R);
  rep.fingerprint = class_fingerprint(values);
  if (std::abs(rep.fingerprint) > class_tol)
    throw not_certifiable("solve_primitive: class fingerprint " +
                          std::to_string(rep.fingerprint) + " is not zero; no primitive exists");

  EllInftyFn snapped = snap_fingerprint(values);
  snapped.prune(0);
  CoinvariantCertificate cert = certify_trivial(snapped);
  rep.certificate_size = cert.size();

  NormalizeGlobalResult ng = normalize_global(omega, cert, phi, cover, R);
  rep.stage1_interior_residual = ng.interior_residual;

  MassLedger masses = measure_masses(omega, cover, model.finite_group() ? 0 : R);
  for (const auto& [key, v] : ng.mass_delta) masses.dev[key] += v;

  NormalizeLocalResult nl = normalize_local_wide(ng.omega1, cover, masses, R);
  rep.stage2_root_residual = nl.root_residual;
  rep.stage2_spot_residual = nl.spot_check_residual;

  GlobalPrimitiveResult gp = global_primitive(nl.omega2, cover, R);
  rep.max_cell_integral = gp.max_cell_integral;

  rep.eta = ng.eta1 + nl.eta2 + gp.eta3;
  rep.eta_sup = sup_norm_form(rep.eta);
  Real w2sup = sup_norm_bounded(nl.omega2);
  rep.k_total = rep.omega_sup > 0
                    ? (ng.eta1_sup + nl.eta2_sup + gp.k_stage * w2sup) / rep.omega_sup
                    : 0;
  if (rep.eta_sup > rep.k_total * rep.omega_sup + 1e-12)
    throw pipeline_error("solve_primitive", "norm control violated");

  // independent residual verification on the interior window
  Grid ag = assembly_grid(model, N, R);
  DifferentialForm omega_w = sample_on_window(omega, ag);
  DifferentialForm deta = exterior_derivative(rep.eta, 6);
  int Rint = model.finite_group() ? model.m : std::max(1, R - 3);
  rep.interior_radius = Rint;
  Real worst = 0;
  {
    const Grid& g = ag;
    VecXi idx = VecXi::Zero(n);
    for (Index s = 0; s < g.size(); ++s) {
      bool interior = true;
      if (!model.finite_group()) {
        for (int a = 0; a < model.lattice_dim(); ++a) {
          int cell = floor_div(g.lo_steps[a] + idx[a], N);
          if (cell < -Rint || cell >= Rint) interior = false;
        }
      }
      if (interior)
        worst = std::max(worst, std::abs(deta.comps[0].samples[s] - omega_w.comps[0].samples[s]));
      int a = n - 1;
      while (a >= 0) {
        if (++idx[a] < g.count[a]) break;
        idx[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  rep.d_residual = worst;

  // strip: the primitive is relative, with exactly zero boundary traces
  if (model.has_boundary()) {
    for (int side : {0, 1}) {
      DifferentialForm tr = face_restriction(rep.eta, 1, side);
      for (auto& c : tr.comps)
        if (sup_norm(c) != 0) rep.boundary_zero = false;
    }
  }
  return rep;
}

BoundedForm surjectivity_witness(const EllInftyFn& f, const CoverData& cover, int R) {
  const Model& model = cover.model;
  int n = model.ambient_dim();
  int N = cover.N;
  const Box& core = cover.patches[0].core;

  std::vector<Analytic1D> axes;
  for (int a = 0; a < n; ++a)
    axes.push_back(mollifier_1d_profile(core.lo[a] + 0.03, core.hi[a] - 0.03));
  ExprPtr beta = separable_expr(std::move(axes));

  BoundedForm out;
  out.model = model;

  if (model.finite_group()) {
    CellComb comb(n);
    for (const auto& g : model.window(0)) {
      Real w = f.eval(g);
      if (w != 0) comb.add(w, shift_expr(beta, -model.ambient_shift(g)));
    }
    Grid fg = fundamental_grid(model, N);
    DifferentialForm per(n, n, fg, model.field_period());
    ExprPtr e = comb.size() ? periodize_expr(comb.build(), VecXi::Constant(1, model.m))
                            : const_expr(n, 0.0);
    per.comps[0] = ScalarField(fg, e, model.field_period());
    out.periodic = std::move(per);
    return out;
  }

  if (f.background != 0) {
    VecXi unit_period = VecXi::Zero(n);
    for (int a = 0; a < model.lattice_dim(); ++a) unit_period[a] = 1;
    Grid fg = fundamental_grid(model, N);
    DifferentialForm per(n, n, fg, model.field_period());
    per.comps[0] = ScalarField(
        fg, periodize_expr(lincomb_expr({{f.background, beta}}, n), unit_period),
        model.field_period());
    out.periodic = std::move(per);
  }

  CellComb comb(n);
  for (const auto& g : model.window(R)) {
    Real w = f.eval(g) - f.background;
    if (w != 0) comb.add(w, shift_expr(beta, -model.ambient_shift(g)));
  }
  if (comb.size()) {
    Grid wg = window_grid(model, N, R + 1);
    DifferentialForm dev(n, n, wg);
    dev.comps[0] = ScalarField(wg, comb.build());
    out.deviation = std::move(dev);
  }
  return out;
}

}  // namespace bdr
