#include "bdr/bounded_form.hpp"

#include "bdr/analytic.hpp"

#include <cmath>

namespace bdr {

Grid fundamental_grid(const Model& model, int N) {
  switch (model.kind) {
    case ModelKind::Line: return Grid::from_cells(N, VecXi::Zero(1), VecXi::Ones(1));
    case ModelKind::Plane: return Grid::from_cells(N, VecXi::Zero(2), VecXi::Ones(2));
    case ModelKind::Strip: return Grid::from_cells(N, VecXi::Zero(2), VecXi::Ones(2));
    case ModelKind::Circle: return Grid::from_cells(N, VecXi::Zero(1), VecXi::Constant(1, model.m));
  }
  throw invalid_input("fundamental_grid: unknown model");
}

Grid window_grid(const Model& model, int N, int W) {
  switch (model.kind) {
    case ModelKind::Line:
      return Grid::from_cells(N, VecXi::Constant(1, -W), VecXi::Constant(1, 2 * W + 1));
    case ModelKind::Plane:
      return Grid::from_cells(N, VecXi::Constant(2, -W), VecXi::Constant(2, 2 * W + 1));
    case ModelKind::Strip: {
      VecXi lo(2), cnt(2);
      lo << -W, 0;
      cnt << 2 * W + 1, 1;
      return Grid::from_cells(N, lo, cnt);
    }
    case ModelKind::Circle: return fundamental_grid(model, N);
  }
  throw invalid_input("window_grid: unknown model");
}

int BoundedForm::degree() const {
  if (periodic) return periodic->k;
  if (deviation) return deviation->k;
  throw invalid_input("BoundedForm: empty");
}

int BoundedForm::N() const {
  if (periodic) return periodic->grid().N;
  if (deviation) return deviation->grid().N;
  throw invalid_input("BoundedForm: empty");
}

bool BoundedForm::has_gen() const {
  if (periodic && !periodic->has_gen()) return false;
  if (deviation && !deviation->has_gen()) return false;
  return periodic || deviation;
}

namespace {

Grid union_window(const Grid& a, const Grid& b) {
  if (a.N != b.N) throw invalid_input("union_window: resolution mismatch");
  int n = a.dim();
  VecXi lo(n), hi(n);
  for (int x = 0; x < n; ++x) {
    lo[x] = std::min(a.lo_steps[x], b.lo_steps[x]);
    hi[x] = std::max(a.lo_steps[x] + a.count[x], b.lo_steps[x] + b.count[x]);
  }
  return Grid(a.N, lo, hi - lo);
}

DifferentialForm embed_window(const DifferentialForm& f, const Grid& target) {
  if (f.grid().same_layout(target)) return f;
  DifferentialForm out(f.n, f.k, target, f.period());
  for (size_t i = 0; i < f.comps.size(); ++i) {
    out.comps[i].gen = f.comps[i].gen;
    VecXi off = f.comps[i].grid.lo_steps - target.lo_steps;
    VecXi idx = VecXi::Zero(f.n);
    for (Index s = 0; s < f.comps[i].grid.size(); ++s) {
      out.comps[i].samples[target.flat(idx + off)] = f.comps[i].samples[s];
      int a = f.n - 1;
      while (a >= 0) {
        if (++idx[a] < f.comps[i].grid.count[a]) break;
        idx[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  return out;
}

template <class Op>
BoundedForm combine(const BoundedForm& a, const BoundedForm& b, Op&& op, Real wb) {
  BoundedForm out;
  out.model = a.model;
  if (a.periodic && b.periodic)
    out.periodic = op(*a.periodic, *b.periodic);
  else if (a.periodic)
    out.periodic = *a.periodic;
  else if (b.periodic)
    out.periodic = wb * (*b.periodic);
  if (a.deviation && b.deviation) {
    Grid u = union_window(a.deviation->grid(), b.deviation->grid());
    out.deviation = op(embed_window(*a.deviation, u), embed_window(*b.deviation, u));
  } else if (a.deviation) {
    out.deviation = *a.deviation;
  } else if (b.deviation) {
    out.deviation = wb * (*b.deviation);
  }
  return out;
}

Analytic1D bump(Real a, Real b) { return mollifier_1d_profile(a, b); }

}  // namespace

BoundedForm operator+(const BoundedForm& a, const BoundedForm& b) {
  return combine(a, b, [](const DifferentialForm& x, const DifferentialForm& y) { return x + y; },
                 1);
}

BoundedForm operator-(const BoundedForm& a, const BoundedForm& b) {
  return combine(a, b, [](const DifferentialForm& x, const DifferentialForm& y) { return x - y; },
                 -1);
}

BoundedForm operator*(Real c, const BoundedForm& f) {
  BoundedForm out = f;
  if (out.periodic) out.periodic = c * (*out.periodic);
  if (out.deviation) out.deviation = c * (*out.deviation);
  return out;
}

BoundedForm pullback_translation(const BoundedForm& w, const GroupVec& g) {
  BoundedForm out = w;
  VecXi s = w.model.ambient_shift(g);
  if (out.periodic) out.periodic = pullback_translation(*out.periodic, s);
  if (out.deviation) out.deviation = pullback_translation(*out.deviation, s);
  return out;
}

BoundedForm exterior_derivative_analytic(const BoundedForm& w) {
  BoundedForm out;
  out.model = w.model;
  if (w.periodic) out.periodic = exterior_derivative_analytic(*w.periodic);
  if (w.deviation) out.deviation = exterior_derivative_analytic(*w.deviation);
  return out;
}

BoundedForm exterior_derivative(const BoundedForm& w, int fd_order) {
  BoundedForm out;
  out.model = w.model;
  if (w.periodic) out.periodic = exterior_derivative(*w.periodic, fd_order);
  if (w.deviation) out.deviation = exterior_derivative(*w.deviation, fd_order);
  return out;
}

Real sup_norm_bounded(const BoundedForm& w) {
  if (w.periodic && !w.deviation) return sup_norm_form(*w.periodic);
  if (w.deviation && !w.periodic) return sup_norm_form(*w.deviation);
  if (!w.periodic) return 0;
  // overlay the periodic part on the deviation window
  DifferentialForm total = *w.deviation;
  for (size_t i = 0; i < total.comps.size(); ++i) {
    ScalarField& dst = total.comps[i];
    VecXi idx = VecXi::Zero(total.n);
    for (Index s = 0; s < dst.grid.size(); ++s) {
      VecXi t(total.n);
      for (int a = 0; a < total.n; ++a) t[a] = dst.grid.lo_steps[a] + idx[a];
      dst.samples[s] += w.periodic->comps[i].value_at_steps(t);
      int a = total.n - 1;
      while (a >= 0) {
        if (++idx[a] < dst.grid.count[a]) break;
        idx[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  return std::max(sup_norm_form(total), sup_norm_form(*w.periodic));
}

ExprPtr component_expr(const BoundedForm& w, int comp) {
  std::vector<std::pair<Real, ExprPtr>> terms;
  int n = w.model.ambient_dim();
  if (w.periodic) {
    if (!w.periodic->comps[comp].gen) return nullptr;
    terms.push_back({1, w.periodic->comps[comp].gen});
  }
  if (w.deviation) {
    if (!w.deviation->comps[comp].gen) return nullptr;
    terms.push_back({1, w.deviation->comps[comp].gen});
  }
  if (terms.empty()) return nullptr;
  if (terms.size() == 1) return terms[0].second;
  return lincomb_expr(std::move(terms), n);
}

DifferentialForm sample_on_window(const BoundedForm& w, const Grid& grid) {
  int n = w.model.ambient_dim();
  long m = binomial(n, w.degree());
  DifferentialForm out(n, w.degree(), grid);
  for (long i = 0; i < m; ++i) {
    VecXi idx = VecXi::Zero(n);
    for (Index s = 0; s < grid.size(); ++s) {
      VecXi t(n);
      for (int a = 0; a < n; ++a) t[a] = grid.lo_steps[a] + idx[a];
      Real v = 0;
      if (w.periodic) v += w.periodic->comps[i].value_at_steps(t);
      if (w.deviation) v += w.deviation->comps[i].value_at_steps(t);
      out.comps[i].samples[s] = v;
      int a = n - 1;
      while (a >= 0) {
        if (++idx[a] < grid.count[a]) break;
        idx[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  }
  return out;
}

namespace {

// tensor mollifier bump of unit integral supported in a cell, margins 0.1
ExprPtr cell_bump_expr(const Model& model, const GroupVec& cell, Real weight) {
  int n = model.ambient_dim();
  VecXi amb = model.ambient_shift(cell);
  std::vector<Analytic1D> axes;
  for (int a = 0; a < n; ++a) axes.push_back(bump(amb[a] + 0.1, amb[a] + 0.9));
  return separable_expr(std::move(axes), weight);
}

}  // namespace

BoundedForm cell_bump_top(const Model& model, int N, const GroupVec& cell, Real weight) {
  return cell_bumps_top(model, N, {{cell, weight}});
}

BoundedForm cell_bumps_top(const Model& model, int N,
                           const std::vector<std::pair<GroupVec, Real>>& cells) {
  BoundedForm out;
  out.model = model;
  int n = model.ambient_dim();
  if (model.finite_group()) {
    // compact M: everything lives on the fundamental window with period m
    std::vector<std::pair<Real, ExprPtr>> terms;
    for (auto& [cell, w] : cells)
      terms.push_back({w, cell_bump_expr(model, model.canonical(cell), 1)});
    ExprPtr e = periodize_expr(lincomb_expr(std::move(terms), n), VecXi::Constant(1, model.m));
    DifferentialForm f(n, n, fundamental_grid(model, N), model.field_period());
    f.comps[0] = ScalarField(fundamental_grid(model, N), e, model.field_period());
    out.periodic = std::move(f);
    return out;
  }
  int W = 1;
  for (auto& [cell, w] : cells) {
    (void)w;
    for (int c : cell) W = std::max(W, std::abs(c) + 1);
  }
  Grid wg = window_grid(model, N, W);
  std::vector<std::pair<Real, ExprPtr>> terms;
  for (auto& [cell, w] : cells) terms.push_back({w, cell_bump_expr(model, cell, 1)});
  ExprPtr e = lincomb_expr(std::move(terms), n);
  DifferentialForm f(n, n, wg);
  f.comps[0] = ScalarField(wg, e);
  out.deviation = std::move(f);
  return out;
}

BoundedForm periodic_comb_top(const Model& model, int N, Real weight) {
  BoundedForm out;
  out.model = model;
  int n = model.ambient_dim();
  GroupVec origin(model.lattice_dim(), 0);
  VecXi unit_period = VecXi::Zero(n);
  for (int a = 0; a < model.lattice_dim(); ++a) unit_period[a] = 1;
  ExprPtr e = periodize_expr(cell_bump_expr(model, origin, weight), unit_period);
  Grid fg = fundamental_grid(model, N);
  DifferentialForm f(n, n, fg, model.field_period());
  f.comps[0] = ScalarField(fg, e, model.field_period());
  out.periodic = std::move(f);
  return out;
}

namespace {

Real uniform(std::mt19937_64& rng, Real lo, Real hi) {
  std::uniform_real_distribution<Real> U(lo, hi);
  return U(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> U(lo, hi);
  return U(rng);
}

// random sub-cell mollifier with margins inside (cell + 0.05, cell + 0.95)
Analytic1D random_bump_axis(std::mt19937_64& rng, Real cell_lo) {
  Real a = cell_lo + uniform(rng, 0.05, 0.35);
  Real b = cell_lo + uniform(rng, 0.6, 0.95);
  return bump(a, b);
}

}  // namespace

BoundedForm random_top_form(const Model& model, int N, std::mt19937_64& rng,
                            const RandomFormOptions& opts) {
  int n = model.ambient_dim();
  int d = model.lattice_dim();
  BoundedForm out;
  out.model = model;

  if (opts.with_periodic) {
    std::vector<std::pair<Real, ExprPtr>> terms;
    Real w1 = uniform(rng, 0.4, 1.6) * (uniform_int(rng, 0, 1) ? 1 : -1);
    std::vector<Analytic1D> ax1;
    for (int a = 0; a < n; ++a) ax1.push_back(random_bump_axis(rng, 0));
    terms.push_back({w1, separable_expr(std::move(ax1))});
    if (opts.zero_cell_mass_periodic) {
      std::vector<Analytic1D> ax2;
      for (int a = 0; a < n; ++a) ax2.push_back(random_bump_axis(rng, 0));
      terms.push_back({-w1, separable_expr(std::move(ax2))});
    } else if (uniform_int(rng, 0, 1)) {
      std::vector<Analytic1D> ax2;
      for (int a = 0; a < n; ++a) ax2.push_back(random_bump_axis(rng, 0));
      terms.push_back({uniform(rng, -0.8, 0.8), separable_expr(std::move(ax2))});
    }
    VecXi unit_period = VecXi::Zero(n);
    for (int a = 0; a < d; ++a) unit_period[a] = 1;
    if (model.finite_group()) unit_period[0] = 1;
    ExprPtr e = periodize_expr(lincomb_expr(std::move(terms), n), unit_period);
    Grid fg = fundamental_grid(model, N);
    DifferentialForm f(n, n, fg, model.field_period());
    f.comps[0] = ScalarField(fg, e, model.field_period());
    out.periodic = std::move(f);
  }

  if (opts.deviation_cells > 0 && !model.finite_group()) {
    Grid wg = window_grid(model, N, opts.window);
    std::vector<std::pair<Real, ExprPtr>> terms;
    for (int i = 0; i < opts.deviation_cells; ++i) {
      std::vector<Analytic1D> axes;
      GroupVec cell(d);
      for (int a = 0; a < d; ++a) cell[a] = uniform_int(rng, -opts.window, opts.window);
      VecXi amb = model.ambient_shift(cell);
      for (int a = 0; a < n; ++a) axes.push_back(random_bump_axis(rng, amb[a]));
      terms.push_back({uniform(rng, -1.5, 1.5), separable_expr(std::move(axes))});
    }
    ExprPtr e = lincomb_expr(std::move(terms), n);
    DifferentialForm f(n, n, wg);
    f.comps[0] = ScalarField(wg, e);
    out.deviation = std::move(f);
  } else if (model.finite_group() && opts.deviation_cells > 0) {
    // fold extra bumps into the compact window
    std::vector<std::pair<GroupVec, Real>> cells;
    for (int i = 0; i < opts.deviation_cells; ++i)
      cells.push_back({{uniform_int(rng, 0, model.m - 1)}, uniform(rng, -1.5, 1.5)});
    BoundedForm extra = cell_bumps_top(model, N, cells);
    out = out.periodic ? out + extra : extra;
  }
  return out;
}

BoundedForm random_zero_class_top(const Model& model, int N, std::mt19937_64& rng, int cells,
                                  int window) {
  RandomFormOptions opts;
  opts.with_periodic = false;
  opts.deviation_cells = cells;
  opts.window = window;
  BoundedForm f = random_top_form(model, N, rng, opts);
  if (model.finite_group()) {
    // remove the class: subtract the mean as a periodic comb
    Real total = integrate_hi(*component_expr(f, 0), fundamental_grid(model, N).box());
    f = f - periodic_comb_top(model, N, total / model.m);
  }
  return f;
}

BoundedForm random_strip_oneform(int N, std::mt19937_64& rng, bool relative,
                                 bool with_deviation) {
  Model model = Model::strip();
  int n = 2;
  BoundedForm out;
  out.model = model;
  VecXi xper(2);
  xper << 1, 0;

  auto x2_profile = [&](bool force_relative) -> Analytic1D {
    if (force_relative) return bump(uniform(rng, 0.05, 0.3), uniform(rng, 0.6, 0.95));
    // smooth on [0,1] with nonzero boundary values
    Real alpha = uniform(rng, -1, 1), beta = uniform(rng, -1, 1);
    Analytic1D s = smoothstep_profile();
    Analytic1D p;
    p.a = -std::numeric_limits<Real>::infinity();
    p.b = std::numeric_limits<Real>::infinity();
    p.f = [alpha, beta, s](Real t) { return alpha + beta * s.f(t); };
    p.df = [beta, s](Real t) { return beta * s.df(t); };
    return p;
  };

  // dx1 coefficient: periodic in x1
  std::vector<std::pair<Real, ExprPtr>> t0;
  t0.push_back({uniform(rng, -1.2, 1.2),
                separable_expr({random_bump_axis(rng, 0), x2_profile(relative)})});
  if (uniform_int(rng, 0, 1))
    t0.push_back({uniform(rng, -0.8, 0.8),
                  separable_expr({random_bump_axis(rng, 0), x2_profile(relative)})});
  ExprPtr e0 = periodize_expr(lincomb_expr(std::move(t0), n), xper);
  // dx2 coefficient: unconstrained by the relative condition
  ExprPtr e1 = periodize_expr(
      separable_expr({random_bump_axis(rng, 0), x2_profile(false)}, uniform(rng, -1.2, 1.2)),
      xper);

  Grid fg = fundamental_grid(model, N);
  DifferentialForm f(n, 1, fg, model.field_period());
  f.comps[0] = ScalarField(fg, e0, model.field_period());
  f.comps[1] = ScalarField(fg, e1, model.field_period());
  out.periodic = std::move(f);

  if (with_deviation) {
    Grid wg = window_grid(model, N, 2);
    std::vector<std::pair<Real, ExprPtr>> d0, d1;
    for (int i = 0; i < 2; ++i) {
      int cell = uniform_int(rng, -2, 2);
      d0.push_back({uniform(rng, -1, 1),
                    separable_expr({random_bump_axis(rng, cell), x2_profile(relative)})});
      int cell2 = uniform_int(rng, -2, 2);
      d1.push_back({uniform(rng, -1, 1),
                    separable_expr({random_bump_axis(rng, cell2), x2_profile(false)})});
    }
    DifferentialForm df(n, 1, wg);
    df.comps[0] = ScalarField(wg, lincomb_expr(std::move(d0), n));
    df.comps[1] = ScalarField(wg, lincomb_expr(std::move(d1), n));
    out.deviation = std::move(df);
  }
  return out;
}

BoundedForm boundary_restriction_model(const BoundedForm& w, int side) {
  if (!w.model.has_boundary()) throw invalid_input("boundary_restriction: model has no boundary");
  if (w.degree() != 1) throw invalid_input("boundary_restriction: expects an (n-1)-form");
  Real sign = side == 0 ? 1.0 : -1.0;  // induced boundary orientation
  Model line = Model::line();
  BoundedForm out;
  out.model = line;
  if (w.periodic) {
    DifferentialForm r = face_restriction(*w.periodic, 1, side);
    DifferentialForm f(1, 1, r.grid(), line.field_period());
    f.comps[0] = sign * r.comps[0];
    f.comps[0].period = line.field_period();
    out.periodic = std::move(f);
  }
  if (w.deviation) {
    DifferentialForm r = face_restriction(*w.deviation, 1, side);
    DifferentialForm f(1, 1, r.grid());
    f.comps[0] = sign * r.comps[0];
    out.deviation = std::move(f);
  }
  return out;
}

}  // namespace bdr
