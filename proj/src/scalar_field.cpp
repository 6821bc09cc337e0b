#include "bdr/scalar_field.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace bdr {

namespace {

// Gauss-Legendre on [-1,1]; see analytic.cpp for the generator, duplicated
// here in reduced form to keep the quadrature self-contained.
struct GL {
  std::vector<Real> x, w;
};

const GL& gl12() {
  static GL r = [] {
    GL g;
    int n = 12;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
      Real x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        Real p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        Real dp = n * (x * p1 - p0) / (x * x - 1);
        Real dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      Real p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      Real dp = n * (x * p1 - p0) / (x * x - 1);
      g.x[i] = -x;
      g.x[n - 1 - i] = x;
      g.w[i] = g.w[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
    }
    return g;
  }();
  return r;
}

template <class Fn>
void for_each_line(const Grid& g, int axis, Fn&& fn) {
  auto st = g.strides();
  Index stride = st[axis];
  Index len = g.count[axis];
  int n = g.dim();
  VecXi idx = VecXi::Zero(n);
  while (true) {
    fn(g.flat(idx), stride, len);
    int a = n - 1;
    while (a >= 0) {
      if (a == axis) {
        --a;
        continue;
      }
      if (++idx[a] < g.count[a]) break;
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

}  // namespace

ScalarField::ScalarField(Grid g, VecXi period_) : grid(std::move(g)), period(std::move(period_)) {
  if (period.size() == 0) period = VecXi::Zero(grid.dim());
  samples = ArrayXr::Zero(grid.size());
}

ScalarField::ScalarField(Grid g, ExprPtr generator, VecXi period_)
    : ScalarField(std::move(g), std::move(period_)) {
  gen = std::move(generator);
  resample();
}

void ScalarField::resample() {
  if (!gen) throw invalid_input("resample: field has no generator");
  int n = dim();
  VecXi idx = VecXi::Zero(n), cell(n);
  VecXr local(n);
  for (Index f = 0; f < grid.size(); ++f) {
    grid.cell_local(idx, cell, local);
    samples[f] = gen->eval(cell, local);
    int a = n - 1;
    while (a >= 0) {
      if (++idx[a] < grid.count[a]) break;
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
}

Real ScalarField::value_at_steps(VecXi t) const {
  for (int a = 0; a < dim(); ++a) {
    if (periodic(a)) {
      int p = period[a] * grid.N;
      t[a] = grid.lo_steps[a] + mod_floor(t[a] - grid.lo_steps[a], p);
    }
    if (t[a] < grid.lo_steps[a] || t[a] >= grid.lo_steps[a] + grid.count[a]) return 0;
  }
  VecXi idx = t - grid.lo_steps;
  return samples[grid.flat(idx)];
}

void ScalarField::require_same_layout(const ScalarField& o, const char* what) const {
  if (!grid.same_layout(o.grid)) throw invalid_input(std::string(what) + ": grid mismatch");
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  a.require_same_layout(b, "operator+");
  ScalarField out = a;
  out.samples += b.samples;
  if (a.gen && b.gen)
    out.gen = lincomb_expr({{1, a.gen}, {1, b.gen}}, a.dim());
  else
    out.gen = nullptr;
  return out;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  a.require_same_layout(b, "operator-");
  ScalarField out = a;
  out.samples -= b.samples;
  if (a.gen && b.gen)
    out.gen = lincomb_expr({{1, a.gen}, {-1, b.gen}}, a.dim());
  else
    out.gen = nullptr;
  return out;
}

ScalarField operator*(Real c, const ScalarField& f) {
  ScalarField out = f;
  out.samples *= c;
  if (f.gen) out.gen = lincomb_expr({{c, f.gen}}, f.dim());
  return out;
}

ScalarField shift_field(const ScalarField& f, const VecXi& g_cells) {
  ScalarField out = f;
  // periodic axes rotate in place; others shift the window
  for (int a = 0; a < f.dim(); ++a) {
    if (f.periodic(a)) continue;
    out.grid.lo_steps[a] = f.grid.lo_steps[a] - g_cells[a] * f.grid.N;
  }
  bool rotate = false;
  for (int a = 0; a < f.dim(); ++a)
    if (f.periodic(a) && mod_floor(g_cells[a], f.period[a]) != 0) rotate = true;
  if (rotate) {
    ScalarField tmp(out.grid, out.period);
    int n = f.dim();
    VecXi idx = VecXi::Zero(n);
    for (Index k = 0; k < out.grid.size(); ++k) {
      VecXi t(n);
      for (int a = 0; a < n; ++a) {
        t[a] = out.grid.lo_steps[a] + idx[a];
        if (f.periodic(a)) t[a] += g_cells[a] * f.grid.N;
      }
      tmp.samples[k] = f.value_at_steps(t);
      int a = n - 1;
      while (a >= 0) {
        if (++idx[a] < out.grid.count[a]) break;
        idx[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
    out.samples.swap(tmp.samples);
  }
  if (f.gen) out.gen = shift_expr(f.gen, g_cells);
  return out;
}

namespace {

Real simpson_from_gen(const FieldExpr& e, const Box& region, int N) {
  int n = region.dim();
  std::vector<std::vector<Real>> nodes(n), weights(n);
  for (int a = 0; a < n; ++a) {
    Real len = region.extent(a);
    int M = std::max(2, 2 * static_cast<int>(std::ceil(len * N / 2)));
    Real step = len / M;
    for (int j = 0; j <= M; ++j) {
      nodes[a].push_back(region.lo[a] + j * step);
      Real w = (j == 0 || j == M) ? 1 : (j % 2 ? 4 : 2);
      weights[a].push_back(w * step / 3);
    }
  }
  VecXi j = VecXi::Zero(n);
  VecXr x(n);
  Real total = 0;
  while (true) {
    Real w = 1;
    for (int a = 0; a < n; ++a) {
      x[a] = nodes[a][j[a]];
      w *= weights[a][j[a]];
    }
    total += w * e.eval_abs(x);
    int a = n - 1;
    while (a >= 0) {
      if (++j[a] < static_cast<int>(nodes[a].size())) break;
      j[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return total;
}

Real midpoint_from_samples(const ScalarField& f, const Box& region) {
  int n = f.dim();
  int N = f.grid.N;
  Real h = f.grid.h();
  // per-axis: global steps whose cells overlap the region, with fractional weights
  std::vector<std::vector<std::pair<int, Real>>> axes(n);
  for (int a = 0; a < n; ++a) {
    int t0 = static_cast<int>(std::floor(region.lo[a] * N));
    int t1 = static_cast<int>(std::ceil(region.hi[a] * N)) - 1;
    for (int t = t0; t <= t1; ++t) {
      Real clo = Real(t) / N, chi = Real(t + 1) / N;
      Real ov = std::min(chi, region.hi[a]) - std::max(clo, region.lo[a]);
      if (ov <= 0) continue;
      axes[a].push_back({t, ov * N});
    }
    if (axes[a].empty()) return 0;
  }
  VecXi j = VecXi::Zero(n);
  VecXi t(n);
  Real total = 0;
  Real cellvol = std::pow(h, n);
  while (true) {
    Real w = 1;
    for (int a = 0; a < n; ++a) {
      t[a] = axes[a][j[a]].first;
      w *= axes[a][j[a]].second;
    }
    total += w * f.value_at_steps(t);
    int a = n - 1;
    while (a >= 0) {
      if (++j[a] < static_cast<int>(axes[a].size())) break;
      j[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return total * cellvol;
}

}  // namespace

Real integrate(const ScalarField& f, const Box& region) {
  if (region.dim() != f.dim()) throw invalid_input("integrate: dimension mismatch");
  for (int a = 0; a < region.dim(); ++a)
    if (!(region.extent(a) > 0)) throw invalid_input("integrate: empty region");
  if (f.gen) return simpson_from_gen(*f.gen, region, f.grid.N);
  return midpoint_from_samples(f, region);
}

Real integrate_hi(const FieldExpr& e, const Box& region, int panels_per_unit, int deg) {
  if (deg != 12) throw invalid_input("integrate_hi: only deg 12 wired");
  int n = region.dim();
  const GL& rule = gl12();
  // per axis: (cell, local, weight) nodes; panels aligned to unit cells
  struct Node {
    int cell;
    Real local, w;
  };
  std::vector<std::vector<Node>> axes(n);
  for (int a = 0; a < n; ++a) {
    Real lo = region.lo[a], hi = region.hi[a];
    if (!(hi > lo)) throw invalid_input("integrate_hi: empty region");
    std::vector<Real> cuts{lo};
    for (int c = static_cast<int>(std::floor(lo)) + 1; c < hi; ++c)
      if (c > lo) cuts.push_back(c);
    cuts.push_back(hi);
    for (size_t s = 0; s + 1 < cuts.size(); ++s) {
      Real slo = cuts[s], shi = cuts[s + 1];
      int cell = static_cast<int>(std::floor((slo + shi) / 2));
      Real llo = slo - cell, lhi = shi - cell;
      int panels = std::max(8, static_cast<int>(std::lround((lhi - llo) * panels_per_unit)));
      Real plen = (lhi - llo) / panels;
      for (int p = 0; p < panels; ++p) {
        Real mid = llo + (p + 0.5) * plen, half = plen / 2;
        for (size_t i = 0; i < rule.x.size(); ++i)
          axes[a].push_back({cell, mid + half * rule.x[i], rule.w[i] * half});
      }
    }
  }
  VecXi j = VecXi::Zero(n), cell(n);
  VecXr local(n);
  Real total = 0;
  while (true) {
    Real w = 1;
    for (int a = 0; a < n; ++a) {
      const Node& nd = axes[a][j[a]];
      cell[a] = nd.cell;
      local[a] = nd.local;
      w *= nd.w;
    }
    total += w * e.eval(cell, local);
    int a = n - 1;
    while (a >= 0) {
      if (++j[a] < static_cast<int>(axes[a].size())) break;
      j[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return total;
}

Real integrate_hi(const ScalarField& f, const Box& region) {
  if (!f.gen) throw invalid_input("integrate_hi: field has no generator");
  return integrate_hi(*f.gen, region);
}

ScalarField cumulative_integral(const ScalarField& f, int axis, int order) {
  if (axis < 0 || axis >= f.dim()) throw invalid_input("cumulative_integral: bad axis");
  if (order != 2 && order != 4) throw invalid_input("cumulative_integral: order must be 2 or 4");
  ScalarField out(f.grid);
  Real h = f.grid.h();
  for_each_line(f.grid, axis, [&](Index base, Index stride, Index len) {
    Real acc = 0;
    Real prev = f.samples[base];
    acc = 0.5 * h * prev;
    out.samples[base] = acc;
    for (Index i = 1; i < len; ++i) {
      Real cur = f.samples[base + i * stride];
      acc += 0.5 * h * (prev + cur);
      out.samples[base + i * stride] = acc;
      prev = cur;
    }
  });
  if (order == 4) {
    ScalarField d = partial_derivative(f, axis, 4);
    Real c = h * h / 12;
    for_each_line(f.grid, axis, [&](Index base, Index stride, Index len) {
      Real d0 = d.samples[base];
      for (Index i = 0; i < len; ++i)
        out.samples[base + i * stride] -= c * (d.samples[base + i * stride] - d0);
    });
  }
  return out;
}

ScalarField trailing_integral(const ScalarField& f, int keep) {
  int n = f.dim();
  if (keep < 1 || keep > n) throw invalid_input("trailing_integral: keep out of range");
  Grid og(f.grid.N, f.grid.lo_steps.head(keep), f.grid.count.head(keep));
  ScalarField out(og);
  if (keep == n) {
    out.samples = f.samples;
    return out;
  }
  Index tail = 1;
  for (int a = keep; a < n; ++a) tail *= f.grid.count[a];
  Real w = std::pow(f.grid.h(), n - keep);
  for (Index lead = 0; lead < og.size(); ++lead) {
    Real s = 0;
    const Real* p = f.samples.data() + lead * tail;
    for (Index i = 0; i < tail; ++i) s += p[i];
    out.samples[lead] = s * w;
  }
  return out;
}

Real integrate_samples(const ScalarField& f) {
  return f.samples.sum() * std::pow(f.grid.h(), f.dim());
}

namespace {
const std::vector<Real>& stencil(int order) {
  static const std::vector<Real> s2{-0.5, 0, 0.5};
  static const std::vector<Real> s4{1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12};
  static const std::vector<Real> s6{-1.0 / 60, 3.0 / 20, -0.75, 0, 0.75, -3.0 / 20, 1.0 / 60};
  switch (order) {
    case 2: return s2;
    case 4: return s4;
    case 6: return s6;
    default: throw invalid_input("partial_derivative: order must be 2, 4 or 6");
  }
}
}  // namespace

ScalarField partial_derivative(const ScalarField& f, int axis, int order) {
  if (axis < 0 || axis >= f.dim()) throw invalid_input("partial_derivative: bad axis");
  const auto& st = stencil(order);
  int hw = order / 2;
  Real invh = Real(f.grid.N);
  ScalarField out(f.grid, f.period);
  bool wrap = f.periodic(axis);
  Index plen = wrap ? Index(f.period[axis]) * f.grid.N : 0;
  for_each_line(f.grid, axis, [&](Index base, Index stride, Index len) {
    for (Index i = 0; i < len; ++i) {
      Real v = 0;
      if (i >= hw && i + hw < len) {
        for (int k = -hw; k <= hw; ++k) v += st[k + hw] * f.samples[base + (i + k) * stride];
      } else if (wrap) {
        for (int k = -hw; k <= hw; ++k) {
          Index j = ((i + k) % plen + plen) % plen;
          v += st[k + hw] * f.samples[base + j * stride];
        }
      } else if (i == 0) {
        v = -1.5 * f.samples[base] + 2.0 * f.samples[base + stride] - 0.5 * f.samples[base + 2 * stride];
      } else if (i == len - 1) {
        v = 1.5 * f.samples[base + i * stride] - 2.0 * f.samples[base + (i - 1) * stride] +
            0.5 * f.samples[base + (i - 2) * stride];
      } else {
        // centered O(h^2) fits here even when the wide stencil does not
        v = 0.5 * (f.samples[base + (i + 1) * stride] - f.samples[base + (i - 1) * stride]);
      }
      out.samples[base + i * stride] = v * invh;
    }
  });
  return out;
}

ScalarField partial_derivative_analytic(const ScalarField& f, int axis) {
  if (!f.gen) throw invalid_input("partial_derivative_analytic: no generator");
  ScalarField out(f.grid, f.period);
  int n = f.dim();
  VecXi idx = VecXi::Zero(n), cell(n);
  VecXr local(n);
  for (Index k = 0; k < f.grid.size(); ++k) {
    f.grid.cell_local(idx, cell, local);
    out.samples[k] = f.gen->deriv(axis, cell, local);
    int a = n - 1;
    while (a >= 0) {
      if (++idx[a] < f.grid.count[a]) break;
      idx[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

Real sup_norm(const ScalarField& f) {
  if (f.samples.size() == 0) return 0;
  return f.samples.abs().maxCoeff();
}

void add_sampled(ScalarField& f, const FieldExpr& e, Real w) {
  int n = f.dim();
  auto sup = e.support();
  VecXi ilo(n), ihi(n);
  for (int a = 0; a < n; ++a) {
    ilo[a] = 0;
    ihi[a] = static_cast<int>(f.grid.count[a]) - 1;
    if (sup) {
      // sample i covers coordinate (lo_steps+i+1/2)/N
      int lo_idx = static_cast<int>(std::floor(sup->lo[a] * f.grid.N)) - f.grid.lo_steps[a];
      int hi_idx = static_cast<int>(std::ceil(sup->hi[a] * f.grid.N)) - f.grid.lo_steps[a];
      ilo[a] = std::max(ilo[a], lo_idx);
      ihi[a] = std::min(ihi[a], hi_idx);
      if (ilo[a] > ihi[a]) return;
    }
  }
  VecXi idx = ilo, cell(n);
  VecXr local(n);
  while (true) {
    f.grid.cell_local(idx, cell, local);
    f.samples[f.grid.flat(idx)] += w * e.eval(cell, local);
    int a = n - 1;
    while (a >= 0) {
      if (++idx[a] <= ihi[a]) break;
      idx[a] = ilo[a];
      --a;
    }
    if (a < 0) break;
  }
}

Index zero_margin(const ScalarField& f, int axis, int side) {
  Index margin = f.grid.count[axis];
  for_each_line(f.grid, axis, [&](Index base, Index stride, Index len) {
    Index m = 0;
    while (m < len) {
      Index i = (side == 0) ? m : len - 1 - m;
      if (f.samples[base + i * stride] != 0) break;
      ++m;
    }
    margin = std::min(margin, m);
  });
  return margin;
}

}  // namespace bdr
