#include "bdr/forms.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace bdr {

namespace {

const std::vector<std::vector<int>>& multi_index_table(int n, int k) {
  static std::map<std::pair<int, int>, std::vector<std::vector<int>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, combinations(n, k)).first;
  return it->second;
}

Grid face_grid(const Grid& g, int axis) {
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

VecXi drop_axis(const VecXi& v, int axis) {
  VecXi out(v.size() - 1);
  int j = 0;
  for (int a = 0; a < v.size(); ++a)
    if (a != axis) out[j++] = v[a];
  return out;
}

// tangential multi-indices of a k-form w.r.t. a face normal, paired with
// their positions in the full component list and re-indexed tangentially
std::vector<std::pair<int, int>> tangential_comps(int n, int k, int axis) {
  std::vector<std::pair<int, int>> out;
  const auto& all = multi_index_table(n, k);
  int t = 0;
  for (size_t i = 0; i < all.size(); ++i) {
    bool contains = false;
    for (int a : all[i]) contains |= (a == axis);
    if (!contains) out.push_back({static_cast<int>(i), t++});
  }
  return out;
}

}  // namespace

DifferentialForm::DifferentialForm(int n_, int k_, const Grid& grid, VecXi period) : n(n_), k(k_) {
  if (k < 0 || k > n) throw invalid_input("DifferentialForm: bad degree");
  if (grid.dim() != n) throw invalid_input("DifferentialForm: grid dimension mismatch");
  long m = binomial(n, k);
  comps.reserve(m);
  for (long i = 0; i < m; ++i) comps.emplace_back(grid, period);
}

bool DifferentialForm::has_gen() const {
  for (auto& c : comps)
    if (!c.gen) return false;
  return true;
}

const std::vector<std::vector<int>>& DifferentialForm::multi_indices() const {
  return multi_index_table(n, k);
}

namespace {

template <class Op>
DifferentialForm combine(const DifferentialForm& a, const DifferentialForm& b, Op&& op,
                         Real wb) {
  if (a.n != b.n || a.k != b.k) throw invalid_input("form arithmetic: shape mismatch");
  DifferentialForm out = a;
  for (size_t i = 0; i < out.comps.size(); ++i) out.comps[i] = op(a.comps[i], b.comps[i]);
  // traces: combine when both known, else infer or drop
  out.traces.clear();
  for (auto& [face, tr] : a.traces) {
    auto it = b.traces.find(face);
    if (it == b.traces.end()) continue;
    std::vector<ScalarField> sum;
    for (size_t i = 0; i < tr.size(); ++i) {
      ScalarField s = tr[i];
      s.samples += wb * it->second[i].samples;
      s.gen = nullptr;
      sum.push_back(std::move(s));
    }
    out.traces[face] = std::move(sum);
  }
  return out;
}

}  // namespace

DifferentialForm operator+(const DifferentialForm& a, const DifferentialForm& b) {
  return combine(a, b, [](const ScalarField& x, const ScalarField& y) { return x + y; }, 1);
}

DifferentialForm operator-(const DifferentialForm& a, const DifferentialForm& b) {
  return combine(a, b, [](const ScalarField& x, const ScalarField& y) { return x - y; }, -1);
}

DifferentialForm operator*(Real c, const DifferentialForm& f) {
  DifferentialForm out = f;
  for (auto& comp : out.comps) comp = c * comp;
  for (auto& [face, tr] : out.traces)
    for (auto& s : tr) s = c * s;
  return out;
}

namespace {

DifferentialForm exterior_derivative_impl(const DifferentialForm& w, int fd_order, bool analytic) {
  if (w.k >= w.n) throw invalid_input("exterior_derivative: no degree n+1 forms");
  DifferentialForm out(w.n, w.k + 1, w.grid(), w.period());
  const auto& in_idx = w.multi_indices();
  bool build_gen = analytic;
  std::vector<std::vector<std::pair<Real, ExprPtr>>> gen_terms(out.comps.size());
  for (size_t i = 0; i < in_idx.size(); ++i) {
    const auto& I = in_idx[i];
    for (int a = 0; a < w.n; ++a) {
      bool inI = false;
      int below = 0;
      for (int e : I) {
        if (e == a) inI = true;
        if (e < a) ++below;
      }
      if (inI) continue;
      std::vector<int> J = I;
      J.insert(J.begin() + below, a);
      int j = combination_index(w.n, J);
      Real sign = (below % 2) ? -1 : 1;
      ScalarField d = analytic ? partial_derivative_analytic(w.comps[i], a)
                               : partial_derivative(w.comps[i], a, fd_order);
      out.comps[j].samples += sign * d.samples;
      if (build_gen && w.comps[i].gen)
        gen_terms[j].push_back({sign, deriv_expr(w.comps[i].gen, a)});
      else
        build_gen = false;
    }
  }
  if (build_gen)
    for (size_t j = 0; j < out.comps.size(); ++j)
      out.comps[j].gen = lincomb_expr(std::move(gen_terms[j]), w.n);
  return out;
}

}  // namespace

DifferentialForm exterior_derivative(const DifferentialForm& w, int fd_order) {
  return exterior_derivative_impl(w, fd_order, false);
}

DifferentialForm exterior_derivative_analytic(const DifferentialForm& w) {
  if (!w.has_gen()) throw invalid_input("exterior_derivative_analytic: missing generators");
  return exterior_derivative_impl(w, 2, true);
}

Real sup_norm_form(const DifferentialForm& w) {
  if (w.comps.empty()) return 0;
  ArrayXr sq = w.comps[0].samples.square();
  for (size_t i = 1; i < w.comps.size(); ++i) sq += w.comps[i].samples.square();
  return sq.size() ? std::sqrt(sq.maxCoeff()) : 0;
}

DifferentialForm pullback_translation(const DifferentialForm& w, const VecXi& g) {
  DifferentialForm out = w;
  for (size_t i = 0; i < out.comps.size(); ++i) out.comps[i] = shift_field(w.comps[i], g);
  out.traces.clear();
  for (auto& [face, tr] : w.traces) {
    if (g[face.axis] != 0) continue;  // face would move; not needed here
    VecXi gt = drop_axis(g, face.axis);
    std::vector<ScalarField> moved;
    for (auto& s : tr) moved.push_back(shift_field(s, gt));
    out.traces[face] = std::move(moved);
  }
  return out;
}

void TubeEmbedding::finalize() {
  int n = static_cast<int>(A.rows());
  det = A.determinant();
  if (!(det > 0)) throw invalid_input("TubeEmbedding: orientation not positive");
  Ainv = A.inverse();
  Box lower = Box::unit(n), upper = Box::unit(n);
  lower.hi[n - 1] = Real(1) / 3;
  upper.lo[n - 1] = Real(2) / 3;
  if (!source_cell.contains(image_box(lower), 1e-12))
    throw invalid_input("TubeEmbedding: lower third escapes the source cell");
  if (!target_cell.contains(image_box(upper), 1e-12))
    throw invalid_input("TubeEmbedding: upper third escapes the target cell");
}

Box TubeEmbedding::image_box(const Box& q) const {
  int n = q.dim();
  VecXr lo = VecXr::Constant(n, std::numeric_limits<Real>::infinity());
  VecXr hi = -lo;
  for (long m = 0; m < (1L << n); ++m) {
    VecXr c(n);
    for (int a = 0; a < n; ++a) c[a] = (m >> a & 1) ? q.hi[a] : q.lo[a];
    VecXr x = A * c + b;
    for (int a = 0; a < n; ++a) {
      lo[a] = std::min(lo[a], x[a]);
      hi[a] = std::max(hi[a], x[a]);
    }
  }
  return Box(lo, hi);
}

DifferentialForm pushforward_tube(const DifferentialForm& nu, const TubeEmbedding& theta,
                                  const Grid& window, const VecXi& period) {
  if (!nu.has_gen()) throw invalid_input("pushforward_tube: input must carry generators");
  int n = nu.n;
  MatXr M = theta.Ainv;
  VecXr c = -(theta.Ainv * theta.b);
  DifferentialForm out(n, nu.k, window, period);
  auto compose = [&](const ExprPtr& e) { return affine_expr(e, M, c); };

  if (nu.k == 0) {
    out.comps[0].gen = compose(nu.comps[0].gen);
  } else if (nu.k == n) {
    out.comps[0].gen = lincomb_expr({{Real(1) / theta.det, compose(nu.comps[0].gen)}}, n);
  } else if (nu.k == n - 1) {
    // vector-density rule: V_M(x) = A V_Q(theta^{-1} x) / det
    for (int km = 0; km < n; ++km) {
      std::vector<std::pair<Real, ExprPtr>> terms;
      Real sm = (km % 2) ? -1 : 1;  // c_missing(k) = (-1)^k V_k
      for (int jq = 0; jq < n; ++jq) {
        if (theta.A(km, jq) == 0) continue;
        Real sq = (jq % 2) ? -1 : 1;
        int comp_q = nu.comp_of([&] {
          std::vector<int> idx;
          for (int a = 0; a < n; ++a)
            if (a != jq) idx.push_back(a);
          return idx;
        }());
        terms.push_back({sm * sq * theta.A(km, jq) / theta.det, compose(nu.comps[comp_q].gen)});
      }
      int comp_m = out.comp_of([&] {
        std::vector<int> idx;
        for (int a = 0; a < n; ++a)
          if (a != km) idx.push_back(a);
        return idx;
      }());
      out.comps[comp_m].gen = lincomb_expr(std::move(terms), n);
    }
  } else {
    throw invalid_input("pushforward_tube: degree not supported");
  }
  for (auto& comp : out.comps)
    if (comp.gen) add_sampled(comp, *comp.gen);
  return out;
}

DifferentialForm face_restriction(const DifferentialForm& w, int axis, int side) {
  int n = w.n;
  const Grid& g = w.grid();
  Grid fg = face_grid(g, axis);
  auto tang = tangential_comps(n, w.k, axis);
  DifferentialForm out(n - 1, w.k, fg, drop_axis(w.period(), axis));

  auto it = w.traces.find(FaceKey{axis, side});
  if (it != w.traces.end()) {
    for (auto& [ci, ti] : tang) {
      (void)ci;
      out.comps[ti] = it->second[ti];
    }
    return out;
  }

  int face_step = side == 0 ? g.lo_steps[axis] : g.lo_steps[axis] + g.count[axis];
  for (auto& [ci, ti] : tang) {
    const ScalarField& src = w.comps[ci];
    ScalarField& dst = out.comps[ti];
    if (src.gen) {
      // exact evaluation on the face
      int m = fg.dim();
      VecXi idx = VecXi::Zero(m), fcell(m), cell(n);
      VecXr flocal(m), local(n);
      for (Index f = 0; f < fg.size(); ++f) {
        fg.cell_local(idx, fcell, flocal);
        int j = 0;
        for (int a = 0; a < n; ++a) {
          if (a == axis) {
            cell[a] = floor_div(face_step, g.N);
            local[a] = Real(mod_floor(face_step, g.N)) / g.N;
          } else {
            cell[a] = fcell[j];
            local[a] = flocal[j];
            ++j;
          }
        }
        dst.samples[f] = src.gen->eval(cell, local);
        int a = m - 1;
        while (a >= 0) {
          if (++idx[a] < fg.count[a]) break;
          idx[a] = 0;
          --a;
        }
        if (a < 0) break;
      }
      dst.gen = slice_expr(src.gen, axis, face_step, g.N);
    } else if (!src.periodic(axis) && zero_margin(src, axis, side) >= 2) {
      // exact zero trace
    } else {
      // one-sided quadratic extrapolation to the face (O(h^3))
      auto st = g.strides();
      Index stride = st[axis], len = g.count[axis];
      if (len < 3) throw invalid_input("face_restriction: window too thin");
      int m = fg.dim();
      VecXi idx = VecXi::Zero(m);
      for (Index f = 0; f < fg.size(); ++f) {
        VecXi full(n);
        int j = 0;
        for (int a = 0; a < n; ++a) {
          if (a == axis) {
            full[a] = 0;
          } else {
            full[a] = idx[j];
            ++j;
          }
        }
        Index base = src.grid.flat(full);
        Real f0, f1, f2;
        if (side == 0) {
          f0 = src.samples[base];
          f1 = src.samples[base + stride];
          f2 = src.samples[base + 2 * stride];
        } else {
          f0 = src.samples[base + (len - 1) * stride];
          f1 = src.samples[base + (len - 2) * stride];
          f2 = src.samples[base + (len - 3) * stride];
        }
        dst.samples[f] = 1.875 * f0 - 1.25 * f1 + 0.375 * f2;
        int a = m - 1;
        while (a >= 0) {
          if (++idx[a] < fg.count[a]) break;
          idx[a] = 0;
          --a;
        }
        if (a < 0) break;
      }
    }
  }
  return out;
}

bool is_relative(const DifferentialForm& w, int axis) {
  for (int side : {0, 1}) {
    DifferentialForm tr = face_restriction(w, axis, side);
    for (auto& c : tr.comps)
      if (sup_norm(c) != 0) return false;
  }
  return true;
}

void accumulate(DifferentialForm& a, const DifferentialForm& b, Real w) {
  if (a.n != b.n || a.k != b.k) throw invalid_input("accumulate: shape mismatch");
  if (a.grid().N != b.grid().N) throw invalid_input("accumulate: resolution mismatch");
  for (size_t i = 0; i < a.comps.size(); ++i) {
    ScalarField& dst = a.comps[i];
    const ScalarField& src = b.comps[i];
    VecXi off = src.grid.lo_steps - dst.grid.lo_steps;
    int n = a.n;
    VecXi idx = VecXi::Zero(n);
    for (Index f = 0; f < src.grid.size(); ++f) {
      VecXi di = idx + off;
      bool in = true;
      for (int x = 0; x < n; ++x)
        if (di[x] < 0 || di[x] >= dst.grid.count[x]) in = false;
      if (!in && src.samples[f] != 0)
        throw invalid_input("accumulate: source escapes destination window");
      if (in) dst.samples[dst.grid.flat(di)] += w * src.samples[f];
      int x = n - 1;
      while (x >= 0) {
        if (++idx[x] < src.grid.count[x]) break;
        idx[x] = 0;
        --x;
      }
      if (x < 0) break;
    }
  }
}

DifferentialForm zero_like(const DifferentialForm& w) {
  DifferentialForm out = w;
  for (auto& c : out.comps) {
    c.samples.setZero();
    c.gen = nullptr;
  }
  out.traces.clear();
  return out;
}

void strip_generators(DifferentialForm& w) {
  for (auto& c : w.comps) c.gen = nullptr;
}

}  // namespace bdr
