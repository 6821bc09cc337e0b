#include "bdr/ellinfty.hpp"

#include <cmath>

namespace bdr {

namespace {

bool on_ray(const Model& model, const GroupVec& g, const EllInftyFn::Ray& r) {
  if (model.finite_group()) throw invalid_input("EllInftyFn: rays unsupported for finite G");
  for (size_t a = 0; a < g.size(); ++a) {
    int delta = g[a] - r.base[a];
    if (static_cast<int>(a) == r.axis) {
      if (delta < 0) return false;
    } else if (delta != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

Real EllInftyFn::eval(const GroupVec& g_) const {
  GroupVec g = model.canonical(g_);
  Real v = background;
  auto it = dev.find(g);
  if (it != dev.end()) v += it->second;
  for (const auto& r : rays)
    if (on_ray(model, g, r)) v += r.weight;
  return v;
}

Real EllInftyFn::bound() const {
  Real b = std::abs(background);
  Real dmax = 0;
  for (auto& [g, w] : dev) dmax = std::max(dmax, std::abs(w));
  Real rsum = 0;
  for (auto& r : rays) rsum += std::abs(r.weight);
  return b + dmax + rsum;
}

void EllInftyFn::add_dev(const GroupVec& g, Real w) { dev[model.canonical(g)] += w; }

void EllInftyFn::prune(Real eps) {
  for (auto it = dev.begin(); it != dev.end();)
    it = (std::abs(it->second) <= eps) ? dev.erase(it) : std::next(it);
  for (auto it = rays.begin(); it != rays.end();)
    it = (std::abs(it->weight) <= eps) ? rays.erase(it) : std::next(it);
}

EllInftyFn act(const GroupVec& g, const EllInftyFn& f) {
  EllInftyFn out(f.model);
  out.background = f.background;
  GroupVec ng = f.model.g_neg(g);
  for (auto& [x, w] : f.dev) out.dev[f.model.g_add(x, ng)] = w;
  for (auto& r : f.rays) {
    EllInftyFn::Ray nr = r;
    nr.base = f.model.g_add(r.base, ng);
    out.rays.push_back(std::move(nr));
  }
  return out;
}

EllInftyFn coboundary(const EllInftyFn& f, const GroupVec& g) { return f - act(g, f); }

EllInftyFn operator+(const EllInftyFn& a, const EllInftyFn& b) {
  EllInftyFn out = a;
  out.background += b.background;
  for (auto& [g, w] : b.dev) out.dev[g] += w;
  for (auto& r : b.rays) out.rays.push_back(r);
  return out;
}

EllInftyFn operator-(const EllInftyFn& a, const EllInftyFn& b) {
  EllInftyFn out = a;
  out.background -= b.background;
  for (auto& [g, w] : b.dev) out.dev[g] -= w;
  for (auto& r : b.rays) {
    auto nr = r;
    nr.weight = -nr.weight;
    out.rays.push_back(std::move(nr));
  }
  return out;
}

EllInftyFn operator*(Real c, const EllInftyFn& f) {
  EllInftyFn out = f;
  out.background *= c;
  for (auto& [g, w] : out.dev) w *= c;
  for (auto& r : out.rays) r.weight *= c;
  return out;
}

Real folner_mean(const EllInftyFn& f, int R) {
  auto win = f.model.window(R);
  Real s = 0;
  for (const auto& g : win) s += f.eval(g);
  return s / Real(win.size());
}

Real finite_group_class(const EllInftyFn& f) {
  if (!f.model.finite_group()) throw invalid_input("finite_group_class: G is infinite");
  Real s = 0;
  for (const auto& g : f.model.window(0)) s += f.eval(g);
  return s;
}

Real class_fingerprint(const EllInftyFn& f) {
  return f.model.finite_group() ? finite_group_class(f) : f.background;
}

CoinvariantCertificate certify_trivial(const EllInftyFn& f) {
  CoinvariantCertificate cert;
  if (!f.rays.empty()) throw not_certifiable("certify_trivial: rays present");
  if (f.model.finite_group()) {
    Real sum = finite_group_class(f);
    if (sum != 0) throw not_certifiable("certify_trivial: nonzero total sum");
    // telescoping partial sums against the step g = -1
    GroupVec gstep{-1};
    Real acc = 0;
    for (int i = 0; i + 1 < f.model.m; ++i) {
      acc += f.eval({i});
      if (acc == 0) continue;
      EllInftyFn fj(f.model);
      fj.add_dev({i}, acc);
      cert.pairs.push_back({std::move(fj), gstep});
    }
    return cert;
  }
  if (f.background != 0) throw not_certifiable("certify_trivial: nonzero background");
  // delta at x = ray(x) - (-e0).ray(x), one weighted ray per support point
  int d = f.model.lattice_dim();
  GroupVec gstep(d, 0);
  gstep[0] = -1;
  for (auto& [x, w] : f.dev) {
    if (w == 0) continue;
    EllInftyFn fj(f.model);
    EllInftyFn::Ray r;
    r.base = x;
    r.axis = 0;
    r.weight = w;
    fj.rays.push_back(std::move(r));
    cert.pairs.push_back({std::move(fj), gstep});
  }
  return cert;
}

bool check_certificate(const EllInftyFn& f, const CoinvariantCertificate& cert, int R, Real tol) {
  for (const auto& g : f.model.window(R)) {
    Real v = f.eval(g);
    for (const auto& [fj, gj] : cert.pairs) {
      // form each pair's contribution first: points past a ray's base see
      // w - w = 0 exactly, so off-support pairs cannot disturb v
      Real contrib = fj.eval(g) - fj.eval(f.model.g_add(g, gj));
      v -= contrib;
    }
    if (!(std::abs(v) <= tol)) return false;
  }
  return true;
}

EllInftyFn snap_fingerprint(const EllInftyFn& f, Real* removed) {
  if (removed) *removed = class_fingerprint(f);
  EllInftyFn out = f;
  out.background = 0;
  if (f.model.finite_group()) {
    // subtract the mean; the last value absorbs the rounding so that the
    // left-to-right accumulated total is exactly zero
    Real mean = finite_group_class(f) / f.model.m;
    out.dev.clear();
    Real partial = 0;
    for (int i = 0; i + 1 < f.model.m; ++i) {
      Real v = f.eval({i}) - mean;
      if (v != 0) out.dev[{i}] = v;
      partial += v;
    }
    if (partial != 0) out.dev[{f.model.m - 1}] = -partial;
  }
  return out;
}

EllInftyFn window_restrict(const EllInftyFn& f, int R) {
  EllInftyFn out(f.model);
  for (const auto& g : f.model.window(R)) {
    Real v = f.eval(g) - f.background;
    if (v != 0) out.dev[f.model.canonical(g)] = v;
  }
  return out;
}

}  // namespace bdr
