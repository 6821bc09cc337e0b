#include "bdr/analytic.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <vector>

namespace bdr {

bool Analytic1D::bounded_support() const { return std::isfinite(a) && std::isfinite(b); }

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
struct GLRule {
  std::vector<Real> x, w;
};

const GLRule& gl_rule(int n) {
  static std::map<int, GLRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GLRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it2 = 0; it2 < 100; ++it2) {
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
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

Real gl_integrate_1d(const std::function<Real(Real)>& f, Real a, Real b, int panels, int deg) {
  const GLRule& r = gl_rule(deg);
  Real total = 0;
  Real len = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    Real lo = a + p * len, mid = lo + len / 2, half = len / 2;
    Real s = 0;
    for (int i = 0; i < deg; ++i) s += r.w[i] * f(mid + half * r.x[i]);
    total += s * half;
  }
  return total;
}

Real moll_shape(Real t, Real a, Real b) {
  if (t <= a || t >= b) return 0;
  return std::exp(-1 / ((t - a) * (b - t)));
}

Real moll_shape_deriv(Real t, Real a, Real b) {
  if (t <= a || t >= b) return 0;
  Real s = (t - a) * (b - t);
  Real ds = a + b - 2 * t;
  return std::exp(-1 / s) * ds / (s * s);
}

struct MollCache {
  MollifierInfo info;
  // cumulative table of the normalized bump: M+1 knots over [a,b]
  std::vector<Real> F;
  Real dt;
  int M;
};

const MollCache& moll_cache(Real a, Real b) {
  static std::map<std::pair<Real, Real>, MollCache> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(a, b);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  MollCache c;
  c.M = 4096;
  c.dt = (b - a) / c.M;
  auto shape = [&](Real t) { return moll_shape(t, a, b); };
  Real mass = gl_integrate_1d(shape, a, b, 256, 12);
  c.info.a = a;
  c.info.b = b;
  c.info.shape_mass = mass;
  c.info.sup = moll_shape((a + b) / 2, a, b) / mass;
  // |derivative| peaks off-center; locate by scan + refinement
  Real best = 0;
  for (int i = 1; i < 20000; ++i) {
    Real t = a + (b - a) * i / 20000.0;
    best = std::max(best, std::abs(moll_shape_deriv(t, a, b)));
  }
  c.info.dsup = best / mass;
  c.F.resize(c.M + 1);
  c.F[0] = 0;
  for (int i = 0; i < c.M; ++i) {
    Real lo = a + i * c.dt;
    c.F[i + 1] = c.F[i] + gl_integrate_1d(shape, lo, lo + c.dt, 1, 12) / mass;
  }
  c.F[c.M] = 1;  // pin the far end exactly
  return cache.emplace(key, std::move(c)).first->second;
}

}  // namespace

const MollifierInfo& mollifier_info(Real a, Real b) {
  if (!(a < b)) throw invalid_input("mollifier: degenerate interval");
  return moll_cache(a, b).info;
}

Analytic1D mollifier_1d_profile(Real a, Real b) {
  if (!(a < b)) throw invalid_input("mollifier: degenerate interval");
  const MollCache& c = moll_cache(a, b);
  Real mass = c.info.shape_mass;
  Analytic1D p;
  p.a = a;
  p.b = b;
  p.f = [a, b, mass](Real t) { return moll_shape(t, a, b) / mass; };
  p.df = [a, b, mass](Real t) { return moll_shape_deriv(t, a, b) / mass; };
  const MollCache* cp = &c;
  p.F = [a, b, mass, cp](Real t) -> Real {
    if (t <= a) return 0;
    if (t >= b) return 1;
    Real u = (t - a) / cp->dt;
    int i = std::min(static_cast<int>(u), cp->M - 1);
    Real s = (u - i) * cp->dt;     // offset within knot interval
    Real t0 = a + i * cp->dt;
    // cubic Hermite with exact derivatives (the bump itself)
    Real h = cp->dt, x = s / h;
    Real f0 = cp->F[i], f1 = cp->F[i + 1];
    Real d0 = moll_shape(t0, a, b) / mass, d1 = moll_shape(t0 + h, a, b) / mass;
    Real x2 = x * x, x3 = x2 * x;
    return f0 * (2 * x3 - 3 * x2 + 1) + h * d0 * (x3 - 2 * x2 + x) +
           f1 * (-2 * x3 + 3 * x2) + h * d1 * (x3 - x2);
  };
  return p;
}

Analytic1D smoothstep_profile() {
  auto E = [](Real u) { return u > 0 ? std::exp(-1 / u) : Real(0); };
  Analytic1D p;
  p.a = -kInf;
  p.b = kInf;
  p.f = [E](Real t) -> Real {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    Real e0 = E(t), e1 = E(1 - t);
    return e0 / (e0 + e1);
  };
  p.df = [E](Real t) -> Real {
    if (t <= 0 || t >= 1) return 0;
    Real e0 = E(t), e1 = E(1 - t);
    Real d0 = e0 / (t * t), d1 = e1 / ((1 - t) * (1 - t));
    Real s = e0 + e1;
    return (d0 * e1 + e0 * d1) / (s * s);
  };
  return p;
}

Analytic1D plateau_profile(Real lo, Real rise, Real hi, Real fall) {
  if (!(lo + rise <= hi - fall) || rise <= 0 || fall <= 0)
    throw invalid_input("plateau: inconsistent geometry");
  Analytic1D s = smoothstep_profile();
  Analytic1D p;
  p.a = lo;
  p.b = hi;
  p.f = [=](Real t) -> Real {
    if (t <= lo || t >= hi) return 0;
    Real v = 1;
    if (t < lo + rise) v = s.f((t - lo) / rise);
    if (t > hi - fall) v *= s.f((hi - t) / fall);
    return v;
  };
  p.df = [=](Real t) -> Real {
    if (t <= lo || t >= hi) return 0;
    if (t < lo + rise) return s.df((t - lo) / rise) / rise;
    if (t > hi - fall) return -s.df((hi - t) / fall) / fall;
    return 0;
  };
  return p;
}

Analytic1D constant_profile(Real c) {
  Analytic1D p;
  p.a = -kInf;
  p.b = kInf;
  p.f = [c](Real) { return c; };
  p.df = [](Real) { return Real(0); };
  return p;
}

Analytic1D cumulative_difference_profile(const Analytic1D& up, const Analytic1D& lo) {
  if (!up.has_cumulative() || !lo.has_cumulative())
    throw invalid_input("cumulative_difference: profiles lack cumulatives");
  Analytic1D p;
  p.a = std::min(up.a, lo.a);
  p.b = std::max(up.b, lo.b);
  auto uF = up.F, lF = lo.F, uf = up.f, lf = lo.f;
  p.f = [uF, lF](Real t) { return uF(t) - lF(t); };
  p.df = [uf, lf](Real t) { return uf(t) - lf(t); };
  return p;
}

MollifierInfo mollifier_dense_scan(Real a, Real b, long samples) {
  MollifierInfo info;
  info.a = a;
  info.b = b;
  // trapezoid on a dense grid; the shape vanishes to all orders at the ends
  Real mass = 0, sup = 0, dsup = 0;
  Real dt = (b - a) / samples;
  for (long i = 1; i < samples; ++i) {
    Real t = a + i * dt;
    Real v = moll_shape(t, a, b);
    mass += v;
    sup = std::max(sup, v);
    dsup = std::max(dsup, std::abs(moll_shape_deriv(t, a, b)));
  }
  mass *= dt;
  info.shape_mass = mass;
  info.sup = sup / mass;
  info.dsup = dsup / mass;
  return info;
}

}  // namespace bdr
