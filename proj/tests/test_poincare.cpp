#include <doctest.h>

#include <cmath>
#include <random>

#include "bdr/analytic.hpp"
#include "bdr/poincare.hpp"

using namespace bdr;

namespace {

DifferentialForm top_form(int n, int N, ExprPtr e) {
  DifferentialForm w(n, n, Grid::unit(N, n));
  w.comps[0] = ScalarField(Grid::unit(N, n), std::move(e));
  return w;
}

// difference of two unit-integral tensor bumps: zero integral by construction
ExprPtr two_bump_diff(int n, std::mt19937_64& rng, Real weight) {
  std::uniform_real_distribution<Real> U(0, 1);
  auto rand_axes = [&] {
    std::vector<Analytic1D> axes;
    for (int a = 0; a < n; ++a) {
      Real lo = 0.1 + 0.25 * U(rng);
      Real hi = 0.62 + 0.28 * U(rng);
      axes.push_back(mollifier_1d_profile(lo, hi));
    }
    return axes;
  };
  return lincomb_expr({{weight, separable_expr(rand_axes())},
                       {-weight, separable_expr(rand_axes())}},
                      n);
}

}  // namespace

TEST_CASE("kn_constant matches the frozen oracle values") {
  CHECK(kn_constant(1) == 1.0);
  CHECK(kn_constant(2) == doctest::Approx(constants::kK2).epsilon(1e-12));
  CHECK(kn_constant(3) == doctest::Approx(constants::kK3).epsilon(1e-12));
  CHECK(kn_constant(2) > kn_constant(1));
  CHECK(kn_constant(3) > kn_constant(2));
  CHECK(rho_axis_sup() == doctest::Approx(constants::kMollifier08Sup).epsilon(1e-12));
}

TEST_CASE("primitive_box: zero form") {
  DifferentialForm z = top_form(1, 64, const_expr(1, 0.0));
  z.comps[0].gen = nullptr;
  PrimitiveResult r = primitive_box(z);
  CHECK(sup_norm_form(r.eta) == 0.0);
  CHECK(r.ratio == 0.0);
  CHECK(r.residual == 0.0);
}

TEST_CASE("primitive_box n=1: derivative of a mollifier recovers it") {
  Analytic1D b = mollifier_1d_profile(0.2, 0.8);
  Analytic1D bp;
  bp.a = b.a;
  bp.b = b.b;
  bp.f = b.df;
  Real prev_worst = 0, prev_res = 0;
  for (int N : {128, 256}) {
    DifferentialForm w = top_form(1, N, separable_expr({bp}));
    PrimitiveResult r = primitive_box(w);
    CHECK(r.ratio <= 1.0);  // K_1 = 1
    Real worst = 0;
    for (Index i = 0; i < r.eta.comps[0].grid.size(); ++i)
      worst = std::max(worst, std::abs(r.eta.comps[0].samples[i] -
                                       b.value(r.eta.comps[0].grid.coord(0, i))));
    CHECK(worst < 2e-5);
    CHECK(r.residual < 1e-3);
    if (N == 256) {
      CHECK(prev_worst / worst > 3.5);
      CHECK(prev_res / r.residual > 3.5);
    }
    prev_worst = worst;
    prev_res = r.residual;
  }
}

TEST_CASE("primitive_box n=2: two-bump difference, residual order") {
  std::mt19937_64 rng(101);
  ExprPtr e = two_bump_diff(2, rng, 1.0);
  auto run = [&](int N) {
    DifferentialForm w = top_form(2, N, e);
    PrimitiveOptions opts;
    opts.keep_steps = true;
    PrimitiveResult r = primitive_box(w, opts);
    CHECK(r.ratio <= kn_constant(2));
    CHECK(r.margin_leak < 1e-12 * sup_norm_form(w));
    for (Real c : r.condition_residuals) CHECK(c < 1e-12 * sup_norm_form(w));
    CHECK(r.steps.size() == 2);
    return r.residual;
  };
  Real r1 = run(128), r2 = run(256);
  CHECK(r1 / r2 >= 3.5);
}

TEST_CASE("primitive_box: rejects margin violations and nonzero integrals") {
  // support reaching the face
  DifferentialForm bad = top_form(1, 64, separable_expr({mollifier_1d_profile(0.0, 0.6)}));
  CHECK_THROWS_AS(primitive_box(bad), invalid_input);
  // unbalanced bump: nonzero integral
  DifferentialForm nz = top_form(2, 64,
                                 separable_expr({mollifier_1d_profile(0.2, 0.8),
                                                 mollifier_1d_profile(0.2, 0.8)}));
  CHECK_THROWS_AS(primitive_box(nz), invalid_input);
}

TEST_CASE("primitive_box n=3: norm bound and steps") {
  std::mt19937_64 rng(202);
  DifferentialForm w = top_form(3, 32, two_bump_diff(3, rng, 0.7));
  PrimitiveResult r = primitive_box(w);
  CHECK(r.ratio <= kn_constant(3));
  CHECK(r.residual < 0.5 * sup_norm_form(w));  // coarse grid, just sanity
}

TEST_CASE("primitive_halfbox: exact zero boundary trace") {
  // mass near the boundary face x2 = 0, compensated by an interior bump
  Analytic1D s = smoothstep_profile();
  Analytic1D q;
  q.a = -1;
  q.b = 0.4;
  q.f = [s](Real t) { return t < 0.4 ? s.f((0.4 - t) / 0.3) : 0.0; };
  q.df = [s](Real t) { return t < 0.4 ? -s.df((0.4 - t) / 0.3) / 0.3 : 0.0; };
  Real qmass = integrate_hi(*separable_expr({q}), Box::unit(1));
  Analytic1D b1 = mollifier_1d_profile(0.15, 0.85);
  Analytic1D comp = mollifier_1d_profile(0.55, 0.9);
  ExprPtr e = lincomb_expr({{1.0, separable_expr({b1, q})},
                            {-qmass, separable_expr({b1, comp})}},
                           2);
  DifferentialForm w = top_form(2, 128, e);
  PrimitiveResult r = primitive_halfbox(w);
  CHECK(r.ratio <= kn_constant(2));

  DifferentialForm tr = face_restriction(r.eta, 1, 0);
  CHECK(sup_norm(tr.comps[0]) == 0.0);
  // lateral compact support
  CHECK(zero_margin(r.eta.comps[0], 0, 0) >= 6);
  CHECK(zero_margin(r.eta.comps[0], 0, 1) >= 6);
  CHECK(r.residual < 1e-2 * sup_norm_form(w));
}

TEST_CASE("primitive_slab: both traces exactly zero") {
  Analytic1D s = smoothstep_profile();
  Analytic1D qb, qt;
  qb.a = -1;
  qb.b = 0.35;
  qb.f = [s](Real t) { return t < 0.35 ? s.f((0.35 - t) / 0.25) : 0.0; };
  qb.df = [s](Real t) { return t < 0.35 ? -s.df((0.35 - t) / 0.25) / 0.25 : 0.0; };
  qt.a = 0.65;
  qt.b = 2;
  qt.f = [s](Real t) { return t > 0.65 ? s.f((t - 0.65) / 0.25) : 0.0; };
  qt.df = [s](Real t) { return t > 0.65 ? s.df((t - 0.65) / 0.25) / 0.25 : 0.0; };
  Real mb = integrate_hi(*separable_expr({qb}), Box::unit(1));
  Real mt = integrate_hi(*separable_expr({qt}), Box::unit(1));
  Analytic1D b1 = mollifier_1d_profile(0.2, 0.8);
  ExprPtr e = lincomb_expr({{1.0 / mb, separable_expr({b1, qb})},
                            {-1.0 / mt, separable_expr({b1, qt})}},
                           2);
  DifferentialForm w = top_form(2, 128, e);
  PrimitiveResult r = primitive_slab(w);
  for (int side : {0, 1}) {
    DifferentialForm tr = face_restriction(r.eta, 1, side);
    CHECK(sup_norm(tr.comps[0]) == 0.0);
  }
  CHECK(r.ratio <= kn_constant(2));
  CHECK(r.residual < 1e-2 * sup_norm_form(w));
}

TEST_CASE("primitive_box: random zero-integral suite, all ratios within K_n") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<Real> U(0.3, 2.0);
  for (int n : {1, 2}) {
    for (int trial = 0; trial < 5; ++trial) {
      DifferentialForm w = top_form(n, 64, two_bump_diff(n, rng, U(rng)));
      PrimitiveResult r = primitive_box(w);
      CHECK(r.ratio <= kn_constant(n));
      CHECK(r.margin_leak <= 1e-10 * sup_norm_form(w));
    }
  }
}
