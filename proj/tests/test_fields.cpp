#include <doctest.h>

#include <cmath>

#include "bdr/analytic.hpp"
#include "bdr/expr.hpp"
#include "bdr/scalar_field.hpp"

using namespace bdr;

namespace {

Analytic1D lambda_profile(std::function<Real(Real)> f, std::function<Real(Real)> df) {
  Analytic1D p;
  p.a = -std::numeric_limits<Real>::infinity();
  p.b = std::numeric_limits<Real>::infinity();
  p.f = std::move(f);
  p.df = std::move(df);
  return p;
}

// profile of b' when b is available in closed form; cumulative of b' is b
Analytic1D derivative_profile(const Analytic1D& p) {
  Analytic1D d;
  d.a = p.a;
  d.b = p.b;
  d.f = p.df;
  d.F = p.f;
  return d;
}

ScalarField field_1d(int N, const Analytic1D& p) {
  return ScalarField(Grid::unit(N, 1), separable_expr({p}));
}

}  // namespace

TEST_CASE("integrate: constants and antisymmetry") {
  auto one = lambda_profile([](Real) { return 1.0; }, [](Real) { return 0.0; });
  ScalarField f = field_1d(64, one);
  CHECK(integrate(f, Box::unit(1)) == doctest::Approx(1.0).epsilon(1e-15));

  auto sin2pi = lambda_profile([](Real t) { return std::sin(2 * M_PI * t); },
                               [](Real t) { return 2 * M_PI * std::cos(2 * M_PI * t); });
  ScalarField s = field_1d(256, sin2pi);
  CHECK(std::abs(integrate(s, Box::unit(1))) < 1e-10);
}

TEST_CASE("integrate: mollifier mass via refinement oracle") {
  Analytic1D m = mollifier_1d_profile(0, 1);
  Real i1 = integrate(field_1d(256, m), Box::unit(1));
  Real i2 = integrate(field_1d(512, m), Box::unit(1));
  Real i4 = integrate(field_1d(1024, m), Box::unit(1));
  CHECK(std::abs(i1 - 1.0) < 1e-8);
  CHECK(std::abs(i2 - 1.0) < 1e-8);
  CHECK(std::abs(i4 - 1.0) < 1e-8);
}

TEST_CASE("integrate: Simpson order check on a non-vanishing integrand") {
  // the mollifier's endpoint derivatives all vanish, so Simpson converges
  // beyond every algebraic order on it; exp(t) exposes the plain h^4 rate
  auto ex = lambda_profile([](Real t) { return std::exp(t); }, [](Real t) { return std::exp(t); });
  Real exact = std::exp(1.0) - 1.0;
  Real i1 = integrate(field_1d(16, ex), Box::unit(1)) - exact;
  Real i2 = integrate(field_1d(32, ex), Box::unit(1)) - exact;
  Real i4 = integrate(field_1d(64, ex), Box::unit(1)) - exact;
  Real d1 = std::abs(i1 - i2), d2 = std::abs(i2 - i4);
  CHECK(d1 / d2 >= 8.0);
}

TEST_CASE("integrate: sampled path, region clipping, errors") {
  Analytic1D m = mollifier_1d_profile(0.25, 0.75);
  ScalarField f = field_1d(128, m);
  f.gen = nullptr;  // force the sampled midpoint path
  Real full = integrate(f, Box::unit(1));
  CHECK(full == doctest::Approx(1.0).epsilon(1e-4));
  // region beyond the window contributes zero under zero extension
  CHECK(integrate(f, Box(VecXr::Constant(1, 2.0), VecXr::Constant(1, 3.0))) == 0.0);
  // fractional cells: split the window at an off-grid point, halves add up
  Box left(VecXr::Constant(1, 0.0), VecXr::Constant(1, 0.513));
  Box right(VecXr::Constant(1, 0.513), VecXr::Constant(1, 1.0));
  CHECK(integrate(f, left) + integrate(f, right) == doctest::Approx(full).epsilon(1e-14));
  CHECK_THROWS_AS(integrate(f, Box(VecXr::Constant(1, 0.5), VecXr::Constant(1, 0.5))),
                  invalid_input);
}

TEST_CASE("integrate_hi: class-level accuracy on mollifier masses") {
  Analytic1D m = mollifier_1d_profile(0.1, 0.9);
  auto e = separable_expr({m});
  CHECK(std::abs(integrate_hi(*e, Box::unit(1)) - 1.0) < 1e-12);
  // 2D tensor bump
  auto e2 = separable_expr({m, mollifier_1d_profile(0.2, 0.8)});
  CHECK(std::abs(integrate_hi(*e2, Box::unit(2)) - 1.0) < 1e-11);
}

TEST_CASE("cumulative_integral: zero, ramp, mollifier derivative") {
  ScalarField z(Grid::unit(64, 1));
  CHECK(sup_norm(cumulative_integral(z, 0)) == 0.0);

  auto one = lambda_profile([](Real) { return 1.0; }, [](Real) { return 0.0; });
  ScalarField f = field_1d(128, one);
  ScalarField H = cumulative_integral(f, 0);
  Real worst = 0;
  for (Index i = 0; i < H.grid.size(); ++i)
    worst = std::max(worst, std::abs(H.samples[i] - H.grid.coord(0, i)));
  CHECK(worst < 1e-12);  // trapezoid is exact for constants

  Analytic1D b = mollifier_1d_profile(0.1, 0.9);
  auto check_at = [&](int N) {
    ScalarField bp = field_1d(N, derivative_profile(b));
    ScalarField Hb = cumulative_integral(bp, 0);
    Real w = 0;
    for (Index i = 0; i < Hb.grid.size(); ++i)
      w = std::max(w, std::abs(Hb.samples[i] - b.value(Hb.grid.coord(0, i))));
    return w;
  };
  Real e1 = check_at(128), e2 = check_at(256);
  CHECK(e1 < 3e-3);
  CHECK(e1 / e2 > 3.0);  // second order
  // order-4 variant is strictly sharper
  ScalarField bp = field_1d(256, derivative_profile(b));
  ScalarField H4 = cumulative_integral(bp, 0, 4);
  Real w4 = 0;
  for (Index i = 0; i < H4.grid.size(); ++i)
    w4 = std::max(w4, std::abs(H4.samples[i] - b.value(H4.grid.coord(0, i))));
  CHECK(w4 < e2 / 20);
}

TEST_CASE("trailing_integral: separable oracle and norm bound") {
  auto one2 = separable_expr({lambda_profile([](Real) { return 1.0; }, nullptr),
                              lambda_profile([](Real) { return 1.0; }, nullptr)});
  ScalarField f(Grid::unit(32, 2), one2);
  ScalarField t = trailing_integral(f, 1);
  CHECK(sup_norm(t) == doctest::Approx(1.0).epsilon(1e-14));
  Real dev = 0;
  for (Index i = 0; i < t.grid.size(); ++i) dev = std::max(dev, std::abs(t.samples[i] - 1.0));
  CHECK(dev < 1e-13);

  Analytic1D b1 = mollifier_1d_profile(0.1, 0.9), b2 = mollifier_1d_profile(0.2, 0.7);
  ScalarField g(Grid::unit(128, 2), separable_expr({b1, b2}));
  ScalarField tg = trailing_integral(g, 1);
  ScalarField b1f = field_1d(128, b1);
  Real worst = 0;
  for (Index i = 0; i < tg.grid.size(); ++i)
    worst = std::max(worst, std::abs(tg.samples[i] - b1f.samples[i]));
  CHECK(worst < 1e-4);  // 1D midpoint error on the integrated-out factor
  CHECK(sup_norm(tg) <= sup_norm(g) + 1e-15);

  // zero total integral: the fully integrated-out value vanishes
  ScalarField diff = g - shift_field(g, VecXi::Zero(2));  // exactly zero field
  CHECK(std::abs(integrate_samples(diff)) == 0.0);
}

TEST_CASE("partial_derivative: polynomials, mollifier, edges") {
  auto sq = lambda_profile([](Real t) { return t * t; }, [](Real t) { return 2 * t; });
  ScalarField f = field_1d(64, sq);
  ScalarField d = partial_derivative(f, 0);
  Real worst = 0;
  for (Index i = 0; i < d.grid.size(); ++i)
    worst = std::max(worst, std::abs(d.samples[i] - 2 * d.grid.coord(0, i)));
  CHECK(worst < 1e-10);  // centered and one-sided O(h^2) stencils are exact on parabolas

  ScalarField c = field_1d(64, lambda_profile([](Real) { return 3.25; }, nullptr));
  CHECK(sup_norm(partial_derivative(c, 0)) < 1e-13);

  Analytic1D b = mollifier_1d_profile(0.1, 0.9);
  auto err_at = [&](int N) {
    ScalarField bf = field_1d(N, b);
    ScalarField bd = partial_derivative(bf, 0);
    ScalarField bd_exact = partial_derivative_analytic(bf, 0);
    return sup_norm(bd - bd_exact);
  };
  Real e1 = err_at(256), e2 = err_at(512);
  CHECK(e1 / e2 > 3.2);
}

TEST_CASE("mollifier_1d: normalization, endpoints, cached constants") {
  Analytic1D m = mollifier_1d_profile(0.1, 0.9);
  CHECK(m.value(0.1) == 0.0);
  CHECK(m.value(0.9) == 0.0);
  CHECK(m.value(0.05) == 0.0);
  for (Real t : {0.15, 0.3, 0.5, 0.77}) CHECK(m.value(t) > 0.0);

  const MollifierInfo& info = mollifier_info(0.1, 0.9);
  CHECK(info.shape_mass == doctest::Approx(constants::kMollifier08Mass).epsilon(1e-13));
  CHECK(info.sup == doctest::Approx(constants::kMollifier08Sup).epsilon(1e-13));
  CHECK(info.dsup == doctest::Approx(constants::kMollifier08DSup).epsilon(1e-7));

  const MollifierInfo& i01 = mollifier_info(0, 1);
  CHECK(i01.shape_mass == doctest::Approx(constants::kMollifier01Mass).epsilon(1e-13));
  CHECK(i01.sup == doctest::Approx(constants::kMollifier01Sup).epsilon(1e-13));

  // dense-scan oracle re-derivation
  MollifierInfo scan = mollifier_dense_scan(0.1, 0.9, 100000);
  CHECK(scan.sup == doctest::Approx(constants::kMollifier08Sup).epsilon(1e-6));

  // cumulative: exact ends, midpoint accuracy
  CHECK(m.cumulative(0.1) == 0.0);
  CHECK(m.cumulative(0.9) == 1.0);
  CHECK(m.cumulative(1.5) == 1.0);
  Real mid = m.cumulative(0.5);
  CHECK(mid == doctest::Approx(0.5).epsilon(1e-12));  // symmetric bump
}

TEST_CASE("sup_norm: zero, constant, sine") {
  ScalarField z(Grid::unit(32, 1));
  CHECK(sup_norm(z) == 0.0);
  ScalarField c = field_1d(32, lambda_profile([](Real) { return -2.5; }, nullptr));
  CHECK(sup_norm(c) == 2.5);
  auto sin2pi = lambda_profile([](Real t) { return std::sin(2 * M_PI * t); }, nullptr);
  Real s = sup_norm(field_1d(256, sin2pi));
  CHECK(s <= 1.0);
  CHECK(s >= 1.0 - 1e-3);
}

TEST_CASE("shift_field: exact shifts, periodic wrap, misalignment guard") {
  Analytic1D b = mollifier_1d_profile(0.2, 0.8);
  Grid g = Grid::from_cells(32, VecXi::Constant(1, -2), VecXi::Constant(1, 5));
  ScalarField f(g, separable_expr({b}));
  VecXi e1 = VecXi::Constant(1, 1);
  ScalarField sf = shift_field(f, e1);
  // sample-wise: sf(x) = f(x+1)
  for (Index i = 0; i < sf.grid.size(); ++i) {
    VecXi t = VecXi::Constant(1, sf.grid.step(0, i) + 32);
    CHECK(sf.samples[i] == f.value_at_steps(t));
  }
  // periodic rotation on a circle of 3 cells
  Grid cg = Grid::from_cells(16, VecXi::Zero(1), VecXi::Constant(1, 3));
  ScalarField pf(cg, VecXi::Constant(1, 3));
  for (Index i = 0; i < pf.grid.size(); ++i) pf.samples[i] = Real(i);
  ScalarField rot = shift_field(pf, e1);
  for (Index i = 0; i < rot.grid.size(); ++i) {
    VecXi t = VecXi::Constant(1, int(i) + 16);
    CHECK(rot.samples[i] == pf.value_at_steps(t));
  }
}

TEST_CASE("zero_margin reports exact zero bands") {
  Analytic1D b = mollifier_1d_profile(0.25, 0.5);
  ScalarField f = field_1d(64, b);
  CHECK(zero_margin(f, 0, 0) == 16);  // samples at (i+1/2)/64 < 0.25
  CHECK(zero_margin(f, 0, 1) == 32);
}
