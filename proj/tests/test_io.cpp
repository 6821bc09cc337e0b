#include <doctest.h>

#include <random>
#include <sstream>

#include "bdr/analytic.hpp"
#include "bdr/io.hpp"

using namespace bdr;

TEST_CASE("field serialization round trip") {
  Grid g = Grid::from_cells(16, VecXi::Constant(2, -1), VecXi::Constant(2, 3));
  ScalarField f(g, separable_expr({mollifier_1d_profile(0.2, 0.8),
                                   mollifier_1d_profile(-0.5, 1.5)}));
  f.period[0] = 3;
  std::stringstream ss;
  write_field(ss, f);
  ScalarField back = read_field(ss);
  CHECK(back.grid.same_layout(f.grid));
  CHECK(back.period == f.period);
  CHECK((back.samples == f.samples).all());
}

TEST_CASE("form serialization round trip") {
  std::mt19937_64 rng(5);
  Grid g = Grid::unit(16, 2);
  DifferentialForm w(2, 1, g);
  std::uniform_real_distribution<Real> U(-1, 1);
  for (auto& c : w.comps)
    for (Index i = 0; i < c.samples.size(); ++i) c.samples[i] = U(rng);
  std::stringstream ss;
  write_form(ss, w);
  DifferentialForm back = read_form(ss);
  REQUIRE(back.comps.size() == w.comps.size());
  for (size_t i = 0; i < w.comps.size(); ++i)
    CHECK((back.comps[i].samples == w.comps[i].samples).all());
}

TEST_CASE("ellinfty serialization round trip") {
  Model m = Model::plane();
  EllInftyFn f(m);
  f.background = -0.125;
  f.add_dev({2, -1}, 0.75);
  f.add_dev({0, 3}, -1.5);
  f.rays.push_back({{1, 1}, 0, 0.5});
  std::stringstream ss;
  write_ellinfty(ss, f);
  EllInftyFn back = read_ellinfty(ss, m);
  for (auto& g : m.window(5)) CHECK(back.eval(g) == f.eval(g));
}

TEST_CASE("convergence table shapes") {
  std::stringstream one;
  emit_convergence(one, {{128, 1e-3}});
  CHECK(one.str() == "N,residual,ratio_to_previous\n128,0.001,\n");

  std::stringstream empty;
  emit_convergence(empty, {});
  CHECK(empty.str() == "N,residual,ratio_to_previous\n");

  std::stringstream two;
  emit_convergence(two, {{128, 8e-3}, {256, 2e-3}});
  CHECK(two.str().find("256,0.002,4\n") != std::string::npos);
}
