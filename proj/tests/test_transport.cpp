#include <doctest.h>

#include <cmath>
#include <random>

#include "bdr/transport.hpp"

using namespace bdr;

namespace {

std::vector<VecXr> probe_points(const Model& model, std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<Real> U(-2, 2);
  std::vector<VecXr> out;
  for (int i = 0; i < count; ++i) {
    VecXr x(model.ambient_dim());
    for (int a = 0; a < x.size(); ++a) x[a] = U(rng);
    if (model.has_boundary()) x[1] = 0.5 + 0.4 * std::tanh(x[1]);
    if (model.finite_group()) x[0] = std::abs(x[0]);
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("build_cover: patches, cores, partition of unity") {
  std::mt19937_64 rng(61);
  for (Model model : {Model::line(), Model::plane(), Model::strip(), Model::circle(5)}) {
    CoverData cover = build_cover(model, 32);
    int k = 1 << model.lattice_dim();
    CHECK(static_cast<int>(cover.patches.size()) == k);
    // cores pairwise disjoint
    for (size_t i = 0; i < cover.patches.size(); ++i)
      for (size_t j = i + 1; j < cover.patches.size(); ++j)
        CHECK_FALSE(cover.patches[i].core.intersects(cover.patches[j].core));
    // lambda_i is exactly 1 at its core center, and the lambdas sum to 1
    for (const auto& p : cover.patches) {
      VecXr c = (p.core.lo + p.core.hi) / 2;
      CHECK(p.lambda->eval_abs(c) == 1.0);
    }
    for (const auto& x : probe_points(model, rng, 8)) {
      Real sum = 0;
      for (const auto& p : cover.patches) sum += p.lambda->eval_abs(x);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    // phi_i is 1 at the core center of its own lift
    PartitionFunction phi = build_phi_smooth(cover);
    for (size_t i = 0; i < cover.patches.size(); ++i) {
      VecXr c = (cover.patches[i].core.lo + cover.patches[i].core.hi) / 2;
      CHECK(cover.patches[i].phi->eval_abs(c) == 1.0);
    }
    // orbit sums of the lifted partition are exactly 1 (within rounding)
    for (const auto& x : probe_points(model, rng, 6))
      CHECK(orbit_sum(phi, x, 4) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tree edges: axis-aligned BFS, leaf-to-root") {
  CoverData cover = build_cover(Model::plane(), 32);
  REQUIRE(cover.tree_edges.size() == 3);
  // root is patch 0; every child appears exactly once
  std::vector<int> seen;
  for (auto& [c, p] : cover.tree_edges) {
    seen.push_back(c);
    CHECK(p != c);
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<int>{1, 2, 3});
}

TEST_CASE("make_transport: unit steps, diagonals, reversals") {
  Model line = Model::line();
  CoverData cover = build_cover(line, 64);
  const auto& p0 = cover.patches[0];

  // degenerate
  CHECK_THROWS_AS(make_transport(line, 64, p0.core, p0.patch_box, p0.core, p0.patch_box),
                  invalid_input);

  auto shift1 = [&](const Box& b, Real s) {
    Box out = b;
    out.lo[0] += s;
    out.hi[0] += s;
    return out;
  };
  TransportPair fwd = make_transport(line, 64, shift1(p0.core, -1), shift1(p0.patch_box, -1),
                                     p0.core, p0.patch_box);
  CHECK(fwd.source_mass == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(fwd.target_mass == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(fwd.tube.det > 0);

  // reversed direction on the line still moves mass the right way
  TransportPair back = make_transport(line, 64, shift1(p0.core, 1), shift1(p0.patch_box, 1),
                                      p0.core, p0.patch_box);
  CHECK(back.source_mass == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(back.target_mass == doctest::Approx(1.0).epsilon(1e-8));

  // plane diagonal between cores of different patches
  Model plane = Model::plane();
  CoverData pc = build_cover(plane, 64);
  TransportPair diag = make_transport(plane, 64, pc.patches[0].core, pc.patches[0].patch_box,
                                      pc.patches[3].core, pc.patches[3].patch_box);
  CHECK(diag.tube.det > 0);
  CHECK(diag.source_mass == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(diag.target_mass == doctest::Approx(1.0).epsilon(1e-8));
  // the pair's d-residual is second order in h (the constant is large on a
  // squeezed diagonal tube)
  CoverData pc2 = build_cover(plane, 128);
  TransportPair diag2 = make_transport(plane, 128, pc2.patches[0].core, pc2.patches[0].patch_box,
                                       pc2.patches[3].core, pc2.patches[3].patch_box);
  CHECK(diag.d_residual / diag2.d_residual > 3.0);
}

TEST_CASE("measure_masses agrees with the integration map") {
  Model plane = Model::plane();
  CoverData cover = build_cover(plane, 64);
  PartitionFunction phi = build_phi_smooth(cover);
  std::mt19937_64 rng(71);
  BoundedForm w = random_top_form(plane, 64, rng);
  MassLedger masses = measure_masses(w, cover, 4);
  EllInftyFn rep = integrate_phi(phi, w, 4);
  for (const auto& g : plane.window(3)) {
    Real sum = 0;
    for (int i = 0; i < 4; ++i) sum += masses.at(i, g);
    CHECK(sum == doctest::Approx(rep.eval(g)).epsilon(1e-11));
  }
}

TEST_CASE("normalize_global kills the certified representative") {
  Model line = Model::line();
  int N = 64, R = 6;
  CoverData cover = build_cover(line, N);
  PartitionFunction phi = build_phi_smooth(cover);

  BoundedForm w = cell_bump_top(line, N, {0}, 1.0) - cell_bump_top(line, N, {1}, 1.0);
  EllInftyFn rep = integrate_phi(phi, w, R);
  CHECK(std::abs(rep.background) < 1e-12);
  EllInftyFn snapped = snap_fingerprint(rep);
  snapped.prune(0);
  CoinvariantCertificate cert = certify_trivial(snapped);

  NormalizeGlobalResult ng = normalize_global(w, cert, phi, cover, R);
  CHECK(ng.interior_residual < 1e-9);
  CHECK(ng.steps_applied > 0);
}

TEST_CASE("normalize_global: empty certificate path") {
  Model line = Model::line();
  int N = 64, R = 5;
  CoverData cover = build_cover(line, N);
  PartitionFunction phi = build_phi_smooth(cover);
  std::mt19937_64 rng(81);
  RandomFormOptions opts;
  opts.with_periodic = true;
  opts.zero_cell_mass_periodic = true;
  opts.deviation_cells = 0;
  BoundedForm w = random_top_form(line, N, rng, opts);
  EllInftyFn rep = integrate_phi(phi, w, R);
  CHECK(std::abs(rep.background) < 1e-10);
  EllInftyFn snapped = snap_fingerprint(rep);
  snapped.prune(1e-13 * std::max<Real>(1, snapped.bound()));
  CoinvariantCertificate cert = certify_trivial(snapped);
  NormalizeGlobalResult ng = normalize_global(w, cert, phi, cover, R);
  CHECK(sup_norm_form(ng.eta1) <= 1e-9);
}

TEST_CASE("normalize_local routes masses along the tree") {
  Model plane = Model::plane();
  int N = 64, R = 4;
  CoverData cover = build_cover(plane, N);

  // a form whose phi-masses sit entirely in patches 0 and 3 at g = 0:
  // bumps inside the cores D_0 and D_3 with opposite weights
  const Box& c0 = cover.patches[0].core;
  const Box& c3 = cover.patches[3].core;
  auto core_bump = [&](const Box& core, Real wgt) {
    std::vector<Analytic1D> axes;
    for (int a = 0; a < 2; ++a)
      axes.push_back(mollifier_1d_profile(core.lo[a] + 0.02, core.hi[a] - 0.02));
    return separable_expr(std::move(axes), wgt);
  };
  Real c = 0.8;
  Grid wg = window_grid(plane, N, 2);
  DifferentialForm dev(2, 2, wg);
  dev.comps[0] =
      ScalarField(wg, lincomb_expr({{1, core_bump(c0, c)}, {1, core_bump(c3, -c)}}, 2));
  BoundedForm w;
  w.model = plane;
  w.deviation = std::move(dev);

  MassLedger masses = measure_masses(w, cover, R);
  CHECK(masses.at(0, {0, 0}) == doctest::Approx(c).epsilon(1e-9));
  CHECK(masses.at(3, {0, 0}) == doctest::Approx(-c).epsilon(1e-9));
  CHECK(std::abs(masses.at(1, {0, 0})) < 1e-12);
  CHECK(std::abs(masses.at(2, {0, 0})) < 1e-12);

  NormalizeLocalResult nl = normalize_local(w, cover, masses, R);
  CHECK(nl.transports_applied == 2);  // 3 -> 1 -> 0 along the BFS tree
  CHECK(nl.root_residual < 1e-9);
  CHECK(nl.spot_check_residual < 1e-8);
}

TEST_CASE("solve_primitive: line pipeline end to end") {
  Model line = Model::line();
  int N = 256, R = 6;
  CoverData cover = build_cover(line, N);
  PartitionFunction phi = build_phi_smooth(cover);

  BoundedForm w = cell_bump_top(line, N, {0}, 0.9) - cell_bump_top(line, N, {1}, 0.9);
  SolveReport rep = solve_primitive(w, phi, cover, R);
  Real h = 1.0 / N;
  CHECK(rep.d_residual <= 10 * h * h * rep.omega_sup);
  CHECK(rep.eta_sup <= rep.k_total * rep.omega_sup + 1e-12);
  CHECK(rep.stage1_interior_residual < 1e-9);

  // a form with a genuine class must be refused
  BoundedForm bad = cell_bump_top(line, N, {0}, 1.0) + periodic_comb_top(line, N, 0.3);
  CHECK_THROWS_AS(solve_primitive(bad, phi, cover, R), not_certifiable);
}

TEST_CASE("solve_primitive: exact forms d(alpha) are recovered") {
  Model line = Model::line();
  int N = 256, R = 6;
  CoverData cover = build_cover(line, N);
  PartitionFunction phi = build_phi_smooth(cover);

  // alpha: bounded 0-form bump in cell 0; omega = d alpha
  Grid wgr = window_grid(line, N, 2);
  DifferentialForm alpha(1, 0, wgr);
  alpha.comps[0] = ScalarField(wgr, separable_expr({mollifier_1d_profile(0.2, 0.8)}, 1.7));
  DifferentialForm domega = exterior_derivative_analytic(alpha);
  BoundedForm w;
  w.model = line;
  w.deviation = domega;
  SolveReport rep = solve_primitive(w, phi, cover, R);
  Real h = 1.0 / N;
  CHECK(rep.d_residual <= 10 * h * h * rep.omega_sup);
}

TEST_CASE("solve_primitive: circle solvable iff the total integral vanishes") {
  Model circle = Model::circle(5);
  int N = 256;
  CoverData cover = build_cover(circle, N);
  PartitionFunction phi = build_phi_smooth(cover);
  std::mt19937_64 rng(91);

  BoundedForm zc = random_zero_class_top(circle, N, rng, 3, 2);
  SolveReport rep = solve_primitive(zc, phi, cover, 0);
  Real h = 1.0 / N;
  CHECK(rep.d_residual <= 10 * h * h * rep.omega_sup);

  BoundedForm bad = cell_bump_top(circle, N, {2}, 0.7);
  CHECK_THROWS_AS(solve_primitive(bad, phi, cover, 0), not_certifiable);
}

TEST_CASE("surjectivity_witness reproduces the function") {
  Model line = Model::line();
  int N = 128, R = 8;
  CoverData cover = build_cover(line, N);
  PartitionFunction phi = build_phi_indicator(line, N);

  // f = delta_0
  EllInftyFn f(line);
  f.add_dev({0}, 1.0);
  BoundedForm wf = surjectivity_witness(f, cover, R);
  EllInftyFn rep = integrate_phi(phi, wf, R + 2);
  CHECK(std::abs(rep.eval({0}) - 1.0) < 1e-9);
  for (int g = -4; g <= 4; ++g)
    if (g != 0) CHECK(std::abs(rep.eval({g})) < 1e-9);

  // f constant: periodic comb of unit bumps
  EllInftyFn one(line);
  one.background = 1.0;
  BoundedForm w1 = surjectivity_witness(one, cover, R);
  EllInftyFn rep1 = integrate_phi(phi, w1, R + 2);
  CHECK(std::abs(rep1.background - 1.0) < 1e-9);

  // f zero: nothing
  EllInftyFn zero(line);
  BoundedForm w0 = surjectivity_witness(zero, cover, R);
  CHECK(sup_norm_bounded(w0) == 0.0);

  // with a ray: fingerprint and windowed difference certificate
  EllInftyFn fr(line);
  fr.background = 0.4;
  fr.rays.push_back({{1}, 0, -0.6});
  fr.add_dev({-2}, 0.9);
  BoundedForm wr = surjectivity_witness(fr, cover, R);
  EllInftyFn repr = integrate_phi(phi, wr, R + 2);
  CHECK(std::abs(class_fingerprint(repr) - 0.4) < 1e-9);
  EllInftyFn diff = window_restrict(repr - fr, 5);
  CHECK(std::abs(diff.background) == 0.0);
  auto cert = certify_trivial(diff);
  CHECK(check_certificate(diff, cert, 5));
}
