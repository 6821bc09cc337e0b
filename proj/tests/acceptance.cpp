// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Tolerances and budgets are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "bdr/io.hpp"
#include "bdr/transport.hpp"

using namespace bdr;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(int idx, const char* name, bool pass, const std::string& detail, double secs) {
  std::printf("criterion %d %-28s %s  %s  (%.1fs)\n", idx, name, pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  if (!pass) ++failures;
}

// random zero-integral top form on Q: difference of unit-integral bumps
ExprPtr zero_integral_expr(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> U(0, 1);
  auto axes = [&] {
    std::vector<Analytic1D> ax;
    for (int a = 0; a < n; ++a)
      ax.push_back(mollifier_1d_profile(0.1 + 0.25 * U(rng), 0.62 + 0.28 * U(rng)));
    return ax;
  };
  Real w = 0.3 + 1.7 * U(rng);
  std::vector<std::pair<Real, ExprPtr>> terms{{w, separable_expr(axes())},
                                              {-w, separable_expr(axes())}};
  if (U(rng) > 0.5) {
    Real w2 = 0.2 + U(rng);
    terms.push_back({w2, separable_expr(axes())});
    terms.push_back({-w2, separable_expr(axes())});
  }
  return lincomb_expr(std::move(terms), n);
}

DifferentialForm q_form(int n, int N, ExprPtr e) {
  DifferentialForm w(n, n, Grid::unit(N, n));
  w.comps[0] = ScalarField(Grid::unit(N, n), std::move(e));
  return w;
}

// random zero-integral form on Q' whose support may touch the boundary face
ExprPtr halfbox_expr(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> U(0, 1);
  Analytic1D s = smoothstep_profile();
  // boundary-touching profile along the last axis
  Real cut = 0.3 + 0.2 * U(rng), rise = 0.15 + 0.1 * U(rng);
  Analytic1D q;
  q.a = -1;
  q.b = cut;
  q.f = [s, cut, rise](Real t) { return t < cut ? s.f((cut - t) / rise) : 0.0; };
  q.df = [s, cut, rise](Real t) { return t < cut ? -s.df((cut - t) / rise) / rise : 0.0; };
  Real qmass = integrate_hi(*separable_expr({q}), Box::unit(1));
  Analytic1D comp = mollifier_1d_profile(0.45 + 0.1 * U(rng), 0.85 + 0.08 * U(rng));
  std::vector<Analytic1D> lower, upper;
  for (int a = 0; a + 1 < n; ++a) {
    Analytic1D lat = mollifier_1d_profile(0.1 + 0.2 * U(rng), 0.65 + 0.25 * U(rng));
    lower.push_back(lat);
    upper.push_back(lat);
  }
  lower.push_back(q);
  upper.push_back(comp);
  Real w = 0.4 + 1.2 * U(rng);
  return lincomb_expr({{w, separable_expr(std::move(lower))},
                       {-w * qmass, separable_expr(std::move(upper))}},
                      n);
}

void criterion1() {
  Timer t;
  bool pass = true;
  std::ostringstream detail;
  std::mt19937_64 rng(1001);
  int counts[4] = {0, 30, 15, 5};
  Real worst_ratio_margin = 0;
  for (int n = 1; n <= 3; ++n) {
    Real kn = kn_constant(n);
    for (int trial = 0; trial < counts[n]; ++trial) {
      PrimitiveResult r = primitive_box(q_form(n, 128, zero_integral_expr(n, rng)));
      if (!(r.ratio <= kn)) pass = false;
      worst_ratio_margin = std::max(worst_ratio_margin, r.ratio / kn);
    }
  }
  // residual improves by >= 3.5 from N = 128 to 256
  Real worst_gain = 1e30;
  std::mt19937_64 rng2(1002);
  int dcounts[4] = {0, 3, 2, 1};
  for (int n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < dcounts[n]; ++trial) {
      ExprPtr e = zero_integral_expr(n, rng2);
      Real r1 = primitive_box(q_form(n, 128, e)).residual;
      Real r2 = primitive_box(q_form(n, 256, e)).residual;
      worst_gain = std::min(worst_gain, r1 / r2);
      if (!(r1 / r2 >= 3.5)) pass = false;
    }
  }
  detail << "max ratio/K_n " << format_real(worst_ratio_margin) << ", min doubling gain "
         << format_real(worst_gain);
  report(1, "poincare_norm_bound", pass, detail.str(), t.seconds());
}

void criterion2() {
  Timer t;
  bool pass = true;
  std::mt19937_64 rng(2001);
  Real worst_trace = 0, worst_ratio_margin = 0;
  int counts[4] = {0, 30, 15, 5};
  for (int n = 1; n <= 3; ++n) {
    Real kn = kn_constant(n);
    for (int trial = 0; trial < counts[n]; ++trial) {
      PrimitiveResult r = primitive_halfbox(q_form(n, 128, halfbox_expr(n, rng)));
      if (!(r.ratio <= kn)) pass = false;
      worst_ratio_margin = std::max(worst_ratio_margin, r.ratio / kn);
      DifferentialForm tr = face_restriction(r.eta, n - 1, 0);
      for (auto& c : tr.comps) worst_trace = std::max(worst_trace, sup_norm(c));
    }
  }
  if (worst_trace != 0) pass = false;  // equality, not tolerance
  std::mt19937_64 rng2(2002);
  Real worst_gain = 1e30;
  int dcounts[4] = {0, 3, 2, 1};
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < dcounts[n]; ++trial) {
      ExprPtr e = halfbox_expr(n, rng2);
      Real r1 = primitive_halfbox(q_form(n, 128, e)).residual;
      Real r2 = primitive_halfbox(q_form(n, 256, e)).residual;
      worst_gain = std::min(worst_gain, r1 / r2);
      if (!(r1 / r2 >= 3.5)) pass = false;
    }
  std::ostringstream detail;
  detail << "max |trace| " << format_real(worst_trace) << ", max ratio/K_n "
         << format_real(worst_ratio_margin) << ", min doubling gain " << format_real(worst_gain);
  report(2, "boundary_poincare", pass, detail.str(), t.seconds());
}

void criterion3() {
  Timer t;
  bool pass = true;
  std::mt19937_64 rng(3001);
  PartitionFunction phi = build_phi_indicator(Model::strip(), 64);
  Real worst_gap = 0;
  for (int trial = 0; trial < 20; ++trial) {
    BoundedForm w = random_strip_oneform(64, rng, trial % 3 == 0);
    StokesReport rep = stokes_check(w, phi, 12, 20, 1e-6);
    worst_gap = std::max(worst_gap, rep.fingerprint_gap);
    if (!(rep.fingerprint_gap <= 1e-6) || !rep.cert_ok) pass = false;
  }
  std::ostringstream detail;
  detail << "max fingerprint gap " << format_real(worst_gap) << " (tol 1e-6), certificates on R=20";
  report(3, "stokes", pass, detail.str(), t.seconds());
}

void criterion4() {
  Timer t;
  bool pass = true;
  Real worst = 0;
  std::mt19937_64 rng(4001);
  std::vector<Model> models{Model::line(), Model::plane(), Model::strip(), Model::circle(5)};
  int trials[4] = {8, 4, 4, 4};
  for (size_t mi = 0; mi < models.size(); ++mi) {
    Model model = models[mi];
    int N = 64;
    CoverData cover = build_cover(model, N);
    PartitionFunction ind = build_phi_indicator(model, N);
    PartitionFunction smo = build_phi_smooth(cover);
    for (int trial = 0; trial < trials[mi]; ++trial) {
      BoundedForm w = random_top_form(model, N, rng);
      try {
        PhiIndependenceReport rep = check_phi_independence(ind, smo, w, 7, 1e-9);
        worst = std::max(worst, rep.fingerprint_residual);
        if (!rep.validated) pass = false;
      } catch (const pipeline_error&) {
        pass = false;
      }
    }
  }
  std::ostringstream detail;
  detail << "max background difference " << format_real(worst) << " (tol 1e-9)";
  report(4, "phi_independence", pass, detail.str(), t.seconds());
}

void criterion5() {
  Timer t;
  bool pass = true;
  std::mt19937_64 rng(5001);
  for (Model model : {Model::line(), Model::plane(), Model::strip(), Model::circle(5)}) {
    PartitionFunction phi = build_phi_indicator(model, 32);
    int d = model.lattice_dim();
    for (int trial = 0; trial < 10; ++trial) {
      BoundedForm w = random_top_form(model, 32, rng);
      GroupVec g(d, 0);
      for (int a = 0; a < d; ++a) g[a] = int(rng() % 5) - 2;
      if (!check_equivariance(phi, w, g, 3)) pass = false;
    }
  }
  report(5, "equivariance", pass, "exact equality on interior windows, 10 pairs per model",
         t.seconds());
}

void criterion6() {
  Timer t;
  bool pass = true;
  Real worst_rel = 0;
  std::ostringstream detail;
  auto one = [&](const Model& model, int N, int R, std::mt19937_64& rng, bool expect_boundary) {
    CoverData cover = build_cover(model, N);
    PartitionFunction phi = build_phi_smooth(cover);
    BoundedForm w = random_zero_class_top(model, N, rng, 2, 1);
    SolveReport rep = solve_primitive(w, phi, cover, R);
    Real h = 1.0 / N;
    Real budget = 10 * h * h * rep.omega_sup;
    worst_rel = std::max(worst_rel, rep.d_residual / budget);
    if (!(rep.d_residual <= budget)) pass = false;
    if (!(rep.eta_sup <= rep.k_total * rep.omega_sup + 1e-12)) pass = false;
    if (expect_boundary && !rep.boundary_zero) pass = false;
  };
  std::mt19937_64 rng(6001);
  for (int i = 0; i < 5; ++i) one(Model::line(), 256, 6, rng, false);
  for (int i = 0; i < 5; ++i) one(Model::plane(), 256, 5, rng, false);
  for (int i = 0; i < 3; ++i) one(Model::strip(), 256, 6, rng, true);
  detail << "max residual/budget " << format_real(worst_rel)
         << " (tol 10 h^2 ||omega||), K_total respected, strip boundary exact zero";
  report(6, "injectivity_pipeline", pass, detail.str(), t.seconds());
}

void criterion7() {
  Timer t;
  bool pass = true;
  Real worst = 0;
  std::mt19937_64 rng(7001);
  std::uniform_real_distribution<Real> U(-1.5, 1.5);
  std::vector<Model> models{Model::line(), Model::plane(), Model::circle(5)};
  int trials[3] = {4, 3, 3};
  for (size_t mi = 0; mi < models.size(); ++mi) {
    Model model = models[mi];
    int N = 128, R = 7;
    CoverData cover = build_cover(model, N);
    PartitionFunction phi = build_phi_indicator(model, N);
    for (int trial = 0; trial < trials[mi]; ++trial) {
      EllInftyFn f(model);
      int d = model.lattice_dim();
      if (!model.finite_group() && trial % 2) f.background = U(rng);
      for (int i = 0; i < 3; ++i) {
        GroupVec g(d);
        for (int a = 0; a < d; ++a)
          g[a] = model.finite_group() ? int(rng() % 5) : int(rng() % 5) - 2;
        f.add_dev(model.canonical(g), U(rng));
      }
      if (!model.finite_group() && trial == 2) f.rays.push_back({GroupVec(d, 1), 0, U(rng)});
      BoundedForm w = surjectivity_witness(f, cover, R);
      EllInftyFn rep = integrate_phi(phi, w, R + 2);
      Real gap = std::abs(class_fingerprint(rep) - class_fingerprint(f));
      worst = std::max(worst, gap);
      if (!(gap <= 1e-9)) pass = false;
      int Rw = model.finite_group() ? 0 : 4;
      EllInftyFn diff = window_restrict(rep - f, Rw);
      if (model.finite_group()) diff = snap_fingerprint(diff);
      CoinvariantCertificate cert = certify_trivial(diff);
      if (!check_certificate(diff, cert, Rw)) pass = false;
    }
  }
  std::ostringstream detail;
  detail << "max fingerprint gap " << format_real(worst) << " (tol 1e-9), differences certified";
  report(7, "surjectivity_section", pass, detail.str(), t.seconds());
}

void criterion8() {
  Timer t;
  bool pass = true;
  Model circle = Model::circle(5);
  int N = 256;
  CoverData cover = build_cover(circle, N);
  PartitionFunction phi = build_phi_indicator(circle, N);
  PartitionFunction phis = build_phi_smooth(cover);
  std::mt19937_64 rng(8001);
  Real worst_gap = 0;
  Box M = fundamental_grid(circle, N).box();
  for (int trial = 0; trial < 10; ++trial) {
    bool zero_class = trial < 5;
    BoundedForm w = zero_class ? random_zero_class_top(circle, N, rng, 3, 2)
                               : random_top_form(circle, N, rng);
    Real total = integrate_hi(*component_expr(w, 0), M);
    Real fingerprint = class_of(w, phi, 0).fingerprint;
    worst_gap = std::max(worst_gap, std::abs(fingerprint - total));
    if (!(std::abs(fingerprint - total) <= 1e-9)) pass = false;
    bool solvable;
    Real h = 1.0 / N;
    try {
      SolveReport rep = solve_primitive(w, phis, cover, 0);
      solvable = rep.d_residual <= 10 * h * h * rep.omega_sup;
    } catch (const not_certifiable&) {
      solvable = false;
    }
    if (solvable != (std::abs(total) <= 1e-8)) pass = false;
  }
  std::ostringstream detail;
  detail << "class = total integral (max gap " << format_real(worst_gap)
         << "), solvable iff |total| <= 1e-8, both directions on 10 forms";
  report(8, "finite_group_case", pass, detail.str(), t.seconds());
}

void criterion9() {
  Timer t;
  bool pass = true;
  std::mt19937_64 rng(9001);
  std::uniform_real_distribution<Real> U(-2, 2);
  // act is a left action, pointwise exact
  for (Model model : {Model::line(), Model::plane(), Model::circle(5)}) {
    int d = model.lattice_dim();
    for (int trial = 0; trial < 5; ++trial) {
      EllInftyFn f(model);
      f.background = U(rng);
      for (int i = 0; i < 5; ++i) {
        GroupVec x(d);
        for (int a = 0; a < d; ++a) x[a] = int(rng() % 9) - 4;
        f.add_dev(model.canonical(x), U(rng));
      }
      GroupVec g(d), h(d);
      for (int a = 0; a < d; ++a) {
        g[a] = int(rng() % 7) - 3;
        h[a] = int(rng() % 7) - 3;
      }
      for (const auto& x : model.window(4))
        if (act(g, act(h, f)).eval(x) != act(model.g_add(h, g), f).eval(x)) pass = false;
    }
  }
  // Folner means of coboundaries decay like the telescoping count
  Model line = Model::line();
  for (int trial = 0; trial < 5; ++trial) {
    EllInftyFn f(line);
    f.background = U(rng);
    for (int i = -4; i <= 4; ++i) f.add_dev({i}, U(rng));
    int shift = 1 + int(rng() % 3);
    EllInftyFn cb = coboundary(f, {shift});
    for (int R : {10, 20, 40}) {
      Real bound = f.bound() * Real(2 * shift) / Real(2 * R + 1);
      if (!(std::abs(folner_mean(cb, R)) <= bound + 1e-15)) pass = false;
    }
  }
  // 50 random finite-support functions certify and check exactly
  int okcount = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Model model = (trial % 2) ? Model::plane() : Model::line();
    int d = model.lattice_dim();
    EllInftyFn f(model);
    for (int i = 0; i < 6; ++i) {
      GroupVec x(d);
      for (int a = 0; a < d; ++a) x[a] = int(rng() % 11) - 5;
      f.add_dev(x, U(rng));
    }
    auto cert = certify_trivial(f);
    if (check_certificate(f, cert, 12)) ++okcount;
  }
  if (okcount != 50) pass = false;
  std::ostringstream detail;
  detail << "left action exact, folner O(1/R) at R in {10,20,40}, certify round-trip " << okcount
         << "/50";
  report(9, "coinvariant_machinery", pass, detail.str(), t.seconds());
}

}  // namespace

int main() {
  Timer total;
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("acceptance: %s (%d failures, %.1fs total)\n", failures == 0 ? "PASS" : "FAIL",
              failures, total.seconds());
  return failures == 0 ? 0 : 1;
}
