// Batch experiment harness: configure a model geometry and a form, run one
// of the pipelines, emit CSV tables plus machine-readable pass/fail output.
//
// Flags: --config PATH, --out DIR, --override key=value (repeatable).
// BDR_NUM_THREADS limits worker threads of the parallel loops.
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "bdr/io.hpp"
#include "bdr/transport.hpp"

using namespace bdr;
using nlohmann::json;

namespace {

struct Check {
  std::string name;
  bool pass;
  Real value;
  Real tolerance;
};

struct Run {
  std::vector<Check> checks;
  void add(const std::string& name, bool pass, Real value = 0, Real tol = 0) {
    checks.push_back({name, pass, value, tol});
  }
  bool ok() const {
    for (auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

Model parse_model(const json& cfg) {
  std::string m = cfg.at("model");
  if (m == "line") return Model::line();
  if (m == "plane") return Model::plane();
  if (m == "strip") return Model::strip();
  if (m == "circle") return Model::circle(cfg.value("m", 5));
  throw invalid_input("config: unknown model '" + m + "'");
}

BoundedForm build_form(const json& cfg, const Model& model, int N, std::mt19937_64& rng) {
  const json& f = cfg.at("form");
  std::string b = f.at("builder");
  if (b == "periodic_comb") return periodic_comb_top(model, N, f.value("weight", 1.0));
  if (b == "cell_bumps") {
    std::vector<std::pair<GroupVec, Real>> cells;
    auto cl = f.at("cells");
    auto wl = f.at("weights");
    for (size_t i = 0; i < cl.size(); ++i)
      cells.push_back({cl[i].get<GroupVec>(), wl[i].get<Real>()});
    return cell_bumps_top(model, N, cells);
  }
  if (b == "random") {
    RandomFormOptions opts;
    opts.with_periodic = f.value("periodic", true);
    opts.deviation_cells = f.value("cells", 3);
    opts.window = f.value("window", 2);
    opts.zero_cell_mass_periodic = f.value("zero_mean", false);
    return random_top_form(model, N, rng, opts);
  }
  if (b == "random_zero_class")
    return random_zero_class_top(model, N, rng, f.value("cells", 3), f.value("window", 2));
  if (b == "random_strip_oneform")
    return random_strip_oneform(N, rng, f.value("relative", false));
  throw invalid_input("config: unknown form builder '" + b + "'");
}

EllInftyFn parse_ellinfty(const json& j, const Model& model) {
  EllInftyFn f(model);
  f.background = j.value("background", 0.0);
  if (j.contains("dev"))
    for (auto& e : j["dev"]) f.add_dev(e[0].get<GroupVec>(), e[1].get<Real>());
  if (j.contains("rays"))
    for (auto& e : j["rays"])
      f.rays.push_back({e[0].get<GroupVec>(), e[1].get<int>(), e[2].get<Real>()});
  return f;
}

PartitionFunction make_phi(const json& cfg, const Model& model, int N, const CoverData* cover) {
  std::string mode = cfg.value("phi", "indicator");
  if (mode == "indicator") return build_phi_indicator(model, N);
  if (mode == "smooth") {
    if (!cover) throw invalid_input("config: smooth phi needs a cover");
    return build_phi_smooth(*cover);
  }
  throw invalid_input("config: unknown phi mode '" + mode + "'");
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string class_report_text(const ClassDescriptor& cd, size_t cert_size, Real residual) {
  std::ostringstream os;
  os << "class report\n";
  os << "fingerprint " << format_real(cd.fingerprint) << "\n";
  os << "certificate_size " << cert_size << "\n";
  os << "residual " << format_real(residual) << "\n";
  os << "representative\n";
  write_ellinfty(os, cd.rep);
  return os.str();
}

// ---- pipelines -----------------------------------------------------------

Run run_integrate(const json& cfg, const std::filesystem::path& out) {
  Run run;
  Model model = parse_model(cfg);
  int N = cfg.at("N"), R = cfg.at("R");
  std::mt19937_64 rng(cfg.at("seed").get<uint64_t>());
  CoverData cover = build_cover(model, N);
  PartitionFunction phi = make_phi(cfg, model, N, &cover);
  BoundedForm w = build_form(cfg, model, N, rng);
  ClassDescriptor cd = class_of(w, phi, R);
  {
    std::ofstream os(out / "values.csv");
    write_values_csv(os, cd.rep, R);
  }
  write_text(out / "class_report.txt", class_report_text(cd, 0, 0));
  run.add("integrate.completed", true);
  return run;
}

Run run_stokes(const json& cfg, const std::filesystem::path& out) {
  Run run;
  Model model = parse_model(cfg);
  if (!model.has_boundary()) throw invalid_input("config: stokes needs the strip model");
  int N = cfg.at("N"), R = cfg.at("R");
  std::mt19937_64 rng(cfg.at("seed").get<uint64_t>());
  BoundedForm w = build_form(cfg, model, N, rng);
  PartitionFunction phi = build_phi_indicator(model, N);
  StokesReport rep = stokes_check(w, phi, R, std::min(20, R + 8));
  BoundedForm bottom = boundary_restriction_model(w, 0);
  BoundedForm top = boundary_restriction_model(w, 1);
  PartitionFunction lphi = build_phi_indicator(Model::line(), N);
  {
    std::ofstream os(out / "values.csv");
    write_values_csv(os, integrate_phi(lphi, bottom, R) + integrate_phi(lphi, top, R), R);
  }
  std::ostringstream rp;
  rp << "stokes report\n";
  rp << "interior_fingerprint " << format_real(rep.interior_fingerprint) << "\n";
  rp << "boundary_fingerprint " << format_real(rep.boundary_fingerprint) << "\n";
  rp << "gap " << format_real(rep.fingerprint_gap) << "\n";
  rp << "certificate_size " << rep.cert.size() << "\n";
  rp << "boundary_identically_zero " << (rep.boundary_identically_zero ? 1 : 0) << "\n";
  write_text(out / "class_report.txt", rp.str());
  run.add("stokes.fingerprint_gap", rep.fingerprint_gap <= 1e-6, rep.fingerprint_gap, 1e-6);
  run.add("stokes.certificate", rep.cert_ok);
  return run;
}

DifferentialForm random_q_form(int n, int N, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> U(0, 1);
  auto axes = [&] {
    std::vector<Analytic1D> ax;
    for (int a = 0; a < n; ++a)
      ax.push_back(mollifier_1d_profile(0.1 + 0.25 * U(rng), 0.62 + 0.28 * U(rng)));
    return ax;
  };
  Real wgt = 0.3 + 1.4 * U(rng);
  ExprPtr e = lincomb_expr({{wgt, separable_expr(axes())}, {-wgt, separable_expr(axes())}}, n);
  DifferentialForm w(n, n, Grid::unit(N, n));
  w.comps[0] = ScalarField(Grid::unit(N, n), e);
  return w;
}

Run run_primitive(const json& cfg, const std::filesystem::path& out) {
  Run run;
  int N = cfg.at("N");
  int n = cfg.value("dim", 2);
  std::mt19937_64 rng(cfg.at("seed").get<uint64_t>());
  DifferentialForm w = random_q_form(n, N, rng);
  PrimitiveResult r = primitive_box(w);
  std::vector<ConvergenceRow> rows{{N, r.residual}};
  if (cfg.value("convergence", true)) {
    DifferentialForm w2(n, n, Grid::unit(2 * N, n));
    w2.comps[0] = ScalarField(Grid::unit(2 * N, n), w.comps[0].gen);
    PrimitiveResult r2 = primitive_box(w2);
    rows.push_back({2 * N, r2.residual});
    run.add("primitive.doubling_ratio", r.residual / r2.residual >= 3.5,
            r.residual / r2.residual, 3.5);
  }
  {
    std::ofstream os(out / "convergence.csv");
    emit_convergence(os, rows);
  }
  std::ostringstream rp;
  write_primitive_report(rp, r, 0.05);
  write_text(out / "class_report.txt", rp.str());
  write_form_file((out / "eta.form").string(), r.eta);
  run.add("primitive.norm_bound", r.ratio <= r.kn, r.ratio, r.kn);
  return run;
}

Run run_solve(const json& cfg, const std::filesystem::path& out) {
  Run run;
  Model model = parse_model(cfg);
  int N = cfg.at("N"), R = cfg.at("R");
  std::mt19937_64 rng(cfg.at("seed").get<uint64_t>());
  CoverData cover = build_cover(model, N);
  PartitionFunction phi = build_phi_smooth(cover);
  BoundedForm w = build_form(cfg, model, N, rng);

  if (cfg.value("corrupt_certificate", false)) {
    EllInftyFn values = integrate_phi(phi, w, R);
    EllInftyFn snapped = snap_fingerprint(values);
    snapped.prune(0);
    CoinvariantCertificate cert = certify_trivial(snapped);
    if (!cert.pairs.empty()) cert.pairs[0].first.rays[0].weight += 1e-3;
    bool ok = check_certificate(snapped, cert, R);
    run.add("solve.check_certificate", ok);  // expected to fail: exits 1
    return run;
  }

  SolveReport rep = solve_primitive(w, phi, cover, R);
  Real h = 1.0 / N;
  std::ostringstream rp;
  rp << "solve report\n";
  rp << "fingerprint " << format_real(rep.fingerprint) << "\n";
  rp << "certificate_size " << rep.certificate_size << "\n";
  rp << "stage1_interior_residual " << format_real(rep.stage1_interior_residual) << "\n";
  rp << "stage2_root_residual " << format_real(rep.stage2_root_residual) << "\n";
  rp << "stage2_spot_residual " << format_real(rep.stage2_spot_residual) << "\n";
  rp << "max_cell_integral " << format_real(rep.max_cell_integral) << "\n";
  rp << "d_residual " << format_real(rep.d_residual) << "\n";
  rp << "omega_sup " << format_real(rep.omega_sup) << "\n";
  rp << "eta_sup " << format_real(rep.eta_sup) << "\n";
  rp << "k_total " << format_real(rep.k_total) << "\n";
  rp << "interior_radius " << rep.interior_radius << "\n";
  rp << "boundary_zero " << (rep.boundary_zero ? 1 : 0) << "\n";
  write_text(out / "class_report.txt", rp.str());
  write_form_file((out / "eta.form").string(), rep.eta);

  std::vector<ConvergenceRow> rows{{N, rep.d_residual}};
  if (cfg.value("convergence", false)) {
    CoverData cover2 = build_cover(model, 2 * N);
    PartitionFunction phi2 = build_phi_smooth(cover2);
    std::mt19937_64 rng2(cfg.at("seed").get<uint64_t>());
    BoundedForm w2 = build_form(cfg, model, 2 * N, rng2);
    SolveReport rep2 = solve_primitive(w2, phi2, cover2, R);
    rows.push_back({2 * N, rep2.d_residual});
  }
  {
    std::ofstream os(out / "convergence.csv");
    emit_convergence(os, rows);
  }
  run.add("solve.d_residual", rep.d_residual <= 10 * h * h * rep.omega_sup, rep.d_residual,
          10 * h * h * rep.omega_sup);
  run.add("solve.norm_control", rep.eta_sup <= rep.k_total * rep.omega_sup + 1e-12, rep.eta_sup,
          rep.k_total * rep.omega_sup);
  if (model.has_boundary()) run.add("solve.boundary_zero", rep.boundary_zero);
  return run;
}

Run run_surject(const json& cfg, const std::filesystem::path& out) {
  Run run;
  Model model = parse_model(cfg);
  int N = cfg.at("N"), R = cfg.at("R");
  CoverData cover = build_cover(model, N);
  PartitionFunction phi = build_phi_indicator(model, N);
  EllInftyFn f = parse_ellinfty(cfg.at("f"), model);
  BoundedForm w = surjectivity_witness(f, cover, R);
  EllInftyFn rep = integrate_phi(phi, w, R + 2);
  {
    std::ofstream os(out / "values.csv");
    write_values_csv(os, rep, R);
  }
  Real gap = std::abs(class_fingerprint(rep) - class_fingerprint(f));
  EllInftyFn diff = window_restrict(rep - f, std::max(2, R - 3));
  CoinvariantCertificate cert = certify_trivial(diff);
  bool cert_ok = check_certificate(diff, cert, std::max(2, R - 3));
  std::ostringstream rp;
  rp << "surjectivity report\nfingerprint_gap " << format_real(gap) << "\ncertificate_size "
     << cert.size() << "\n";
  write_text(out / "class_report.txt", rp.str());
  run.add("surject.fingerprint", gap <= 1e-9, gap, 1e-9);
  run.add("surject.certificate", cert_ok);
  return run;
}

Run run_selftest(const json& cfg, const std::filesystem::path& out) {
  Run run;
  (void)cfg;
  std::mt19937_64 rng(7);

  // group machinery
  {
    Model m = Model::line();
    EllInftyFn f(m);
    for (int i = 0; i < 6; ++i) f.add_dev({int(rng() % 9) - 4}, Real(int(rng() % 17) - 8) / 4);
    auto cert = certify_trivial(f);
    run.add("selftest.certify_roundtrip", check_certificate(f, cert, 12));
    EllInftyFn cb = coboundary(f, {2});
    run.add("selftest.folner_decay",
            std::abs(folner_mean(cb, 40)) <= std::abs(folner_mean(cb, 10)) + 1e-15);
  }
  // poincare on Q
  {
    std::mt19937_64 r2(3);
    DifferentialForm w = random_q_form(2, 64, r2);
    PrimitiveResult pr = primitive_box(w);
    run.add("selftest.poincare_norm", pr.ratio <= pr.kn, pr.ratio, pr.kn);
  }
  // stokes on the strip
  {
    std::mt19937_64 r2(5);
    BoundedForm w = random_strip_oneform(64, r2, true);
    StokesReport rep = stokes_check(w, build_phi_indicator(Model::strip(), 64), 8);
    run.add("selftest.stokes", rep.cert_ok && rep.fingerprint_gap <= 1e-6, rep.fingerprint_gap,
            1e-6);
  }
  // solve on the line
  {
    Model line = Model::line();
    int N = 256;
    CoverData cover = build_cover(line, N);
    PartitionFunction phi = build_phi_smooth(cover);
    BoundedForm w = cell_bump_top(line, N, {0}, 0.8) - cell_bump_top(line, N, {1}, 0.8);
    SolveReport rep = solve_primitive(w, phi, cover, 6);
    Real h = 1.0 / N;
    run.add("selftest.solve", rep.d_residual <= 10 * h * h * rep.omega_sup, rep.d_residual,
            10 * h * h * rep.omega_sup);
  }
  // equivariance
  {
    Model plane = Model::plane();
    std::mt19937_64 r2(11);
    BoundedForm w = random_top_form(plane, 32, r2);
    run.add("selftest.equivariance",
            check_equivariance(build_phi_indicator(plane, 32), w, {1, -1}, 3));
  }
  write_text(out / "class_report.txt", "selftest\n");
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded de Rham integration maps on lattice model geometries"};
  std::string config_path, out_dir = "out";
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "configuration file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--override", overrides, "key=value config overrides (dot paths)");
  CLI11_PARSE(app, argc, argv);

  json cfg;
  try {
    std::ifstream is(config_path);
    if (!is) throw invalid_input("cannot open config " + config_path);
    is >> cfg;
    for (const auto& ov : overrides) {
      auto eq = ov.find('=');
      if (eq == std::string::npos) throw invalid_input("override needs key=value: " + ov);
      std::string key = ov.substr(0, eq), val = ov.substr(eq + 1);
      json* node = &cfg;
      size_t pos = 0;
      while (true) {
        size_t dot = key.find('.', pos);
        std::string part = key.substr(pos, dot - pos);
        if (dot == std::string::npos) {
          (*node)[part] = json::parse(val, nullptr, false).is_discarded()
                              ? json(val)
                              : json::parse(val);
          break;
        }
        node = &(*node)[part];
        pos = dot + 1;
      }
    }
    if (cfg.contains("N")) {
      int N = cfg["N"];
      if (N < 8 || (N & (N - 1)) != 0)
        throw invalid_input("config: N must be a power of two, N >= 8");
    }
    if (cfg.value("pipeline", "") != "selftest" && !cfg.contains("seed"))
      throw invalid_input("config: a seed is mandatory");
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }

  std::filesystem::path out(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);

  Run run;
  std::string pipeline;
  try {
    pipeline = cfg.at("pipeline");
    if (pipeline == "integrate")
      run = run_integrate(cfg, out);
    else if (pipeline == "stokes")
      run = run_stokes(cfg, out);
    else if (pipeline == "primitive")
      run = run_primitive(cfg, out);
    else if (pipeline == "solve")
      run = run_solve(cfg, out);
    else if (pipeline == "surject")
      run = run_surject(cfg, out);
    else if (pipeline == "selftest")
      run = run_selftest(cfg, out);
    else
      throw invalid_input("config: unknown pipeline '" + pipeline + "'");
  } catch (const invalid_input& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pipeline failed: " << e.what() << "\n";
    return 1;
  }

  json summary;
  summary["pipeline"] = pipeline;
  summary["threads"] = num_threads();
  summary["checks"] = json::array();
  for (const auto& c : run.checks) {
    summary["checks"].push_back(
        {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}});
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << format_real(c.value)
              << " tolerance=" << format_real(c.tolerance) << "\n";
  }
  summary["pass"] = run.ok();
  {
    std::ofstream os(out / "summary.json");
    os << summary.dump(2) << "\n";
  }
  if (!run.ok()) {
    for (const auto& c : run.checks)
      if (!c.pass) std::cerr << "failed invariant: " << c.name << "\n";
    return 1;
  }
  return 0;
}
