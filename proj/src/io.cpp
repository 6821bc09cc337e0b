#include "bdr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace bdr {

std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field(std::ostream& os, const ScalarField& f) {
  os << "field " << f.dim() << " " << f.grid.N << "\n";
  os << "lo";
  for (int a = 0; a < f.dim(); ++a) os << " " << f.grid.lo_steps[a];
  os << "\ncount";
  for (int a = 0; a < f.dim(); ++a) os << " " << f.grid.count[a];
  os << "\nperiod";
  for (int a = 0; a < f.dim(); ++a) os << " " << f.period[a];
  os << "\n";
  for (Index i = 0; i < f.samples.size(); ++i) os << format_real(f.samples[i]) << "\n";
}

ScalarField read_field(std::istream& is) {
  std::string tag;
  int n = 0, N = 0;
  is >> tag >> n >> N;
  if (tag != "field") throw invalid_input("read_field: bad header");
  VecXi lo(n), count(n), period(n);
  is >> tag;
  for (int a = 0; a < n; ++a) is >> lo[a];
  is >> tag;
  for (int a = 0; a < n; ++a) is >> count[a];
  is >> tag;
  for (int a = 0; a < n; ++a) is >> period[a];
  ScalarField f(Grid(N, lo, count), period);
  for (Index i = 0; i < f.samples.size(); ++i) is >> f.samples[i];
  if (!is) throw invalid_input("read_field: truncated samples");
  return f;
}

void write_field_file(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw invalid_input("write_field_file: cannot open " + path);
  write_field(os, f);
}

ScalarField read_field_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw invalid_input("read_field_file: cannot open " + path);
  return read_field(is);
}

void write_form(std::ostream& os, const DifferentialForm& f) {
  os << "form " << f.n << " " << f.k << " " << f.grid().N << "\n";
  for (const auto& c : f.comps) write_field(os, c);
}

DifferentialForm read_form(std::istream& is) {
  std::string tag;
  int n = 0, k = 0, N = 0;
  is >> tag >> n >> k >> N;
  if (tag != "form") throw invalid_input("read_form: bad header");
  long m = binomial(n, k);
  std::vector<ScalarField> comps;
  for (long i = 0; i < m; ++i) comps.push_back(read_field(is));
  DifferentialForm out(n, k, comps[0].grid, comps[0].period);
  out.comps = std::move(comps);
  return out;
}

void write_form_file(const std::string& path, const DifferentialForm& f) {
  std::ofstream os(path);
  if (!os) throw invalid_input("write_form_file: cannot open " + path);
  write_form(os, f);
}

DifferentialForm read_form_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw invalid_input("read_form_file: cannot open " + path);
  return read_form(is);
}

void write_ellinfty(std::ostream& os, const EllInftyFn& f) {
  os << "ellinfty background " << format_real(f.background) << "\n";
  os << "deviation " << f.dev.size() << "\n";
  for (const auto& [g, w] : f.dev) {
    for (int c : g) os << c << " ";
    os << format_real(w) << "\n";
  }
  os << "rays " << f.rays.size() << "\n";
  for (const auto& r : f.rays) {
    for (int c : r.base) os << c << " ";
    os << r.axis << " " << format_real(r.weight) << "\n";
  }
}

EllInftyFn read_ellinfty(std::istream& is, const Model& model) {
  EllInftyFn f(model);
  std::string tag;
  is >> tag;
  if (tag != "ellinfty") throw invalid_input("read_ellinfty: bad header");
  is >> tag >> f.background;
  size_t count = 0;
  is >> tag >> count;
  int d = model.lattice_dim();
  for (size_t i = 0; i < count; ++i) {
    GroupVec g(d);
    Real w;
    for (int a = 0; a < d; ++a) is >> g[a];
    is >> w;
    f.dev[model.canonical(g)] = w;
  }
  is >> tag >> count;
  for (size_t i = 0; i < count; ++i) {
    EllInftyFn::Ray r;
    r.base.resize(d);
    for (int a = 0; a < d; ++a) is >> r.base[a];
    is >> r.axis >> r.weight;
    f.rays.push_back(std::move(r));
  }
  if (!is) throw invalid_input("read_ellinfty: truncated record");
  return f;
}

void write_values_csv(std::ostream& os, const EllInftyFn& f, int R) {
  int d = f.model.lattice_dim();
  for (int a = 0; a < d; ++a) os << "g" << a << ",";
  os << "value\n";
  for (const auto& g : f.model.window(R)) {
    for (int c : g) os << c << ",";
    os << format_real(f.eval(g)) << "\n";
  }
}

void emit_convergence(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "N,residual,ratio_to_previous\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    os << rows[i].N << "," << format_real(rows[i].residual) << ",";
    if (i > 0 && rows[i].residual != 0)
      os << format_real(rows[i - 1].residual / rows[i].residual);
    os << "\n";
  }
}

void write_primitive_report(std::ostream& os, const PrimitiveResult& r, Real margin) {
  os << "primitive certificate\n";
  os << "residual " << format_real(r.residual) << "\n";
  os << "ratio " << format_real(r.ratio) << "\n";
  os << "kn " << format_real(r.kn) << "\n";
  os << "margin " << format_real(margin) << "\n";
  os << "margin_leak " << format_real(r.margin_leak) << "\n";
  os << "input_integral " << format_real(r.input_integral) << "\n";
  os << "condition_residuals";
  for (Real c : r.condition_residuals) os << " " << format_real(c);
  os << "\n";
}

}  // namespace bdr
