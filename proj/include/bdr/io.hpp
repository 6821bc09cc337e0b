#pragma once

#include "bdr/ellinfty.hpp"
#include "bdr/forms.hpp"
#include "bdr/poincare.hpp"

#include <iosfwd>
#include <string>

namespace bdr {

/// Field layout: a text header (dims, N, window in h-steps, extension
/// periods) followed by the samples in row-major order, one per line.
void write_field(std::ostream& os, const ScalarField& f);
ScalarField read_field(std::istream& is);
void write_field_file(const std::string& path, const ScalarField& f);
ScalarField read_field_file(const std::string& path);

/// Form layout: header (n, k, window, N) then one field blob per increasing
/// multi-index in lexicographic order.
void write_form(std::ostream& os, const DifferentialForm& f);
DifferentialForm read_form(std::istream& is);
void write_form_file(const std::string& path, const DifferentialForm& f);
DifferentialForm read_form_file(const std::string& path);

/// Small structured-text record: background, deviation pairs, ray triples.
void write_ellinfty(std::ostream& os, const EllInftyFn& f);
EllInftyFn read_ellinfty(std::istream& is, const Model& model);

/// CSV of (g, value) pairs over a window.
void write_values_csv(std::ostream& os, const EllInftyFn& f, int R);

/// Convergence table: N, residual, ratio to the previous row.
struct ConvergenceRow {
  int N;
  Real residual;
};
void emit_convergence(std::ostream& os, const std::vector<ConvergenceRow>& rows);

/// Structured-text certificate of a primitive construction.
void write_primitive_report(std::ostream& os, const PrimitiveResult& r, Real margin);

std::string format_real(Real v);

}  // namespace bdr
