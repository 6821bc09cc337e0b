#pragma once

#include "bdr/analytic.hpp"
#include "bdr/core.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace bdr {

/// Closed-form field on R^n. Evaluation takes the point split as
/// x = cell + local with integer cell; shifts act on the cell part so that
/// translated evaluations reproduce bit-identical floats.
class FieldExpr {
 public:
  virtual ~FieldExpr() = default;
  virtual Real eval(const VecXi& cell, const VecXr& local) const = 0;
  virtual Real deriv(int axis, const VecXi& cell, const VecXr& local) const = 0;
  /// Bounding box of the support; nullopt = unbounded.
  virtual std::optional<Box> support() const = 0;
  virtual int dim() const = 0;

  Real eval_abs(const VecXr& x) const;
  Real deriv_abs(int axis, const VecXr& x) const;
};

using ExprPtr = std::shared_ptr<const FieldExpr>;

inline VecXr absolute_point(const VecXi& cell, const VecXr& local) {
  VecXr x(local.size());
  for (int a = 0; a < local.size(); ++a) x[a] = Real(cell[a]) + local[a];
  return x;
}

/// w * prod_a p_a(x_a)
ExprPtr separable_expr(std::vector<Analytic1D> axes, Real weight = 1);

/// child(x + g), g integer
ExprPtr shift_expr(ExprPtr child, const VecXi& g);

/// child(M x + c)
ExprPtr affine_expr(ExprPtr child, const MatXr& M, const VecXr& c);

/// sum_i w_i child_i(x), with per-term support culling
ExprPtr lincomb_expr(std::vector<std::pair<Real, ExprPtr>> terms, int dim);

/// f(x) = sum over lattice translates k: child(x - period .* k); the child
/// must have bounded support. period[a] = 0 means no periodization on axis a.
ExprPtr periodize_expr(ExprPtr child, const VecXi& period);

/// Large sums of translated copies bucketed by unit cell, so evaluation
/// only touches the terms whose support can reach the cell of x.
class CellComb {
 public:
  explicit CellComb(int dim) : dim_(dim) {}
  void add(Real w, ExprPtr term);
  ExprPtr build() const;
  int size() const { return static_cast<int>(terms_.size()); }

 private:
  int dim_;
  std::vector<std::pair<Real, ExprPtr>> terms_;
};

ExprPtr const_expr(int dim, Real c);

/// d/dx_axis of child, as a field of its own (no second derivatives).
ExprPtr deriv_expr(ExprPtr child, int axis);

/// a(x) * b(x)
ExprPtr product_expr(ExprPtr a, ExprPtr b);

/// num(x) / den(x); den must not vanish on num's support.
ExprPtr ratio_expr(ExprPtr num, ExprPtr den);

/// Restriction of child to the hyperplane x_axis = fixed_step / N, as a
/// field in the remaining coordinates.
ExprPtr slice_expr(ExprPtr child, int axis, int fixed_step, int N);

}  // namespace bdr
