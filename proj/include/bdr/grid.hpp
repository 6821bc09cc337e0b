#pragma once

#include "bdr/core.hpp"

namespace bdr {

/// Uniform cell-centered grid. All axes share the same resolution N
/// (samples per unit length, h = 1/N); corners live on the h-lattice so
/// that integer translations are exact index shifts. Sample i on axis a
/// sits at (lo_steps[a] + i + 1/2) * h.
struct Grid {
  int N = 0;
  VecXi lo_steps;  // lower corner in units of h
  VecXi count;     // samples per axis

  Grid() = default;
  Grid(int N_, VecXi lo_steps_, VecXi count_);

  /// Box [lo, lo+extent) with integer-cell corners, N samples per unit.
  static Grid from_cells(int N, const VecXi& lo_cells, const VecXi& cells);
  /// The unit box (0,1)^n.
  static Grid unit(int N, int n) { return from_cells(N, VecXi::Zero(n), VecXi::Ones(n)); }

  int dim() const { return static_cast<int>(lo_steps.size()); }
  Real h() const { return Real(1) / N; }
  Index size() const;
  Real coord(int a, Index i) const { return (Real(lo_steps[a]) + Real(i) + Real(0.5)) / N; }
  Box box() const;

  /// Row-major strides, axis 0 slowest.
  std::vector<Index> strides() const;
  Index flat(const VecXi& idx) const;
  VecXi unflat(Index f) const;

  /// Global step index of sample i on axis a.
  int step(int a, Index i) const { return lo_steps[a] + static_cast<int>(i); }

  bool same_layout(const Grid& o) const;

  /// Cell (unit-lattice) and in-cell local coordinate of a sample;
  /// exact integer/dyadic arithmetic.
  void cell_local(const VecXi& idx, VecXi& cell, VecXr& local) const;
};

/// floor division toward -infinity
inline int floor_div(int a, int b) {
  int q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}
inline int mod_floor(int a, int b) {
  int r = a % b;
  return r < 0 ? r + b : r;
}

}  // namespace bdr
