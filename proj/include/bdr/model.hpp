#pragma once

#include "bdr/core.hpp"

#include <vector>

namespace bdr {

/// The model geometries: M with a free cocompact deck action.
///   Line:   M = R,        G = Z   (integer translation)
///   Plane:  M = R^2,      G = Z^2
///   Strip:  M = R x [0,1], G = Z  (translation in the first axis)
///   Circle: M = R/mZ,     G = Z/m (unit rotation; the finite-group case)
enum class ModelKind { Line, Plane, Strip, Circle };

using GroupVec = std::vector<int>;

struct Model {
  ModelKind kind = ModelKind::Line;
  int m = 0;  // circle order

  static Model line() { return {ModelKind::Line, 0}; }
  static Model plane() { return {ModelKind::Plane, 0}; }
  static Model strip() { return {ModelKind::Strip, 0}; }
  static Model circle(int order) {
    if (order < 3) throw invalid_input("Model: circle needs m >= 3");
    return {ModelKind::Circle, order};
  }

  int ambient_dim() const { return kind == ModelKind::Plane || kind == ModelKind::Strip ? 2 : 1; }
  int lattice_dim() const { return kind == ModelKind::Plane ? 2 : 1; }
  bool has_boundary() const { return kind == ModelKind::Strip; }
  bool finite_group() const { return kind == ModelKind::Circle; }
  int boundary_axis() const { return 1; }

  /// Per ambient axis: period of lattice-periodic fields (0 = none).
  VecXi field_period() const;

  /// Embed a group element into an ambient translation (in cells).
  VecXi ambient_shift(const GroupVec& g) const;

  GroupVec canonical(GroupVec g) const;
  GroupVec g_add(const GroupVec& a, const GroupVec& b) const;
  GroupVec g_neg(const GroupVec& a) const;
  GroupVec identity() const { return GroupVec(lattice_dim(), 0); }
  bool is_identity(const GroupVec& g) const;

  /// All g with |g|_inf <= R (the whole group for the circle).
  std::vector<GroupVec> window(int R) const;
  long window_size(int R) const;
};

}  // namespace bdr
