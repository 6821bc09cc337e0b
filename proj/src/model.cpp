#include "bdr/model.hpp"

#include "bdr/grid.hpp"

namespace bdr {

VecXi Model::field_period() const {
  switch (kind) {
    case ModelKind::Line: return VecXi::Ones(1);
    case ModelKind::Plane: return VecXi::Ones(2);
    case ModelKind::Strip: {
      VecXi p(2);
      p << 1, 0;
      return p;
    }
    case ModelKind::Circle: return VecXi::Constant(1, m);
  }
  throw invalid_input("Model: unknown kind");
}

VecXi Model::ambient_shift(const GroupVec& g) const {
  if (static_cast<int>(g.size()) != lattice_dim()) throw invalid_input("ambient_shift: bad element");
  VecXi s = VecXi::Zero(ambient_dim());
  for (int a = 0; a < lattice_dim(); ++a) s[a] = g[a];
  return s;
}

GroupVec Model::canonical(GroupVec g) const {
  if (static_cast<int>(g.size()) != lattice_dim()) throw invalid_input("canonical: bad element");
  if (finite_group())
    for (auto& c : g) c = mod_floor(c, m);
  return g;
}

GroupVec Model::g_add(const GroupVec& a, const GroupVec& b) const {
  GroupVec out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return canonical(std::move(out));
}

GroupVec Model::g_neg(const GroupVec& a) const {
  GroupVec out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
  return canonical(std::move(out));
}

bool Model::is_identity(const GroupVec& g) const {
  for (int c : canonical(g))
    if (c != 0) return false;
  return true;
}

std::vector<GroupVec> Model::window(int R) const {
  std::vector<GroupVec> out;
  if (finite_group()) {
    for (int i = 0; i < m; ++i) out.push_back({i});
    return out;
  }
  int d = lattice_dim();
  GroupVec g(d, -R);
  while (true) {
    out.push_back(g);
    int a = d - 1;
    while (a >= 0) {
      if (++g[a] <= R) break;
      g[a] = -R;
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

long Model::window_size(int R) const {
  if (finite_group()) return m;
  long s = 1;
  for (int a = 0; a < lattice_dim(); ++a) s *= (2L * R + 1);
  return s;
}

}  // namespace bdr
