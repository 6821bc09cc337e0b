#include "bdr/grid.hpp"

namespace bdr {

Grid::Grid(int N_, VecXi lo_steps_, VecXi count_)
    : N(N_), lo_steps(std::move(lo_steps_)), count(std::move(count_)) {
  if (N < 8) throw invalid_input("Grid: N must be >= 8");
  if (lo_steps.size() != count.size()) throw invalid_input("Grid: dimension mismatch");
  for (int a = 0; a < count.size(); ++a)
    if (count[a] <= 0) throw invalid_input("Grid: empty axis");
}

Grid Grid::from_cells(int N, const VecXi& lo_cells, const VecXi& cells) {
  VecXi lo = lo_cells * N;
  VecXi cnt = cells * N;
  return Grid(N, lo, cnt);
}

Index Grid::size() const {
  Index s = 1;
  for (int a = 0; a < dim(); ++a) s *= count[a];
  return s;
}

Box Grid::box() const {
  VecXr lo(dim()), hi(dim());
  for (int a = 0; a < dim(); ++a) {
    lo[a] = Real(lo_steps[a]) / N;
    hi[a] = Real(lo_steps[a] + count[a]) / N;
  }
  return Box(lo, hi);
}

std::vector<Index> Grid::strides() const {
  std::vector<Index> s(dim());
  Index acc = 1;
  for (int a = dim() - 1; a >= 0; --a) {
    s[a] = acc;
    acc *= count[a];
  }
  return s;
}

Index Grid::flat(const VecXi& idx) const {
  Index f = 0;
  for (int a = 0; a < dim(); ++a) f = f * count[a] + idx[a];
  return f;
}

VecXi Grid::unflat(Index f) const {
  VecXi idx(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(f % count[a]);
    f /= count[a];
  }
  return idx;
}

bool Grid::same_layout(const Grid& o) const {
  return N == o.N && lo_steps == o.lo_steps && count == o.count;
}

void Grid::cell_local(const VecXi& idx, VecXi& cell, VecXr& local) const {
  cell.resize(dim());
  local.resize(dim());
  for (int a = 0; a < dim(); ++a) {
    int t = lo_steps[a] + idx[a];
    cell[a] = floor_div(t, N);
    local[a] = (Real(mod_floor(t, N)) + Real(0.5)) / N;
  }
}

}  // namespace bdr
