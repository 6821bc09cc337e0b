#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdr {

using Real = double;
using ArrayXr = Eigen::ArrayXd;
using VecXr = Eigen::VectorXd;
using VecXi = Eigen::VectorXi;
using MatXr = Eigen::MatrixXd;
using Index = std::ptrdiff_t;

struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct not_certifiable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a group window [-R,R]^d is too small for the requested
/// computation; carries the radius that would suffice.
struct window_error : std::runtime_error {
  int required_radius;
  window_error(const std::string& what, int required)
      : std::runtime_error(what + " (required window radius: " + std::to_string(required) + ")"),
        required_radius(required) {}
};

struct pipeline_error : std::runtime_error {
  std::string stage;
  pipeline_error(std::string stage_, const std::string& what)
      : std::runtime_error("[" + stage_ + "] " + what), stage(std::move(stage_)) {}
};

/// Axis-aligned box, closed on the left, open or closed as context demands.
struct Box {
  VecXr lo, hi;

  Box() = default;
  Box(VecXr lo_, VecXr hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw invalid_input("Box: dimension mismatch");
  }
  int dim() const { return static_cast<int>(lo.size()); }
  Real extent(int a) const { return hi[a] - lo[a]; }
  Real volume() const {
    Real v = 1;
    for (int a = 0; a < dim(); ++a) v *= extent(a);
    return v;
  }
  bool contains(const VecXr& x) const {
    for (int a = 0; a < dim(); ++a)
      if (x[a] < lo[a] || x[a] > hi[a]) return false;
    return true;
  }
  bool contains(const Box& other, Real slack = 0) const {
    for (int a = 0; a < dim(); ++a)
      if (other.lo[a] < lo[a] - slack || other.hi[a] > hi[a] + slack) return false;
    return true;
  }
  bool intersects(const Box& other) const {
    for (int a = 0; a < dim(); ++a)
      if (other.hi[a] <= lo[a] || other.lo[a] >= hi[a]) return false;
    return true;
  }
  static Box unit(int n) { return Box(VecXr::Zero(n), VecXr::Ones(n)); }
};

/// Increasing multi-indices of size k drawn from {0,...,n-1}, lexicographic.
std::vector<std::vector<int>> combinations(int n, int k);

/// Position of a sorted multi-index in the lexicographic list.
int combination_index(int n, const std::vector<int>& idx);

long binomial(int n, int k);

/// Thread count from BDR_NUM_THREADS (defaults to 1; the build targets a
/// single-core budget but the per-g loops are safe to chunk).
int num_threads();

}  // namespace bdr
