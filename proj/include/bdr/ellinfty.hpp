#pragma once

#include "bdr/model.hpp"

#include <map>
#include <vector>

namespace bdr {

/// Bounded function on G, represented exactly as
///   constant background + finitely supported deviation + weighted
///   axis-ray indicators {base + k e_axis : k >= 0}.
/// The family is closed under the G-action and subtraction and is rich
/// enough to express every certificate the constructions generate. Rays
/// are meaningless for finite G and are rejected there.
struct EllInftyFn {
  struct Ray {
    GroupVec base;
    int axis = 0;
    Real weight = 0;
  };

  Model model;
  Real background = 0;
  std::map<GroupVec, Real> dev;
  std::vector<Ray> rays;

  explicit EllInftyFn(Model m = Model::line()) : model(m) {}

  Real eval(const GroupVec& g) const;
  /// An upper bound for the sup norm of the representation.
  Real bound() const;
  void add_dev(const GroupVec& g, Real w);
  void prune(Real eps = 0);
  bool zero() const { return background == 0 && dev.empty() && rays.empty(); }
};

/// (g . f)(h) = f(hg); for the additive models f(. + g).
EllInftyFn act(const GroupVec& g, const EllInftyFn& f);

/// f - g.f (the background cancels exactly).
EllInftyFn coboundary(const EllInftyFn& f, const GroupVec& g);

EllInftyFn operator+(const EllInftyFn& a, const EllInftyFn& b);
EllInftyFn operator-(const EllInftyFn& a, const EllInftyFn& b);
EllInftyFn operator*(Real c, const EllInftyFn& f);

/// Average over the window [-R,R]^d (all of G for the circle).
Real folner_mean(const EllInftyFn& f, int R);

/// Sum over G; only for finite G. Two functions are identified in the
/// coinvariants iff their sums agree.
Real finite_group_class(const EllInftyFn& f);

/// The complete class fingerprint within the representable family:
/// the background for infinite G, the total sum for finite G.
Real class_fingerprint(const EllInftyFn& f);

/// Finite list of (f_j, g_j) witnessing f = sum_j (f_j - g_j . f_j).
struct CoinvariantCertificate {
  std::vector<std::pair<EllInftyFn, GroupVec>> pairs;
  bool empty() const { return pairs.empty(); }
  size_t size() const { return pairs.size(); }
};

/// Constructive triviality witness. Requires zero background (zero total
/// sum for finite G, to float precision of the stored values) and no rays;
/// throws not_certifiable otherwise. Each f_j is a single weighted ray
/// along axis 0 (finite G: a telescoping partial-sum delta).
CoinvariantCertificate certify_trivial(const EllInftyFn& f);

/// Evaluates f - sum_j (f_j - g_j . f_j) at every point of the window;
/// true iff every value satisfies |value| <= tol (default: exactly zero).
bool check_certificate(const EllInftyFn& f, const CoinvariantCertificate& cert, int R,
                       Real tol = 0);

/// Zero the fingerprint in-place-safe fashion: subtracts the background
/// (for finite G additionally forces the accumulated sum to exactly zero by
/// adjusting the last window value). Returns the snapped function and
/// reports the removed amount.
EllInftyFn snap_fingerprint(const EllInftyFn& f, Real* removed = nullptr);

/// Zero-background function agreeing with f - background on the window
/// [-R,R]^d, as a finite deviation (rays folded in, then truncated).
EllInftyFn window_restrict(const EllInftyFn& f, int R);

}  // namespace bdr
