#include "bdr/poincare.hpp"

#include "bdr/analytic.hpp"

#include <cmath>
#include <sstream>

namespace bdr {

namespace {

constexpr Real kRhoLo = 0.1, kRhoHi = 0.9;

// discretely normalized mollifier samples: midpoint mass exactly ~1
ArrayXr rho_samples(int N) {
  Analytic1D m = mollifier_1d_profile(kRhoLo, kRhoHi);
  ArrayXr s(N);
  for (int i = 0; i < N; ++i) s[i] = m.value((i + 0.5) / Real(N));
  s /= s.sum() / Real(N);
  return s;
}

// tensor product of rho over `axes` axes
ArrayXr rho_tail(int N, int axes) {
  ArrayXr r1 = rho_samples(N);
  ArrayXr out = r1;
  for (int a = 1; a < axes; ++a) {
    ArrayXr next(out.size() * N);
    for (Index i = 0; i < out.size(); ++i) next.segment(i * N, N) = out[i] * r1;
    out.swap(next);
  }
  return out;
}

int comp_missing(int n, int j) { return n - 1 - j; }

PrimitiveResult primitive_impl(const DifferentialForm& omega, PrimitiveDomain domain,
                               const PrimitiveOptions& opts) {
  if (omega.k != omega.n) throw invalid_input("primitive: expects a top form");
  const Grid& g = omega.grid();
  int n = omega.n;
  int N = g.N;
  for (int a = 0; a < n; ++a)
    if (g.lo_steps[a] != 0 || g.count[a] != N)
      throw invalid_input("primitive: the domain must be the unit box grid");
  Real h = g.h();
  const ScalarField& coef = omega.comps[0];
  Real wsup = sup_norm(coef);

  // support margins: every face except the boundary faces of the last axis
  int mar = std::max<int>(1, static_cast<int>(opts.margin * N));
  for (int a = 0; a < n; ++a) {
    for (int side = 0; side < 2; ++side) {
      bool boundary_face = (a == n - 1) && ((domain == PrimitiveDomain::HalfBox && side == 0) ||
                                            domain == PrimitiveDomain::Slab);
      if (boundary_face) continue;
      if (zero_margin(coef, a, side) < mar)
        throw invalid_input("primitive: support touches the margin");
    }
  }

  // zero-integral precondition, at quadrature accuracy
  Real I = integrate_samples(coef);
  Real tol0 = opts.zero_integral_factor * h * h * std::max(wsup, Real(1e-30));
  if (std::abs(I) > tol0) {
    std::ostringstream msg;
    msg << "primitive: measured integral " << I << " exceeds the zero-integral tolerance "
        << tol0 << " (sup " << wsup << ")";
    throw invalid_input(msg.str());
  }

  PrimitiveResult res;
  res.input_integral = I;
  res.kn = kn_constant(n);
  res.eta = DifferentialForm(n, n - 1, g);

  ArrayXr f = coef.samples;
  Grid lead_grid = g;

  for (int k = 1; k <= n; ++k) {
    int ax = k - 1;
    // g_k: integrate out the trailing axes (midpoint; contraction samplewise)
    ScalarField fk(g);
    fk.samples = f;
    ScalarField gk = trailing_integral(fk, k);
    ScalarField hk = cumulative_integral(gk, ax, opts.cumulative_order);

    Real sign = (k % 2 == 1) ? 1.0 : -1.0;
    int comp = comp_missing(n, ax);
    ScalarField nu(g);
    if (k < n) {
      ArrayXr tail = rho_tail(N, n - k);
      Index tail_len = tail.size();
      for (Index lead = 0; lead < hk.grid.size(); ++lead) {
        nu.samples.segment(lead * tail_len, tail_len) = (sign * hk.samples[lead]) * tail;
        f.segment(lead * tail_len, tail_len) -= gk.samples[lead] * tail;
      }
      // the discrete trailing integral of the updated remainder vanishes
      ScalarField fnext(g);
      fnext.samples = f;
      ScalarField probe = trailing_integral(fnext, k);
      res.condition_residuals.push_back(sup_norm(probe));
    } else {
      nu.samples = sign * hk.samples;
      if (domain == PrimitiveDomain::Slab) {
        // force the upper trace to exactly zero: subtract E(x') * S(x_n)
        // where E is the full-axis integral and S a smoothstep with S(1) = 1
        Analytic1D S = smoothstep_profile();
        ArrayXr svals(N);
        for (int i = 0; i < N; ++i)
          svals[i] = S.value(((i + 0.5) / Real(N) - kRhoLo) / (kRhoHi - kRhoLo));
        // the last axis is contiguous; E completes the running integral to 1
        Index lines = g.size() / N;
        for (Index line = 0; line < lines; ++line) {
          Index base0 = line * N;
          Real E = hk.samples[base0 + (N - 1)] + 0.5 * h * gk.samples[base0 + (N - 1)];
          if (E == 0) continue;
          for (Index i = 0; i < N; ++i) nu.samples[base0 + i] -= sign * E * svals[i];
        }
      }
      f.setZero();
      res.condition_residuals.push_back(0);
    }
    res.eta.comps[comp].samples += nu.samples;
    if (opts.keep_steps) {
      DifferentialForm step(n, n - 1, g);
      step.comps[comp].samples = nu.samples;
      res.steps.push_back(std::move(step));
    }
  }

  // exact-zero boundary traces of the tangential component
  if (domain != PrimitiveDomain::Box) {
    Grid fg(g.N, g.lo_steps.head(n - 1), g.count.head(n - 1));
    std::vector<ScalarField> tr{ScalarField(fg)};
    res.eta.traces[FaceKey{n - 1, 0}] = tr;
    if (domain == PrimitiveDomain::Slab) res.eta.traces[FaceKey{n - 1, 1}] = tr;
  }

  // independent verification by finite differences
  DifferentialForm deta = exterior_derivative(res.eta, opts.verify_order);
  res.residual = sup_norm(deta.comps[0] - coef);
  Real esup = sup_norm_form(res.eta);
  res.ratio = wsup > 0 ? esup / wsup : 0;
  if (res.ratio > res.kn)
    throw pipeline_error("poincare", "norm ratio " + std::to_string(res.ratio) +
                                         " exceeds the certified constant " +
                                         std::to_string(res.kn));

  // margin check on eta (exact zeros except quadrature leakage at the far face)
  auto face_band_max = [](const ScalarField& c, int axis, int side, int band) {
    auto st = c.grid.strides();
    Index stride = st[axis], len = c.grid.count[axis];
    Real m = 0;
    VecXi idx = VecXi::Zero(c.dim());
    while (true) {
      Index base = c.grid.flat(idx);
      for (Index i = 0; i < std::min<Index>(band, len); ++i) {
        Index j = side == 0 ? i : len - 1 - i;
        m = std::max(m, std::abs(c.samples[base + j * stride]));
      }
      int a2 = c.dim() - 1;
      while (a2 >= 0) {
        if (a2 == axis) {
          --a2;
          continue;
        }
        if (++idx[a2] < c.grid.count[a2]) break;
        idx[a2] = 0;
        --a2;
      }
      if (a2 < 0) break;
    }
    return m;
  };
  Real leak = 0;
  for (auto& c : res.eta.comps) {
    for (int a = 0; a < n; ++a) {
      for (int side = 0; side < 2; ++side) {
        bool boundary_face = (a == n - 1) && ((domain == PrimitiveDomain::HalfBox && side == 0) ||
                                              domain == PrimitiveDomain::Slab);
        if (boundary_face) continue;
        leak = std::max(leak, face_band_max(c, a, side, mar));
      }
    }
  }
  res.margin_leak = leak;
  return res;
}

}  // namespace

Real rho_axis_sup() { return mollifier_info(kRhoLo, kRhoHi).sup; }

Real kn_constant(int n) {
  if (n < 1) throw invalid_input("kn_constant: n >= 1");
  Real S = rho_axis_sup();
  Real K = 0, P = 1;
  for (int k = 1; k <= n; ++k) {
    Real r = (k < n) ? std::pow(S, n - k) : 1.0;
    K += r * P;
    P *= (1 + r);
  }
  return K;
}

PrimitiveResult primitive_box(const DifferentialForm& omega, const PrimitiveOptions& opts) {
  return primitive_impl(omega, PrimitiveDomain::Box, opts);
}

PrimitiveResult primitive_halfbox(const DifferentialForm& omega, const PrimitiveOptions& opts) {
  return primitive_impl(omega, PrimitiveDomain::HalfBox, opts);
}

PrimitiveResult primitive_slab(const DifferentialForm& omega, const PrimitiveOptions& opts) {
  return primitive_impl(omega, PrimitiveDomain::Slab, opts);
}

}  // namespace bdr
