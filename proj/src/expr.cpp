#include "bdr/expr.hpp"

#include <cmath>
#include <limits>

namespace bdr {

namespace {
constexpr Real kInf = std::numeric_limits<Real>::infinity();
}  // namespace

Real FieldExpr::eval_abs(const VecXr& x) const {
  VecXi cell = VecXi::Zero(x.size());
  return eval(cell, x);
}

Real FieldExpr::deriv_abs(int axis, const VecXr& x) const {
  VecXi cell = VecXi::Zero(x.size());
  return deriv(axis, cell, x);
}

namespace {

class SeparableExpr final : public FieldExpr {
 public:
  SeparableExpr(std::vector<Analytic1D> axes, Real w) : axes_(std::move(axes)), w_(w) {}

  Real eval(const VecXi& cell, const VecXr& local) const override {
    Real v = w_;
    for (size_t a = 0; a < axes_.size(); ++a) {
      v *= axes_[a].value(Real(cell[a]) + local[a]);
      if (v == 0) return 0;
    }
    return v;
  }

  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    Real v = w_;
    for (size_t a = 0; a < axes_.size(); ++a) {
      Real t = Real(cell[a]) + local[a];
      v *= (static_cast<int>(a) == axis) ? axes_[a].deriv(t) : axes_[a].value(t);
      if (v == 0 && static_cast<int>(a) != axis) return 0;
    }
    return v;
  }

  std::optional<Box> support() const override {
    int n = static_cast<int>(axes_.size());
    VecXr lo(n), hi(n);
    bool bounded = false;
    for (int a = 0; a < n; ++a) {
      lo[a] = axes_[a].a;
      hi[a] = axes_[a].b;
      if (axes_[a].bounded_support()) bounded = true;
    }
    if (!bounded) return std::nullopt;
    return Box(lo, hi);
  }

  int dim() const override { return static_cast<int>(axes_.size()); }

 private:
  std::vector<Analytic1D> axes_;
  Real w_;
};

class ShiftExpr final : public FieldExpr {
 public:
  ShiftExpr(ExprPtr child, VecXi g) : child_(std::move(child)), g_(std::move(g)) {}

  Real eval(const VecXi& cell, const VecXr& local) const override {
    return child_->eval(cell + g_, local);
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    return child_->deriv(axis, cell + g_, local);
  }
  std::optional<Box> support() const override {
    auto s = child_->support();
    if (!s) return s;
    Box b = *s;
    for (int a = 0; a < b.dim(); ++a) {
      b.lo[a] -= g_[a];
      b.hi[a] -= g_[a];
    }
    return b;
  }
  int dim() const override { return child_->dim(); }

 private:
  ExprPtr child_;
  VecXi g_;
};

class AffineExpr final : public FieldExpr {
 public:
  AffineExpr(ExprPtr child, MatXr M, VecXr c)
      : child_(std::move(child)), M_(std::move(M)), c_(std::move(c)) {}

  Real eval(const VecXi& cell, const VecXr& local) const override {
    VecXr y = M_ * absolute_point(cell, local) + c_;
    return child_->eval_abs(y);
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    VecXr y = M_ * absolute_point(cell, local) + c_;
    Real d = 0;
    for (int j = 0; j < M_.rows(); ++j)
      if (M_(j, axis) != 0) d += M_(j, axis) * child_->deriv_abs(j, y);
    return d;
  }
  std::optional<Box> support() const override {
    auto s = child_->support();
    if (!s) return std::nullopt;
    // preimage of the child support box under x -> Mx + c, as a box hull
    // (requires invertible M)
    MatXr inv = M_.inverse();
    int n = dim();
    VecXr lo = VecXr::Constant(n, kInf), hi = VecXr::Constant(n, -kInf);
    long corners = 1L << n;
    for (long m = 0; m < corners; ++m) {
      VecXr y(n);
      for (int a = 0; a < n; ++a) y[a] = (m >> a & 1) ? s->hi[a] : s->lo[a];
      VecXr x = inv * (y - c_);
      for (int a = 0; a < n; ++a) {
        lo[a] = std::min(lo[a], x[a]);
        hi[a] = std::max(hi[a], x[a]);
      }
    }
    return Box(lo, hi);
  }
  int dim() const override { return static_cast<int>(M_.cols()); }

 private:
  ExprPtr child_;
  MatXr M_;
  VecXr c_;
};

class LinCombExpr final : public FieldExpr {
 public:
  LinCombExpr(std::vector<std::pair<Real, ExprPtr>> terms, int dim)
      : terms_(std::move(terms)), dim_(dim) {
    boxes_.reserve(terms_.size());
    for (auto& t : terms_) boxes_.push_back(t.second->support());
  }

  Real eval(const VecXi& cell, const VecXr& local) const override {
    Real v = 0;
    VecXr x = absolute_point(cell, local);
    for (size_t i = 0; i < terms_.size(); ++i) {
      if (boxes_[i] && !boxes_[i]->contains(x)) continue;
      v += terms_[i].first * terms_[i].second->eval(cell, local);
    }
    return v;
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    Real v = 0;
    VecXr x = absolute_point(cell, local);
    for (size_t i = 0; i < terms_.size(); ++i) {
      if (boxes_[i] && !boxes_[i]->contains(x)) continue;
      v += terms_[i].first * terms_[i].second->deriv(axis, cell, local);
    }
    return v;
  }
  std::optional<Box> support() const override {
    if (terms_.empty()) return Box(VecXr::Zero(dim_), VecXr::Zero(dim_));
    VecXr lo = VecXr::Constant(dim_, kInf), hi = VecXr::Constant(dim_, -kInf);
    for (auto& b : boxes_) {
      if (!b) return std::nullopt;
      for (int a = 0; a < dim_; ++a) {
        lo[a] = std::min(lo[a], b->lo[a]);
        hi[a] = std::max(hi[a], b->hi[a]);
      }
    }
    return Box(lo, hi);
  }
  int dim() const override { return dim_; }

 private:
  std::vector<std::pair<Real, ExprPtr>> terms_;
  std::vector<std::optional<Box>> boxes_;
  int dim_;
};

class PeriodizeExpr final : public FieldExpr {
 public:
  PeriodizeExpr(ExprPtr child, VecXi period) : child_(std::move(child)), period_(std::move(period)) {
    auto s = child_->support();
    if (!s) throw invalid_input("periodize: child must have bounded support");
    box_ = *s;
  }

  Real eval(const VecXi& cell, const VecXr& local) const override {
    Real v = 0;
    iterate(cell, local, [&](const VecXi& c2) { v += child_->eval(c2, local); });
    return v;
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    Real v = 0;
    iterate(cell, local, [&](const VecXi& c2) { v += child_->deriv(axis, c2, local); });
    return v;
  }
  std::optional<Box> support() const override { return std::nullopt; }
  int dim() const override { return child_->dim(); }

 private:
  template <class Fn>
  void iterate(const VecXi& cell, const VecXr& local, Fn&& fn) const {
    // enumerate lattice translates k with x + k*period inside the child box
    int n = dim();
    std::vector<std::pair<int, int>> ranges(n);
    for (int a = 0; a < n; ++a) {
      if (period_[a] == 0) {
        ranges[a] = {0, 0};
        continue;
      }
      Real x = Real(cell[a]) + local[a];
      int klo = static_cast<int>(std::ceil((box_.lo[a] - x) / period_[a])) - 1;
      int khi = static_cast<int>(std::floor((box_.hi[a] - x) / period_[a])) + 1;
      ranges[a] = {klo, khi};
    }
    VecXi k(n);
    for (int a = 0; a < n; ++a) k[a] = ranges[a].first;
    while (true) {
      VecXi c2 = cell;
      for (int a = 0; a < n; ++a) c2[a] += k[a] * period_[a];
      fn(c2);
      int a = n - 1;
      while (a >= 0) {
        if (++k[a] <= ranges[a].second) break;
        k[a] = ranges[a].first;
        --a;
      }
      if (a < 0) break;
    }
  }

  ExprPtr child_;
  VecXi period_;
  Box box_;
};

class CellCombExpr final : public FieldExpr {
 public:
  CellCombExpr(std::vector<std::pair<Real, ExprPtr>> terms, int dim)
      : terms_(std::move(terms)), dim_(dim) {
    for (size_t i = 0; i < terms_.size(); ++i) {
      auto s = terms_[i].second->support();
      if (!s) throw invalid_input("CellComb: terms must have bounded support");
      boxes_.push_back(*s);
      // register in every unit cell the support touches
      int n = dim_;
      VecXi lo(n), hi(n);
      for (int a = 0; a < n; ++a) {
        lo[a] = static_cast<int>(std::floor(s->lo[a]));
        hi[a] = static_cast<int>(std::ceil(s->hi[a])) - 1;
      }
      VecXi c = lo;
      while (true) {
        buckets_[key(c)].push_back(i);
        int a = n - 1;
        while (a >= 0) {
          if (++c[a] <= hi[a]) break;
          c[a] = lo[a];
          --a;
        }
        if (a < 0) break;
      }
    }
  }

  Real eval(const VecXi& cell, const VecXr& local) const override {
    auto it = buckets_.find(key_of(cell, local));
    if (it == buckets_.end()) return 0;
    Real v = 0;
    VecXr x = absolute_point(cell, local);
    for (size_t i : it->second) {
      if (!boxes_[i].contains(x)) continue;
      v += terms_[i].first * terms_[i].second->eval(cell, local);
    }
    return v;
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    auto it = buckets_.find(key_of(cell, local));
    if (it == buckets_.end()) return 0;
    Real v = 0;
    VecXr x = absolute_point(cell, local);
    for (size_t i : it->second) {
      if (!boxes_[i].contains(x)) continue;
      v += terms_[i].first * terms_[i].second->deriv(axis, cell, local);
    }
    return v;
  }
  std::optional<Box> support() const override {
    if (terms_.empty()) return Box(VecXr::Zero(dim_), VecXr::Zero(dim_));
    VecXr lo = VecXr::Constant(dim_, kInf), hi = VecXr::Constant(dim_, -kInf);
    for (auto& b : boxes_)
      for (int a = 0; a < dim_; ++a) {
        lo[a] = std::min(lo[a], b.lo[a]);
        hi[a] = std::max(hi[a], b.hi[a]);
      }
    return Box(lo, hi);
  }
  int dim() const override { return dim_; }

 private:
  static std::vector<int> key(const VecXi& c) {
    return std::vector<int>(c.data(), c.data() + c.size());
  }
  std::vector<int> key_of(const VecXi& cell, const VecXr& local) const {
    std::vector<int> k(dim_);
    for (int a = 0; a < dim_; ++a) {
      // local in [0,1); cell+local lies in unit cell `cell`
      k[a] = cell[a] + static_cast<int>(std::floor(local[a]));
    }
    return k;
  }

  std::vector<std::pair<Real, ExprPtr>> terms_;
  std::vector<Box> boxes_;
  std::map<std::vector<int>, std::vector<size_t>> buckets_;
  int dim_;
};

class DerivExpr final : public FieldExpr {
 public:
  DerivExpr(ExprPtr child, int axis) : child_(std::move(child)), axis_(axis) {}
  Real eval(const VecXi& cell, const VecXr& local) const override {
    return child_->deriv(axis_, cell, local);
  }
  Real deriv(int, const VecXi&, const VecXr&) const override {
    throw invalid_input("DerivExpr: second derivatives unavailable");
  }
  std::optional<Box> support() const override { return child_->support(); }
  int dim() const override { return child_->dim(); }

 private:
  ExprPtr child_;
  int axis_;
};

class ConstExpr final : public FieldExpr {
 public:
  ConstExpr(int dim, Real c) : dim_(dim), c_(c) {}
  Real eval(const VecXi&, const VecXr&) const override { return c_; }
  Real deriv(int, const VecXi&, const VecXr&) const override { return 0; }
  std::optional<Box> support() const override { return std::nullopt; }
  int dim() const override { return dim_; }

 private:
  int dim_;
  Real c_;
};

class ProductExpr final : public FieldExpr {
 public:
  ProductExpr(ExprPtr a, ExprPtr b) : a_(std::move(a)), b_(std::move(b)) {}
  Real eval(const VecXi& cell, const VecXr& local) const override {
    Real va = a_->eval(cell, local);
    if (va == 0) return 0;
    return va * b_->eval(cell, local);
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    return a_->deriv(axis, cell, local) * b_->eval(cell, local) +
           a_->eval(cell, local) * b_->deriv(axis, cell, local);
  }
  std::optional<Box> support() const override {
    auto sa = a_->support(), sb = b_->support();
    if (!sa) return sb;
    if (!sb) return sa;
    Box out = *sa;
    for (int x = 0; x < out.dim(); ++x) {
      out.lo[x] = std::max(out.lo[x], sb->lo[x]);
      out.hi[x] = std::min(out.hi[x], sb->hi[x]);
      if (out.hi[x] < out.lo[x]) out.hi[x] = out.lo[x];
    }
    return out;
  }
  int dim() const override { return a_->dim(); }

 private:
  ExprPtr a_, b_;
};

class RatioExpr final : public FieldExpr {
 public:
  RatioExpr(ExprPtr num, ExprPtr den) : num_(std::move(num)), den_(std::move(den)) {}
  Real eval(const VecXi& cell, const VecXr& local) const override {
    Real n = num_->eval(cell, local);
    if (n == 0) return 0;
    return n / den_->eval(cell, local);
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    Real n = num_->eval(cell, local);
    Real dn = num_->deriv(axis, cell, local);
    if (n == 0 && dn == 0) return 0;
    Real d = den_->eval(cell, local);
    Real dd = den_->deriv(axis, cell, local);
    return (dn * d - n * dd) / (d * d);
  }
  std::optional<Box> support() const override { return num_->support(); }
  int dim() const override { return num_->dim(); }

 private:
  ExprPtr num_, den_;
};

class SliceExpr final : public FieldExpr {
 public:
  SliceExpr(ExprPtr child, int axis, int fixed_step, int N)
      : child_(std::move(child)), axis_(axis) {
    cell_fix_ = fixed_step >= 0 ? fixed_step / N : -((-fixed_step + N - 1) / N);
    local_fix_ = Real(fixed_step - cell_fix_ * N) / N;
  }
  Real eval(const VecXi& cell, const VecXr& local) const override {
    int n = child_->dim();
    VecXi c(n);
    VecXr l(n);
    int j = 0;
    for (int a = 0; a < n; ++a) {
      if (a == axis_) {
        c[a] = cell_fix_;
        l[a] = local_fix_;
      } else {
        c[a] = cell[j];
        l[a] = local[j];
        ++j;
      }
    }
    return child_->eval(c, l);
  }
  Real deriv(int axis, const VecXi& cell, const VecXr& local) const override {
    int n = child_->dim();
    VecXi c(n);
    VecXr l(n);
    int j = 0;
    int target = -1;
    for (int a = 0; a < n; ++a) {
      if (a == axis_) {
        c[a] = cell_fix_;
        l[a] = local_fix_;
      } else {
        if (j == axis) target = a;
        c[a] = cell[j];
        l[a] = local[j];
        ++j;
      }
    }
    return child_->deriv(target, c, l);
  }
  std::optional<Box> support() const override {
    auto s = child_->support();
    if (!s) return std::nullopt;
    int n = child_->dim();
    VecXr lo(n - 1), hi(n - 1);
    int j = 0;
    for (int a = 0; a < n; ++a) {
      if (a == axis_) continue;
      lo[j] = s->lo[a];
      hi[j] = s->hi[a];
      ++j;
    }
    return Box(lo, hi);
  }
  int dim() const override { return child_->dim() - 1; }

 private:
  ExprPtr child_;
  int axis_;
  int cell_fix_;
  Real local_fix_;
};

}  // namespace

ExprPtr separable_expr(std::vector<Analytic1D> axes, Real weight) {
  return std::make_shared<SeparableExpr>(std::move(axes), weight);
}

ExprPtr shift_expr(ExprPtr child, const VecXi& g) {
  return std::make_shared<ShiftExpr>(std::move(child), g);
}

ExprPtr affine_expr(ExprPtr child, const MatXr& M, const VecXr& c) {
  return std::make_shared<AffineExpr>(std::move(child), M, c);
}

ExprPtr lincomb_expr(std::vector<std::pair<Real, ExprPtr>> terms, int dim) {
  return std::make_shared<LinCombExpr>(std::move(terms), dim);
}

ExprPtr periodize_expr(ExprPtr child, const VecXi& period) {
  return std::make_shared<PeriodizeExpr>(std::move(child), period);
}

void CellComb::add(Real w, ExprPtr term) { terms_.emplace_back(w, std::move(term)); }

ExprPtr CellComb::build() const { return std::make_shared<CellCombExpr>(terms_, dim_); }

ExprPtr const_expr(int dim, Real c) { return std::make_shared<ConstExpr>(dim, c); }

ExprPtr deriv_expr(ExprPtr child, int axis) {
  return std::make_shared<DerivExpr>(std::move(child), axis);
}

ExprPtr product_expr(ExprPtr a, ExprPtr b) {
  return std::make_shared<ProductExpr>(std::move(a), std::move(b));
}

ExprPtr ratio_expr(ExprPtr num, ExprPtr den) {
  return std::make_shared<RatioExpr>(std::move(num), std::move(den));
}

ExprPtr slice_expr(ExprPtr child, int axis, int fixed_step, int N) {
  return std::make_shared<SliceExpr>(std::move(child), axis, fixed_step, N);
}

}  // namespace bdr
