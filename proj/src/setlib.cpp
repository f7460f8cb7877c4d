#include "zonoref/setlib.hpp"

#include <cmath>
#include <stdexcept>

namespace zonoref {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Zonotope Zonotope::point(VectorXd c) {
  Zonotope z;
  z.generators.resize(c.size(), 0);
  z.center = std::move(c);
  return z;
}

bool Interval::is_empty() const {
  return (lower.array() > upper.array() + kFeasibilityTol).any();
}

bool Interval::contains(const VectorXd& x, double tol) const {
  if (x.size() != dim()) return false;
  return (x.array() >= lower.array() - tol).all() && (x.array() <= upper.array() + tol).all();
}

Interval Interval::make_empty(Index n) {
  Interval iv;
  iv.lower = VectorXd::Ones(n);
  iv.upper = -VectorXd::Ones(n);
  return iv;
}

bool FactorBox::is_empty() const {
  return (lower.array() > upper.array() + kFeasibilityTol).any();
}

double FactorBox::radius_sum() const { return 0.5 * (upper - lower).sum(); }

bool FactorBox::contains(const VectorXd& beta, double tol) const {
  if (beta.size() != dim()) return false;
  return (beta.array() >= lower.array() - tol).all() && (beta.array() <= upper.array() + tol).all();
}

FactorBox FactorBox::full(Index q) {
  FactorBox box;
  box.lower = -VectorXd::Ones(q);
  box.upper = VectorXd::Ones(q);
  return box;
}

FactorBox FactorBox::make_empty(Index q) {
  FactorBox box;
  box.lower = VectorXd::Ones(q);
  box.upper = -VectorXd::Ones(q);
  return box;
}

ZonotopeSum minkowski_sum_interval(const Zonotope& z, const Interval& iv) {
  require(z.dim() == iv.dim(), "minkowski_sum_interval: dimension mismatch");

  const VectorXd radius = iv.rad();
  ZonotopeSum result;
  result.column_of_dim.assign(static_cast<std::size_t>(z.dim()), -1);

  Index fresh = 0;
  for (Index i = 0; i < z.dim(); ++i) {
    if (radius(i) != 0.0) ++fresh;
  }

  const Index q = z.num_generators();
  result.set.center = z.center + iv.mid();
  result.set.generators.resize(z.dim(), q + fresh);
  result.set.generators.leftCols(q) = z.generators;
  result.set.generators.rightCols(fresh).setZero();

  Index col = q;
  for (Index i = 0; i < z.dim(); ++i) {
    if (radius(i) == 0.0) continue;
    result.set.generators(i, col) = radius(i);
    result.column_of_dim[static_cast<std::size_t>(i)] = col;
    ++col;
  }
  return result;
}

Zonotope affine_map(const MatrixXd& w, const Zonotope& z, const VectorXd& b) {
  require(w.cols() == z.dim(), "affine_map: matrix/zonotope dimension mismatch");
  require(b.size() == w.rows(), "affine_map: offset length mismatch");

  Zonotope out;
  out.center = w * z.center + b;
  out.generators = w * z.generators;
  return out;
}

Interval interval_hull(const Zonotope& z) {
  const VectorXd r = z.generators.cwiseAbs().rowwise().sum();
  Interval iv;
  iv.lower = z.center - r;
  iv.upper = z.center + r;
  return iv;
}

double support_value(const Zonotope& z, const VectorXd& a) {
  require(a.size() == z.dim(), "support_value: direction dimension mismatch");
  return a.dot(z.center) + (a.transpose() * z.generators).cwiseAbs().sum();
}

FactorBox tighten_factor_bounds(const ConstraintSet& cons, const FactorBox& box0, int max_iters) {
  const Index q = box0.dim();
  require(cons.dim() == q, "tighten_factor_bounds: constraint/box dimension mismatch");
  require(cons.d_vec.size() == cons.num_constraints(),
          "tighten_factor_bounds: constraint rows/rhs mismatch");
  require(max_iters >= 1, "tighten_factor_bounds: max_iters must be positive");
  if (box0.is_empty()) return FactorBox::make_empty(q);

  const MatrixXd pos = cons.c_mat.cwiseMax(0.0);
  const MatrixXd neg = cons.c_mat.cwiseMin(0.0);
  const Index p = cons.num_constraints();

  // A row with no coefficients carries no per-dimension candidate, but a
  // negative right-hand side still certifies infeasibility.
  for (Index i = 0; i < p; ++i) {
    if (cons.c_mat.row(i).isZero(0.0) && cons.d_vec(i) < -kFeasibilityTol) {
      return FactorBox::make_empty(q);
    }
  }

  VectorXd lo = box0.lower;
  VectorXd hi = box0.upper;

  for (int iter = 0; iter < max_iters; ++iter) {
    // All candidates in a sweep evaluate the constraints at the sweep-start
    // bounds; updates only land once the sweep is over.
    const VectorXd base = pos * lo + neg * hi;  // row-wise minimum of c_mat*beta
    VectorXd new_lo = lo;
    VectorXd new_hi = hi;

    for (Index j = 0; j < q; ++j) {
      double lb = lo(j);
      double ub = hi(j);
      for (Index i = 0; i < p; ++i) {
        const double cij = cons.c_mat(i, j);
        if (cij == 0.0) continue;
        const double rest = base(i) - (pos(i, j) * lo(j) + neg(i, j) * hi(j));
        const double cand = (cons.d_vec(i) - rest) / cij + 0.0;  // normalize -0.0
        if (cij < 0.0) {
          if (cand > lb) lb = cand;
        } else {
          if (cand < ub) ub = cand;
        }
      }
      new_lo(j) = lb;
      new_hi(j) = ub;
    }

    for (Index j = 0; j < q; ++j) {
      if (new_lo(j) > new_hi(j) + kFeasibilityTol) return FactorBox::make_empty(q);
      if (new_lo(j) > new_hi(j)) {
        // Crossing within tolerance: collapse to the midpoint so the box
        // stays well formed without issuing an emptiness certificate.
        const double m = 0.5 * (new_lo(j) + new_hi(j));
        new_lo(j) = m;
        new_hi(j) = m;
      }
    }

    const bool fixpoint =
        (new_lo.array() == lo.array()).all() && (new_hi.array() == hi.array()).all();
    lo = std::move(new_lo);
    hi = std::move(new_hi);
    if (fixpoint) break;
  }

  FactorBox out;
  out.lower = std::move(lo);
  out.upper = std::move(hi);
  return out;
}

Interval conzono_interval(const Zonotope& z, const FactorBox& box) {
  require(box.dim() <= z.num_generators(), "conzono_interval: box has more dims than factors");
  if (box.is_empty()) return Interval::make_empty(z.dim());

  const Index q = z.num_generators();
  const Index qb = box.dim();
  VectorXd lo = -VectorXd::Ones(q);
  VectorXd hi = VectorXd::Ones(q);
  lo.head(qb) = box.lower;
  hi.head(qb) = box.upper;

  const MatrixXd pos = z.generators.cwiseMax(0.0);
  const MatrixXd neg = z.generators.cwiseMin(0.0);

  Interval iv;
  iv.lower = z.center + pos * lo + neg * hi;
  iv.upper = z.center + pos * hi + neg * lo;
  return iv;
}

double frobenius_radius(const Zonotope& z) { return z.generators.norm(); }

FactorBox box_hull(const FactorBox& a, const FactorBox& b) {
  require(a.dim() == b.dim(), "box_hull: dimension mismatch");
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  FactorBox out;
  out.lower = a.lower.cwiseMin(b.lower);
  out.upper = a.upper.cwiseMax(b.upper);
  return out;
}

}  // namespace zonoref
