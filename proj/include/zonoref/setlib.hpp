#pragma once

#include <Eigen/Dense>

#include <vector>

namespace zonoref {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/// Absolute tolerance used by feasibility and emptiness tests.
inline constexpr double kFeasibilityTol = 1e-9;

/// Zonotope {c + G*beta | beta in [-1,1]^q} with one generator per column.
struct Zonotope {
  VectorXd center;
  MatrixXd generators;

  Index dim() const { return center.size(); }
  Index num_generators() const { return generators.cols(); }

  static Zonotope point(VectorXd c);
};

/// Axis-aligned box [lower, upper]. Any lower > upper encodes the empty set.
struct Interval {
  VectorXd lower;
  VectorXd upper;

  Index dim() const { return lower.size(); }
  bool is_empty() const;
  VectorXd mid() const { return 0.5 * (lower + upper); }
  VectorXd rad() const { return 0.5 * (upper - lower); }
  bool contains(const VectorXd& x, double tol = kFeasibilityTol) const;

  static Interval make_empty(Index n);
};

/// Halfspace intersection {y | a_mat*y <= b_vec}.
struct HPolytope {
  MatrixXd a_mat;
  VectorXd b_vec;

  Index dim() const { return a_mat.cols(); }
  Index num_constraints() const { return a_mat.rows(); }
};

/// Per-factor bounds inside the latent hypercube, a subset of [-1,1]^q.
/// Branch subproblems are stored in this form only; no constraint matrices
/// travel with the queue.
struct FactorBox {
  VectorXd lower;
  VectorXd upper;

  Index dim() const { return lower.size(); }
  bool is_empty() const;
  VectorXd mid() const { return 0.5 * (lower + upper); }
  VectorXd rad() const { return 0.5 * (upper - lower); }
  /// Sum of half-widths, the size measure used for shrink tests.
  double radius_sum() const;
  bool contains(const VectorXd& beta, double tol = kFeasibilityTol) const;

  static FactorBox full(Index q);
  static FactorBox make_empty(Index q);
};

/// Linear constraints c_mat*beta <= d_vec on hypercube factors.
struct ConstraintSet {
  MatrixXd c_mat;
  VectorXd d_vec;

  Index num_constraints() const { return c_mat.rows(); }
  Index dim() const { return c_mat.cols(); }
};

/// Minkowski sum result: the widened set plus, per interval dimension, the
/// index of the generator column it contributed (-1 for zero-width
/// dimensions, which add no column).
struct ZonotopeSum {
  Zonotope set;
  std::vector<Index> column_of_dim;
};

/// Z + [l,u]. Shifts the center by the interval midpoint and appends one
/// axis-aligned generator per dimension of positive width.
ZonotopeSum minkowski_sum_interval(const Zonotope& z, const Interval& iv);

/// W*Z + b. Column count is preserved, so factor provenance carries over.
Zonotope affine_map(const MatrixXd& w, const Zonotope& z, const VectorXd& b);

/// Tightest axis-aligned box containing the zonotope.
Interval interval_hull(const Zonotope& z);

/// max_{y in Z} a.y
double support_value(const Zonotope& z, const VectorXd& a);

/// Shrinks box0 toward the feasible set {beta in box0 | c_mat*beta <= d_vec}
/// by iterating a one-sweep per-dimension bound rule until fixpoint or
/// max_iters sweeps. The result is never wider than box0 and always contains
/// the feasible set; an empty result certifies infeasibility.
FactorBox tighten_factor_bounds(const ConstraintSet& cons, const FactorBox& box0, int max_iters);

/// Interval enclosure of {c + G*beta} where the leading box.dim() factors
/// range over box and any remaining factors over [-1,1].
Interval conzono_interval(const Zonotope& z, const FactorBox& box);

/// Frobenius norm of the generator matrix, the scalar size measure used by
/// the split heuristic.
double frobenius_radius(const Zonotope& z);

/// Smallest box containing both operands.
FactorBox box_hull(const FactorBox& a, const FactorBox& b);

}  // namespace zonoref
