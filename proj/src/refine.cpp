#include "zonoref/refine.hpp"

#include <stdexcept>
#include <utility>

namespace zonoref {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Eq.-style separation test: some unsafe row is provably violated by every
// point of the enclosure.
bool separated(const Zonotope& y, const HPolytope& unsafe) {
  for (Index i = 0; i < unsafe.num_constraints(); ++i) {
    const VectorXd row = unsafe.a_mat.row(i).transpose();
    const double worst_case_min = -support_value(y, -row);
    if (worst_case_min > unsafe.b_vec(i)) return true;
  }
  return false;
}

}  // namespace

ConstraintSet unsafe_input_constraints(const EncloseTrace& trace, const HPolytope& unsafe,
                                       Index q0) {
  const Zonotope& y = trace.output;
  require(unsafe.dim() == y.dim(), "unsafe_input_constraints: polytope dimension mismatch");
  require(q0 <= y.num_generators(), "unsafe_input_constraints: more input factors than columns");
  require(unsafe.num_constraints() > 0, "unsafe_input_constraints: empty polytope");

  const MatrixXd mapped = unsafe.a_mat * y.generators;  // p x q

  ConstraintSet cons;
  cons.c_mat = mapped.leftCols(q0);
  // Error factors are free in [-1,1]; give each row the slack of its most
  // favorable error assignment so no unsafe input is cut off.
  cons.d_vec = unsafe.b_vec - unsafe.a_mat * y.center +
               mapped.rightCols(y.num_generators() - q0).cwiseAbs().rowwise().sum();
  return cons;
}

Zonotope reparameterized_input(const Interval& input_box, const FactorBox& box) {
  require(input_box.dim() == box.dim(), "reparameterized_input: dimension mismatch");
  require(!input_box.is_empty() && !box.is_empty(), "reparameterized_input: empty operand");

  const VectorXd x_rad = input_box.rad();
  Zonotope z;
  z.center = input_box.mid() + x_rad.cwiseProduct(box.mid());
  z.generators = MatrixXd(x_rad.cwiseProduct(box.rad()).asDiagonal());
  return z;
}

FactorBox refine_box(const Network& net, const Interval& input_box,
                     std::span<const HPolytope> unsafe, const FactorBox& box, int refine_iters,
                     int bound_iters, double shrink_threshold) {
  const Index q0 = input_box.dim();
  require(net.input_dim() == q0, "refine_box: network/input-box dimension mismatch");
  require(box.dim() == q0, "refine_box: factor box dimension mismatch");
  require(!unsafe.empty(), "refine_box: no unsafe polytopes");
  require(refine_iters >= 0 && bound_iters >= 1, "refine_box: invalid iteration budgets");
  if (box.is_empty()) return box;

  FactorBox current = box;
  for (int iter = 0; iter < refine_iters; ++iter) {
    const Zonotope input = reparameterized_input(input_box, current);
    const EncloseTrace trace = propagate(net, input);

    bool all_separated = true;
    for (const HPolytope& poly : unsafe) {
      if (!separated(trace.output, poly)) {
        all_separated = false;
        break;
      }
    }
    if (all_separated) return FactorBox::make_empty(q0);

    // Tighten per polytope in the fresh factor frame, then hull: an unsafe
    // input for any polytope must survive.
    FactorBox merged = FactorBox::make_empty(q0);
    bool any = false;
    for (const HPolytope& poly : unsafe) {
      const ConstraintSet cons = unsafe_input_constraints(trace, poly, q0);
      const FactorBox tightened = tighten_factor_bounds(cons, FactorBox::full(q0), bound_iters);
      if (tightened.is_empty()) continue;
      merged = any ? box_hull(merged, tightened) : tightened;
      any = true;
    }
    if (!any) return FactorBox::make_empty(q0);

    // Map the fresh-frame box back into the original factor coordinates.
    const VectorXd mid = current.mid();
    const VectorXd rad = current.rad();
    FactorBox next;
    next.lower = mid + rad.cwiseProduct(merged.lower);
    next.upper = mid + rad.cwiseProduct(merged.upper);

    const double before = current.radius_sum();
    const double after = next.radius_sum();
    current = std::move(next);
    if (before <= 0.0) break;
    if ((before - after) / before < shrink_threshold) break;
  }
  return current;
}

FactorBox refine_box(const Network& net, const VerificationTask& task, const FactorBox& box,
                     int refine_iters, int bound_iters, double shrink_threshold) {
  return refine_box(net, task.input_box, std::span<const HPolytope>(task.unsafe), box,
                    refine_iters, bound_iters, shrink_threshold);
}

}  // namespace zonoref
