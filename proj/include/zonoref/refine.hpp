#pragma once

#include <span>

#include "zonoref/enclosure.hpp"
#include "zonoref/specparse.hpp"

namespace zonoref {

/// Linear factor constraints that every unsafe input of the traced branch
/// must satisfy: rows A*G_y restricted to the input factors, right-hand side
/// slackened by the best case of the error factors. Safe inputs may satisfy
/// them too; unsafe ones always do.
ConstraintSet unsafe_input_constraints(const EncloseTrace& trace, const HPolytope& unsafe,
                                       Index q0);

/// Branch input set in zonotope form: the input box reparameterized to the
/// given factor box, c = mid_x + rad_x.mid(box), G = diag(rad_x.rad(box)).
Zonotope reparameterized_input(const Interval& input_box, const FactorBox& box);

/// Shrinks a branch box toward its unsafe inputs. Each iteration
/// re-propagates the branch, derives per-polytope factor constraints,
/// tightens them over the fresh hypercube, hulls the per-polytope results,
/// and maps back into the original factor frame. Stops early on emptiness,
/// on separation from every polytope (returns Empty), or when an iteration
/// shrinks the radius sum by less than shrink_threshold relative.
FactorBox refine_box(const Network& net, const Interval& input_box,
                     std::span<const HPolytope> unsafe, const FactorBox& box, int refine_iters,
                     int bound_iters, double shrink_threshold = 0.01);

FactorBox refine_box(const Network& net, const VerificationTask& task, const FactorBox& box,
                     int refine_iters, int bound_iters, double shrink_threshold = 0.01);

}  // namespace zonoref
