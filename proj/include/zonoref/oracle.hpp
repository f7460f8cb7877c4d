#pragma once

#include <cstdint>
#include <optional>

#include "zonoref/network.hpp"
#include "zonoref/setlib.hpp"

namespace zonoref {

/// Exact per-dimension bounds of {beta in box | c_mat*beta <= d_vec} by full
/// vertex enumeration of the constrained box. Intended as a reference for
/// tighten_factor_bounds; limited to small systems (dim <= 8, at most 24
/// facets including the box). Empty result means the region is empty.
FactorBox exact_box_bounds(const ConstraintSet& cons, const FactorBox& box);

struct ReachVerdict {
  bool safe = true;
  VectorXd witness;  // an unsafe input when safe == false
};

/// Ground-truth reachability for tiny ReLU networks (<= 12 ReLU neurons) by
/// exhaustive activation-pattern enumeration with infeasible-prefix pruning.
/// Every returned witness re-checks as unsafe under forward().
ReachVerdict exhaustive_reach_tiny(const Network& net, const Interval& input_box,
                                   const HPolytope& unsafe);

/// Cheap falsification baseline: box corners first, then uniform samples
/// from a fixed-seed generator. Returns the first input mapping into the
/// unsafe polytope, if any.
std::optional<VectorXd> grid_falsify(const Network& net, const Interval& input_box,
                                     const HPolytope& unsafe, long long samples,
                                     std::uint64_t seed);

}  // namespace zonoref
