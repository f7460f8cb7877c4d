#pragma once

#include <string>
#include <utility>
#include <vector>

#include "zonoref/errors.hpp"
#include "zonoref/setlib.hpp"

namespace zonoref {

/// A verification problem: an input box and the unsafe output region given
/// as a union of polytopes. The property holds iff no input maps into any
/// of them.
struct VerificationTask {
  Interval input_box;
  std::vector<HPolytope> unsafe;
};

/// Reads the VNN-LIB subset: declare-const for X_i/Y_j, per-dimension input
/// bounds, and one unsafe-region assertion that is either a conjunction of
/// linear output atoms or an (or ...) of such conjunctions. Extra
/// conjunctive asserts are shared across all disjuncts. Errors carry an
/// s-expression path.
VerificationTask parse_vnnlib(const std::string& text, Index input_dim, Index output_dim);

/// Counterexample in the conventional witness shape: a "sat" line followed
/// by ((X_0 v) ... (Y_0 v) ...) with shortest round-trip decimals.
std::string write_witness(const VectorXd& x, const VectorXd& y);

/// Parses write_witness output (with or without the leading "sat" line)
/// back into the input/output vectors.
std::pair<VectorXd, VectorXd> parse_witness(const std::string& text, Index input_dim,
                                            Index output_dim);

}  // namespace zonoref
