#pragma once

#include <vector>

#include "zonoref/network.hpp"
#include "zonoref/setlib.hpp"

namespace zonoref {

/// Records which source created a generator column: an input factor of the
/// branch zonotope, or the approximation error of one neuron.
struct Provenance {
  enum class Source { InputFactor, NeuronError };

  Source source = Source::InputFactor;
  int layer = -1;  // layers index for NeuronError, -1 for InputFactor
  int index = 0;   // factor index or neuron index

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Output of one activation-layer enclosure: the outgoing set, the slope and
/// error interval per neuron, and the column each nonzero error contributed.
struct ActivationEnclosure {
  Zonotope set;
  VectorXd slopes;
  VectorXd error_lower;
  VectorXd error_upper;
  std::vector<Index> error_column_of_neuron;  // -1 when the error is exactly zero
};

/// Elementwise ReLU relaxation. Stable neurons (bounds on one side of zero)
/// are exact with slope 0 or 1 and zero error; unstable neurons use the
/// chord slope u/(u-l) with error interval [0, -l*u/(u-l)].
ActivationEnclosure enclose_relu(const Zonotope& h);

/// Elementwise sigmoid/tanh relaxation around the secant slope. The error
/// interval covers the deviation at both interval endpoints and at every
/// interior point where the derivative equals the slope, widened by 1e-9.
ActivationEnclosure enclose_smooth(const Zonotope& h, Layer::Kind fn);

/// Per-activation-layer snapshot kept for split decisions.
struct LayerEnclosure {
  int layer_index = -1;
  Layer::Kind kind = Layer::Kind::Relu;
  Zonotope pre_activation;
  VectorXd slopes;
  VectorXd error_lower;
  VectorXd error_upper;

  VectorXd error_radius() const { return 0.5 * (error_upper - error_lower); }
};

/// Full propagation record for one branch. The first input_factors columns
/// of every intermediate and output zonotope are the input factors in
/// order; error columns only ever append.
struct EncloseTrace {
  Zonotope input;
  Index input_factors = 0;
  std::vector<LayerEnclosure> activations;
  Zonotope output;
  std::vector<Provenance> output_provenance;
};

EncloseTrace propagate(const Network& net, const Zonotope& input);

/// Propagates several branch sets with identical input dimension and factor
/// count. Results are positionally aligned with the inputs.
std::vector<EncloseTrace> propagate_batch(const Network& net, const std::vector<Zonotope>& inputs);

}  // namespace zonoref
