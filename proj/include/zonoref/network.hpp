#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "zonoref/errors.hpp"

namespace zonoref {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Layer {
  enum class Kind { Linear, Relu, Sigmoid, Tanh };

  Kind kind = Kind::Linear;
  MatrixXd weights;  // Linear layers only
  VectorXd bias;     // Linear layers only
  Index width = 0;   // activation layers only

  bool is_activation() const { return kind != Kind::Linear; }
  Index in_dim() const { return kind == Kind::Linear ? weights.cols() : width; }
  Index out_dim() const { return kind == Kind::Linear ? weights.rows() : width; }

  static Layer linear(MatrixXd w, VectorXd b);
  static Layer activation(Kind kind, Index width);
};

/// NNet-style elementwise input whitening plus scalar output rescaling.
/// forward() computes denorm(net((x - input_mean) / input_range)).
struct Normalization {
  bool active = false;
  VectorXd input_mean;
  VectorXd input_range;
  double output_mean = 0.0;
  double output_range = 1.0;
};

/// Feed-forward network: alternating linear and activation layers, linear
/// first. Activation layers apply one scalar function to every coordinate.
struct Network {
  std::vector<Layer> layers;
  Normalization normalization;

  Index input_dim() const { return layers.front().in_dim(); }
  Index output_dim() const { return layers.back().out_dim(); }
};

/// Checks layer chaining, shapes, and finiteness. Throws std::invalid_argument.
void validate_network(const Network& net);

double activation_value(Layer::Kind kind, double x);

VectorXd forward(const Network& net, const VectorXd& x);

/// Reads the de-facto .nnet interchange format: '//' comments, a counts line
/// (numLayers, inputSize, outputSize, maxLayerSize), layer sizes, a legacy
/// flag line, input mins/maxes, normalization means/ranges, then per layer
/// one line per weight row followed by one line per bias entry. ReLU is
/// implied after every layer except the last. Errors name the line.
Network parse_nnet(const std::string& text);

/// Reads {"layers":[{"type":"linear","weights":[[..]],"bias":[..]},
/// {"type":"relu"|"sigmoid"|"tanh"}, ...]}. Errors name the JSON path.
Network parse_json_net(const std::string& text);

/// Inverse of parse_json_net for normalization-free networks; numeric
/// fields round-trip exactly.
std::string serialize_json_net(const Network& net);

}  // namespace zonoref
