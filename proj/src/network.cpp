#include "zonoref/network.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace zonoref {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

const char* kind_name(Layer::Kind kind) {
  switch (kind) {
    case Layer::Kind::Linear: return "linear";
    case Layer::Kind::Relu: return "relu";
    case Layer::Kind::Sigmoid: return "sigmoid";
    case Layer::Kind::Tanh: return "tanh";
  }
  return "?";
}

}  // namespace

Layer Layer::linear(MatrixXd w, VectorXd b) {
  require(w.rows() == b.size(), "Layer::linear: weight rows and bias length differ");
  require(w.rows() > 0 && w.cols() > 0, "Layer::linear: empty weight matrix");
  Layer layer;
  layer.kind = Kind::Linear;
  layer.weights = std::move(w);
  layer.bias = std::move(b);
  layer.width = layer.weights.rows();
  return layer;
}

Layer Layer::activation(Kind kind, Index width) {
  require(kind != Kind::Linear, "Layer::activation: kind must be an activation");
  require(width > 0, "Layer::activation: width must be positive");
  Layer layer;
  layer.kind = kind;
  layer.width = width;
  return layer;
}

void validate_network(const Network& net) {
  require(!net.layers.empty(), "network: no layers");
  require(net.layers.front().kind == Layer::Kind::Linear, "network: first layer must be linear");

  Index cur = net.layers.front().in_dim();
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    if (layer.kind == Layer::Kind::Linear) {
      require(layer.weights.rows() == layer.bias.size(),
              "network: weight rows and bias length differ");
      require(layer.weights.allFinite() && layer.bias.allFinite(),
              "network: non-finite weight or bias");
    }
    require(layer.in_dim() == cur, "network: layer input width does not match previous output");
    cur = layer.out_dim();
  }

  const Normalization& nm = net.normalization;
  if (nm.active) {
    require(nm.input_mean.size() == net.input_dim() && nm.input_range.size() == net.input_dim(),
            "network: normalization size does not match input dimension");
    require((nm.input_range.array() != 0.0).all() && nm.output_range != 0.0,
            "network: zero normalization range");
    require(nm.input_mean.allFinite() && nm.input_range.allFinite() &&
                std::isfinite(nm.output_mean) && std::isfinite(nm.output_range),
            "network: non-finite normalization");
  }
}

double activation_value(Layer::Kind kind, double x) {
  switch (kind) {
    case Layer::Kind::Relu:
      return x > 0.0 ? x : 0.0;
    case Layer::Kind::Sigmoid:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Layer::Kind::Tanh:
      return std::tanh(x);
    case Layer::Kind::Linear:
      break;
  }
  throw std::invalid_argument("activation_value: not an activation kind");
}

VectorXd forward(const Network& net, const VectorXd& x) {
  require(x.size() == net.input_dim(), "forward: input dimension mismatch");

  VectorXd v = x;
  if (net.normalization.active) {
    v = (v - net.normalization.input_mean).cwiseQuotient(net.normalization.input_range);
  }
  for (const Layer& layer : net.layers) {
    if (layer.kind == Layer::Kind::Linear) {
      v = layer.weights * v + layer.bias;
    } else {
      for (Index i = 0; i < v.size(); ++i) v(i) = activation_value(layer.kind, v(i));
    }
  }
  if (net.normalization.active) {
    v = net.normalization.output_range * v;
    v.array() += net.normalization.output_mean;
  }
  return v;
}

// ---------------------------------------------------------------------------
// NNet reader
// ---------------------------------------------------------------------------

namespace {

struct NnetLine {
  int number = 0;
  std::vector<std::string> tokens;
};

std::vector<NnetLine> nnet_lines(const std::string& text) {
  std::vector<NnetLine> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::size_t first = raw.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (raw.compare(first, 2, "//") == 0) continue;

    NnetLine line;
    line.number = number;
    std::size_t pos = 0;
    while (pos < raw.size()) {
      const std::size_t next = raw.find_first_of(", \t", pos);
      const std::size_t end = (next == std::string::npos) ? raw.size() : next;
      if (end > pos) line.tokens.push_back(raw.substr(pos, end - pos));
      pos = end + 1;
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

double nnet_double(const std::string& token, int line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("nnet line " + std::to_string(line) + ": invalid number '" + token + "'");
  }
  return value;
}

long nnet_int(const std::string& token, int line) {
  long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("nnet line " + std::to_string(line) + ": invalid integer '" + token + "'");
  }
  return value;
}

VectorXd nnet_values(const NnetLine& line, Index count, const char* what) {
  if (static_cast<Index>(line.tokens.size()) != count) {
    throw ParseError("nnet line " + std::to_string(line.number) + ": expected " +
                     std::to_string(count) + " " + what + " values, got " +
                     std::to_string(line.tokens.size()));
  }
  VectorXd v(count);
  for (Index i = 0; i < count; ++i) {
    v(i) = nnet_double(line.tokens[static_cast<std::size_t>(i)], line.number);
  }
  return v;
}

}  // namespace

Network parse_nnet(const std::string& text) {
  const std::vector<NnetLine> lines = nnet_lines(text);
  if (lines.empty()) throw ParseError("nnet: missing counts line");

  std::size_t cursor = 0;
  const auto next = [&]() -> const NnetLine& {
    if (cursor >= lines.size()) {
      throw ParseError("nnet line " + std::to_string(lines.back().number) +
                       ": unexpected end of file");
    }
    return lines[cursor++];
  };

  const NnetLine& counts = next();
  if (counts.tokens.size() < 4) {
    throw ParseError("nnet line " + std::to_string(counts.number) +
                     ": counts line needs 4 entries, got " + std::to_string(counts.tokens.size()));
  }
  const long num_layers = nnet_int(counts.tokens[0], counts.number);
  const long input_size = nnet_int(counts.tokens[1], counts.number);
  const long output_size = nnet_int(counts.tokens[2], counts.number);
  if (num_layers < 1 || input_size < 1 || output_size < 1) {
    throw ParseError("nnet line " + std::to_string(counts.number) + ": counts must be positive");
  }

  const NnetLine& sizes_line = next();
  if (static_cast<long>(sizes_line.tokens.size()) != num_layers + 1) {
    throw ParseError("nnet line " + std::to_string(sizes_line.number) + ": expected " +
                     std::to_string(num_layers + 1) + " layer sizes, got " +
                     std::to_string(sizes_line.tokens.size()));
  }
  std::vector<Index> sizes;
  for (const std::string& tok : sizes_line.tokens) {
    const long s = nnet_int(tok, sizes_line.number);
    if (s < 1) {
      throw ParseError("nnet line " + std::to_string(sizes_line.number) +
                       ": layer sizes must be positive");
    }
    sizes.push_back(static_cast<Index>(s));
  }
  if (sizes.front() != input_size || sizes.back() != output_size) {
    throw ParseError("nnet line " + std::to_string(sizes_line.number) +
                     ": layer sizes disagree with the counts line");
  }

  next();  // legacy flag, unused

  next();  // input minimums, kept out of the model
  next();  // input maximums, kept out of the model
  const NnetLine& means_line = next();
  const VectorXd means = nnet_values(means_line, input_size + 1, "mean");
  const NnetLine& ranges_line = next();
  const VectorXd ranges = nnet_values(ranges_line, input_size + 1, "range");
  if ((ranges.array() == 0.0).any()) {
    throw ParseError("nnet line " + std::to_string(ranges_line.number) +
                     ": zero normalization range");
  }

  Network net;
  for (long k = 0; k < num_layers; ++k) {
    const Index rows = sizes[static_cast<std::size_t>(k + 1)];
    const Index cols = sizes[static_cast<std::size_t>(k)];
    MatrixXd w(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      w.row(r) = nnet_values(next(), cols, "weight").transpose();
    }
    VectorXd b(rows);
    for (Index r = 0; r < rows; ++r) {
      b(r) = nnet_values(next(), 1, "bias")(0);
    }
    net.layers.push_back(Layer::linear(std::move(w), std::move(b)));
    if (k + 1 < num_layers) net.layers.push_back(Layer::activation(Layer::Kind::Relu, rows));
  }

  if (cursor != lines.size()) {
    throw ParseError("nnet line " + std::to_string(lines[cursor].number) +
                     ": unexpected trailing content");
  }

  const VectorXd in_mean = means.head(input_size);
  const VectorXd in_range = ranges.head(input_size);
  const double out_mean = means(input_size);
  const double out_range = ranges(input_size);
  const bool identity = in_mean.isZero(0.0) && (in_range.array() == 1.0).all() &&
                        out_mean == 0.0 && out_range == 1.0;
  if (!identity) {
    net.normalization.active = true;
    net.normalization.input_mean = in_mean;
    net.normalization.input_range = in_range;
    net.normalization.output_mean = out_mean;
    net.normalization.output_range = out_range;
  }

  validate_network(net);
  return net;
}

// ---------------------------------------------------------------------------
// JSON reader and writer
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

double json_number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ParseError("json " + path + ": expected a number");
  return node.get<double>();
}

}  // namespace

Network parse_json_net(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("json: ") + e.what());
  }

  if (!root.is_object() || !root.contains("layers")) {
    throw ParseError("json $: expected an object with a 'layers' array");
  }
  const json& layers = root["layers"];
  if (!layers.is_array() || layers.empty()) {
    throw ParseError("json $.layers: expected a non-empty array");
  }

  Network net;
  Index prev_width = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string path = "$.layers[" + std::to_string(i) + "]";
    const json& node = layers[i];
    if (!node.is_object() || !node.contains("type") || !node["type"].is_string()) {
      throw ParseError("json " + path + ": expected an object with a 'type' string");
    }
    const std::string type = node["type"].get<std::string>();

    if (type == "linear") {
      if (!node.contains("weights") || !node["weights"].is_array() || node["weights"].empty()) {
        throw ParseError("json " + path + ".weights: expected a non-empty array of rows");
      }
      const json& wj = node["weights"];
      const std::size_t rows = wj.size();
      if (!wj[0].is_array() || wj[0].empty()) {
        throw ParseError("json " + path + ".weights[0]: expected a non-empty row");
      }
      const std::size_t cols = wj[0].size();
      MatrixXd w(static_cast<Index>(rows), static_cast<Index>(cols));
      for (std::size_t r = 0; r < rows; ++r) {
        const std::string rpath = path + ".weights[" + std::to_string(r) + "]";
        if (!wj[r].is_array() || wj[r].size() != cols) {
          throw ParseError("json " + rpath + ": rows must all have " + std::to_string(cols) +
                           " entries");
        }
        for (std::size_t c = 0; c < cols; ++c) {
          w(static_cast<Index>(r), static_cast<Index>(c)) =
              json_number(wj[r][c], rpath + "[" + std::to_string(c) + "]");
        }
      }
      if (!node.contains("bias") || !node["bias"].is_array() || node["bias"].size() != rows) {
        throw ParseError("json " + path + ".bias: expected an array of " + std::to_string(rows) +
                         " entries");
      }
      VectorXd b(static_cast<Index>(rows));
      for (std::size_t r = 0; r < rows; ++r) {
        b(static_cast<Index>(r)) = json_number(node["bias"][r], path + ".bias[" + std::to_string(r) + "]");
      }
      if (prev_width != 0 && static_cast<Index>(cols) != prev_width) {
        throw ParseError("json " + path + ": input width " + std::to_string(cols) +
                         " does not match previous layer output " + std::to_string(prev_width));
      }
      net.layers.push_back(Layer::linear(std::move(w), std::move(b)));
      prev_width = static_cast<Index>(rows);
    } else if (type == "relu" || type == "sigmoid" || type == "tanh") {
      if (prev_width == 0) {
        throw ParseError("json " + path + ": first layer must be linear");
      }
      Layer::Kind kind = Layer::Kind::Relu;
      if (type == "sigmoid") kind = Layer::Kind::Sigmoid;
      if (type == "tanh") kind = Layer::Kind::Tanh;
      net.layers.push_back(Layer::activation(kind, prev_width));
    } else {
      throw ParseError("json " + path + ": unsupported layer type '" + type + "'");
    }
  }

  try {
    validate_network(net);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("json $.layers: ") + e.what());
  }
  return net;
}

std::string serialize_json_net(const Network& net) {
  validate_network(net);
  require(!net.normalization.active,
          "serialize_json_net: normalization is not representable in the JSON format");

  json layers = json::array();
  for (const Layer& layer : net.layers) {
    json node;
    node["type"] = kind_name(layer.kind);
    if (layer.kind == Layer::Kind::Linear) {
      json rows = json::array();
      for (Index r = 0; r < layer.weights.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < layer.weights.cols(); ++c) row.push_back(layer.weights(r, c));
        rows.push_back(std::move(row));
      }
      node["weights"] = std::move(rows);
      json bias = json::array();
      for (Index r = 0; r < layer.bias.size(); ++r) bias.push_back(layer.bias(r));
      node["bias"] = std::move(bias);
    }
    layers.push_back(std::move(node));
  }
  json root;
  root["layers"] = std::move(layers);
  return root.dump(2) + "\n";
}

}  // namespace zonoref
