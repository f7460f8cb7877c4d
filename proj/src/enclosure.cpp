#include "zonoref/enclosure.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace zonoref {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

ActivationEnclosure assemble(const Zonotope& h, VectorXd slopes, VectorXd err_lo, VectorXd err_hi) {
  Zonotope scaled;
  scaled.center = slopes.cwiseProduct(h.center);
  scaled.generators = slopes.asDiagonal() * h.generators;

  Interval err;
  err.lower = std::move(err_lo);
  err.upper = std::move(err_hi);
  ZonotopeSum sum = minkowski_sum_interval(scaled, err);

  ActivationEnclosure enc;
  enc.set = std::move(sum.set);
  enc.slopes = std::move(slopes);
  enc.error_lower = std::move(err.lower);
  enc.error_upper = std::move(err.upper);
  enc.error_column_of_neuron = std::move(sum.column_of_dim);
  return enc;
}

double smooth_value(Layer::Kind fn, double x) { return activation_value(fn, x); }

double smooth_derivative(Layer::Kind fn, double x) {
  if (fn == Layer::Kind::Sigmoid) {
    const double s = activation_value(fn, x);
    return s * (1.0 - s);
  }
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

}  // namespace

ActivationEnclosure enclose_relu(const Zonotope& h) {
  const Interval bounds = interval_hull(h);
  const Index n = h.dim();

  VectorXd slopes(n), err_lo(n), err_hi(n);
  for (Index i = 0; i < n; ++i) {
    const double l = bounds.lower(i);
    const double u = bounds.upper(i);
    if (u <= 0.0) {
      slopes(i) = 0.0;
      err_lo(i) = 0.0;
      err_hi(i) = 0.0;
    } else if (l >= 0.0) {
      slopes(i) = 1.0;
      err_lo(i) = 0.0;
      err_hi(i) = 0.0;
    } else {
      const double lambda = u / (u - l);
      slopes(i) = lambda;
      err_lo(i) = 0.0;
      err_hi(i) = -lambda * l;
    }
  }
  return assemble(h, std::move(slopes), std::move(err_lo), std::move(err_hi));
}

ActivationEnclosure enclose_smooth(const Zonotope& h, Layer::Kind fn) {
  require(fn == Layer::Kind::Sigmoid || fn == Layer::Kind::Tanh,
          "enclose_smooth: fn must be sigmoid or tanh");

  const Interval bounds = interval_hull(h);
  const Index n = h.dim();

  VectorXd slopes(n), err_lo(n), err_hi(n);
  for (Index i = 0; i < n; ++i) {
    const double l = bounds.lower(i);
    const double u = bounds.upper(i);

    if (u == l) {
      // Degenerate interval: the tangent enclosure is a single point.
      const double lambda = smooth_derivative(fn, l);
      const double d = smooth_value(fn, l) - lambda * l;
      slopes(i) = lambda;
      err_lo(i) = d;
      err_hi(i) = d;
      continue;
    }

    const double lambda = (smooth_value(fn, u) - smooth_value(fn, l)) / (u - l);
    double dmin = std::min(smooth_value(fn, l) - lambda * l, smooth_value(fn, u) - lambda * u);
    double dmax = std::max(smooth_value(fn, l) - lambda * l, smooth_value(fn, u) - lambda * u);

    // Interior extrema of sig(x) - lambda*x sit where the derivative equals
    // the secant slope; both activations admit closed forms.
    double roots[2];
    int num_roots = 0;
    if (fn == Layer::Kind::Sigmoid) {
      const double disc = std::max(0.0, 1.0 - 4.0 * lambda);
      const double r = std::sqrt(disc);
      for (const double s : {0.5 * (1.0 + r), 0.5 * (1.0 - r)}) {
        if (s > 0.0 && s < 1.0) roots[num_roots++] = std::log(s / (1.0 - s));
      }
    } else {
      const double disc = std::max(0.0, 1.0 - lambda);
      const double r = std::sqrt(disc);
      if (r < 1.0) {
        roots[num_roots++] = std::atanh(r);
        roots[num_roots++] = std::atanh(-r);
      }
    }
    for (int k = 0; k < num_roots; ++k) {
      const double x = roots[k];
      if (x <= l || x >= u || !std::isfinite(x)) continue;
      const double d = smooth_value(fn, x) - lambda * x;
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }

    slopes(i) = lambda;
    err_lo(i) = dmin - 1e-9;
    err_hi(i) = dmax + 1e-9;
  }
  return assemble(h, std::move(slopes), std::move(err_lo), std::move(err_hi));
}

EncloseTrace propagate(const Network& net, const Zonotope& input) {
  validate_network(net);
  require(input.dim() == net.input_dim(), "propagate: input dimension mismatch");
  require(input.center.allFinite() && input.generators.allFinite(),
          "propagate: non-finite input set");

  EncloseTrace trace;
  trace.input = input;
  trace.input_factors = input.num_generators();
  trace.output_provenance.reserve(static_cast<std::size_t>(input.num_generators()));
  for (Index j = 0; j < input.num_generators(); ++j) {
    trace.output_provenance.push_back(
        {Provenance::Source::InputFactor, -1, static_cast<int>(j)});
  }

  Zonotope cur = input;
  const Normalization& nm = net.normalization;
  if (nm.active) {
    cur.center = (cur.center - nm.input_mean).cwiseQuotient(nm.input_range);
    cur.generators.array().colwise() /= nm.input_range.array();
  }

  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    if (layer.kind == Layer::Kind::Linear) {
      cur = affine_map(layer.weights, cur, layer.bias);
      continue;
    }

    ActivationEnclosure enc = layer.kind == Layer::Kind::Relu
                                  ? enclose_relu(cur)
                                  : enclose_smooth(cur, layer.kind);
    LayerEnclosure record;
    record.layer_index = static_cast<int>(k);
    record.kind = layer.kind;
    record.pre_activation = std::move(cur);
    record.slopes = enc.slopes;
    record.error_lower = enc.error_lower;
    record.error_upper = enc.error_upper;
    trace.activations.push_back(std::move(record));

    for (Index i = 0; i < layer.width; ++i) {
      if (enc.error_column_of_neuron[static_cast<std::size_t>(i)] >= 0) {
        trace.output_provenance.push_back(
            {Provenance::Source::NeuronError, static_cast<int>(k), static_cast<int>(i)});
      }
    }
    cur = std::move(enc.set);
  }

  if (nm.active) {
    cur.center = nm.output_range * cur.center;
    cur.center.array() += nm.output_mean;
    cur.generators *= nm.output_range;
  }
  trace.output = std::move(cur);
  return trace;
}

std::vector<EncloseTrace> propagate_batch(const Network& net, const std::vector<Zonotope>& inputs) {
  require(!inputs.empty(), "propagate_batch: empty batch");
  const Index dim = inputs.front().dim();
  const Index q0 = inputs.front().num_generators();
  for (const Zonotope& z : inputs) {
    require(z.dim() == dim && z.num_generators() == q0,
            "propagate_batch: heterogeneous input shapes");
  }

  std::vector<EncloseTrace> traces;
  traces.reserve(inputs.size());
  for (const Zonotope& z : inputs) traces.push_back(propagate(net, z));
  return traces;
}

}  // namespace zonoref
