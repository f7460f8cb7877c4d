#include "zonoref/oracle.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "zonoref/setlib.hpp"

namespace zonoref {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// All vertices of {x | f_mat*x <= g_vec}: every invertible n-subset of rows,
// solved and filtered by feasibility with slack tol. Quadratic in nothing
// but honest; callers keep n and the row count small.
std::vector<VectorXd> polytope_vertices(const MatrixXd& f_mat, const VectorXd& g_vec,
                                        double tol) {
  const Index m = f_mat.rows();
  const Index n = f_mat.cols();
  std::vector<VectorXd> vertices;
  if (m < n || n == 0) return vertices;

  std::vector<Index> comb(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) comb[static_cast<std::size_t>(i)] = i;

  MatrixXd a(n, n);
  VectorXd b(n);
  while (true) {
    for (Index i = 0; i < n; ++i) {
      a.row(i) = f_mat.row(comb[static_cast<std::size_t>(i)]);
      b(i) = g_vec(comb[static_cast<std::size_t>(i)]);
    }
    const Eigen::FullPivLU<MatrixXd> lu(a);
    if (lu.isInvertible()) {
      const VectorXd x = lu.solve(b);
      if (((f_mat * x - g_vec).array() <= tol).all()) vertices.push_back(x);
    }

    // next combination in lexicographic order
    Index i = n - 1;
    while (i >= 0 && comb[static_cast<std::size_t>(i)] == m - n + i) --i;
    if (i < 0) break;
    ++comb[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < n; ++j) {
      comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return vertices;
}

struct Splitmix {
  std::uint64_t state;

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0,1); fixed mapping so every platform draws the
  // same sequence.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace

FactorBox exact_box_bounds(const ConstraintSet& cons, const FactorBox& box) {
  const Index q = box.dim();
  require(cons.dim() == q, "exact_box_bounds: dimension mismatch");
  require(q >= 1 && q <= 8, "exact_box_bounds: dimension too large for vertex enumeration");
  require(cons.num_constraints() + 2 * q <= 24, "exact_box_bounds: too many facets");
  if (box.is_empty()) return FactorBox::make_empty(q);

  const Index p = cons.num_constraints();
  MatrixXd f_mat(p + 2 * q, q);
  VectorXd g_vec(p + 2 * q);
  f_mat.topRows(p) = cons.c_mat;
  g_vec.head(p) = cons.d_vec;
  f_mat.middleRows(p, q) = MatrixXd::Identity(q, q);
  g_vec.segment(p, q) = box.upper;
  f_mat.bottomRows(q) = -MatrixXd::Identity(q, q);
  g_vec.tail(q) = -box.lower;

  const std::vector<VectorXd> vertices = polytope_vertices(f_mat, g_vec, kFeasibilityTol);
  if (vertices.empty()) {
    // No vertex survived; the region is empty unless enumeration degenerated,
    // which a feasible box center would reveal.
    const VectorXd mid = box.mid();
    if (p == 0 || ((cons.c_mat * mid - cons.d_vec).array() <= kFeasibilityTol).all()) return box;
    return FactorBox::make_empty(q);
  }

  FactorBox out;
  out.lower = vertices.front();
  out.upper = vertices.front();
  for (const VectorXd& v : vertices) {
    out.lower = out.lower.cwiseMin(v);
    out.upper = out.upper.cwiseMax(v);
  }
  out.lower = out.lower.cwiseMax(box.lower);
  out.upper = out.upper.cwiseMin(box.upper);
  return out;
}

ReachVerdict exhaustive_reach_tiny(const Network& net, const Interval& input_box,
                                   const HPolytope& unsafe) {
  validate_network(net);
  require(input_box.dim() == net.input_dim(), "exhaustive_reach_tiny: input box mismatch");
  require(!input_box.is_empty(), "exhaustive_reach_tiny: empty input box");
  require(unsafe.dim() == net.output_dim(), "exhaustive_reach_tiny: polytope mismatch");
  require(unsafe.num_constraints() > 0, "exhaustive_reach_tiny: polytope has no rows");

  Index total_relu = 0;
  for (const Layer& layer : net.layers) {
    if (!layer.is_activation()) continue;
    require(layer.kind == Layer::Kind::Relu, "exhaustive_reach_tiny: ReLU networks only");
    total_relu += layer.width;
  }
  require(total_relu <= 12, "exhaustive_reach_tiny: too many ReLU neurons");
  const Index n = net.input_dim();
  require(n <= 4, "exhaustive_reach_tiny: input dimension too large");

  MatrixXd f0(2 * n, n);
  VectorXd g0(2 * n);
  f0.topRows(n) = MatrixXd::Identity(n, n);
  g0.head(n) = input_box.upper;
  f0.bottomRows(n) = -MatrixXd::Identity(n, n);
  g0.tail(n) = -input_box.lower;

  // Affine state over the raw input: value = m_mat*x + m_off on the region.
  MatrixXd m0 = MatrixXd::Identity(n, n);
  VectorXd off0 = VectorXd::Zero(n);
  const Normalization& nm = net.normalization;
  if (nm.active) {
    m0 = nm.input_range.cwiseInverse().asDiagonal();
    off0 = -nm.input_mean.cwiseQuotient(nm.input_range);
  }

  ReachVerdict verdict;

  // Checks one fully specified linear region against the unsafe polytope.
  const auto check_region = [&](const MatrixXd& m_mat, const VectorXd& m_off, const MatrixXd& f,
                                const VectorXd& g) -> bool {
    MatrixXd out_mat = m_mat;
    VectorXd out_off = m_off;
    if (nm.active) {
      out_mat *= nm.output_range;
      out_off = nm.output_range * out_off;
      out_off.array() += nm.output_mean;
    }
    const Index p = unsafe.num_constraints();
    MatrixXd ff(f.rows() + p, n);
    VectorXd gg(f.rows() + p);
    ff.topRows(f.rows()) = f;
    gg.head(f.rows()) = g;
    ff.bottomRows(p) = unsafe.a_mat * out_mat;
    gg.tail(p) = unsafe.b_vec - unsafe.a_mat * out_off;

    const std::vector<VectorXd> vertices = polytope_vertices(ff, gg, kFeasibilityTol);
    if (vertices.empty()) return false;

    std::vector<VectorXd> candidates = vertices;
    VectorXd mean = VectorXd::Zero(n);
    for (const VectorXd& v : vertices) mean += v;
    candidates.push_back(mean / static_cast<double>(vertices.size()));

    double best_margin = std::numeric_limits<double>::infinity();
    VectorXd best;
    for (const VectorXd& x : candidates) {
      const double margin = (unsafe.a_mat * forward(net, x) - unsafe.b_vec).maxCoeff();
      if (margin < best_margin) {
        best_margin = margin;
        best = x;
      }
    }
    if (best_margin <= kFeasibilityTol) {
      verdict.safe = false;
      verdict.witness = best;
      return true;
    }
    return false;  // numerically spurious region, keep searching
  };

  // Depth-first over activation patterns, layer by layer, neuron by neuron,
  // pruning any prefix whose input region is already empty. Neurons whose
  // sign is fixed over the region do not branch.
  const auto walk = [&](auto&& self, std::size_t layer_idx, MatrixXd m_mat, VectorXd m_off,
                        MatrixXd f, VectorXd g, std::vector<VectorXd> verts) -> bool {
    if (layer_idx == net.layers.size()) return check_region(m_mat, m_off, f, g);

    const Layer& layer = net.layers[layer_idx];
    if (layer.kind == Layer::Kind::Linear) {
      return self(self, layer_idx + 1, layer.weights * m_mat,
                  layer.weights * m_off + layer.bias, std::move(f), std::move(g),
                  std::move(verts));
    }

    const Index width = layer.width;
    VectorXd mask = VectorXd::Ones(width);
    const auto neurons = [&](auto&& rec, Index i, MatrixXd f2, VectorXd g2,
                             std::vector<VectorXd> v2) -> bool {
      if (i == width) {
        return self(self, layer_idx + 1, mask.asDiagonal() * m_mat, mask.cwiseProduct(m_off),
                    std::move(f2), std::move(g2), std::move(v2));
      }
      if (v2.empty()) return false;

      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const VectorXd& v : v2) {
        const double value = m_mat.row(i).dot(v) + m_off(i);
        lo = std::min(lo, value);
        hi = std::max(hi, value);
      }

      if (lo >= 0.0) {
        mask(i) = 1.0;
        return rec(rec, i + 1, std::move(f2), std::move(g2), std::move(v2));
      }
      if (hi <= 0.0) {
        mask(i) = 0.0;
        return rec(rec, i + 1, std::move(f2), std::move(g2), std::move(v2));
      }

      MatrixXd f3(f2.rows() + 1, n);
      VectorXd g3(f2.rows() + 1);
      f3.topRows(f2.rows()) = f2;
      g3.head(f2.rows()) = g2;

      // active side: m_mat.row(i)*x + m_off(i) >= 0
      f3.bottomRows<1>() = -m_mat.row(i);
      g3(f2.rows()) = m_off(i);
      {
        std::vector<VectorXd> v3 = polytope_vertices(f3, g3, kFeasibilityTol);
        if (!v3.empty()) {
          mask(i) = 1.0;
          if (rec(rec, i + 1, f3, g3, std::move(v3))) return true;
        }
      }
      // inactive side
      f3.bottomRows<1>() = m_mat.row(i);
      g3(f2.rows()) = -m_off(i);
      {
        std::vector<VectorXd> v3 = polytope_vertices(f3, g3, kFeasibilityTol);
        if (!v3.empty()) {
          mask(i) = 0.0;
          if (rec(rec, i + 1, std::move(f3), std::move(g3), std::move(v3))) return true;
        }
      }
      return false;
    };
    return neurons(neurons, 0, std::move(f), std::move(g), std::move(verts));
  };

  std::vector<VectorXd> verts0 = polytope_vertices(f0, g0, kFeasibilityTol);
  walk(walk, 0, std::move(m0), std::move(off0), std::move(f0), std::move(g0), std::move(verts0));
  return verdict;
}

std::optional<VectorXd> grid_falsify(const Network& net, const Interval& input_box,
                                     const HPolytope& unsafe, long long samples,
                                     std::uint64_t seed) {
  validate_network(net);
  require(input_box.dim() == net.input_dim(), "grid_falsify: input box mismatch");
  require(!input_box.is_empty(), "grid_falsify: empty input box");
  require(unsafe.dim() == net.output_dim(), "grid_falsify: polytope mismatch");
  require(samples >= 0, "grid_falsify: negative sample count");

  const Index n = input_box.dim();
  const auto hit = [&](const VectorXd& x) {
    return ((unsafe.a_mat * forward(net, x) - unsafe.b_vec).array() <= kFeasibilityTol).all();
  };

  if (n <= 16) {
    for (std::uint64_t corner = 0; corner < (1ULL << n); ++corner) {
      VectorXd x(n);
      for (Index i = 0; i < n; ++i) {
        x(i) = (corner >> i) & 1ULL ? input_box.upper(i) : input_box.lower(i);
      }
      if (hit(x)) return x;
    }
  }

  Splitmix rng{seed};
  const VectorXd span = input_box.upper - input_box.lower;
  for (long long s = 0; s < samples; ++s) {
    VectorXd x(n);
    for (Index i = 0; i < n; ++i) x(i) = input_box.lower(i) + rng.uniform() * span(i);
    if (hit(x)) return x;
  }
  return std::nullopt;
}

}  // namespace zonoref
