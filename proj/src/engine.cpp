#include "zonoref/engine.hpp"

#include <chrono>
#include <deque>
#include <optional>
#include <stdexcept>
#include <utility>

namespace zonoref {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool same_box(const FactorBox& a, const FactorBox& b) {
  return (a.lower.array() == b.lower.array()).all() &&
         (a.upper.array() == b.upper.array()).all();
}

// Strict-greater argmax over the input dims, so ties resolve to the lowest
// index. A positive score implies the factor interval has positive width.
std::optional<SplitChoice> best_input_dim(const SplitScores& scores) {
  std::optional<SplitChoice> pick;
  double best = 0.0;
  for (Index i = 0; i < scores.input_dims.size(); ++i) {
    if (scores.input_dims(i) > best) {
      best = scores.input_dims(i);
      pick = SplitChoice{SplitChoice::Kind::InputDim, static_cast<int>(i), {}};
    }
  }
  return pick;
}

std::optional<SplitChoice> best_overall(const SplitScores& scores) {
  std::optional<SplitChoice> pick = best_input_dim(scores);
  double best = 0.0;
  if (pick) best = scores.input_dims(pick->input_dim);
  for (const auto& [ref, score] : scores.neurons) {
    if (score > best) {
      best = score;
      pick = SplitChoice{SplitChoice::Kind::Neuron, -1, ref};
    }
  }
  return pick;
}

// Last-resort choice when every sensitivity score vanishes: the physically
// widest input interval.
std::optional<SplitChoice> widest_input_dim(const FactorBox& box, const VectorXd& input_rad) {
  std::optional<SplitChoice> pick;
  double best = 0.0;
  for (Index i = 0; i < box.dim(); ++i) {
    const double width = (box.upper(i) - box.lower(i)) * input_rad(i);
    if (width > best) {
      best = width;
      pick = SplitChoice{SplitChoice::Kind::InputDim, static_cast<int>(i), {}};
    }
  }
  return pick;
}

FactorBox map_into_parent(const FactorBox& fresh, const FactorBox& parent) {
  const Index q0 = parent.dim();
  if (fresh.is_empty()) return FactorBox::make_empty(q0);
  const VectorXd mid = parent.mid();
  const VectorXd rad = parent.rad();
  FactorBox out;
  out.lower = mid + rad.cwiseProduct(fresh.lower.head(q0));
  out.upper = mid + rad.cwiseProduct(fresh.upper.head(q0));
  return out;
}

}  // namespace

bool check_verified(const Zonotope& y, const HPolytope& unsafe) {
  require(unsafe.dim() == y.dim(), "check_verified: dimension mismatch");
  for (Index i = 0; i < unsafe.num_constraints(); ++i) {
    const VectorXd row = unsafe.a_mat.row(i).transpose();
    const double enclosure_min = row.dot(y.center) - (row.transpose() * y.generators).cwiseAbs().sum();
    if (enclosure_min > unsafe.b_vec(i)) return true;
  }
  return false;
}

std::vector<VectorXd> falsify_candidates(const EncloseTrace& trace, const Zonotope& input,
                                         const HPolytope& unsafe) {
  require(unsafe.dim() == trace.output.dim(), "falsify_candidates: dimension mismatch");
  require(input.num_generators() == trace.input_factors,
          "falsify_candidates: input does not match the trace");

  std::vector<VectorXd> out;
  const auto push_unique = [&out](VectorXd x) {
    for (const VectorXd& seen : out) {
      if ((seen.array() == x.array()).all()) return;
    }
    out.push_back(std::move(x));
  };

  const Index q0 = trace.input_factors;
  const MatrixXd mapped = unsafe.a_mat * trace.output.generators;
  for (Index i = 0; i < unsafe.num_constraints(); ++i) {
    // Factor signs that minimize this row over the enclosure; restricted to
    // the input factors they name a vertex of the branch input set.
    VectorXd beta(q0);
    for (Index j = 0; j < q0; ++j) {
      const double m = mapped(i, j);
      beta(j) = m > 0.0 ? -1.0 : (m < 0.0 ? 1.0 : 0.0);
    }
    push_unique(input.center + input.generators * beta);
  }
  push_unique(input.center);
  return out;
}

SplitScores score_splits(const EncloseTrace& trace, const FactorBox& box) {
  require(box.dim() == trace.input_factors, "score_splits: box does not match the trace");

  SplitScores scores;
  scores.input_dims = VectorXd::Zero(trace.input_factors);

  // Slot per ReLU neuron in layer-then-neuron order; stable neurons keep 0.
  std::vector<std::pair<int, Index>> layer_base;
  for (const LayerEnclosure& act : trace.activations) {
    if (act.kind != Layer::Kind::Relu) continue;
    layer_base.emplace_back(act.layer_index, static_cast<Index>(scores.neurons.size()));
    for (Index i = 0; i < act.pre_activation.dim(); ++i) {
      scores.neurons.emplace_back(NeuronRef{act.layer_index, static_cast<int>(i)}, 0.0);
    }
  }

  const double denom = frobenius_radius(trace.output);
  if (denom == 0.0) return scores;

  const auto column_score = [&](Index col) {
    return trace.output.generators.col(col).squaredNorm() / denom;
  };

  for (Index col = 0; col < trace.output.num_generators(); ++col) {
    const Provenance& prov = trace.output_provenance[static_cast<std::size_t>(col)];
    if (prov.source == Provenance::Source::InputFactor) {
      scores.input_dims(prov.index) = column_score(col);
      continue;
    }
    for (const auto& [layer, base] : layer_base) {
      if (layer != prov.layer) continue;
      scores.neurons[static_cast<std::size_t>(base + prov.index)].second = column_score(col);
      break;
    }
  }
  return scores;
}

std::pair<FactorBox, FactorBox> split(const EncloseTrace& trace, const FactorBox& box,
                                      const SplitChoice& choice, int bound_iters) {
  require(!box.is_empty(), "split: empty box");
  require(box.dim() == trace.input_factors, "split: box does not match the trace");

  if (choice.kind == SplitChoice::Kind::InputDim) {
    const Index i = choice.input_dim;
    require(i >= 0 && i < box.dim(), "split: input dim out of range");
    const double mid = 0.5 * (box.lower(i) + box.upper(i));
    FactorBox left = box;
    FactorBox right = box;
    left.upper(i) = mid;
    right.lower(i) = mid;
    return {std::move(left), std::move(right)};
  }

  const LayerEnclosure* act = nullptr;
  for (const LayerEnclosure& candidate : trace.activations) {
    if (candidate.layer_index == choice.neuron.layer) {
      act = &candidate;
      break;
    }
  }
  require(act != nullptr && act->kind == Layer::Kind::Relu, "split: neuron is not a ReLU");
  require(choice.neuron.neuron >= 0 && choice.neuron.neuron < act->pre_activation.dim(),
          "split: neuron index out of range");

  // Cut along the pre-activation sign of the neuron, in the factor space the
  // pre-activation zonotope lives in. Its columns are a prefix of the final
  // factor list, so the leading box.dim() dims map back to the branch box.
  const Index q_alive = act->pre_activation.num_generators();
  const RowVectorXd g = act->pre_activation.generators.row(choice.neuron.neuron);
  const double c0 = act->pre_activation.center(choice.neuron.neuron);

  ConstraintSet inactive;
  inactive.c_mat = g;
  inactive.d_vec = VectorXd::Constant(1, -c0);
  ConstraintSet active;
  active.c_mat = -g;
  active.d_vec = VectorXd::Constant(1, c0);

  const FactorBox cube = FactorBox::full(q_alive);
  const FactorBox off_side = tighten_factor_bounds(inactive, cube, bound_iters);
  const FactorBox on_side = tighten_factor_bounds(active, cube, bound_iters);
  return {map_into_parent(off_side, box), map_into_parent(on_side, box)};
}

Verdict verify(const Network& net, const VerificationTask& task, const EngineConfig& config) {
  validate_network(net);
  require(task.input_box.dim() == net.input_dim(), "verify: input box dimension mismatch");
  require(!task.input_box.is_empty(), "verify: empty input box");
  require(task.input_box.lower.allFinite() && task.input_box.upper.allFinite(),
          "verify: non-finite input box");
  require(!task.unsafe.empty(), "verify: no unsafe polytopes");
  for (const HPolytope& poly : task.unsafe) {
    require(poly.dim() == net.output_dim(), "verify: unsafe polytope dimension mismatch");
    require(poly.num_constraints() > 0, "verify: unsafe polytope has no rows");
    require(poly.a_mat.allFinite() && poly.b_vec.allFinite(), "verify: non-finite polytope");
  }
  require(config.batch_size >= 1, "verify: batch_size must be positive");
  require(config.refine_iters >= 0, "verify: refine_iters must be non-negative");
  require(config.bound_iters >= 1, "verify: bound_iters must be positive");
  require(config.max_iterations >= 0, "verify: max_iterations must be non-negative");
  require(config.timeout_seconds >= 0.0, "verify: timeout must be non-negative");
  require(config.falsify_tolerance >= 0.0, "verify: falsify tolerance must be non-negative");
  require(config.max_depth >= 1, "verify: max_depth must be positive");

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const Index q0 = net.input_dim();
  const VectorXd input_rad = task.input_box.rad();

  std::deque<BranchItem> queue;
  for (std::size_t k = 0; k < task.unsafe.size(); ++k) {
    queue.push_back({FactorBox::full(q0), static_cast<int>(k), 0});
  }

  Verdict verdict;
  verdict.stats.peak_queue = queue.size();
  const auto finish = [&](Verdict::Kind kind, Verdict::UnknownReason reason) {
    verdict.kind = kind;
    verdict.reason = reason;
    verdict.stats.wall_seconds = elapsed();
    return verdict;
  };

  while (true) {
    if (queue.empty()) return finish(Verdict::Kind::Verified, Verdict::UnknownReason::None);
    if (verdict.stats.iterations >= config.max_iterations) {
      return finish(Verdict::Kind::Unknown, Verdict::UnknownReason::Budget);
    }
    if (elapsed() >= config.timeout_seconds) {
      return finish(Verdict::Kind::Unknown, Verdict::UnknownReason::Timeout);
    }
    ++verdict.stats.iterations;

    const std::size_t take =
        std::min<std::size_t>(queue.size(), static_cast<std::size_t>(config.batch_size));
    std::vector<BranchItem> batch;
    std::vector<Zonotope> inputs;
    batch.reserve(take);
    inputs.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
      batch.push_back(std::move(queue.front()));
      queue.pop_front();
      inputs.push_back(reparameterized_input(task.input_box, batch.back().box));
    }

    const std::vector<EncloseTrace> traces = propagate_batch(net, inputs);

    // Scan in queue order. Everything after a terminal event stays
    // untouched, which keeps counters independent of the batch size.
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++verdict.stats.subproblems;
      const BranchItem& item = batch[i];
      const EncloseTrace& trace = traces[i];
      const HPolytope& unsafe = task.unsafe[static_cast<std::size_t>(item.unsafe_index)];

      if (check_verified(trace.output, unsafe)) continue;

      for (const VectorXd& candidate : falsify_candidates(trace, inputs[i], unsafe)) {
        const VectorXd y = forward(net, candidate);
        if (((unsafe.a_mat * y - unsafe.b_vec).array() <= config.falsify_tolerance).all()) {
          verdict.counterexample_input = candidate;
          verdict.counterexample_output = y;
          verdict.falsified_polytope = item.unsafe_index;
          return finish(Verdict::Kind::Falsified, Verdict::UnknownReason::None);
        }
      }

      if (item.depth >= config.max_depth) {
        return finish(Verdict::Kind::Unknown, Verdict::UnknownReason::Budget);
      }

      SplitScores scores;
      std::optional<SplitChoice> choice;
      if (config.heuristic == SplitHeuristic::LocalRadius) {
        choice = widest_input_dim(item.box, input_rad);
      } else {
        scores = score_splits(trace, item.box);
        choice = best_overall(scores);
        if (!choice) choice = widest_input_dim(item.box, input_rad);
      }
      if (!choice) return finish(Verdict::Kind::Unknown, Verdict::UnknownReason::Budget);

      auto children = split(trace, item.box, *choice, config.bound_iters);
      if (choice->kind == SplitChoice::Kind::Neuron &&
          (same_box(children.first, item.box) || same_box(children.second, item.box))) {
        // The halfspace cut failed to shave either child below the parent;
        // repeating it would loop, so take the best input dim instead.
        std::optional<SplitChoice> fallback = best_input_dim(scores);
        if (!fallback) fallback = widest_input_dim(item.box, input_rad);
        if (!fallback) return finish(Verdict::Kind::Unknown, Verdict::UnknownReason::Budget);
        children = split(trace, item.box, *fallback, config.bound_iters);
      }

      for (FactorBox* child : {&children.first, &children.second}) {
        if (child->is_empty()) continue;
        FactorBox refined = std::move(*child);
        if (config.refine_on) {
          refined = refine_box(net, task.input_box, std::span<const HPolytope>(&unsafe, 1),
                               refined, config.refine_iters, config.bound_iters,
                               config.shrink_threshold);
          if (refined.is_empty()) continue;
        }
        queue.push_back({std::move(refined), item.unsafe_index, item.depth + 1});
      }
    }
    verdict.stats.peak_queue = std::max(verdict.stats.peak_queue, queue.size());
  }
}

}  // namespace zonoref
