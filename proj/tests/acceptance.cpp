// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single [PASS]/[FAIL] line with the measured numbers. Exits
// nonzero if anything fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "zonoref/engine.hpp"
#include "zonoref/oracle.hpp"
#include "testutil.hpp"

using namespace zonoref;
namespace tu = zonoref::testutil;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(int number, const std::string& name, bool pass, const std::string& detail,
            double elapsed) {
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %d: %s: %s (%.2fs)\n", pass ? "PASS" : "FAIL", number,
              name.c_str(), detail.c_str(), elapsed);
  std::fflush(stdout);
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

// Dyadic-exact trace of the worked example, assembled by hand.
EncloseTrace exact_example_trace() {
  const double s = std::sqrt(0.5);
  EncloseTrace trace;
  trace.input.center = VectorXd::Zero(2);
  trace.input.generators = MatrixXd(VectorXd::Constant(2, s).asDiagonal());
  trace.input_factors = 2;

  LayerEnclosure act;
  act.layer_index = 1;
  act.kind = Layer::Kind::Relu;
  act.pre_activation.center = (VectorXd(2) << 1.0, 0.0).finished();
  act.pre_activation.generators = (MatrixXd(2, 2) << 0.5, -0.5, 0.5, 0.5).finished();
  act.slopes = (VectorXd(2) << 1.0, 0.5).finished();
  act.error_lower = VectorXd::Zero(2);
  act.error_upper = (VectorXd(2) << 0.0, 0.5).finished();
  trace.activations.push_back(std::move(act));

  trace.output.center = (VectorXd(2) << 1.0, 0.25).finished();
  trace.output.generators =
      (MatrixXd(2, 3) << 0.5, -0.5, 0.0, 0.25, 0.25, 0.25).finished();
  trace.output_provenance = {Provenance{Provenance::Source::InputFactor, -1, 0},
                             Provenance{Provenance::Source::InputFactor, -1, 1},
                             Provenance{Provenance::Source::NeuronError, 1, 1}};
  return trace;
}

Index column_by_provenance(const EncloseTrace& trace, const Provenance& want) {
  for (std::size_t i = 0; i < trace.output_provenance.size(); ++i) {
    if (trace.output_provenance[i] == want) return static_cast<Index>(i);
  }
  return -1;
}

// ---------------------------------------------------------------- criterion 1

void criterion_worked_example() {
  const auto start = std::chrono::steady_clock::now();
  const Network net = tu::example1_network();
  const VerificationTask task = tu::example1_task(1.5);
  const EncloseTrace trace =
      propagate(net, reparameterized_input(task.input_box, FactorBox::full(2)));

  bool pass = true;

  // pre-activation set H1 = Z([1,0], [[1/2,-1/2],[1/2,1/2]])
  double h1_err = 0.0;
  if (trace.activations.size() == 1) {
    const Zonotope& h1 = trace.activations[0].pre_activation;
    const MatrixXd h1_ref = (MatrixXd(2, 2) << 0.5, -0.5, 0.5, 0.5).finished();
    h1_err = std::max((h1.center - (VectorXd(2) << 1.0, 0.0).finished()).cwiseAbs().maxCoeff(),
                      (h1.generators.leftCols(2) - h1_ref).cwiseAbs().maxCoeff());
  } else {
    pass = false;
  }
  pass = pass && h1_err <= 1e-12;

  // output set Y = Z([1,1/4], [[1/2,-1/2,0],[1/4,1/4,1/4]]), columns matched
  // by provenance; any extra error column must be roundoff-sized
  double y_err = (trace.output.center - (VectorXd(2) << 1.0, 0.25).finished())
                     .cwiseAbs()
                     .maxCoeff();
  const MatrixXd y_ref = (MatrixXd(2, 3) << 0.5, -0.5, 0.0, 0.25, 0.25, 0.25).finished();
  const Provenance refs[3] = {Provenance{Provenance::Source::InputFactor, -1, 0},
                              Provenance{Provenance::Source::InputFactor, -1, 1},
                              Provenance{Provenance::Source::NeuronError, 1, 1}};
  for (int k = 0; k < 3; ++k) {
    const Index col = column_by_provenance(trace, refs[k]);
    if (col < 0) {
      pass = false;
      continue;
    }
    y_err = std::max(y_err, (trace.output.generators.col(col) - y_ref.col(k)).cwiseAbs().maxCoeff());
  }
  for (Index c = 0; c < trace.output.num_generators(); ++c) {
    bool matched = false;
    for (const Provenance& p : refs) matched = matched || trace.output_provenance[c] == p;
    if (!matched) y_err = std::max(y_err, trace.output.generators.col(c).cwiseAbs().maxCoeff());
  }
  pass = pass && y_err <= 1e-12;

  // factor constraints: exact on the worked trace, 1e-12 through the float path
  const ConstraintSet exact_cd =
      unsafe_input_constraints(exact_example_trace(), task.unsafe[0], 2);
  const bool cd_exact = exact_cd.c_mat(0, 0) == -0.5 && exact_cd.c_mat(0, 1) == 0.5 &&
                        exact_cd.d_vec(0) == -0.5;
  pass = pass && cd_exact;

  const ConstraintSet float_cd = unsafe_input_constraints(trace, task.unsafe[0], 2);
  const double cd_err =
      std::max({std::abs(float_cd.c_mat(0, 0) + 0.5), std::abs(float_cd.c_mat(0, 1) - 0.5),
                std::abs(float_cd.d_vec(0) + 0.5)});
  pass = pass && cd_err <= 1e-12;

  const double elapsed = seconds_since(start);
  pass = pass && elapsed < 1.0;
  report(1, "worked-example propagation and pullback",
         pass,
         fmt("max|H1 err|=%.2e max|Y err|=%.2e C,d exact on worked trace=%s float err=%.2e",
             h1_err, y_err, cd_exact ? "yes" : "no", cd_err),
         elapsed);
}

// ------------------------------------------------------------ criteria 2 + 3

struct FuzzRecord {
  Verdict::Kind on = Verdict::Kind::Unknown;
  Verdict::Kind off = Verdict::Kind::Unknown;
  long long subs_on = 0;
  long long subs_off = 0;
};

void criterion_soundness_and_ablation() {
  const auto start = std::chrono::steady_clock::now();
  const int kInstances = 200;

  int disagreements = 0;
  int witness_failures = 0;
  int conclusive_on = 0;
  int conclusive_off = 0;
  std::vector<FuzzRecord> records;
  records.reserve(kInstances);

  for (int seed = 0; seed < kInstances; ++seed) {
    const tu::FuzzInstance inst = tu::make_fuzz_instance(static_cast<std::uint64_t>(seed));
    const ReachVerdict truth =
        exhaustive_reach_tiny(inst.net, inst.task.input_box, inst.task.unsafe[0]);

    FuzzRecord rec;
    for (const bool refine : {true, false}) {
      EngineConfig cfg;
      cfg.refine_on = refine;
      cfg.batch_size = 1;
      cfg.max_iterations = 10000;  // doubles as the subproblem cap at batch 1
      cfg.timeout_seconds = 20.0;
      const Verdict v = verify(inst.net, inst.task, cfg);
      (refine ? rec.on : rec.off) = v.kind;
      (refine ? rec.subs_on : rec.subs_off) = v.stats.subproblems;

      if (v.kind == Verdict::Kind::Unknown) continue;
      (refine ? conclusive_on : conclusive_off) += 1;
      if ((v.kind == Verdict::Kind::Verified) != truth.safe) ++disagreements;
      if (v.kind == Verdict::Kind::Falsified) {
        const VectorXd y = forward(inst.net, v.counterexample_input);
        const double margin =
            (inst.task.unsafe[0].a_mat * y - inst.task.unsafe[0].b_vec).maxCoeff();
        if (margin > 1e-6 || !inst.task.input_box.contains(v.counterexample_input, 1e-9)) {
          ++witness_failures;
        }
      }
    }
    records.push_back(rec);
  }

  const double elapsed2 = seconds_since(start);
  const bool pass2 = disagreements == 0 && witness_failures == 0 && elapsed2 < 180.0;
  report(2, "verdicts agree with the exhaustive oracle", pass2,
         fmt("%d instances, conclusive on/off=%d/%d, disagreements=%d, bad witnesses=%d",
             kInstances, conclusive_on, conclusive_off, disagreements, witness_failures),
         elapsed2);

  const auto start3 = std::chrono::steady_clock::now();
  long long total_on = 0;
  long long total_off = 0;
  int both = 0;
  for (const FuzzRecord& rec : records) {
    if (rec.on == Verdict::Kind::Unknown || rec.off == Verdict::Kind::Unknown) continue;
    ++both;
    total_on += rec.subs_on;
    total_off += rec.subs_off;
  }
  const double mean_on = both > 0 ? static_cast<double>(total_on) / both : 0.0;
  const double mean_off = both > 0 ? static_cast<double>(total_off) / both : 0.0;
  const double ratio = mean_off > 0.0 ? mean_on / mean_off : 1.0;
  const bool pass3 = both >= 100 && ratio <= 0.7;
  report(3, "refinement cuts the subproblem count", pass3,
         fmt("%d instances conclusive in both, mean subproblems %.2f (on) vs %.2f (off), "
             "ratio %.3f <= 0.7",
             both, mean_on, mean_off, ratio),
         seconds_since(start3));
}

// ---------------------------------------------------------------- criterion 4

void criterion_tightening() {
  const auto start = std::chrono::steady_clock::now();
  tu::Rng rng{0xb0f0ULL};

  int violations = 0;
  int empties = 0;
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index q = rng.uniform_int(2, 6);
    const Index p = rng.uniform_int(1, 4);
    ConstraintSet cons;
    cons.c_mat = tu::random_matrix(rng, p, q, -1.0, 1.0);
    cons.d_vec = tu::random_vector(rng, p, -0.5, 0.8);

    const FactorBox tight = tighten_factor_bounds(cons, FactorBox::full(q), 8);
    const FactorBox exact = exact_box_bounds(cons, FactorBox::full(q));

    if (tight.is_empty()) {
      ++empties;
      if (!exact.is_empty()) ++violations;  // tighten may never invent emptiness
      continue;
    }
    ++checked;
    if (!exact.is_empty()) {
      if (((exact.lower.array() < tight.lower.array() - 1e-9) ||
           (exact.upper.array() > tight.upper.array() + 1e-9))
              .any()) {
        ++violations;
      }
    }
    // one extra sweep may only shrink, and may not invent emptiness
    const FactorBox more = tighten_factor_bounds(cons, FactorBox::full(q), 9);
    if (more.is_empty()) {
      if (!exact.is_empty()) ++violations;
    } else if (((more.lower.array() < tight.lower.array()) ||
                (more.upper.array() > tight.upper.array()))
                   .any()) {
      ++violations;
    }
  }

  // the two worked instances are exact
  double worked_err = 0.0;
  {
    ConstraintSet cons;
    cons.c_mat = (MatrixXd(1, 2) << -0.5, 0.5).finished();
    cons.d_vec = VectorXd::Constant(1, -0.5);
    const FactorBox tight = tighten_factor_bounds(cons, FactorBox::full(2), 8);
    const FactorBox exact = exact_box_bounds(cons, FactorBox::full(2));
    worked_err = std::max(tu::max_abs_diff(tight.lower, exact.lower),
                          tu::max_abs_diff(tight.upper, exact.upper));
  }
  {
    ConstraintSet cons;
    cons.c_mat = (MatrixXd(1, 2) << 1.0, 1.0).finished();
    cons.d_vec = VectorXd::Constant(1, -1.0);
    const FactorBox tight = tighten_factor_bounds(cons, FactorBox::full(2), 8);
    const FactorBox exact = exact_box_bounds(cons, FactorBox::full(2));
    worked_err = std::max({worked_err, tu::max_abs_diff(tight.lower, exact.lower),
                           tu::max_abs_diff(tight.upper, exact.upper)});
  }

  const double elapsed = seconds_since(start);
  const bool pass = violations == 0 && worked_err <= 1e-12 && elapsed < 30.0;
  report(4, "bound tightening encloses the exact bounds", pass,
         fmt("300 systems (%d nonempty, %d tightened empty), violations=%d, "
             "worked-instance err=%.2e",
             checked, empties, violations, worked_err),
         elapsed);
}

// ---------------------------------------------------------------- criterion 5

void criterion_heuristic() {
  const auto start = std::chrono::steady_clock::now();
  const double h = 1e-4;

  double max_rel = 0.0;
  int columns_checked = 0;
  for (int t = 0; t < 100; ++t) {
    const tu::FuzzInstance inst = tu::make_fuzz_instance(2000 + static_cast<std::uint64_t>(t));
    const EncloseTrace trace = propagate(
        inst.net, reparameterized_input(inst.task.input_box,
                                        FactorBox::full(inst.task.input_box.dim())));
    const SplitScores scores = score_splits(trace, FactorBox::full(inst.task.input_box.dim()));

    auto fd_for_column = [&](Index col) {
      Zonotope bumped = trace.output;
      bumped.generators.col(col) *= 1.0 + h;
      const double up = frobenius_radius(bumped);
      bumped.generators.col(col) = trace.output.generators.col(col) * (1.0 - h);
      const double down = frobenius_radius(bumped);
      return (up - down) / (2.0 * h);
    };
    auto check = [&](double score, Index col) {
      const double fd = fd_for_column(col);
      ++columns_checked;
      if (std::abs(fd) > 1e-6) {
        max_rel = std::max(max_rel, std::abs(score - fd) / std::abs(fd));
      } else if (std::abs(score - fd) > 1e-9) {
        max_rel = std::max(max_rel, 1.0);
      }
    };

    for (Index j = 0; j < trace.input_factors; ++j) check(scores.input_dims(j), j);
    for (const auto& [ref, score] : scores.neurons) {
      const Index col = column_by_provenance(
          trace, Provenance{Provenance::Source::NeuronError, ref.layer, ref.neuron});
      if (col >= 0) check(score, col);
    }
  }

  // worked-example scores and the input-dim tie-break
  const SplitScores ex = score_splits(exact_example_trace(), FactorBox::full(2));
  double unstable_score = -1.0;
  double stray_score = 0.0;
  for (const auto& [ref, score] : ex.neurons) {
    if (ref == NeuronRef{1, 1}) {
      unstable_score = score;
    } else {
      stray_score = std::max(stray_score, score);
    }
  }
  const bool worked_ok = std::abs(ex.input_dims(0) - 0.3769) <= 1e-3 &&
                         std::abs(ex.input_dims(1) - 0.3769) <= 1e-3 &&
                         std::abs(unstable_score - 0.0754) <= 1e-3 && stray_score <= 1e-12 &&
                         ex.input_dims(0) == ex.input_dims(1) &&
                         ex.input_dims(0) > unstable_score;

  const double elapsed = seconds_since(start);
  const bool pass = max_rel <= 1e-6 && worked_ok;
  report(5, "split scores equal output-size derivatives", pass,
         fmt("%d columns, max relative error %.2e; worked scores (%.4f, %.4f, %.4f), "
             "tied dims favor dim 0",
             columns_checked, max_rel, ex.input_dims(0), ex.input_dims(1), unstable_score),
         elapsed);
}

// ---------------------------------------------------------------- criterion 6

void criterion_batch_invariance() {
  const auto start = std::chrono::steady_clock::now();

  int mismatches = 0;
  int falsified = 0;
  for (int t = 0; t < 50; ++t) {
    const tu::FuzzInstance inst = tu::make_fuzz_instance(1000 + static_cast<std::uint64_t>(t));

    Verdict runs[3];
    const int batches[3] = {1, 7, 128};
    for (int b = 0; b < 3; ++b) {
      EngineConfig cfg;
      cfg.batch_size = batches[b];
      cfg.max_iterations = 10000;
      cfg.timeout_seconds = 20.0;
      runs[b] = verify(inst.net, inst.task, cfg);
    }
    for (int b = 1; b < 3; ++b) {
      const bool same_kind =
          runs[b].kind == runs[0].kind && runs[b].reason == runs[0].reason;
      const bool same_subs = runs[b].stats.subproblems == runs[0].stats.subproblems;
      bool same_witness = true;
      if (runs[0].kind == Verdict::Kind::Falsified) {
        same_witness = runs[b].counterexample_input == runs[0].counterexample_input &&
                       runs[b].falsified_polytope == runs[0].falsified_polytope;
      }
      if (!(same_kind && same_subs && same_witness)) ++mismatches;
    }
    if (runs[0].kind == Verdict::Kind::Falsified) ++falsified;
  }

  const double elapsed = seconds_since(start);
  report(6, "batch size never changes the outcome", mismatches == 0,
         fmt("50 instances x batches {1,7,128} (%d falsified), mismatches=%d", falsified,
             mismatches),
         elapsed);
}

// ---------------------------------------------------------------- criterion 7

void criterion_fixture_corpus() {
  const auto start = std::chrono::steady_clock::now();

  int failures = 0;
  std::string first_failure;
  auto expect = [&](const std::string& name, bool ok, const std::string& why = "") {
    if (ok) return;
    ++failures;
    if (first_failure.empty()) first_failure = name + (why.empty() ? "" : " (" + why + ")");
  };
  auto rejects = [&](const std::string& name, auto parse, const std::string& needle) {
    const std::string msg = tu::catch_message(parse);
    expect(name, !msg.empty() && tu::contains_str(msg, needle), "wanted '" + needle + "'");
  };

  // well-formed networks
  try {
    const Network net = parse_json_net(tu::read_file(tu::fixture_path("example1.json")));
    expect("example1.json", net.layers.size() == 2 && net.layers[0].weights(0, 0) ==
                                std::sqrt(0.5));
  } catch (const std::exception&) {
    expect("example1.json", false);
  }
  try {
    const Network net = parse_nnet(tu::read_file(tu::fixture_path("example1.nnet")));
    expect("example1.nnet", net.layers.size() == 3 && !net.normalization.active);
  } catch (const std::exception&) {
    expect("example1.nnet", false);
  }
  try {
    const Network net = parse_nnet(tu::read_file(tu::fixture_path("acas_mini.nnet")));
    expect("acas_mini.nnet", net.layers.size() == 3 && net.normalization.active &&
                                 net.normalization.output_range == 2.0);
  } catch (const std::exception&) {
    expect("acas_mini.nnet", false);
  }

  // malformed networks
  rejects("comments_only.nnet",
          [] { parse_nnet(tu::read_file(tu::fixture_path("comments_only.nnet"))); },
          "missing counts line");
  rejects("bad_row_arity.nnet",
          [] { parse_nnet(tu::read_file(tu::fixture_path("bad_row_arity.nnet"))); },
          "expected 2 weight values, got 3");
  rejects("bad_token.nnet",
          [] { parse_nnet(tu::read_file(tu::fixture_path("bad_token.nnet"))); },
          "invalid number 'oops'");
  rejects("conv_layer.json",
          [] { parse_json_net(tu::read_file(tu::fixture_path("conv_layer.json"))); },
          "unsupported layer type 'conv'");
  rejects("ragged_weights.json",
          [] { parse_json_net(tu::read_file(tu::fixture_path("ragged_weights.json"))); },
          "rows must all have 2");

  // well-formed specifications
  try {
    const VerificationTask t =
        parse_vnnlib(tu::read_file(tu::fixture_path("example1_reach_1p5.vnnlib")), 2, 2);
    expect("example1_reach_1p5.vnnlib",
           t.unsafe.size() == 1 && t.unsafe[0].b_vec(0) == -1.5);
  } catch (const std::exception&) {
    expect("example1_reach_1p5.vnnlib", false);
  }
  try {
    const VerificationTask t =
        parse_vnnlib(tu::read_file(tu::fixture_path("example1_reach_2p5.vnnlib")), 2, 2);
    expect("example1_reach_2p5.vnnlib",
           t.unsafe.size() == 1 && t.unsafe[0].b_vec(0) == -2.5);
  } catch (const std::exception&) {
    expect("example1_reach_2p5.vnnlib", false);
  }
  try {
    const VerificationTask t =
        parse_vnnlib(tu::read_file(tu::fixture_path("disjunction.vnnlib")), 2, 2);
    expect("disjunction.vnnlib", t.unsafe.size() == 2 && t.unsafe[0].num_constraints() == 3 &&
                                     t.unsafe[1].num_constraints() == 2);
  } catch (const std::exception&) {
    expect("disjunction.vnnlib", false);
  }
  try {
    const VerificationTask t =
        parse_vnnlib(tu::read_file(tu::fixture_path("affine_atoms.vnnlib")), 1, 2);
    expect("affine_atoms.vnnlib", t.unsafe.size() == 1 && t.unsafe[0].a_mat(0, 0) == 0.5 &&
                                      t.unsafe[0].a_mat(0, 1) == -1.0 &&
                                      t.unsafe[0].b_vec(0) == 0.75);
  } catch (const std::exception&) {
    expect("affine_atoms.vnnlib", false);
  }

  // malformed specifications
  rejects("unbounded_input.vnnlib",
          [] { parse_vnnlib(tu::read_file(tu::fixture_path("unbounded_input.vnnlib")), 2, 1); },
          "has no upper bound");
  rejects("nonlinear_atom.vnnlib",
          [] { parse_vnnlib(tu::read_file(tu::fixture_path("nonlinear_atom.vnnlib")), 1, 1); },
          "non-linear term");
  rejects("unknown_symbol.vnnlib",
          [] { parse_vnnlib(tu::read_file(tu::fixture_path("unknown_symbol.vnnlib")), 1, 1); },
          "unknown symbol");
  rejects("no_output_assert.vnnlib",
          [] { parse_vnnlib(tu::read_file(tu::fixture_path("no_output_assert.vnnlib")), 1, 1); },
          "no unsafe-region assertion");
  rejects("double_or.vnnlib",
          [] { parse_vnnlib(tu::read_file(tu::fixture_path("double_or.vnnlib")), 1, 2); },
          "second (or ...)");
  rejects("mixed_atom.vnnlib",
          [] { parse_vnnlib(tu::read_file(tu::fixture_path("mixed_atom.vnnlib")), 1, 1); },
          "mixes input and output");

  // witness round-trip
  tu::Rng rng{0x77ULL};
  int roundtrip_failures = 0;
  for (int i = 0; i < 50; ++i) {
    const Index nx = rng.uniform_int(1, 4);
    const Index ny = rng.uniform_int(1, 4);
    const VectorXd x = tu::random_vector(rng, nx, -1e3, 1e3);
    const VectorXd y = tu::random_vector(rng, ny, -1.0, 1.0);
    const auto [px, py] = parse_witness(write_witness(x, y), nx, ny);
    if (px != x || py != y) ++roundtrip_failures;
  }
  expect("witness round-trip", roundtrip_failures == 0);

  const double elapsed = seconds_since(start);
  report(7, "fixture corpus parses and rejects as annotated", failures == 0,
         failures == 0 ? std::string("18 fixtures, 50 witness round-trips")
                       : fmt("%d failures, first: %s", failures, first_failure.c_str()),
         elapsed);
}

// ---------------------------------------------------------------- criterion 8

void criterion_containment() {
  const auto start = std::chrono::steady_clock::now();

  long long labeled_total = 0;
  long long escapes = 0;
  tu::Rng sample_rng{0xc047ULL};

  for (int t = 0; t < 100; ++t) {
    const tu::FuzzInstance inst = tu::make_fuzz_instance(3000 + static_cast<std::uint64_t>(t));
    const Index n = inst.task.input_box.dim();

    // three rounds of refine-then-split, mirroring the engine's branching
    std::vector<FactorBox> frontier;
    {
      const FactorBox root = refine_box(inst.net, inst.task, FactorBox::full(n), 4, 4);
      if (!root.is_empty()) frontier.push_back(root);
    }
    for (int level = 0; level < 3; ++level) {
      std::vector<FactorBox> next;
      for (const FactorBox& box : frontier) {
        const EncloseTrace trace =
            propagate(inst.net, reparameterized_input(inst.task.input_box, box));
        const SplitScores scores = score_splits(trace, box);

        SplitChoice choice;
        choice.kind = SplitChoice::Kind::InputDim;
        choice.input_dim = 0;
        double best = 0.0;
        for (Index j = 0; j < scores.input_dims.size(); ++j) {
          if (scores.input_dims(j) > best) {
            best = scores.input_dims(j);
            choice.input_dim = static_cast<int>(j);
          }
        }
        for (const auto& [ref, score] : scores.neurons) {
          if (score > best) {
            best = score;
            choice.kind = SplitChoice::Kind::Neuron;
            choice.neuron = ref;
          }
        }

        auto children = split(trace, box, choice, 4);
        const auto same = [&](const FactorBox& child) {
          return child.lower == box.lower && child.upper == box.upper;
        };
        if (choice.kind == SplitChoice::Kind::Neuron &&
            (same(children.first) || same(children.second))) {
          SplitChoice fallback;  // stagnant halfspace, bisect an input instead
          fallback.kind = SplitChoice::Kind::InputDim;
          fallback.input_dim = 0;
          double width = -1.0;
          for (Index j = 0; j < n; ++j) {
            const double w = box.upper(j) - box.lower(j);
            if (w > width) {
              width = w;
              fallback.input_dim = static_cast<int>(j);
            }
          }
          children = split(trace, box, fallback, 4);
        }

        for (const FactorBox& child : {children.first, children.second}) {
          if (child.is_empty()) continue;
          const FactorBox refined = refine_box(inst.net, inst.task, child, 4, 4);
          if (!refined.is_empty()) next.push_back(refined);
        }
      }
      frontier = std::move(next);
    }

    for (int i = 0; i < 10000; ++i) {
      const VectorXd x = tu::sample_box(sample_rng, inst.task.input_box);
      if (!tu::in_polytope(inst.task.unsafe[0], forward(inst.net, x), 0.0)) continue;
      ++labeled_total;
      const VectorXd beta =
          ((x - inst.task.input_box.mid()).array() / inst.task.input_box.rad().array()).matrix();
      bool inside = false;
      for (const FactorBox& box : frontier) {
        if (box.contains(beta, 1e-9)) {
          inside = true;
          break;
        }
      }
      if (!inside) ++escapes;
    }
  }

  const double elapsed = seconds_since(start);
  report(8, "unsafe samples stay inside the refined frontier", escapes == 0,
         fmt("100 instances, %lld unsafe-labeled samples, escapes=%lld", labeled_total,
             escapes),
         elapsed);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_worked_example();
  criterion_soundness_and_ablation();
  criterion_tightening();
  criterion_heuristic();
  criterion_batch_invariance();
  criterion_fixture_corpus();
  criterion_containment();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}
