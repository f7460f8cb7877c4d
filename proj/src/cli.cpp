#include "zonoref/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "zonoref/engine.hpp"
#include "zonoref/oracle.hpp"
#include "zonoref/specparse.hpp"

namespace zonoref {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

Network load_network(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".nnet") == 0) return parse_nnet(text);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    return parse_json_net(text);
  }
  throw std::runtime_error("unsupported network format, expected .nnet or .json: " + path);
}

std::string format_double(double v) {
  v += 0.0;  // map -0 to 0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

const char* verdict_word(const Verdict& v) {
  switch (v.kind) {
    case Verdict::Kind::Falsified: return "sat";
    case Verdict::Kind::Verified: return "unsat";
    case Verdict::Kind::Unknown: return "unknown";
  }
  return "unknown";
}

int do_verify(const Network& net, const VerificationTask& task, const EngineConfig& config,
              const std::string& witness_path, const std::string& stats_path, bool check_oracle,
              std::ostream& out, std::ostream& err) {
  const Verdict verdict = verify(net, task, config);
  out << verdict_word(verdict) << "\n";

  if (verdict.kind == Verdict::Kind::Falsified && !witness_path.empty()) {
    write_file(witness_path,
               write_witness(verdict.counterexample_input, verdict.counterexample_output));
  }

  if (!stats_path.empty()) {
    nlohmann::json stats;
    stats["result"] = verdict_word(verdict);
    if (verdict.kind == Verdict::Kind::Unknown) {
      stats["unknown_reason"] =
          verdict.reason == Verdict::UnknownReason::Timeout ? "timeout" : "budget";
    } else {
      stats["unknown_reason"] = nullptr;
    }
    stats["iterations"] = verdict.stats.iterations;
    stats["subproblems"] = verdict.stats.subproblems;
    stats["peak_queue"] = verdict.stats.peak_queue;
    stats["wall_seconds"] = verdict.stats.wall_seconds;
    stats["seed"] = config.seed;
    write_file(stats_path, stats.dump(2) + "\n");
  }

  if (check_oracle) {
    try {
      bool oracle_unsafe = false;
      for (const HPolytope& poly : task.unsafe) {
        const ReachVerdict rv = exhaustive_reach_tiny(net, task.input_box, poly);
        if (!rv.safe) {
          oracle_unsafe = true;
          break;
        }
      }
      const bool agree = verdict.kind == Verdict::Kind::Unknown ||
                         (verdict.kind == Verdict::Kind::Falsified) == oracle_unsafe;
      err << "[oracle] exhaustive verdict: " << (oracle_unsafe ? "sat" : "unsat")
          << (agree ? " (agrees)" : " (MISMATCH)") << "\n";
    } catch (const std::invalid_argument& e) {
      err << "[oracle] unavailable: " << e.what() << "\n";
    }
  }
  return 0;
}

int do_bounds(const Network& net, const VerificationTask& task, int refine_iters, int bound_iters,
              const std::string& out_path, std::ostream& out) {
  std::ostringstream csv;
  csv << "iter,dim,lower,upper,space\n";

  const auto emit = [&csv, &net, &task](int iter, const FactorBox& box) {
    for (Index d = 0; d < box.dim(); ++d) {
      csv << iter << "," << d << "," << format_double(box.lower(d)) << ","
          << format_double(box.upper(d)) << ",input\n";
    }
    const EncloseTrace trace = propagate(net, reparameterized_input(task.input_box, box));
    const Interval hull = interval_hull(trace.output);
    for (Index d = 0; d < hull.dim(); ++d) {
      csv << iter << "," << d << "," << format_double(hull.lower(d)) << ","
          << format_double(hull.upper(d)) << ",output\n";
    }
  };

  FactorBox box = FactorBox::full(net.input_dim());
  emit(0, box);
  for (int it = 1; it <= refine_iters; ++it) {
    const FactorBox next = refine_box(net, task, box, 1, bound_iters);
    if (next.is_empty()) {
      csv << it << ",-1,1,-1,empty=1\n";
      break;
    }
    box = next;
    emit(it, box);
  }

  if (out_path.empty()) {
    out << csv.str();
  } else {
    write_file(out_path, csv.str());
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"set-based neural network verifier"};
  app.name("zonoref");
  app.require_subcommand(1);

  std::string network_path, spec_path, witness_path, stats_path, refine_switch = "on",
                                                                 heuristic_name = "enclosure";
  EngineConfig config;
  bool check_oracle = false;

  CLI::App* cmd_verify = app.add_subcommand("verify", "decide a reachability property");
  cmd_verify->add_option("--network", network_path, "network file (.nnet or .json)")->required();
  cmd_verify->add_option("--spec", spec_path, "property file (.vnnlib)")->required();
  cmd_verify->add_option("--witness", witness_path, "write the counterexample here on sat");
  cmd_verify->add_option("--stats-json", stats_path, "write run statistics here");
  cmd_verify->add_option("--refine", refine_switch, "branch refinement (default on)")
      ->check(CLI::IsMember({"on", "off"}));
  cmd_verify->add_option("--refine-iters", config.refine_iters,
                         "refinement iterations per branch (default 8)");
  cmd_verify->add_option("--bound-iters", config.bound_iters,
                         "bound tightening sweeps (default 4)");
  cmd_verify->add_option("--batch", config.batch_size, "subproblems per batch (default 128)");
  cmd_verify->add_option("--heuristic", heuristic_name, "split heuristic (default enclosure)")
      ->check(CLI::IsMember({"enclosure", "radius"}));
  cmd_verify->add_option("--timeout", config.timeout_seconds, "wall clock budget in seconds");
  cmd_verify->add_option("--max-iterations", config.max_iterations, "batch iteration budget");
  cmd_verify->add_option("--seed", config.seed, "seed echoed into the stats output");
  cmd_verify->add_flag("--check-oracle", check_oracle,
                       "cross-check the verdict against exhaustive enumeration (tiny nets)");

  int bounds_refine_iters = 8;
  int bounds_bound_iters = 4;
  std::string bounds_out;
  CLI::App* cmd_bounds = app.add_subcommand("bounds", "dump per-iteration refinement bounds");
  cmd_bounds->add_option("--network", network_path, "network file (.nnet or .json)")->required();
  cmd_bounds->add_option("--spec", spec_path, "property file (.vnnlib)")->required();
  cmd_bounds->add_option("--refine-iters", bounds_refine_iters,
                         "refinement iterations (default 8)");
  cmd_bounds->add_option("--bound-iters", bounds_bound_iters,
                         "bound tightening sweeps (default 4)");
  cmd_bounds->add_option("--out", bounds_out, "CSV output path (default stdout)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("zonoref");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const Network net = load_network(network_path);
    const VerificationTask task =
        parse_vnnlib(read_file(spec_path), net.input_dim(), net.output_dim());
    if (cmd_verify->parsed()) {
      config.refine_on = refine_switch == "on";
      config.heuristic = heuristic_name == "radius" ? SplitHeuristic::LocalRadius
                                                    : SplitHeuristic::EnclosureGradient;
      return do_verify(net, task, config, witness_path, stats_path, check_oracle, out, err);
    }
    return do_bounds(net, task, bounds_refine_iters, bounds_bound_iters, bounds_out, out);
  } catch (const std::exception& e) {
    err << "zonoref: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace zonoref
