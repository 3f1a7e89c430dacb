// xqmft: compile, optimize, compose and run macro forest transducers.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "xqmft/xqmft.hpp"

using namespace xqmft;

namespace {

std::string slurp(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

Mft compile_file(const std::string& path, bool opt) {
  Query q;
  try {
    q = parse_query(slurp(path));
  } catch (const SyntaxError& e) {
    throw std::runtime_error(path + ":" + e.what());
  }
  try {
    Mft m = compile(q);
    return opt ? optimize(m) : m;
  } catch (const CompileError& e) {
    std::string msg;
    for (const Diagnostic& d : e.diagnostics()) msg += (msg.empty() ? "" : "\n") + format_diagnostic(path, d);
    throw std::runtime_error(msg);
  }
}

Mft load_rules(const std::string& path) {
  try {
    Mft m = parse_mft(slurp(path));
    if (auto errs = validate(m); !errs.empty()) throw std::runtime_error(path + ": " + errs.front());
    return m;
  } catch (const SyntaxError& e) {
    throw std::runtime_error(path + ":" + e.what());
  }
}

void print_report(const OptimizeReport& r) {
  for (const PassStats& p : r.passes)
    std::cerr << "pass=" << p.pass << " states=" << p.states_before << "->" << p.states_after
              << " params=" << p.params_before << "->" << p.params_after << " size=" << p.size_before
              << "->" << p.size_after << "\n";
  std::cerr << "rounds=" << r.rounds << "\n";
}

void print_stats(const StreamStats& s) {
  std::cerr << "peak_retained_nodes=" << s.peak_retained_nodes << "\n"
            << "peak_suspensions=" << s.peak_suspensions << "\n"
            << "events_in=" << s.events_in << "\n"
            << "events_out=" << s.events_out << "\n"
            << "first_output_after=" << s.first_output_after << "\n"
            << "ms=" << s.ms << "\n";
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) out.push_back(std::stoul(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MinXQuery to macro forest transducer compiler and streaming engine"};
  app.require_subcommand(1);

  std::string query_path, rules_path, doc_path = "-", out_mode, other_path;
  bool no_opt = false, stats = false, report = false, compile_opt = false;

  auto* c_compile = app.add_subcommand("compile", "Compile a query into a rule file");
  c_compile->add_option("query", query_path, "Query file (- for stdin)")->required();
  c_compile->add_flag("--optimize,-O", compile_opt, "Optimize the result");

  auto* c_opt = app.add_subcommand("optimize", "Optimize a rule file");
  c_opt->add_option("rules", rules_path, "Rule file (- for stdin)")->default_val("-");
  c_opt->add_flag("--report", report, "Print per-pass statistics to stderr");

  std::string run_rules, run_query;
  auto* c_run = app.add_subcommand("run", "Stream a document through a transducer");
  auto* c_eval = app.add_subcommand("eval", "Evaluate a transducer in memory");
  for (auto* c : {c_run, c_eval}) {
    c->add_option("doc", doc_path, "XML document (- for stdin)")->default_val("-");
    auto* r = c->add_option("--rules,-r", run_rules, "Rule file");
    c->add_option("--query,-q", run_query, "Query file, compiled on the fly")->excludes(r);
    c->add_flag("--no-opt", no_opt, "Skip optimization of a compiled query");
  }
  c_run->add_flag("--stats", stats, "Print stream statistics to stderr");

  std::string mode = "tt-tt";
  auto* c_compose = app.add_subcommand("compose", "Compose two rule files");
  c_compose->add_option("first", rules_path, "Transducer applied first")->required();
  c_compose->add_option("second", other_path, "Transducer applied second")->required();
  c_compose->add_option("--mode", mode, "Construction")
      ->check(CLI::IsMember({"tt-tt", "mtt-tt", "tt-mtt", "mtt-ft", "tt-ft", "ft-tt", "ft-ft"}));
  c_compose->add_flag("--report", report, "Print sizes and timing to stderr");

  std::string shape = "xmark-lite";
  std::size_t size = 1000;
  std::uint64_t seed = 1;
  auto* c_gen = app.add_subcommand("gen", "Generate a synthetic document");
  c_gen->add_option("--shape", shape)->check(CLI::IsMember({"xmark-lite", "deep-chain", "wide-flat"}));
  c_gen->add_option("--size", size, "Node count, or depth for deep-chain")->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", seed);

  std::string queries = "q01,q02,q04,q13,q16,q17,double,fourstar,deepdup", sizes = "10000,100000";
  int reps = 1;
  auto* c_bench = app.add_subcommand("bench", "Stream generated documents through corpus queries");
  c_bench->add_option("--queries", queries, "Comma-separated corpus ids");
  c_bench->add_option("--sizes", sizes, "Comma-separated node counts");
  c_bench->add_option("--shape", shape)->check(CLI::IsMember({"xmark-lite", "deep-chain", "wide-flat"}));
  c_bench->add_option("--reps", reps)->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", seed);
  c_bench->add_flag("--no-opt", no_opt, "Run unoptimized transducers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_compile) {
      std::cout << print_mft(compile_file(query_path, compile_opt));
    } else if (*c_opt) {
      OptimizeReport r;
      Mft m = optimize(load_rules(rules_path), &r);
      if (report) print_report(r);
      std::cout << print_mft(m);
    } else if (*c_run || *c_eval) {
      if (run_rules.empty() && run_query.empty() && doc_path == "-") {
        std::cerr << "error: the rules and the document cannot both come from stdin\n";
        return 2;
      }
      Mft m = !run_query.empty() ? compile_file(run_query, !no_opt)
                                 : load_rules(run_rules.empty() ? "-" : run_rules);
      std::string doc = slurp(doc_path);
      if (*c_eval) {
        std::cout << to_xml(evaluate(m, parse_xml(doc))) << "\n";
      } else {
        StreamStats s;
        std::cout << stream_xml(m, doc, &s) << "\n";
        if (stats) print_stats(s);
      }
    } else if (*c_compose) {
      Mft a = load_rules(rules_path), b = load_rules(other_path);
      CompositionReport r;
      Mft m;
      if (mode == "tt-tt") m = compose_tt_tt(a, b, &r);
      else if (mode == "mtt-tt") m = compose_mtt_tt(a, b, &r);
      else if (mode == "tt-mtt") m = compose_tt_mtt(a, b, &r);
      else if (mode == "mtt-ft") m = compose_mtt_ft(a, b, &r);
      else if (mode == "tt-ft") m = compose_tt_ft(a, b, &r);
      else if (mode == "ft-tt") m = compose_ft_tt(a, b, &r);
      else m = compose_ft_ft(a, b, &r);
      std::cout << print_mft(m);
      if (report)
        std::cerr << "sigma=" << r.sigma << " size_m1=" << r.size_m1 << " size_m2=" << r.size_m2
                  << " size=" << r.size_out << " rules=" << r.rules_out << " ms=" << r.ms
                  << " class=" << to_string(classify(m)) << "\n";
    } else if (*c_gen) {
      XmlWriter w(std::cout);
      generate_doc(GenSpec{parse_shape(shape), size, seed}, w);
      std::cout << "\n";
    } else if (*c_bench) {
      std::stringstream ids(queries);
      for (std::string id; std::getline(ids, id, ',');)
        for (std::size_t n : parse_sizes(sizes))
          std::cout << format_record(run_bench({id, {parse_shape(shape), n, seed}, reps, !no_opt}))
                    << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
