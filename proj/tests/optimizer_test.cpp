#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/param_oracle.hpp"
#include "support/random.hpp"

using namespace xqmft;
using namespace xqmft::testing;

namespace {

std::string read_sample(const std::string& name) {
  std::ifstream in(std::string(XQMFT_SAMPLES) + "/" + name);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same(const Mft& a, const Mft& b) {
  return a.states == b.states && a.rules == b.rules && a.initial == b.initial;
}

std::string names(const Mft& m, const ParamSet& s) {
  std::string out;
  for (const ParamId& p : s) out += m.states[p.state].name + "." + std::to_string(p.index) + " ";
  return out;
}

const char* kUnusedExample =
    "s(%t(x1)x2) -> q(x0, a(), b())\ns(eps) -> eps\n"
    "q(sigma(x1)x2, y1, y2) -> delta(qp(x2, y1, y2))\n"
    "q(%t(x1)x2, y1, y2) -> %t(qp(x2, delta(y2), sigma(y2)))\n"
    "q(eps, y1, y2) -> sigma(y2)\n"
    "qp(%t(x1)x2, y1, y2) -> q(x1, eps, y1)\n"
    "qp(eps, y1, y2) -> eps\n";

const char* kConstantExample =
    "s(%t(x1)x2) -> q(x0, eps, b())\ns(eps) -> eps\n"
    "q(sigma(x1)x2, y1, y2) -> q(x1, eps, y2) delta(qp(x2, y2))\n"
    "q(%t(x1)x2, y1, y2) -> q(x1, y1, y2) %t(qp(x2, delta(y2)))\n"
    "q(eps, y1, y2) -> y1\n"
    "qp(%t(x1)x2, y1) -> delta(q(x1, eps, y1))\n"
    "qp(eps, y1) -> eps\n";

}  // namespace

TEST(Optimize, PersonProgram) {
  Mft m = compile(parse_query(read_sample("person.xq")));
  OptimizeReport report;
  Mft o = optimize(m, &report);
  EXPECT_EQ(o.states.size(), 7u);
  EXPECT_EQ(size(o), 120u);
  EXPECT_EQ(report.rounds, 3);
  EXPECT_TRUE(validate(o).empty());
  EXPECT_TRUE(same(optimize(o), o));
  for (const char* doc : {"person.xml", "perso7.xml", "perso7_li.xml"})
    EXPECT_EQ(to_xml(evaluate(o, parse_xml(read_sample(doc)))),
              to_xml(evaluate(m, parse_xml(read_sample(doc)))));
}

TEST(Optimize, ReportTracksEveryPass) {
  OptimizeReport report;
  Mft o = optimize(compile(parse_query(read_sample("q13.xq"))), &report);
  ASSERT_EQ(report.passes.size(), 4u * report.rounds);
  EXPECT_EQ(report.passes.back().states_after, o.states.size());
  EXPECT_EQ(report.passes.back().size_after, size(o));
  EXPECT_EQ(report.passes.back().params_after, 0u);
}

TEST(UnusedParams, FlowThroughCallsKeepsParameter) {
  Mft m = parse_mft(kUnusedExample);
  int qp = *m.find_state("qp");
  EXPECT_EQ(unused_param_set(m), (ParamSet{{qp, 2}})) << names(m, unused_param_set(m));
  // y1 of q reaches the output: it becomes y1 of qp, then y2 of q, then sigma(y2).
  Mft other = parse_mft(std::string(kUnusedExample).replace(std::string(kUnusedExample).find("a()"), 3, "c()"));
  Forest doc = parse_term("sigma() t()");
  EXPECT_NE(evaluate(m, doc), evaluate(other, doc));
  EXPECT_EQ(print_term(evaluate(m, doc)), "delta(sigma(a()))");
  Mft r = remove_unused_params(m);
  EXPECT_EQ(r.rank(*r.find_state("qp")), 2);
  EXPECT_EQ(r.rank(*r.find_state("q")), 3);
}

TEST(UnusedParams, ParameterFreeIsIdentity) {
  Mft m = parse_mft("c(%t(x1)x2) -> %t(c(x1)) c(x2)\nc(eps) -> eps\n");
  EXPECT_TRUE(unused_param_set(m).empty());
  EXPECT_TRUE(same(remove_unused_params(m), m));
}

TEST(UnusedParams, MatchesReachabilityOracle) {
  Rng rng(81);
  for (int i = 0; i < 200; ++i) {
    MftSpec spec;
    spec.cls = i % 2 ? TransducerClass::MFT : TransducerClass::MTT;
    spec.states = uniform(rng, 2, 6);
    spec.max_params = 3;
    Mft m = random_mft(rng, spec);
    EXPECT_EQ(unused_param_set(m), unused_params_oracle(m)) << print_mft(m);
  }
  for (const CorpusQuery& c : corpus()) {
    Mft m = compile(parse_query(c.text));
    EXPECT_EQ(unused_param_set(m), unused_params_oracle(m)) << c.id;
  }
}

TEST(ConstantParams, EpsilonArgumentIsFolded) {
  Mft m = parse_mft(kConstantExample);
  Mft r = remove_constant_params(m);
  int q = *r.find_state("q");
  EXPECT_EQ(r.rank(q), 2);
  for (const Rule& rule : r.rules)
    if (rule.state == q && rule.guard.kind == GuardKind::Epsilon) EXPECT_TRUE(rule.rhs.empty());
  for (const char* doc : {"a(sigma(b() sigma()) c())", "sigma(x(y()))", ""})
    EXPECT_EQ(evaluate(r, parse_term(doc)), evaluate(m, parse_term(doc))) << doc;
}

TEST(StayMoves, ShorthandStateIsInlined) {
  Mft m = parse_mft(
      "s(%t(x1)x2) -> a(q(x1, b(), c())) s(x2)\ns(eps) -> eps\n"
      "q(%, y1, y2) -> r(x0) y1\n"
      "r(%t(x1)x2) -> %t() r(x2)\nr(eps) -> eps\n");
  Mft r = remove_stay_moves(m);
  EXPECT_FALSE(r.find_state("q").has_value() && reachable_states(r)[*r.find_state("q")]);
  Forest doc = parse_term("x(u() v()) y()");
  EXPECT_EQ(evaluate(r, doc), evaluate(m, doc));
  EXPECT_EQ(print_term(evaluate(m, doc)), "a(u() v() b()) a(b())");
}

TEST(StayMoves, SymbolSpecificStateIsKept) {
  Mft m = parse_mft(
      "s(%t(x1)x2) -> q(x1)\ns(eps) -> eps\n"
      "q(a(x1)x2) -> b()\nq(%t(x1)x2) -> q(x0)\nq(eps) -> eps\n");
  EXPECT_TRUE(remove_stay_moves(m).find_state("q").has_value());
}

TEST(Optimize, EveryPassIsSound) {
  Rng rng(82);
  EvalOptions cap, big;
  cap.max_work = 20000;
  big.max_work = 400000;
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    MftSpec spec;
    spec.cls = static_cast<TransducerClass>(i % 4);
    spec.states = uniform(rng, 1, 5);
    Mft m = random_mft(rng, spec);
    std::vector<std::pair<const char*, Mft>> variants = {
        {"unreachable", remove_unreachable(m)}, {"unused", remove_unused_params(m)},
        {"constant", remove_constant_params(m)}, {"stay", remove_stay_moves(m)},
        {"optimize", optimize(m)}};
    for (auto& [name, v] : variants) EXPECT_TRUE(validate(v).empty()) << name;
    for (int d = 0; d < 5; ++d) {
      Forest doc = random_forest(rng);
      std::string want;
      try {
        want = to_xml(evaluate(m, doc, cap));
      } catch (const BudgetExceeded&) {
        continue;
      }
      ++compared;
      for (auto& [name, v] : variants)
        EXPECT_EQ(to_xml(evaluate(v, doc, big)), want) << name << "\n" << print_mft(m);
    }
  }
  EXPECT_GT(compared, 600);
}

TEST(Optimize, NeverGrowsParameters) {
  Rng rng(83);
  for (int i = 0; i < 100; ++i) {
    MftSpec spec;
    spec.cls = TransducerClass::MFT;
    spec.states = uniform(rng, 2, 6);
    Mft m = random_mft(rng, spec);
    Mft o = optimize(m);
    EXPECT_LE(total_params(o), total_params(m));
    EXPECT_TRUE(same(optimize(o), o));
  }
}

TEST(FtEligibility, Corpus) {
  std::map<std::string, bool> want = {{"q02.xq", true},  {"q13.xq", true},   {"double.xq", true},
                                      {"q01.xq", false}, {"q04.xq", false},  {"q16.xq", false},
                                      {"q17.xq", false}, {"person.xq", false}, {"nested.xq", false}};
  for (auto& [name, ok] : want) {
    Query q = parse_query(read_sample(name));
    EXPECT_EQ(check_ft_eligibility(q), ok) << name;
    if (ok) EXPECT_EQ(classify(optimize(compile(q))), TransducerClass::FT) << name;
  }
}
