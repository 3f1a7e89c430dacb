#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support/compose_check.hpp"

using namespace xqmft;
using namespace xqmft::testing;

namespace {

std::string read_sample(const std::string& name) {
  std::ifstream in(std::string(XQMFT_SAMPLES) + "/" + name);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// a(x1) becomes b(b(...b(q0(x1), eps)..., eps), eps) with k b-nodes.
Mft a_to_b(int k) {
  std::string rhs = "q0(x1)";
  for (int i = 0; i < k; ++i) rhs = "b(" + rhs + ", eps)";
  return parse_mft("q0(a(x1)x2) -> " + rhs + "\nq0(%t(x1)x2) -> eps\nq0(eps) -> eps\n");
}

std::size_t height(const Rhs& rhs) {
  std::size_t h = 0;
  for (const Item& it : rhs)
    if (auto* o = std::get_if<OutNode>(&it.v)) h = std::max(h, 1 + height(o->children));
  return h;
}

std::size_t max_rhs_height(const Mft& m) {
  std::size_t h = 0;
  for (const Rule& r : m.rules) h = std::max(h, height(r.rhs));
  return h;
}

// n a-nodes nested through first children, or through next siblings.
BinaryTree a_chain(int n, bool siblings = false) {
  BinaryTree t;
  for (int i = 0; i < n; ++i)
    t = siblings ? binary("a", NodeKind::Element, nullptr, t) : binary("a", NodeKind::Element, t, nullptr);
  return t;
}

Mft identity_tt() {
  return parse_mft("i(%t(x1)x2) -> %t(i(x1), i(x2))\ni(eps) -> eps\n");
}

}  // namespace

class Pipeline : public ::testing::TestWithParam<int> {};

TEST_P(Pipeline, RandomPairs) {
  const Construction& c = constructions()[GetParam()];
  Rng rng(900 + GetParam());
  SuiteResult r = pipeline_suite(c, rng, 50);
  EXPECT_EQ(r.failure, "");
  EXPECT_EQ(r.pairs, 50) << c.name << " skipped " << r.skipped;
}

INSTANTIATE_TEST_SUITE_P(Constructions, Pipeline, ::testing::Range(0, 7),
                         [](const auto& info) {
                           std::string n = constructions()[info.param].name;
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(ComposeTtTt, WorkedExampleStaysSmall) {
  Mft m1 = parse_mft(read_sample("a_to_b4.mft"));
  Mft m2 = parse_mft(read_sample("b_to_c2.mft"));
  CompositionReport rep;
  Mft m = compose_tt_tt(m1, m2, &rep);
  EXPECT_TRUE(validate(m).empty());
  EXPECT_EQ(classify(m), TransducerClass::TT);
  EXPECT_LT(size(m), 2 * rep.sigma * rep.size_m1 * rep.size_m2);
  EXPECT_LT(max_rhs_height(m), 5u);
  // The a-rule is split into four stay rules, one per b-node of the chain.
  int stays = 0;
  for (const Rule& r : m.rules)
    for_each_item(r.rhs, [&](const Item& it) {
      if (auto* c = std::get_if<Call>(&it.v)) stays += c->input == 0 && r.guard.kind == GuardKind::Symbol;
    });
  EXPECT_GE(stays, 4);
  for (int n = 0; n <= 3; ++n) {
    BinaryTree t = a_chain(n);
    EXPECT_TRUE(equal(evaluate_binary(m, t), evaluate_binary(m2, evaluate_binary(m1, t))));
  }
}

TEST(ComposeTtTt, ChainLengthTenIsPolynomial) {
  Mft m1 = a_to_b(10);
  Mft m2 = parse_mft(read_sample("b_to_c2.mft"));
  Mft m = compose_tt_tt(m1, m2);
  EXPECT_LT(size(m), std::size_t{1} << 10);
  EXPECT_LT(max_rhs_height(m), 5u);
  BinaryTree t = a_chain(1);
  EXPECT_TRUE(equal(evaluate_binary(m, t), evaluate_binary(m2, evaluate_binary(m1, t))));
}

TEST(ComposeTtTt, IdentityOperand) {
  Mft m = parse_mft(read_sample("a_to_b4.mft"));
  Rng rng(91);
  for (int i = 0; i < 20; ++i) {
    BinaryTree t = random_binary(rng, {"a", "b"}, 6);
    EXPECT_TRUE(equal(evaluate_binary(compose_tt_tt(identity_tt(), m), t), evaluate_binary(m, t)));
    EXPECT_TRUE(equal(evaluate_binary(compose_tt_tt(m, identity_tt()), t), evaluate_binary(m, t)));
  }
}

TEST(ComposeFtFt, DoubleExponentialGrowth) {
  Mft d = parse_mft(read_sample("doubling.mft"));
  Mft m = compose_ft_ft(d, d);
  Forest in = fcns_inverse(a_chain(2, true));
  Forest once = evaluate(d, in);
  EXPECT_EQ(once.size(), 4u);
  Forest twice = evaluate(d, once);
  ASSERT_EQ(twice.size(), 16u);
  EXPECT_EQ(evaluate(m, in), twice);
}

TEST(ComposeMttTt, ParameterCopiesPerSecondState) {
  Mft m1 = parse_mft(
      "q(%t(x1)x2) -> w(x1, a(eps, eps))\nq(eps) -> eps\n"
      "w(%t(x1)x2, y1) -> b(y1, w(x2, y1))\nw(eps, y1) -> y1\n");
  Mft m2 = parse_mft(
      "p(a(x1)x2) -> c(p(x1), s(x2))\np(%t(x1)x2) -> s(x1)\np(eps) -> eps\n"
      "s(%t(x1)x2) -> d(p(x2), eps)\ns(eps) -> eps\n");
  Mft m = compose_mtt_tt(m1, m2);
  // w has one parameter and m2 has two states, so 1 + 1 * 2 arguments.
  auto wp = m.find_state("<w|p>");
  ASSERT_TRUE(wp.has_value());
  EXPECT_EQ(m.rank(*wp), 3);
  EXPECT_EQ(m.rank(*m.find_state("<q|p>")), 1);
  Rng rng(92);
  for (int i = 0; i < 30; ++i) {
    BinaryTree t = random_binary(rng, {"a", "b"}, 6);
    EXPECT_TRUE(equal(evaluate_binary(m, t), evaluate_binary(m2, evaluate_binary(m1, t))));
  }
}

TEST(ComposeErrors, ClassChecks) {
  Mft ft = parse_mft(read_sample("doubling.mft"));
  Mft tt = parse_mft(read_sample("a_to_b4.mft"));
  EXPECT_THROW(compose_tt_tt(ft, tt), CompositionError);
  EXPECT_THROW(compose_ft_ft(parse_mft(read_sample("person.mft")), ft), CompositionError);
}

TEST(Decompose, ConcatenationBecomesBinary) {
  Mft m = parse_mft("q(%t(x1)x2, y1) -> q(x1, y1) y1 b()\nq(eps, y1) -> y1\n");
  Mft d = decompose_eval(m);
  EXPECT_EQ(print_mft(d).find("q(x1, y1) y1"), std::string::npos);
  EXPECT_NE(print_mft(d).find("@(q(x1, y1), @(y1, b(eps, eps)))"), std::string::npos);
  EXPECT_EQ(classify(d), TransducerClass::MTT);
}

TEST(Decompose, RecomposeRoundTrip) {
  Rng rng(93);
  EvalOptions cap;
  cap.max_work = 20000;
  for (int i = 0; i < 50; ++i) {
    Mft m = random_mft(rng, {});
    Mft back = recompose_eval(decompose_eval(m));
    Forest f = random_forest(rng);
    try {
      EXPECT_EQ(evaluate(back, f, cap), evaluate(m, f, cap));
    } catch (const BudgetExceeded&) {
    }
  }
}

TEST(EvalMtt, FlattensConcatenation) {
  Mft e = eval_mtt();
  EXPECT_EQ(classify(e), TransducerClass::MTT);
  Rng rng(94);
  for (int i = 0; i < 50; ++i) {
    BinaryTree t = random_binary(rng, {"a", "b", std::string(kConcatLabel)}, 8);
    EXPECT_TRUE(equal(evaluate_binary(e, t), fcns(eval(t)))) << print_binary(t);
  }
}

TEST(FtToMtt, BinarySemanticsAgree) {
  Rng rng(95);
  MftSpec spec;
  spec.cls = TransducerClass::FT;
  EvalOptions cap;
  cap.max_work = 20000;
  for (int i = 0; i < 50; ++i) {
    Mft m = random_mft(rng, spec);
    Mft t = ft_to_mtt(m);
    EXPECT_EQ(classify(t), TransducerClass::MTT);
    BinaryTree in = random_binary(rng, {"a", "b"}, 6);
    try {
      EXPECT_TRUE(equal(evaluate_binary(t, in, cap), evaluate_as_binary(m, in, cap)));
    } catch (const BudgetExceeded&) {
    }
  }
  EXPECT_THROW(ft_to_mtt(parse_mft(read_sample("person.mft"))), CompositionError);
}

TEST(ComposeBound, RatioIsBoundedOnRandomPairs) {
  Rng rng(96);
  for (const Construction& c : constructions()) {
    double limit = std::string(c.name) == "ft-tt" ? 16.0 : 2.0;
    double worst = 0;
    for (int i = 0; i < 30; ++i) {
      MftSpec s1, s2;
      s1.cls = c.first;
      s2.cls = c.second;
      CompositionReport rep;
      c.compose(random_mft(rng, s1), random_mft(rng, s2), &rep);
      worst = std::max(worst, rep.bound_ratio());
    }
    EXPECT_LT(worst, limit) << c.name;
  }
}
