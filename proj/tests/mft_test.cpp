#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

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

bool has_concat(const BinaryTree& b) {
  return b && (is_concat(*b) || has_concat(b->left) || has_concat(b->right));
}

Mft person() { return parse_mft(read_sample("person.mft")); }

Mft copy_transducer() {
  return parse_mft("c(%t(x1)x2) -> %t(c(x1)) c(x2)\nc(eps) -> eps\n");
}

const char* kPersonDoc =
    "<person><p_id><a/>person0</p_id><name>Jim</name><c/><name>Li</name></person>";

}  // namespace

TEST(Evaluate, PersonDocument) {
  EXPECT_EQ(to_xml(evaluate(person(), parse_xml(kPersonDoc))), "<out>JimLi</out>");
  EXPECT_EQ(to_xml(evaluate(person(), parse_xml(read_sample("person.xml")))), "<out>JimLi</out>");
}

TEST(Evaluate, SecondParameterFallback) {
  EXPECT_EQ(to_xml(evaluate(person(), parse_xml(read_sample("perso7_li.xml")))), "<out>JimLi</out>");
  EXPECT_EQ(to_xml(evaluate(person(), parse_xml(read_sample("perso7.xml")))), "<out>Jim</out>");
}

TEST(Evaluate, OutputKeepsAdjacentText) {
  Forest out = evaluate(person(), parse_xml(kPersonDoc));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].children, (Forest{text("Jim"), text("Li")}));
  EXPECT_EQ(normalize(out), (Forest{element("out", {text("JimLi")})}));
}

TEST(Evaluate, CopyIsIdentity) {
  Rng rng(31);
  Mft c = copy_transducer();
  for (int i = 0; i < 50; ++i) {
    Forest f = random_forest(rng);
    EXPECT_EQ(evaluate(c, f), f);
  }
}

TEST(Evaluate, DoublingForest) {
  Mft m = parse_mft(read_sample("doubling.mft"));
  Forest chain = fcns_inverse(parse_binary("a(eps, a(eps, a(eps, eps)))"));
  Forest out = evaluate(m, chain);
  EXPECT_EQ(out.size(), 8u);
  for (const Tree& t : out) EXPECT_EQ(t, element("a"));
}

TEST(Evaluate, Deterministic) {
  Rng rng(32);
  for (int i = 0; i < 30; ++i) {
    Mft m = random_mft(rng, {});
    Forest f = random_forest(rng);
    EvalOptions cap;
    cap.max_work = 20000;
    try {
      EXPECT_EQ(to_xml(evaluate(m, f, cap)), to_xml(evaluate(m, f, cap)));
    } catch (const BudgetExceeded&) {
    }
  }
}

TEST(Evaluate, StayLoopHitsBudget) {
  Mft m = parse_mft("q(%t(x1)x2) -> q(x0)\nq(eps) -> eps\n");
  try {
    evaluate(m, parse_term("a()"));
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("state q"), std::string::npos);
  }
  EXPECT_TRUE(evaluate(m, {}).empty());
}

TEST(Evaluate, TextGuardBeforeDefault) {
  Mft m = parse_mft("q(%text(x1)x2) -> t() q(x2)\nq(%t(x1)x2) -> e() q(x2)\nq(eps) -> eps\n");
  EXPECT_EQ(print_term(evaluate(m, parse_term("#\"x\" a() #\"y\""))), "t() e() t()");
}

TEST(Evaluate, BinaryOutputsOfTreeTransducersAreConcatFree) {
  Rng rng(33);
  MftSpec spec;
  spec.cls = TransducerClass::TT;
  for (int i = 0; i < 50; ++i) {
    Mft m = random_mft(rng, spec);
    BinaryTree out = evaluate_binary(m, random_binary(rng, {"a", "b", "c"}, 6));
    EXPECT_FALSE(has_concat(out)) << print_mft(m);
    EXPECT_EQ(eval(out), fcns_inverse(out));
  }
}

TEST(Evaluate, ForestSemanticsIsEvalOfDecomposition) {
  Rng rng(34);
  EvalOptions cap;
  cap.max_work = 20000;
  for (int i = 0; i < 50; ++i) {
    Mft m = random_mft(rng, {});
    BinaryTree t = random_binary(rng, {"a", "b"}, 6);
    try {
      BinaryTree want = evaluate_as_binary(m, t, cap);
      EXPECT_TRUE(equal(fcns(eval(evaluate_binary(decompose_eval(m), t))), want));
    } catch (const BudgetExceeded&) {
    }
  }
}

TEST(Validate, PersonIsValid) { EXPECT_TRUE(validate(person()).empty()); }

TEST(Validate, MissingEpsilonRule) {
  Mft m;
  int q = m.add_state("q", 1);
  m.add_rule(q, Guard::any(), {});
  auto errs = validate(m);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("no epsilon rule"), std::string::npos);
}

TEST(Validate, DuplicateSymbolRule) {
  Mft m;
  int q = m.add_state("q", 1);
  m.add_rule(q, Guard::on(name_symbol("a")), {});
  m.add_rule(q, Guard::on(name_symbol("a")), {out("b")});
  m.add_any_rule(q, {});
  auto errs = validate(m);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("duplicate"), std::string::npos);
}

TEST(Validate, RhsConstraints) {
  Mft m;
  int q = m.add_state("q", 2);
  int p = m.add_state("p", 1);
  m.initial = p;
  m.add_any_rule(p, {call(q, 0, {{}})});
  m.add_rule(q, Guard::any(), {param(2)});
  m.add_rule(q, Guard::eps(), {call(p, 1), copy_node()});
  auto errs = validate(m);
  EXPECT_EQ(errs.size(), 3u);
  Mft bad_arity = parse_mft("q(%t(x1)x2) -> q(x1)\nq(eps) -> eps\n");
  bad_arity.rules[0].rhs = {call(0, 1, {{}})};
  EXPECT_EQ(validate(bad_arity).size(), 1u);
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify(copy_transducer()), TransducerClass::FT);
  EXPECT_EQ(classify(person()), TransducerClass::MFT);
  EXPECT_EQ(classify(parse_mft(read_sample("a_to_b4.mft"))), TransducerClass::TT);
  EXPECT_EQ(classify(parse_mft("q(%t(x1)x2) -> p(x1, a(eps, eps))\nq(eps) -> eps\n"
                               "p(%t(x1)x2, y1) -> b(y1, y1)\np(eps, y1) -> y1\n")),
            TransducerClass::MTT);
}

TEST(Classify, RandomClassesNest) {
  Rng rng(35);
  for (TransducerClass c : {TransducerClass::TT, TransducerClass::FT, TransducerClass::MTT,
                            TransducerClass::MFT}) {
    MftSpec spec;
    spec.cls = c;
    for (int i = 0; i < 20; ++i) {
      TransducerClass got = classify(random_mft(rng, spec));
      EXPECT_LE(static_cast<int>(got), static_cast<int>(c));
      if (c == TransducerClass::FT) EXPECT_NE(got, TransducerClass::MTT);
    }
  }
}

TEST(Size, Closed) {
  Mft m;
  int q = m.add_state("q", 1);
  m.add_any_rule(q, {});
  // Default lhs q(%(x1)x2) has 4 nodes, epsilon lhs q(eps) has 2.
  EXPECT_EQ(size(m), 6u);
}

TEST(Size, PersonFrozen) { EXPECT_EQ(size(person()), 111u); }

TEST(Size, MonotoneUnderAddingRules) {
  Mft m = person();
  std::size_t before = size(m);
  m.add_rule(0, Guard::on(name_symbol("person")), {});
  EXPECT_GT(size(m), before);
}
