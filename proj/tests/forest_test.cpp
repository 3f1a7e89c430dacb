#include <gtest/gtest.h>

#include "support/random.hpp"

using namespace xqmft;
using namespace xqmft::testing;

namespace {

// Independent fcns: builds the binary tree from the right end of each list.
BinaryTree fcns_ref(const Forest& f) {
  BinaryTree acc;
  for (auto it = f.rbegin(); it != f.rend(); ++it) acc = binary(it->label, it->kind, fcns_ref(it->children), acc);
  return acc;
}

std::size_t eps_leaves(const BinaryTree& b) { return b ? eps_leaves(b->left) + eps_leaves(b->right) : 1; }

}  // namespace

TEST(Fcns, EmptyForest) { EXPECT_EQ(fcns({}), nullptr); }

TEST(Fcns, NestedTree) {
  EXPECT_EQ(print_binary(fcns(parse_term("a(b())"))), "a(b(eps, eps), eps)");
}

TEST(Fcns, Siblings) { EXPECT_EQ(print_binary(fcns(parse_term("a() b()"))), "a(eps, b(eps, eps))"); }

TEST(Fcns, MatchesReferenceOnRandomForests) {
  Rng rng(11);
  DocSpec spec;
  spec.max_nodes = 20;
  for (int i = 0; i < 100; ++i) {
    Forest f = random_forest(rng, spec);
    EXPECT_TRUE(equal(fcns(f), fcns_ref(f))) << print_term(f);
  }
}

TEST(FcnsInverse, RoundTrip) {
  Rng rng(12);
  DocSpec spec;
  spec.max_nodes = 20;
  for (int i = 0; i < 100; ++i) {
    Forest f = random_forest(rng, spec);
    EXPECT_EQ(fcns_inverse(fcns(f)), f);
    BinaryTree b = fcns(f);
    EXPECT_TRUE(equal(fcns(fcns_inverse(b)), b));
  }
}

TEST(FcnsInverse, Examples) {
  EXPECT_TRUE(fcns_inverse(nullptr).empty());
  EXPECT_EQ(fcns_inverse(parse_binary("a(b(eps, eps), eps)")), parse_term("a(b())"));
}

TEST(FcnsInverse, RejectsConcat) {
  EXPECT_THROW(fcns_inverse(parse_binary("@(a(eps, eps), eps)")), std::invalid_argument);
}

TEST(Fcns, NodeCountIdentity) {
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    Forest f = random_forest(rng);
    BinaryTree b = fcns(f);
    // A binary tree with n nodes has n + 1 leaves.
    EXPECT_EQ(eps_leaves(b), node_count(f) + 1);
    EXPECT_EQ(node_count(b), node_count(f));
  }
}

TEST(Eval, Concat) {
  EXPECT_EQ(eval(parse_binary("@(a(eps, eps), b(eps, eps))")), parse_term("a() b()"));
  EXPECT_TRUE(eval(nullptr).empty());
}

TEST(Eval, PersonRhsPieces) {
  // q(x1) y1 b(eps, eps) with the call and the parameter replaced by leaves.
  BinaryTree call = parse_binary("c(d(eps, eps), e(eps, eps))");
  BinaryTree y1 = parse_binary("f(eps, eps)");
  BinaryTree tail = parse_binary("b(eps, eps)");
  BinaryTree t = concat(call, concat(y1, tail));
  Forest want = fcns_inverse(call);
  for (const Tree& x : fcns_inverse(y1)) want.push_back(x);
  for (const Tree& x : fcns_inverse(tail)) want.push_back(x);
  EXPECT_EQ(eval(t), want);
  EXPECT_EQ(print_term(eval(t)), "c(d()) e() f() b()");
}

TEST(Eval, InvertsFcns) {
  Rng rng(14);
  for (int i = 0; i < 50; ++i) {
    Forest f = random_forest(rng);
    EXPECT_EQ(eval(fcns(f)), f);
  }
}

TEST(Term, ParseAndPrint) {
  EXPECT_EQ(parse_term("a(b())"), (Forest{element("a", {element("b")})}));
  EXPECT_TRUE(parse_term("").empty());
  EXPECT_EQ(print_term({}), "eps");
  Forest f = {element("book", {attribute("isbn", "123"), element("author", {text("Knuth")})})};
  EXPECT_EQ(print_term(f), "book(@isbn(#\"123\") author(#\"Knuth\"))");
  EXPECT_EQ(parse_term(print_term(f)), f);
}

TEST(Term, QuotesSpecialLabels) {
  Forest f = {element("a b", {element("c,d")}), text("x(y)")};
  EXPECT_EQ(parse_term(print_term(f)), f);
}

TEST(Term, RoundTripRandom) {
  Rng rng(15);
  DocSpec spec;
  spec.texts = {"s", "two words", "q\"uote"};
  for (int i = 0; i < 100; ++i) {
    Forest f = random_forest(rng, spec);
    EXPECT_EQ(parse_term(print_term(f)), f) << print_term(f);
  }
}

TEST(Term, SyntaxErrorHasPosition) {
  try {
    parse_term("a(b(");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_GT(e.column(), 0u);
  }
}

TEST(Forest, Invariants) {
  EXPECT_EQ(check_forest(parse_term("a(#\"x\" b())")), "");
  EXPECT_NE(check_forest({text("x"), text("y")}), "");
  EXPECT_NE(check_forest({Tree{"t", NodeKind::Text, {element("a")}}}), "");
  EXPECT_NE(check_forest({Tree{"k", NodeKind::Attribute, {}}}), "");
  EXPECT_NE(check_forest({element("")}), "");
}

TEST(Forest, NormalizeMergesText) {
  EXPECT_EQ(normalize({text("a"), text("b"), element("c", {text("d"), text("e")})}),
            (Forest{text("ab"), element("c", {text("de")})}));
}
