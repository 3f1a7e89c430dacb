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

}  // namespace

TEST(RuleFormat, PersonListingParses) {
  Mft m = parse_mft(read_sample("person.mft"));
  EXPECT_TRUE(validate(m).empty());
  EXPECT_EQ(m.states.size(), 6u);
  EXPECT_EQ(m.states[m.initial].name, "q0");
  EXPECT_EQ(m.rank(*m.find_state("q3")), 3);
  EXPECT_EQ(m.sigma.size(), 4u);
  EXPECT_TRUE(m.sigma.count(text_symbol("person0")));
}

TEST(RuleFormat, PrintParseIsIdentityOnCanonicalForm) {
  std::string text = print_mft(parse_mft(read_sample("person.mft")));
  EXPECT_EQ(print_mft(parse_mft(text)), text);
}

TEST(RuleFormat, RoundTripRandom) {
  Rng rng(41);
  for (TransducerClass c : {TransducerClass::TT, TransducerClass::FT, TransducerClass::MTT,
                            TransducerClass::MFT}) {
    MftSpec spec;
    spec.cls = c;
    for (int i = 0; i < 25; ++i) {
      Mft m = random_mft(rng, spec);
      Mft back = parse_mft(print_mft(m));
      EXPECT_EQ(print_mft(back), print_mft(m));
      EXPECT_EQ(back.states, m.states);
      EXPECT_EQ(back.rules.size(), m.rules.size());
      EXPECT_EQ(classify(back), classify(m));
    }
  }
}

TEST(RuleFormat, SigmaInferredFromGuards) {
  Mft m = parse_mft("q(a(x1)x2) -> b()\nq(%t(x1)x2) -> eps\nq(eps) -> eps\n");
  EXPECT_EQ(m.sigma, (std::set<Symbol>{name_symbol("a")}));
}

TEST(RuleFormat, SigmaHeaderAddsSymbols) {
  Mft m = parse_mft("# sigma: a z\nq(a(x1)x2) -> b()\nq(%t(x1)x2) -> eps\nq(eps) -> eps\n");
  EXPECT_EQ(m.sigma, (std::set<Symbol>{name_symbol("a"), name_symbol("z")}));
}

TEST(RuleFormat, TextOutputAndCopyLabel) {
  Mft m = parse_mft("q(%text(x1)x2) -> %t() #\"lit\"() q(x2)\nq(%t(x1)x2) -> %t(q(x1))\nq(eps) -> eps\n");
  EXPECT_EQ(to_xml(evaluate(m, parse_xml("<a>x<b/></a>"))), "<a>xlit<b/></a>");
}

TEST(RuleFormat, ParametersAndShorthand) {
  Mft m = parse_mft("q0(%) -> p(x0, a())\np(%t(x1)x2, y1) -> y1 p(x2, b())\np(eps, y1) -> y1\n");
  EXPECT_EQ(m.rules.size(), 4u);
  EXPECT_EQ(print_term(evaluate(m, parse_term("c() c()"))), "a() b() b()");
}

TEST(RuleFormat, SyntaxErrorsArePositioned) {
  try {
    parse_mft("q(%t(x1)x2) -> a()\nq(eps) -> b(\n");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_mft("q(%t(x1)x2) a()\n"), SyntaxError);
  EXPECT_THROW(parse_mft("q(eps) -> a\n"), SyntaxError);
}

TEST(RuleFormat, InconsistentRankRejected) {
  EXPECT_THROW(parse_mft("q(%t(x1)x2, y1) -> y1\nq(eps) -> eps\n"), SyntaxError);
}

TEST(RuleFormat, UndefinedStateIsReportedByValidate) {
  Mft m;
  try {
    m = parse_mft("q(%t(x1)x2) -> r(x1)\nq(eps) -> eps\n");
  } catch (const SyntaxError&) {
    SUCCEED();
    return;
  }
  EXPECT_FALSE(validate(m).empty());
}
