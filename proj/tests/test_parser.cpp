#include <gtest/gtest.h>

#include <random>

#include "convexcert/lang.hpp"
#include "support/fuzz.hpp"

using namespace convexcert;
using namespace convexcert::lang;

TEST(Lexer, TokenKindsAndOffsets) {
  auto t = tokenize("x .* y'");
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[0].kind, TokenKind::Identifier);
  EXPECT_EQ(t[1].kind, TokenKind::DotOperator);
  EXPECT_EQ(t[1].text, ".*");
  EXPECT_EQ(t[1].begin, 2u);
  EXPECT_EQ(t[3].kind, TokenKind::Transpose);
}

TEST(Lexer, RejectsUnknownCharacter) {
  try {
    tokenize("x $ y");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset, 2u);
  }
}

TEST(Parser, Precedence) {
  EXPECT_EQ(render(parse("x*log(x)")), "(x * log(x))");
  EXPECT_EQ(render(parse("-x^2")), "(-(x ^ 2))");
  EXPECT_EQ(render(parse("a-b-c")), "((a - b) - c)");
  EXPECT_EQ(render(parse("2^3^2")), "(2 ^ (3 ^ 2))");
  EXPECT_EQ(render(parse("x'*A*x")), "(((x)' * A) * x)");
  EXPECT_EQ(render(parse("x .* y ./ z")), "((x .* y) ./ z)");
}

TEST(Parser, DecimalLiteralsAreExact) {
  Ast a = parse("1.5e3");
  EXPECT_EQ(a.kind, AstKind::Number);
  EXPECT_EQ(a.value, Rational(1500));
  EXPECT_EQ(parse("0.1").value, Rational(1, 10));
}

TEST(Parser, LeadingMinusIsANegNode) {
  Ast a = parse("-2");
  EXPECT_EQ(a.kind, AstKind::Neg);
  EXPECT_EQ(a.children[0].value, Rational(2));
}

TEST(Parser, ErrorPositions) {
  try {
    parse("sum(exp(x");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position, 9u);
    EXPECT_FALSE(e.expected.empty());
  }
  try {
    parse("x + * y");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position, 4u);
  }
  EXPECT_THROW(parse("log()"), ParseError);
  EXPECT_THROW(parse("foo(x)"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(Parser, FreeVariablesInOrder) {
  auto v = free_variables(parse("x'*A*x + b*sum(x)"));
  EXPECT_EQ(v, (std::vector<std::string>{"x", "A", "b"}));
}

TEST(Parser, RoundTripOnFuzzedExpressions) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    auto c = convexcert::testing::fuzz_expression(rng);
    Ast a = parse(c.expression);
    EXPECT_EQ(parse(render(a)), a) << c.expression;
  }
}

TEST(Assumptions, Clauses) {
  auto as = parse_assumptions("x>0, A>=0, norm2(x)>=1, y<=-1/2");
  ASSERT_EQ(as.size(), 4u);
  EXPECT_EQ(as[0].interval(), Interval::positive());
  EXPECT_EQ(as[1].interval(), Interval::nonneg());
  EXPECT_FALSE(as[2].on_variable());
  EXPECT_EQ(as[2].interval(), Interval(1.0, Interval::kInf, false, true));
  EXPECT_EQ(as[3].interval(), Interval(-Interval::kInf, -0.5, true, false));
  EXPECT_TRUE(parse_assumptions("").empty());
}

TEST(Assumptions, Malformed) {
  EXPECT_ANY_THROW(parse_assumptions("x >"));
  EXPECT_ANY_THROW(parse_assumptions("x ? 1"));
}
