#include <gtest/gtest.h>

#include "support/fuzz.hpp"
#include "support/helpers.hpp"

using namespace convexcert;
using namespace convexcert::testing;

namespace {

Verdict dcp(const std::string& expr, const std::string& assume = "", const std::string& dims = "",
            bool extended = false, const std::string& wrt = "") {
  return certify_dcp(prep(expr, assume, dims, wrt), DcpOptions{extended}).verdict;
}

Curvature root_label(const std::string& expr, const std::string& assume, const std::string& dims) {
  Prepared p = prep(expr, assume, dims);
  return dcp_label(p.dag, p.dag.root, p.wrt.name, p.facts);
}

}  // namespace

TEST(Lattice, JoinAndNegate) {
  EXPECT_EQ(join(Curvature::Constant, Curvature::Affine), Curvature::Affine);
  EXPECT_EQ(join(Curvature::Affine, Curvature::Convex), Curvature::Convex);
  EXPECT_EQ(join(Curvature::Convex, Curvature::Concave), Curvature::Unknown);
  EXPECT_EQ(join(Curvature::Concave, Curvature::Concave), Curvature::Concave);
  EXPECT_EQ(negate(Curvature::Convex), Curvature::Concave);
  EXPECT_EQ(negate(Curvature::Affine), Curvature::Affine);
  EXPECT_TRUE(is_convex(Curvature::Affine));
  EXPECT_TRUE(is_concave(Curvature::Constant));
  EXPECT_FALSE(is_concave(Curvature::Convex));
}

TEST(Compose, Rules) {
  // convex increasing of convex, convex decreasing of concave
  EXPECT_EQ(compose(Curvature::Convex, Monotonicity::Increasing, Curvature::Convex), Curvature::Convex);
  EXPECT_EQ(compose(Curvature::Convex, Monotonicity::Decreasing, Curvature::Concave), Curvature::Convex);
  EXPECT_EQ(compose(Curvature::Convex, Monotonicity::None, Curvature::Convex), Curvature::Unknown);
  EXPECT_EQ(compose(Curvature::Concave, Monotonicity::Increasing, Curvature::Concave), Curvature::Concave);
  EXPECT_EQ(compose(Curvature::Concave, Monotonicity::Increasing, Curvature::Convex), Curvature::Unknown);
  EXPECT_EQ(compose(Curvature::Affine, Monotonicity::Increasing, Curvature::Affine), Curvature::Affine);
  EXPECT_EQ(compose(Curvature::Convex, Monotonicity::None, Curvature::Affine), Curvature::Convex);
}

TEST(Atoms, Table) {
  ASSERT_NE(find_atom("exp"), nullptr);
  EXPECT_EQ(find_atom("exp")->curvature, Curvature::Convex);
  EXPECT_TRUE(find_atom("exp")->range.is_positive());
  EXPECT_EQ(find_atom("log")->curvature, Curvature::Concave);
  EXPECT_EQ(find_atom("sum")->curvature, Curvature::Affine);
  EXPECT_EQ(find_atom("logistic"), nullptr);
  EXPECT_EQ(find_atom("log_sum_exp"), nullptr);
  auto sq = power_atom(Rational(2), Interval::point(2.0), Interval::entire());
  ASSERT_TRUE(sq);
  EXPECT_EQ(sq->curvature, Curvature::Convex);
  EXPECT_EQ(sq->monotonicity(Interval::nonneg()), Monotonicity::Increasing);
  EXPECT_EQ(sq->monotonicity(Interval::nonpos()), Monotonicity::Decreasing);
  EXPECT_EQ(sq->monotonicity(Interval::entire()), Monotonicity::None);
  EXPECT_FALSE(power_atom(Rational(3), Interval::point(3.0), Interval::entire()));
}

TEST(Dcp, Examples) {
  EXPECT_EQ(dcp("sum(exp(x))", "", "x:n"), Verdict::Convex);
  EXPECT_EQ(dcp("-log(x)", "x>0"), Verdict::Convex);
  EXPECT_EQ(dcp("log(1+exp(x))"), Verdict::Unknown);
  EXPECT_EQ(dcp("x*log(x)", "x>0"), Verdict::Unknown);
  EXPECT_EQ(dcp("(X*w-y)'*(X*w-y)", "", "X:m*n,w:n,y:m", false, "w"), Verdict::Unknown);
  EXPECT_EQ(dcp("sum(X*w - y)", "", "X:m*n,w:n,y:m", false, "w"), Verdict::Affine);
  EXPECT_EQ(dcp("log(x)"), Verdict::Concave);
  EXPECT_EQ(dcp("x^3", "x>0"), Verdict::Convex);
  EXPECT_EQ(dcp("x^3"), Verdict::Unknown);
  EXPECT_EQ(dcp("exp(x)^2"), Verdict::Convex);
  EXPECT_EQ(dcp("1/x", "x>0"), Verdict::Convex);
  EXPECT_EQ(dcp("-2*sqrt(x) + exp(x)"), Verdict::Convex);
  EXPECT_EQ(dcp("c*exp(x)"), Verdict::Unknown);  // sign of c unknown
  EXPECT_EQ(dcp("c*exp(x)", "c>=0"), Verdict::Convex);
  EXPECT_EQ(dcp("c*exp(x)", "c<=0"), Verdict::Concave);
}

TEST(Dcp, OlsTraceLabelsResidualAffine) {
  Certificate c = certify_dcp(prep("(X*w-y)'*(X*w-y)", "", "X:m*n,w:n,y:m", "w"));
  std::map<std::string, std::string> at;
  for (const TraceEntry& e : c.trace) at[e.expr] = e.value;
  EXPECT_EQ(at["X*w - y"], "affine");
  EXPECT_EQ(at["X*w"], "affine");
  EXPECT_EQ(at["y"], "constant");
  ASSERT_TRUE(c.blocking_node);
  EXPECT_EQ(c.trace.back().rule, "product");
}

TEST(Dcp, ExtendedAtoms) {
  EXPECT_EQ(dcp("log(1+exp(x))", "", "", true), Verdict::Convex);
  EXPECT_EQ(dcp("log(sum(exp(x)))", "", "x:n", true), Verdict::Convex);
  EXPECT_EQ(dcp("x*log(x)", "x>0", "", true), Verdict::Convex);
  EXPECT_EQ(dcp("(X*w-y)'*(X*w-y)", "", "X:m*n,w:n,y:m", true, "w"), Verdict::Convex);
  EXPECT_EQ(dcp("x'*A*x", "A>=0", "x:n,A:n*n", true), Verdict::Convex);
  EXPECT_EQ(dcp("x'*A*x", "", "x:n,A:n*n", true), Verdict::Unknown);
  // neg_entr is not monotone, so composing it with cosh stays outside the rules
  EXPECT_EQ(dcp("cosh(x)*log(cosh(x))", "", "", true), Verdict::Unknown);
}

TEST(DcpProperty, SignFlipDuality) {
  auto mirror = [](Curvature c) { return negate(c); };
  std::vector<std::tuple<std::string, std::string, std::string>> cases;
  for (const CorpusItem& item : load_corpus())
    cases.emplace_back(item.problem.expression, item.problem.assumptions, item.problem.dims);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    FuzzCase c = fuzz_expression(rng);
    cases.emplace_back(c.expression, "", c.dims);
  }
  for (const auto& [e, a, d] : cases) {
    bool has_wrt_x = d.empty() || d.find("x:") != std::string::npos;
    if (!has_wrt_x) continue;
    Curvature pos, neg;
    try {
      pos = root_label(e, a, d);
      neg = root_label("-(" + e + ")", a, d);
    } catch (const InputError&) {
      continue;
    }
    EXPECT_EQ(neg, mirror(pos)) << e;
  }
}

TEST(DcpProperty, ContainedInHessianMethod) {
  std::mt19937_64 rng(6);
  int dcp_convex = 0;
  for (int i = 0; i < 200; ++i) {
    FuzzCase c = fuzz_expression(rng);
    Prepared p = prep(c.expression, "", c.dims);
    Verdict d = certify_dcp(p).verdict;
    if (d != Verdict::Convex && d != Verdict::Affine) continue;
    Verdict h;
    try {
      h = certify_hessian(p).verdict;
    } catch (const InputError&) {
      continue;
    }
    ++dcp_convex;
    EXPECT_EQ(h, Verdict::Convex) << c.expression;
  }
  EXPECT_GT(dcp_convex, 30);
}
