#include <gtest/gtest.h>

#include "support/fuzz.hpp"
#include "support/helpers.hpp"

using namespace convexcert;
using namespace convexcert::testing;

namespace {

Verdict verdict(const std::string& expr, const std::string& assume = "", const std::string& dims = "") {
  return certify_hessian(prep(expr, assume, dims)).verdict;
}

}  // namespace

TEST(Certify, CorpusIsConvexInLinearVisits) {
  for (const CorpusItem& item : load_corpus()) {
    CertifyStats st;
    Certificate c = certify_hessian(prepare(item.problem), &st);
    EXPECT_EQ(verdict_name(c.verdict), item.expected) << item.problem.expression << "\n" << c.to_text();
    EXPECT_EQ(st.visits, st.dag_nodes) << item.problem.expression;
  }
}

TEST(Certify, ConcaveAndUnknown) {
  EXPECT_EQ(verdict("log(x)"), Verdict::Concave);
  EXPECT_EQ(verdict("sqrt(x)"), Verdict::Concave);
  EXPECT_EQ(verdict("-log(sum(exp(x)))", "", "x:n"), Verdict::Concave);
  EXPECT_EQ(verdict("x^3"), Verdict::Unknown);
  EXPECT_EQ(verdict("sin(x)"), Verdict::Unknown);
  EXPECT_EQ(verdict("x^3", "x<0"), Verdict::Concave);
}

TEST(Certify, AssumptionsDecide) {
  EXPECT_EQ(verdict("x*log(x)", "x>0"), Verdict::Convex);
  EXPECT_EQ(verdict("x'*A*x", "A>=0", "x:n,A:n*n"), Verdict::Convex);
  EXPECT_EQ(verdict("x'*A*x", "", "x:n,A:n*n"), Verdict::Unknown);
  EXPECT_EQ(verdict("x'*A*x", "A<=0", "x:n,A:n*n"), Verdict::Concave);
}

TEST(Certify, UnknownTraceHasAnUnsignedNodeAndABlockingNode) {
  Certificate c = certify_hessian(prep("x^3"));
  ASSERT_EQ(c.verdict, Verdict::Unknown);
  ASSERT_TRUE(c.blocking_node.has_value());
  bool unsigned_seen = false;
  for (const TraceEntry& e : c.trace)
    if (e.node == *c.blocking_node) unsigned_seen = e.value != "psd" && e.value.find("inf)") != std::string::npos;
  EXPECT_TRUE(unsigned_seen) << c.to_text();
  EXPECT_NE(c.to_text().find("unknown (not certified)"), std::string::npos);
}

TEST(Certify, LogisticTrace) {
  Certificate c = certify_hessian(prep("log(1+exp(x))"));
  std::map<std::string, TraceEntry> at;
  for (const TraceEntry& e : c.trace) at[e.expr] = e;
  EXPECT_EQ(at["exp(x)"].value, "(0, inf)");
  EXPECT_EQ(at["1 + exp(x)"].value, "(1, inf)");
  EXPECT_EQ(at["exp(x)/(1 + exp(x))"].value, "[0, 1]");
  EXPECT_EQ(at["exp(x)/(1 + exp(x))"].rule, "ratio-bound");
  EXPECT_EQ(at["1 - exp(x)/(1 + exp(x))"].value, "[0, 1]");
  EXPECT_EQ(c.trace.back().value, "[0, 1]");
}

TEST(Certify, MatrixTagsInTrace) {
  Certificate c = certify_hessian(prep("log(sum(exp(x)))", "", "x:n"));
  EXPECT_EQ(c.trace.back().value, "psd");
  EXPECT_EQ(c.trace.back().rule.rfind("template:", 0), 0u);
  EXPECT_EQ(interval_tag(Shape::matrix("n", "n"), Interval::nonpos()), "nsd");
  EXPECT_EQ(interval_tag(Shape::matrix("n", "n"), Interval::point(0.0)), "zero");
  EXPECT_EQ(interval_tag(Shape::matrix("n", "n"), Interval::entire()), "indefinite");
}

TEST(Facts, Contradictions) {
  EXPECT_THROW(prep("x", "x>1, x<0"), InputError);
  Prepared p = prep("x", "x>0, x<=2");
  ASSERT_EQ(p.facts.size(), 1u);
  EXPECT_EQ(p.facts.begin()->second, Interval(0, 2, true, false));
}

TEST(Facts, DomainFactsFromOperators) {
  Prepared p = prep("-log(x) + sqrt(1 - x)");
  Builder b(*p.dag.dag);
  DomainFacts f = harvest_domain_facts(b, p.dag.root);
  NodeId x = *p.dag.dag->find_symbol("x");
  ASSERT_TRUE(f.count(x));
  EXPECT_TRUE(f.at(x).is_positive());
}

TEST(SignDecider, Laurent) {
  using T = std::vector<std::pair<Rational, Rational>>;
  // (x - 1)^2
  EXPECT_TRUE(laurent_nonneg(T{{1, 2}, {-2, 1}, {1, 0}}, Interval::entire()));
  EXPECT_FALSE(laurent_nonneg(T{{1, 2}, {-1, 0}}, Interval::entire()));
  EXPECT_TRUE(laurent_nonneg(T{{1, 2}, {-1, 0}}, Interval(1, Interval::kInf, false, true)));
  // (x - 1)^2 (x + 1) = x^3 - x^2 - x + 1: nonneg on x >= -1, not on x >= -2
  EXPECT_TRUE(laurent_nonneg(T{{1, 3}, {-1, 2}, {-1, 1}, {1, 0}}, Interval(-1, Interval::kInf, false, true)));
  EXPECT_FALSE(laurent_nonneg(T{{1, 3}, {-1, 2}, {-1, 1}, {1, 0}}, Interval(-2, Interval::kInf, false, true)));
  // (x - 1)^3 changes sign at its triple root
  EXPECT_FALSE(laurent_nonneg(T{{1, 3}, {-3, 2}, {3, 1}, {-1, 0}}, Interval::entire()));
  // x + 1/x - 2 on x > 0
  EXPECT_TRUE(laurent_nonneg(T{{1, 1}, {1, -1}, {-2, 0}}, Interval::positive()));
  // x^(1/2) - 1 on x >= 1
  EXPECT_TRUE(laurent_nonneg(T{{1, Rational(1, 2)}, {-1, 0}}, Interval(1, Interval::kInf, false, true)));
  EXPECT_FALSE(laurent_nonneg(T{{1, Rational(1, 2)}, {-1, 0}}, Interval::nonneg()));
}

TEST(SignDecider, ExpDifference) {
  Prepared p = prep("exp(x) - exp(2*x)", "x<=0");
  Builder b(*p.dag.dag, facts_hint(p.facts));
  NodeId s = b.simplify(p.dag.root);
  Positivity pos(b, facts_hint(p.facts));
  EXPECT_TRUE(pos.determine_interval(s).is_nonneg());
}

TEST(Positivity, RatioBound) {
  Prepared p = prep("exp(x)/(1 + exp(x))");
  Builder b(*p.dag.dag);
  NodeId s = b.simplify(p.dag.root);
  Positivity pos(b, {});
  EXPECT_EQ(pos.determine_interval(s), Interval(0, 1));
  const Node& n = p.dag.node(s);
  ASSERT_EQ(n.op, Op::Div);
  EXPECT_TRUE(pos.ratio_bound(n.kids[0], n.kids[1]).has_value());
  EXPECT_FALSE(pos.ratio_bound(n.kids[1], n.kids[0]).has_value());
}

TEST(Positivity, MemoizedVisits) {
  Prepared p = prep("sum(exp(x))*log(1+sum(exp(x)))", "", "x:n");
  CertifyStats st;
  certify_hessian(p, &st);
  EXPECT_EQ(st.visits, st.dag_nodes);
  EXPECT_GT(st.dag_nodes, 10u);
}

// Every convex certificate on fuzzed input survives numeric sampling.
TEST(PositivityProperty, ConvexCertificatesAreSound) {
  std::mt19937_64 rng(41);
  SampleConfig cfg;
  cfg.trials = 30;
  int convex = 0;
  for (int i = 0; i < 150; ++i) {
    FuzzCase c = fuzz_expression(rng);
    Prepared p = prep(c.expression, "", c.dims);
    Certificate cert;
    try {
      cert = certify_hessian(p);
    } catch (const InputError&) {
      continue;
    }
    if (cert.verdict != Verdict::Convex && cert.verdict != Verdict::Concave) continue;
    ++convex;
    Prepared q = cert.verdict == Verdict::Convex ? p : prep("-(" + c.expression + ")", "", c.dims);
    SamplingReport r = sample_hessian(q, cfg, false);
    EXPECT_FALSE(r.witness.has_value()) << c.expression;
  }
  EXPECT_GT(convex, 40);
}
