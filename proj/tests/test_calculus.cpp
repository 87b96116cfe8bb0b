#include <gtest/gtest.h>

#include <cmath>

#include "support/fuzz.hpp"
#include "support/helpers.hpp"

using namespace convexcert;
using namespace convexcert::testing;

namespace {

std::string hess(const std::string& expr, const std::string& assume = "", const std::string& dims = "",
                 const std::string& wrt = "") {
  Prepared p = prep(expr, assume, dims, wrt);
  return render_node(*p.dag.dag, hessian_node(p));
}

double gradient_fd_error(const Prepared& p, int points) {
  NormalizedDag g = differentiate(p.dag, p.wrt);
  SampleConfig cfg;
  std::mt19937_64 rng(3);
  double worst = 0;
  for (int i = 0, done = 0; done < points && i < 50 * points; ++i) {
    Binding b = sample_feasible(p.symbols, p.assumptions, cfg, rng);
    Value exact;
    Eigen::VectorXd fd;
    try {
      evaluate_scalar(*p.dag.dag, p.dag.root, b);
      exact = evaluate(*g.dag, g.root, b);
      fd = finite_diff_gradient(*p.dag.dag, p.dag.root, p.wrt.name, b);
    } catch (const EvalError&) {
      continue;
    }
    for (Eigen::Index k = 0; k < fd.size(); ++k)
      worst = std::max(worst, std::fabs(exact(k) - fd(k)) / (1 + std::fabs(exact(k))));
    ++done;
  }
  return worst;
}

}  // namespace

TEST(Hessian, ClosedForms) {
  EXPECT_EQ(hess("x*log(x)", "x>0"), "1/x");
  EXPECT_EQ(hess("x^2"), "2");
  EXPECT_EQ(hess("exp(x)"), "exp(x)");
  EXPECT_EQ(hess("sum(x)", "", "x:n"), "diag(vector(0))");  // the n x n zero matrix
  Prepared ols = prep("(X*w-y)'*(X*w-y)", "", "X:m*n,w:n,y:m", "w");
  EXPECT_EQ(hessian_node(ols), simplified(ols, "2*X'*X"));
}

TEST(Hessian, PowerRule) {
  // p(p-1)x^(p-2) for a spread of exponents
  const std::vector<std::pair<std::string, Rational>> cases{
      {"4", Rational(4)}, {"3", Rational(3)}, {"-1", Rational(-1)},
      {"1/2", Rational(1, 2)}, {"5/2", Rational(5, 2)}, {"-3/2", Rational(-3, 2)}};
  for (const auto& [text, e] : cases) {
    Prepared pr = prep("x^(" + text + ")", "x>0");
    std::string want = "(" + (e * (e - Rational(1))).str() + ")*x^(" + (e - Rational(2)).str() + ")";
    EXPECT_EQ(hessian_node(pr), simplified(pr, want)) << text;
  }
}

TEST(Hessian, MatchesFiniteDifferencesOnCorpus) {
  for (const CorpusItem& item : load_corpus()) {
    Prepared p = prepare(item.problem);
    EXPECT_LE(hessian_fd_error(p, 5, 1), 1e-3) << item.problem.expression;
  }
}

TEST(Gradient, MatchesFiniteDifferencesOnCorpus) {
  for (const CorpusItem& item : load_corpus()) {
    Prepared p = prepare(item.problem);
    EXPECT_LE(gradient_fd_error(p, 5), 1e-5) << item.problem.expression;
  }
}

TEST(Hessian, MatchesFiniteDifferencesOnFuzz) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int i = 0; i < 150; ++i) {
    FuzzCase c = fuzz_expression(rng);
    Prepared p = prep(c.expression, "", c.dims);
    double err;
    try {
      err = hessian_fd_error(p, 3, 2);
    } catch (const EmptyDomain&) {
      continue;
    }
    if (!std::isfinite(err)) continue;  // no interior sample found
    EXPECT_LE(err, 2e-3) << c.expression;
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Hessian, IsSymmetricStructure) {
  Prepared p = prep("log(sum(exp(x)))", "", "x:n");
  const Node& h = p.dag.node(hessian_node(p));
  EXPECT_TRUE(h.shape.is_matrix());
  EXPECT_TRUE(h.shape.is_square());
}

TEST(Differentiator, Errors) {
  Prepared p = prep("abs(x)");
  EXPECT_THROW(hessian_node(p), NotDifferentiable);
  EXPECT_THROW(prep("x", "", "x:n"), InputError);  // vector objective
}

TEST(Differentiator, CompositionHelper) {
  Dag dag;
  Builder b(dag);
  NodeId x = b.symbol("x", Shape::scalar());
  NodeId h = hessian_of_composition(b, FnKind::Exp, b.pow(x, Rational(2)), Variable{"x", Shape::scalar()});
  // (2x)^2 exp(x^2) + 2 exp(x^2)
  Binding bind;
  bind.values["x"] = Value::Constant(1, 1, 0.5);
  double want = (1.0 + 2.0) * std::exp(0.25);
  EXPECT_NEAR(evaluate_scalar(dag, h, bind), want, 1e-12);
}
