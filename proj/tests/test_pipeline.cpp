#include <gtest/gtest.h>

#include "json.hpp"
#include "support/helpers.hpp"

using namespace convexcert;
using namespace convexcert::testing;

TEST(Prepare, DefaultsAndParameters) {
  Prepared p = prep("a*x^2 + b");
  EXPECT_EQ(p.wrt.name, "x");
  EXPECT_EQ(p.symbols.at("a").role, SymbolRole::Parameter);
  EXPECT_EQ(p.symbols.at("x").role, SymbolRole::Variable);
  EXPECT_TRUE(p.symbols.at("a").shape.is_scalar());
}

TEST(Prepare, InputErrors) {
  EXPECT_THROW(prep("w^2"), InputError);                   // no x and no --wrt
  EXPECT_THROW(prep("x^2", "", "", "q"), InputError);      // unknown wrt
  EXPECT_THROW(prep("x +", ""), InputError);               // syntax
  EXPECT_THROW(prep("x + y", "", "x:n"), InputError);      // shapes
  EXPECT_THROW(prep("x", "x>1, x<0"), InputError);         // contradiction
  EXPECT_THROW(prep("x", "x >"), InputError);              // assumption syntax
  try {
    prep("exp(x) + * 2");
    FAIL();
  } catch (const InputError& e) {
    ASSERT_TRUE(e.position);
    EXPECT_EQ(*e.position, 9u);
  }
}

TEST(Certificate, JsonAndTextAgree) {
  for (const CorpusItem& item : load_corpus()) {
    Prepared p = prepare(item.problem);
    for (const Certificate& c : {certify_hessian(p), certify_dcp(p)}) {
      auto j = nlohmann::json::parse(c.to_json());
      EXPECT_EQ(j["verdict"], verdict_name(c.verdict));
      EXPECT_NE(c.to_text().find(std::string("verdict: ") +
                                 (c.verdict == Verdict::Unknown ? "unknown (not certified)"
                                                                : std::string(verdict_name(c.verdict)))),
                std::string::npos);
      ASSERT_TRUE(j["trace"].is_array());
      for (const auto& e : j["trace"]) {
        EXPECT_TRUE(e.contains("node") && e.contains("expr") && e.contains("value") && e.contains("rule"));
      }
      EXPECT_EQ(j.contains("hessian"), c.method == Method::Hessian);
      EXPECT_TRUE(j.contains("blocking_node") && j.contains("witness"));
      if (c.verdict == Verdict::Unknown) {
        EXPECT_FALSE(j["blocking_node"].is_null());
      }
    }
  }
}

TEST(Sampling, ProbesFindCubicWitness) {
  SampleConfig cfg;
  cfg.trials = 10;
  SamplingReport r = sample_hessian(prep("x^3"), cfg, true);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->point.at("x")[0], -1.0);
  EXPECT_NEAR(r.witness->eigenvalue, -6.0, 1e-12);
}

TEST(Sampling, NoWitnessForConvex) {
  SampleConfig cfg;
  cfg.trials = 50;
  SamplingReport r = sample_hessian(prep("log(sum(exp(x)))", "", "x:n"), cfg, true);
  EXPECT_FALSE(r.witness);
  EXPECT_GE(r.samples, 50u);
}

TEST(Sampling, DomainOfOperatorsIsRespected) {
  SampleConfig cfg;
  cfg.trials = 40;
  SamplingReport r = sample_hessian(prep("-log(x)"), cfg, false);
  EXPECT_EQ(r.samples, 40u);
  EXPECT_FALSE(r.witness);
}
