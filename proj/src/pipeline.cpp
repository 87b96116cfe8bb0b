#include "convexcert/pipeline.hpp"

#include <cmath>

namespace convexcert {

Prepared prepare(const Problem& problem) {
  Prepared p;
  p.problem = problem;
  try {
    lang::Ast ast = lang::parse(problem.expression);
    p.symbols = SymbolTable::from_dims(problem.dims);
    std::vector<std::string> names = lang::free_variables(ast);
    for (const std::string& v : names)
      if (!p.symbols.contains(v)) p.symbols.declare(v, Shape::scalar());
    std::string wrt = problem.wrt.empty() ? "x" : problem.wrt;
    if (!p.symbols.contains(wrt)) {
      if (problem.wrt.empty()) throw InputError("no variable named x; pass --wrt");
      throw InputError("--wrt names '" + wrt + "', which does not occur in the expression or --dims");
    }
    p.symbols.set_variable(wrt);
    p.wrt = Variable{wrt, p.symbols.at(wrt).shape};
    p.dag = normalize(infer_shapes(ast, p.symbols));
    if (!p.dag.root_node().shape.is_scalar())
      throw InputError("objective must be scalar, got " + p.dag.root_node().shape.str());
    try {
      p.assumptions = lang::parse_assumptions(problem.assumptions);
    } catch (const lang::ParseError& e) {
      throw InputError(std::string("in assumptions: ") + e.what());
    } catch (const lang::LexError& e) {
      throw InputError(std::string("in assumptions: ") + e.what());
    }
    Builder b(*p.dag.dag);
    p.facts = assumption_facts(b, p.symbols, p.assumptions);
  } catch (const lang::ParseError& e) {
    throw InputError(e.what(), e.position);
  } catch (const lang::LexError& e) {
    throw InputError(e.what(), e.offset);
  } catch (const ShapeError& e) {
    throw InputError(e.what());
  } catch (const UnknownSymbol& e) {
    throw InputError(e.what());
  } catch (const EmptyDomain& e) {
    throw InputError(std::string("contradictory assumptions: ") + e.what());
  }
  return p;
}

Certificate certify_hessian(const Prepared& p, CertifyStats* stats) {
  try {
    return certify(p.dag, p.wrt, p.facts, stats);
  } catch (const NotDifferentiable& e) {
    throw InputError(e.what());
  } catch (const EmptyDomain& e) {
    throw InputError(std::string("empty domain: ") + e.what());
  }
}

Certificate certify_dcp(const Prepared& p, DcpOptions options) {
  return dcp_certify(p.dag, p.wrt.name, p.facts, options);
}

NodeId hessian_node(const Prepared& p) {
  Builder plain(*p.dag.dag);
  DomainFacts facts = merge_facts(p.facts, harvest_domain_facts(plain, p.dag.root));
  return derivatives(p.dag, p.wrt, facts_hint(facts)).hessian;
}

namespace {

// Sign restrictions the operators place directly on symbols (log(x) needs
// x > 0), as clauses the sampler understands.
std::vector<lang::Assumption> domain_clauses(const Prepared& p) {
  std::vector<lang::Assumption> out = p.assumptions;
  Builder b(*p.dag.dag);
  DomainFacts facts;
  try {
    facts = harvest_domain_facts(b, p.dag.root);
  } catch (const EmptyDomain&) {
    return out;
  }
  for (const auto& [id, iv] : facts) {
    const Node& n = (*p.dag.dag)[id];
    if (n.op != Op::Symbol || n.shape.is_matrix()) continue;
    auto clause = [&](lang::Relation r, const Rational& bound) {
      lang::Assumption a;
      a.subject = lang::Ast::variable(n.name);
      a.relation = r;
      a.bound = bound;
      out.push_back(std::move(a));
    };
    // non-integer endpoints are rounded inward to a multiple of 1/1024, which
    // keeps the sampled region inside the domain
    constexpr double kGrid = 1024.0;
    if (std::isfinite(iv.lo) && std::abs(iv.lo) < 1e9) {
      double g = std::ceil(iv.lo * kGrid);
      bool exact = g == iv.lo * kGrid;
      clause(iv.lo_open || !exact ? lang::Relation::Greater : lang::Relation::GreaterEq,
             Rational(static_cast<std::int64_t>(g), static_cast<std::int64_t>(kGrid)));
    }
    if (std::isfinite(iv.hi) && std::abs(iv.hi) < 1e9) {
      double g = std::floor(iv.hi * kGrid);
      bool exact = g == iv.hi * kGrid;
      clause(iv.hi_open || !exact ? lang::Relation::Less : lang::Relation::LessEq,
             Rational(static_cast<std::int64_t>(g), static_cast<std::int64_t>(kGrid)));
    }
  }
  return out;
}

}  // namespace

SamplingReport sample_hessian(const Prepared& p, const SampleConfig& config, bool probes, double tol) {
  SamplingReport r;
  NodeId h = hessian_node(p);
  const Dag& dag = *p.dag.dag;
  std::vector<lang::Assumption> clauses = domain_clauses(p);
  std::mt19937_64 rng(config.seed);

  auto visit = [&](const Binding& b) {
    if (!satisfies(p.symbols, clauses, b)) return;
    double eig, scale;
    try {
      if (!std::isfinite(evaluate_scalar(dag, p.dag.root, b))) return;
      Value hv = evaluate(dag, h, b);
      if (!hv.allFinite()) return;
      scale = hv.cwiseAbs().maxCoeff();
      eig = min_quadratic_form(dag, h, b);
    } catch (const EvalError&) {
      return;
    }
    ++r.samples;
    r.scale = std::max(r.scale, scale);
    r.min_eigenvalue = std::min(r.min_eigenvalue, eig);
    if (!r.witness && eig < -tol * (1.0 + scale)) {
      Witness w;
      w.eigenvalue = eig;
      for (const auto& [name, v] : b.values) w.point[name] = std::vector<double>(v.data(), v.data() + v.size());
      r.witness = std::move(w);
    }
  };

  if (probes) {
    for (double probe : {-1.0, 1.0, -2.0, 2.0, -0.5, 0.5, -3.0, 3.0}) {
      Binding b;
      try {
        b = sample_feasible(p.symbols, p.assumptions, config, rng);
      } catch (const EmptyDomain&) {
        break;
      }
      b.values[p.wrt.name].setConstant(probe);
      visit(b);
      if (r.witness) return r;
    }
  }
  for (int t = 0; t < config.trials; ++t) {
    Binding b;
    try {
      b = sample_feasible(p.symbols, clauses, config, rng);
    } catch (const EmptyDomain&) {
      break;
    }
    visit(b);
  }
  return r;
}

}  // namespace convexcert
