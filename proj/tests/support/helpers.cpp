#include "support/helpers.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace convexcert::testing {
namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::map<std::string, std::string> rendered(const Dag& dag, const TemplateMatch& m) {
  std::map<std::string, std::string> out;
  out["template"] = std::string(template_name(m.id));
  for (const auto& [k, id] : m.bindings) out[k] = render_node(dag, id);
  return out;
}

}  // namespace

std::vector<CorpusItem> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<CorpusItem> items;
  std::string text;
  for (std::size_t n = 1; std::getline(in, text); ++n) {
    std::string t = trim(text);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string part; std::getline(ss, part, ';');) parts.push_back(trim(part));
    parts.resize(std::max<std::size_t>(parts.size(), 5));
    items.push_back(CorpusItem{n, Problem{parts[0], parts[1], parts[2], parts[3]}, parts[4]});
  }
  return items;
}

Prepared prep(const std::string& expr, const std::string& assume, const std::string& dims, const std::string& wrt) {
  return prepare(Problem{expr, assume, dims, wrt});
}

NodeId simplified(const Prepared& p, const std::string& text) {
  lang::Ast ast = lang::parse(text);
  SymbolTable t = p.symbols;
  for (const std::string& v : lang::free_variables(ast))
    if (!t.contains(v)) t.declare(v, Shape::scalar());
  NodeId raw = normalize_into(*p.dag.dag, infer_shapes(ast, t));
  Builder b(*p.dag.dag);
  return b.simplify(raw);
}

std::string canonical_text(const std::string& text, const std::string& dims) {
  lang::Ast ast = lang::parse(text);
  SymbolTable t = SymbolTable::from_dims(dims);
  for (const std::string& v : lang::free_variables(ast))
    if (!t.contains(v)) t.declare(v, Shape::scalar());
  NormalizedDag d = normalize(infer_shapes(ast, t));
  Builder b(*d.dag);
  return render_node(*d.dag, b.simplify(d.root));
}

MatrixAnalysis analyze_matrix(const std::string& text, const std::string& dims, const std::string& assume) {
  lang::Ast ast = lang::parse(text);
  SymbolTable t = SymbolTable::from_dims(dims);
  for (const std::string& v : lang::free_variables(ast))
    if (!t.contains(v)) t.declare(v, Shape::scalar());
  NormalizedDag d = normalize(infer_shapes(ast, t));
  Builder plain(*d.dag);
  DomainFacts facts = merge_facts(assumption_facts(plain, t, lang::parse_assumptions(assume)),
                                  harvest_domain_facts(plain, d.root));
  RangeHint hint = facts_hint(facts);
  Builder b(*d.dag, hint);
  NodeId h = b.simplify(d.root);
  Positivity pos(b, hint);
  MatrixAnalysis out;
  out.interval = pos.determine_interval(h);
  for (const PositivityStep& s : pos.steps())
    for (const TemplateMatch& m : s.matches) {
      out.matches.push_back(rendered(*d.dag, m));
      out.ids.push_back(m.id);
    }
  return out;
}

std::vector<std::map<std::string, std::string>> trace_matches(const Certificate& c) {
  std::vector<std::map<std::string, std::string>> out;
  for (const TraceEntry& e : c.trace) {
    // bindings are "k" for a single match, "1.k", "2.k", ... for several
    std::map<std::string, std::map<std::string, std::string>> by_prefix;
    for (const auto& [k, v] : e.bindings) {
      auto dot = k.find('.');
      if (dot == std::string::npos) by_prefix[""][k] = v;
      else by_prefix[k.substr(0, dot)][k.substr(dot + 1)] = v;
    }
    for (auto& [prefix, m] : by_prefix)
      if (m.count("template")) out.push_back(std::move(m));
  }
  return out;
}

double hessian_fd_error(const Prepared& p, int points, std::uint64_t seed) {
  NodeId h = hessian_node(p);
  const Dag& dag = *p.dag.dag;
  SampleConfig cfg;
  std::mt19937_64 rng(seed);
  double worst = 0;
  int done = 0;
  for (int attempt = 0; done < points && attempt < 50 * points; ++attempt) {
    Binding b = sample_feasible(p.symbols, p.assumptions, cfg, rng);
    Value exact;
    Eigen::MatrixXd fd;
    double f0;
    try {
      exact = evaluate(dag, h, b);
      f0 = std::fabs(evaluate_scalar(dag, p.dag.root, b));
      // Richardson extrapolation cancels the h^2 term, which matters for steep
      // functions such as exp(exp(x)^2)
      Eigen::MatrixXd coarse = finite_diff_hessian(dag, p.dag.root, p.wrt.name, b, 2e-4);
      fd = (4.0 * finite_diff_hessian(dag, p.dag.root, p.wrt.name, b, 1e-4) - coarse) / 3.0;
    } catch (const EvalError&) {
      continue;  // outside the domain, or too close to its edge for differences
    }
    if (!exact.allFinite() || !fd.allFinite()) continue;
    Eigen::MatrixXd e = exact;
    if (e.size() == 1) e.resize(1, 1);
    // second differences lose about eps*|f|/(h_i h_j) to rounding, which
    // dominates when one entry of a sum is huge. The extrapolation adds 5/3 of
    // that, and evaluating exp(k*x) amplifies rounding by about |k*x| <= 64.
    const Value& x = b.values.at(p.wrt.name);
    auto step = [&](Eigen::Index i) { return 1e-4 * (1.0 + std::fabs(x.data()[i])); };
    for (Eigen::Index i = 0; i < e.rows(); ++i)
      for (Eigen::Index j = 0; j < e.cols(); ++j) {
        double noise = 8192 * std::numeric_limits<double>::epsilon() * f0 / (step(i) * step(j));
        worst = std::max(worst, std::fabs(e(i, j) - fd(i, j)) / (1.0 + std::fabs(e(i, j)) + noise));
      }
    ++done;
  }
  if (done < points) return std::numeric_limits<double>::infinity();
  return worst;
}

}  // namespace convexcert::testing
