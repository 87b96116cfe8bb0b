#include "convexcert/positivity.hpp"

#include <algorithm>

namespace convexcert {

DomainFacts merge_facts(DomainFacts a, const DomainFacts& b) {
  for (const auto& [id, iv] : b) {
    auto it = a.find(id);
    if (it == a.end()) a.emplace(id, iv);
    else it->second = it->second.intersect(iv);
  }
  return a;
}

DomainFacts assumption_facts(Builder& b, const SymbolTable& symbols, const std::vector<lang::Assumption>& clauses) {
  DomainFacts facts;
  for (const lang::Assumption& c : clauses) {
    ShapedExpr tree = infer_shapes(c.subject, symbols);
    NodeId id = b.simplify(normalize_into(b.dag(), tree));
    Interval iv = c.interval();
    auto it = facts.find(id);
    if (it == facts.end()) {
      facts.emplace(id, iv);
    } else {
      try {
        it->second = it->second.intersect(iv);
      } catch (const EmptyDomain&) {
        throw EmptyDomain("contradictory assumptions on " + lang::render(c.subject));
      }
    }
  }
  return facts;
}

Interval leaf_interval(const Dag& dag, NodeId leaf, const RangeHint& facts) {
  const Node& n = dag[leaf];
  if (n.op != Op::Symbol) return combine_node(dag, leaf, {});
  if (facts)
    if (auto f = facts(leaf)) return *f;
  return Interval::entire();
}

std::string interval_tag(const Shape& shape, const Interval& i) {
  if (!shape.is_matrix() || shape.is_row()) return i.str();
  if (i.is_nonneg() && i.is_nonpos()) return "zero";
  if (i.is_nonneg()) return "psd";
  if (i.is_nonpos()) return "nsd";
  return "indefinite";
}

namespace {

bool signed_interval(const Interval& i) { return i.is_nonneg() || i.is_nonpos(); }

bool square_matrix(const Shape& s) { return s.is_matrix() && s.is_square(); }

std::string combine_rule(const Node& n) {
  const bool matrix = square_matrix(n.shape);
  switch (n.op) {
    case Op::Const:
    case Op::Ones:
    case Op::Zero: return "constant";
    case Op::Mul:
    case Op::Div: return matrix ? "scaling" : "interval";
    case Op::Add: return matrix ? "psd-sum" : "interval";
    case Op::Fn: return "function-range";
    case Op::Pow: return "power";
    default: return "interval";
  }
}

}  // namespace

Positivity::Positivity(Builder& b, RangeHint facts) : b_(b), facts_(std::move(facts)) {}

IntervalFn Positivity::iv() {
  return [this](NodeId id) { return interval_of(id); };
}

const PositivityStep* Positivity::step(NodeId v) const {
  auto it = step_index_.find(v);
  return it == step_index_.end() ? nullptr : &steps_[it->second];
}

Interval Positivity::finish(NodeId v, Interval r) {
  if (facts_) {
    if (auto f = facts_(v)) {
      try {
        r = r.intersect(*f);
      } catch (const EmptyDomain&) {
        throw EmptyDomain("empty domain at " + render_node(b_.dag(), v));
      }
    }
  }
  return r;
}

std::optional<Interval> Positivity::ratio_bound(NodeId num, NodeId den) {
  const Shape sn = b_.dag()[num].shape;
  const Shape sd = b_.dag()[den].shape;
  if (!(sn == sd) || sn.is_matrix()) return std::nullopt;
  if (!interval_of(num).is_nonneg() || !interval_of(den).is_positive()) return std::nullopt;
  NodeId gap = b_.sub(den, num);
  if (!interval_of(gap).is_nonneg()) return std::nullopt;
  return Interval(0.0, 1.0);
}

Interval Positivity::interval_of(NodeId v) {
  if (auto it = memo_.find(v); it != memo_.end()) return it->second;
  return aux(v);
}

// Same rules as determine_interval minus the bookkeeping, for helper nodes.
Interval Positivity::aux(NodeId v) {
  if (auto it = aux_memo_.find(v); it != aux_memo_.end()) return it->second;
  const Node n = b_.dag()[v];
  std::vector<Interval> kids;
  for (NodeId k : n.kids) kids.push_back(interval_of(k));
  Interval r;
  if (n.op == Op::Symbol) {
    r = leaf_interval(b_.dag(), v, facts_);
  } else {
    std::optional<Interval> rb;
    if (n.op == Op::Div) rb = ratio_bound(n.kids[0], n.kids[1]);
    r = rb ? *rb : combine_node(b_.dag(), v, kids);
    if (!signed_interval(r) && square_matrix(n.shape)) {
      if (auto m = match_sandwich(b_, v, iv())) r = m->negated ? Interval::nonpos() : Interval::nonneg();
    } else if (!signed_interval(r) && n.op == Op::Add) {
      if (auto s = decide_sign(b_, v, iv())) r = *s;
    }
  }
  r = finish(v, r);
  aux_memo_[v] = r;
  return r;
}

std::optional<std::pair<Interval, std::vector<TemplateMatch>>> Positivity::analyze_matrix_sum(NodeId v) {
  std::vector<ScaledTerm> terms = expand_terms(b_, v);
  auto term_sign = [&](const ScaledTerm& t) {
    return (interval_of(t.scale) * interval_of(t.tensor)).sign_only();
  };
  auto is_outer = [&](NodeId t) {
    const Node& n = b_.dag()[t];
    return n.op == Op::Outer && n.kids[0] == n.kids[1];
  };
  // psd when flip is false, nsd when true
  auto attempt = [&](bool flip) -> std::optional<std::vector<TemplateMatch>> {
    std::vector<TemplateMatch> matches;
    std::vector<std::size_t> open_outers;
    std::vector<bool> diag_free(terms.size(), false);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      Interval s = term_sign(terms[i]);
      if (flip) s = -s;
      if (s.is_nonneg()) {
        diag_free[i] = b_.dag()[terms[i].tensor].op == Op::Diag;
        continue;
      }
      if (!is_outer(terms[i].tensor)) return std::nullopt;
      open_outers.push_back(i);
    }
    auto scale = [&](std::size_t i) { return flip ? b_.neg(terms[i].scale) : terms[i].scale; };
    for (std::size_t o : open_outers) {
      NodeId u = b_.dag()[terms[o].tensor].kids[0];
      NodeId beta = b_.neg(scale(o));
      bool done = false;
      for (std::size_t d = 0; d < terms.size() && !done; ++d) {
        if (!diag_free[d]) continue;
        NodeId vec = b_.dag()[terms[d].tensor].kids[0];
        if (auto m = match_variance_pair(b_, scale(d), vec, beta, u, iv())) {
          if (flip) {
            m->prefactor = b_.neg(m->prefactor ? *m->prefactor : b_.constant(1));
            m->negated = true;
          }
          matches.push_back(*m);
          diag_free[d] = false;
          done = true;
        }
      }
      if (!done) {
        std::vector<NodeId> parts;
        for (std::size_t d = 0; d < terms.size(); ++d)
          if (diag_free[d]) parts.push_back(b_.mul(scale(d), b_.dag()[terms[d].tensor].kids[0]));
        if (parts.empty()) return std::nullopt;
        auto m = match_variance_pair(b_, b_.constant(1), b_.add(parts), beta, u, iv());
        if (!m) return std::nullopt;
        if (flip) {
          m->prefactor = b_.constant(-1);
          m->negated = true;
        }
        matches.push_back(*m);
        std::fill(diag_free.begin(), diag_free.end(), false);
      }
    }
    return matches;
  };
  if (auto m = attempt(false)) return std::make_pair(Interval::nonneg(), *m);
  if (auto m = attempt(true)) return std::make_pair(Interval::nonpos(), *m);
  return std::nullopt;
}

Interval Positivity::determine_interval(NodeId v) {
  if (auto it = memo_.find(v); it != memo_.end()) return it->second;
  const Node n = b_.dag()[v];
  std::vector<Interval> kids;
  kids.reserve(n.kids.size());
  for (NodeId k : n.kids) kids.push_back(determine_interval(k));
  ++visits_;

  PositivityStep st;
  st.node = v;
  Interval r;
  if (n.op == Op::Symbol) {
    r = leaf_interval(b_.dag(), v, facts_);
    st.rule = facts_ && facts_(v) ? "assumption" : "leaf";
  } else {
    std::optional<Interval> rb;
    if (n.op == Op::Div) rb = ratio_bound(n.kids[0], n.kids[1]);
    if (rb) {
      r = *rb;
      st.rule = "ratio-bound";
    } else {
      r = combine_node(b_.dag(), v, kids);
      st.rule = combine_rule(n);
    }
    if (!signed_interval(r) && square_matrix(n.shape)) {
      if (auto m = match_template(b_, v, iv())) {
        r = m->negated ? Interval::nonpos() : Interval::nonneg();
        st.rule = "template:" + std::string(template_name(m->id));
        st.matches.push_back(*m);
      } else if (n.op == Op::Add || n.op == Op::Mul || n.op == Op::Div) {
        if (auto a = analyze_matrix_sum(v)) {
          r = a->first;
          st.rule = "psd-sum+template";
          st.matches = std::move(a->second);
        }
      }
    } else if (!signed_interval(r) && n.op == Op::Add) {
      if (auto s = decide_sign(b_, v, iv())) {
        r = *s;
        st.rule = "sign-decider";
      }
    }
  }
  r = finish(v, r);
  st.interval = r;
  memo_[v] = r;
  step_index_[v] = steps_.size();
  steps_.push_back(std::move(st));
  return r;
}

namespace {

// Deepest node on an unsigned path from the root: its own interval is
// unsigned while every non-leaf child is signed.
std::optional<NodeId> blocking_node(const Dag& dag, const Positivity& p, NodeId root) {
  auto unsigned_at = [&](NodeId id) {
    const PositivityStep* s = p.step(id);
    return s && !signed_interval(s->interval);
  };
  if (!unsigned_at(root)) return std::nullopt;
  NodeId cur = root;
  for (;;) {
    std::optional<NodeId> next;
    for (NodeId k : dag[cur].kids)
      if (!dag[k].kids.empty() && unsigned_at(k)) next = k;
    if (!next) return cur;
    cur = *next;
  }
}

}  // namespace

Certificate certify(const NormalizedDag& dag, const Variable& wrt, const DomainFacts& assumptions,
                    CertifyStats* stats) {
  Builder plain(*dag.dag);
  DomainFacts facts = merge_facts(assumptions, harvest_domain_facts(plain, dag.root));
  RangeHint hint = facts_hint(facts);
  DerivativeResult d = derivatives(dag, wrt, hint);
  Builder b(*dag.dag, hint);
  const std::size_t nodes = dag.dag->reachable(d.hessian).size();
  Positivity p(b, hint);
  Interval root = p.determine_interval(d.hessian);

  Certificate c;
  c.method = Method::Hessian;
  c.expression = render_node(*dag.dag, dag.root);
  c.wrt = wrt.name;
  c.hessian_text = render_node(*dag.dag, d.hessian);
  if (root.is_nonneg()) c.verdict = Verdict::Convex;
  else if (root.is_nonpos()) c.verdict = Verdict::Concave;
  else c.verdict = Verdict::Unknown;
  for (const PositivityStep& s : p.steps()) {
    TraceEntry e;
    e.node = s.node;
    e.expr = render_node(*dag.dag, s.node);
    e.value = interval_tag((*dag.dag)[s.node].shape, s.interval);
    e.rule = s.rule;
    for (std::size_t i = 0; i < s.matches.size(); ++i) {
      const TemplateMatch& m = s.matches[i];
      std::string prefix = s.matches.size() > 1 ? std::to_string(i + 1) + "." : "";
      e.bindings[prefix + "template"] = std::string(template_name(m.id));
      for (const auto& [k, id] : m.bindings) e.bindings[prefix + k] = render_node(*dag.dag, id);
      if (m.prefactor) e.bindings[prefix + "prefactor"] = render_node(*dag.dag, *m.prefactor);
      if (m.residual) e.bindings[prefix + "residual"] = render_node(*dag.dag, *m.residual);
    }
    c.trace.push_back(std::move(e));
  }
  if (c.verdict == Verdict::Unknown) c.blocking_node = blocking_node(*dag.dag, p, d.hessian);
  if (stats) {
    stats->visits = p.visits();
    stats->dag_nodes = nodes;
    stats->hessian = d.hessian;
    stats->root = root;
  }
  return c;
}

}  // namespace convexcert
