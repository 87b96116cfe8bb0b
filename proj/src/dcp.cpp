#include "convexcert/dcp.hpp"

#include "convexcert/positivity.hpp"

namespace convexcert {

std::string_view curvature_name(Curvature c) {
  switch (c) {
    case Curvature::Constant: return "constant";
    case Curvature::Affine: return "affine";
    case Curvature::Convex: return "convex";
    case Curvature::Concave: return "concave";
    case Curvature::Unknown: return "unknown";
  }
  return "?";
}

Curvature negate(Curvature c) {
  if (c == Curvature::Convex) return Curvature::Concave;
  if (c == Curvature::Concave) return Curvature::Convex;
  return c;
}

Curvature join(Curvature a, Curvature b) {
  if (a == b) return a;
  if (a == Curvature::Unknown || b == Curvature::Unknown) return Curvature::Unknown;
  if (a == Curvature::Constant) return b;
  if (b == Curvature::Constant) return a;
  if (a == Curvature::Affine) return b;
  if (b == Curvature::Affine) return a;
  return Curvature::Unknown;  // convex + concave
}

bool is_convex(Curvature c) { return c == Curvature::Constant || c == Curvature::Affine || c == Curvature::Convex; }
bool is_concave(Curvature c) { return c == Curvature::Constant || c == Curvature::Affine || c == Curvature::Concave; }

namespace {

Monotonicity increasing(const Interval&) { return Monotonicity::Increasing; }

Monotonicity by_sign(const Interval& arg) {
  if (arg.is_nonneg()) return Monotonicity::Increasing;
  if (arg.is_nonpos()) return Monotonicity::Decreasing;
  return Monotonicity::None;
}

AtomInfo atom(std::string name, Curvature c, std::function<Monotonicity(const Interval&)> m, Interval range) {
  return AtomInfo{std::move(name), c, std::move(m), range};
}

}  // namespace

const std::vector<AtomInfo>& atom_table() {
  static const std::vector<AtomInfo> table{
      atom("exp", Curvature::Convex, increasing, Interval::positive()),
      atom("log", Curvature::Concave, increasing, Interval::entire()),
      atom("sqrt", Curvature::Concave, increasing, Interval::nonneg()),
      atom("sum", Curvature::Affine, increasing, Interval::entire()),
      atom("norm2", Curvature::Convex, by_sign, Interval::nonneg()),
  };
  return table;
}

const AtomInfo* find_atom(std::string_view name) {
  for (const AtomInfo& a : atom_table())
    if (a.name == name) return &a;
  return nullptr;
}

std::optional<AtomInfo> power_atom(const std::optional<Rational>& p, const Interval& exponent, const Interval& base) {
  auto fixed = [](Monotonicity m) { return [m](const Interval&) { return m; }; };
  auto make = [&](Curvature c, std::function<Monotonicity(const Interval&)> m) {
    return atom("power", c, std::move(m), Interval::entire());
  };
  if (p) {
    if (p->is_zero()) return make(Curvature::Constant, fixed(Monotonicity::None));
    if (*p == Rational(1)) return make(Curvature::Affine, increasing);
    if (p->sign() > 0 && p->is_even_integer()) return make(Curvature::Convex, by_sign);
    if (*p > Rational(1)) {
      if (base.is_nonneg()) return make(Curvature::Convex, increasing);
      if (p->is_odd_integer() && base.is_nonpos()) return make(Curvature::Concave, increasing);
      return std::nullopt;
    }
    if (p->sign() > 0) {
      if (base.is_nonneg()) return make(Curvature::Concave, increasing);
      return std::nullopt;
    }
    if (base.is_positive()) return make(Curvature::Convex, fixed(Monotonicity::Decreasing));
    if (p->is_even_integer() && base.is_negative()) return make(Curvature::Convex, increasing);
    if (p->is_odd_integer() && base.is_negative()) return make(Curvature::Concave, fixed(Monotonicity::Decreasing));
    return std::nullopt;
  }
  if (exponent.lo >= 1.0 && base.is_nonneg()) return make(Curvature::Convex, increasing);
  if (exponent.is_nonneg() && exponent.hi <= 1.0 && base.is_nonneg()) return make(Curvature::Concave, increasing);
  if (exponent.is_nonpos() && base.is_positive()) return make(Curvature::Convex, fixed(Monotonicity::Decreasing));
  return std::nullopt;
}

Curvature compose(Curvature f, Monotonicity m, Curvature g) {
  if (g == Curvature::Constant || f == Curvature::Constant) return Curvature::Constant;
  if (g == Curvature::Unknown || f == Curvature::Unknown) return Curvature::Unknown;
  if (f == Curvature::Affine) {
    if (m == Monotonicity::Increasing) return g;
    if (m == Monotonicity::Decreasing) return negate(g);
    return g == Curvature::Affine ? g : Curvature::Unknown;
  }
  if (g == Curvature::Affine) return f;
  bool inc = m == Monotonicity::Increasing, dec = m == Monotonicity::Decreasing;
  if (f == Curvature::Convex && ((g == Curvature::Convex && inc) || (g == Curvature::Concave && dec)))
    return Curvature::Convex;
  if (f == Curvature::Concave && ((g == Curvature::Concave && inc) || (g == Curvature::Convex && dec)))
    return Curvature::Concave;
  return Curvature::Unknown;
}

namespace {

RangeHint dcp_hint(const NormalizedDag& dag, const DomainFacts& facts) {
  DomainFacts all = facts;
  try {
    Builder b(*dag.dag);
    all = merge_facts(facts, harvest_domain_facts(b, dag.root));
  } catch (const EmptyDomain&) {
  }
  return facts_hint(std::move(all));
}

}  // namespace

DcpLabeler::DcpLabeler(const NormalizedDag& dag, std::string wrt, const DomainFacts& facts, DcpOptions options)
    : dag_(dag), wrt_(std::move(wrt)), options_(options), b_(*dag.dag, dcp_hint(dag, facts)) {}

Curvature DcpLabeler::label(NodeId v) {
  if (auto it = memo_.find(v); it != memo_.end()) return it->second;
  std::string rule;
  Curvature c = compute(v, rule);
  memo_[v] = c;
  trace_.push_back(TraceEntry{v, render_node(*dag_.dag, v), std::string(curvature_name(c)), rule, {}});
  return c;
}

// c * f, or c / f when `reciprocal`, for a constant c.
Curvature DcpLabeler::scaled(NodeId c, Curvature f, bool reciprocal) {
  if (f == Curvature::Constant || f == Curvature::Affine) return f;
  const Shape& s = (*dag_.dag)[c].shape;
  if (s.is_matrix() && !s.is_row()) return Curvature::Unknown;
  Interval r = b_.range(c);
  if (reciprocal && !r.excludes_zero()) return Curvature::Unknown;
  if (r.is_point() && r.lo == 0.0) return Curvature::Constant;
  if (r.is_nonneg()) return f;
  if (r.is_nonpos()) return negate(f);
  return Curvature::Unknown;
}

Curvature DcpLabeler::compute(NodeId v, std::string& rule) {
  const Node n = (*dag_.dag)[v];
  std::vector<Curvature> kids;
  for (NodeId k : n.kids) kids.push_back(label(k));
  if (options_.extended_atoms)
    if (auto c = extended(v, rule)) return *c;
  auto apply = [&](const AtomInfo& a, NodeId arg) {
    rule = "atom:" + a.name;
    return compose(a.curvature, a.monotonicity(b_.range(arg)), label(arg));
  };
  switch (n.op) {
    case Op::Const:
    case Op::Ones:
    case Op::Zero:
      rule = "constant";
      return Curvature::Constant;
    case Op::Symbol:
      if (n.name == wrt_) {
        rule = "variable";
        return Curvature::Affine;
      }
      rule = "parameter";
      return Curvature::Constant;
    case Op::VectorOf:
      rule = "constant";
      return kids[0] == Curvature::Constant ? Curvature::Constant : Curvature::Unknown;
    case Op::Neg:
      rule = "negation";
      return negate(kids[0]);
    case Op::Add:
    case Op::Sub: {
      rule = "weighted-sum";
      Curvature c = kids[0];
      for (std::size_t i = 1; i < kids.size(); ++i) c = join(c, n.op == Op::Sub ? negate(kids[i]) : kids[i]);
      return c;
    }
    case Op::RawMul:
    case Op::EMul:
    case Op::Mul: {
      if (kids.size() != 2) break;
      if (kids[0] == Curvature::Constant && kids[1] == Curvature::Constant) {
        rule = "constant";
        return Curvature::Constant;
      }
      if (kids[0] != Curvature::Constant && kids[1] != Curvature::Constant) {
        rule = "product";
        return Curvature::Unknown;
      }
      rule = "scaling";
      bool left = kids[0] == Curvature::Constant;
      return scaled(n.kids[left ? 0 : 1], kids[left ? 1 : 0], false);
    }
    case Op::Div:
    case Op::EDiv: {
      if (kids[0] == Curvature::Constant && kids[1] == Curvature::Constant) {
        rule = "constant";
        return Curvature::Constant;
      }
      if (kids[1] == Curvature::Constant) {
        rule = "scaling";
        return scaled(n.kids[1], kids[0], true);
      }
      if (kids[0] != Curvature::Constant) {
        rule = "product";
        return Curvature::Unknown;
      }
      // c / g = c * g^-1
      auto p = power_atom(Rational(-1), Interval::point(-1.0), b_.range(n.kids[1]));
      rule = "atom:power";
      if (!p) return Curvature::Unknown;
      return scaled(n.kids[0], compose(p->curvature, p->monotonicity(b_.range(n.kids[1])), kids[1]), false);
    }
    case Op::RawPow:
    case Op::EPow:
    case Op::Pow: {
      if (kids[0] == Curvature::Constant && kids[1] == Curvature::Constant) {
        rule = "constant";
        return Curvature::Constant;
      }
      rule = "atom:power";
      if (kids[1] != Curvature::Constant) return Curvature::Unknown;
      const Node& e = (*dag_.dag)[n.kids[1]];
      std::optional<Rational> p;
      if (e.op == Op::Const) p = e.value;
      Interval base = b_.range(n.kids[0]);
      auto a = power_atom(p, b_.range(n.kids[1]), base);
      if (!a) return Curvature::Unknown;
      return compose(a->curvature, a->monotonicity(base), kids[0]);
    }
    case Op::Fn: {
      if (const AtomInfo* a = find_atom(fn_name(n.fn))) return apply(*a, n.kids[0]);
      if (kids[0] == Curvature::Constant) {
        rule = "constant";
        return Curvature::Constant;
      }
      rule = "no-atom";
      return Curvature::Unknown;
    }
    case Op::Sum: return apply(*find_atom("sum"), n.kids[0]);
    case Op::Norm2: return apply(*find_atom("norm2"), n.kids[0]);
    case Op::Diag:
    case Op::Transpose:
      rule = "affine-map";
      return kids[0];
    default:
      break;
  }
  rule = "no-rule";
  return Curvature::Unknown;
}

// Pattern atoms of the extended table.
std::optional<Curvature> DcpLabeler::extended(NodeId v, std::string& rule) {
  const Dag& d = *dag_.dag;
  const Node& n = d[v];
  auto is_one = [&](NodeId k) {
    const Node& m = d[k];
    if (m.op == Op::Const) return m.value == Rational(1);
    if (m.op == Op::Ones) return true;
    return m.op == Op::VectorOf && d[m.kids[0]].op == Op::Const && d[m.kids[0]].value == Rational(1);
  };
  auto fn_of = [&](NodeId k, FnKind f) -> std::optional<NodeId> {
    if (d[k].op == Op::Fn && d[k].fn == f) return d[k].kids[0];
    return std::nullopt;
  };
  auto take = [&](const char* name, Curvature f, Monotonicity m, NodeId arg) {
    rule = std::string("atom:") + name;
    return compose(f, m, label(arg));
  };
  if (n.op == Op::Fn && n.fn == FnKind::Log) {
    const Node& in = d[n.kids[0]];
    if (in.op == Op::Add && in.kids.size() == 2) {
      for (int i = 0; i < 2; ++i)
        if (is_one(in.kids[i]))
          if (auto g = fn_of(in.kids[1 - i], FnKind::Exp))
            return take("logistic", Curvature::Convex, Monotonicity::Increasing, *g);
    }
    if (in.op == Op::Sum)
      if (auto g = fn_of(in.kids[0], FnKind::Exp))
        return take("log_sum_exp", Curvature::Convex, Monotonicity::Increasing, *g);
  }
  if ((n.op == Op::RawMul || n.op == Op::EMul) && n.kids.size() == 2) {
    for (int i = 0; i < 2; ++i)
      if (auto g = fn_of(n.kids[1 - i], FnKind::Log); g && *g == n.kids[i])
        return take("neg_entr", Curvature::Convex, Monotonicity::None, *g);
    if (n.op == Op::RawMul) {
      NodeId l = n.kids[0], r = n.kids[1];
      if (d[l].op == Op::Transpose && d[l].kids[0] == r && d[r].shape.is_vector())
        return take("sum_squares", Curvature::Convex, Monotonicity::None, r);
      if (d[l].op == Op::RawMul && d[d[l].kids[0]].op == Op::Transpose && d[d[l].kids[0]].kids[0] == r &&
          d[r].shape.is_vector()) {
        NodeId a = d[l].kids[1];
        if (label(a) == Curvature::Constant && b_.range(a).is_nonneg())
          return take("quad_form", Curvature::Convex, Monotonicity::None, r);
      }
    }
  }
  return std::nullopt;
}

Curvature dcp_label(const NormalizedDag& dag, NodeId v, const std::string& wrt, const DomainFacts& facts,
                    DcpOptions options) {
  DcpLabeler l(dag, wrt, facts, options);
  return l.label(v);
}

Certificate dcp_certify(const NormalizedDag& dag, const std::string& wrt, const DomainFacts& facts,
                        DcpOptions options) {
  DcpLabeler l(dag, wrt, facts, options);
  Curvature root = l.label(dag.root);
  Certificate c;
  c.method = Method::Dcp;
  c.expression = render_node(*dag.dag, dag.root);
  c.wrt = wrt;
  c.trace = l.trace();
  switch (root) {
    case Curvature::Constant:
    case Curvature::Affine: c.verdict = Verdict::Affine; break;
    case Curvature::Convex: c.verdict = Verdict::Convex; break;
    case Curvature::Concave: c.verdict = Verdict::Concave; break;
    case Curvature::Unknown: c.verdict = Verdict::Unknown; break;
  }
  for (const TraceEntry& e : c.trace)
    if (e.value == curvature_name(Curvature::Unknown)) {
      c.blocking_node = e.node;
      break;
    }
  return c;
}

}  // namespace convexcert
