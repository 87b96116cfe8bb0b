#include "convexcert/calculus.hpp"

namespace convexcert {

Differentiator::Differentiator(Builder& b, Variable wrt) : b_(b), wrt_(std::move(wrt)) {
  if (wrt_.shape.is_matrix())
    throw ShapeError("cannot differentiate with respect to matrix '" + wrt_.name + "'");
}

NodeId Differentiator::zero_grad() { return b_.zero(wrt_.shape); }

NodeId Differentiator::zero_jac(const Shape& of) {
  if (wrt_.shape.is_scalar()) return b_.zero(of);
  return b_.zero(Shape::matrix(of.rows, wrt_.shape.rows));
}

NodeId Differentiator::lift(NodeId a, NodeId J) {
  if (b_.dag()[a].shape.is_scalar()) return b_.mul(a, J);
  return b_.matmul(b_.diag(a), J);
}

NodeId Differentiator::jt_v(NodeId J, NodeId v) {
  if (b_.dag()[J].shape.is_vector()) return b_.dot(J, v);
  return b_.matmul(b_.transpose(J), v);
}

NodeId Differentiator::outer_g(NodeId u, NodeId g) {
  if (b_.dag()[g].shape.is_scalar()) return b_.mul(u, g);
  return b_.outer(u, g);
}

NodeId Differentiator::d1(FnKind f, NodeId a, NodeId at) {
  Shape s = b_.dag()[a].shape;
  auto one = [&] { return b_.filled(1, s); };
  auto sq = [&](NodeId x) { return b_.pow(x, Rational(2)); };
  switch (f) {
    case FnKind::Exp: return at;
    case FnKind::Log: return b_.pow(a, Rational(-1));
    case FnKind::Sqrt: return b_.scale(Rational(1, 2), b_.pow(a, Rational(-1, 2)));
    case FnKind::Sin: return b_.fn(FnKind::Cos, a);
    case FnKind::Cos: return b_.neg(b_.fn(FnKind::Sin, a));
    case FnKind::Tan: return b_.add(one(), sq(at));
    case FnKind::Sinh: return b_.fn(FnKind::Cosh, a);
    case FnKind::Cosh: return b_.fn(FnKind::Sinh, a);
    case FnKind::Tanh: return b_.sub(one(), sq(at));
    case FnKind::Arcsin: return b_.pow(b_.sub(one(), sq(a)), Rational(-1, 2));
    case FnKind::Arccos: return b_.neg(b_.pow(b_.sub(one(), sq(a)), Rational(-1, 2)));
    case FnKind::Arctan: return b_.pow(b_.add(one(), sq(a)), Rational(-1));
    case FnKind::Abs:
    case FnKind::Sign: break;
  }
  throw NotDifferentiable(at, std::string(fn_name(f)) + " is not differentiable");
}

NodeId Differentiator::d2(FnKind f, NodeId a, NodeId at) {
  Shape s = b_.dag()[a].shape;
  auto one = [&] { return b_.filled(1, s); };
  auto sq = [&](NodeId x) { return b_.pow(x, Rational(2)); };
  switch (f) {
    case FnKind::Exp: return at;
    case FnKind::Log: return b_.neg(b_.pow(a, Rational(-2)));
    case FnKind::Sqrt: return b_.scale(Rational(-1, 4), b_.pow(a, Rational(-3, 2)));
    case FnKind::Sin: return b_.neg(at);
    case FnKind::Cos: return b_.neg(at);
    case FnKind::Tan: return b_.mul({b_.constant(2), at, b_.add(one(), sq(at))});
    case FnKind::Sinh: return at;
    case FnKind::Cosh: return at;
    case FnKind::Tanh: return b_.mul({b_.constant(-2), at, b_.sub(one(), sq(at))});
    case FnKind::Arcsin: return b_.mul(a, b_.pow(b_.sub(one(), sq(a)), Rational(-3, 2)));
    case FnKind::Arccos: return b_.neg(b_.mul(a, b_.pow(b_.sub(one(), sq(a)), Rational(-3, 2))));
    case FnKind::Arctan: return b_.mul({b_.constant(-2), a, b_.pow(b_.add(one(), sq(a)), Rational(-2))});
    case FnKind::Abs:
    case FnKind::Sign: break;
  }
  throw NotDifferentiable(at, std::string(fn_name(f)) + " is not differentiable");
}

NodeId Differentiator::derivative(NodeId id) {
  return b_.dag()[id].shape.is_scalar() ? grad(id) : jac(id);
}

NodeId Differentiator::hessian(NodeId s) {
  NodeId g = grad(s);
  return wrt_.shape.is_scalar() ? grad(g) : jac(g);
}

NodeId Differentiator::grad(NodeId s) {
  if (!depends(s)) return zero_grad();
  if (auto it = grad_memo_.find(s); it != grad_memo_.end()) return it->second;
  const Node n = b_.dag()[s];
  if (!n.shape.is_scalar()) throw std::logic_error("grad of a non-scalar node");
  NodeId r;
  switch (n.op) {
    case Op::Symbol:
      r = b_.constant(1);
      break;
    case Op::Add: {
      std::vector<NodeId> terms;
      for (NodeId k : n.kids) terms.push_back(grad(k));
      r = b_.add(terms);
      break;
    }
    case Op::Mul: {
      std::vector<NodeId> terms;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        if (!depends(n.kids[i])) continue;
        std::vector<NodeId> others;
        for (std::size_t j = 0; j < n.kids.size(); ++j)
          if (j != i) others.push_back(n.kids[j]);
        terms.push_back(b_.mul(b_.mul(others), grad(n.kids[i])));
      }
      r = b_.add(terms);
      break;
    }
    case Op::Pow: {
      NodeId base = n.kids[0], e = n.kids[1];
      if (b_.is_const(e)) {
        Rational c = b_.dag()[e].value;
        r = b_.mul({b_.constant(c), b_.pow(base, c - Rational(1)), grad(base)});
      } else {
        // u^v = exp(v log u)
        NodeId inner = b_.add(b_.mul(grad(e), b_.fn(FnKind::Log, base)),
                              b_.mul({e, b_.pow(base, Rational(-1)), grad(base)}));
        r = b_.mul(s, inner);
      }
      break;
    }
    case Op::Div: {
      NodeId num = n.kids[0], den = n.kids[1];
      r = b_.sub(b_.div(grad(num), den), b_.product({{s, 1}, {grad(den), 1}, {den, -1}}));
      break;
    }
    case Op::Fn:
      r = b_.mul(d1(n.fn, n.kids[0], s), grad(n.kids[0]));
      break;
    case Op::Sum:
      r = jt_v(jac(n.kids[0]), b_.ones(b_.dag()[n.kids[0]].shape.rows));
      break;
    case Op::Dot:
      r = b_.add(jt_v(jac(n.kids[0]), n.kids[1]), jt_v(jac(n.kids[1]), n.kids[0]));
      break;
    case Op::Norm2:
      r = b_.mul(jt_v(jac(n.kids[0]), n.kids[0]), b_.pow(s, Rational(-1)));
      break;
    case Op::Transpose:
      r = grad(n.kids[0]);
      break;
    case Op::MatMul: {
      // u' * (M ... v)
      NodeId u = b_.transpose(n.kids[0]);
      std::vector<NodeId> rest(n.kids.begin() + 1, n.kids.end());
      NodeId w = rest.size() == 1 ? rest[0] : b_.matmul(rest[0], rest[1]);
      for (std::size_t i = 2; i < rest.size(); ++i) w = b_.matmul(w, rest[i]);
      r = b_.add(jt_v(jac(u), w), jt_v(jac(w), u));
      break;
    }
    default:
      throw NotDifferentiable(s, "cannot differentiate operator " + std::string(op_name(n.op)));
  }
  grad_memo_[s] = r;
  return r;
}

NodeId Differentiator::jac(NodeId v) {
  const Shape shape = b_.dag()[v].shape;
  if (!depends(v)) return zero_jac(shape);
  if (auto it = jac_memo_.find(v); it != jac_memo_.end()) return it->second;
  const Node n = b_.dag()[v];
  if (!n.shape.is_vector()) throw NotDifferentiable(v, "derivative of a matrix-valued subexpression is not supported");
  NodeId r;
  switch (n.op) {
    case Op::Symbol:
      r = b_.identity(n.shape.rows);
      break;
    case Op::Add: {
      std::vector<NodeId> terms;
      for (NodeId k : n.kids) terms.push_back(jac(k));
      r = b_.add(terms);
      break;
    }
    case Op::Mul: {
      std::vector<NodeId> terms;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        NodeId k = n.kids[i];
        if (!depends(k)) continue;
        std::vector<NodeId> rest;
        for (std::size_t j = 0; j < n.kids.size(); ++j)
          if (j != i) rest.push_back(n.kids[j]);
        NodeId others = b_.mul(rest);
        terms.push_back(b_.dag()[k].shape.is_scalar() ? outer_g(others, grad(k)) : lift(others, jac(k)));
      }
      r = b_.add(terms);
      break;
    }
    case Op::Pow: {
      NodeId base = n.kids[0], e = n.kids[1];
      if (b_.is_const(e)) {
        Rational c = b_.dag()[e].value;
        r = lift(b_.scale(c, b_.pow(base, c - Rational(1))), jac(base));
      } else {
        std::vector<NodeId> terms;
        if (depends(base)) {
          NodeId coef = b_.mul({v, e, b_.pow(base, Rational(-1))});
          terms.push_back(b_.dag()[base].shape.is_scalar() ? outer_g(coef, grad(base)) : lift(coef, jac(base)));
        }
        if (depends(e)) {
          NodeId coef = b_.mul(v, b_.fn(FnKind::Log, base));
          terms.push_back(b_.dag()[e].shape.is_scalar() ? outer_g(coef, grad(e)) : lift(coef, jac(e)));
        }
        r = b_.add(terms);
      }
      break;
    }
    case Op::Div: {
      NodeId num = n.kids[0], den = n.kids[1];
      auto term = [&](NodeId coef, NodeId of) {
        return b_.dag()[of].shape.is_scalar() ? outer_g(coef, grad(of)) : lift(coef, jac(of));
      };
      std::vector<NodeId> terms;
      if (depends(num)) terms.push_back(term(b_.div(b_.filled(1, b_.dag()[den].shape), den), num));
      if (depends(den)) terms.push_back(term(b_.neg(b_.div(v, den)), den));
      r = b_.add(terms);
      break;
    }
    case Op::Fn:
      r = lift(d1(n.fn, n.kids[0], v), jac(n.kids[0]));
      break;
    case Op::MatMul:
      r = chain_jac(n.kids, v);
      break;
    default:
      throw NotDifferentiable(v, "cannot differentiate operator " + std::string(op_name(n.op)));
  }
  jac_memo_[v] = r;
  return r;
}

NodeId Differentiator::chain_jac(const std::vector<NodeId>& chain, NodeId whole) {
  const std::size_t k = chain.size() - 1;
  NodeId last = chain[k];
  auto product = [&](std::size_t from, std::size_t to, std::optional<NodeId> tail) {
    std::vector<NodeId> parts(chain.begin() + static_cast<std::ptrdiff_t>(from),
                              chain.begin() + static_cast<std::ptrdiff_t>(to));
    if (tail) parts.push_back(*tail);
    NodeId p = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) p = b_.matmul(p, parts[i]);
    return p;
  };
  std::optional<std::size_t> dep;
  for (std::size_t i = 0; i < k; ++i)
    if (depends(chain[i])) dep = i;
  if (!dep) return product(0, k, jac(last));
  const Node m = b_.dag()[chain[*dep]];
  NodeId right = *dep + 1 <= k ? product(*dep + 1, k + 1, std::nullopt) : last;
  NodeId collapsed;
  if (m.op == Op::Diag) {
    collapsed = b_.mul(m.kids[0], right);
  } else if (m.op == Op::Add) {
    std::vector<NodeId> terms;
    for (NodeId t : m.kids) terms.push_back(b_.matmul(t, right));
    collapsed = b_.add(terms);
  } else if (m.op == Op::Outer) {
    collapsed = b_.mul(m.kids[0], b_.dot(m.kids[1], right));
  } else {
    throw NotDifferentiable(whole, "derivative of a matrix-valued subexpression is not supported");
  }
  NodeId rebuilt = *dep == 0 ? collapsed : product(0, *dep, collapsed);
  return jac(rebuilt);
}

namespace {
RangeHint with_facts(const NormalizedDag& dag, RangeHint hint) {
  Builder plain(*dag.dag);
  return facts_hint(harvest_domain_facts(plain, dag.root), std::move(hint));
}
}  // namespace

DerivativeResult derivatives(const NormalizedDag& dag, const Variable& wrt, RangeHint hint) {
  const Shape root_shape = dag.root_node().shape;
  if (!root_shape.is_scalar()) throw NonScalarObjective(root_shape);
  Builder b(*dag.dag, with_facts(dag, std::move(hint)));
  NodeId root = b.simplify(dag.root);
  Differentiator d(b, wrt);
  NodeId g = d.grad(root);
  NodeId h = d.hessian(root);
  return {b.simplify(g), b.simplify(h)};
}

namespace {
NormalizedDag with_root(const NormalizedDag& dag, NodeId root) {
  NormalizedDag out;
  out.dag = dag.dag;
  out.root = root;
  for (NodeId id : out.dag->reachable(root))
    if ((*out.dag)[id].op == Op::Symbol) out.leaves[(*out.dag)[id].name] = id;
  return out;
}
}  // namespace

NormalizedDag differentiate(const NormalizedDag& dag, const Variable& wrt, RangeHint hint) {
  const Shape root_shape = dag.root_node().shape;
  if (!root_shape.is_scalar()) throw NonScalarObjective(root_shape);
  Builder b(*dag.dag, with_facts(dag, std::move(hint)));
  Differentiator d(b, wrt);
  return with_root(dag, b.simplify(d.grad(b.simplify(dag.root))));
}

NormalizedDag hessian(const NormalizedDag& dag, const Variable& wrt, RangeHint hint) {
  return with_root(dag, derivatives(dag, wrt, std::move(hint)).hessian);
}

NodeId hessian_of_composition(Builder& b, FnKind f, NodeId g, const Variable& wrt) {
  Differentiator d(b, wrt);
  NodeId at = b.fn(f, g);
  NodeId gg = d.grad(g);
  NodeId outer = b.dag()[gg].shape.is_scalar() ? b.mul(gg, gg) : b.outer(gg, gg);
  return b.add(b.mul(d.d2(f, g, at), outer), b.mul(d.d1(f, g, at), d.hessian(g)));
}

}  // namespace convexcert
