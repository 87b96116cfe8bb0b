#include <algorithm>
#include <cmath>

#include "convexcert/dag.hpp"

namespace convexcert {
namespace {

// Smallest absolute value in the interval.
Interval magnitude_floor(const Interval& i) {
  if (i.is_positive() || i.is_nonneg()) return {i.lo, Interval::kInf, i.lo_open, true};
  if (i.is_negative() || i.is_nonpos()) return {-i.hi, Interval::kInf, i.hi_open, true};
  return Interval::nonneg();
}

Interval power_of(const Dag& dag, NodeId exponent, const Interval& base, const Interval& exp_iv) {
  const Node& e = dag[exponent];
  if (e.op == Op::Const) return interval_pow(base, e.value);
  if (base.is_positive()) return Interval::positive();
  (void)exp_iv;
  return Interval::entire();
}

Interval product(const Interval& a, const Interval& b, bool matrix) {
  Interval r = a * b;
  return matrix ? r.sign_only() : r;
}

}  // namespace

Interval combine_node(const Dag& dag, NodeId id, const std::vector<Interval>& kids) {
  const Node& n = dag[id];
  const bool matrix = n.shape.is_matrix() && !n.shape.is_row();
  auto kid_matrix = [&](std::size_t i) {
    const Shape& s = dag[n.kids[i]].shape;
    return s.is_matrix() && !s.is_row();
  };
  switch (n.op) {
    case Op::Const: return Interval::point(n.value);
    case Op::Ones: return Interval::point(1.0);
    case Op::Zero: return Interval::point(0.0);
    case Op::Symbol: return Interval::entire();
    case Op::Neg: return -kids[0];
    case Op::Sub: {
      Interval r = kids[0] - kids[1];
      return matrix ? r.sign_only() : r;
    }
    case Op::Add: {
      Interval r = kids[0];
      for (std::size_t i = 1; i < kids.size(); ++i) r = r + kids[i];
      return matrix ? r.sign_only() : r;
    }
    case Op::Mul:
    case Op::EMul: {
      Interval r = kids[0];
      for (std::size_t i = 1; i < kids.size(); ++i) r = product(r, kids[i], matrix);
      return r;
    }
    case Op::RawMul: {
      bool scalar_side = dag[n.kids[0]].shape.is_scalar() || dag[n.kids[1]].shape.is_scalar();
      if (scalar_side) return product(kids[0], kids[1], matrix);
      return Interval::entire();
    }
    case Op::Div:
    case Op::EDiv: {
      if (kid_matrix(0) || kid_matrix(1)) {
        if (!dag[n.kids[1]].shape.is_scalar()) return Interval::entire();
        return (kids[0] / kids[1]).sign_only();
      }
      return kids[0] / kids[1];
    }
    case Op::Pow:
    case Op::RawPow:
    case Op::EPow:
      if (kid_matrix(0)) return Interval::entire();
      return power_of(dag, n.kids[1], kids[0], kids[1]);
    case Op::Transpose:
      return kids[0];
    case Op::VectorOf:
      return kids[0];
    case Op::Fn:
      if (kid_matrix(0)) return Interval::entire();
      return interval_fn(n.fn, kids[0]);
    case Op::Sum:
      return interval_sum(kids[0]);
    case Op::Diag:
      return kids[0].sign_only();
    case Op::Norm2:
      return magnitude_floor(kids[0]);
    case Op::Dot:
      if (n.kids[0] == n.kids[1]) {
        Interval m = magnitude_floor(kids[0]);
        return m * m;
      }
      return interval_sum(kids[0] * kids[1]);
    case Op::Outer:
      if (n.kids[0] == n.kids[1]) return Interval::nonneg();
      return Interval::entire();
    case Op::MatMul:
      return Interval::entire();
  }
  return Interval::entire();
}

namespace {

void add_fact(DomainFacts& facts, NodeId id, const Interval& iv) {
  auto it = facts.find(id);
  if (it == facts.end()) {
    facts.emplace(id, iv);
    return;
  }
  try {
    it->second = it->second.intersect(iv);
  } catch (const EmptyDomain&) {
    // contradictory operator domains; keep the first restriction
  }
}

}  // namespace

DomainFacts harvest_domain_facts(Builder& b, NodeId root) {
  DomainFacts facts;
  std::vector<NodeId> roots{root};
  roots.push_back(b.simplify(root));
  for (NodeId r : roots) {
    for (NodeId id : b.dag().reachable(r)) {
      const Node n = b.dag()[id];
      switch (n.op) {
        case Op::Fn: {
          Interval dom = fn_domain(n.fn);
          if (!dom.is_entire()) add_fact(facts, b.simplify(n.kids[0]), dom);
          break;
        }
        case Op::Pow:
        case Op::RawPow:
        case Op::EPow: {
          const Node& e = b.dag()[n.kids[1]];
          if (e.op == Op::Const) {
            if (e.value.is_integer()) break;
            add_fact(facts, b.simplify(n.kids[0]), e.value.sign() < 0 ? Interval::positive() : Interval::nonneg());
          } else {
            add_fact(facts, b.simplify(n.kids[0]), Interval::positive());
          }
          break;
        }
        default:
          break;
      }
    }
  }
  // Pull facts back through scaling and shifting by constants and through log
  // and exp, so a fact on -x or log(x/2) also restricts x.
  for (int pass = 0; pass < 4; ++pass) {
    DomainFacts more;
    for (const auto& [id, iv] : facts) {
      const Node& n = b.dag()[id];
      if (n.op == Op::Fn && n.fn == FnKind::Log) add_fact(more, n.kids[0], interval_fn(FnKind::Exp, iv));
      if (n.op == Op::Fn && n.fn == FnKind::Exp && iv.hi > 0.0) {
        Interval pos = iv.lo > 0.0 ? iv : Interval(0.0, iv.hi, true, iv.hi_open);
        add_fact(more, n.kids[0], interval_fn(FnKind::Log, pos));
      }
      if ((n.op != Op::Mul && n.op != Op::Add) || n.kids.size() != 2) continue;
      for (int k = 0; k < 2; ++k) {
        const Node& c = b.dag()[n.kids[k]];
        NodeId other = n.kids[1 - k];
        if (c.op != Op::Const && c.op != Op::Ones) continue;
        Interval cv = Interval::point(c.op == Op::Ones ? Rational(1) : c.value);
        if (n.op == Op::Mul && cv.lo != 0.0) add_fact(more, other, iv / cv);
        if (n.op == Op::Add) add_fact(more, other, iv - cv);
      }
    }
    std::size_t before = facts.size();
    for (const auto& [id, iv] : more) add_fact(facts, id, iv);
    if (facts.size() == before) break;
  }
  return facts;
}

RangeHint facts_hint(DomainFacts facts, RangeHint extra) {
  auto shared = std::make_shared<const DomainFacts>(std::move(facts));
  return [shared, extra](NodeId id) -> std::optional<Interval> {
    std::optional<Interval> out;
    if (auto it = shared->find(id); it != shared->end()) out = it->second;
    if (extra) {
      if (auto e = extra(id)) {
        if (!out) out = e;
        else {
          try {
            out = out->intersect(*e);
          } catch (const EmptyDomain&) {
          }
        }
      }
    }
    return out;
  };
}

}  // namespace convexcert
