// Canonicalizing smart constructors. Invariants of the normal form:
//  - Mul is flat, has at most one leading Const coefficient (never 0 or 1),
//    and its remaining factors are ordered by base id with merged exponents.
//  - Add is flat, like terms are merged, and terms are ordered by the id of
//    their coefficient-free part.
//  - MatMul chains hold no scalars, identities, or mergeable neighbours.
//  - Dot, Outer, Sum, Diag have their scalar factors hoisted outside.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "convexcert/dag.hpp"

namespace convexcert {

Builder::Builder(Dag& dag, RangeHint hint) : dag_(dag), hint_(std::move(hint)) {}

NodeId Builder::make(Op op, std::vector<NodeId> kids, Shape shape) {
  Node n;
  n.op = op;
  n.kids = std::move(kids);
  n.shape = std::move(shape);
  return dag_.intern(std::move(n));
}

NodeId Builder::constant(const Rational& c) {
  Node n;
  n.op = Op::Const;
  n.value = c;
  return dag_.intern(std::move(n));
}

NodeId Builder::ones(std::string dim) { return make(Op::Ones, {}, Shape::vector(dim)); }

NodeId Builder::zero(Shape shape) {
  if (shape.is_scalar()) return constant(0);
  return make(Op::Zero, {}, shape);
}

NodeId Builder::identity(const std::string& dim) { return make(Op::Diag, {ones(dim)}, Shape::matrix(dim, dim)); }

NodeId Builder::symbol(const std::string& name, const Shape& shape) {
  Node n;
  n.op = Op::Symbol;
  n.name = name;
  n.shape = shape;
  return dag_.intern(std::move(n));
}

NodeId Builder::filled(const Rational& c, Shape shape) {
  if (shape.is_scalar()) return constant(c);
  if (c.is_zero()) return zero(shape);
  if (!shape.is_vector()) throw ShapeError("cannot fill a matrix with a constant");
  return scale(c, ones(shape.rows));
}

Shape Builder::broadcast(const Shape& a, const Shape& b) const {
  if (a.is_scalar()) return b;
  if (b.is_scalar()) return a;
  if (a == b) return a;
  throw ShapeError("elementwise operation on mismatched shapes " + a.str() + " and " + b.str());
}

Interval Builder::range(NodeId id) {
  if (auto it = range_memo_.find(id); it != range_memo_.end()) return it->second;
  const Node& n = dag_[id];
  std::vector<Interval> kids;
  kids.reserve(n.kids.size());
  for (NodeId k : n.kids) kids.push_back(range(k));
  Interval r = combine_node(dag_, id, kids);
  if (hint_) {
    if (auto h = hint_(id)) {
      try {
        r = r.intersect(*h);
      } catch (const EmptyDomain&) {
      }
    }
  }
  range_memo_[id] = r;
  return r;
}

std::pair<Rational, NodeId> Builder::split_coefficient(NodeId id) {
  const Node n = dag_[id];
  if (n.op == Op::Const) return {n.value, constant(1)};
  if (n.op == Op::Mul && dag_[n.kids[0]].op == Op::Const) {
    Rational c = dag_[n.kids[0]].value;
    std::vector<NodeId> rest(n.kids.begin() + 1, n.kids.end());
    if (rest.size() == 1) return {c, rest[0]};
    return {c, make(Op::Mul, std::move(rest), n.shape)};
  }
  return {Rational(1), id};
}

std::vector<std::pair<NodeId, Rational>> Builder::factors(NodeId id) {
  std::vector<std::pair<NodeId, Rational>> out;
  std::function<void(NodeId, int)> walk = [&](NodeId f, int sign) {
    const Node& n = dag_[f];
    switch (n.op) {
      case Op::Const: return;
      case Op::Mul:
        for (NodeId k : n.kids) walk(k, sign);
        return;
      case Op::Div:
        walk(n.kids[0], sign);
        walk(n.kids[1], -sign);
        return;
      case Op::Pow:
        if (dag_[n.kids[1]].op == Op::Const) {
          out.emplace_back(n.kids[0], dag_[n.kids[1]].value * Rational(sign));
          return;
        }
        break;
      default:
        break;
    }
    out.emplace_back(f, Rational(sign));
  };
  walk(id, 1);
  return out;
}

std::pair<NodeId, NodeId> Builder::split_scalar(NodeId id) {
  const Node n = dag_[id];
  if (n.shape.is_scalar() || (n.op != Op::Mul && n.op != Op::Div)) return {constant(1), id};
  Rational coef = split_coefficient(id).first;
  std::vector<std::pair<NodeId, int>> scalars, tensors;
  for (auto& [b, e] : factors(id)) {
    NodeId p = pow(b, e.abs());
    (dag_[b].shape.is_scalar() ? scalars : tensors).emplace_back(p, e.sign());
  }
  if (scalars.empty() && coef == Rational(1)) return {constant(1), id};
  scalars.emplace_back(constant(coef), 1);
  return {product(scalars), product(tensors)};
}

struct Builder::Flat {
  Rational coef{1};
  Shape shape;
  bool zero = false;
  std::string ones_dim;
  std::map<NodeId, Rational> exps;
  std::map<NodeId, std::set<int>> sources;  // 0 = loose factor, k > 0 = k-th kept quotient
  std::vector<NodeId> atoms;
};

// A quotient N/D met as a factor is remembered as a candidate to keep intact
// (e/w * (1 - e/w) stays a product of a quotient and a sum) unless its bases
// interact with the other factors.
void Builder::flatten_into(Flat& f, NodeId id, int sign, int source) {
  const Node n = dag_[id];
  f.shape = broadcast(f.shape, n.shape);
  auto add_base = [&](NodeId b, const Rational& e) {
    f.exps[b] += e;
    f.sources[b].insert(source);
  };
  switch (n.op) {
    case Op::Const:
      if (sign < 0 && n.value.is_zero()) throw std::domain_error("division by the constant 0");
      f.coef *= sign > 0 ? n.value : n.value.reciprocal();
      return;
    case Op::Zero:
      if (sign < 0) throw std::domain_error("division by a zero tensor");
      f.zero = true;
      return;
    case Op::Ones:
      f.ones_dim = n.shape.rows;
      return;
    case Op::Mul:
      for (NodeId k : n.kids) flatten_into(f, k, sign, source);
      return;
    case Op::Div: {
      const Node& num = dag_[n.kids[0]];
      bool atom = sign > 0 && source == 0 && num.op != Op::Const && num.op != Op::Ones;
      int src = source;
      if (atom) {
        f.atoms.push_back(id);
        src = static_cast<int>(f.atoms.size());
      }
      flatten_into(f, n.kids[0], sign, src);
      flatten_into(f, n.kids[1], -sign, src);
      return;
    }
    case Op::Pow:
      if (dag_[n.kids[1]].op == Op::Const) {
        add_base(n.kids[0], dag_[n.kids[1]].value * Rational(sign));
        return;
      }
      break;
    default:
      break;
  }
  add_base(id, Rational(sign));
}

NodeId Builder::mul(std::vector<NodeId> fs) {
  std::vector<std::pair<NodeId, int>> items;
  for (NodeId f : fs) items.emplace_back(f, 1);
  return product(items);
}

NodeId Builder::product(const std::vector<std::pair<NodeId, int>>& items) {
  Flat f;
  for (auto& [id, sign] : items) flatten_into(f, id, sign, 0);
  if (f.zero || f.coef.is_zero()) return zero(f.shape);

  auto sorted_product = [&](std::vector<NodeId> fs, const Shape& shape) -> NodeId {
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    bool has_tensor = false;
    for (NodeId x : fs) has_tensor = has_tensor || !dag_[x].shape.is_scalar();
    if (!shape.is_scalar() && !has_tensor) {
      if (!shape.is_vector()) throw ShapeError("internal: matrix product without a matrix factor");
      fs.push_back(ones(shape.rows));
    }
    if (fs.empty()) return constant(1);
    if (fs.size() == 1) return fs[0];
    Shape s = Shape::scalar();
    for (NodeId x : fs) s = broadcast(s, dag_[x].shape);
    return make(Op::Mul, std::move(fs), s);
  };
  auto with_coef = [&](NodeId body) -> NodeId {
    if (f.coef == Rational(1)) return body;
    if (dag_[body].op == Op::Const) return constant(f.coef * dag_[body].value);
    std::vector<NodeId> kids{constant(f.coef)};
    const Node& b = dag_[body];
    if (b.op == Op::Mul) kids.insert(kids.end(), b.kids.begin(), b.kids.end());
    else kids.push_back(body);
    Shape shape = b.shape;
    return make(Op::Mul, std::move(kids), shape);
  };

  bool keep_atoms = !f.atoms.empty();
  for (auto& [b, e] : f.exps) {
    const auto& src = f.sources[b];
    if (src.size() > 1 || e.is_zero() || (src.count(0) && e.sign() < 0)) keep_atoms = false;
  }

  std::vector<std::pair<NodeId, Rational>> num, den;
  bool rebuilt = false;
  auto power = [&](NodeId b, const Rational& e) {
    NodeId p = pow(b, e);
    const Node& pn = dag_[p];
    bool plain = e == Rational(1) ? p == b
                                  : pn.op == Op::Pow && pn.kids[0] == b && dag_[pn.kids[1]].op == Op::Const;
    if (!plain) rebuilt = true;
    return p;
  };
  std::vector<NodeId> loose, num_nodes, den_nodes;
  for (auto& [b, e] : f.exps) {
    if (keep_atoms) {
      if (f.sources[b].count(0)) loose.push_back(power(b, e));
      continue;
    }
    if (e.is_zero()) {
      if (cancel_all_ || known_nonzero(b)) continue;
      num_nodes.push_back(b);
      den_nodes.push_back(b);
      continue;
    }
    (e.sign() > 0 ? num_nodes : den_nodes).push_back(power(b, e.abs()));
  }
  if (rebuilt) {
    // a power folded into something else (a constant, a product, another
    // base); merge again over the folded factors
    std::vector<std::pair<NodeId, int>> again{{constant(f.coef), 1}};
    if (!f.ones_dim.empty()) again.emplace_back(ones(f.ones_dim), 1);
    for (NodeId x : loose) again.emplace_back(x, 1);
    for (NodeId x : f.atoms) if (keep_atoms) again.emplace_back(x, 1);
    for (NodeId x : num_nodes) again.emplace_back(x, 1);
    for (NodeId x : den_nodes) again.emplace_back(x, -1);
    return product(again);
  }
  if (keep_atoms) {
    loose.insert(loose.end(), f.atoms.begin(), f.atoms.end());
    return with_coef(sorted_product(loose, f.shape));
  }
  if (den_nodes.empty()) return with_coef(sorted_product(num_nodes, f.shape));
  Shape den_shape = Shape::scalar();
  for (NodeId x : den_nodes) den_shape = broadcast(den_shape, dag_[x].shape);
  Shape num_shape = f.shape.is_matrix() || den_shape == f.shape ? Shape::scalar() : f.shape;
  for (NodeId x : num_nodes) num_shape = broadcast(num_shape, dag_[x].shape);
  if (f.shape.is_matrix() && num_shape.is_scalar()) num_shape = f.shape;
  NodeId N = sorted_product(num_nodes, num_shape);
  NodeId D = sorted_product(den_nodes, den_shape);
  return with_coef(make(Op::Div, {N, D}, f.shape));
}

NodeId Builder::scale(const Rational& c, NodeId a) { return mul({constant(c), a}); }
NodeId Builder::neg(NodeId a) { return scale(Rational(-1), a); }
NodeId Builder::sub(NodeId a, NodeId b) { return add(a, neg(b)); }
NodeId Builder::div(NodeId a, NodeId b) { return product({{a, 1}, {b, -1}}); }

NodeId Builder::add(std::vector<NodeId> input) {
  std::map<NodeId, Rational> coeffs;
  std::optional<Shape> shape;
  std::vector<NodeId> flat;
  std::function<void(NodeId)> flatten = [&](NodeId id) {
    const Node& n = dag_[id];
    if (!shape) shape = n.shape;
    else if (!(*shape == n.shape))
      throw ShapeError("sum of mismatched shapes " + shape->str() + " and " + n.shape.str());
    if (n.op == Op::Add) {
      for (NodeId k : std::vector<NodeId>(n.kids)) flatten(k);
      return;
    }
    if (n.op == Op::Mul && n.kids.size() == 2 && dag_[n.kids[0]].op == Op::Const && dag_[n.kids[1]].op == Op::Add) {
      Rational c = dag_[n.kids[0]].value;
      for (NodeId k : std::vector<NodeId>(dag_[n.kids[1]].kids)) flatten(scale(c, k));
      return;
    }
    if (n.op == Op::Zero || (n.op == Op::Const && n.value.is_zero())) return;
    flat.push_back(id);
  };
  for (NodeId t : input) flatten(t);
  if (shape && shape->is_square()) {
    // sum of diagonal matrices -> one diagonal matrix
    std::vector<NodeId> diag_vecs, rest;
    for (NodeId t : flat) {
      auto [sc, tens] = split_scalar(t);
      if (dag_[tens].op == Op::Diag) diag_vecs.push_back(mul(sc, dag_[tens].kids[0]));
      else rest.push_back(t);
    }
    if (diag_vecs.size() >= 2) {
      rest.push_back(diag(add(diag_vecs)));
      flat = rest;
    }
  }
  for (NodeId t : flat) {
    auto [c, r] = split_coefficient(t);
    coeffs[r] += c;
  }
  if (!shape) return constant(0);

  std::vector<std::pair<Rational, NodeId>> terms;
  for (auto& [rest, c] : coeffs)
    if (!c.is_zero()) terms.emplace_back(c, rest);
  pythagorean(terms, *shape);
  if (terms.empty()) return zero(*shape);
  if (terms.size() == 1) return scale(terms[0].first, terms[0].second);
  if (auto f = factor_common(terms)) return *f;
  std::vector<NodeId> kids;
  for (auto& [c, rest] : terms) kids.push_back(scale(c, rest));
  return make(Op::Add, std::move(kids), *shape);
}

// c*m*cosh(a)^2 - c*m*sinh(a)^2 -> c*m and c*m*sin(a)^2 + c*m*cos(a)^2 -> c*m.
void Builder::pythagorean(std::vector<std::pair<Rational, NodeId>>& terms, const Shape& shape) {
  auto factor_map = [&](NodeId r) {
    std::map<NodeId, Rational> m;
    for (auto& [b, e] : factors(r))
      if (dag_[b].op != Op::Ones) m[b] += e;
    std::erase_if(m, [](const auto& kv) { return kv.second.is_zero(); });
    return m;
  };
  auto rebuild = [&](const std::map<NodeId, Rational>& m) {
    std::vector<std::pair<NodeId, int>> items;
    for (auto& [b, e] : m) items.emplace_back(pow(b, e.abs()), e.sign());
    if (shape.is_vector()) items.emplace_back(ones(shape.rows), 1);
    return product(items);
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < terms.size() && !changed; ++i) {
      auto mi = factor_map(terms[i].second);
      for (auto& [b, e] : mi) {
        const Node& bn = dag_[b];
        if (bn.op != Op::Fn || e < Rational(2)) continue;
        FnKind partner_kind;
        Rational partner_coef;
        if (bn.fn == FnKind::Cosh) partner_kind = FnKind::Sinh, partner_coef = -terms[i].first;
        else if (bn.fn == FnKind::Sin) partner_kind = FnKind::Cos, partner_coef = terms[i].first;
        else continue;
        NodeId partner = fn(partner_kind, bn.kids[0]);
        auto rest = mi;
        rest[b] -= Rational(2);
        if (rest[b].is_zero()) rest.erase(b);
        auto want = rest;
        want[partner] += Rational(2);
        for (std::size_t j = 0; j < terms.size(); ++j) {
          if (j == i || terms[j].first != partner_coef || factor_map(terms[j].second) != want) continue;
          Rational c = terms[i].first;
          NodeId merged = rebuild(rest);
          terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
          terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
          auto [c2, r2] = split_coefficient(merged);
          terms.emplace_back(c * c2, r2);
          changed = true;
          break;
        }
        if (changed) break;
      }
    }
  }
  // merge terms that became alike
  std::map<NodeId, Rational> acc;
  for (auto& [c, r] : terms) acc[r] += c;
  terms.clear();
  for (auto& [r, c] : acc)
    if (!c.is_zero()) terms.emplace_back(c, r);
}

// Pulls out a shared monomial m when every term is c_k * m^{r_k} with integer
// r_k >= 1, e.g. e/w - e^2/w^2 -> (e/w) * (1 - e/w).
std::optional<NodeId> Builder::factor_common(const std::vector<std::pair<Rational, NodeId>>& terms) {
  std::vector<std::map<NodeId, Rational>> maps;
  for (auto& [c, rest] : terms) {
    const Node& n = dag_[rest];
    if (n.op == Op::Const || n.op == Op::Ones) return std::nullopt;
    std::map<NodeId, Rational> m;
    for (auto& [b, e] : factors(rest))
      if (dag_[b].op != Op::Ones) m[b] += e;
    std::erase_if(m, [](const auto& kv) { return kv.second.is_zero(); });
    maps.push_back(std::move(m));
  }
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& m = maps[k];
    if (m.size() < 2) continue;
    std::vector<Rational> ratio(maps.size());
    bool ok = true;
    for (std::size_t j = 0; j < maps.size() && ok; ++j) {
      if (maps[j].size() != m.size()) { ok = false; break; }
      std::optional<Rational> r;
      for (auto& [b, e] : m) {
        auto it = maps[j].find(b);
        if (it == maps[j].end()) { ok = false; break; }
        Rational q = it->second / e;
        if (r && *r != q) { ok = false; break; }
        r = q;
      }
      if (!ok) break;
      if (!r->is_integer() || r->sign() <= 0) ok = false;
      else ratio[j] = *r;
    }
    if (!ok) continue;
    NodeId mono = terms[k].second;
    std::vector<NodeId> inner;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      Rational r = ratio[j] - Rational(1);
      NodeId t = r.is_zero() ? filled(terms[j].first, dag_[mono].shape)
                             : scale(terms[j].first, pow(mono, r));
      inner.push_back(t);
    }
    return mul(mono, add(std::move(inner)));
  }
  return std::nullopt;
}

NodeId Builder::pow(NodeId base, const Rational& e) {
  const Node n = dag_[base];
  if (e.is_zero()) {
    if (n.shape.is_matrix()) throw ShapeError("zero power of a matrix");
    return filled(1, n.shape);
  }
  if (e == Rational(1)) return base;
  if (e.sign() < 0 && n.op != Op::Const && n.op != Op::Ones) return product({{pow(base, -e), -1}});
  switch (n.op) {
    case Op::Const:
      if (auto r = n.value.is_zero() && e.sign() < 0 ? std::nullopt : n.value.exact_pow(e)) return constant(*r);
      break;
    case Op::Ones:
      return base;
    case Op::Zero:
      if (e.sign() > 0) return base;
      break;
    case Op::Pow:
      if (dag_[n.kids[1]].op == Op::Const && (e.is_integer() || known_nonneg(n.kids[0]))) {
        NodeId inner = n.kids[0];
        return pow(inner, dag_[n.kids[1]].value * e);
      }
      break;
    case Op::Div:
      if (e.is_integer() || (known_nonneg(n.kids[0]) && known_nonneg(n.kids[1]))) {
        NodeId num = n.kids[0], den = n.kids[1];
        return product({{pow(num, e), 1}, {pow(den, e), -1}});
      }
      break;
    case Op::Mul: {
      std::vector<NodeId> kids = n.kids;
      if (e.is_integer()) {
        std::vector<NodeId> parts;
        for (NodeId k : kids) parts.push_back(pow(k, e));
        return mul(parts);
      }
      std::vector<NodeId> parts, rest;
      for (NodeId k : kids) {
        bool nonneg = dag_[k].op == Op::Const ? dag_[k].value.sign() > 0 : known_nonneg(k);
        (nonneg ? parts : rest).push_back(k);
      }
      if (parts.empty()) break;
      for (NodeId& p : parts) p = pow(p, e);
      if (!rest.empty()) {
        NodeId r = rest.size() == 1 ? rest[0] : mul(rest);
        parts.push_back(pow(r, e));
      }
      return mul(parts);
    }
    default:
      break;
  }
  Shape shape = n.shape;
  return make(Op::Pow, {base, constant(e)}, shape);
}

NodeId Builder::pow(NodeId base, NodeId exponent) {
  if (dag_[exponent].op == Op::Const) return pow(base, dag_[exponent].value);
  Shape shape = broadcast(dag_[base].shape, dag_[exponent].shape);
  if (dag_[base].op == Op::Const && dag_[base].value == Rational(1)) return filled(1, shape);
  return make(Op::Pow, {base, exponent}, shape);
}

NodeId Builder::matmul(NodeId a, NodeId b) {
  if (dag_[a].shape.is_scalar() || dag_[b].shape.is_scalar()) return mul(a, b);
  return matmul_chain({a, b});
}

namespace {
bool is_identity(const Dag& d, NodeId id) {
  const Node& n = d[id];
  return n.op == Op::Diag && d[n.kids[0]].op == Op::Ones;
}
bool plain_matrix(const Shape& s) { return s.is_matrix() && !s.is_row(); }
}  // namespace

NodeId Builder::matmul_chain(std::vector<NodeId> input) {
  if (input.empty()) throw std::logic_error("empty matrix product");
  Shape first = dag_[input.front()].shape;
  Shape last = dag_[input.back()].shape;
  if (dag_[input.front()].op == Op::MatMul) first = dag_[dag_[input.front()].kids.front()].shape;
  if (dag_[input.back()].op == Op::MatMul) last = dag_[dag_[input.back()].kids.back()].shape;
  std::string rows = first.rows;
  std::string cols = last.is_vector() ? "1" : last.cols;
  Shape shape;
  if (rows == "1" && cols == "1") shape = Shape::scalar();
  else if (last.is_vector()) shape = Shape::vector(rows);
  else shape = Shape::matrix(rows, cols);

  std::vector<NodeId> scalars;
  std::vector<NodeId> list;
  bool is_zero = false;
  std::function<void(NodeId)> push = [&](NodeId id) {
    const Node& n = dag_[id];
    if (n.shape.is_scalar()) { scalars.push_back(id); return; }
    if (n.op == Op::Zero) { is_zero = true; return; }
    if (n.op == Op::MatMul) {
      for (NodeId k : std::vector<NodeId>(n.kids)) push(k);
      return;
    }
    auto [s, t] = split_scalar(id);
    if (!is_const(s, 1)) scalars.push_back(s);
    list.push_back(t);
  };
  for (NodeId id : input) push(id);
  if (is_zero) return zero(shape);

  auto combine = [&](NodeId A, NodeId B) -> std::optional<std::vector<NodeId>> {
    const Node a = dag_[A];
    const Node b = dag_[B];
    if (is_identity(dag_, A)) return std::vector<NodeId>{B};
    if (is_identity(dag_, B)) return std::vector<NodeId>{A};
    if ((a.op == Op::Diag && b.op == Op::Add) || (a.op == Op::Add && b.op == Op::Diag)) {
      std::vector<NodeId> terms;
      for (NodeId t : (a.op == Op::Add ? a : b).kids)
        terms.push_back(a.op == Op::Add ? matmul(t, B) : matmul(A, t));
      return std::vector<NodeId>{add(terms)};
    }
    if (a.op == Op::Diag && b.op == Op::Outer) return std::vector<NodeId>{outer(mul(a.kids[0], b.kids[0]), b.kids[1])};
    if (a.op == Op::Outer && b.op == Op::Diag) return std::vector<NodeId>{outer(a.kids[0], mul(a.kids[1], b.kids[0]))};
    if (a.op == Op::Diag && b.op == Op::Diag) return std::vector<NodeId>{diag(mul(a.kids[0], b.kids[0]))};
    if (a.op == Op::Diag && b.shape.is_vector()) return std::vector<NodeId>{mul(a.kids[0], B)};
    if (a.shape.is_row() && b.shape.is_vector()) return std::vector<NodeId>{dot(transpose(A), B)};
    if (a.shape.is_vector() && b.shape.is_row()) return std::vector<NodeId>{outer(A, transpose(B))};
    if (a.op == Op::Outer && b.shape.is_vector()) return std::vector<NodeId>{dot(a.kids[1], B), a.kids[0]};
    if (a.op == Op::Outer && plain_matrix(b.shape))
      return std::vector<NodeId>{outer(a.kids[0], matmul(transpose(B), a.kids[1]))};
    if (plain_matrix(a.shape) && b.op == Op::Outer)
      return std::vector<NodeId>{outer(matmul(A, b.kids[0]), b.kids[1])};
    if (a.shape.is_row() && b.op == Op::Outer)
      return std::vector<NodeId>{dot(transpose(A), b.kids[0]), transpose(b.kids[1])};
    if (a.shape.is_row() && b.op == Op::Diag) return std::vector<NodeId>{transpose(mul(transpose(A), b.kids[0]))};
    return std::nullopt;
  };

  bool changed = true;
  while (changed && !is_zero) {
    changed = false;
    for (std::size_t i = 0; i + 1 < list.size(); ++i) {
      auto r = combine(list[i], list[i + 1]);
      if (!r) continue;
      std::vector<NodeId> head(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(i));
      std::vector<NodeId> tail(list.begin() + static_cast<std::ptrdiff_t>(i) + 2, list.end());
      list = head;
      for (NodeId x : *r) push(x);
      for (NodeId x : tail) list.push_back(x);
      changed = true;
      break;
    }
  }
  if (is_zero) return zero(shape);
  if (!list.empty()) {
    NodeId t = list.size() == 1 ? list[0] : make(Op::MatMul, list, shape);
    scalars.push_back(t);
  }
  if (scalars.empty()) return constant(1);
  return mul(scalars);
}

NodeId Builder::transpose(NodeId a) {
  const Node n = dag_[a];
  const Shape& s = n.shape;
  if (s.is_scalar()) return a;
  Shape t = s.is_vector() ? Shape::matrix("1", s.rows)
            : s.is_row()  ? Shape::vector(s.cols)
                          : Shape::matrix(s.cols, s.rows);
  if (n.op == Op::Zero) return zero(t);
  if (n.op == Op::Transpose) return n.kids[0];
  if (n.op == Op::Mul || n.op == Op::Div) {
    auto [sc, tens] = split_scalar(a);
    if (!is_const(sc, 1)) return mul(sc, transpose(tens));
  }
  if (s.is_vector()) return make(Op::Transpose, {a}, t);
  switch (n.op) {
    case Op::Add: {
      std::vector<NodeId> ts;
      for (NodeId k : n.kids) ts.push_back(transpose(k));
      return add(ts);
    }
    case Op::MatMul: {
      std::vector<NodeId> ts;
      for (auto it = n.kids.rbegin(); it != n.kids.rend(); ++it) ts.push_back(transpose(*it));
      return matmul_chain(ts);
    }
    case Op::Diag:
      return a;
    case Op::Outer:
      return outer(n.kids[1], n.kids[0]);
    case Op::Mul:
      if (!s.is_row()) {
        std::vector<NodeId> ts;
        for (NodeId k : n.kids) ts.push_back(transpose(k));
        return mul(ts);
      }
      break;
    default:
      break;
  }
  return make(Op::Transpose, {a}, t);
}

NodeId Builder::dot(NodeId u, NodeId v) {
  auto [su, tu] = split_scalar(u);
  auto [sv, tv] = split_scalar(v);
  if (dag_[tu].op == Op::Zero || dag_[tv].op == Op::Zero) return constant(0);
  NodeId core;
  if (dag_[tu].op == Op::Ones) core = sum(tv);
  else if (dag_[tv].op == Op::Ones) core = sum(tu);
  else core = make(Op::Dot, {std::min(tu, tv), std::max(tu, tv)}, Shape::scalar());
  return mul({su, sv, core});
}

NodeId Builder::outer(NodeId u, NodeId v) {
  auto [su, tu] = split_scalar(u);
  auto [sv, tv] = split_scalar(v);
  Shape shape = Shape::matrix(dag_[u].shape.rows, dag_[v].shape.rows);
  if (dag_[tu].op == Op::Zero || dag_[tv].op == Op::Zero) return zero(shape);
  return mul({su, sv, make(Op::Outer, {tu, tv}, shape)});
}

NodeId Builder::sum(NodeId v) {
  const Node n = dag_[v];
  if (n.shape.is_scalar()) return v;
  if (n.op == Op::Zero) return constant(0);
  auto [s, t] = split_scalar(v);
  return mul(s, make(Op::Sum, {t}, Shape::scalar()));
}

NodeId Builder::diag(NodeId v) {
  const Node n = dag_[v];
  if (!n.shape.is_vector()) throw ShapeError("diag of " + n.shape.str());
  Shape shape = Shape::matrix(n.shape.rows, n.shape.rows);
  if (n.op == Op::Zero) return zero(shape);
  auto [s, t] = split_scalar(v);
  return mul(s, make(Op::Diag, {t}, shape));
}

NodeId Builder::norm2(NodeId v) {
  const Node n = dag_[v];
  if (n.shape.is_scalar()) return fn(FnKind::Abs, v);
  if (n.op == Op::Zero) return constant(0);
  auto [c, rest] = split_coefficient(v);
  if (c != Rational(1)) return scale(c.abs(), norm2(rest));
  return make(Op::Norm2, {v}, Shape::scalar());
}

NodeId Builder::fn(FnKind kind, NodeId a) {
  const Node n = dag_[a];
  if (n.op == Op::Const) {
    const Rational& c = n.value;
    switch (kind) {
      case FnKind::Exp: if (c.is_zero()) return constant(1); break;
      case FnKind::Log: if (c == Rational(1)) return constant(0); break;
      case FnKind::Sqrt:
        if (c.sign() >= 0)
          if (auto r = c.exact_pow(Rational(1, 2))) return constant(*r);
        break;
      case FnKind::Sin:
      case FnKind::Tan:
      case FnKind::Sinh:
      case FnKind::Tanh:
      case FnKind::Arcsin:
      case FnKind::Arctan:
        if (c.is_zero()) return constant(0);
        break;
      case FnKind::Cos:
      case FnKind::Cosh:
        if (c.is_zero()) return constant(1);
        break;
      case FnKind::Arccos: if (c == Rational(1)) return constant(0); break;
      case FnKind::Abs: return constant(c.abs());
      case FnKind::Sign: return constant(c.sign());
    }
  }
  if (kind == FnKind::Log && n.op == Op::Fn && n.fn == FnKind::Exp) return n.kids[0];
  if (kind == FnKind::Exp && n.op == Op::Fn && n.fn == FnKind::Log) return n.kids[0];
  Node out;
  out.op = Op::Fn;
  out.fn = kind;
  out.kids = {a};
  out.shape = n.shape;
  return dag_.intern(std::move(out));
}

NodeId Builder::simplify(NodeId id) {
  if (auto it = simplify_memo_.find(id); it != simplify_memo_.end()) return it->second;
  const Node n = dag_[id];
  std::vector<NodeId> k;
  for (NodeId c : n.kids) k.push_back(simplify(c));
  NodeId r = id;
  switch (n.op) {
    case Op::Const:
    case Op::Ones:
    case Op::Zero:
    case Op::Symbol:
      break;
    case Op::Neg: r = neg(k[0]); break;
    case Op::Sub: r = sub(k[0], k[1]); break;
    case Op::Add: r = add(k); break;
    case Op::RawMul: r = matmul(k[0], k[1]); break;
    case Op::Div:
    case Op::EDiv: r = div(k[0], k[1]); break;
    case Op::EMul:
    case Op::Mul: r = mul(k); break;
    case Op::RawPow:
    case Op::EPow:
    case Op::Pow: r = pow(k[0], k[1]); break;
    case Op::VectorOf: r = mul(k[0], ones(n.shape.rows)); break;
    case Op::Transpose: r = transpose(k[0]); break;
    case Op::Fn: r = fn(n.fn, k[0]); break;
    case Op::Sum: r = sum(k[0]); break;
    case Op::Diag: r = diag(k[0]); break;
    case Op::Norm2: r = norm2(k[0]); break;
    case Op::MatMul: r = matmul_chain(k); break;
    case Op::Dot: r = dot(k[0], k[1]); break;
    case Op::Outer: r = outer(k[0], k[1]); break;
  }
  simplify_memo_[id] = r;
  return r;
}

}  // namespace convexcert
