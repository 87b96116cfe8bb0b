#include "convexcert/templates.hpp"

#include <algorithm>
#include <functional>
#include <tuple>
#include <unordered_map>

namespace convexcert {

std::string_view template_name(TemplateId id) {
  switch (id) {
    case TemplateId::Sandwich: return "sandwich";
    case TemplateId::Variance: return "variance";
    case TemplateId::GeneralizedVariance: return "generalized-variance";
  }
  return "?";
}

namespace {

bool square(const Shape& s) { return s.is_matrix() && s.is_square(); }

void expand(Builder& b, NodeId v, NodeId scale, std::vector<ScaledTerm>& out) {
  const Node n = b.dag()[v];
  if (n.op == Op::Zero) return;
  if (n.op == Op::Add) {
    for (NodeId k : n.kids) expand(b, k, scale, out);
    return;
  }
  auto [s, t] = b.split_scalar(v);
  NodeId sc = b.is_const(s, 1) ? scale : b.mul(scale, s);
  const Node tn = b.dag()[t];
  if (t != v && tn.op == Op::Add) {
    expand(b, t, sc, out);
    return;
  }
  if (tn.op == Op::Diag && b.dag()[tn.kids[0]].op == Op::Add) {
    for (NodeId w : std::vector<NodeId>(b.dag()[tn.kids[0]].kids)) {
      auto [sw, tw] = b.split_scalar(w);
      out.push_back({b.mul(sc, sw), b.diag(tw)});
    }
    return;
  }
  out.push_back({sc, t});
}

std::size_t depth(const Dag& d, NodeId id, std::unordered_map<NodeId, std::size_t>& memo) {
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  std::size_t h = 0;
  for (NodeId k : d[id].kids) h = std::max(h, depth(d, k, memo));
  return memo[id] = h + 1;
}

// w with n == sum(w) for the sum-like atoms sum(w), norm2(w)^2 and w'*w.
std::optional<NodeId> sum_atom(Builder& b, NodeId id) {
  const Node n = b.dag()[id];
  if (n.op == Op::Sum) return n.kids[0];
  if (n.op == Op::Dot && n.kids[0] == n.kids[1]) return b.mul(n.kids[0], n.kids[0]);
  if (n.op == Op::Pow && b.is_const(n.kids[1], 2) && b.dag()[n.kids[0]].op == Op::Norm2) {
    NodeId w = b.dag()[n.kids[0]].kids[0];
    return b.mul(w, w);
  }
  return std::nullopt;
}

struct Split {
  NodeId a, shift, z;
};

// Ways of writing e as a*(shift + sum(z)).
std::vector<Split> decompose(Builder& b, NodeId e, int budget) {
  std::vector<Split> out;
  if (budget <= 0) return out;
  if (auto z = sum_atom(b, e)) {
    out.push_back({b.constant(1), b.constant(0), *z});
    return out;
  }
  const Node n = b.dag()[e];
  if (n.op == Op::Add) {
    for (NodeId t : std::vector<NodeId>(n.kids)) {
      auto [k, r] = b.split_coefficient(t);
      if (k.sign() <= 0) continue;
      if (auto z = sum_atom(b, r)) out.push_back({b.constant(k), b.scale(k.reciprocal(), b.sub(e, t)), *z});
    }
    return out;
  }
  if (n.op == Op::Mul || n.op == Op::Div || n.op == Op::Pow) {
    for (auto& [base, ex] : b.factors(e)) {
      const Node bn = b.dag()[base];
      if (ex == Rational(1) && (bn.op == Op::Add || bn.op == Op::Sum || bn.op == Op::Dot)) {
        NodeId rest = b.div(e, base);
        for (const Split& s : decompose(b, base, budget - 1)) out.push_back({b.mul(rest, s.a), s.shift, s.z});
      } else if (ex == Rational(2) && bn.op == Op::Norm2) {
        NodeId rest = b.div(e, b.pow(base, Rational(2)));
        NodeId w = bn.kids[0];
        out.push_back({rest, b.constant(0), b.mul(w, w)});
      }
    }
  }
  return out;
}

bool is_zero_node(const Builder& b, const Dag& d, NodeId id) {
  return d[id].op == Op::Zero || b.is_const(id, 0);
}

struct CancelAll {
  Builder& b;
  explicit CancelAll(Builder& b) : b(b) { b.set_cancel_all(true); }
  ~CancelAll() { b.set_cancel_all(false); }
};

}  // namespace

std::vector<ScaledTerm> expand_terms(Builder& b, NodeId v) {
  std::vector<ScaledTerm> out;
  expand(b, v, b.constant(1), out);
  return out;
}

std::optional<TemplateMatch> match_sandwich(Builder& b, NodeId v, const IntervalFn& iv) {
  if (!square(b.dag()[v].shape)) return std::nullopt;
  auto [s, t] = b.split_scalar(v);
  bool negated = false;
  if (!b.is_const(s, 1)) {
    Interval is = iv(s);
    if (is.is_nonpos() && !is.is_nonneg()) negated = true;
    else if (!is.is_nonneg()) return std::nullopt;
  }
  TemplateMatch m;
  m.id = TemplateId::Sandwich;
  m.matched = v;
  if (!b.is_const(s, 1)) m.prefactor = s;
  const Node n = b.dag()[t];
  switch (n.op) {
    case Op::Outer:
      if (n.kids[0] != n.kids[1]) return std::nullopt;
      m.bindings["u"] = n.kids[0];
      break;
    case Op::Diag: {
      Interval w = iv(n.kids[0]);
      if (w.is_nonpos() && !w.is_nonneg()) negated = !negated;
      else if (!w.is_nonneg()) return std::nullopt;
      m.bindings["w"] = n.kids[0];
      break;
    }
    case Op::MatMul: {
      const auto& k = n.kids;
      const std::size_t len = k.size();
      for (std::size_t i = 0; i < len / 2; ++i)
        if (k[len - 1 - i] != b.transpose(k[i])) return std::nullopt;
      NodeId a = k[0];
      for (std::size_t i = 1; i < len / 2; ++i) a = b.matmul(a, k[i]);
      m.bindings["A"] = a;
      if (len % 2 == 1) {
        NodeId mid = k[len / 2];
        Interval im = iv(mid);
        if (im.is_nonpos() && !im.is_nonneg()) negated = !negated;
        else if (!im.is_nonneg()) return std::nullopt;
        m.bindings["M"] = mid;
      }
      break;
    }
    default:
      return std::nullopt;
  }
  m.negated = negated;
  return m;
}

std::optional<TemplateMatch> match_variance_pair(Builder& b, NodeId s_d, NodeId d, NodeId beta, NodeId u,
                                                 const IntervalFn& iv) {
  if (!iv(s_d).is_nonneg() || !iv(beta).is_nonneg()) return std::nullopt;
  NodeId e = b.div(s_d, beta);
  std::vector<Split> splits = decompose(b, e, 3);
  std::unordered_map<NodeId, std::size_t> memo;
  std::stable_sort(splits.begin(), splits.end(), [&](const Split& x, const Split& y) {
    return depth(b.dag(), x.z, memo) < depth(b.dag(), y.z, memo);
  });
  for (const Split& s : splits) {
    Interval iz = iv(s.z);
    if (!iz.is_nonneg()) continue;
    Interval ia = iv(s.a);
    if (!(ia.lo >= 1.0)) continue;
    if (!iv(s.shift).is_nonneg()) continue;
    NodeId y, residual;
    {
      CancelAll guard(b);
      y = b.div(u, s.z);
      residual = b.sub(b.mul(d, s.z), b.mul(u, u));
    }
    std::optional<NodeId> res;
    if (!is_zero_node(b, b.dag(), residual)) {
      if (!iz.is_positive() || !iv(residual).is_nonneg()) continue;
      CancelAll guard(b);
      res = b.div(residual, s.z);
    }
    TemplateMatch m;
    bool plain = b.is_const(s.a, 1) && b.is_const(s.shift, 0);
    m.id = plain ? TemplateId::Variance : TemplateId::GeneralizedVariance;
    m.bindings["y"] = y;
    m.bindings["z"] = s.z;
    m.bindings["a"] = s.a;
    m.bindings["b"] = s.shift;
    if (!b.is_const(s_d, 1)) m.prefactor = s_d;
    m.residual = res;
    m.matched = b.sub(b.mul(s_d, b.diag(d)), b.mul(beta, b.outer(u, u)));
    return m;
  }
  return std::nullopt;
}

std::optional<TemplateMatch> match_generalized_template(Builder& b, NodeId v, const IntervalFn& iv) {
  if (!square(b.dag()[v].shape)) return std::nullopt;
  std::vector<ScaledTerm> diags, outers;
  for (const ScaledTerm& t : expand_terms(b, v)) {
    const Node n = b.dag()[t.tensor];
    if (n.op == Op::Diag) diags.push_back(t);
    else if (n.op == Op::Outer && n.kids[0] == n.kids[1]) outers.push_back(t);
    else return std::nullopt;
  }
  if (outers.size() != 1 || diags.empty()) return std::nullopt;
  NodeId s_d, d;
  if (diags.size() == 1) {
    s_d = diags[0].scale;
    d = b.dag()[diags[0].tensor].kids[0];
  } else {
    std::vector<NodeId> parts;
    for (const ScaledTerm& t : diags) parts.push_back(b.mul(t.scale, b.dag()[t.tensor].kids[0]));
    s_d = b.constant(1);
    d = b.add(parts);
  }
  NodeId s_o = outers[0].scale;
  NodeId u = b.dag()[outers[0].tensor].kids[0];
  if (auto m = match_variance_pair(b, s_d, d, b.neg(s_o), u, iv)) {
    m->matched = v;
    return m;
  }
  if (auto m = match_variance_pair(b, b.neg(s_d), d, s_o, u, iv)) {
    m->prefactor = b.neg(m->prefactor ? *m->prefactor : b.constant(1));
    m->negated = true;
    m->matched = v;
    return m;
  }
  return std::nullopt;
}

std::optional<TemplateMatch> match_variance_template(Builder& b, NodeId v, const IntervalFn& iv) {
  auto m = match_generalized_template(b, v, iv);
  if (m && m->id == TemplateId::Variance) return m;
  return std::nullopt;
}

std::optional<TemplateMatch> match_template(Builder& b, NodeId v, const IntervalFn& iv) {
  if (!square(b.dag()[v].shape)) return std::nullopt;
  if (auto m = match_sandwich(b, v, iv)) return m;
  return match_generalized_template(b, v, iv);
}

NodeId instantiate(Builder& b, const TemplateMatch& m) {
  auto get = [&](const std::string& k) { return m.bindings.at(k); };
  NodeId body;
  if (m.id == TemplateId::Sandwich) {
    if (m.bindings.count("u")) {
      body = b.outer(get("u"), get("u"));
    } else if (m.bindings.count("w")) {
      body = b.diag(get("w"));
    } else {
      NodeId a = get("A");
      NodeId left = m.bindings.count("M") ? b.matmul(a, get("M")) : a;
      body = b.matmul(left, b.transpose(a));
    }
  } else {
    NodeId y = get("y"), z = get("z");
    NodeId yz = b.mul(y, z);
    NodeId den = b.mul(get("a"), b.add(get("b"), b.sum(z)));
    body = b.sub(b.diag(b.mul(yz, y)), b.div(b.outer(yz, yz), den));
    if (m.residual) body = b.add(body, b.diag(*m.residual));
  }
  return m.prefactor ? b.mul(*m.prefactor, body) : body;
}

}  // namespace convexcert
