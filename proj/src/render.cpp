// DAG -> surface syntax with minimal parentheses.
//
// Precedence levels: 1 sums, 2 products, 3 leading minus, 4 powers,
// 5 transposes, 6 atoms. Product right operands and power exponents must be
// factors (level >= 4); transposes apply to atoms only.

#include <sstream>

#include "convexcert/dag.hpp"

namespace convexcert {
namespace {

struct Text {
  std::string s;
  int level;
};

class Renderer {
 public:
  explicit Renderer(const Dag& d) : d_(d) {}

  Text render(NodeId id) {
    const Node& n = d_[id];
    switch (n.op) {
      case Op::Const: return constant(n.value);
      case Op::Ones: return {"vector(1)", 6};
      case Op::Zero:
        if (n.shape.is_vector()) return {"vector(0)", 6};
        if (n.shape.is_square()) return {"diag(vector(0))", 6};
        return {"0", 6};
      case Op::Symbol: return {n.name, 6};
      case Op::Neg: return {"-" + at(n.kids[0], 4), 3};
      case Op::Sub: return binary(n, " - ", 1);
      case Op::Add: return sum(n);
      case Op::RawMul: return binary(n, "*", 2);
      case Op::Div:
        if (n.shape.is_vector() && d_[n.kids[0]].op == Op::Const)
          return {"vector(" + at(n.kids[0], 1) + ") ./ " + at(n.kids[1], 4), 2};
        return binary(n, d_[n.kids[1]].shape.is_scalar() ? "/" : " ./ ", 2);
      case Op::EMul: return binary(n, " .* ", 2);
      case Op::EDiv: return binary(n, " ./ ", 2);
      case Op::RawPow: return {at(n.kids[0], 5) + "^" + at(n.kids[1], 4), 4};
      case Op::EPow: return {at(n.kids[0], 5) + ".^" + at(n.kids[1], 4), 4};
      case Op::VectorOf: return {"vector(" + at(n.kids[0], 1) + ")", 6};
      case Op::Transpose: return {at(n.kids[0], 6) + "'", 5};
      case Op::Fn: return {std::string(fn_name(n.fn)) + "(" + at(n.kids[0], 1) + ")", 6};
      case Op::Sum: return {"sum(" + at(n.kids[0], 1) + ")", 6};
      case Op::Diag: return {"diag(" + at(n.kids[0], 1) + ")", 6};
      case Op::Norm2: return {"norm2(" + at(n.kids[0], 1) + ")", 6};
      case Op::Mul:
      case Op::Pow: return product(id, false);
      case Op::MatMul: {
        std::string s = at(n.kids[0], 2);
        for (std::size_t i = 1; i < n.kids.size(); ++i) s += "*" + at(n.kids[i], 4);
        return {s, 2};
      }
      case Op::Dot: return {at(n.kids[0], 6) + "'*" + at(n.kids[1], 4), 2};
      case Op::Outer: return {at(n.kids[0], 2) + "*" + at(n.kids[1], 6) + "'", 2};
    }
    return {"?", 6};
  }

 private:
  std::string at(NodeId id, int min_level) {
    Text t = render(id);
    return t.level >= min_level ? t.s : "(" + t.s + ")";
  }

  static Text constant(const Rational& v) {
    std::string body;
    Rational a = v.abs();
    int level = 6;
    if (auto dec = a.decimal()) {
      body = *dec;
    } else {
      body = std::to_string(a.num()) + "/" + std::to_string(a.den());
      level = 2;
    }
    if (v.sign() < 0) return {"-" + (level == 6 ? body : "(" + body + ")"), 3};
    return {body, level};
  }

  Text binary(const Node& n, const std::string& op, int level) {
    return {at(n.kids[0], level) + op + at(n.kids[1], level == 1 ? 2 : 4), level};
  }

  Text sum(const Node& n) {
    std::string s;
    for (std::size_t i = 0; i < n.kids.size(); ++i) {
      NodeId k = n.kids[i];
      bool negative = coefficient(k).sign() < 0;
      if (i == 0) {
        s = at(k, 1);
      } else if (negative) {
        s += " - " + negated(k);
      } else {
        s += " + " + at(k, 2);
      }
    }
    return {s, 1};
  }

  Rational coefficient(NodeId id) {
    const Node& n = d_[id];
    if (n.op == Op::Const) return n.value;
    if (n.op == Op::Mul && d_[n.kids[0]].op == Op::Const) return d_[n.kids[0]].value;
    return 1;
  }

  // Text of -id for a term with negative coefficient, at product level.
  std::string negated(NodeId id) {
    const Node& n = d_[id];
    if (n.op == Op::Const) {
      Text t = constant(-n.value);
      return t.level >= 2 ? t.s : "(" + t.s + ")";
    }
    Text t = product(id, true);
    return t.level >= 2 ? t.s : "(" + t.s + ")";
  }

  Text product(NodeId id, bool negate) {
    const Node& n = d_[id];
    Rational coef(1);
    std::vector<NodeId> fs;
    if (n.op == Op::Mul) {
      for (NodeId k : n.kids) {
        if (d_[k].op == Op::Const) coef *= d_[k].value;
        else fs.push_back(k);
      }
    } else {
      fs.push_back(id);
    }
    if (negate) coef = -coef;
    std::vector<std::pair<NodeId, Rational>> num, den;
    std::vector<NodeId> other;
    for (NodeId f : fs) {
      const Node& fn = d_[f];
      if (fn.op == Op::Pow && d_[fn.kids[1]].op == Op::Const) {
        Rational e = d_[fn.kids[1]].value;
        (e.sign() < 0 ? den : num).emplace_back(fn.kids[0], e.abs());
      } else if (fn.op == Op::Pow) {
        other.push_back(f);
      } else {
        num.emplace_back(f, Rational(1));
      }
    }
    auto power = [&](NodeId base, const Rational& e) -> Text {
      if (e == Rational(1)) return render(base);
      bool tensor = !d_[base].shape.is_scalar();
      Text ex = constant(e);
      std::string es = ex.level >= 4 ? ex.s : "(" + ex.s + ")";
      return {at(base, 5) + (tensor ? ".^" : "^") + es, 4};
    };
    // numerator
    std::string s;
    bool s_tensor = false;
    int level = 6;
    auto append = [&](const Text& t, bool tensor) {
      if (s.empty()) {
        s = t.level >= 2 ? t.s : "(" + t.s + ")";
        level = t.level >= 2 ? t.level : 6;
      } else {
        s += (tensor && s_tensor) ? " .* " : "*";
        s += t.level >= 4 ? t.s : "(" + t.s + ")";
        level = 2;
      }
      s_tensor = s_tensor || tensor;
    };
    Rational mag = coef.abs();
    bool unit = mag == Rational(1);
    if (!unit || (num.empty() && other.empty())) append(constant(mag), false);
    for (auto& [b, e] : num) append(power(b, e), !d_[b].shape.is_scalar());
    for (NodeId f : other) {
      const Node& fn = d_[f];
      bool tensor = !fn.shape.is_scalar();
      append({at(fn.kids[0], 5) + (tensor ? ".^" : "^") + at(fn.kids[1], 4), 4}, tensor);
    }
    if (!den.empty()) {
      std::string ds;
      bool d_tensor = false;
      for (std::size_t i = 0; i < den.size(); ++i) {
        Text t = power(den[i].first, den[i].second);
        bool tensor = !d_[den[i].first].shape.is_scalar();
        if (i > 0) ds += (tensor && d_tensor) ? " .* " : "*";
        bool bare = den.size() == 1 ? t.level >= 4 : t.level >= (i == 0 ? 2 : 4);
        ds += bare ? t.s : "(" + t.s + ")";
        d_tensor = d_tensor || tensor;
      }
      if (den.size() > 1) ds = "(" + ds + ")";
      s += (d_tensor ? " ./ " : "/") + ds;
      level = 2;
    }
    if (coef.sign() < 0) {
      if (level < 4) return {"-(" + s + ")", 3};
      return {"-" + s, 3};
    }
    return {s, level};
  }

  const Dag& d_;
};

}  // namespace

std::string render_node(const Dag& dag, NodeId id) { return Renderer(dag).render(id).s; }

}  // namespace convexcert
