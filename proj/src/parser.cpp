#include <algorithm>
#include <functional>

#include "convexcert/lang.hpp"

namespace convexcert::lang {

ParseError::ParseError(std::size_t pos, std::vector<std::string> exp, const std::string& found)
    : std::runtime_error([&] {
        std::string msg = "parse error at offset " + std::to_string(pos) + ": expected ";
        for (std::size_t i = 0; i < exp.size(); ++i) msg += (i ? " or " : "") + exp[i];
        return msg + ", found " + found;
      }()),
      position(pos),
      expected(std::move(exp)) {}

std::string_view ast_kind_name(AstKind k) {
  switch (k) {
    case AstKind::Number: return "number";
    case AstKind::Variable: return "variable";
    case AstKind::Call: return "call";
    case AstKind::Neg: return "neg";
    case AstKind::Transpose: return "transpose";
    case AstKind::Add: return "add";
    case AstKind::Sub: return "sub";
    case AstKind::Mul: return "mul";
    case AstKind::Div: return "div";
    case AstKind::Pow: return "pow";
    case AstKind::EMul: return "elem-mul";
    case AstKind::EDiv: return "elem-div";
    case AstKind::EPow: return "elem-pow";
  }
  return "?";
}

Ast Ast::number(Rational v) {
  Ast a;
  a.kind = AstKind::Number;
  a.value = v;
  return a;
}
Ast Ast::variable(std::string n) {
  Ast a;
  a.kind = AstKind::Variable;
  a.name = std::move(n);
  return a;
}
Ast Ast::make_call(CallKind c, Ast arg) {
  Ast a;
  a.kind = AstKind::Call;
  a.call = c;
  a.children.push_back(std::move(arg));
  return a;
}
Ast Ast::unary(AstKind k, Ast child) {
  Ast a;
  a.kind = k;
  a.children.push_back(std::move(child));
  return a;
}
Ast Ast::binary(AstKind k, Ast l, Ast r) {
  Ast a;
  a.kind = k;
  a.children.push_back(std::move(l));
  a.children.push_back(std::move(r));
  return a;
}

bool operator==(const Ast& a, const Ast& b) {
  if (a.kind != b.kind || a.children != b.children) return false;
  switch (a.kind) {
    case AstKind::Number: return a.value == b.value;
    case AstKind::Variable: return a.name == b.name;
    case AstKind::Call: return a.call == b.call;
    default: return true;
  }
}

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {}

  Ast expression() {
    std::size_t start = offset();
    Ast lhs = term();
    while (peek_op("+") || peek_op("-")) {
      AstKind k = next().text == "+" ? AstKind::Add : AstKind::Sub;
      Ast rhs = term();
      lhs = at(Ast::binary(k, std::move(lhs), std::move(rhs)), start);
    }
    return lhs;
  }

  bool done() const { return pos_ >= toks_.size(); }
  const Token* current() const { return done() ? nullptr : &toks_[pos_]; }
  std::size_t offset() const { return done() ? (toks_.empty() ? 0 : toks_.back().end) : toks_[pos_].begin; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw ParseError(offset(), std::move(expected), done() ? "end of input" : "'" + toks_[pos_].text + "'");
  }

 private:
  Ast term() {
    std::size_t start = offset();
    Ast lhs;
    if (peek_op("-")) {
      next();
      lhs = at(Ast::unary(AstKind::Neg, factor()), start);
    } else {
      lhs = factor();
    }
    for (;;) {
      AstKind k;
      if (peek_op("*")) k = AstKind::Mul;
      else if (peek_op("/")) k = AstKind::Div;
      else if (peek_dot(".*")) k = AstKind::EMul;
      else if (peek_dot("./")) k = AstKind::EDiv;
      else break;
      next();
      Ast rhs = factor();
      lhs = at(Ast::binary(k, std::move(lhs), std::move(rhs)), start);
    }
    return lhs;
  }

  Ast factor() {
    std::size_t start = offset();
    Ast base = atom();
    if (!done() && toks_[pos_].kind == TokenKind::Transpose) {
      next();
      base = at(Ast::unary(AstKind::Transpose, std::move(base)), start);
    }
    if (peek_op("^") || peek_dot(".^")) {
      AstKind k = next().text == "^" ? AstKind::Pow : AstKind::EPow;
      Ast exponent = factor();
      base = at(Ast::binary(k, std::move(base), std::move(exponent)), start);
    }
    return base;
  }

  Ast atom() {
    std::size_t start = offset();
    if (done()) fail({"number", "identifier", "'('"});
    const Token& t = toks_[pos_];
    if (t.kind == TokenKind::Number) {
      next();
      try {
        return at(Ast::number(Rational::from_decimal(t.text)), start);
      } catch (const std::exception&) {
        throw ParseError(start, {"representable number"}, "'" + t.text + "'");
      }
    }
    if (t.kind == TokenKind::Identifier) {
      next();
      if (!done() && toks_[pos_].kind == TokenKind::Paren && toks_[pos_].text == "(") {
        auto call = call_from_name(t.text);
        if (!call) throw ParseError(start, {"supported function name"}, "'" + t.text + "'");
        next();
        Ast arg = expression();
        expect(")");
        return at(Ast::make_call(*call, std::move(arg)), start);
      }
      if (call_from_name(t.text)) fail({"'('"});
      return at(Ast::variable(t.text), start);
    }
    if (t.kind == TokenKind::Paren && t.text == "(") {
      next();
      Ast inner = expression();
      expect(")");
      return inner;
    }
    fail({"number", "identifier", "'('"});
  }

  void expect(const char* text) {
    if (done() || toks_[pos_].text != text) fail({std::string("'") + text + "'"});
    ++pos_;
  }
  bool peek_op(const char* op) const {
    return !done() && toks_[pos_].kind == TokenKind::Operator && toks_[pos_].text == op;
  }
  bool peek_dot(const char* op) const {
    return !done() && toks_[pos_].kind == TokenKind::DotOperator && toks_[pos_].text == op;
  }
  const Token& next() { return toks_[pos_++]; }
  static Ast at(Ast a, std::size_t p) {
    a.position = p;
    return a;
  }

  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
};

// Folds a constant clause bound exactly.
Rational fold_constant(const Ast& a) {
  auto kid = [&](int i) { return fold_constant(a.children[static_cast<std::size_t>(i)]); };
  switch (a.kind) {
    case AstKind::Number: return a.value;
    case AstKind::Neg: return -kid(0);
    case AstKind::Add: return kid(0) + kid(1);
    case AstKind::Sub: return kid(0) - kid(1);
    case AstKind::Mul:
    case AstKind::EMul: return kid(0) * kid(1);
    case AstKind::Div:
    case AstKind::EDiv: {
      Rational d = kid(1);
      if (d.is_zero()) throw ParseError(a.position, {"nonzero divisor"}, "0");
      return kid(0) / d;
    }
    case AstKind::Pow:
    case AstKind::EPow: {
      auto r = kid(0).exact_pow(kid(1));
      if (!r) throw ParseError(a.position, {"rational constant bound"}, render(a));
      return *r;
    }
    default:
      throw ParseError(a.position, {"constant bound"}, render(a));
  }
}

}  // namespace

Ast parse_expression(const std::vector<Token>& tokens) {
  Parser p(tokens);
  Ast a = p.expression();
  if (!p.done()) p.fail({"operator", "end of input"});
  return a;
}

Ast parse(std::string_view source) { return parse_expression(tokenize(source)); }

std::string render(const Ast& a) {
  auto kid = [&](std::size_t i) { return render(a.children[i]); };
  switch (a.kind) {
    case AstKind::Number: {
      auto d = a.value.decimal();
      std::string s = d ? *d : "(" + a.value.str() + ")";
      return a.value.sign() < 0 ? "(" + s + ")" : s;
    }
    case AstKind::Variable: return a.name;
    case AstKind::Call: return std::string(call_name(a.call)) + "(" + kid(0) + ")";
    case AstKind::Neg: return "(-" + kid(0) + ")";
    case AstKind::Transpose: return "(" + kid(0) + ")'";
    default: break;
  }
  std::string_view op;
  switch (a.kind) {
    case AstKind::Add: op = " + "; break;
    case AstKind::Sub: op = " - "; break;
    case AstKind::Mul: op = " * "; break;
    case AstKind::Div: op = " / "; break;
    case AstKind::Pow: op = " ^ "; break;
    case AstKind::EMul: op = " .* "; break;
    case AstKind::EDiv: op = " ./ "; break;
    case AstKind::EPow: op = " .^ "; break;
    default: break;
  }
  return "(" + kid(0) + std::string(op) + kid(1) + ")";
}

std::vector<std::string> free_variables(const Ast& ast) {
  std::vector<std::string> out;
  std::function<void(const Ast&)> walk = [&](const Ast& a) {
    if (a.kind == AstKind::Variable && std::find(out.begin(), out.end(), a.name) == out.end())
      out.push_back(a.name);
    for (const auto& c : a.children) walk(c);
  };
  walk(ast);
  return out;
}

Interval Assumption::interval() const {
  // An inexact bound widens outward, in which case the endpoint is closed.
  Interval exact = Interval::point(bound);
  bool strict_ok = exact.is_point();
  switch (relation) {
    case Relation::Greater: return {exact.lo, Interval::kInf, strict_ok, true};
    case Relation::GreaterEq: return {exact.lo, Interval::kInf, false, true};
    case Relation::Less: return {-Interval::kInf, exact.hi, true, strict_ok};
    case Relation::LessEq: return {-Interval::kInf, exact.hi, true, false};
  }
  return {};
}

std::string Assumption::str() const {
  const char* rel = relation == Relation::Greater ? ">" : relation == Relation::GreaterEq ? ">=" :
                    relation == Relation::Less ? "<" : "<=";
  auto d = bound.decimal();
  return render(subject) + rel + (d ? *d : bound.str());
}

std::vector<Assumption> parse_assumptions(std::string_view source) {
  std::vector<Token> toks = tokenize(source);
  std::vector<Assumption> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t j = i;
    while (j < toks.size() && toks[j].kind != TokenKind::Comma) ++j;
    std::size_t rel = i;
    while (rel < j && toks[rel].kind != TokenKind::Relation) ++rel;
    std::size_t clause_start = toks[i].begin;
    if (rel == j || rel == i || rel + 1 == j) {
      std::size_t at_pos = rel < j ? toks[rel].begin : (j < toks.size() ? toks[j].begin : toks[j - 1].end);
      throw ParseError(rel == i ? clause_start : at_pos, {"clause of the form <expr> <relation> <bound>"},
                       rel == j ? "clause without relation" : "incomplete clause");
    }
    Assumption a;
    a.subject = parse_expression(std::vector<Token>(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(rel)));
    const std::string& r = toks[rel].text;
    a.relation = r == ">" ? Relation::Greater : r == ">=" ? Relation::GreaterEq : r == "<" ? Relation::Less : Relation::LessEq;
    Ast bound = parse_expression(std::vector<Token>(toks.begin() + static_cast<long>(rel) + 1, toks.begin() + static_cast<long>(j)));
    a.bound = fold_constant(bound);
    out.push_back(std::move(a));
    i = j + 1;
    if (j + 1 == toks.size() && j < toks.size()) throw ParseError(toks[j].end, {"clause"}, "end of input");
  }
  return out;
}

}  // namespace convexcert::lang
