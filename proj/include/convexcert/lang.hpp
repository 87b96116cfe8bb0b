#pragma once

// Lexer, parser and printer for the vectorized expression language and the
// assumption clause syntax.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "convexcert/interval.hpp"
#include "convexcert/ops.hpp"
#include "convexcert/rational.hpp"

namespace convexcert::lang {

enum class TokenKind { Number, Identifier, Operator, Paren, DotOperator, Transpose, Relation, Comma };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source, [begin, end)
  std::size_t end = 0;
};

struct LexError : std::runtime_error {
  LexError(std::size_t off, const std::string& what);
  std::size_t offset;
};

struct ParseError : std::runtime_error {
  ParseError(std::size_t pos, std::vector<std::string> expected, const std::string& found);
  std::size_t position;
  std::vector<std::string> expected;
};

std::vector<Token> tokenize(std::string_view source);

enum class AstKind { Number, Variable, Call, Neg, Transpose, Add, Sub, Mul, Div, Pow, EMul, EDiv, EPow };

std::string_view ast_kind_name(AstKind k);

struct Ast {
  AstKind kind = AstKind::Number;
  Rational value;           // Number
  std::string name;         // Variable
  CallKind call = CallKind::Exp;  // Call
  std::vector<Ast> children;
  std::size_t position = 0;  // source offset of the node's first token; ignored by ==

  static Ast number(Rational v);
  static Ast variable(std::string n);
  static Ast make_call(CallKind c, Ast arg);
  static Ast unary(AstKind k, Ast child);
  static Ast binary(AstKind k, Ast l, Ast r);

  bool is_leaf() const { return kind == AstKind::Number || kind == AstKind::Variable; }
  friend bool operator==(const Ast& a, const Ast& b);
};

Ast parse_expression(const std::vector<Token>& tokens);
/// tokenize + parse_expression.
Ast parse(std::string_view source);

/// Fully parenthesized canonical text. parse(render(a)) == a.
std::string render(const Ast& ast);

/// Every variable name occurring in the tree, in first-occurrence order.
std::vector<std::string> free_variables(const Ast& ast);

enum class Relation { Greater, GreaterEq, Less, LessEq };

/// One relational clause. The subject is usually a variable; a compound
/// subject (e.g. norm2(x) >= 1) restricts that subexpression.
struct Assumption {
  Ast subject;
  Relation relation = Relation::Greater;
  Rational bound;
  bool elementwise = true;

  bool on_variable() const { return subject.kind == AstKind::Variable; }
  Interval interval() const;
  std::string str() const;
};

std::vector<Assumption> parse_assumptions(std::string_view source);

}  // namespace convexcert::lang
